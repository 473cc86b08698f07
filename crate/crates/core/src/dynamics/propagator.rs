//! Time propagators for the momentum-ladder equations.
//!
//! Everything here works in recoil units: time in 1/ω_r, frequencies in ω_r.
//! The ladder amplitudes c_m obey
//!
//! ```text
//! i dc_m/dt = [4m² − m w(t)] c_m + (Ω(t)/2) (c_{m−1} + c_{m+1})
//! ```
//!
//! with w(t) the beam frequency difference and Ω(t) the enveloped two-photon
//! coupling.

use std::sync::Arc;

use num_complex::Complex64;

use super::ladder::StepControl;
use super::pulse::Envelope;
use crate::error::{Error, Result};
use crate::registry::Registry;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Dimensionless ladder Hamiltonian for one pulse.
#[derive(Debug, Clone)]
pub struct LadderSystem {
    pub m_min: i32,
    pub states: usize,
    /// Peak coupling Ω₂/ω_r.
    pub rabi: f64,
    pub envelope: Arc<dyn Envelope>,
    pub pulse_start: f64,
    pub pulse_duration: f64,
    /// w(t) = frequency_start + frequency_slope · t.
    pub frequency_start: f64,
    pub frequency_slope: f64,
}

impl LadderSystem {
    pub fn momentum_index(&self, i: usize) -> f64 {
        (self.m_min + i as i32) as f64
    }

    pub fn diagonal(&self, i: usize, t: f64) -> f64 {
        let m = self.momentum_index(i);
        4.0 * m * m - m * (self.frequency_start + self.frequency_slope * t)
    }

    /// ∫ diagonal(i, t) dt over [t0, t1].
    pub fn diagonal_integral(&self, i: usize, t0: f64, t1: f64) -> f64 {
        let m = self.momentum_index(i);
        let h = t1 - t0;
        4.0 * m * m * h
            - m * (self.frequency_start * h + 0.5 * self.frequency_slope * (t1 * t1 - t0 * t0))
    }

    /// Nearest-neighbour coupling Ω(t)/2.
    pub fn half_coupling(&self, t: f64) -> f64 {
        0.5 * self.rabi
            * self
                .envelope
                .shape(t - self.pulse_start, self.pulse_duration)
    }

    /// dc/dt at time `t`.
    pub fn derivative(&self, t: f64, c: &[Complex64], out: &mut [Complex64]) {
        let k = self.half_coupling(t);
        let n = c.len();
        for i in 0..n {
            let mut h = c[i] * self.diagonal(i, t);
            if i > 0 {
                h += c[i - 1] * k;
            }
            if i + 1 < n {
                h += c[i + 1] * k;
            }
            out[i] = -I * h;
        }
    }

    /// Rough upper bound of the Hamiltonian's spectral radius at `t`.
    pub fn frequency_scale(&self, t: f64) -> f64 {
        let d = (0..self.states)
            .map(|i| self.diagonal(i, t).abs())
            .fold(0.0, f64::max);
        d + 2.0 * self.half_coupling(t).abs()
    }
}

/// Advances ladder amplitudes in time.
pub trait LadderPropagator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Evolves `c` from `t0` to `t1` (recoil units), returning the number of
    /// accepted steps.
    fn advance(
        &self,
        system: &LadderSystem,
        c: &mut [Complex64],
        t0: f64,
        t1: f64,
        control: &StepControl,
    ) -> Result<usize>;
}

/// Registered propagators.
pub fn propagators() -> Registry<Arc<dyn LadderPropagator>> {
    let mut r: Registry<Arc<dyn LadderPropagator>> = Registry::new("propagator");
    r.register(DormandPrince.name(), Arc::new(DormandPrince));
    r.register(SplitStep.name(), Arc::new(SplitStep));
    r
}

/// Embedded 5(4) Dormand-Prince Runge-Kutta with adaptive steps.
#[derive(Debug, Clone, Copy, Default)]
pub struct DormandPrince;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth minus fourth order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl LadderPropagator for DormandPrince {
    fn name(&self) -> &'static str {
        "dopri5"
    }

    fn advance(
        &self,
        system: &LadderSystem,
        c: &mut [Complex64],
        t0: f64,
        t1: f64,
        control: &StepControl,
    ) -> Result<usize> {
        let n = c.len();
        if t1 <= t0 {
            return Ok(0);
        }
        let tol = control.tolerance;
        let mut k = vec![vec![Complex64::default(); n]; 7];
        let mut tmp = vec![Complex64::default(); n];
        let mut y_new = vec![Complex64::default(); n];

        let mut t = t0;
        let scale = system.frequency_scale(t0).max(1.0);
        let mut h = (0.01 / scale).min(control.max_step).min(t1 - t0);
        let min_step = 1e-14 * (t1 - t0).max(1.0);
        let mut steps = 0usize;
        let mut attempts = 0usize;

        while t < t1 {
            if attempts >= control.max_steps {
                return Err(Error::Integration {
                    time: t,
                    steps,
                    reason: format!("exceeded {} step attempts", control.max_steps),
                });
            }
            attempts += 1;
            let last = t + h >= t1;
            if last {
                h = t1 - t;
            }

            system.derivative(t, c, &mut k[0]);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = c[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * (h * a);
                        }
                    }
                    tmp[i] = acc;
                }
                system.derivative(t + C[s] * h, &tmp, &mut k[s]);
                if s == 6 {
                    y_new.copy_from_slice(&tmp);
                }
            }

            let mut err = 0.0f64;
            for i in 0..n {
                let mut e = Complex64::default();
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += kj[i] * E[j];
                    }
                }
                let sc = tol * (1.0 + c[i].norm().max(y_new[i].norm()));
                err = err.max((e * h).norm() / sc);
            }
            if !err.is_finite() {
                return Err(Error::Integration {
                    time: t,
                    steps,
                    reason: "non-finite error estimate".into(),
                });
            }

            if err <= 1.0 {
                c.copy_from_slice(&y_new);
                t = if last { t1 } else { t + h };
                steps += 1;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(control.max_step);
            if h < min_step && t < t1 {
                return Err(Error::Integration {
                    time: t,
                    steps,
                    reason: format!("step size {h:.3e} underflowed (error ratio {err:.3e})"),
                });
            }
        }
        Ok(steps)
    }
}

/// Second-order Strang splitting into the diagonal kinetic part and
/// nearest-neighbour pair rotations. Each factor is exactly unitary.
#[derive(Debug, Clone, Copy, Default)]
pub struct SplitStep;

fn rotate_pairs(c: &mut [Complex64], start: usize, angle: f64) {
    let (s, co) = angle.sin_cos();
    let mut i = start;
    while i + 1 < c.len() {
        let a = c[i];
        let b = c[i + 1];
        c[i] = a * co - I * b * s;
        c[i + 1] = b * co - I * a * s;
        i += 2;
    }
}

impl LadderPropagator for SplitStep {
    fn name(&self) -> &'static str {
        "split-step"
    }

    fn advance(
        &self,
        system: &LadderSystem,
        c: &mut [Complex64],
        t0: f64,
        t1: f64,
        control: &StepControl,
    ) -> Result<usize> {
        if t1 <= t0 {
            return Ok(0);
        }
        let span = t1 - t0;
        let steps = (span / control.fixed_step).ceil().max(1.0) as usize;
        if steps > control.max_steps {
            return Err(Error::Integration {
                time: t0,
                steps: 0,
                reason: format!(
                    "fixed step {} needs {steps} steps, above the cap {}",
                    control.fixed_step, control.max_steps
                ),
            });
        }
        let h = span / steps as f64;
        let apply_diagonal = |c: &mut [Complex64], a: f64, b: f64| {
            for (i, ci) in c.iter_mut().enumerate() {
                let phase = system.diagonal_integral(i, a, b);
                *ci *= Complex64::from_polar(1.0, -phase);
            }
        };
        for step in 0..steps {
            let ta = t0 + step as f64 * h;
            let tm = ta + 0.5 * h;
            let tb = if step + 1 == steps { t1 } else { ta + h };
            apply_diagonal(c, ta, tm);
            let k = system.half_coupling(tm);
            rotate_pairs(c, 1, 0.5 * k * h);
            rotate_pairs(c, 0, k * h);
            rotate_pairs(c, 1, 0.5 * k * h);
            apply_diagonal(c, tm, tb);
        }
        Ok(steps)
    }
}
