//! Numerical momentum-ladder integration of a Bragg pulse.
//!
//! The excited state is adiabatically eliminated, leaving ground-state
//! momentum rungs |2mħk⟩ coupled to their neighbours by Ω₂/2. The frame
//! co-moves with a lattice that is resonant for an atom at rest, so a falling
//! atom is represented only through the beam frequency-difference ramp.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::propagator::{LadderPropagator, LadderSystem};
use super::pulse::BraggPulse;
use crate::atoms::{recoil_frequency, AtomSpecies};
use crate::error::{Error, Result};
use crate::numeric::golden_section_min;

/// Populations at the ladder ends must stay below this for a result to stand.
pub const EDGE_THRESHOLD: f64 = 1e-6;

/// Linear beam frequency-difference profile ω_eff(t) = start + slope·t, with
/// `t` measured from release.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRamp {
    /// [rad/s]
    pub start: f64,
    /// [rad/s²]
    pub slope: f64,
}

impl FrequencyRamp {
    pub fn constant(frequency: f64) -> Self {
        Self {
            start: frequency,
            slope: 0.0,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.start + self.slope * t
    }
}

/// Integration settings. Step sizes are in units of 1/ω_r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Local error tolerance of adaptive propagators.
    pub tolerance: f64,
    /// Upper bound on adaptive steps.
    pub max_step: f64,
    /// Step of fixed-step propagators.
    pub fixed_step: f64,
    /// Cap on step attempts per sampling interval.
    pub max_steps: usize,
    /// Number of trajectory samples across the pulse, endpoints included.
    pub samples: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            tolerance: 1e-13,
            max_step: 0.5,
            fixed_step: 1e-3,
            max_steps: 50_000_000,
            samples: 201,
        }
    }
}

/// How the ladder truncation reacts to population reaching its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LadderBounds {
    /// Keep the given rungs regardless of edge population.
    Fixed,
    /// Add two rungs on each side and rerun until the edges stay empty.
    Auto { max_states: usize },
}

impl Default for LadderBounds {
    fn default() -> Self {
        LadderBounds::Auto { max_states: 101 }
    }
}

/// Amplitudes c_m of |g, 2mħk⟩ for m = m_min..m_min+len−1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderState {
    pub m_min: i32,
    pub amplitudes: Vec<Complex64>,
    /// [s]
    pub time: f64,
}

impl LadderState {
    pub fn new(m_min: i32, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::validation(
                "amplitudes",
                "ladder needs at least one rung",
            ));
        }
        Ok(Self {
            m_min,
            amplitudes,
            time,
        })
    }

    /// All population in m = 0 on the rungs `m_min..=m_max`.
    pub fn at_rest(m_min: i32, m_max: i32) -> Result<Self> {
        if !(m_min <= 0 && 0 <= m_max) {
            return Err(Error::validation(
                "ladder bounds",
                format!("{m_min}..={m_max} does not contain m = 0"),
            ));
        }
        let mut amplitudes = vec![Complex64::default(); (m_max - m_min + 1) as usize];
        amplitudes[(-m_min) as usize] = Complex64::new(1.0, 0.0);
        Self::new(m_min, amplitudes, 0.0)
    }

    pub fn m_max(&self) -> i32 {
        self.m_min + self.amplitudes.len() as i32 - 1
    }

    pub fn amplitude(&self, m: i32) -> Complex64 {
        if m < self.m_min || m > self.m_max() {
            Complex64::default()
        } else {
            self.amplitudes[(m - self.m_min) as usize]
        }
    }

    pub fn population(&self, m: i32) -> f64 {
        self.amplitude(m).norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn edge_population(&self) -> f64 {
        let first = self.amplitudes[0].norm_sqr();
        let last = self.amplitudes[self.amplitudes.len() - 1].norm_sqr();
        first.max(last)
    }

    fn padded(&self, extra: usize) -> Self {
        let zeros = vec![Complex64::default(); extra];
        let amplitudes = zeros
            .iter()
            .chain(self.amplitudes.iter())
            .chain(zeros.iter())
            .copied()
            .collect();
        Self {
            m_min: self.m_min - extra as i32,
            amplitudes,
            time: self.time,
        }
    }
}

/// Sampled evolution across one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<LadderState>,
    pub propagator: String,
    /// Accepted integration steps.
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &LadderState {
        self.samples.last().expect("trajectory has samples")
    }

    /// (time [s], population) pairs for rung `m`.
    pub fn populations(&self, m: i32) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .map(|s| (s.time, s.population(m)))
            .collect()
    }

    pub fn max_norm_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_edge_population(&self) -> f64 {
        self.samples
            .iter()
            .map(LadderState::edge_population)
            .fold(0.0, f64::max)
    }

    /// Writes `t,m,re,im,abs2` rows, one per rung per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,m,re,im,abs2")?;
        for s in &self.samples {
            for (i, c) in s.amplitudes.iter().enumerate() {
                writeln!(
                    out,
                    "{:e},{},{:e},{:e},{:e}",
                    s.time,
                    s.m_min + i as i32,
                    c.re,
                    c.im,
                    c.norm_sqr()
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Integrates the ladder across `pulse`, starting at `initial.time`.
///
/// With [`LadderBounds::Auto`] the ladder is widened and the pulse rerun
/// whenever an end rung picks up more than [`EDGE_THRESHOLD`] population.
pub fn ladder_evolve(
    initial: &LadderState,
    pulse: &BraggPulse,
    ramp: &FrequencyRamp,
    species: &AtomSpecies,
    propagator: &dyn LadderPropagator,
    control: &StepControl,
    bounds: LadderBounds,
) -> Result<Trajectory> {
    if control.samples < 2 {
        return Err(Error::validation(
            "samples",
            "need at least two trajectory samples",
        ));
    }
    let mut state = initial.clone();
    loop {
        let trajectory = run_pulse(&state, pulse, ramp, species, propagator, control)?;
        let LadderBounds::Auto { max_states } = bounds else {
            return Ok(trajectory);
        };
        let edge = trajectory.max_edge_population();
        if edge < EDGE_THRESHOLD {
            return Ok(trajectory);
        }
        if state.amplitudes.len() + 4 > max_states {
            return Err(Error::LadderSaturated {
                edge_population: edge,
                states: state.amplitudes.len(),
                cap: max_states,
            });
        }
        state = state.padded(2);
    }
}

fn run_pulse(
    initial: &LadderState,
    pulse: &BraggPulse,
    ramp: &FrequencyRamp,
    species: &AtomSpecies,
    propagator: &dyn LadderPropagator,
    control: &StepControl,
) -> Result<Trajectory> {
    let wr = recoil_frequency(species);
    let start = initial.time * wr;
    let duration = pulse.duration * wr;
    let system = LadderSystem {
        m_min: initial.m_min,
        states: initial.amplitudes.len(),
        rabi: pulse.two_photon_rabi / wr,
        envelope: pulse.envelope.clone(),
        pulse_start: start,
        pulse_duration: duration,
        frequency_start: ramp.start / wr,
        frequency_slope: ramp.slope / (wr * wr),
    };

    let mut c = initial.amplitudes.clone();
    let mut samples = Vec::with_capacity(control.samples);
    samples.push(initial.clone());
    let mut steps = 0;
    let last = control.samples - 1;
    for j in 1..=last {
        let t0 = start + duration * (j - 1) as f64 / last as f64;
        let t1 = if j == last {
            start + duration
        } else {
            start + duration * j as f64 / last as f64
        };
        steps += propagator.advance(&system, &mut c, t0, t1, control)?;
        samples.push(LadderState {
            m_min: initial.m_min,
            amplitudes: c.clone(),
            time: t1 / wr,
        });
    }
    Ok(Trajectory {
        samples,
        propagator: propagator.name().to_string(),
        steps,
    })
}

/// Least-squares fit of ½(1 − cos Ω t) to sampled transfer populations.
///
/// Times are taken relative to the first sample. Returns Ω in the inverse
/// unit of `times`.
pub fn fit_rabi_frequency(times: &[f64], populations: &[f64]) -> Result<f64> {
    if times.len() != populations.len() || times.len() < 3 {
        return Err(Error::Fit {
            reason: format!(
                "need ≥ 3 paired samples, got {} times and {} populations",
                times.len(),
                populations.len()
            ),
            residual_rms: f64::NAN,
        });
    }
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let min_dt = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0 && min_dt > 0.0) {
        return Err(Error::Fit {
            reason: "times must be strictly increasing".into(),
            residual_rms: f64::NAN,
        });
    }
    let sse = |omega: f64| -> f64 {
        times
            .iter()
            .zip(populations)
            .map(|(t, p)| {
                let r = p - 0.5 * (1.0 - (omega * (t - t0)).cos());
                r * r
            })
            .sum()
    };

    let step = 0.05 / span;
    let max_omega = 0.5 * PI / min_dt;
    let mut best = (step, sse(step));
    let mut omega = step;
    while omega <= max_omega {
        let e = sse(omega);
        if e < best.1 {
            best = (omega, e);
        }
        omega += step;
    }
    let refined = golden_section_min(sse, (best.0 - step).max(0.0), best.0 + step, 1e-14);
    Ok(refined)
}

#[cfg(test)]
mod tests {
    use super::super::propagator::{DormandPrince, SplitStep};
    use super::super::pulse::Gaussian;
    use super::*;
    use crate::dynamics::effective_rabi;
    use std::sync::Arc;

    fn rb() -> AtomSpecies {
        AtomSpecies::rubidium_87()
    }

    #[test]
    fn free_evolution_leaves_populations_unchanged() {
        let s = rb();
        let wr = recoil_frequency(&s);
        let mut init = LadderState::at_rest(-2, 2).unwrap();
        init.amplitudes[3] = Complex64::new(0.6, 0.0);
        init.amplitudes[2] = Complex64::new(0.8, 0.0);
        // coupling switched off by a vanishing Gaussian tail
        let pulse = BraggPulse::new(
            1,
            1e-300,
            1e9,
            10.0 / wr,
            Arc::new(Gaussian { sigma: 1e-3 / wr }),
        )
        .unwrap();
        let traj = ladder_evolve(
            &init,
            &pulse,
            &FrequencyRamp::constant(4.0 * wr),
            &s,
            &DormandPrince,
            &StepControl::default(),
            LadderBounds::Fixed,
        )
        .unwrap();
        let fin = traj.final_state();
        assert_eq!(fin.population(0), init.population(0));
        assert_eq!(fin.population(1), init.population(1));
        assert!(traj.max_norm_error() < 1e-15);
    }

    #[test]
    fn first_order_pi_pulse_transfers() {
        let s = rb();
        let wr = recoil_frequency(&s);
        let om2 = 0.2 * wr;
        let pulse = BraggPulse::square(1, om2, 1e9, PI / om2).unwrap();
        let traj = ladder_evolve(
            &LadderState::at_rest(-2, 3).unwrap(),
            &pulse,
            &FrequencyRamp::constant(4.0 * wr),
            &s,
            &DormandPrince,
            &StepControl::default(),
            LadderBounds::default(),
        )
        .unwrap();
        assert!(traj.final_state().population(1) >= 0.98);
        assert!(traj.max_norm_error() < 1e-9);
    }

    #[test]
    fn two_rung_ladder_matches_analytic_rabi() {
        let s = rb();
        let wr = recoil_frequency(&s);
        for (om2, det) in [(0.3 * wr, 0.0), (0.3 * wr, 0.5 * wr), (2.0 * wr, -1.3 * wr)] {
            let pulse = BraggPulse::square(1, om2, 1e9, 20.0 / wr).unwrap();
            // E1 − E0 = 4ω_r − ω_eff = det
            let ramp = FrequencyRamp::constant(4.0 * wr - det);
            for prop in [&DormandPrince as &dyn LadderPropagator, &SplitStep] {
                let traj = ladder_evolve(
                    &LadderState::at_rest(0, 1).unwrap(),
                    &pulse,
                    &ramp,
                    &s,
                    prop,
                    &StepControl::default(),
                    LadderBounds::Fixed,
                )
                .unwrap();
                for st in &traj.samples {
                    let want = crate::dynamics::off_resonant_transfer(om2, det, st.time);
                    assert!(
                        (st.population(1) - want).abs() < 1e-6,
                        "{}: t={} {} vs {want}",
                        prop.name(),
                        st.time,
                        st.population(1)
                    );
                }
            }
        }
    }

    #[test]
    fn second_order_oscillation_matches_closed_form() {
        let s = rb();
        let wr = recoil_frequency(&s);
        let om2 = 0.5 * wr;
        let expected = effective_rabi(2, om2, &s);
        let pulse = BraggPulse::square(2, om2, 1e9, 2.0 * 2.0 * PI / expected).unwrap();
        let traj = ladder_evolve(
            &LadderState::at_rest(-2, 4).unwrap(),
            &pulse,
            &FrequencyRamp::constant(8.0 * wr),
            &s,
            &DormandPrince,
            &StepControl::default(),
            LadderBounds::default(),
        )
        .unwrap();
        let (t, p): (Vec<f64>, Vec<f64>) = traj.populations(2).into_iter().unzip();
        let fitted = fit_rabi_frequency(&t, &p).unwrap();
        assert!(
            (fitted / expected - 1.0).abs() < 0.10,
            "{fitted} vs {expected}"
        );
        assert!(traj.max_norm_error() < 1e-9);
    }

    #[test]
    fn auto_widening_grows_and_saturates() {
        let s = rb();
        let wr = recoil_frequency(&s);
        // strong short pulse spreads population over many rungs
        let pulse = BraggPulse::square(1, 40.0 * wr, 1e9, 0.5 / wr).unwrap();
        let ramp = FrequencyRamp::constant(4.0 * wr);
        let traj = ladder_evolve(
            &LadderState::at_rest(0, 1).unwrap(),
            &pulse,
            &ramp,
            &s,
            &DormandPrince,
            &StepControl::default(),
            LadderBounds::default(),
        )
        .unwrap();
        assert!(traj.final_state().amplitudes.len() > 2);
        assert!(traj.max_edge_population() < EDGE_THRESHOLD);
        let err = ladder_evolve(
            &LadderState::at_rest(0, 1).unwrap(),
            &pulse,
            &ramp,
            &s,
            &DormandPrince,
            &StepControl::default(),
            LadderBounds::Auto { max_states: 4 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::LadderSaturated { .. }), "{err}");
    }

    #[test]
    fn step_cap_surfaces_integration_error() {
        let s = rb();
        let wr = recoil_frequency(&s);
        let pulse = BraggPulse::square(1, 0.2 * wr, 1e9, 10.0 / wr).unwrap();
        let control = StepControl {
            max_steps: 3,
            max_step: 1e-3,
            ..StepControl::default()
        };
        let err = ladder_evolve(
            &LadderState::at_rest(0, 1).unwrap(),
            &pulse,
            &FrequencyRamp::constant(4.0 * wr),
            &s,
            &DormandPrince,
            &control,
            LadderBounds::Fixed,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Integration { .. }), "{err}");
    }

    #[test]
    fn csv_has_one_row_per_rung_and_sample() {
        let s = rb();
        let wr = recoil_frequency(&s);
        let pulse = BraggPulse::square(1, 0.2 * wr, 1e9, 1.0 / wr).unwrap();
        let control = StepControl {
            samples: 5,
            ..StepControl::default()
        };
        let traj = ladder_evolve(
            &LadderState::at_rest(0, 1).unwrap(),
            &pulse,
            &FrequencyRamp::constant(4.0 * wr),
            &s,
            &SplitStep,
            &control,
            LadderBounds::Fixed,
        )
        .unwrap();
        let csv = traj.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,m,re,im,abs2");
        assert_eq!(lines.len(), 1 + 5 * 2);
    }

    #[test]
    fn rabi_fit_recovers_known_frequency() {
        let t: Vec<f64> = (0..300).map(|i| i as f64 * 0.05).collect();
        let p: Vec<f64> = t.iter().map(|&x| 0.5 * (1.0 - (1.7 * x).cos())).collect();
        let om = fit_rabi_frequency(&t, &p).unwrap();
        assert!((om - 1.7).abs() < 1e-7, "{om}");
    }
}
