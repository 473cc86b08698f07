use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::scan::{FringeScan, ScanKind};
use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 5;

/// Least-squares sinusoid P₁(x) = A + B cos(x + φ) with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    /// [rad], wrapped to (−π, π]
    pub phase: f64,
    pub offset_err: f64,
    pub amplitude_err: f64,
    pub phase_err: f64,
    pub residual_rms: f64,
    pub points: usize,
}

impl FringeFit {
    /// Fringe contrast V = 2B.
    pub fn contrast(&self) -> f64 {
        2.0 * self.amplitude
    }

    pub fn contrast_err(&self) -> f64 {
        2.0 * self.amplitude_err
    }
}

/// Fits a laser-phase scan with a sinusoid of unit period in x.
pub fn phase_scan_fit(scan: &FringeScan) -> Result<FringeFit> {
    if scan.kind != ScanKind::LaserPhase {
        return Err(Error::validation(
            "scan",
            format!("expected a laser_phase scan, got {}", scan.kind.as_str()),
        ));
    }
    let n = scan.points.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::validation(
            "scan",
            format!("need at least {MIN_FIT_POINTS} points, got {n}"),
        ));
    }
    let (lo, hi) = scan
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.x), hi.max(p.x))
        });
    // sampled span plus one sample spacing must cover a full period
    let coverage = (hi - lo) * n as f64 / (n - 1) as f64;
    if coverage < TAU * (1.0 - 1e-9) {
        return Err(Error::validation(
            "scan",
            format!("phase samples cover {coverage:.4} rad, less than one period"),
        ));
    }

    let mut xtx = Matrix3::zeros();
    let mut xty = Vector3::zeros();
    for p in &scan.points {
        let row = Vector3::new(1.0, p.x.cos(), p.x.sin());
        xtx += row * row.transpose();
        xty += row * p.p1;
    }
    let inv = xtx.try_inverse().ok_or_else(|| Error::Fit {
        reason: "design matrix is singular".into(),
        residual_rms: f64::NAN,
    })?;
    let beta = inv * xty;
    let (a, c, s) = (beta[0], beta[1], beta[2]);

    let rss: f64 = scan
        .points
        .iter()
        .map(|p| {
            let r = p.p1 - (a + c * p.x.cos() + s * p.x.sin());
            r * r
        })
        .sum();
    let residual_rms = (rss / n as f64).sqrt();
    let b = c.hypot(s);
    if !(b > 1e-12) || !b.is_finite() {
        return Err(Error::Fit {
            reason: "fitted amplitude vanishes, phase is undefined".into(),
            residual_rms,
        });
    }
    let sigma2 = rss / (n - 3) as f64;
    let cov = inv * sigma2;
    let (vcc, vss, vcs) = (cov[(1, 1)], cov[(2, 2)], cov[(1, 2)]);
    let b2 = b * b;
    let var_b = (c * c * vcc + s * s * vss + 2.0 * c * s * vcs) / b2;
    let var_phi = (s * s * vcc + c * c * vss - 2.0 * c * s * vcs) / (b2 * b2);

    Ok(FringeFit {
        offset: a,
        amplitude: b,
        phase: (-s).atan2(c),
        offset_err: cov[(0, 0)].max(0.0).sqrt(),
        amplitude_err: var_b.max(0.0).sqrt(),
        phase_err: var_phi.max(0.0).sqrt(),
        residual_rms,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{
        output_populations, phase_scan, FringePoint, NoiseModel, ScanMetadata,
    };
    use crate::requirements::ApparatusConfig;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synthetic(v: f64, phi: f64, n: usize) -> FringeScan {
        let points = (0..n)
            .map(|i| {
                let x = TAU * i as f64 / n as f64;
                let (p1, p2) = output_populations(x + phi, v).unwrap();
                FringePoint { x, p1, p2 }
            })
            .collect();
        FringeScan {
            kind: ScanKind::LaserPhase,
            points,
            metadata: ScanMetadata {
                order: 1,
                interrogation_time: 0.05,
                first_pulse_time: 0.02,
                contrast: v,
                species: "rb87".into(),
                g_true: None,
                chirp_rate: None,
                noise_sigma: None,
                seed: None,
            },
        }
    }

    #[test]
    fn noiseless_fringe_recovered_exactly() {
        let fit = phase_scan_fit(&synthetic(0.8, 0.3, 100)).unwrap();
        assert!((fit.offset - 0.5).abs() < 1e-9);
        assert!((fit.amplitude - 0.4).abs() < 1e-9);
        assert!((fit.phase - 0.3).abs() < 1e-9);
        assert!((fit.contrast() - 0.8).abs() < 1e-9);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn phase_errors_are_calibrated() {
        let truth = 0.3;
        let clean = synthetic(0.8, truth, 100);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut within = 0;
        for trial in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(trial);
            let mut scan = clean.clone();
            for p in &mut scan.points {
                p.p1 += noise.sample(&mut rng);
                p.p2 = 1.0 - p.p1;
            }
            let fit = phase_scan_fit(&scan).unwrap();
            if (fit.phase - truth).abs() <= 3.0 * fit.phase_err {
                within += 1;
            }
        }
        assert!(within >= 950, "{within} of 1000 within 3 sigma");
    }

    #[test]
    fn simulated_phase_scan_contrast() {
        let c = ApparatusConfig::typical();
        let a0 = crate::atoms::resonant_chirp_rate(&c.species, c.g);
        let noise = Some(NoiseModel {
            sigma: 0.005,
            seed: 7,
        });
        let scan = phase_scan(&c, 0.8, a0, (0.0, TAU), 100, noise).unwrap();
        let fit = phase_scan_fit(&scan).unwrap();
        assert!(
            (fit.contrast() - 0.8).abs() < 4.0 * fit.contrast_err(),
            "{fit:?}"
        );
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            phase_scan_fit(&synthetic(0.8, 0.3, 4)),
            Err(Error::Validation { .. })
        ));
        let mut short = synthetic(0.8, 0.3, 20);
        for p in &mut short.points {
            p.x *= 0.5;
        }
        assert!(phase_scan_fit(&short).is_err());
        let flat = synthetic(0.0, 0.3, 20);
        assert!(matches!(phase_scan_fit(&flat), Err(Error::Fit { .. })));
    }

    proptest! {
        #[test]
        fn contrast_is_twice_amplitude(v in 0.01f64..=1.0, phi in -3.1f64..3.1, n in 5usize..200) {
            let fit = phase_scan_fit(&synthetic(v, phi, n)).unwrap();
            prop_assert!((fit.contrast() - v).abs() < 1e-9);
            prop_assert!((fit.phase - phi).abs() < 1e-9);
        }
    }
}
