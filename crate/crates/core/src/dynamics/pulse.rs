//! Bragg pulses and their temporal envelopes.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::registry::Registry;

/// Temporal shape of the two-photon coupling within a pulse.
pub trait Envelope: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// Relative coupling strength at time `t` after the pulse start, for a
    /// pulse of total length `duration`. Zero outside `[0, duration]`.
    fn shape(&self, t: f64, duration: f64) -> f64;
}

/// Constant coupling over the whole pulse.
#[derive(Debug, Clone, Copy, Default)]
pub struct Square;

impl Envelope for Square {
    fn name(&self) -> &'static str {
        "square"
    }

    fn shape(&self, t: f64, duration: f64) -> f64 {
        if (0.0..=duration).contains(&t) {
            1.0
        } else {
            0.0
        }
    }
}

/// Gaussian centred on the middle of the pulse window.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    /// Standard deviation [s].
    pub sigma: f64,
}

impl Envelope for Gaussian {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn shape(&self, t: f64, duration: f64) -> f64 {
        if !(0.0..=duration).contains(&t) {
            return 0.0;
        }
        let x = (t - 0.5 * duration) / self.sigma;
        (-0.5 * x * x).exp()
    }
}

/// Builds an envelope from an optional width parameter [s].
pub type EnvelopeFactory = fn(Option<f64>) -> Result<Arc<dyn Envelope>>;

fn make_square(_: Option<f64>) -> Result<Arc<dyn Envelope>> {
    Ok(Arc::new(Square))
}

fn make_gaussian(width: Option<f64>) -> Result<Arc<dyn Envelope>> {
    match width {
        Some(sigma) if sigma.is_finite() && sigma > 0.0 => Ok(Arc::new(Gaussian { sigma })),
        Some(sigma) => Err(Error::validation(
            "envelope width",
            format!("gaussian sigma must be positive, got {sigma}"),
        )),
        None => Err(Error::validation(
            "envelope width",
            "gaussian envelope needs a width (sigma in seconds)",
        )),
    }
}

/// Registered pulse envelopes.
pub fn envelopes() -> Registry<EnvelopeFactory> {
    let mut r: Registry<EnvelopeFactory> = Registry::new("envelope");
    r.register("square", make_square);
    r.register("gaussian", make_gaussian);
    r
}

/// An order-`n` Bragg pulse.
#[derive(Debug, Clone)]
pub struct BraggPulse {
    pub order: u32,
    /// Peak two-photon Rabi frequency Ω₂ [rad/s].
    pub two_photon_rabi: f64,
    /// Single-photon detuning Δ [rad/s].
    pub detuning: f64,
    /// Pulse length τ [s].
    pub duration: f64,
    pub envelope: Arc<dyn Envelope>,
}

impl BraggPulse {
    pub fn new(
        order: u32,
        two_photon_rabi: f64,
        detuning: f64,
        duration: f64,
        envelope: Arc<dyn Envelope>,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::validation("order", "must be at least 1"));
        }
        for (field, v) in [
            ("two_photon_rabi", two_photon_rabi),
            ("detuning", detuning),
            ("duration", duration),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(
                    field,
                    format!("must be finite and strictly positive, got {v}"),
                ));
            }
        }
        Ok(Self {
            order,
            two_photon_rabi,
            detuning,
            duration,
            envelope,
        })
    }

    pub fn square(order: u32, two_photon_rabi: f64, detuning: f64, duration: f64) -> Result<Self> {
        Self::new(order, two_photon_rabi, detuning, duration, Arc::new(Square))
    }

    /// Squared single-photon Rabi frequency Ω₀² = 2ΔΩ₂ [rad²/s²].
    pub fn single_photon_rabi_sq(&self) -> f64 {
        2.0 * self.detuning * self.two_photon_rabi
    }

    /// Two-photon coupling [rad/s] at time `t` after the pulse start.
    pub fn coupling_at(&self, t: f64) -> f64 {
        self.two_photon_rabi * self.envelope.shape(t, self.duration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_both_envelopes() {
        let r = envelopes();
        let sq = (r.get("square").unwrap())(None).unwrap();
        assert_eq!(sq.name(), "square");
        assert_eq!(sq.shape(0.5, 1.0), 1.0);
        assert_eq!(sq.shape(1.5, 1.0), 0.0);
        let g = (r.get("gaussian").unwrap())(Some(0.1)).unwrap();
        assert_eq!(g.shape(0.5, 1.0), 1.0);
        assert!((g.shape(0.6, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((r.get("gaussian").unwrap())(None).is_err());
        assert!(r.get("sinc").is_err());
    }

    #[test]
    fn pulse_validation() {
        assert!(BraggPulse::square(0, 1.0, 1.0, 1.0).is_err());
        assert!(BraggPulse::square(1, 0.0, 1.0, 1.0).is_err());
        assert!(BraggPulse::square(1, 1.0, -1.0, 1.0).is_err());
        let p = BraggPulse::square(2, 3.0, 5.0, 1.0).unwrap();
        assert_eq!(p.single_photon_rabi_sq(), 30.0);
    }
}
