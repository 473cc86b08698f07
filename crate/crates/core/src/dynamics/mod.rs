//! Multiphoton Bragg transition formulas and the momentum-ladder oracle.
//!
//! The closed forms here treat an order-`n` Bragg pulse as an effective
//! two-level system coupling |p⟩ and |p + 2nħk⟩. [`ladder`] integrates the
//! full momentum ladder numerically so those forms can be checked.

pub mod ladder;
pub mod propagator;
pub mod pulse;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atoms::{bragg_bandwidth, recoil_frequency, AtomSpecies};
use crate::error::{Error, Result};

pub use ladder::{
    fit_rabi_frequency, ladder_evolve, FrequencyRamp, LadderBounds, LadderState, StepControl,
    Trajectory,
};
pub use propagator::{propagators, DormandPrince, LadderPropagator, LadderSystem, SplitStep};
pub use pulse::{envelopes, BraggPulse, Envelope, Gaussian, Square};

/// Above this order the effective Rabi frequency is evaluated in log space.
const LOG_SPACE_ORDER: u32 = 15;

/// Detuning below which (in units of ω_r) the large-detuning loss estimate
/// is flagged as outside its validity range.
pub const LARGE_DETUNING_RECOILS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    /// Two-photon transition that also flips the hyperfine state.
    Raman,
    /// Two-photon transition that leaves the internal state unchanged.
    Bragg,
}

/// Two-photon detuning [rad/s] for a beam frequency difference `frequency_difference`
/// and atom velocity `velocity` along the beams.
pub fn two_photon_detuning(
    kind: TransitionKind,
    frequency_difference: f64,
    species: &AtomSpecies,
    velocity: f64,
) -> f64 {
    let recoil = 4.0 * recoil_frequency(species);
    let doppler = 2.0 * species.wavenumber * velocity;
    match kind {
        TransitionKind::Raman => {
            frequency_difference - (species.hyperfine_splitting + recoil + doppler)
        }
        TransitionKind::Bragg => frequency_difference - (recoil + doppler),
    }
}

/// Detuning of the `m`-th rung of the 2n-photon ladder from its intermediate
/// resonance, with the beam frequency difference on the order-`n` resonance.
///
/// Odd rungs are excited-state virtual levels and carry the single-photon
/// detuning Δ; even rungs are ground-state momentum levels.
pub fn intermediate_detuning(m: u32, pulse: &BraggPulse, species: &AtomSpecies) -> Result<f64> {
    let n = pulse.order;
    if m < 1 || m > 2 * n {
        return Err(Error::Domain(format!(
            "intermediate index m = {m} outside 1..={} for order {n}",
            2 * n
        )));
    }
    let wr = recoil_frequency(species);
    let (m, n) = (m as f64, n as f64);
    if (m as u64) % 2 == 1 {
        Ok(pulse.detuning + (m * m - 2.0 * n * (m - 1.0)) * wr)
    } else {
        Ok(m * (2.0 * n - m) * wr)
    }
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// 2n-photon effective Rabi frequency Ω_2n = Ω₂ⁿ / [(8ω_r)^(n−1) ((n−1)!)²].
pub fn effective_rabi(order: u32, two_photon_rabi: f64, species: &AtomSpecies) -> f64 {
    assert!(order >= 1, "Bragg order must be at least 1");
    if order == 1 {
        return two_photon_rabi;
    }
    let eight_wr = 8.0 * recoil_frequency(species);
    if order <= LOG_SPACE_ORDER {
        (1..order).fold(two_photon_rabi, |acc, j| {
            acc * two_photon_rabi / (eight_wr * (j * j) as f64)
        })
    } else {
        let n = order as f64;
        let ln =
            n * two_photon_rabi.ln() - (n - 1.0) * eight_wr.ln() - 2.0 * ln_factorial(order - 1);
        ln.exp()
    }
}

/// Inverts [`effective_rabi`]: the two-photon Rabi frequency for which an
/// order-`n` pulse of length `duration` has area `area`.
pub fn two_photon_rabi_for_area(
    order: u32,
    area: f64,
    duration: f64,
    species: &AtomSpecies,
) -> f64 {
    assert!(order >= 1, "Bragg order must be at least 1");
    let n = order as f64;
    let eight_wr = 8.0 * recoil_frequency(species);
    let ln = (area / duration).ln() + (n - 1.0) * eight_wr.ln() + 2.0 * ln_factorial(order - 1);
    (ln / n).exp()
}

/// Resonant transfer probability ½[1 − cos(Ω t)].
pub fn transfer_population(effective_rabi: f64, t: f64) -> f64 {
    0.5 * (1.0 - (effective_rabi * t).cos())
}

/// Detuned two-level transfer probability.
pub fn off_resonant_transfer(effective_rabi: f64, detuning: f64, t: f64) -> f64 {
    let gen2 = effective_rabi * effective_rabi + detuning * detuning;
    if !gen2.is_finite() || gen2 == 0.0 {
        return 0.0;
    }
    let s = (gen2.sqrt() * t / 2.0).sin();
    effective_rabi * effective_rabi / gen2 * s * s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseDurations {
    pub pi: f64,
    pub half_pi: f64,
}

/// π and π/2 pulse lengths [s] for an effective Rabi frequency.
pub fn pulse_durations(effective_rabi: f64) -> PulseDurations {
    let pi = PI / effective_rabi;
    PulseDurations {
        pi,
        half_pi: pi / 2.0,
    }
}

/// Spontaneous-emission loss estimate for one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEstimate {
    /// Loss probability clamped to [0, 1].
    pub probability: f64,
    pub unclamped: f64,
    /// Set when the unclamped estimate exceeds 1.
    pub overflow: bool,
    /// Set when Δ < 100 ω_r and the large-detuning estimate is unreliable.
    pub weak_detuning: bool,
}

/// N_s = (Ω₂/2Δ) Γ τ.
pub fn spontaneous_loss(pulse: &BraggPulse, species: &AtomSpecies) -> LossEstimate {
    let raw = pulse.two_photon_rabi / (2.0 * pulse.detuning) * species.linewidth * pulse.duration;
    LossEstimate {
        probability: raw.clamp(0.0, 1.0),
        unclamped: raw,
        overflow: raw > 1.0,
        weak_detuning: pulse.detuning < LARGE_DETUNING_RECOILS * recoil_frequency(species),
    }
}

/// Smallest single-photon detuning [rad/s] keeping the loss of a pulse with
/// two-photon area `pulse_area` = Ω₂τ under `max_loss`.
pub fn min_detuning(pulse_area: f64, max_loss: f64, species: &AtomSpecies) -> Result<f64> {
    if !(max_loss > 0.0 && max_loss < 1.0) {
        return Err(Error::Domain(format!(
            "loss budget must lie in (0, 1), got {max_loss}"
        )));
    }
    Ok(pulse_area * species.linewidth / (2.0 * max_loss))
}

/// Order-`n` resonance of the beam frequency difference at time `t` after
/// release, δ_n(t) = nδ_B + 2kgt [rad/s].
pub fn resonance_frequency(order: u32, t: f64, species: &AtomSpecies, g: f64) -> f64 {
    order as f64 * bragg_bandwidth(species) + 2.0 * species.wavenumber * g * t
}
