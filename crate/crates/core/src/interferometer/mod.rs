//! Three-pulse Mach-Zehnder gravimeter model.
//!
//! The interferometer phase of an order-`n` Bragg gravimeter is
//! Δφ = n(2kg − 2πα)T² + φ_L, where α is the chirp of the beam frequency
//! difference in Hz/s and φ_L the laser phase combination φ₁ − 2φ₂ + φ₃.
//! Output ports carry P₁,₂ = ½(1 ± V cos Δφ).

mod fit;
mod resonance;
mod scan;
mod thermal;

use std::f64::consts::PI;

use crate::atoms::AtomSpecies;
use crate::error::{Error, Result};

pub use fit::{phase_scan_fit, FringeFit, MIN_FIT_POINTS};
pub use resonance::{find_resonant_chirp, ExtremumKind, ResonantChirp};
pub use scan::{
    chirp_scan, phase_scan, FringePoint, FringeScan, NoiseModel, ScanKind, ScanMetadata,
};
pub use thermal::{thermal_contrast, ThermalContrast};

/// Interferometer phase [rad] for chirp `chirp_rate` [Hz/s].
pub fn interferometer_phase(
    order: u32,
    species: &AtomSpecies,
    g: f64,
    chirp_rate: f64,
    interrogation_time: f64,
    laser_phase: f64,
) -> f64 {
    let t2 = interrogation_time * interrogation_time;
    order as f64 * (2.0 * species.wavenumber * g * t2 - 2.0 * PI * chirp_rate * t2) + laser_phase
}

/// Port populations (P₁, P₂) for phase `phase` and contrast `contrast`.
pub fn output_populations(phase: f64, contrast: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&contrast) {
        return Err(Error::Domain(format!(
            "contrast must lie in [0, 1], got {contrast}"
        )));
    }
    let c = contrast * phase.cos();
    Ok((0.5 * (1.0 + c), 0.5 * (1.0 - c)))
}

/// g = πα₀/k [m/s²] from the resonant chirp rate α₀ [Hz/s].
pub fn gravity_from_chirp(resonant_chirp: f64, species: &AtomSpecies) -> f64 {
    PI * resonant_chirp / species.wavenumber
}
