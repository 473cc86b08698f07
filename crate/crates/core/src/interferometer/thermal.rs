use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::BOLTZMANN;
use crate::dynamics::{off_resonant_transfer, pulse_durations};
use crate::error::{Error, Result};
use crate::requirements::ApparatusConfig;

const CHUNK: usize = 1024;

/// Ensemble-averaged contrast of the three-pulse sequence for a thermal cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalContrast {
    pub contrast: f64,
    /// Mean splitting factor 2√(p(1−p)) of the first π/2 pulse.
    pub splitter: f64,
    /// Mean transfer probability of the π pulse.
    pub mirror: f64,
    /// Mean splitting factor of the closing π/2 pulse.
    pub recombiner: f64,
    pub n_atoms: usize,
    pub seed: u64,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    contrast: f64,
    split: f64,
    mirror: f64,
}

/// Monte-Carlo contrast over the longitudinal velocity distribution.
///
/// Each atom sees the order-n resonance Doppler shifted by 2nkv and is
/// diffracted as a detuned two-level system with the configured effective
/// Rabi frequency. Atoms are drawn in fixed-size chunks, each from its own
/// stream of a ChaCha generator seeded by `seed`, so the result does not
/// depend on the thread count.
pub fn thermal_contrast(
    config: &ApparatusConfig,
    n_atoms: usize,
    seed: u64,
) -> Result<ThermalContrast> {
    if n_atoms == 0 {
        return Err(Error::validation("n_atoms", "need at least one atom"));
    }
    config.cloud.validate()?;
    let species = &config.species;
    let sigma_v = (BOLTZMANN * config.cloud.longitudinal_temperature / species.mass).sqrt();
    let normal = Normal::new(0.0, sigma_v)
        .map_err(|e| Error::validation("longitudinal_temperature", e.to_string()))?;
    let omega = config.effective_rabi();
    let tau = pulse_durations(omega);
    let doppler = 2.0 * config.order as f64 * species.wavenumber;

    let chunks = n_atoms.div_ceil(CHUNK);
    let partial: Vec<Sums> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(n_atoms - chunk * CHUNK);
            let mut s = Sums::default();
            for _ in 0..count {
                let delta = doppler * normal.sample(&mut rng);
                let p_half = off_resonant_transfer(omega, delta, tau.half_pi);
                let p_pi = off_resonant_transfer(omega, delta, tau.pi);
                let split = 2.0 * (p_half * (1.0 - p_half)).max(0.0).sqrt();
                s.contrast += split * split * p_pi;
                s.split += split;
                s.mirror += p_pi;
            }
            s
        })
        .collect();
    let total = partial.iter().fold(Sums::default(), |acc, s| Sums {
        contrast: acc.contrast + s.contrast,
        split: acc.split + s.split,
        mirror: acc.mirror + s.mirror,
    });
    let n = n_atoms as f64;
    Ok(ThermalContrast {
        contrast: total.contrast / n,
        splitter: total.split / n,
        mirror: total.mirror / n,
        recombiner: total.split / n,
        n_atoms,
        seed,
    })
}
