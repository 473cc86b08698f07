//! Run configuration: TOML file in human units, overridden by flags.

use std::path::Path;

use anyhow::{Context, Result};
use bragg_core::atoms::{load_species, recoil_frequency, SpeciesSource};
use bragg_core::constants::hz_to_angular;
use bragg_core::requirements::ApparatusConfig;
use clap::Args;
use serde::Deserialize;

/// Physical parameters that can be set from the command line. Each flag
/// overrides the same key in the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Bragg diffraction order n
    #[arg(long, global = true)]
    pub order: Option<u32>,
    /// Pulse separation T [ms]
    #[arg(long = "interrogation-ms", global = true)]
    pub interrogation_ms: Option<f64>,
    /// First pulse time after release t0 [ms]
    #[arg(long = "first-pulse-ms", global = true)]
    pub first_pulse_ms: Option<f64>,
    /// Initial cloud radius [mm]
    #[arg(long = "radius-mm", global = true)]
    pub radius_mm: Option<f64>,
    /// Transverse temperature [uK]
    #[arg(long = "transverse-uk", global = true)]
    pub transverse_uk: Option<f64>,
    /// Longitudinal temperature [nK]
    #[arg(long = "longitudinal-nk", global = true)]
    pub longitudinal_nk: Option<f64>,
    /// Single-photon detuning Delta/2pi [GHz]
    #[arg(long = "detuning-ghz", global = true)]
    pub detuning_ghz: Option<f64>,
    /// 1/e^2 beam diameter [mm]
    #[arg(long = "beam-diameter-mm", global = true)]
    pub beam_diameter_mm: Option<f64>,
    /// Wavefront radius of curvature [km]
    #[arg(long = "curvature-km", global = true)]
    pub curvature_km: Option<f64>,
    /// Accuracy target as a fraction of g
    #[arg(long = "target-g", global = true)]
    pub target_g: Option<f64>,
    /// Tolerated spontaneous loss per pulse
    #[arg(long = "loss-budget", global = true)]
    pub loss_budget: Option<f64>,
    /// Local gravity [m/s^2]
    #[arg(long, global = true)]
    pub g: Option<f64>,
    /// Two-photon Rabi frequency [recoil frequencies]
    #[arg(long = "rabi-recoils", global = true)]
    pub rabi_recoils: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApparatusSection {
    pub order: Option<u32>,
    pub interrogation_time_ms: Option<f64>,
    pub first_pulse_time_ms: Option<f64>,
    pub detuning_ghz: Option<f64>,
    pub beam_diameter_mm: Option<f64>,
    pub curvature_km: Option<f64>,
    pub target_accuracy_g: Option<f64>,
    pub loss_budget: Option<f64>,
    pub g: Option<f64>,
    pub two_photon_rabi_recoils: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSection {
    pub initial_radius_mm: Option<f64>,
    pub transverse_temperature_uk: Option<f64>,
    pub longitudinal_temperature_nk: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    pub orders: Option<Vec<u32>>,
    pub durations_recoil: Option<Vec<f64>>,
    pub bec_diameter_mm: Option<f64>,
    pub velocity_selected_diameter_mm: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub mode: Option<String>,
    pub interrogation_times_ms: Option<Vec<f64>>,
    pub chirp_min_mhz_s: Option<f64>,
    pub chirp_max_mhz_s: Option<f64>,
    pub samples: Option<usize>,
    pub contrast: Option<f64>,
    pub thermal_atoms: Option<usize>,
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    pub propagator: Option<String>,
    pub envelope: Option<String>,
    pub envelope_width_us: Option<f64>,
    pub duration_us: Option<f64>,
    pub max_states: Option<usize>,
    pub samples: Option<usize>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// `builtin`, a bundled name, or a species TOML path relative to the config file.
    pub species: Option<String>,
    #[serde(default)]
    pub apparatus: ApparatusSection,
    #[serde(default)]
    pub cloud: CloudSection,
    #[serde(default)]
    pub table1: TableSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub ladder: LadderSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut file: ConfigFile = toml::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))?;
        // species paths in the file are relative to the file itself
        if let Some(species) = &file.species {
            if let SpeciesSource::File(p) = SpeciesSource::from_arg(species) {
                if p.is_relative() {
                    let base = path.parent().unwrap_or(Path::new("."));
                    file.species = Some(base.join(p).to_string_lossy().into_owned());
                }
            }
        }
        Ok(file)
    }
}

fn pick<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Builds the apparatus description: defaults, then file, then flags.
pub fn resolve_apparatus(
    file: &ConfigFile,
    species_flag: Option<&str>,
    o: &Overrides,
) -> Result<ApparatusConfig> {
    let species_arg = species_flag
        .map(str::to_string)
        .or_else(|| file.species.clone())
        .unwrap_or_else(|| "builtin".to_string());
    let species = load_species(&SpeciesSource::from_arg(&species_arg))
        .with_context(|| format!("cannot load species `{species_arg}`"))?;

    let mut c = ApparatusConfig::typical();
    c.species = species;
    let a = &file.apparatus;
    let cl = &file.cloud;
    if let Some(v) = pick(o.order, a.order) {
        c.order = v;
    }
    if let Some(v) = pick(o.interrogation_ms, a.interrogation_time_ms) {
        c.interrogation_time = v * 1e-3;
    }
    if let Some(v) = pick(o.first_pulse_ms, a.first_pulse_time_ms) {
        c.first_pulse_time = v * 1e-3;
    }
    if let Some(v) = pick(o.radius_mm, cl.initial_radius_mm) {
        c.cloud.initial_radius = v * 1e-3;
    }
    if let Some(v) = pick(o.transverse_uk, cl.transverse_temperature_uk) {
        c.cloud.transverse_temperature = v * 1e-6;
    }
    if let Some(v) = pick(o.longitudinal_nk, cl.longitudinal_temperature_nk) {
        c.cloud.longitudinal_temperature = v * 1e-9;
    }
    if let Some(v) = pick(o.detuning_ghz, a.detuning_ghz) {
        c.detuning = hz_to_angular(v * 1e9);
    }
    if let Some(v) = pick(o.beam_diameter_mm, a.beam_diameter_mm) {
        c.beam_diameter = v * 1e-3;
    }
    if let Some(v) = pick(o.curvature_km, a.curvature_km) {
        c.curvature = v * 1e3;
    }
    if let Some(v) = pick(o.g, a.g) {
        c.g = v;
    }
    // the accuracy target is relative to the resolved g
    let target = pick(o.target_g, a.target_accuracy_g).unwrap_or(1e-9);
    c.target_accuracy = target * c.g;
    if let Some(v) = pick(o.loss_budget, a.loss_budget) {
        c.loss_budget = v;
    }
    let wr = recoil_frequency(&c.species);
    let rabi = pick(o.rabi_recoils, a.two_photon_rabi_recoils).unwrap_or(16.4);
    c.two_photon_rabi = rabi * wr;
    c.validate().context("invalid apparatus configuration")?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: ConfigFile = toml::from_str(
            "[apparatus]\norder = 3\ninterrogation_time_ms = 40\n[cloud]\ntransverse_temperature_uk = 0.36\n",
        )
        .unwrap();
        let o = Overrides {
            order: Some(2),
            ..Default::default()
        };
        let c = resolve_apparatus(&file, None, &o).unwrap();
        assert_eq!(c.order, 2);
        assert!((c.interrogation_time - 0.04).abs() < 1e-15);
        assert!((c.cloud.transverse_temperature - 0.36e-6).abs() < 1e-18);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<ConfigFile>("[apparatus]\nordr = 3\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let o = Overrides {
            interrogation_ms: Some(-1.0),
            ..Default::default()
        };
        assert!(resolve_apparatus(&ConfigFile::default(), None, &o).is_err());
    }
}
