//! Atomic species and the constants derived from them.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{hz_to_angular, HBAR, MW_PER_CM2, TWO_PI};
use crate::error::{Error, Result};
use crate::registry::Registry;

/// Name of the bundled ⁸⁷Rb entry.
pub const RB87: &str = "rb87";

/// Physical constants of an atom and its driving transition.
///
/// Frequencies are angular. Construct through [`AtomSpecies::new`] or
/// [`load_species`] so the positivity invariants hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub name: String,
    /// Atomic mass [kg].
    pub mass: f64,
    /// Single-beam angular wavenumber [rad/m].
    pub wavenumber: f64,
    /// Excited-state decay rate Γ [rad/s].
    pub linewidth: f64,
    /// Ground-state hyperfine interval [rad/s].
    pub hyperfine_splitting: f64,
    /// Saturation intensity [W/m²].
    pub saturation_intensity: f64,
}

impl AtomSpecies {
    pub fn new(
        name: impl Into<String>,
        mass: f64,
        wavenumber: f64,
        linewidth: f64,
        hyperfine_splitting: f64,
        saturation_intensity: f64,
    ) -> Result<Self> {
        let s = Self {
            name: name.into(),
            mass,
            wavenumber,
            linewidth,
            hyperfine_splitting,
            saturation_intensity,
        };
        s.validate()?;
        Ok(s)
    }

    /// ⁸⁷Rb on the 780 nm D2 line.
    ///
    /// The saturation intensity (2.670 mW/cm²) is the value that maps the
    /// first-order optimal Rabi frequency 16.4 ω_r at Δ = 2π×1 GHz onto
    /// 18.0 mW/cm²; it sits between the σ± and isotropic D2 values.
    pub fn rubidium_87() -> Self {
        SpeciesFile {
            name: RB87.into(),
            mass_kg: 1.443e-25,
            wavelength_nm: 780.0,
            linewidth_hz: 6.06e6,
            hyperfine_ghz: 6.8,
            isat_mw_cm2: 2.670,
        }
        .into_species()
        .expect("bundled species is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("mass", self.mass),
            ("wavenumber", self.wavenumber),
            ("linewidth", self.linewidth),
            ("hyperfine_splitting", self.hyperfine_splitting),
            ("saturation_intensity", self.saturation_intensity),
        ];
        for (field, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(
                    field,
                    format!("must be finite and strictly positive, got {value}"),
                ));
            }
        }
        if self.name.trim().is_empty() {
            return Err(Error::validation("name", "must not be empty"));
        }
        Ok(())
    }

    /// Optical wavelength [m].
    pub fn wavelength(&self) -> f64 {
        TWO_PI / self.wavenumber
    }

    /// Single-photon recoil velocity ħk/M [m/s].
    pub fn recoil_velocity(&self) -> f64 {
        HBAR * self.wavenumber / self.mass
    }

    pub fn recoil_frequency(&self) -> f64 {
        recoil_frequency(self)
    }

    pub fn bragg_bandwidth(&self) -> f64 {
        bragg_bandwidth(self)
    }
}

/// ω_r = ħk²/(2M) [rad/s].
pub fn recoil_frequency(species: &AtomSpecies) -> f64 {
    HBAR * species.wavenumber * species.wavenumber / (2.0 * species.mass)
}

/// First-order Bragg resonance δ_B = 4ω_r [rad/s].
pub fn bragg_bandwidth(species: &AtomSpecies) -> f64 {
    4.0 * recoil_frequency(species)
}

/// Chirp rate α₀ = kg/π [Hz/s] of the beam frequency difference that cancels
/// the gravitational Doppler shift.
pub fn resonant_chirp_rate(species: &AtomSpecies, g: f64) -> f64 {
    species.wavenumber * g / PI
}

/// On-disk species description. Field names are part of the CLI contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesFile {
    pub name: String,
    pub mass_kg: f64,
    pub wavelength_nm: f64,
    /// Γ/2π [Hz].
    pub linewidth_hz: f64,
    /// ω_eg/2π [GHz].
    pub hyperfine_ghz: f64,
    pub isat_mw_cm2: f64,
}

impl SpeciesFile {
    pub fn into_species(self) -> Result<AtomSpecies> {
        let fields = [
            ("mass_kg", self.mass_kg),
            ("wavelength_nm", self.wavelength_nm),
            ("linewidth_hz", self.linewidth_hz),
            ("hyperfine_ghz", self.hyperfine_ghz),
            ("isat_mw_cm2", self.isat_mw_cm2),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(
                    field,
                    format!("must be finite and strictly positive, got {value}"),
                ));
            }
        }
        AtomSpecies::new(
            self.name,
            self.mass_kg,
            TWO_PI / (self.wavelength_nm * 1e-9),
            hz_to_angular(self.linewidth_hz),
            hz_to_angular(self.hyperfine_ghz * 1e9),
            self.isat_mw_cm2 * MW_PER_CM2,
        )
    }
}

impl From<&AtomSpecies> for SpeciesFile {
    fn from(s: &AtomSpecies) -> Self {
        SpeciesFile {
            name: s.name.clone(),
            mass_kg: s.mass,
            wavelength_nm: s.wavelength() * 1e9,
            linewidth_hz: s.linewidth / TWO_PI,
            hyperfine_ghz: s.hyperfine_splitting / TWO_PI / 1e9,
            isat_mw_cm2: s.saturation_intensity / MW_PER_CM2,
        }
    }
}

/// Where a species definition comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpeciesSource {
    /// A name in [`builtin_species`].
    Builtin(String),
    /// A TOML file with [`SpeciesFile`] keys.
    File(std::path::PathBuf),
    /// Inline TOML text.
    Text(String),
}

impl SpeciesSource {
    /// `"builtin"` or a registered name selects a bundled species; anything
    /// else is treated as a path.
    pub fn from_arg(arg: &str) -> Self {
        let lowered = arg.to_ascii_lowercase();
        if lowered == "builtin" || builtin_species().contains(&lowered) {
            let name = if lowered == "builtin" {
                RB87.to_string()
            } else {
                lowered
            };
            SpeciesSource::Builtin(name)
        } else {
            SpeciesSource::File(arg.into())
        }
    }
}

/// Bundled species keyed by name.
pub fn builtin_species() -> Registry<AtomSpecies> {
    let mut r = Registry::new("species");
    r.register(RB87, AtomSpecies::rubidium_87());
    r
}

/// Parses species TOML text.
pub fn parse_species(text: &str) -> Result<AtomSpecies> {
    let file: SpeciesFile = toml::from_str(text).map_err(|e| Error::parse("species", e))?;
    file.into_species()
}

pub fn load_species(source: &SpeciesSource) -> Result<AtomSpecies> {
    match source {
        SpeciesSource::Builtin(name) => builtin_species().get(name).cloned(),
        SpeciesSource::Text(text) => {
            if text.trim().is_empty() {
                Ok(AtomSpecies::rubidium_87())
            } else {
                parse_species(text)
            }
        }
        SpeciesSource::File(path) => load_species_file(path),
    }
}

fn load_species_file(path: &Path) -> Result<AtomSpecies> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_species(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rb() -> AtomSpecies {
        AtomSpecies::rubidium_87()
    }

    #[test]
    fn rubidium_recoil_matches_quoted_value() {
        let fr = recoil_frequency(&rb()) / TWO_PI;
        assert!((fr / 3.77e3 - 1.0).abs() < 5e-3, "{fr}");
    }

    #[test]
    fn bandwidth_evaluates_directly() {
        let db = bragg_bandwidth(&rb());
        assert!((db / 9.49e4 - 1.0).abs() < 1e-3, "{db}");
        assert!((db / TWO_PI / 15.1e3 - 1.0).abs() < 5e-3);
        assert_eq!(db, 4.0 * recoil_frequency(&rb()));
    }

    #[test]
    fn recoil_scales_with_k_and_mass() {
        let base = rb();
        let mut k2 = base.clone();
        k2.wavenumber *= 2.0;
        let mut m2 = base.clone();
        m2.mass *= 2.0;
        let w = recoil_frequency(&base);
        assert!((recoil_frequency(&k2) / w - 4.0).abs() < 1e-12);
        assert!((recoil_frequency(&m2) / w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn resonant_chirp_for_rubidium() {
        let a = resonant_chirp_rate(&rb(), 9.8);
        assert!((a / 25.1e6 - 1.0).abs() < 2e-3, "{a}");
        assert_eq!(resonant_chirp_rate(&rb(), 0.0), 0.0);
    }

    #[test]
    fn wavelength_override_sets_wavenumber() {
        let s = parse_species(
            r#"
            name = "custom"
            mass_kg = 1.443e-25
            wavelength_nm = 780.0
            linewidth_hz = 6.06e6
            hyperfine_ghz = 6.8
            isat_mw_cm2 = 2.67
            "#,
        )
        .unwrap();
        assert!((s.wavenumber / 8.055e6 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_mass_is_rejected_by_name() {
        let err = parse_species(
            r#"
            name = "bad"
            mass_kg = 0.0
            wavelength_nm = 780.0
            linewidth_hz = 6.06e6
            hyperfine_ghz = 6.8
            isat_mw_cm2 = 2.67
            "#,
        )
        .unwrap_err();
        match err {
            Error::Validation { field, .. } => assert!(field.contains("mass")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_field_is_a_parse_error_naming_it() {
        let err = parse_species("name = \"x\"\nmass_kg = 1.0").unwrap_err();
        assert!(err.to_string().contains("wavelength_nm"), "{err}");
    }

    #[test]
    fn empty_source_falls_back_to_builtin() {
        let s = load_species(&SpeciesSource::Text(String::new())).unwrap();
        assert_eq!(s, rb());
        assert_eq!(
            SpeciesSource::from_arg("builtin"),
            SpeciesSource::Builtin(RB87.into())
        );
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_species(&SpeciesSource::File("/nonexistent/sp.toml".into())).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/sp.toml"));
    }

    #[test]
    fn species_file_round_trip() {
        let s = rb();
        let text = toml::to_string(&SpeciesFile::from(&s)).unwrap();
        let back = parse_species(&text).unwrap();
        assert!((back.wavenumber / s.wavenumber - 1.0).abs() < 1e-12);
        assert!((back.linewidth / s.linewidth - 1.0).abs() < 1e-12);
    }
}
