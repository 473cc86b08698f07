//! Apparatus design constraints and the optimal-laser-parameter table.
//!
//! Every bound is a pure function of the species and configuration. The
//! report assembles them with pass/fail against the configured values, with
//! "much less than" bounds taken as a factor-10 margin.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::atoms::{bragg_bandwidth, recoil_frequency, AtomSpecies};
use crate::constants::{BOLTZMANN, HBAR, MW_PER_CM2, TWO_PI};
use crate::dynamics::{
    effective_rabi, min_detuning, pulse_durations, two_photon_rabi_for_area, BraggPulse,
};
use crate::error::{Error, Result};

/// Factor applied to "≪" bounds in pass/fail decisions.
pub const STRONG_INEQUALITY_MARGIN: f64 = 10.0;

/// Diffraction orders of the optimal-parameter table.
pub const TABLE_ORDERS: [u32; 6] = [1, 5, 10, 15, 20, 25];

/// Optimised π-pulse lengths [1/ω_r] for [`TABLE_ORDERS`] (shaped pulses, atoms
/// with ħk transverse momentum width).
pub const TABLE_DURATIONS: [f64; 6] = [0.192, 0.086, 0.105, 0.086, 0.077, 0.072];

/// Beam diameter [m] used for velocity-selected clouds in the table.
pub const TABLE_DIAMETER_VELOCITY_SELECTED: f64 = 6.0e-3;

/// Beam diameter [m] used for BEC sources in the table.
pub const TABLE_DIAMETER_BEC: f64 = 3.46e-3;

/// Single-photon detuning [rad/s] used in the table.
pub const TABLE_DETUNING: f64 = TWO_PI * 1e9;

/// Atom cloud at the first pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    /// 1/e density radius r₀ [m].
    pub initial_radius: f64,
    /// T_⊥ [K].
    pub transverse_temperature: f64,
    /// T_∥ [K].
    pub longitudinal_temperature: f64,
}

impl CloudSpec {
    pub fn new(
        initial_radius: f64,
        transverse_temperature: f64,
        longitudinal_temperature: f64,
    ) -> Result<Self> {
        let c = Self {
            initial_radius,
            transverse_temperature,
            longitudinal_temperature,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_radius.is_finite() && self.initial_radius > 0.0) {
            return Err(Error::validation(
                "initial_radius",
                format!("must be positive, got {}", self.initial_radius),
            ));
        }
        for (field, v) in [
            ("transverse_temperature", self.transverse_temperature),
            ("longitudinal_temperature", self.longitudinal_temperature),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    field,
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// v_⊥ = √(k_B T_⊥ / M) [m/s].
    pub fn transverse_velocity(&self, species: &AtomSpecies) -> f64 {
        (BOLTZMANN * self.transverse_temperature / species.mass).sqrt()
    }

    /// Δp_∥ = √(M k_B T_∥) [kg m/s].
    pub fn longitudinal_momentum_width(&self, species: &AtomSpecies) -> f64 {
        (species.mass * BOLTZMANN * self.longitudinal_temperature).sqrt()
    }
}

/// Geometry and pulse parameters of a gravimeter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApparatusConfig {
    pub species: AtomSpecies,
    pub cloud: CloudSpec,
    pub order: u32,
    /// Pulse separation T [s].
    pub interrogation_time: f64,
    /// Time of the first pulse after release t₀ [s].
    pub first_pulse_time: f64,
    /// Single-photon detuning Δ [rad/s].
    pub detuning: f64,
    /// 1/e² intensity diameter w [m].
    pub beam_diameter: f64,
    /// Wavefront radius of curvature R [m].
    pub curvature: f64,
    /// Acceleration accuracy target [m/s²].
    pub target_accuracy: f64,
    /// Tolerated spontaneous-emission loss per pulse.
    pub loss_budget: f64,
    /// Local gravity [m/s²].
    pub g: f64,
    /// Two-photon Rabi frequency Ω₂ of the pulses [rad/s].
    pub two_photon_rabi: f64,
}

impl ApparatusConfig {
    /// Velocity-selected ⁸⁷Rb with r₀ = 1.5 mm, T_⊥ = 5 µK, t₀ = 20 ms,
    /// T = 50 ms, first order, Δ = 2π×1 GHz and the first-order table pulse.
    pub fn typical() -> Self {
        let species = AtomSpecies::rubidium_87();
        let wr = recoil_frequency(&species);
        let g = 9.8;
        Self {
            cloud: CloudSpec {
                initial_radius: 1.5e-3,
                transverse_temperature: 5e-6,
                longitudinal_temperature: 10e-9,
            },
            order: 1,
            interrogation_time: 50e-3,
            first_pulse_time: 20e-3,
            detuning: TWO_PI * 1e9,
            beam_diameter: 7.5e-3,
            curvature: 50e3,
            target_accuracy: 1e-9 * g,
            loss_budget: 0.01,
            g,
            two_photon_rabi: 16.4 * wr,
            species,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        self.cloud.validate()?;
        if self.order < 1 {
            return Err(Error::validation("order", "must be at least 1"));
        }
        let positive = [
            ("interrogation_time", self.interrogation_time),
            ("detuning", self.detuning),
            ("beam_diameter", self.beam_diameter),
            ("curvature", self.curvature),
            ("target_accuracy", self.target_accuracy),
            ("g", self.g),
            ("two_photon_rabi", self.two_photon_rabi),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && !v.is_nan()) {
                return Err(Error::validation(
                    field,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if !(self.first_pulse_time.is_finite() && self.first_pulse_time >= 0.0) {
            return Err(Error::validation(
                "first_pulse_time",
                format!("must be non-negative, got {}", self.first_pulse_time),
            ));
        }
        if !(self.loss_budget > 0.0 && self.loss_budget < 1.0) {
            return Err(Error::validation(
                "loss_budget",
                format!("must lie in (0, 1), got {}", self.loss_budget),
            ));
        }
        Ok(())
    }

    pub fn effective_rabi(&self) -> f64 {
        effective_rabi(self.order, self.two_photon_rabi, &self.species)
    }

    /// π-pulse length [s] at the configured order and Ω₂.
    pub fn pi_pulse_duration(&self) -> f64 {
        pulse_durations(self.effective_rabi()).pi
    }

    /// Square π pulse at the configured parameters.
    pub fn pi_pulse(&self) -> Result<BraggPulse> {
        BraggPulse::square(
            self.order,
            self.two_photon_rabi,
            self.detuning,
            self.pi_pulse_duration(),
        )
    }
}

/// Temperature [K] at which the longitudinal momentum width reaches ħk.
pub fn longitudinal_temperature_limit(species: &AtomSpecies) -> f64 {
    let p = HBAR * species.wavenumber;
    p * p / (species.mass * BOLTZMANN)
}

/// Admissible pulse lengths from 2kΔp_∥/M ≪ 1/τ ≪ δ_B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationWindow {
    /// 1/δ_B [s].
    pub min: f64,
    /// M/(2kΔp_∥) [s]; infinite for a cloud at zero temperature.
    pub max: f64,
}

impl DurationWindow {
    pub fn is_empty(&self) -> bool {
        self.min >= self.max
    }

    pub fn ratio(&self) -> f64 {
        self.max / self.min
    }

    /// The window shrunk by `margin` on both sides.
    pub fn with_margin(&self, margin: f64) -> Self {
        Self {
            min: self.min * margin,
            max: self.max / margin,
        }
    }
}

pub fn pulse_duration_window(cloud: &CloudSpec, species: &AtomSpecies) -> DurationWindow {
    let dp = cloud.longitudinal_momentum_width(species);
    let max = if dp > 0.0 {
        species.mass / (2.0 * species.wavenumber * dp)
    } else {
        f64::INFINITY
    };
    DurationWindow {
        min: 1.0 / bragg_bandwidth(species),
        max,
    }
}

/// 1/e radius [m] of the expanding cloud at time `t`.
pub fn cloud_radius(cloud: &CloudSpec, species: &AtomSpecies, t: f64) -> f64 {
    let v = cloud.transverse_velocity(species);
    (cloud.initial_radius.powi(2) + (v * t).powi(2)).sqrt()
}

/// Smallest 1/e² beam diameter [m] covering the cloud at the last pulse.
pub fn min_beam_diameter(
    cloud: &CloudSpec,
    species: &AtomSpecies,
    first_pulse_time: f64,
    interrogation_time: f64,
) -> f64 {
    2.0 * cloud_radius(cloud, species, first_pulse_time + 2.0 * interrogation_time)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavefrontError {
    /// Interferometer phase error [rad].
    pub phase: f64,
    /// Equivalent gravity bias v_⊥²/R [m/s²].
    pub acceleration_bias: f64,
}

/// Phase error from a parabolic wavefront of radius `curvature`, with the
/// effective wavevector 2nk.
pub fn wavefront_phase_error(
    order: u32,
    species: &AtomSpecies,
    curvature: f64,
    cloud: &CloudSpec,
    interrogation_time: f64,
) -> WavefrontError {
    let v2 = cloud.transverse_velocity(species).powi(2);
    let k_eff = 2.0 * order as f64 * species.wavenumber;
    WavefrontError {
        phase: k_eff / curvature * v2 * interrogation_time.powi(2),
        acceleration_bias: v2 / curvature,
    }
}

/// Smallest wavefront radius [m] keeping the curvature bias below `target_accuracy`.
pub fn min_curvature(
    cloud: &CloudSpec,
    species: &AtomSpecies,
    target_accuracy: f64,
) -> Result<f64> {
    if !(target_accuracy > 0.0) {
        return Err(Error::Domain(format!(
            "target accuracy must be positive, got {target_accuracy}"
        )));
    }
    Ok(cloud.transverse_velocity(species).powi(2) / target_accuracy)
}

/// Free-fall time [s] after which the Doppler shift exceeds nδ_B and the
/// retro-reflected lattice falls out of resonance.
pub fn min_fall_time(order: u32, species: &AtomSpecies, g: f64) -> f64 {
    order as f64 * bragg_bandwidth(species) / (2.0 * species.wavenumber * g)
}

/// Beam intensity [W/m²] giving two-photon Rabi frequency Ω₂ at detuning Δ,
/// through Ω₀² = 2ΔΩ₂ and Ω₀²/Γ² = I/(2 I_sat).
pub fn intensity_from_rabi(two_photon_rabi: f64, detuning: f64, species: &AtomSpecies) -> f64 {
    let omega0_sq = 2.0 * detuning * two_photon_rabi;
    2.0 * species.saturation_intensity * omega0_sq / species.linewidth.powi(2)
}

/// Inverse of [`intensity_from_rabi`].
pub fn rabi_from_intensity(intensity: f64, detuning: f64, species: &AtomSpecies) -> f64 {
    let omega0_sq = intensity * species.linewidth.powi(2) / (2.0 * species.saturation_intensity);
    omega0_sq / (2.0 * detuning)
}

/// Beam power [W] for intensity `intensity` over a disk of diameter `diameter`.
pub fn power_from_intensity(intensity: f64, diameter: f64) -> f64 {
    intensity * PI * (diameter / 2.0).powi(2)
}

/// One column of the optimal-parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub order: u32,
    /// π-pulse length [1/ω_r].
    pub duration_recoil: f64,
    /// Ω₂ [rad/s].
    pub two_photon_rabi: f64,
    /// Ω_2n [rad/s].
    pub effective_rabi: f64,
    /// [W/m²]
    pub intensity: f64,
    /// [W]
    pub power_bec: f64,
    /// [W]
    pub power_velocity_selected: f64,
    /// Spontaneous loss probability of the π pulse.
    pub spontaneous_loss: f64,
}

/// Regenerates the optimal-parameter table from per-order π-pulse lengths.
pub fn optimal_parameter_table(
    orders: &[u32],
    durations_recoil: &[f64],
    detuning: f64,
    diameter_bec: f64,
    diameter_velocity_selected: f64,
    species: &AtomSpecies,
) -> Result<Vec<TableRow>> {
    if orders.len() != durations_recoil.len() {
        return Err(Error::validation(
            "durations",
            format!(
                "{} orders but {} durations",
                orders.len(),
                durations_recoil.len()
            ),
        ));
    }
    let wr = recoil_frequency(species);
    orders
        .iter()
        .zip(durations_recoil)
        .map(|(&order, &tau)| {
            if order < 1 {
                return Err(Error::validation("order", "must be at least 1"));
            }
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::validation(
                    "durations",
                    format!("pulse length must be positive, got {tau}"),
                ));
            }
            let duration = tau / wr;
            let om2 = two_photon_rabi_for_area(order, PI, duration, species);
            let pulse = BraggPulse::square(order, om2, detuning, duration)?;
            let intensity = intensity_from_rabi(om2, detuning, species);
            Ok(TableRow {
                order,
                duration_recoil: tau,
                two_photon_rabi: om2,
                effective_rabi: effective_rabi(order, om2, species),
                intensity,
                power_bec: power_from_intensity(intensity, diameter_bec),
                power_velocity_selected: power_from_intensity(
                    intensity,
                    diameter_velocity_selected,
                ),
                spontaneous_loss: crate::dynamics::spontaneous_loss(&pulse, species).probability,
            })
        })
        .collect()
}

/// The table with the bundled orders, durations, detuning and diameters.
pub fn default_parameter_table(species: &AtomSpecies) -> Result<Vec<TableRow>> {
    optimal_parameter_table(
        &TABLE_ORDERS,
        &TABLE_DURATIONS,
        TABLE_DETUNING,
        TABLE_DIAMETER_BEC,
        TABLE_DIAMETER_VELOCITY_SELECTED,
        species,
    )
}

/// Table as CSV with quantities as rows and orders as columns.
pub fn table_csv(rows: &[TableRow], species: &AtomSpecies) -> String {
    let wr = recoil_frequency(species);
    let mut out = String::new();
    let mut line = |label: &str, f: &dyn Fn(&TableRow) -> String| {
        out.push_str(label);
        for r in rows {
            out.push(',');
            out.push_str(&f(r));
        }
        out.push('\n');
    };
    line("diffraction_order_n", &|r| r.order.to_string());
    line("pulse_duration_per_omega_r", &|r| {
        format!("{:e}", r.duration_recoil)
    });
    line("two_photon_rabi_per_omega_r", &|r| {
        format!("{:e}", r.two_photon_rabi / wr)
    });
    line("laser_intensity_mw_cm2", &|r| {
        format!("{:e}", r.intensity / MW_PER_CM2)
    });
    line("laser_power_bec_mw", &|r| {
        format!("{:e}", r.power_bec * 1e3)
    });
    line("laser_power_velocity_selected_mw", &|r| {
        format!("{:e}", r.power_velocity_selected * 1e3)
    });
    line("effective_rabi_per_omega_r", &|r| {
        format!("{:e}", r.effective_rabi / wr)
    });
    line("spontaneous_loss", &|r| format!("{:e}", r.spontaneous_loss));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    AtLeast { value: f64 },
    AtMost { value: f64 },
    Within { lower: f64, upper: f64 },
}

impl Bound {
    pub fn admits(&self, x: f64) -> bool {
        match *self {
            Bound::AtLeast { value } => x >= value,
            Bound::AtMost { value } => x <= value,
            Bound::Within { lower, upper } => lower <= x && x <= upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementEntry {
    pub name: String,
    /// Symbol used in the human report.
    pub symbol: String,
    /// SI unit of `bound` and `configured`.
    pub unit: String,
    /// Bound used for pass/fail (includes any margin).
    pub bound: Bound,
    /// Raw bound without margin.
    pub equality: Bound,
    pub configured: f64,
    pub pass: bool,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementReport {
    pub entries: Vec<RequirementEntry>,
}

impl RequirementReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&RequirementEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Human-readable report, 4 significant figures in display units.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let (scale, unit) = display_unit(&e.name);
            let bound = match e.bound {
                Bound::AtLeast { value } => format!(">= {} {unit}", sig4(value * scale)),
                Bound::AtMost { value } => format!("<= {} {unit}", sig4(value * scale)),
                Bound::Within { lower, upper } => format!(
                    "in [{}, {}] {unit}",
                    sig4(lower * scale),
                    sig4(upper * scale)
                ),
            };
            let headline = match e.equality {
                Bound::AtLeast { value } | Bound::AtMost { value } => {
                    format!("{} = {} {unit}", e.symbol, sig4(value * scale))
                }
                Bound::Within { lower, upper } => format!(
                    "{} = [{}, {}] {unit}",
                    e.symbol,
                    sig4(lower * scale),
                    sig4(upper * scale)
                ),
            };
            let _ = writeln!(
                out,
                "[{}] {}: {headline}; required {bound}; configured {} {unit}  ({})",
                if e.pass { "PASS" } else { "FAIL" },
                e.name,
                sig4(e.configured * scale),
                e.formula
            );
        }
        let _ = writeln!(
            out,
            "overall: {}",
            if self.all_pass() { "PASS" } else { "FAIL" }
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn display_unit(entry: &str) -> (f64, &'static str) {
    match entry {
        "longitudinal_temperature" => (1e6, "uK"),
        "pulse_duration" => (1e6, "us"),
        "beam_diameter" => (1e3, "mm"),
        "curvature" => (1e-3, "km"),
        "detuning" => (1.0 / TWO_PI / 1e9, "GHz (Delta/2pi)"),
        "fall_time" => (1e3, "ms"),
        _ => (1.0, ""),
    }
}

/// Formats `x` with four significant figures.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.3e}");
    }
    let decimals = (3 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Evaluates every design bound for `config`.
pub fn evaluate_requirements(config: &ApparatusConfig) -> Result<RequirementReport> {
    config.validate()?;
    let s = &config.species;
    let margin = STRONG_INEQUALITY_MARGIN;
    let mut entries = Vec::with_capacity(6);

    let t_lim = longitudinal_temperature_limit(s);
    entries.push(entry(
        "longitudinal_temperature",
        "T_par_limit",
        "K",
        Bound::AtMost {
            value: t_lim / margin,
        },
        Bound::AtMost { value: t_lim },
        config.cloud.longitudinal_temperature,
        "(hbar k)^2/(M k_B), x10 margin",
    ));

    let window = pulse_duration_window(&config.cloud, s);
    let shrunk = window.with_margin(margin);
    entries.push(entry(
        "pulse_duration",
        "tau_window",
        "s",
        Bound::Within {
            lower: shrunk.min,
            upper: shrunk.max,
        },
        Bound::Within {
            lower: window.min,
            upper: window.max,
        },
        config.pi_pulse_duration(),
        "2k dp/M << 1/tau << delta_B, x10 margins",
    ));

    let w_min = min_beam_diameter(
        &config.cloud,
        s,
        config.first_pulse_time,
        config.interrogation_time,
    );
    entries.push(entry(
        "beam_diameter",
        "w_min",
        "m",
        Bound::AtLeast { value: w_min },
        Bound::AtLeast { value: w_min },
        config.beam_diameter,
        "2 sqrt(r0^2 + v^2 (t0 + 2T)^2)",
    ));

    let r_min = min_curvature(&config.cloud, s, config.target_accuracy)?;
    entries.push(entry(
        "curvature",
        "R_min",
        "m",
        Bound::AtLeast { value: r_min },
        Bound::AtLeast { value: r_min },
        config.curvature,
        "v^2 / target accuracy",
    ));

    let area = config.two_photon_rabi * config.pi_pulse_duration();
    let d_min = min_detuning(area, config.loss_budget, s)?;
    entries.push(entry(
        "detuning",
        "Delta_min",
        "rad/s",
        Bound::AtLeast { value: d_min },
        Bound::AtLeast { value: d_min },
        config.detuning,
        "Omega_2 tau Gamma / (2 N_s)",
    ));

    let t_fall = min_fall_time(config.order, s, config.g);
    entries.push(entry(
        "fall_time",
        "t_fall_min",
        "s",
        Bound::AtLeast { value: t_fall },
        Bound::AtLeast { value: t_fall },
        config.first_pulse_time,
        "n delta_B / (2 k g)",
    ));

    Ok(RequirementReport { entries })
}

fn entry(
    name: &str,
    symbol: &str,
    unit: &str,
    bound: Bound,
    equality: Bound,
    configured: f64,
    formula: &str,
) -> RequirementEntry {
    RequirementEntry {
        name: name.to_string(),
        symbol: symbol.to_string(),
        unit: unit.to_string(),
        pass: bound.admits(configured),
        bound,
        equality,
        configured,
        formula: formula.to_string(),
    }
}
