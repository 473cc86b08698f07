use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{interferometer_phase, output_populations};
use crate::error::{Error, Result};
use crate::requirements::ApparatusConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    /// x is the chirp rate α [Hz/s].
    ChirpRate,
    /// x is the laser phase φ_L [rad].
    LaserPhase,
}

impl ScanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanKind::ChirpRate => "chirp_rate",
            ScanKind::LaserPhase => "laser_phase",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "chirp_rate" => Ok(ScanKind::ChirpRate),
            "laser_phase" => Ok(ScanKind::LaserPhase),
            other => Err(Error::parse(
                "fringe scan",
                format!("unknown scan_kind `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub x: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Additive Gaussian detection noise on P₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub order: u32,
    /// [s]
    pub interrogation_time: f64,
    /// [s]
    pub first_pulse_time: f64,
    pub contrast: f64,
    pub species: String,
    /// Gravity used to generate the scan [m/s²].
    pub g_true: Option<f64>,
    /// Fixed chirp of a laser-phase scan [Hz/s].
    pub chirp_rate: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub seed: Option<u64>,
}

/// A sampled interference curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub kind: ScanKind,
    pub points: Vec<FringePoint>,
    pub metadata: ScanMetadata,
}

fn validate_common(contrast: f64, samples: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&contrast) {
        return Err(Error::Domain(format!(
            "contrast must lie in [0, 1], got {contrast}"
        )));
    }
    if samples < 2 {
        return Err(Error::validation(
            "samples",
            "need at least two scan points",
        ));
    }
    Ok(())
}

fn grid(lo: f64, hi: f64, samples: usize) -> impl IndexedParallelIterator<Item = f64> {
    let step = (hi - lo) / (samples - 1) as f64;
    (0..samples).into_par_iter().map(move |i| {
        if i + 1 == samples {
            hi
        } else {
            lo + step * i as f64
        }
    })
}

/// Sweeps the chirp rate over `chirp_range` [Hz/s] for each pulse separation
/// in `interrogation_times` [s], producing one scan per separation.
pub fn chirp_scan(
    config: &ApparatusConfig,
    contrast: f64,
    interrogation_times: &[f64],
    chirp_range: (f64, f64),
    samples: usize,
) -> Result<Vec<FringeScan>> {
    validate_common(contrast, samples)?;
    if interrogation_times.is_empty() {
        return Err(Error::validation(
            "interrogation_times",
            "need at least one pulse separation",
        ));
    }
    let (lo, hi) = chirp_range;
    if !(hi > lo) {
        return Err(Error::validation(
            "chirp_range",
            format!("empty range [{lo}, {hi}]"),
        ));
    }
    interrogation_times
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::validation(
                    "interrogation_times",
                    format!("pulse separation must be positive, got {t}"),
                ));
            }
            let points = grid(lo, hi, samples)
                .map(|alpha| {
                    let phase = interferometer_phase(
                        config.order,
                        &config.species,
                        config.g,
                        alpha,
                        t,
                        0.0,
                    );
                    let (p1, p2) = output_populations(phase, contrast)?;
                    Ok(FringePoint { x: alpha, p1, p2 })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FringeScan {
                kind: ScanKind::ChirpRate,
                points,
                metadata: ScanMetadata {
                    order: config.order,
                    interrogation_time: t,
                    first_pulse_time: config.first_pulse_time,
                    contrast,
                    species: config.species.name.clone(),
                    g_true: Some(config.g),
                    chirp_rate: None,
                    noise_sigma: None,
                    seed: None,
                },
            })
        })
        .collect()
}

/// Sweeps the laser phase over `phase_range` [rad] at fixed chirp `chirp_rate`.
pub fn phase_scan(
    config: &ApparatusConfig,
    contrast: f64,
    chirp_rate: f64,
    phase_range: (f64, f64),
    samples: usize,
    noise: Option<NoiseModel>,
) -> Result<FringeScan> {
    validate_common(contrast, samples)?;
    let (lo, hi) = phase_range;
    if !(hi > lo) {
        return Err(Error::validation(
            "phase_range",
            format!("empty range [{lo}, {hi}]"),
        ));
    }
    let t = config.interrogation_time;
    let mut points = grid(lo, hi, samples)
        .map(|phi| {
            let phase =
                interferometer_phase(config.order, &config.species, config.g, chirp_rate, t, phi);
            let (p1, p2) = output_populations(phase, contrast)?;
            Ok(FringePoint { x: phi, p1, p2 })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(noise) = noise {
        let normal = Normal::new(0.0, noise.sigma)
            .map_err(|e| Error::validation("noise_sigma", format!("invalid noise level: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for p in &mut points {
            p.p1 = (p.p1 + normal.sample(&mut rng)).clamp(0.0, 1.0);
            p.p2 = 1.0 - p.p1;
        }
    }
    Ok(FringeScan {
        kind: ScanKind::LaserPhase,
        points,
        metadata: ScanMetadata {
            order: config.order,
            interrogation_time: t,
            first_pulse_time: config.first_pulse_time,
            contrast,
            species: config.species.name.clone(),
            g_true: Some(config.g),
            chirp_rate: Some(chirp_rate),
            noise_sigma: noise.map(|n| n.sigma),
            seed: noise.map(|n| n.seed),
        },
    })
}

impl FringeScan {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn p1(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p1).collect()
    }

    /// CSV with a `# key = value` metadata block followed by `x,P1,P2` rows.
    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let _ = writeln!(out, "# scan_kind = {}", self.kind.as_str());
        let _ = writeln!(out, "# order = {}", m.order);
        let _ = writeln!(out, "# interrogation_time_s = {:e}", m.interrogation_time);
        let _ = writeln!(out, "# first_pulse_time_s = {:e}", m.first_pulse_time);
        let _ = writeln!(out, "# contrast = {:e}", m.contrast);
        let _ = writeln!(out, "# species = {}", m.species);
        if let Some(g) = m.g_true {
            let _ = writeln!(out, "# g_true_m_s2 = {g:e}");
        }
        if let Some(a) = m.chirp_rate {
            let _ = writeln!(out, "# chirp_rate_hz_s = {a:e}");
        }
        if let Some(s) = m.noise_sigma {
            let _ = writeln!(out, "# noise_sigma = {s:e}");
        }
        if let Some(s) = m.seed {
            let _ = writeln!(out, "# seed = {s}");
        }
        out.push_str("x,P1,P2\n");
        for p in &self.points {
            let _ = writeln!(out, "{:e},{:e},{:e}", p.x, p.p1, p.p2);
        }
        out
    }

    /// Parses [`FringeScan::to_csv`] output. Unknown metadata keys are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |msg: String| Error::parse("fringe scan", msg);
        let mut kind = None;
        let mut order = None;
        let mut interrogation_time = None;
        let mut first_pulse_time = 0.0;
        let mut contrast = None;
        let mut species = String::new();
        let mut g_true = None;
        let mut chirp_rate = None;
        let mut noise_sigma = None;
        let mut seed = None;
        let mut points = Vec::new();
        let mut seen_header = false;

        let num = |key: &str, v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|e| Error::parse("fringe scan", format!("bad `{key}` value `{v}`: {e}")))
        };

        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((key, value)) = meta.split_once('=') else {
                    continue;
                };
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "scan_kind" => kind = Some(ScanKind::parse(value)?),
                    "order" => {
                        order = Some(
                            value
                                .parse::<u32>()
                                .map_err(|e| err(format!("bad order: {e}")))?,
                        )
                    }
                    "interrogation_time_s" => interrogation_time = Some(num(key, value)?),
                    "first_pulse_time_s" => first_pulse_time = num(key, value)?,
                    "contrast" => contrast = Some(num(key, value)?),
                    "species" => species = value.to_string(),
                    "g_true_m_s2" => g_true = Some(num(key, value)?),
                    "chirp_rate_hz_s" => chirp_rate = Some(num(key, value)?),
                    "noise_sigma" => noise_sigma = Some(num(key, value)?),
                    "seed" => {
                        seed = Some(
                            value
                                .parse::<u64>()
                                .map_err(|e| err(format!("bad seed: {e}")))?,
                        )
                    }
                    _ => {}
                }
                continue;
            }
            if !seen_header {
                if line != "x,P1,P2" {
                    return Err(err(format!("expected header `x,P1,P2`, found `{line}`")));
                }
                seen_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(err(format!("line {}: expected 3 columns", lineno + 1)));
            }
            points.push(FringePoint {
                x: num("x", cols[0])?,
                p1: num("P1", cols[1])?,
                p2: num("P2", cols[2])?,
            });
        }
        Ok(FringeScan {
            kind: kind.ok_or_else(|| err("missing scan_kind".into()))?,
            points,
            metadata: ScanMetadata {
                order: order.ok_or_else(|| err("missing order".into()))?,
                interrogation_time: interrogation_time
                    .ok_or_else(|| err("missing interrogation_time_s".into()))?,
                first_pulse_time,
                contrast: contrast.ok_or_else(|| err("missing contrast".into()))?,
                species,
                g_true,
                chirp_rate,
                noise_sigma,
                seed,
            },
        })
    }
}
