use std::f64::consts::TAU;

use anyhow::{bail, Context, Result};
use bragg_core::atoms::{bragg_bandwidth, recoil_frequency, resonant_chirp_rate};
use bragg_core::constants::angular_to_hz;
use bragg_core::dynamics::{
    envelopes, ladder_evolve, propagators, pulse_durations, BraggPulse, FrequencyRamp,
    LadderBounds, LadderState, StepControl,
};
use bragg_core::interferometer::{
    chirp_scan, find_resonant_chirp, gravity_from_chirp, phase_scan, phase_scan_fit,
    thermal_contrast, NoiseModel,
};
use bragg_core::requirements::{
    evaluate_requirements, optimal_parameter_table, sig4, table_csv, ApparatusConfig,
    TABLE_DIAMETER_BEC, TABLE_DIAMETER_VELOCITY_SELECTED, TABLE_DURATIONS, TABLE_ORDERS,
};
use bragg_core::sequencer::{build_schedule, export_schedule, validate_schedule, ScheduleFormat};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::{resolve_apparatus, ConfigFile};
use crate::output::{OutputDir, Provenance};
use crate::{Common, Format};

pub enum Status {
    Pass,
    Fail,
}

struct Context_ {
    file: ConfigFile,
    config: ApparatusConfig,
}

fn load(common: &Common) -> Result<Context_> {
    let file = match &common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let config = resolve_apparatus(&file, common.species.as_deref(), &common.overrides)?;
    Ok(Context_ { file, config })
}

fn finish(out: &OutputDir) {
    for path in out.written() {
        println!("wrote {}", path.display());
    }
}

pub fn requirements(common: &Common) -> Result<Status> {
    let ctx = load(common)?;
    let report = evaluate_requirements(&ctx.config)?;
    let prov = Provenance::new("requirements", &ctx.config.species.name, &ctx.config, None)?;
    let text = report.to_text();
    let mut out = OutputDir::create(&common.out)?;
    out.write(
        "requirements.txt",
        &format!("{}{text}", prov.comment_header()),
    )?;
    out.write("requirements.json", &prov.json_document(&report)?)?;
    print!("{text}");
    finish(&out);
    Ok(if report.all_pass() {
        Status::Pass
    } else {
        Status::Fail
    })
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Diffraction orders (comma separated)
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<u32>>,
    /// π-pulse lengths in units of 1/ω_r, one per order
    #[arg(long, value_delimiter = ',')]
    durations: Option<Vec<f64>>,
    /// Beam diameter for the BEC power row [mm]
    #[arg(long = "bec-diameter-mm")]
    bec_diameter_mm: Option<f64>,
    /// Beam diameter for the velocity-selected power row [mm]
    #[arg(long = "vs-diameter-mm")]
    vs_diameter_mm: Option<f64>,
}

#[derive(Serialize)]
struct TableInputs<'a> {
    config: &'a ApparatusConfig,
    orders: &'a [u32],
    durations_recoil: &'a [f64],
    diameter_bec: f64,
    diameter_velocity_selected: f64,
}

pub fn table1(common: &Common, args: &TableArgs) -> Result<Status> {
    let ctx = load(common)?;
    let t = &ctx.file.table1;
    let orders = args
        .orders
        .clone()
        .or_else(|| t.orders.clone())
        .unwrap_or_else(|| TABLE_ORDERS.to_vec());
    let durations = match args
        .durations
        .clone()
        .or_else(|| t.durations_recoil.clone())
    {
        Some(d) => d,
        None => orders
            .iter()
            .map(|n| {
                TABLE_ORDERS
                    .iter()
                    .position(|m| m == n)
                    .map(|i| TABLE_DURATIONS[i])
                    .with_context(|| {
                        format!("no default pulse length for order {n}; pass --durations")
                    })
            })
            .collect::<Result<_>>()?,
    };
    let bec = args
        .bec_diameter_mm
        .or(t.bec_diameter_mm)
        .map_or(TABLE_DIAMETER_BEC, |d| d * 1e-3);
    let vs = args
        .vs_diameter_mm
        .or(t.velocity_selected_diameter_mm)
        .map_or(TABLE_DIAMETER_VELOCITY_SELECTED, |d| d * 1e-3);
    let species = &ctx.config.species;
    let rows = optimal_parameter_table(&orders, &durations, ctx.config.detuning, bec, vs, species)?;
    let inputs = TableInputs {
        config: &ctx.config,
        orders: &orders,
        durations_recoil: &durations,
        diameter_bec: bec,
        diameter_velocity_selected: vs,
    };
    let prov = Provenance::new("table1", &species.name, &inputs, None)?;
    let csv = table_csv(&rows, species);
    let mut out = OutputDir::create(&common.out)?;
    out.write("table1.csv", &format!("{}{csv}", prov.comment_header()))?;
    print!("{csv}");
    finish(&out);
    Ok(Status::Pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Sweep the chirp rate for several pulse separations
    Chirp,
    /// Sweep the laser phase at the resonant chirp and fit the fringe
    Phase,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    mode: Option<ScanMode>,
    /// Pulse separations for chirp scans [ms, comma separated]
    #[arg(long = "t-values-ms", value_delimiter = ',')]
    t_values_ms: Option<Vec<f64>>,
    /// Lower end of the chirp sweep [MHz/s]
    #[arg(long = "chirp-min")]
    chirp_min: Option<f64>,
    /// Upper end of the chirp sweep [MHz/s]
    #[arg(long = "chirp-max")]
    chirp_max: Option<f64>,
    /// Points per scan
    #[arg(long)]
    samples: Option<usize>,
    /// Fringe contrast V
    #[arg(long)]
    contrast: Option<f64>,
    /// Estimate V from a thermal Monte-Carlo with this many atoms instead
    #[arg(long = "thermal-atoms")]
    thermal_atoms: Option<usize>,
    /// Gaussian detection noise on P1 (phase scans)
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Serialize)]
struct SimulateInputs<'a> {
    config: &'a ApparatusConfig,
    mode: ScanMode,
    interrogation_times: &'a [f64],
    chirp_range: Option<(f64, f64)>,
    samples: usize,
    contrast: Option<f64>,
    thermal_atoms: Option<usize>,
    noise_sigma: f64,
    seed: u64,
}

pub fn simulate(common: &Common, args: &SimulateArgs) -> Result<Status> {
    let ctx = load(common)?;
    let s = &ctx.file.simulate;
    let c = &ctx.config;
    let mode = match args.mode {
        Some(m) => m,
        None => match s.mode.as_deref() {
            None | Some("chirp") => ScanMode::Chirp,
            Some("phase") => ScanMode::Phase,
            Some(other) => bail!("unknown simulate mode `{other}` (expected chirp or phase)"),
        },
    };
    let seed = common.seed.unwrap_or(0);
    let ts: Vec<f64> = args
        .t_values_ms
        .clone()
        .or_else(|| s.interrogation_times_ms.clone())
        .unwrap_or_else(|| vec![40.0, 50.0, 60.0])
        .iter()
        .map(|t| t * 1e-3)
        .collect();
    let chirp_range = match (
        args.chirp_min.or(s.chirp_min_mhz_s),
        args.chirp_max.or(s.chirp_max_mhz_s),
    ) {
        (Some(lo), Some(hi)) => Some((lo * 1e6, hi * 1e6)),
        (None, None) => None,
        _ => bail!("give both ends of the chirp range or neither"),
    };
    let samples = args.samples.or(s.samples).unwrap_or(match mode {
        ScanMode::Chirp => 2001,
        ScanMode::Phase => 100,
    });
    let noise_sigma = args.noise.or(s.noise_sigma).unwrap_or(0.0);
    let thermal_atoms = args.thermal_atoms.or(s.thermal_atoms);
    let fixed_contrast = args.contrast.or(s.contrast);
    let inputs = SimulateInputs {
        config: c,
        mode,
        interrogation_times: &ts,
        chirp_range,
        samples,
        contrast: fixed_contrast,
        thermal_atoms,
        noise_sigma,
        seed,
    };
    let prov = Provenance::new("simulate", &c.species.name, &inputs, Some(seed))?;
    let mut out = OutputDir::create(&common.out)?;

    let thermal = thermal_atoms
        .map(|n| thermal_contrast(c, n, seed))
        .transpose()?;
    let contrast = match (&thermal, fixed_contrast) {
        (Some(t), _) => t.contrast,
        (None, Some(v)) => v,
        (None, None) => match mode {
            ScanMode::Chirp => 1.0,
            ScanMode::Phase => 0.8,
        },
    };
    if let Some(t) = &thermal {
        println!(
            "thermal contrast V = {} from {} atoms (seed {})",
            sig4(t.contrast),
            t.n_atoms,
            t.seed
        );
    }
    let a0 = resonant_chirp_rate(&c.species, c.g);

    match mode {
        ScanMode::Chirp => {
            if ts.is_empty() {
                bail!("no pulse separations given");
            }
            let range = chirp_range.unwrap_or_else(|| {
                // a window shorter than one fringe of the shortest T around
                // the nominal resonance, so only the central fringe is inside
                let t_min = ts.iter().copied().fold(f64::INFINITY, f64::min);
                let period = 1.0 / (c.order as f64 * t_min * t_min);
                (a0 - 0.4 * period, a0 + 0.5 * period)
            });
            let scans = chirp_scan(c, contrast, &ts, range, samples)?;
            for scan in &scans {
                let name = format!(
                    "chirp_scan_T{}ms.csv",
                    scan.metadata.interrogation_time * 1e3
                );
                out.write(
                    &name,
                    &format!("{}{}", prov.comment_header(), scan.to_csv()),
                )?;
            }
            let mut distinct = ts.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            if distinct.len() >= 2 {
                let found = find_resonant_chirp(&scans)?;
                let g = gravity_from_chirp(found.chirp_rate, &c.species);
                let summary = json!({
                    "resonant_chirp_hz_s": found.chirp_rate,
                    "gravity_m_s2": g,
                    "relative_error": g / c.g - 1.0,
                    "residual": found.residual,
                    "extremum": found.kind,
                    "aliases_hz_s": found.aliases,
                    "contrast": contrast,
                    "thermal": thermal,
                });
                write_record(&mut out, common.format, "resonance", &prov, &summary)?;
                println!(
                    "alpha0 = {} MHz/s, g = {} m/s^2 (simulated {}, relative error {:.2e}), residual {:.2e}",
                    sig4(found.chirp_rate / 1e6),
                    g,
                    c.g,
                    g / c.g - 1.0,
                    found.residual
                );
                if !found.aliases.is_empty() {
                    println!(
                        "{} other exact fringe coincidences in range; narrow the chirp window to disambiguate",
                        found.aliases.len()
                    );
                }
            } else {
                println!("single pulse separation: no resonance search");
            }
        }
        ScanMode::Phase => {
            let noise = (noise_sigma > 0.0).then_some(NoiseModel {
                sigma: noise_sigma,
                seed,
            });
            let scan = phase_scan(
                c,
                contrast,
                a0,
                (0.0, TAU * (1.0 - 1.0 / samples as f64)),
                samples,
                noise,
            )?;
            out.write(
                "phase_scan.csv",
                &format!("{}{}", prov.comment_header(), scan.to_csv()),
            )?;
            let fit = phase_scan_fit(&scan)?;
            let summary = json!({
                "fit": fit,
                "contrast": fit.contrast(),
                "contrast_err": fit.contrast_err(),
                "generated_contrast": contrast,
                "thermal": thermal,
            });
            write_record(&mut out, common.format, "phase_fit", &prov, &summary)?;
            println!(
                "contrast = {} +/- {}, phase = {} +/- {} rad, offset = {}",
                sig4(fit.contrast()),
                sig4(fit.contrast_err()),
                sig4(fit.phase),
                sig4(fit.phase_err),
                sig4(fit.offset)
            );
        }
    }
    finish(&out);
    Ok(Status::Pass)
}

/// Fit and resonance summaries: JSON record, or a two-column CSV of scalars.
fn write_record(
    out: &mut OutputDir,
    format: Option<Format>,
    stem: &str,
    prov: &Provenance,
    body: &serde_json::Value,
) -> Result<()> {
    if format != Some(Format::Csv) {
        out.write(&format!("{stem}.json"), &prov.json_document(body)?)?;
    }
    if format != Some(Format::Record) {
        let mut csv = prov.comment_header();
        csv.push_str("key,value\n");
        flatten_scalars("", body, &mut csv);
        out.write(&format!("{stem}.csv"), &csv)?;
    }
    Ok(())
}

fn flatten_scalars(prefix: &str, v: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_scalars(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_scalars(&format!("{prefix}.{i}"), v, out);
            }
        }
        Value::Null => {}
        scalar => {
            let text = match scalar {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{prefix},{text}\n"));
        }
    }
}

pub fn sequence(common: &Common) -> Result<Status> {
    let ctx = load(common)?;
    let c = &ctx.config;
    let schedule = build_schedule(c, c.two_photon_rabi)?;
    let violations = validate_schedule(&schedule, c);
    let prov = Provenance::new("sequence", &c.species.name, c, None)?;
    let mut out = OutputDir::create(&common.out)?;
    if common.format != Some(Format::Record) {
        let csv = export_schedule(&schedule, ScheduleFormat::Csv);
        out.write("schedule.csv", &format!("{}{csv}", prov.comment_header()))?;
    }
    if common.format != Some(Format::Csv) {
        out.write("schedule.json", &prov.json_document(&schedule)?)?;
    }

    let db = bragg_bandwidth(&c.species);
    let first = schedule.events.first().map_or(0.0, |e| e.freq_offset_start);
    let slope = schedule.events.first().map_or(0.0, |e| e.chirp_slope);
    let tau = pulse_durations(bragg_core::dynamics::effective_rabi(
        c.order,
        c.two_photon_rabi,
        &c.species,
    ));
    let centres: Vec<String> = schedule
        .pulse_centres()
        .iter()
        .map(|t| format!("{} ms", sig4(t * 1e3)))
        .collect();
    println!("pulse centres: {}", centres.join(", "));
    println!(
        "pulse lengths: pi/2 = {} us, pi = {} us",
        sig4(tau.half_pi * 1e6),
        sig4(tau.pi * 1e6)
    );
    println!(
        "initial offset = {} delta_B ({} kHz), chirp = {} MHz/s, detection at {} ms",
        sig4(first / db),
        sig4(angular_to_hz(first) / 1e3),
        sig4(angular_to_hz(slope) / 1e6),
        sig4(schedule.detection_time() * 1e3)
    );
    finish(&out);
    if violations.is_empty() {
        println!("schedule valid");
        Ok(Status::Pass)
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Ok(Status::Fail)
    }
}

#[derive(Debug, Clone, Args)]
pub struct LadderArgs {
    /// Ladder integrator
    #[arg(long)]
    propagator: Option<String>,
    /// Pulse envelope
    #[arg(long)]
    envelope: Option<String>,
    /// Gaussian envelope width sigma [us]
    #[arg(long = "envelope-width-us")]
    envelope_width_us: Option<f64>,
    /// Pulse length [us]; defaults to the π-pulse length
    #[arg(long = "duration-us")]
    duration_us: Option<f64>,
    /// Largest ladder the automatic widening may reach
    #[arg(long = "max-states")]
    max_states: Option<usize>,
    /// Recorded trajectory samples
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Serialize)]
struct LadderInputs<'a> {
    config: &'a ApparatusConfig,
    propagator: &'a str,
    envelope: &'a str,
    envelope_width: Option<f64>,
    duration: f64,
    max_states: usize,
    samples: usize,
}

pub fn ladder(common: &Common, args: &LadderArgs) -> Result<Status> {
    let ctx = load(common)?;
    let l = &ctx.file.ladder;
    let c = &ctx.config;
    let prop_name = args
        .propagator
        .clone()
        .or_else(|| l.propagator.clone())
        .unwrap_or_else(|| "dopri5".into());
    let env_name = args
        .envelope
        .clone()
        .or_else(|| l.envelope.clone())
        .unwrap_or_else(|| "square".into());
    let width = args
        .envelope_width_us
        .or(l.envelope_width_us)
        .map(|w| w * 1e-6);
    let duration = args
        .duration_us
        .or(l.duration_us)
        .map_or_else(|| c.pi_pulse_duration(), |d| d * 1e-6);
    let max_states = args.max_states.or(l.max_states).unwrap_or(101);
    let samples = args.samples.or(l.samples).unwrap_or(201);

    let registry = propagators();
    let propagator = registry.get(&prop_name)?;
    let envelope = (envelopes().get(&env_name)?)(width)?;
    let pulse = BraggPulse::new(c.order, c.two_photon_rabi, c.detuning, duration, envelope)?;
    let n = c.order as i32;
    let initial = LadderState::at_rest(-2, n + 2)?;
    let ramp = FrequencyRamp::constant(c.order as f64 * bragg_bandwidth(&c.species));
    let control = StepControl {
        samples,
        ..StepControl::default()
    };
    let traj = ladder_evolve(
        &initial,
        &pulse,
        &ramp,
        &c.species,
        propagator.as_ref(),
        &control,
        LadderBounds::Auto { max_states },
    )?;

    let inputs = LadderInputs {
        config: c,
        propagator: &prop_name,
        envelope: &env_name,
        envelope_width: width,
        duration,
        max_states,
        samples,
    };
    let prov = Provenance::new("ladder", &c.species.name, &inputs, None)?;
    let mut out = OutputDir::create(&common.out)?;
    out.write(
        "ladder.csv",
        &format!("{}{}", prov.comment_header(), traj.to_csv()),
    )?;
    let fin = traj.final_state();
    let wr = recoil_frequency(&c.species);
    let summary = json!({
        "propagator": traj.propagator,
        "steps": traj.steps,
        "duration_recoil": duration * wr,
        "ladder": [fin.m_min, fin.m_max()],
        "population_initial": fin.population(0),
        "population_target": fin.population(n),
        "max_norm_error": traj.max_norm_error(),
        "max_edge_population": traj.max_edge_population(),
    });
    write_record(&mut out, common.format, "ladder_summary", &prov, &summary)?;
    println!(
        "{} steps with {}: P(m=0) = {}, P(m={n}) = {}, ladder {}..{}, max norm error {:.2e}",
        traj.steps,
        traj.propagator,
        sig4(fin.population(0)),
        sig4(fin.population(n)),
        fin.m_min,
        fin.m_max(),
        traj.max_norm_error()
    );
    finish(&out);
    Ok(Status::Pass)
}
