//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use bragg_core::atoms::{bragg_bandwidth, recoil_frequency, resonant_chirp_rate, AtomSpecies};
use bragg_core::constants::{hz_to_angular, TWO_PI};
use bragg_core::dynamics::{
    effective_rabi, fit_rabi_frequency, intermediate_detuning, ladder_evolve, min_detuning,
    BraggPulse, DormandPrince, FrequencyRamp, LadderBounds, LadderPropagator, LadderState,
    SplitStep, StepControl,
};
use bragg_core::interferometer::{
    chirp_scan, find_resonant_chirp, gravity_from_chirp, output_populations,
};
use bragg_core::requirements::{
    default_parameter_table, longitudinal_temperature_limit, min_beam_diameter, min_curvature,
    min_fall_time, power_from_intensity, rabi_from_intensity, ApparatusConfig, CloudSpec,
    TABLE_DURATIONS, TABLE_ORDERS,
};
use bragg_core::sequencer::{
    build_schedule, export_schedule, import_schedule_record, validate_schedule, ScheduleFormat,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn rel(value: f64, target: f64) -> f64 {
    (value / target - 1.0).abs()
}

fn expect(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rb() -> AtomSpecies {
    AtomSpecies::rubidium_87()
}

fn recoil_constants() -> Check {
    let s = rb();
    let wr = recoil_frequency(&s) / TWO_PI;
    let db = bragg_bandwidth(&s) / TWO_PI;
    expect(
        rel(wr, 3.77e3) <= 5e-3 && rel(db, 15.1e3) <= 5e-3,
        format!("ω_r/2π = {:.2} Hz, δ_B/2π = {:.1} Hz", wr, db),
    )
}

fn chirp_gravity_loop() -> Check {
    let s = rb();
    let a0 = resonant_chirp_rate(&s, 9.8);
    let g = gravity_from_chirp(a0, &s);
    expect(
        rel(a0, 25.1e6) <= 2e-3 && rel(g, 9.8) <= 1e-12,
        format!(
            "α₀ = {:.4} MHz/s, round trip error {:.1e}",
            a0 / 1e6,
            rel(g, 9.8)
        ),
    )
}

fn temperature_limit() -> Check {
    let t = longitudinal_temperature_limit(&rb());
    expect(
        rel(t, 0.36e-6) <= 0.02,
        format!("T_lim = {:.4} µK", t * 1e6),
    )
}

fn beam_geometry() -> Check {
    let s = rb();
    let target = 1e-9 * 9.8;
    let warm = CloudSpec::new(1.5e-3, 5e-6, 10e-9).map_err(|e| e.to_string())?;
    let bec = CloudSpec::new(1.5e-3, 0.36e-6, 10e-9).map_err(|e| e.to_string())?;
    let w = min_beam_diameter(&warm, &s, 20e-3, 50e-3);
    let w_bec = min_beam_diameter(&bec, &s, 20e-3, 50e-3);
    let r = min_curvature(&warm, &s, target).map_err(|e| e.to_string())?;
    let r_bec = min_curvature(&bec, &s, target).map_err(|e| e.to_string())?;
    expect(
        rel(w, 6.0e-3) <= 0.02 && rel(r, 48.8e3) <= 0.02 && rel(r_bec, 3.5e3) <= 0.03,
        format!(
            "w_min = {:.3} mm, R_min = {:.2} km (5 µK) / {:.3} km (0.36 µK); BEC w_min = {:.3} mm",
            w * 1e3,
            r / 1e3,
            r_bec / 1e3,
            w_bec * 1e3
        ),
    )
}

fn detuning_floor() -> Check {
    let d = min_detuning(PI, 0.01, &rb()).map_err(|e| e.to_string())? / TWO_PI;
    expect(
        (0.90e9..=1.00e9).contains(&d),
        format!("Δ_min/2π = {:.4} GHz", d / 1e9),
    )
}

fn table_regeneration() -> Check {
    let s = rb();
    let wr = recoil_frequency(&s);
    let rows = default_parameter_table(&s).map_err(|e| e.to_string())?;
    let table_rabi = [16.4, 38.7, 118.1, 254.6, 443.6, 685.5];
    let table_intensity = [18.0, 42.6, 130.0, 280.2, 488.2, 754.4];
    let table_bec = [1.7, 3.9, 11.9, 25.6, 44.6, 68.8];
    let table_vs = [5.1, 12.1, 36.9, 79.6, 138.7, 214.4];
    let mut worst = [0.0f64; 4];
    let mut ratios = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let intensity_mw_cm2 = r.intensity / 10.0;
        worst[0] = worst[0].max(rel(r.two_photon_rabi / wr, table_rabi[i]));
        worst[1] = worst[1].max(rel(intensity_mw_cm2, table_intensity[i]));
        worst[2] = worst[2].max(rel(r.power_bec * 1e3, table_bec[i]));
        worst[3] = worst[3].max(rel(r.power_velocity_selected * 1e3, table_vs[i]));
        // intensity tracks Ω₂ linearly at fixed detuning
        ratios.push(r.intensity / r.two_photon_rabi);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    let spread = hi / lo - 1.0;
    // the power columns follow from the intensity alone
    let consistent = rows.iter().all(|r| {
        rel(
            r.power_velocity_selected,
            power_from_intensity(r.intensity, 6e-3),
        ) < 1e-12
    });
    expect(
        rows.len() == 6
            && worst[0] <= 0.01
            && worst[1] <= 0.10
            && worst[2] <= 0.05
            && worst[3] <= 0.05
            && spread < 5e-3
            && consistent,
        format!(
            "max deviation Ω₂ {:.2}%, I {:.2}%, P_BEC {:.2}%, P_vs {:.2}%; I/Ω₂ spread {:.1e}",
            worst[0] * 100.0,
            worst[1] * 100.0,
            worst[2] * 100.0,
            worst[3] * 100.0,
            spread
        ),
    )
}

fn power_config(
    order: u32,
    power: f64,
    diameter: f64,
    detuning_hz: f64,
    t: f64,
    t0: f64,
) -> ApparatusConfig {
    let mut c = ApparatusConfig::typical();
    c.order = order;
    c.interrogation_time = t;
    c.first_pulse_time = t0;
    c.detuning = hz_to_angular(detuning_hz);
    c.beam_diameter = diameter;
    let intensity = power / (PI * (diameter / 2.0).powi(2));
    c.two_photon_rabi = rabi_from_intensity(intensity, c.detuning, &c.species);
    c
}

fn fall_time_gate() -> Check {
    let s = rb();
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [1u32, 2, 5] {
        let t = min_fall_time(n, &s, 9.8);
        ok &= rel(t, 0.6e-3 * n as f64) <= 0.02;
        parts.push(format!("n={n}: {:.4} ms", t * 1e3));
    }
    let mut early = power_config(2, 0.2, 7.5e-3, 3e9, 40e-3, 1e-3);
    let rejected = build_schedule(&early, early.two_photon_rabi).is_err();
    ok &= rejected;
    early.first_pulse_time = 2e-3;
    let second_order = build_schedule(&early, early.two_photon_rabi);
    let second_order_ok = second_order.as_ref().is_ok_and(|sch| {
        validate_schedule(sch, &early).is_empty()
            && sch.events[0].freq_offset_start == 2.0 * bragg_bandwidth(&s)
    });
    let short_cfg = power_config(1, 0.15, 3e-3, 90e9, 3e-3, 1e-3);
    let short_t = build_schedule(&short_cfg, short_cfg.two_photon_rabi);
    let short_t_ok = short_t.as_ref().is_ok_and(|sch| {
        validate_schedule(sch, &short_cfg).is_empty()
            && sch.events[0].freq_offset_start == bragg_bandwidth(&s)
    });
    ok &= second_order_ok && short_t_ok;
    expect(
        ok,
        format!(
            "{}; t₀ = 1 ms at n=2 rejected: {rejected}; n=2 T=40 ms valid: {second_order_ok}; n=1 T=3 ms valid: {short_t_ok}",
            parts.join(", ")
        ),
    )
}

fn closed_loop_gravimetry() -> Check {
    let c = ApparatusConfig::typical();
    let a0 = resonant_chirp_rate(&c.species, c.g);
    let mut parts = Vec::new();
    let mut ok = true;
    for v in [1.0, 0.5] {
        // window narrower than the 10 kHz/s coincidence period of these T values
        let scans = chirp_scan(&c, v, &[0.04, 0.05, 0.06], (a0 - 3.7e3, a0 + 4.3e3), 2001)
            .map_err(|e| e.to_string())?;
        let found = find_resonant_chirp(&scans).map_err(|e| e.to_string())?;
        let g = gravity_from_chirp(found.chirp_rate, &c.species);
        let err = rel(g, c.g);
        ok &= err <= 1e-5;
        parts.push(format!("V={v}: g error {err:.1e}"));
    }
    let wide = chirp_scan(&c, 1.0, &[0.04, 0.05, 0.06], (25.0e6, 25.2e6), 20001)
        .map_err(|e| e.to_string())?;
    let found = find_resonant_chirp(&wide).map_err(|e| e.to_string())?;
    let listed = std::iter::once(found.chirp_rate)
        .chain(found.aliases.iter().copied())
        .any(|x| rel(x, a0) <= 1e-5);
    ok &= listed;
    parts.push(format!(
        "25.0-25.2 MHz/s: {} coincidences, α₀ among them: {listed}",
        1 + found.aliases.len()
    ));
    expect(ok, parts.join("; "))
}

fn ladder_oracle() -> Check {
    let s = rb();
    let wr = recoil_frequency(&s);
    let control = StepControl::default();
    let mut worst_norm = 0.0f64;
    let mut transfer = f64::INFINITY;
    let om1 = 0.2 * wr;
    let pulse1 = BraggPulse::square(1, om1, 1e9, PI / om1).map_err(|e| e.to_string())?;
    for prop in [&DormandPrince as &dyn LadderPropagator, &SplitStep] {
        let traj = ladder_evolve(
            &LadderState::at_rest(-2, 3).map_err(|e| e.to_string())?,
            &pulse1,
            &FrequencyRamp::constant(4.0 * wr),
            &s,
            prop,
            &control,
            LadderBounds::default(),
        )
        .map_err(|e| e.to_string())?;
        transfer = transfer.min(traj.final_state().population(1));
        worst_norm = worst_norm.max(traj.max_norm_error());
    }
    let om2 = 0.5 * wr;
    let expected = effective_rabi(2, om2, &s);
    let pulse2 = BraggPulse::square(2, om2, 1e9, 4.0 * PI / expected).map_err(|e| e.to_string())?;
    let traj = ladder_evolve(
        &LadderState::at_rest(-2, 4).map_err(|e| e.to_string())?,
        &pulse2,
        &FrequencyRamp::constant(8.0 * wr),
        &s,
        &DormandPrince,
        &control,
        LadderBounds::default(),
    )
    .map_err(|e| e.to_string())?;
    worst_norm = worst_norm.max(traj.max_norm_error());
    let (t, p): (Vec<f64>, Vec<f64>) = traj.populations(2).into_iter().unzip();
    let fitted = fit_rabi_frequency(&t, &p).map_err(|e| e.to_string())?;
    let dev = rel(fitted, expected);
    expect(
        transfer >= 0.98 && dev <= 0.10 && worst_norm <= 1e-9,
        format!(
            "n=1 transfer {transfer:.5}; n=2 fitted/closed-form {:.4}; max norm error {worst_norm:.1e}",
            fitted / expected
        ),
    )
}

fn invariant_suites() -> Check {
    let s = rb();
    let wr = recoil_frequency(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(20_140_000);
    let mut worst_sum = 0.0f64;
    for _ in 0..10_000 {
        let phase = rng.random_range(-1e6..1e6);
        let v = rng.random_range(0.0..=1.0);
        let (p1, p2) = output_populations(phase, v).map_err(|e| e.to_string())?;
        worst_sum = worst_sum.max((p1 + p2 - 1.0).abs());
    }
    let identity = [1e-3, 1.0, 16.4 * wr, 1e9]
        .iter()
        .all(|&x| effective_rabi(1, x, &s) == x);
    let mut ladder_closed = true;
    for n in 1..=25u32 {
        let pulse = BraggPulse::square(n, 10.0 * wr, 1e10, 1e-5).map_err(|e| e.to_string())?;
        ladder_closed &=
            intermediate_detuning(2 * n, &pulse, &s).map_err(|e| e.to_string())? == 0.0;
    }
    let table_rabi = [16.4, 38.7, 118.1, 254.6, 443.6, 685.5];
    let worst_area = TABLE_ORDERS
        .iter()
        .zip(TABLE_DURATIONS)
        .zip(table_rabi)
        .map(|((&n, tau), om)| rel(effective_rabi(n, om * wr, &s) * tau / wr, PI))
        .fold(0.0, f64::max);
    let c = ApparatusConfig::typical();
    let sched = build_schedule(&c, c.two_photon_rabi).map_err(|e| e.to_string())?;
    let back = import_schedule_record(&export_schedule(&sched, ScheduleFormat::Record))
        .map_err(|e| e.to_string())?;
    let round_trip = back == sched;
    expect(
        worst_sum <= 1e-12 && identity && ladder_closed && worst_area <= 0.015 && round_trip,
        format!(
            "max |P1+P2-1| {worst_sum:.1e}; n=1 identity {identity}; Δ_2n = 0 {ladder_closed}; \
             max |Ω_2n τ/π - 1| {:.2}%; record round trip {round_trip}",
            worst_area * 100.0
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("recoil constants", recoil_constants),
        ("resonant chirp and gravity round trip", chirp_gravity_loop),
        ("longitudinal temperature limit", temperature_limit),
        ("beam diameter and wavefront curvature", beam_geometry),
        ("single-photon detuning floor", detuning_floor),
        ("optimal parameter table", table_regeneration),
        ("fall-time gate and experimental schedules", fall_time_gate),
        ("closed-loop gravimetry", closed_loop_gravimetry),
        ("momentum-ladder oracle", ladder_oracle),
        ("invariant suites", invariant_suites),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
