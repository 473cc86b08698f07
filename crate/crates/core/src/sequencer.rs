//! Timing program of a three-pulse Bragg gravimeter shot.
//!
//! The lattice frequency difference starts at nδ_B on release and is chirped
//! continuously at 2kg so that it tracks the falling atoms' resonance
//! δ_n(t) = nδ_B + 2kgt. Pulse centres sit at t₀, t₀ + T and t₀ + 2T, all at
//! the same intensity; detection follows the last pulse.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atoms::bragg_bandwidth;
use crate::constants::{angular_to_hz, TWO_PI};
use crate::dynamics::{effective_rabi, pulse_durations};
use crate::error::{Error, Result};
use crate::requirements::{intensity_from_rabi, min_fall_time, ApparatusConfig};

/// Allowed deviation of the pulse-centre spacing from T [s].
pub const SPACING_TOLERANCE: f64 = 1e-6;

/// Allowed frequency-tracking error during pulses, in units of δ_B.
pub const TRACKING_TOLERANCE: f64 = 1e-6;

pub const CSV_HEADER: &str =
    "t_start,duration,kind,intensity,freq_offset_start_hz,chirp_slope_hz_per_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Wait,
    HalfPiPulse,
    PiPulse,
    RampSegment,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Wait => "wait",
            EventKind::HalfPiPulse => "pulse_pi/2",
            EventKind::PiPulse => "pulse_pi",
            EventKind::RampSegment => "ramp_segment",
        }
    }

    pub fn is_pulse(&self) -> bool {
        matches!(self, EventKind::HalfPiPulse | EventKind::PiPulse)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEvent {
    /// [s]
    pub t_start: f64,
    /// [s]
    pub duration: f64,
    pub kind: EventKind,
    /// [W/m²]
    pub intensity: f64,
    /// Lattice frequency difference at `t_start` [rad/s].
    pub freq_offset_start: f64,
    /// [rad/s²]
    pub chirp_slope: f64,
}

impl ScheduleEvent {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn centre(&self) -> f64 {
        self.t_start + 0.5 * self.duration
    }

    /// Frequency difference at time `t` inside the event [rad/s].
    pub fn offset_at(&self, t: f64) -> f64 {
        self.freq_offset_start + self.chirp_slope * (t - self.t_start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSchedule {
    pub species: String,
    pub order: u32,
    /// Pulse-centre spacing T [s].
    pub interrogation_time: f64,
    /// Free-fall time to the first pulse centre [s].
    pub fall_time: f64,
    /// Ω₂ the pulse lengths were computed for [rad/s].
    pub two_photon_rabi: f64,
    /// Single-photon detuning used for the intensity [rad/s].
    pub detuning: f64,
    pub events: Vec<ScheduleEvent>,
}

impl TimingSchedule {
    pub fn pulses(&self) -> impl Iterator<Item = &ScheduleEvent> {
        self.events.iter().filter(|e| e.kind.is_pulse())
    }

    pub fn pulse_centres(&self) -> Vec<f64> {
        self.pulses().map(ScheduleEvent::centre).collect()
    }

    /// End of the last event, taken as the detection time [s].
    pub fn detection_time(&self) -> f64 {
        self.events.last().map_or(0.0, ScheduleEvent::t_end)
    }
}

/// Lays out wait, pulses and ramp segments for `config` at Ω₂ = `two_photon_rabi`.
pub fn build_schedule(config: &ApparatusConfig, two_photon_rabi: f64) -> Result<TimingSchedule> {
    config.validate()?;
    if !(two_photon_rabi > 0.0 && two_photon_rabi.is_finite()) {
        return Err(Error::validation(
            "two_photon_rabi",
            format!("must be positive, got {two_photon_rabi}"),
        ));
    }
    let species = &config.species;
    let n = config.order;
    let t0 = config.first_pulse_time;
    let big_t = config.interrogation_time;

    let fall_bound = min_fall_time(n, species, config.g);
    if t0 < fall_bound {
        return Err(Error::Schedule(format!(
            "first pulse at {:.4} ms is earlier than the minimum fall time {:.4} ms \
             (0.6n ms for order {n}); before it the retro-reflected lattice is also resonant",
            t0 * 1e3,
            fall_bound * 1e3
        )));
    }
    let tau = pulse_durations(effective_rabi(n, two_photon_rabi, species));
    if tau.pi >= big_t {
        return Err(Error::Schedule(format!(
            "π pulse of {:.4} µs does not fit inside T = {:.4} µs; pulses would overlap",
            tau.pi * 1e6,
            big_t * 1e6
        )));
    }
    if t0 < 0.5 * tau.half_pi {
        return Err(Error::Schedule(format!(
            "first pulse centre at {:.4} µs would start before release (π/2 pulse is {:.4} µs)",
            t0 * 1e6,
            tau.half_pi * 1e6
        )));
    }

    let intensity = intensity_from_rabi(two_photon_rabi, config.detuning, species);
    let start = n as f64 * bragg_bandwidth(species);
    let slope = 2.0 * species.wavenumber * config.g;
    let event = |kind, t_start: f64, duration: f64, intensity| ScheduleEvent {
        t_start,
        duration,
        kind,
        intensity,
        freq_offset_start: start + slope * t_start,
        chirp_slope: slope,
    };

    let pulses = [
        (EventKind::HalfPiPulse, t0, tau.half_pi),
        (EventKind::PiPulse, t0 + big_t, tau.pi),
        (EventKind::HalfPiPulse, t0 + 2.0 * big_t, tau.half_pi),
    ];
    let mut events = Vec::with_capacity(6);
    let mut cursor = 0.0;
    for (i, (kind, centre, duration)) in pulses.into_iter().enumerate() {
        let begin = centre - 0.5 * duration;
        if begin > cursor {
            let gap = if i == 0 {
                EventKind::Wait
            } else {
                EventKind::RampSegment
            };
            events.push(event(gap, cursor, begin - cursor, 0.0));
        }
        events.push(event(kind, begin, duration, intensity));
        cursor = begin + duration;
    }

    Ok(TimingSchedule {
        species: species.name.clone(),
        order: n,
        interrogation_time: big_t,
        fall_time: t0,
        two_photon_rabi,
        detuning: config.detuning,
        events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    TimeOrder,
    PulseOrder,
    PulseDuration,
    Spacing,
    FallTime,
    Intensity,
    Continuity,
    FrequencyTracking,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
    /// Size of the deviation in the unit named by `message`, when meaningful.
    pub magnitude: Option<f64>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Checks a schedule against its invariants and the resonance condition of
/// `config`. An empty list means the schedule is valid.
pub fn validate_schedule(s: &TimingSchedule, config: &ApparatusConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, message: String, magnitude| {
        out.push(Violation {
            kind,
            message,
            magnitude,
        })
    };
    let species = &config.species;

    if s.order != config.order {
        push(
            ViolationKind::Mismatch,
            format!(
                "schedule order {} differs from configured {}",
                s.order, config.order
            ),
            None,
        );
    }

    for (i, e) in s.events.iter().enumerate() {
        if !(e.duration >= 0.0) || !e.t_start.is_finite() {
            push(
                ViolationKind::TimeOrder,
                format!("event {i} ({}) has invalid timing", e.kind),
                None,
            );
        }
    }
    for (i, pair) in s.events.windows(2).enumerate() {
        let gap = pair[1].t_start - pair[0].t_end();
        let tol = 1e-12 * pair[0].t_end().abs().max(1e-9);
        if gap < -tol {
            push(
                ViolationKind::TimeOrder,
                format!(
                    "event {} ({}) starts {:.6e} s before event {i} ({}) ends",
                    i + 1,
                    pair[1].kind,
                    -gap,
                    pair[0].kind
                ),
                Some(-gap),
            );
        }
    }

    let pulses: Vec<&ScheduleEvent> = s.pulses().collect();
    let kinds: Vec<EventKind> = pulses.iter().map(|p| p.kind).collect();
    let expected_kinds = [
        EventKind::HalfPiPulse,
        EventKind::PiPulse,
        EventKind::HalfPiPulse,
    ];
    if kinds != expected_kinds {
        let listed: Vec<&str> = kinds.iter().map(EventKind::as_str).collect();
        push(
            ViolationKind::PulseOrder,
            format!(
                "pulse sequence is [{}], expected [pulse_pi/2, pulse_pi, pulse_pi/2]",
                listed.join(", ")
            ),
            None,
        );
    }

    let tau = pulse_durations(effective_rabi(s.order, s.two_photon_rabi, species));
    if pulses.len() == 3 {
        let expected = [tau.half_pi, tau.pi, tau.half_pi];
        for (i, (p, want)) in pulses.iter().zip(expected).enumerate() {
            if !close(p.duration, want, 1e-9) {
                push(
                    ViolationKind::PulseOrder,
                    format!(
                        "pulse {} ({}) lasts {:.6e} s, expected {:.6e} s",
                        i + 1,
                        p.kind,
                        p.duration,
                        want
                    ),
                    Some(p.duration - want),
                );
            }
        }
        if !close(pulses[1].duration, 2.0 * pulses[0].duration, 1e-9)
            || !close(pulses[1].duration, 2.0 * pulses[2].duration, 1e-9)
        {
            push(
                ViolationKind::PulseDuration,
                "π pulse is not twice as long as the π/2 pulses".into(),
                None,
            );
        }

        let centres: Vec<f64> = pulses.iter().map(|p| p.centre()).collect();
        if (centres[0] - config.first_pulse_time).abs() > SPACING_TOLERANCE {
            push(
                ViolationKind::Spacing,
                format!(
                    "first pulse centre at {:.6e} s, configured t0 = {:.6e} s",
                    centres[0], config.first_pulse_time
                ),
                Some(centres[0] - config.first_pulse_time),
            );
        }
        for i in 0..2 {
            let spacing = centres[i + 1] - centres[i];
            let err = spacing - config.interrogation_time;
            if err.abs() > SPACING_TOLERANCE {
                push(
                    ViolationKind::Spacing,
                    format!(
                        "pulses {} and {} are {:.6e} s apart, expected T = {:.6e} s",
                        i + 1,
                        i + 2,
                        spacing,
                        config.interrogation_time
                    ),
                    Some(err),
                );
            }
        }
        let bound = min_fall_time(config.order, species, config.g);
        if centres[0] < bound {
            push(
                ViolationKind::FallTime,
                format!(
                    "first pulse at {:.4} ms precedes the minimum fall time {:.4} ms",
                    centres[0] * 1e3,
                    bound * 1e3
                ),
                Some(bound - centres[0]),
            );
        }
        let i0 = pulses[0].intensity;
        if !(i0 > 0.0) || pulses.iter().any(|p| !close(p.intensity, i0, 1e-12)) {
            push(
                ViolationKind::Intensity,
                "pulse intensities are not equal and positive".into(),
                None,
            );
        }
    }

    for (i, pair) in s.events.windows(2).enumerate() {
        let carried = pair[0].offset_at(pair[0].t_end());
        let next = pair[1].freq_offset_start;
        if !close(carried, next, 1e-9) {
            push(
                ViolationKind::Continuity,
                format!(
                    "frequency jumps by {:.6e} rad/s between events {i} and {}",
                    next - carried,
                    i + 1
                ),
                Some(next - carried),
            );
        }
    }

    let delta_b = bragg_bandwidth(species);
    let resonance =
        |t: f64| config.order as f64 * delta_b + 2.0 * species.wavenumber * config.g * t;
    for (i, p) in pulses.iter().enumerate() {
        let worst = [p.t_start, p.centre(), p.t_end()]
            .into_iter()
            .map(|t| (p.offset_at(t) - resonance(t)).abs())
            .fold(0.0, f64::max);
        if !(worst < TRACKING_TOLERANCE * delta_b) {
            let at_centre = p.offset_at(p.centre()) - resonance(p.centre());
            push(
                ViolationKind::FrequencyTracking,
                format!(
                    "pulse {} misses resonance by {:.6e} rad/s at its centre ({:.6e} rad/s worst)",
                    i + 1,
                    at_centre,
                    worst
                ),
                Some(at_centre),
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleFormat {
    Csv,
    Record,
}

impl ScheduleFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ScheduleFormat::Csv => "csv",
            ScheduleFormat::Record => "json",
        }
    }
}

/// Serialises a schedule. CSV uses seconds, W/m², Hz and Hz/s; the record
/// is JSON in SI angular units and re-imports bit-exactly.
pub fn export_schedule(s: &TimingSchedule, format: ScheduleFormat) -> String {
    match format {
        ScheduleFormat::Record => serde_json::to_string_pretty(s).expect("schedule serialises"),
        ScheduleFormat::Csv => {
            let mut out = String::new();
            let _ = writeln!(out, "# species = {}", s.species);
            let _ = writeln!(out, "# order = {}", s.order);
            let _ = writeln!(out, "# interrogation_time_s = {:e}", s.interrogation_time);
            let _ = writeln!(out, "# fall_time_s = {:e}", s.fall_time);
            let _ = writeln!(
                out,
                "# two_photon_rabi_hz = {:e}",
                s.two_photon_rabi / TWO_PI
            );
            let _ = writeln!(out, "# detuning_hz = {:e}", s.detuning / TWO_PI);
            let _ = writeln!(out, "# detection_time_s = {:e}", s.detection_time());
            let _ = writeln!(out, "# units: s, s, -, W/m^2, Hz, Hz/s");
            out.push_str(CSV_HEADER);
            out.push('\n');
            for e in &s.events {
                let _ = writeln!(
                    out,
                    "{:e},{:e},{},{:e},{:e},{:e}",
                    e.t_start,
                    e.duration,
                    e.kind,
                    e.intensity,
                    angular_to_hz(e.freq_offset_start),
                    angular_to_hz(e.chirp_slope)
                );
            }
            out
        }
    }
}

/// Parses a record produced by [`export_schedule`].
pub fn import_schedule_record(text: &str) -> Result<TimingSchedule> {
    serde_json::from_str(text).map_err(|e| Error::parse("schedule record", e))
}

pub fn write_schedule(path: &Path, s: &TimingSchedule, format: ScheduleFormat) -> Result<()> {
    std::fs::write(path, export_schedule(s, format)).map_err(|e| Error::io(path, e))
}

pub fn read_schedule_record(path: &Path) -> Result<TimingSchedule> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    import_schedule_record(&text)
}
