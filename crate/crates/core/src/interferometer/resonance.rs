use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::scan::{FringeScan, ScanKind};
use crate::error::{Error, Result};
use crate::numeric::{catmull_rom, golden_section_min};

/// Residual, relative to the squared fringe half-swing, below which a common
/// extremum counts as an exact coincidence of all fringes.
const ALIAS_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Extremum {
    x: f64,
    kind: ExtremumKind,
}

/// Common fringe extremum located across scans of different T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantChirp {
    /// α₀ [Hz/s]
    pub chirp_rate: f64,
    /// Mean squared distance of each scan's P₁ at `chirp_rate` from the
    /// value at that scan's own nearest extremum.
    pub residual: f64,
    pub kind: ExtremumKind,
    /// Other common extrema in range that fit equally well [Hz/s].
    pub aliases: Vec<f64>,
}

struct Grid {
    x0: f64,
    h: f64,
    len: usize,
}

fn common_grid(scans: &[FringeScan]) -> Result<Grid> {
    if scans.len() < 2 {
        return Err(Error::DegenerateScans(format!(
            "need at least two scans, got {}",
            scans.len()
        )));
    }
    if let Some(s) = scans.iter().find(|s| s.kind != ScanKind::ChirpRate) {
        return Err(Error::DegenerateScans(format!(
            "expected chirp-rate scans, found a {} scan",
            s.kind.as_str()
        )));
    }
    let xs = scans[0].xs();
    if xs.len() < 3 {
        return Err(Error::DegenerateScans(
            "scans need at least three points".into(),
        ));
    }
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::DegenerateScans(
            "chirp grid must be increasing".into(),
        ));
    }
    for s in &scans[1..] {
        let same = s.points.len() == xs.len()
            && s.points
                .iter()
                .zip(&xs)
                .all(|(p, x)| (p.x - x).abs() <= 1e-6 * h);
        if !same {
            return Err(Error::DegenerateScans(
                "scans do not share a common chirp grid".into(),
            ));
        }
    }
    for (i, x) in xs.iter().enumerate() {
        if (x - (xs[0] + h * i as f64)).abs() > 1e-6 * h {
            return Err(Error::DegenerateScans("chirp grid is not uniform".into()));
        }
    }
    let mut ts: Vec<f64> = scans
        .iter()
        .map(|s| s.metadata.interrogation_time)
        .collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if ts.len() < 2 {
        return Err(Error::DegenerateScans(
            "all scans share one pulse separation, so every fringe period aliases".into(),
        ));
    }
    Ok(Grid {
        x0: xs[0],
        h,
        len: xs.len(),
    })
}

/// Interior local extrema with parabolic sub-grid refinement.
fn extrema(y: &[f64], grid: &Grid) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..y.len() - 1 {
        let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
        let kind = if b > a && b >= c {
            ExtremumKind::Maximum
        } else if b < a && b <= c {
            ExtremumKind::Minimum
        } else {
            continue;
        };
        let denom = a - 2.0 * b + c;
        let shift = if denom != 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        out.push(Extremum {
            x: grid.x0 + grid.h * (i as f64 + shift),
            kind,
        });
    }
    out
}

fn describe(extrema: &[Vec<Extremum>], scans: &[FringeScan]) -> String {
    let mut parts = Vec::new();
    for (e, s) in extrema.iter().zip(scans) {
        let listed: Vec<String> = e.iter().take(8).map(|x| format!("{:.6e}", x.x)).collect();
        let more = if e.len() > 8 {
            format!(" (+{} more)", e.len() - 8)
        } else {
            String::new()
        };
        parts.push(format!(
            "T = {} s: [{}]{more}",
            s.metadata.interrogation_time,
            listed.join(", ")
        ));
    }
    parts.join("; ")
}

/// Locates the chirp rate where the fringes of all scans share an extremum.
///
/// Exact coincidences repeat with the common period of the scans. The
/// best-matching one is returned and the others are listed in `aliases`.
pub fn find_resonant_chirp(scans: &[FringeScan]) -> Result<ResonantChirp> {
    let grid = common_grid(scans)?;
    let p1: Vec<Vec<f64>> = scans.iter().map(FringeScan::p1).collect();
    let per_scan: Vec<Vec<Extremum>> = p1.iter().map(|y| extrema(y, &grid)).collect();

    let reference = scans
        .iter()
        .enumerate()
        .max_by(|a, b| {
            a.1.metadata
                .interrogation_time
                .total_cmp(&b.1.metadata.interrogation_time)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let t_max = scans[reference].metadata.interrogation_time;
    let order = scans[reference].metadata.order.max(1) as f64;
    let period = 1.0 / (order * t_max * t_max);
    let tol = (1.5 * grid.h).max(0.1 * period);

    let lo = grid.x0;
    let hi = grid.x0 + grid.h * (grid.len - 1) as f64;
    // mean squared half-swing of the fringes, used to normalise residuals
    let scale = p1
        .iter()
        .map(|y| {
            let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = y.iter().copied().fold(f64::INFINITY, f64::min);
            (0.5 * (max - min)).powi(2)
        })
        .sum::<f64>()
        / p1.len() as f64;

    let mut candidates: Vec<(f64, f64, ExtremumKind)> = Vec::new();
    for e in &per_scan[reference] {
        let shared = per_scan.iter().enumerate().all(|(j, list)| {
            j == reference
                || list
                    .iter()
                    .any(|o| o.kind == e.kind && (o.x - e.x).abs() <= tol)
        });
        if !shared {
            continue;
        }
        let sign = match e.kind {
            ExtremumKind::Maximum => -1.0,
            ExtremumKind::Minimum => 1.0,
        };
        let summed = |x: f64| {
            sign * p1
                .iter()
                .map(|y| catmull_rom(y, grid.x0, grid.h, x))
                .sum::<f64>()
        };
        let a = (e.x - 2.0 * grid.h).max(lo);
        let b = (e.x + 2.0 * grid.h).min(hi);
        let x = golden_section_min(summed, a, b, 1e-15);
        // distance from each scan's own nearest extremum of the same kind
        let residual = p1
            .iter()
            .zip(&per_scan)
            .map(|(y, list)| {
                let interp = |x: f64| catmull_rom(y, grid.x0, grid.h, x);
                let own = list
                    .iter()
                    .filter(|o| o.kind == e.kind)
                    .min_by(|a, b| (a.x - x).abs().total_cmp(&(b.x - x).abs()))
                    .map(|o| {
                        let a = (o.x - 2.0 * grid.h).max(lo);
                        let b = (o.x + 2.0 * grid.h).min(hi);
                        interp(golden_section_min(|t| sign * interp(t), a, b, 1e-15))
                    })
                    .unwrap_or_else(|| interp(x));
                (interp(x) - own).powi(2)
            })
            .sum::<f64>()
            / p1.len() as f64;
        candidates.push((x, residual, e.kind));
    }

    let Some(&chosen) = candidates.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else {
        return Err(Error::ResonanceNotFound(format!(
            "no extremum common to all scans; per-scan extrema {}",
            describe(&per_scan, scans)
        )));
    };
    // interpolation error of the sharpest fringe sets the floor for aliases
    let step_phase = TAU * order * t_max * t_max * grid.h;
    let cutoff = chosen.1 + scale * (ALIAS_RESIDUAL + 10.0 * step_phase.powi(6));
    let aliases = candidates
        .iter()
        .filter(|c| c.0 != chosen.0 && c.1 <= cutoff)
        .map(|c| c.0)
        .collect();
    Ok(ResonantChirp {
        chirp_rate: chosen.0,
        residual: chosen.1,
        kind: chosen.2,
        aliases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::resonant_chirp_rate;
    use crate::interferometer::{chirp_scan, gravity_from_chirp};
    use crate::requirements::ApparatusConfig;
    use proptest::prelude::*;

    fn recover(
        g: f64,
        v: f64,
        ts: &[f64],
        lo: f64,
        hi: f64,
        samples: usize,
    ) -> Result<ResonantChirp> {
        let mut c = ApparatusConfig::typical();
        c.g = g;
        let scans = chirp_scan(&c, v, ts, (lo, hi), samples)?;
        find_resonant_chirp(&scans)
    }

    #[test]
    fn recovers_gravity_in_narrow_window() {
        let c = ApparatusConfig::typical();
        let a0 = resonant_chirp_rate(&c.species, 9.8);
        for v in [1.0, 0.5] {
            let r = recover(9.8, v, &[0.04, 0.05, 0.06], a0 - 3.1e3, a0 + 4.3e3, 2001).unwrap();
            assert!(
                (r.chirp_rate / a0 - 1.0).abs() < 1e-9,
                "{} vs {a0}",
                r.chirp_rate
            );
            assert_eq!(r.kind, ExtremumKind::Maximum);
            assert!(r.aliases.is_empty(), "{:?}", r.aliases);
            let g = gravity_from_chirp(r.chirp_rate, &c.species);
            assert!((g / 9.8 - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn wide_range_reports_aliases() {
        let c = ApparatusConfig::typical();
        let a0 = resonant_chirp_rate(&c.species, 9.8);
        let r = recover(9.8, 1.0, &[0.04, 0.05, 0.06], 25.0e6, 25.2e6, 20001).unwrap();
        // T² ratios 16:25:36 give exact coincidences every 10 kHz/s
        let all: Vec<f64> = std::iter::once(r.chirp_rate)
            .chain(r.aliases.iter().copied())
            .collect();
        assert!(all.len() > 10);
        for x in &all {
            let k = (x - a0) / 1.0e4;
            assert!((k - k.round()).abs() < 1e-3, "{x}");
        }
        assert!(all.iter().any(|x| (x / a0 - 1.0).abs() < 1e-8));
    }

    #[test]
    fn identical_separations_are_degenerate() {
        let err = recover(9.8, 1.0, &[0.05, 0.05], 25.12e6, 25.13e6, 501).unwrap_err();
        assert!(matches!(err, Error::DegenerateScans(_)), "{err}");
        let err = recover(9.8, 1.0, &[0.05], 25.12e6, 25.13e6, 501).unwrap_err();
        assert!(matches!(err, Error::DegenerateScans(_)));
    }

    #[test]
    fn missing_crossing_lists_extrema() {
        let c = ApparatusConfig::typical();
        let a0 = resonant_chirp_rate(&c.species, 9.8);
        // window of 2 kHz/s placed between the exact coincidences
        let err = recover(9.8, 1.0, &[0.04, 0.05, 0.06], a0 + 4.0e3, a0 + 6.0e3, 2001).unwrap_err();
        match err {
            Error::ResonanceNotFound(msg) => assert!(msg.contains("T = 0.04 s"), "{msg}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let c = ApparatusConfig::typical();
        let mut a = chirp_scan(&c, 1.0, &[0.04], (25.12e6, 25.13e6), 101).unwrap();
        let b = chirp_scan(&c, 1.0, &[0.05], (25.12e6, 25.14e6), 101).unwrap();
        a.extend(b);
        assert!(matches!(
            find_resonant_chirp(&a),
            Err(Error::DegenerateScans(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn closed_loop_recovery(
            g in 9.0f64..10.5,
            v in 0.05f64..=1.0,
            t1 in 0.02f64..0.05,
            dt in 0.005f64..0.03,
            offset in -0.45f64..0.45,
        ) {
            let c = ApparatusConfig::typical();
            let a0 = resonant_chirp_rate(&c.species, g);
            let t2 = t1 + dt;
            // keep the window narrower than the shorter fringe period so
            // only the central coincidence is in range
            let width = 0.9 / (t1 * t1);
            let lo = a0 - width * (0.5 + offset);
            let r = recover(g, v, &[t1, t2], lo, lo + width, 1201).unwrap();
            prop_assert!((r.chirp_rate / a0 - 1.0).abs() < 1e-5);
        }
    }
}
