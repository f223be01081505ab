//! Per-distance error statistics of trial records, the `stats.csv` table and
//! SVG line plots.

pub mod plot;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pose::SolverKind;
use crate::sim::TrialRow;
use crate::textfmt::sig9;

pub use plot::{polylines, render_svg, Polyline};

/// Bins with fewer records are flagged sparse and skipped by acceptance
/// checks.
pub const MIN_BIN_COUNT: usize = 50;

pub const STATS_HEADER: &str = "dist_m,solver,count,pos_rms_m,pos_max_m,ang_rms_deg";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverBinStats {
    pub count: usize,
    /// Position RMS, m.
    pub pos_rms: f64,
    /// Largest position error, m.
    pub pos_max: f64,
    /// Orientation RMS, rad.
    pub ang_rms: f64,
}

impl SolverBinStats {
    pub const EMPTY: SolverBinStats = SolverBinStats {
        count: 0,
        pos_rms: f64::NAN,
        pos_max: f64::NAN,
        ang_rms: f64::NAN,
    };

    pub fn is_sparse(&self) -> bool {
        self.count < MIN_BIN_COUNT
    }
}

/// All solvers' statistics at one integer distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceBinStats {
    pub distance: i64,
    pub per_solver: BTreeMap<SolverKind, SolverBinStats>,
}

impl DistanceBinStats {
    pub fn get(&self, solver: SolverKind) -> SolverBinStats {
        self.per_solver.get(&solver).copied().unwrap_or(SolverBinStats::EMPTY)
    }
}

#[derive(Default)]
struct Acc {
    n: usize,
    pos_sq: f64,
    ang_sq: f64,
    pos_max: f64,
}

/// Groups rows by `round(dist)` and solver. Dropped trials and failed
/// solves (non-finite errors) are left out; every solver seen in `rows`
/// gets an entry in every bin, empty when it has no records there.
pub fn bin_by_distance(rows: &[TrialRow]) -> Vec<DistanceBinStats> {
    let mut solvers: Vec<SolverKind> = rows.iter().map(|r| r.solver).collect();
    solvers.sort();
    solvers.dedup();
    let mut bins: BTreeMap<i64, BTreeMap<SolverKind, Acc>> = BTreeMap::new();
    for r in rows {
        if r.dropped || !r.pos_err.is_finite() || !r.ang_err.is_finite() || !r.dist.is_finite() {
            continue;
        }
        let acc = bins
            .entry(r.dist.round() as i64)
            .or_default()
            .entry(r.solver)
            .or_default();
        acc.n += 1;
        acc.pos_sq += r.pos_err * r.pos_err;
        acc.ang_sq += r.ang_err * r.ang_err;
        acc.pos_max = acc.pos_max.max(r.pos_err);
    }
    bins.into_iter()
        .map(|(distance, accs)| DistanceBinStats {
            distance,
            per_solver: solvers
                .iter()
                .map(|&s| {
                    let st = match accs.get(&s) {
                        Some(a) if a.n > 0 => SolverBinStats {
                            count: a.n,
                            pos_rms: (a.pos_sq / a.n as f64).sqrt(),
                            pos_max: a.pos_max,
                            ang_rms: (a.ang_sq / a.n as f64).sqrt(),
                        },
                        _ => SolverBinStats::EMPTY,
                    };
                    (s, st)
                })
                .collect(),
        })
        .collect()
}

/// `stats.csv` body: one row per (bin, solver), angles in degrees.
pub fn stats_csv(stats: &[DistanceBinStats]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{STATS_HEADER}");
    for bin in stats {
        for (solver, st) in &bin.per_solver {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                bin.distance,
                solver,
                st.count,
                sig9(st.pos_rms),
                sig9(st.pos_max),
                sig9(st.ang_rms.to_degrees())
            );
        }
    }
    s
}

pub fn parse_stats_csv(text: &str) -> Result<Vec<DistanceBinStats>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(STATS_HEADER) {
        return Err(Error::Parse(format!("stats CSV must start with {STATS_HEADER:?}")));
    }
    let mut bins: BTreeMap<i64, BTreeMap<SolverKind, SolverBinStats>> = BTreeMap::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse(format!("expected 6 fields: {line:?}")));
        }
        let bad = || Error::Parse(format!("bad stats row {line:?}"));
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
        let distance: i64 = f[0].parse().map_err(|_| bad())?;
        let solver: SolverKind = f[1].parse().map_err(|_| bad())?;
        let st = SolverBinStats {
            count: f[2].parse().map_err(|_| bad())?,
            pos_rms: num(3)?,
            pos_max: num(4)?,
            ang_rms: num(5)?.to_radians(),
        };
        bins.entry(distance).or_default().insert(solver, st);
    }
    Ok(bins
        .into_iter()
        .map(|(distance, per_solver)| DistanceBinStats { distance, per_solver })
        .collect())
}

/// Writes `stats.csv`, `pos_rms.svg` and `ang_rms.svg` into `out_dir`. The
/// plots are drawn from the CSV text, so re-plotting a parsed `stats.csv`
/// gives the same files.
pub fn emit_report(stats: &[DistanceBinStats], out_dir: impl AsRef<Path>) -> Result<()> {
    if stats.is_empty() {
        return Err(Error::DegenerateConfiguration("no statistics to report".into()));
    }
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let csv = stats_csv(stats);
    std::fs::write(dir.join("stats.csv"), &csv)?;
    let parsed = parse_stats_csv(&csv)?;
    std::fs::write(dir.join("pos_rms.svg"), render_svg(&parsed, plot::Metric::Position))?;
    std::fs::write(dir.join("ang_rms.svg"), render_svg(&parsed, plot::Metric::Orientation))?;
    Ok(())
}
