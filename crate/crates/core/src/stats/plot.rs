//! Minimal SVG line plots of per-bin RMS error against distance.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::DistanceBinStats;
use crate::pose::SolverKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Position RMS in metres.
    Position,
    /// Orientation RMS in degrees.
    Orientation,
}

impl Metric {
    fn value(self, bin: &DistanceBinStats, solver: SolverKind) -> f64 {
        let s = bin.get(solver);
        match self {
            Metric::Position => s.pos_rms,
            Metric::Orientation => s.ang_rms.to_degrees(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Position => "position RMS [m]",
            Metric::Orientation => "orientation RMS [deg]",
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

/// One solver's curve in SVG pixel coordinates, already formatted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polyline {
    pub solver: SolverKind,
    pub points: String,
}

struct Frame {
    x0: f64,
    x1: f64,
    y1: f64,
}

impl Frame {
    fn new(stats: &[DistanceBinStats], metric: Metric) -> Frame {
        let x0 = stats.first().map_or(0.0, |b| b.distance as f64);
        let x1 = stats.last().map_or(1.0, |b| b.distance as f64).max(x0 + 1.0);
        let ymax = stats
            .iter()
            .flat_map(|b| b.per_solver.keys().map(move |&s| metric.value(b, s)))
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        Frame {
            x0,
            x1,
            y1: if ymax > 0.0 { ymax * 1.1 } else { 1.0 },
        }
    }

    fn px(&self, d: f64) -> f64 {
        LEFT + (d - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - v / self.y1 * (HEIGHT - TOP - BOTTOM)
    }
}

/// Curves for every solver present in `stats`; empty and NaN bins are
/// skipped.
pub fn polylines(stats: &[DistanceBinStats], metric: Metric) -> Vec<Polyline> {
    let frame = Frame::new(stats, metric);
    let mut curves: BTreeMap<SolverKind, Vec<String>> = BTreeMap::new();
    for bin in stats {
        for &solver in bin.per_solver.keys() {
            let pts = curves.entry(solver).or_default();
            let v = metric.value(bin, solver);
            if v.is_finite() {
                pts.push(format!("{:.2},{:.2}", frame.px(bin.distance as f64), frame.py(v)));
            }
        }
    }
    curves
        .into_iter()
        .map(|(solver, pts)| Polyline {
            solver,
            points: pts.join(" "),
        })
        .collect()
}

fn colour(solver: SolverKind) -> &'static str {
    match solver {
        SolverKind::Basic => "#d62728",
        SolverKind::Hard => "#1f77b4",
        SolverKind::Soft => "#2ca02c",
    }
}

pub fn render_svg(stats: &[DistanceBinStats], metric: Metric) -> String {
    let frame = Frame::new(stats, metric);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (bx, by) = (HEIGHT - BOTTOM, WIDTH - RIGHT);
    let _ = writeln!(s, r#"<path d="M{LEFT},{TOP} V{bx} H{by}" fill="none" stroke="black"/>"#);
    for bin in stats {
        let x = frame.px(bin.distance as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bx + 16.0,
            bin.distance
        );
    }
    for k in 0..=4 {
        let v = frame.y1 * k as f64 / 4.0;
        let y = frame.py(v);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            crate::textfmt::sig9(v).trim_end_matches('0').trim_end_matches('.')
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">distance [m]</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        metric.label()
    );
    for (i, line) in polylines(stats, metric).iter().enumerate() {
        let c = colour(line.solver);
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
            line.points
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{c}">{}</text>"#,
            WIDTH - RIGHT + 12.0,
            line.solver
        );
    }
    s.push_str("</svg>\n");
    s
}
