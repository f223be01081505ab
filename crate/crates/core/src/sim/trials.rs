//! Monte-Carlo trials: sample a pose, observe it, run every solver on the
//! same observations and record the horizontal errors.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::scene::{in_frame, observe_corners, render_frame, sample_pose, trial_rng, GroundTruthSample};
use crate::detect::{detect_tags, DetectorParams, TagCodebook, TagDetection};
use crate::error::{Error, Result};
use crate::geom::{project, CameraModel};
use crate::pose::{wrap_angle, HorizontalPose, Observations, SolverKind, SolverSettings, TagLayout};
use crate::textfmt::sig9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Projected corners plus Gaussian pixel noise.
    Analytic,
    /// Rendered frame run through the tag detector.
    Rendered,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::Rendered => "rendered",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "rendered" => Ok(Mode::Rendered),
            _ => Err(Error::Config(format!(
                "unknown mode {s:?} (expected analytic or rendered)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    pub solver: SolverKind,
    /// `None` when the solver reported an error.
    pub estimate: Option<HorizontalPose>,
    /// Horizontal position error, m.
    pub pos_err: f64,
    /// Absolute heading error in `[0, pi]`, rad.
    pub ang_err: f64,
    pub converged: bool,
}

/// Detector bookkeeping for one rendered frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionAudit {
    /// Layout tags whose black square lies inside the frame with
    /// [`IN_FRAME_MARGIN_PX`] to spare.
    pub in_frame: usize,
    /// In-frame tags without a matching detection.
    pub missed: usize,
    /// Detections with an id outside the layout or far from the true tag.
    pub false_positives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub sample: GroundTruthSample,
    /// Number of control points handed to the solvers.
    pub observed: usize,
    pub dropped: bool,
    pub outcomes: Vec<SolverOutcome>,
    pub audit: Option<DetectionAudit>,
}

/// Everything a trial needs besides its index.
pub struct TrialContext {
    pub cfg: ScenarioConfig,
    pub mode: Mode,
    pub solvers: Vec<SolverKind>,
    pub layout: TagLayout,
    pub camera: CameraModel,
    pub codebook: TagCodebook,
    pub detector: DetectorParams,
    pub settings: SolverSettings,
}

/// Distance a true corner must keep from the image border for its tag to
/// count as fully in frame.
pub const IN_FRAME_MARGIN_PX: f64 = 2.0;

/// Corner RMS above which a detection with a layout id counts as false.
const FALSE_POSITIVE_RMS_PX: f64 = 3.0;

impl TrialContext {
    pub fn new(cfg: &ScenarioConfig, mode: Mode, solvers: &[SolverKind]) -> Result<Self> {
        cfg.validate()?;
        let layout = cfg.tag_layout();
        Ok(Self {
            cfg: cfg.clone(),
            mode,
            solvers: solvers.to_vec(),
            camera: cfg.camera(),
            codebook: TagCodebook::default_family(),
            detector: DetectorParams::for_resolution(cfg.resolution.0 as usize),
            settings: cfg.solver_settings(),
            layout,
        })
    }

    /// Maps detections onto layout indices and audits them against the truth.
    pub fn detections_to_observations(
        &self,
        sample: &GroundTruthSample,
        dets: &[TagDetection],
    ) -> (Observations, DetectionAudit) {
        let tw = sample.tag_to_world(self.cfg.bus_height);
        let truth = |i: usize| project(&self.camera, &tw.apply(&self.layout.control_points()[i])).ok();
        let mut pts = Vec::new();
        let mut audit = DetectionAudit::default();
        let mut found = vec![false; self.layout.tags().len()];
        for d in dets {
            let Some(k) = self.layout.tags().iter().position(|t| t.tag_id == d.tag_id) else {
                audit.false_positives += 1;
                continue;
            };
            let first = self.layout.tags()[k].first_index;
            let mut sq = 0.0;
            for (j, c) in d.corners.iter().enumerate() {
                sq += truth(first + j).map_or(f64::INFINITY, |t| (t - c).norm_squared());
            }
            if (sq / 4.0).sqrt() > FALSE_POSITIVE_RMS_PX || found[k] {
                audit.false_positives += 1;
                continue;
            }
            found[k] = true;
            pts.extend(d.corners.iter().enumerate().map(|(j, c)| (first + j, *c)));
        }
        for (k, t) in self.layout.tags().iter().enumerate() {
            let corners = t.first_index..t.first_index + 4;
            let inside = corners
                .clone()
                .all(|i| truth(i).is_some_and(|uv| in_frame(&self.camera, &uv, IN_FRAME_MARGIN_PX)));
            if inside {
                audit.in_frame += 1;
                if !found[k] {
                    audit.missed += 1;
                }
            }
        }
        let obs = if pts.len() < 4 {
            Observations::empty()
        } else {
            Observations::new(pts).unwrap_or_default()
        };
        (obs, audit)
    }

    pub fn run_trial(&self, trial: usize) -> Result<TrialRecord> {
        let mut rng = trial_rng(self.cfg.seed, trial);
        let sample = sample_pose(&self.cfg, &mut rng)?;
        let (obs, audit) = match self.mode {
            Mode::Analytic => (
                observe_corners(&self.cfg, &self.layout, &self.camera, &sample, &mut rng),
                None,
            ),
            Mode::Rendered => match render_frame(&self.cfg, &self.layout, &self.codebook, &self.camera, &sample) {
                Ok(img) => {
                    let dets = detect_tags(&img, &self.codebook, &self.detector)?;
                    let (obs, audit) = self.detections_to_observations(&sample, &dets);
                    (obs, Some(audit))
                }
                Err(Error::BehindCamera(_)) => (Observations::empty(), Some(DetectionAudit::default())),
                Err(e) => return Err(e),
            },
        };
        let dropped = obs.is_empty();
        let outcomes = if dropped {
            Vec::new()
        } else {
            self.solvers.iter().map(|&s| self.solve(s, &obs, &sample)).collect()
        };
        Ok(TrialRecord {
            trial,
            sample,
            observed: obs.len(),
            dropped,
            outcomes,
            audit,
        })
    }

    /// Solvers see only the observations and the nominal bus height.
    fn solve(&self, solver: SolverKind, obs: &Observations, truth: &GroundTruthSample) -> SolverOutcome {
        match solver.estimate(&self.layout, obs, &self.camera, self.cfg.bus_height, &self.settings) {
            Ok(e) => SolverOutcome {
                solver,
                estimate: Some(e.horizontal),
                pos_err: (e.horizontal.x - truth.x).hypot(e.horizontal.y - truth.y),
                ang_err: wrap_angle(e.horizontal.phi - truth.phi).abs(),
                converged: e.converged,
            },
            Err(_) => SolverOutcome {
                solver,
                estimate: None,
                pos_err: f64::NAN,
                ang_err: f64::NAN,
                converged: false,
            },
        }
    }
}

/// Runs `cfg.samples` trials in parallel; records come back in trial order
/// and do not depend on the thread count.
pub fn run_trials(cfg: &ScenarioConfig, mode: Mode, solvers: &[SolverKind]) -> Result<Vec<TrialRecord>> {
    let ctx = TrialContext::new(cfg, mode, solvers)?;
    (0..cfg.samples).into_par_iter().map(|i| ctx.run_trial(i)).collect()
}

pub const TRIALS_HEADER: &str = "trial,x,y,phi,delta,dist,solver,est_x,est_y,est_phi,pos_err,ang_err,converged,dropped";

/// One line of the trials CSV: a (trial, solver) pair. Dropped trials have
/// one row per requested solver with NaN estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub delta: f64,
    pub dist: f64,
    pub solver: SolverKind,
    pub est_x: f64,
    pub est_y: f64,
    pub est_phi: f64,
    pub pos_err: f64,
    pub ang_err: f64,
    pub converged: bool,
    pub dropped: bool,
}

impl TrialRow {
    pub fn to_csv_line(&self) -> String {
        [
            self.trial.to_string(),
            sig9(self.x),
            sig9(self.y),
            sig9(self.phi),
            sig9(self.delta),
            sig9(self.dist),
            self.solver.to_string(),
            sig9(self.est_x),
            sig9(self.est_y),
            sig9(self.est_phi),
            sig9(self.pos_err),
            sig9(self.ang_err),
            u8::from(self.converged).to_string(),
            u8::from(self.dropped).to_string(),
        ]
        .join(",")
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 14 {
            return Err(Error::Parse(format!("expected 14 fields, got {}: {line:?}", f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse()
                .map_err(|_| Error::Parse(format!("bad number {:?} in {line:?}", f[i])))
        };
        let flag = |i: usize| -> Result<bool> {
            match f[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                v => Err(Error::Parse(format!("bad flag {v:?} in {line:?}"))),
            }
        };
        Ok(Self {
            trial: f[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad trial index {:?}", f[0])))?,
            x: num(1)?,
            y: num(2)?,
            phi: num(3)?,
            delta: num(4)?,
            dist: num(5)?,
            solver: f[6].parse().map_err(|e: Error| Error::Parse(e.to_string()))?,
            est_x: num(7)?,
            est_y: num(8)?,
            est_phi: num(9)?,
            pos_err: num(10)?,
            ang_err: num(11)?,
            converged: flag(12)?,
            dropped: flag(13)?,
        })
    }
}

impl TrialRecord {
    /// CSV rows of this trial for the requested solvers.
    pub fn rows(&self, solvers: &[SolverKind]) -> Vec<TrialRow> {
        let s = &self.sample;
        solvers
            .iter()
            .map(|&solver| {
                let o = self.outcomes.iter().find(|o| o.solver == solver);
                let est = o.and_then(|o| o.estimate);
                TrialRow {
                    trial: self.trial,
                    x: s.x,
                    y: s.y,
                    phi: s.phi,
                    delta: s.delta,
                    dist: s.dist,
                    solver,
                    est_x: est.map_or(f64::NAN, |e| e.x),
                    est_y: est.map_or(f64::NAN, |e| e.y),
                    est_phi: est.map_or(f64::NAN, |e| e.phi),
                    pos_err: o.map_or(f64::NAN, |o| o.pos_err),
                    ang_err: o.map_or(f64::NAN, |o| o.ang_err),
                    converged: o.is_some_and(|o| o.converged),
                    dropped: self.dropped,
                }
            })
            .collect()
    }
}

pub fn write_trials_csv(mut out: impl Write, records: &[TrialRecord], solvers: &[SolverKind]) -> Result<()> {
    writeln!(out, "{TRIALS_HEADER}")?;
    for r in records {
        for row in r.rows(solvers) {
            writeln!(out, "{}", row.to_csv_line())?;
        }
    }
    Ok(())
}

pub fn read_trials_csv(input: impl BufRead) -> Result<Vec<TrialRow>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim_end) != Some(TRIALS_HEADER) {
        return Err(Error::Parse(format!("trials CSV must start with {TRIALS_HEADER:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(TrialRow::parse_csv_line(&line)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_round_trip() {
        let row = TrialRow {
            trial: 17,
            x: -1.25,
            y: 3.0 / 7.0,
            phi: 5.5,
            delta: -0.0625,
            dist: 12.345678912,
            solver: SolverKind::Soft,
            est_x: f64::NAN,
            est_y: 0.1,
            est_phi: -3.0,
            pos_err: 1e-7,
            ang_err: 0.0,
            converged: true,
            dropped: false,
        };
        let line = row.to_csv_line();
        let back = TrialRow::parse_csv_line(&line).unwrap();
        assert_eq!(back.to_csv_line(), line);
        assert_eq!(back.solver, SolverKind::Soft);
        assert!(back.est_x.is_nan());
        assert!(TrialRow::parse_csv_line("1,2,3").is_err());
    }

    #[test]
    fn mode_names() {
        assert_eq!("rendered".parse::<Mode>().unwrap(), Mode::Rendered);
        assert_eq!(Mode::Analytic.to_string(), "analytic");
        assert!("both".parse::<Mode>().is_err());
    }
}
