//! Vehicle-top tag pose estimation: closed-form (`Bas.`), hard plane
//! constraint (`H.Opt.`) and soft plane penalty (`S.Opt.`, optionally over
//! several cameras).

pub mod layout;
pub mod lsq;
pub mod solvers;

pub use layout::{LayoutKind, TagLayout, TagPlacement};
pub use lsq::{numeric_jacobian, solve_least_squares, LsqReport, SolverSettings};
pub use solvers::{
    estimate_basic, estimate_hard, estimate_soft, hard_residuals, homography_to_pose, init_constrained,
    reference_camera, soft_residuals, wrap_angle, HorizontalPose, Observations, PoseEstimate,
};

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::geom::CameraModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Basic,
    Hard,
    Soft,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Basic, SolverKind::Hard, SolverKind::Soft];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Basic => "bas",
            SolverKind::Hard => "hopt",
            SolverKind::Soft => "sopt",
        }
    }

    /// Runs this solver on a single camera's observations.
    pub fn estimate(
        self,
        layout: &TagLayout,
        obs: &Observations,
        cam: &CameraModel,
        h: f64,
        settings: &SolverSettings,
    ) -> crate::Result<PoseEstimate> {
        match self {
            SolverKind::Basic => estimate_basic(layout, obs, cam),
            SolverKind::Hard => estimate_hard(layout, obs, cam, h, settings),
            SolverKind::Soft => estimate_soft(
                layout,
                std::slice::from_ref(obs),
                std::slice::from_ref(cam),
                h,
                settings,
            ),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?} (expected bas, hopt or sopt)")))
    }
}

/// Parses a comma-separated solver list such as `bas,sopt`.
pub fn parse_solver_list(s: &str) -> Result<Vec<SolverKind>, Error> {
    let mut out: Vec<SolverKind> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::Config("empty solver list".into()));
    }
    Ok(out)
}
