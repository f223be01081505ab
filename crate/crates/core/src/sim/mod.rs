//! Synthetic intersection: a corner RSU camera, a tagged bus sampled in a
//! sector in front of it, and the trial loop feeding the pose solvers.

pub mod config;
pub mod scene;
pub mod trials;

pub use config::ScenarioConfig;
pub use scene::{
    in_frame, observe_corners, render_frame, sample_pose, sample_poses, tag_plane_homography, trial_rng,
    GroundTruthSample,
};
pub use trials::{
    read_trials_csv, run_trials, write_trials_csv, DetectionAudit, Mode, SolverOutcome, TrialContext, TrialRecord,
    TrialRow, TRIALS_HEADER,
};
