//! Vehicle-top fiducial tag detection and roadside-camera vehicle pose
//! estimation, with a synthetic intersection simulator for benchmarking.

pub mod detect;
pub mod error;
pub mod geom;
pub mod pose;
pub mod sim;
pub mod stats;
pub mod textfmt;

pub use error::{Error, Result};
