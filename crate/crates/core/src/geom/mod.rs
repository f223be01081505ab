//! Fixed-size geometry: rotations, pinhole projection, DLT homography and
//! height-plane back-projection.

pub mod camera;
pub mod homography;
pub mod rotation;

pub use camera::{backproject_to_height, project, CameraModel};
pub use homography::{dlt_homography, jacobi_eigen, Homography};
pub use rotation::{nearest_rotation, rot_from_vec, vec_from_rot, RigidTransform, RotationVector};
