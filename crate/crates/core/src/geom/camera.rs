//! Pinhole camera with known intrinsics and world extrinsics.

use nalgebra::{Matrix3, Vector2, Vector3};

use super::rotation::RigidTransform;
use crate::error::{Error, Result};

/// Minimum depth accepted by [`project`].
pub const MIN_DEPTH: f64 = 1e-6;

/// Calibrated pinhole camera (no distortion).
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    /// Upper-triangular intrinsic matrix with `A[2][2] = 1`.
    pub intrinsics: Matrix3<f64>,
    /// World to camera (`R_wc`, `T_wc`).
    pub world_to_cam: RigidTransform,
    /// Camera to world (`R_cw`, `T_cw`).
    pub cam_to_world: RigidTransform,
    /// Image width and height, px.
    pub resolution: (u32, u32),
}

impl CameraModel {
    pub fn new(intrinsics: Matrix3<f64>, world_to_cam: RigidTransform, resolution: (u32, u32)) -> Self {
        Self {
            intrinsics,
            cam_to_world: world_to_cam.inverse(),
            world_to_cam,
            resolution,
        }
    }

    pub fn pinhole_intrinsics(fx: f64, fy: f64, cx: f64, cy: f64) -> Matrix3<f64> {
        Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0)
    }

    /// Camera mounted at `position`, yawed to face `target` horizontally and
    /// pitched down by `pitch_down` radians, principal point at the image
    /// center. Camera axes follow the usual x-right, y-down, z-forward
    /// convention.
    pub fn looking_at(
        position: Vector3<f64>,
        target: Vector3<f64>,
        pitch_down: f64,
        focal: f64,
        resolution: (u32, u32),
    ) -> Self {
        let mut heading = target - position;
        heading.z = 0.0;
        let heading = heading.normalize();
        let forward = heading * pitch_down.cos() - Vector3::z() * pitch_down.sin();
        let right = heading.cross(&Vector3::z()).normalize();
        let down = forward.cross(&right);
        let r_cw = Matrix3::from_columns(&[right, down, forward]);
        let cam_to_world = RigidTransform::new(r_cw, position);
        let a = Self::pinhole_intrinsics(focal, focal, 0.5 * resolution.0 as f64, 0.5 * resolution.1 as f64);
        Self::new(a, cam_to_world.inverse(), resolution)
    }

    pub fn width(&self) -> u32 {
        self.resolution.0
    }

    pub fn height(&self) -> u32 {
        self.resolution.1
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        self.cam_to_world.translation
    }

    pub fn contains(&self, uv: &Vector2<f64>) -> bool {
        uv.x >= 0.0 && uv.y >= 0.0 && uv.x < self.width() as f64 && uv.y < self.height() as f64
    }

    pub fn project(&self, p_w: &Vector3<f64>) -> Result<Vector2<f64>> {
        project(self, p_w)
    }

    /// Flat `key = value` text with `width`, `height`, row-major
    /// `intrinsics` and world-to-camera `rotation`, and `translation`.
    /// Numbers print in shortest round-trip form, so parsing gives back the
    /// same camera.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let rows = |m: &Matrix3<f64>| join(m.transpose().as_slice());
        format!(
            "width = {}\nheight = {}\nintrinsics = {}\nrotation = {}\ntranslation = {}\n",
            self.resolution.0,
            self.resolution.1,
            rows(&self.intrinsics),
            rows(&self.world_to_cam.rotation),
            join(self.world_to_cam.translation.as_slice()),
        )
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let (mut width, mut height, mut a, mut r, mut t) = (None, None, None, None, None);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key = value, got {line:?}")))?;
            let nums = || -> Result<Vec<f64>> {
                value
                    .split_whitespace()
                    .map(|v| {
                        v.parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad number {v:?} in {line:?}")))
                    })
                    .collect()
            };
            let exactly = |n: usize| -> Result<Vec<f64>> {
                let v = nums()?;
                if v.len() == n {
                    Ok(v)
                } else {
                    Err(Error::Parse(format!("{} needs {n} numbers", key.trim())))
                }
            };
            let pixels = || {
                value
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad size in {line:?}")))
            };
            match key.trim() {
                "width" => width = Some(pixels()?),
                "height" => height = Some(pixels()?),
                "intrinsics" => a = Some(Matrix3::from_row_slice(&exactly(9)?)),
                "rotation" => r = Some(Matrix3::from_row_slice(&exactly(9)?)),
                "translation" => t = Some(Vector3::from_row_slice(&exactly(3)?)),
                other => return Err(Error::Parse(format!("unknown camera key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("camera file lacks {k:?}"));
        let a: Matrix3<f64> = a.ok_or_else(|| missing("intrinsics"))?;
        let r: Matrix3<f64> = r.ok_or_else(|| missing("rotation"))?;
        if (a[(2, 2)] - 1.0).abs() > 1e-12 || a[(1, 0)] != 0.0 || a[(2, 0)] != 0.0 || a[(2, 1)] != 0.0 {
            return Err(Error::Parse(
                "intrinsics must be upper triangular with A[2][2] = 1".into(),
            ));
        }
        if (r * r.transpose() - Matrix3::identity()).norm() > 1e-9 || r.determinant() <= 0.0 {
            return Err(Error::NotARotation);
        }
        Ok(Self::new(
            a,
            RigidTransform::new(r, t.ok_or_else(|| missing("translation"))?),
            (
                width.ok_or_else(|| missing("width"))?,
                height.ok_or_else(|| missing("height"))?,
            ),
        ))
    }
}

/// Pinhole projection `lambda [u v 1]^T = A (R_wc p + T_wc)`; no clipping.
pub fn project(cam: &CameraModel, p_w: &Vector3<f64>) -> Result<Vector2<f64>> {
    let h = cam.intrinsics * cam.world_to_cam.apply(p_w);
    if !(h.z > MIN_DEPTH) {
        return Err(Error::BehindCamera(h.z));
    }
    Ok(Vector2::new(h.x / h.z, h.y / h.z))
}

/// Intersects the viewing ray through pixel `uv` with the plane `z_w = h`.
pub fn backproject_to_height(cam: &CameraModel, uv: &Vector2<f64>, h: f64) -> Result<Vector2<f64>> {
    let ar = cam.intrinsics * cam.world_to_cam.rotation;
    let c1 = ar.column(0).into_owned();
    let c2 = ar.column(1).into_owned();
    let c3 = ar.column(2).into_owned();
    let m = Matrix3::from_columns(&[c1, c2, Vector3::new(uv.x, uv.y, 1.0)]);
    if !(m.determinant().abs() > 1e-12) {
        return Err(Error::RayParallelToPlane);
    }
    let rhs = -c3 * h - cam.intrinsics * cam.world_to_cam.translation;
    let sol = m.lu().solve(&rhs).ok_or(Error::RayParallelToPlane)?;
    let lambda = -sol.z;
    if !(lambda > 0.0) {
        return Err(Error::NegativeDepth);
    }
    Ok(Vector2::new(sol.x, sol.y))
}
