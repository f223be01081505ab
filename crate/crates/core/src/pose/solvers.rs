//! Closed-form homography solver and the hard/soft plane-constrained
//! refinements, including the multi-camera objective.

use nalgebra::{DVector, Matrix3, Vector2, Vector3};

use super::layout::TagLayout;
use super::lsq::{solve_least_squares, SolverSettings};
use crate::error::{Error, Result};
use crate::geom::{
    backproject_to_height, dlt_homography, project, rot_from_vec, vec_from_rot, CameraModel, Homography,
    RigidTransform, RotationVector,
};

/// Image points of one camera, keyed by layout index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observations {
    points: Vec<(usize, Vector2<f64>)>,
}

impl Observations {
    /// Rejects repeated layout indices and non-finite pixels.
    pub fn new(mut points: Vec<(usize, Vector2<f64>)>) -> Result<Self> {
        points.sort_by_key(|p| p.0);
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::DegenerateConfiguration("layout index observed twice".into()));
        }
        if points.iter().any(|(_, p)| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::DegenerateConfiguration("non-finite pixel coordinate".into()));
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[(usize, Vector2<f64>)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn check(&self, layout: &TagLayout) -> Result<()> {
        match self.points.iter().find(|(i, _)| *i >= layout.len()) {
            Some((i, _)) => Err(Error::DegenerateConfiguration(format!(
                "layout index {i} out of range for {} control points",
                layout.len()
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizontalPose {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub w_tw: RotationVector,
    pub t_tw: Vector3<f64>,
    pub horizontal: HorizontalPose,
    /// Root mean squared reprojection distance, px.
    pub rms_reprojection: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PoseEstimate {
    fn new(
        w_tw: RotationVector,
        t_tw: Vector3<f64>,
        rms_reprojection: f64,
        iterations: usize,
        converged: bool,
    ) -> Self {
        Self {
            horizontal: HorizontalPose {
                x: t_tw.x,
                y: t_tw.y,
                phi: w_tw.0.z,
            },
            w_tw,
            t_tw,
            rms_reprojection,
            iterations,
            converged,
        }
    }

    pub fn transform(&self) -> RigidTransform {
        RigidTransform::from_vec(&self.w_tw, self.t_tw)
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

fn reprojection_rms(layout: &TagLayout, views: &[(&CameraModel, &Observations)], tw: &RigidTransform) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (cam, obs) in views {
        for (i, uv) in obs.points() {
            let p = tw.apply(&layout.control_points()[*i]);
            sum += match project(cam, &p) {
                Ok(q) => (q - uv).norm_squared(),
                Err(_) => f64::INFINITY,
            };
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Tag-to-camera pose from a tag-plane homography: normalized columns of
/// `A^-1 H`, their cross product, projection onto a rotation through the
/// rotation-vector round trip, and translation `A^-1 H e3 / lambda` with
/// `lambda = sqrt(|A^-1 H e1| |A^-1 H e2|)`. `H` is negated when needed so the
/// tag lies in front of the camera.
pub fn homography_to_pose(h: &Homography, intrinsics: &Matrix3<f64>) -> Result<RigidTransform> {
    let a_inv = intrinsics
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("singular intrinsic matrix".into()))?;
    let mut m = a_inv * h.matrix();
    let n1 = m.column(0).norm();
    let n2 = m.column(1).norm();
    let lambda = (n1 * n2).sqrt();
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::DegenerateConfiguration("homography has a null column".into()));
    }
    if m[(2, 2)] / lambda < 0.0 {
        m = -m;
    }
    let t_tc: Vector3<f64> = m.column(2) / lambda;
    if !(t_tc.z > 0.0) {
        return Err(Error::TagBehindCamera);
    }
    let r1: Vector3<f64> = m.column(0) / n1;
    let r2: Vector3<f64> = m.column(1) / n2;
    let r3 = r1.cross(&r2);
    let quasi = Matrix3::from_columns(&[r1, r2, r3]);
    let w_tc = vec_from_rot(&quasi)?;
    Ok(RigidTransform::new(rot_from_vec(&w_tc), t_tc))
}

/// Closed-form pose from the DLT homography of the observed control points.
pub fn estimate_basic(layout: &TagLayout, obs: &Observations, cam: &CameraModel) -> Result<PoseEstimate> {
    obs.check(layout)?;
    if obs.len() < 4 {
        return Err(Error::DegenerateConfiguration(format!(
            "need at least 4 control points, got {}",
            obs.len()
        )));
    }
    let pairs: Vec<_> = obs
        .points()
        .iter()
        .map(|(i, uv)| {
            let p = layout.control_points()[*i];
            (Vector2::new(p.x, p.y), *uv)
        })
        .collect();
    let h = dlt_homography(&pairs)?;
    let tc = homography_to_pose(&h, &cam.intrinsics)?;
    let tw = cam.cam_to_world.compose(&tc);
    let w_tw = vec_from_rot(&tw.rotation)?;
    let rms = reprojection_rms(layout, &[(cam, obs)], &tw);
    Ok(PoseEstimate::new(w_tw, tw.translation, rms, 0, true))
}

/// Initial horizontal pose: mean of the observed corners back-projected
/// onto `z = h`, heading from the closed-form solver.
pub fn init_constrained(layout: &TagLayout, obs: &Observations, cam: &CameraModel, h: f64) -> Result<HorizontalPose> {
    let basic = estimate_basic(layout, obs, cam)?;
    let mut sum = Vector2::zeros();
    for (_, uv) in obs.points() {
        sum += backproject_to_height(cam, uv, h)?;
    }
    let mean = sum / obs.len() as f64;
    Ok(HorizontalPose {
        x: mean.x,
        y: mean.y,
        phi: basic.horizontal.phi,
    })
}

/// Reprojection residuals of the plane-constrained pose `[x, y, phi]`
/// (tag plane fixed at `z = h`). Non-finite where a point falls behind the
/// camera.
pub fn hard_residuals(
    layout: &TagLayout,
    obs: &Observations,
    cam: &CameraModel,
    h: f64,
    p: &DVector<f64>,
) -> DVector<f64> {
    let r = rot_from_vec(&RotationVector::new(0.0, 0.0, p[2]));
    let t = Vector3::new(p[0], p[1], h);
    let mut out = DVector::zeros(2 * obs.len());
    for (k, (i, uv)) in obs.points().iter().enumerate() {
        let pw = r * layout.control_points()[*i] + t;
        let d = match project(cam, &pw) {
            Ok(q) => q - uv,
            Err(_) => Vector2::new(f64::NAN, f64::NAN),
        };
        out[2 * k] = d.x;
        out[2 * k + 1] = d.y;
    }
    out
}

/// Reprojection residuals over all cameras followed by `mu (z_i - h)` for
/// every control point observed by at least one camera, for the full pose
/// `[w_tw; T_tw]`.
pub fn soft_residuals(
    layout: &TagLayout,
    views: &[(&CameraModel, &Observations)],
    h: f64,
    mu: f64,
    p: &DVector<f64>,
) -> DVector<f64> {
    let r = rot_from_vec(&RotationVector::new(p[0], p[1], p[2]));
    let t = Vector3::new(p[3], p[4], p[5]);
    let world: Vec<Vector3<f64>> = layout.control_points().iter().map(|c| r * c + t).collect();
    let mut seen = vec![false; layout.len()];
    let mut out = Vec::new();
    for (cam, obs) in views {
        for (i, uv) in obs.points() {
            seen[*i] = true;
            match project(cam, &world[*i]) {
                Ok(q) => {
                    out.push(q.x - uv.x);
                    out.push(q.y - uv.y);
                }
                Err(_) => {
                    out.push(f64::NAN);
                    out.push(f64::NAN);
                }
            }
        }
    }
    for (i, w) in world.iter().enumerate() {
        if seen[i] {
            out.push(mu * (w.z - h));
        }
    }
    DVector::from_vec(out)
}

/// Three-parameter refinement with the tag plane pinned at `z = h`.
pub fn estimate_hard(
    layout: &TagLayout,
    obs: &Observations,
    cam: &CameraModel,
    h: f64,
    settings: &SolverSettings,
) -> Result<PoseEstimate> {
    let init = init_constrained(layout, obs, cam, h)?;
    let f = |p: &DVector<f64>| hard_residuals(layout, obs, cam, h, p);
    let (p, report) = solve_least_squares(f, DVector::from_vec(vec![init.x, init.y, init.phi]), settings)?;
    let w = RotationVector::new(0.0, 0.0, wrap_angle(p[2]));
    let t = Vector3::new(p[0], p[1], h);
    let rms = reprojection_rms(layout, &[(cam, obs)], &RigidTransform::from_vec(&w, t));
    Ok(PoseEstimate::new(w, t, rms, report.iterations, report.converged))
}

/// Index of the camera with the most observations, ties to the lowest index.
pub fn reference_camera(obs: &[Observations]) -> Option<usize> {
    obs.iter()
        .enumerate()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
}

/// Six-parameter refinement with a `mu`-weighted penalty pulling every
/// observed control point toward `z = h`, summed over all cameras.
pub fn estimate_soft(
    layout: &TagLayout,
    obs: &[Observations],
    cams: &[CameraModel],
    h: f64,
    settings: &SolverSettings,
) -> Result<PoseEstimate> {
    if obs.len() != cams.len() || obs.is_empty() {
        return Err(Error::DegenerateConfiguration(format!(
            "{} observation sets for {} cameras",
            obs.len(),
            cams.len()
        )));
    }
    for o in obs {
        o.check(layout)?;
    }
    let k = reference_camera(obs).unwrap_or(0);
    let init = init_constrained(layout, &obs[k], &cams[k], h)?;
    let views: Vec<(&CameraModel, &Observations)> = cams.iter().zip(obs).filter(|(_, o)| !o.is_empty()).collect();
    let f = |p: &DVector<f64>| soft_residuals(layout, &views, h, settings.mu, p);
    let start = DVector::from_vec(vec![0.0, 0.0, init.phi, init.x, init.y, h]);
    let (p, report) = solve_least_squares(f, start, settings)?;
    let tw = RigidTransform::from_vec(&RotationVector::new(p[0], p[1], p[2]), Vector3::new(p[3], p[4], p[5]));
    // canonical rotation vector (angle in [0, pi])
    let w = vec_from_rot(&tw.rotation)?;
    let rms = reprojection_rms(layout, &views, &tw);
    Ok(PoseEstimate::new(
        w,
        tw.translation,
        rms,
        report.iterations,
        report.converged,
    ))
}
