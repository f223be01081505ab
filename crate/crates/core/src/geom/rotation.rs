//! Rotation vectors, the Rodrigues exponential map and its inverse, and
//! rigid transforms.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Axis-angle rotation, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationVector(pub Vector3<f64>);

impl RotationVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        rot_from_vec(self)
    }
}

pub(crate) fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

fn vee_antisym(r: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)])
}

/// Rodrigues exponential map.
pub fn rot_from_vec(w: &RotationVector) -> Matrix3<f64> {
    let theta = w.0.norm();
    let k = skew(&w.0);
    if theta < 1e-8 {
        // second-order series
        return Matrix3::identity() + k + 0.5 * k * k;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Matrix3::identity() + a * k + b * k * k
}

/// Orthogonal polar factor of `m` via the Newton iteration `X <- (X + X^-T) / 2`.
///
/// Fails with [`Error::NotARotation`] when the polar factor is a reflection or
/// `m` is singular.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    if !(m.determinant() > 0.0) {
        return Err(Error::NotARotation);
    }
    let mut x = *m;
    for _ in 0..100 {
        let inv_t = x.try_inverse().ok_or(Error::NotARotation)?.transpose();
        let next = 0.5 * (x + inv_t);
        let delta = (next - x).norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    if x.determinant() <= 0.0 {
        return Err(Error::NotARotation);
    }
    Ok(x)
}

/// Inverse of [`rot_from_vec`]. Accepts quasi-rotations and returns the log of
/// their polar factor; the returned angle lies in `[0, pi]`.
pub fn vec_from_rot(r: &Matrix3<f64>) -> Result<RotationVector> {
    let r = nearest_rotation(r)?;
    let v = vee_antisym(&r);
    let s = 0.5 * v.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if theta < 1e-8 {
        return Ok(RotationVector(0.5 * (1.0 + theta * theta / 6.0) * v));
    }
    if theta < std::f64::consts::PI - 1e-3 {
        return Ok(RotationVector(theta / (2.0 * theta.sin()) * v));
    }
    // Near pi the antisymmetric part vanishes; read the axis from the
    // symmetric part (1 - cos) a a^T instead.
    let b = 0.5 * (r + r.transpose()) - c * Matrix3::identity();
    let (mut best, mut col) = (f64::MIN, 0);
    for i in 0..3 {
        if b[(i, i)] > best {
            best = b[(i, i)];
            col = i;
        }
    }
    let mut axis = b.column(col).into_owned();
    axis /= axis.norm();
    if axis.dot(&v) < 0.0 {
        axis = -axis;
    }
    Ok(RotationVector(theta * axis))
}

/// Proper rigid transform `x -> R x + T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_vec(w: &RotationVector, translation: Vector3<f64>) -> Self {
        Self::new(rot_from_vec(w), translation)
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform::new(rt, -(rt * self.translation))
    }
}
