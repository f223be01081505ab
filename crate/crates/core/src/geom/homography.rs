//! Plane-to-image homography by the direct linear transform.
//!
//! The stacked constraint matrix `L` (two rows per correspondence) is
//! assembled on Hartley-normalized coordinates and the homography is the unit
//! eigenvector of `L^T L` belonging to its smallest eigenvalue. The 9x9
//! eigenproblem is solved in-crate by cyclic Jacobi rotations.

use nalgebra::{Matrix3, SMatrix, SVector, Vector2, Vector3};

use crate::error::{Error, Result};

/// Relative gap below which the two smallest eigenvalues of `L^T L` are
/// considered tied (the null space is not one-dimensional).
const DEGENERACY_GAP: f64 = 1e-8;

/// 3x3 projective map, defined up to scale. Stored with unit Frobenius norm
/// and non-negative `H[2][2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    /// Normalizes `m` to unit Frobenius norm and a non-negative bottom-right
    /// entry.
    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        let mut m = m / m.norm();
        if m[(2, 2)] < 0.0 {
            m = -m;
        }
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, p: &Vector2<f64>) -> Vector2<f64> {
        let h = self.0 * Vector3::new(p.x, p.y, 1.0);
        Vector2::new(h.x / h.z, h.y / h.z)
    }

    /// Frobenius distance to `other` after fixing both to unit norm and a
    /// common sign.
    pub fn relative_error(&self, other: &Matrix3<f64>) -> f64 {
        let mut o = other / other.norm();
        if o.dot(&self.0) < 0.0 {
            o = -o;
        }
        (self.0 - o).norm()
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Returns eigenvalues in ascending order with matching eigenvector columns.
pub fn jacobi_eigen<const N: usize>(a: &SMatrix<f64, N, N>) -> (SVector<f64, N>, SMatrix<f64, N, N>) {
    let mut a = *a;
    let mut v = SMatrix::<f64, N, N>::identity();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-20 * scale {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..N {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let mut values = SVector::<f64, N>::zeros();
    let mut vectors = SMatrix::<f64, N, N>::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[(src, src)];
        vectors.set_column(dst, &v.column(src));
    }
    (values, vectors)
}

/// Similarity transform taking `points` to centroid 0, RMS distance sqrt(2).
fn hartley_transform(points: impl Iterator<Item = Vector2<f64>> + Clone) -> Result<Matrix3<f64>> {
    let n = points.clone().count() as f64;
    let centroid = points.clone().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let ms = points.map(|p| (p - centroid).norm_squared()).sum::<f64>() / n;
    if !(ms > 0.0) || !ms.is_finite() {
        return Err(Error::DegenerateConfiguration("coincident points".into()));
    }
    let s = (2.0 / ms).sqrt();
    Ok(Matrix3::new(
        s,
        0.0,
        -s * centroid.x,
        0.0,
        s,
        -s * centroid.y,
        0.0,
        0.0,
        1.0,
    ))
}

fn apply_affine(t: &Matrix3<f64>, p: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(
        t[(0, 0)] * p.x + t[(0, 1)] * p.y + t[(0, 2)],
        t[(1, 0)] * p.x + t[(1, 1)] * p.y + t[(1, 2)],
    )
}

/// `L^T L` for the row-concatenated homography unknown `h_r`, accumulated
/// row pair by row pair.
pub(crate) fn normal_matrix(pairs: &[(Vector2<f64>, Vector2<f64>)]) -> SMatrix<f64, 9, 9> {
    let mut ltl = SMatrix::<f64, 9, 9>::zeros();
    for (src, dst) in pairs {
        let (x, y, u, v) = (src.x, src.y, dst.x, dst.y);
        let r1 = SVector::<f64, 9>::from_column_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u]);
        let r2 = SVector::<f64, 9>::from_column_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, -v]);
        ltl += r1 * r1.transpose() + r2 * r2.transpose();
    }
    ltl
}

/// Homography mapping tag-plane points (meters) to pixels, from `n >= 4`
/// correspondences `(tag_xy, pixel_uv)`.
pub fn dlt_homography(pairs: &[(Vector2<f64>, Vector2<f64>)]) -> Result<Homography> {
    if pairs.len() < 4 {
        return Err(Error::DegenerateConfiguration(format!(
            "homography needs at least 4 correspondences, got {}",
            pairs.len()
        )));
    }
    if pairs
        .iter()
        .any(|(a, b)| !(a.iter().chain(b.iter()).all(|c| c.is_finite())))
    {
        return Err(Error::DegenerateConfiguration("non-finite coordinates".into()));
    }
    let t_src = hartley_transform(pairs.iter().map(|p| p.0))?;
    let t_dst = hartley_transform(pairs.iter().map(|p| p.1))?;
    let normalized: Vec<_> = pairs
        .iter()
        .map(|(s, d)| (apply_affine(&t_src, s), apply_affine(&t_dst, d)))
        .collect();
    let (values, vectors) = jacobi_eigen(&normal_matrix(&normalized));
    let largest = values[8].abs().max(f64::MIN_POSITIVE);
    if values[1] - values[0] <= DEGENERACY_GAP * largest {
        return Err(Error::DegenerateConfiguration(
            "homography null space is not one-dimensional".into(),
        ));
    }
    let h = vectors.column(0);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("normalization".into()))?;
    Ok(Homography::from_matrix(t_dst_inv * hn * t_src))
}
