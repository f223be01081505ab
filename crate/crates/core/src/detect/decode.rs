//! Sampling the code grid through the quad homography and matching it
//! against a codebook.

use nalgebra::Vector2;

use super::codebook::{TagCode, TagCodebook};
use super::image::{GrayImage, IntegralImage};
use super::quad::QuadCandidate;
use crate::geom::dlt_homography;

/// Corners of the black square in canonical tag coordinates, in layout
/// corner order.
pub const CANONICAL_CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (1.0, -1.0)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagDetection {
    pub tag_id: u32,
    /// Image corners in layout corner order.
    pub corners: [Vector2<f64>; 4],
    pub hamming: u32,
    /// Clockwise quarter turns of the tag in the image relative to upright
    /// (canonical `+x` up): 0, 90, 180 or 270.
    pub rotation_applied: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeParams {
    /// Minimum gap between the white-band and black-border means.
    pub min_contrast: f64,
    /// Fraction of border-ring or white-band samples allowed on the wrong
    /// side of the threshold.
    pub max_frame_errors: f64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            min_contrast: 20.0,
            max_frame_errors: 0.25,
        }
    }
}

/// Canonical center of grid cell `(i, j)` on a grid of `n` cells spanning
/// `[-half, half]`, rows running from `+x` toward `-x` and columns from `+y`
/// toward `-y`.
fn grid_center(i: usize, j: usize, n: usize, half: f64) -> Vector2<f64> {
    let s = 2.0 * half / n as f64;
    Vector2::new(half - (i as f64 + 0.5) * s, half - (j as f64 + 0.5) * s)
}

fn ring(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n)
        .flat_map(move |i| (0..n).map(move |j| (i, j)))
        .filter(move |&(i, j)| i == 0 || j == 0 || i == n - 1 || j == n - 1)
}

/// [`decode_tag_with`] with a fresh integral image and default parameters.
pub fn decode_tag(img: &GrayImage, quad: &QuadCandidate, codebook: &TagCodebook) -> Option<TagDetection> {
    decode_tag_with(&IntegralImage::new(img), quad, codebook, &DecodeParams::default())
}

/// Samples every interior cell with a 3×3 box mean at the nearest pixel to
/// its projected center, binarizes against the midpoint of the black border
/// ring and the white band around it, and returns the best codebook match
/// within `max_hamming`.
pub fn decode_tag_with(
    ii: &IntegralImage,
    quad: &QuadCandidate,
    codebook: &TagCodebook,
    params: &DecodeParams,
) -> Option<TagDetection> {
    let pairs: Vec<_> = CANONICAL_CORNERS
        .iter()
        .zip(&quad.corners)
        .map(|(&(x, y), q)| (Vector2::new(x, y), *q))
        .collect();
    let h = dlt_homography(&pairs).ok()?;
    let (w, hgt) = (ii.width() as f64, ii.height() as f64);
    let sample = |p: Vector2<f64>| -> Option<f64> {
        let q = h.apply(&p);
        if !q.x.is_finite() || !q.y.is_finite() {
            return None;
        }
        let (x, y) = (q.x.round(), q.y.round());
        if x < 0.0 || y < 0.0 || x > w - 1.0 || y > hgt - 1.0 {
            return None;
        }
        Some(ii.box_mean(x as i64, y as i64, 1))
    };

    let k = codebook.k();
    let border: Vec<f64> = ring(k + 2)
        .map(|(i, j)| sample(grid_center(i, j, k + 2, 1.0)))
        .collect::<Option<_>>()?;
    let band_half = 1.0 + 2.0 / (k + 2) as f64;
    // the white band may run off the image when the tag touches the border
    let band_cells = ring(k + 4).count();
    let band: Vec<f64> = ring(k + 4)
        .filter_map(|(i, j)| sample(grid_center(i, j, k + 4, band_half)))
        .collect();
    if 2 * band.len() < band_cells {
        return None;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (black, white) = (mean(&border), mean(&band));
    if white - black < params.min_contrast {
        return None;
    }
    let threshold = 0.5 * (black + white);
    let bad_border = border.iter().filter(|&&v| v >= threshold).count();
    let bad_band = band.iter().filter(|&&v| v < threshold).count();
    if bad_border as f64 > params.max_frame_errors * border.len() as f64
        || bad_band as f64 > params.max_frame_errors * band.len() as f64
    {
        return None;
    }

    let mut cells = vec![false; k * k];
    for r in 0..k {
        for c in 0..k {
            let v = sample(grid_center(r + 1, c + 1, k + 2, 1.0))?;
            cells[r * k + c] = v < threshold;
        }
    }
    let observed = TagCode::from_cells(k, |r, c| cells[r * k + c]);
    let (tag_id, s, hamming) = codebook.best_match(&observed)?;
    if hamming > codebook.max_hamming() {
        return None;
    }
    Some(TagDetection {
        tag_id,
        corners: std::array::from_fn(|j| quad.corners[(j + 4 - s) % 4]),
        hamming,
        rotation_applied: 90 * ((4 - s) % 4) as u32,
    })
}
