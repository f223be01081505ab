//! Square fiducial tag detection: adaptive threshold, spur pruning, edge
//! clusters, simple cycles, quadrilateral verification, corner refinement
//! and decoding.

pub mod codebook;
pub mod decode;
pub mod edges;
pub mod image;
pub mod quad;
pub mod threshold;

pub use codebook::{CodebookEntry, TagCode, TagCodebook};
pub use decode::{decode_tag, decode_tag_with, DecodeParams, TagDetection};
pub use edges::{extract_edge_clusters, extract_simple_cycles, prune_spurs, EdgeCluster, EdgeCycle};
pub use image::{BinaryImage, GrayImage, IntegralImage, RgbImage};
pub use quad::{refine_edges, verify_quadrilateral, Line2, QuadCandidate, QuadParams};
pub use threshold::{adaptive_threshold, remove_small_components, MIN_FOREGROUND_AREA};

use crate::error::Result;
use quad::{convex_intersection_area, polygon_signed_area};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Odd side of the local-mean window, px.
    pub window: usize,
    /// Intensity margin below the local mean.
    pub offset: i32,
    pub min_area: usize,
    pub quad: QuadParams,
    /// Gray-level sub-pixel refit of the quad sides before decoding.
    pub refine_edges: bool,
    pub decode: DecodeParams,
    /// Quads with a side shorter than this are skipped, px.
    pub min_side: f64,
}

impl DetectorParams {
    /// Window scaled with image width: 31 px at 960.
    pub fn for_resolution(width: usize) -> Self {
        let w = (31.0 * width as f64 / 960.0).round() as usize;
        Self {
            window: (w | 1).max(3),
            offset: 8,
            min_area: MIN_FOREGROUND_AREA,
            quad: QuadParams::default(),
            refine_edges: true,
            decode: DecodeParams::default(),
            min_side: 8.0,
        }
    }
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self::for_resolution(960)
    }
}

/// Intermediate results kept for debug overlays.
#[derive(Debug, Clone, Default)]
pub struct DetectionTrace {
    pub quads: Vec<QuadCandidate>,
    pub detections: Vec<TagDetection>,
}

/// Detected tags sorted by id, with overlapping duplicates removed.
pub fn detect_tags(img: &GrayImage, codebook: &TagCodebook, params: &DetectorParams) -> Result<Vec<TagDetection>> {
    Ok(detect_tags_traced(img, codebook, params)?.detections)
}

pub fn detect_tags_traced(img: &GrayImage, codebook: &TagCodebook, params: &DetectorParams) -> Result<DetectionTrace> {
    let ii = IntegralImage::new(img);
    let mut bin = threshold::adaptive_threshold_with(img, &ii, params.window, params.offset, params.min_area)?;
    edges::prune_spurs(&mut bin);
    let clusters = extract_edge_clusters(&bin);
    let mut quads = Vec::new();
    let mut found = Vec::new();
    for cluster in clusters.iter().filter(|c| !c.touches_border(img.width(), img.height())) {
        let Some(cycle) = edges::trace_simple_cycle(cluster) else {
            continue;
        };
        let Some(mut quad) = verify_quadrilateral(&cycle, &params.quad) else {
            continue;
        };
        if quad.min_side() < params.min_side {
            continue;
        }
        if params.refine_edges {
            quad = refine_edges(img, &quad);
        }
        quads.push(quad);
        if let Some(det) = decode_tag_with(&ii, &quad, codebook, &params.decode) {
            found.push(det);
        }
    }
    Ok(DetectionTrace {
        quads,
        detections: suppress_overlaps(found),
    })
}

fn oriented(corners: &[nalgebra::Vector2<f64>; 4]) -> Vec<nalgebra::Vector2<f64>> {
    let mut v = corners.to_vec();
    if polygon_signed_area(&v) < 0.0 {
        v.reverse();
    }
    v
}

/// Drops any detection sharing more than half of the smaller quad's area
/// with a better one (lower Hamming distance, then larger area).
pub fn suppress_overlaps(mut dets: Vec<TagDetection>) -> Vec<TagDetection> {
    let area = |d: &TagDetection| polygon_signed_area(&d.corners).abs();
    dets.sort_by(|a, b| a.hamming.cmp(&b.hamming).then(area(b).total_cmp(&area(a))));
    let mut kept: Vec<TagDetection> = Vec::new();
    for d in dets {
        let poly = oriented(&d.corners);
        let clash = kept.iter().any(|k| {
            let inter = convex_intersection_area(&poly, &oriented(&k.corners));
            inter > 0.5 * area(&d).min(area(k))
        });
        if !clash {
            kept.push(d);
        }
    }
    kept.sort_by(|a, b| a.tag_id.cmp(&b.tag_id).then(a.corners[0].x.total_cmp(&b.corners[0].x)));
    kept
}

/// Candidate quads in blue, detections in green with corner 0 marked red.
pub fn debug_overlay(img: &GrayImage, trace: &DetectionTrace) -> RgbImage {
    let mut out = RgbImage::from_gray(img);
    let seg = |out: &mut RgbImage, c: &[nalgebra::Vector2<f64>; 4], rgb| {
        for i in 0..4 {
            let (a, b) = (c[i], c[(i + 1) % 4]);
            out.line((a.x, a.y), (b.x, b.y), rgb);
        }
    };
    for q in &trace.quads {
        seg(&mut out, &q.corners, [40, 90, 255]);
    }
    for d in &trace.detections {
        seg(&mut out, &d.corners, [0, 220, 0]);
        let c0 = d.corners[0];
        for dy in -2..=2 {
            for dx in -2..=2 {
                out.put(c0.x.round() as i64 + dx, c0.y.round() as i64 + dy, [255, 0, 0]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector2, Vector3};

    /// Renders a tag through a tag-to-image homography with 4×4
    /// supersampling on a 200-gray background.
    fn render(code: &TagCode, h: &Matrix3<f64>, w: usize, hgt: usize) -> GrayImage {
        let inv = h.try_inverse().unwrap();
        GrayImage::from_fn(w, hgt, |x, y| {
            let mut acc = 0.0f64;
            for sy in 0..4 {
                for sx in 0..4 {
                    let px = x as f64 - 0.5 + (sx as f64 + 0.5) / 4.0;
                    let py = y as f64 - 0.5 + (sy as f64 + 0.5) / 4.0;
                    let t = inv * Vector3::new(px, py, 1.0);
                    acc += match code.canonical_is_black(t.x / t.z, t.y / t.z) {
                        Some(true) => 20.0,
                        Some(false) => 235.0,
                        None => 200.0,
                    };
                }
            }
            (acc / 16.0).round() as u8
        })
    }

    fn project(h: &Matrix3<f64>, x: f64, y: f64) -> Vector2<f64> {
        let p = h * Vector3::new(x, y, 1.0);
        Vector2::new(p.x / p.z, p.y / p.z)
    }

    /// Frontal placement: canonical `+x` points up the image, `+y` left.
    fn frontal(center: (f64, f64), half: f64) -> Matrix3<f64> {
        Matrix3::new(0.0, -half, center.0, -half, 0.0, center.1, 0.0, 0.0, 1.0)
    }

    #[test]
    fn frontal_tag_decodes_with_rotation_zero() {
        let book = TagCodebook::default_family();
        let code = book.get(3).unwrap();
        let h = frontal((100.0, 100.0), 60.0);
        let img = render(code, &h, 200, 200);
        let dets = detect_tags(&img, &book, &DetectorParams::default()).unwrap();
        assert_eq!(dets.len(), 1);
        let d = dets[0];
        assert_eq!((d.tag_id, d.hamming, d.rotation_applied), (3, 0, 0));
        for (c, &(x, y)) in d.corners.iter().zip(&decode::CANONICAL_CORNERS) {
            assert!((c - project(&h, x, y)).norm() < 0.2, "{c}");
        }
    }

    #[test]
    fn rotated_image_increments_rotation() {
        let book = TagCodebook::default_family();
        let code = book.get(11).unwrap();
        let img = render(code, &frontal((100.0, 100.0), 60.0), 200, 200);
        let base = detect_tags(&img, &book, &DetectorParams::default()).unwrap()[0];
        let mut rot = img.clone();
        let mut prev = base;
        for _ in 0..4 {
            rot = rot.rotated_cw();
            let d = detect_tags(&rot, &book, &DetectorParams::default()).unwrap();
            assert_eq!(d.len(), 1);
            let d = d[0];
            assert_eq!(d.tag_id, 11);
            assert_eq!(d.rotation_applied, (prev.rotation_applied + 90) % 360);
            // clockwise quarter turn of a 200×200 image: (x, y) -> (199 - y, x)
            for (a, b) in prev.corners.iter().zip(&d.corners) {
                let mapped = Vector2::new(199.0 - a.y, a.x);
                assert!((mapped - b).norm() < 0.5, "{mapped} vs {b}");
            }
            prev = d;
        }
    }

    #[test]
    fn unknown_code_is_rejected() {
        let book = TagCodebook::default_family();
        // find a code at distance >= 2 from every entry under rotation
        let foreign = (0u64..1 << 16)
            .map(|b| TagCode::new(b, 4))
            .find(|c| c.bits.count_ones() >= 6 && book.entries().iter().all(|e| c.rotational_distance(&e.code) >= 2))
            .unwrap();
        let img = render(&foreign, &frontal((100.0, 100.0), 60.0), 200, 200);
        assert!(detect_tags(&img, &book, &DetectorParams::default()).unwrap().is_empty());
    }

    #[test]
    fn blank_image_has_no_detections() {
        let img = GrayImage::new(320, 240, 128);
        let book = TagCodebook::default_family();
        assert!(detect_tags(&img, &book, &DetectorParams::for_resolution(320))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn perspective_tag_corners_are_subpixel() {
        let book = TagCodebook::default_family();
        let code = book.get(0).unwrap();
        // general projective map with visible foreshortening
        let h = Matrix3::new(-3.0, -55.0, 210.0, -38.0, 8.0, 150.0, 0.0012, 0.0009, 1.0);
        let img = render(code, &h, 400, 300);
        let dets = detect_tags(&img, &book, &DetectorParams::default()).unwrap();
        assert_eq!(dets.len(), 1);
        let d = dets[0];
        assert_eq!(d.tag_id, 0);
        let rms = (d
            .corners
            .iter()
            .zip(&decode::CANONICAL_CORNERS)
            .map(|(c, &(x, y))| (c - project(&h, x, y)).norm_squared())
            .sum::<f64>()
            / 4.0)
            .sqrt();
        assert!(rms < 0.35, "rms {rms}");
    }

    #[test]
    fn overlap_suppression_keeps_better_detection() {
        let sq = |x0: f64, s: f64| {
            [
                Vector2::new(x0 + s, x0 + s),
                Vector2::new(x0, x0 + s),
                Vector2::new(x0, x0),
                Vector2::new(x0 + s, x0),
            ]
        };
        let a = TagDetection {
            tag_id: 4,
            corners: sq(0.0, 10.0),
            hamming: 1,
            rotation_applied: 0,
        };
        let b = TagDetection {
            tag_id: 2,
            corners: sq(1.0, 10.0),
            hamming: 0,
            rotation_applied: 0,
        };
        let c = TagDetection {
            tag_id: 1,
            corners: sq(30.0, 10.0),
            hamming: 1,
            rotation_applied: 0,
        };
        let kept = suppress_overlaps(vec![a, b, c]);
        assert_eq!(kept.iter().map(|d| d.tag_id).collect::<Vec<_>>(), vec![1, 2]);
    }
}
