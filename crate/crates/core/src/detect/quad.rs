//! Corner detection on simple cycles, line-fit corner refinement, and
//! convex-quad helpers.

use nalgebra::Vector2;

use super::edges::EdgeCycle;
use super::image::GrayImage;

/// Line `normal . p = offset` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line2 {
    pub normal: Vector2<f64>,
    pub offset: f64,
}

impl Line2 {
    /// Total-least-squares fit. `None` for fewer than two distinct points.
    pub fn fit(points: &[Vector2<f64>]) -> Option<Line2> {
        if points.len() < 2 {
            return None;
        }
        let n = points.len() as f64;
        let mean = points.iter().fold(Vector2::zeros(), |a, p| a + p) / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in points {
            let d = p - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        if sxx + syy <= 0.0 {
            return None;
        }
        let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let normal = Vector2::new(-angle.sin(), angle.cos());
        Some(Line2 {
            normal,
            offset: normal.dot(&mean),
        })
    }

    pub fn distance(&self, p: &Vector2<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn intersect(&self, other: &Line2) -> Option<Vector2<f64>> {
        let det = self.normal.x * other.normal.y - self.normal.y * other.normal.x;
        if det.abs() < 1e-9 {
            return None;
        }
        Some(Vector2::new(
            (self.offset * other.normal.y - self.normal.y * other.offset) / det,
            (self.normal.x * other.offset - self.offset * other.normal.x) / det,
        ))
    }
}

/// Verified quadrilateral: corner `i` is the intersection of side lines
/// `i - 1` and `i`; side `i` runs from corner `i` to corner `i + 1`. Corners
/// have positive signed area in pixel coordinates (counter-clockwise in the
/// x-right, y-down frame) and corner 0 is the first one met sweeping by
/// angle about the centroid from the +x axis toward +y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCandidate {
    pub corners: [Vector2<f64>; 4],
    pub side_lines: [Line2; 4],
}

impl QuadCandidate {
    fn from_lines(lines: [Line2; 4]) -> Option<QuadCandidate> {
        let mut corners = [Vector2::zeros(); 4];
        for i in 0..4 {
            corners[i] = lines[(i + 3) % 4].intersect(&lines[i])?;
        }
        let quad = QuadCandidate {
            corners,
            side_lines: lines,
        };
        quad.is_convex().then(|| quad.canonical_start())
    }

    /// Rotates the corner/side arrays so corner 0 follows the angle rule.
    fn canonical_start(self) -> QuadCandidate {
        let c = self.centroid();
        let angle = |p: &Vector2<f64>| {
            let a = (p.y - c.y).atan2(p.x - c.x);
            if a < 0.0 {
                a + std::f64::consts::TAU
            } else {
                a
            }
        };
        let start = (0..4)
            .min_by(|&i, &j| angle(&self.corners[i]).total_cmp(&angle(&self.corners[j])))
            .unwrap_or(0);
        QuadCandidate {
            corners: std::array::from_fn(|i| self.corners[(i + start) % 4]),
            side_lines: std::array::from_fn(|i| self.side_lines[(i + start) % 4]),
        }
    }

    pub fn centroid(&self) -> Vector2<f64> {
        self.corners.iter().fold(Vector2::zeros(), |a, p| a + p) / 4.0
    }

    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.corners)
    }

    pub fn is_convex(&self) -> bool {
        (0..4).all(|i| {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % 4];
            let c = self.corners[(i + 2) % 4];
            let e1 = b - a;
            let e2 = c - b;
            e1.x * e2.y - e1.y * e2.x > 0.0
        })
    }

    /// Shortest side length, px.
    pub fn min_side(&self) -> f64 {
        (0..4)
            .map(|i| (self.corners[(i + 1) % 4] - self.corners[i]).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Shoelace area; positive for counter-clockwise order in the x-right,
/// y-down pixel frame.
pub fn polygon_signed_area(pts: &[Vector2<f64>]) -> f64 {
    let n = pts.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
}

/// Area of the intersection of two convex polygons with positive orientation
/// (Sutherland-Hodgman clipping).
pub fn convex_intersection_area(a: &[Vector2<f64>], b: &[Vector2<f64>]) -> f64 {
    let mut poly: Vec<Vector2<f64>> = a.to_vec();
    let m = b.len();
    for i in 0..m {
        if poly.is_empty() {
            break;
        }
        let (p, q) = (b[i], b[(i + 1) % m]);
        let e = q - p;
        let inside = |x: &Vector2<f64>| e.x * (x.y - p.y) - e.y * (x.x - p.x) >= 0.0;
        let input = std::mem::take(&mut poly);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let d = cur - prev;
                let denom = e.x * d.y - e.y * d.x;
                if denom.abs() > 1e-15 {
                    let t = (e.x * (p.y - prev.y) - e.y * (p.x - prev.x)) / denom;
                    poly.push(prev + d * t);
                }
            }
            if ci {
                poly.push(cur);
            }
        }
    }
    if poly.len() < 3 {
        0.0
    } else {
        polygon_signed_area(&poly).abs()
    }
}

/// Parameters of the corner detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    /// Probe arc distance; `None` selects `max(4, len / 16)`.
    pub arm: Option<usize>,
    /// Valleys of the normalized turn signal must fall below this.
    pub corner_threshold: f64,
    /// Gaussian smoothing of the turn signal, in samples.
    pub smoothing_sigma: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            arm: None,
            corner_threshold: 0.9,
            smoothing_sigma: 2.0,
        }
    }
}

pub fn default_arm(cycle_len: usize) -> usize {
    (cycle_len / 16).max(4)
}

/// Normalized inner product of `(P_R - P)` and `(P - P_L)` at every cycle
/// point, with `P_L`, `P_R` taken `arm` points before and after `P`.
pub fn turn_signal(cycle: &EdgeCycle, arm: usize) -> Vec<f64> {
    let n = cycle.len();
    let pts = &cycle.points;
    (0..n)
        .map(|i| {
            let p = pts[i];
            let l = pts[(i + n - arm % n) % n];
            let r = pts[(i + arm) % n];
            let a = ((p.0 - l.0) as f64, (p.1 - l.1) as f64);
            let b = ((r.0 - p.0) as f64, (r.1 - p.1) as f64);
            let na = (a.0 * a.0 + a.1 * a.1).sqrt();
            let nb = (b.0 * b.0 + b.1 * b.1).sqrt();
            if na == 0.0 || nb == 0.0 {
                -1.0
            } else {
                (a.0 * b.0 + a.1 * b.1) / (na * nb)
            }
        })
        .collect()
}

/// Circular Gaussian smoothing.
pub fn smooth_circular(signal: &[f64], sigma: f64) -> Vec<f64> {
    let n = signal.len();
    if sigma <= 0.0 || n == 0 {
        return signal.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let kernel: Vec<f64> = (0..=2 * radius)
        .map(|k| {
            let d = k as f64 - radius as f64;
            (-0.5 * d * d / (sigma * sigma)).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * signal[(i + n * (radius / n + 1) + k - radius) % n])
                .sum::<f64>()
                / norm
        })
        .collect()
}

/// Indices of circular local minima (suppression radius `radius`) whose
/// value is below `threshold`.
pub fn valleys(signal: &[f64], radius: usize, threshold: f64) -> Vec<usize> {
    let n = signal.len();
    (0..n)
        .filter(|&i| {
            let v = signal[i];
            v < threshold
                && (1..=radius.min(n / 2)).all(|d| {
                    let (a, b) = ((i + d) % n, (i + n - d) % n);
                    let beats = |j: usize| v < signal[j] || (v == signal[j] && i < j);
                    beats(a) && beats(b)
                })
        })
        .collect()
}

/// Accepts a cycle as a quadrilateral when its smoothed turn signal has
/// exactly four valleys below the threshold; corners are intersections of
/// total-least-squares lines fitted to the four sides.
pub fn verify_quadrilateral(cycle: &EdgeCycle, params: &QuadParams) -> Option<QuadCandidate> {
    let n = cycle.len();
    let arm = params.arm.unwrap_or_else(|| default_arm(n));
    if arm == 0 || n < 4 * arm {
        return None;
    }
    let signal = smooth_circular(&turn_signal(cycle, arm), params.smoothing_sigma);
    let corners = valleys(&signal, arm, params.corner_threshold);
    if corners.len() != 4 {
        return None;
    }
    let skip = (arm / 2).max(1);
    let mut lines = [Line2 {
        normal: Vector2::zeros(),
        offset: 0.0,
    }; 4];
    for j in 0..4 {
        let (a, b) = (corners[j], corners[(j + 1) % 4]);
        let span = (b + n - a) % n;
        if span <= 2 * skip + 2 {
            return None;
        }
        let pts: Vec<Vector2<f64>> = (a + skip..=a + span - skip)
            .map(|k| {
                let p = cycle.points[k % n];
                Vector2::new(p.0 as f64, p.1 as f64)
            })
            .collect();
        lines[j] = Line2::fit(&pts)?;
    }
    if polygon_signed_area(
        &corners
            .iter()
            .map(|&k| Vector2::new(cycle.points[k].0 as f64, cycle.points[k].1 as f64))
            .collect::<Vec<_>>(),
    ) < 0.0
    {
        lines.reverse();
    }
    let quad = QuadCandidate::from_lines(lines)?;
    // corners far from every raw corner mean near-parallel neighboring sides
    let limit = (2 * arm) as f64 + 2.0;
    let raw: Vec<Vector2<f64>> = corners
        .iter()
        .map(|&k| Vector2::new(cycle.points[k].0 as f64, cycle.points[k].1 as f64))
        .collect();
    quad.corners
        .iter()
        .all(|c| raw.iter().any(|r| (c - r).norm() <= limit))
        .then_some(quad)
}

/// Sub-pixel edge refinement on the gray image: along each side, finds the
/// dark-to-light mid-level crossing in the outward normal direction and
/// refits the side line to those crossings. Sides without enough crossings
/// keep their binary-boundary fit.
pub fn refine_edges(img: &GrayImage, quad: &QuadCandidate) -> QuadCandidate {
    const RANGE: f64 = 2.5;
    const STEP: f64 = 0.25;
    const MIN_CONTRAST: f64 = 20.0;
    let nsteps = (2.0 * RANGE / STEP).round() as usize;
    let mut lines = quad.side_lines;
    for j in 0..4 {
        let a = quad.corners[j];
        let b = quad.corners[(j + 1) % 4];
        let d = b - a;
        let len = d.norm();
        if len < 4.0 {
            continue;
        }
        let dir = d / len;
        let outward = Vector2::new(dir.y, -dir.x);
        let samples = (len as usize).clamp(4, 256);
        let mut found = Vec::with_capacity(samples);
        let mut profile = vec![0.0; nsteps + 1];
        for s in 0..samples {
            let t = 0.1 + 0.8 * (s as f64 + 0.5) / samples as f64;
            let base = a + d * t;
            for (k, v) in profile.iter_mut().enumerate() {
                let p = base + outward * (-RANGE + STEP * k as f64);
                *v = img.bilinear(p.x, p.y);
            }
            let lo = profile.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < MIN_CONTRAST {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let mut best: Option<f64> = None;
            for k in 0..nsteps {
                let (f0, f1) = (profile[k], profile[k + 1]);
                if f0 < mid && f1 >= mid {
                    let tau = -RANGE + STEP * (k as f64 + (mid - f0) / (f1 - f0));
                    if best.is_none_or(|b| tau.abs() < b.abs()) {
                        best = Some(tau);
                    }
                }
            }
            if let Some(tau) = best {
                found.push(base + outward * tau);
            }
        }
        if found.len() >= samples / 2 && found.len() >= 3 {
            if let Some(line) = Line2::fit(&found) {
                // keep the outward orientation of the original line
                lines[j] = if line.normal.dot(&quad.side_lines[j].normal) < 0.0 {
                    Line2 {
                        normal: -line.normal,
                        offset: -line.offset,
                    }
                } else {
                    line
                };
            }
        }
    }
    QuadCandidate::from_lines(lines).unwrap_or(*quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::edges::{extract_edge_clusters, extract_simple_cycles, prune_spurs};
    use crate::detect::image::BinaryImage;

    fn cycles_of(w: usize, h: usize, f: impl Fn(f64, f64) -> bool) -> Vec<EdgeCycle> {
        let mut b = BinaryImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                b.data[y * w + x] = f(x as f64, y as f64);
            }
        }
        prune_spurs(&mut b);
        extract_simple_cycles(&extract_edge_clusters(&b))
    }

    #[test]
    fn line_fit_and_intersection() {
        let pts: Vec<_> = (0..10).map(|i| Vector2::new(i as f64, 2.0 * i as f64 + 1.0)).collect();
        let l = Line2::fit(&pts).unwrap();
        for p in &pts {
            assert!(l.distance(p).abs() < 1e-12);
        }
        let v = Line2::fit(&[Vector2::new(3.0, 0.0), Vector2::new(3.0, 5.0)]).unwrap();
        let x = l.intersect(&v).unwrap();
        assert!((x - Vector2::new(3.0, 7.0)).norm() < 1e-12);
        assert!(Line2::fit(&[Vector2::new(1.0, 1.0); 3]).is_none());
    }

    #[test]
    fn digital_square_corners_within_half_pixel() {
        // side 80 px; foreground pixel centers span [20, 99]
        let cycles = cycles_of(140, 140, |x, y| {
            (20.0..100.0).contains(&x) && (20.0..100.0).contains(&y)
        });
        assert_eq!(cycles.len(), 1);
        let params = QuadParams {
            arm: Some(8),
            ..QuadParams::default()
        };
        let quad = verify_quadrilateral(&cycles[0], &params).expect("square accepted");
        // analytic corners of the digital boundary (edge pixel centers)
        let truth = [
            Vector2::new(99.0, 99.0),
            Vector2::new(20.0, 99.0),
            Vector2::new(20.0, 20.0),
            Vector2::new(99.0, 20.0),
        ];
        for (c, t) in quad.corners.iter().zip(&truth) {
            assert!((c - t).norm() < 0.5, "{c} vs {t}");
        }
        assert!(quad.signed_area() > 0.0);
        assert!(quad.is_convex());
    }

    #[test]
    fn circle_and_triangle_rejected() {
        let circle = cycles_of(120, 120, |x, y| (x - 60.0).powi(2) + (y - 60.0).powi(2) <= 40.0 * 40.0);
        assert_eq!(circle.len(), 1);
        assert!(verify_quadrilateral(&circle[0], &QuadParams::default()).is_none());

        let tri = cycles_of(120, 120, |x, y| {
            y >= 20.0 && y <= 100.0 && (x - 60.0).abs() <= (y - 20.0) * 1.0
        });
        assert_eq!(tri.len(), 1);
        let signal = smooth_circular(&turn_signal(&tri[0], default_arm(tri[0].len())), 2.0);
        assert_eq!(valleys(&signal, default_arm(tri[0].len()), 0.9).len(), 3);
        assert!(verify_quadrilateral(&tri[0], &QuadParams::default()).is_none());
    }

    #[test]
    fn perspective_quad_accepted() {
        // foreshortened convex quad with ~125 degree interior angles
        let pts = [
            Vector2::new(30.0, 60.0),
            Vector2::new(90.0, 30.0),
            Vector2::new(150.0, 62.0),
            Vector2::new(90.0, 94.0),
        ];
        let inside = |x: f64, y: f64| {
            (0..4).all(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % 4]);
                (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) >= 0.0
            })
        };
        let cycles = cycles_of(180, 120, inside);
        assert_eq!(cycles.len(), 1);
        let quad = verify_quadrilateral(&cycles[0], &QuadParams::default()).expect("accepted");
        for t in &pts {
            assert!(quad.corners.iter().any(|c| (c - t).norm() < 2.0));
        }
    }

    #[test]
    fn smoothing_preserves_constant_and_mean() {
        let s = smooth_circular(&[0.5; 10], 2.0);
        assert!(s.iter().all(|v| (v - 0.5).abs() < 1e-12));
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let y = smooth_circular(&x, 1.5);
        let (mx, my) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        assert!((mx - my).abs() < 1e-9);
    }

    #[test]
    fn intersection_area_of_overlapping_squares() {
        let sq = |x0: f64, y0: f64, s: f64| {
            vec![
                Vector2::new(x0, y0),
                Vector2::new(x0, y0 + s),
                Vector2::new(x0 + s, y0 + s),
                Vector2::new(x0 + s, y0),
            ]
        };
        // order (x0,y0)->(x0,y0+s)->... is clockwise in y-down; reverse it
        let mut a = sq(0.0, 0.0, 10.0);
        let mut b = sq(5.0, 5.0, 10.0);
        a.reverse();
        b.reverse();
        assert!(polygon_signed_area(&a) > 0.0);
        assert!((convex_intersection_area(&a, &b) - 25.0).abs() < 1e-9);
        let mut c = sq(20.0, 20.0, 3.0);
        c.reverse();
        assert_eq!(convex_intersection_area(&a, &c), 0.0);
    }

    #[test]
    fn refinement_recovers_antialiased_edges() {
        // 4x4-supersampled rendering of a dark rotated square on white
        let corners = [
            Vector2::new(60.3, 20.7),
            Vector2::new(99.1, 59.6),
            Vector2::new(60.2, 98.4),
            Vector2::new(21.4, 59.5),
        ];
        let inside = |x: f64, y: f64| {
            (0..4).all(|i| {
                let (a, b) = (corners[i], corners[(i + 1) % 4]);
                (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) >= 0.0
            })
        };
        let img = GrayImage::from_fn(120, 120, |x, y| {
            let mut cover = 0;
            for sy in 0..4 {
                for sx in 0..4 {
                    let px = x as f64 - 0.5 + (sx as f64 + 0.5) / 4.0;
                    let py = y as f64 - 0.5 + (sy as f64 + 0.5) / 4.0;
                    cover += inside(px, py) as u32;
                }
            }
            (235.0 - 215.0 * cover as f64 / 16.0).round() as u8
        });
        let mut bin = crate::detect::threshold::adaptive_threshold(&img, 31, 8).unwrap();
        prune_spurs(&mut bin);
        let cycles: Vec<_> = extract_simple_cycles(&extract_edge_clusters(&bin));
        let quad = cycles
            .iter()
            .filter_map(|c| verify_quadrilateral(c, &QuadParams::default()))
            .max_by(|a, b| a.signed_area().total_cmp(&b.signed_area()))
            .unwrap();
        let refined = refine_edges(&img, &quad);
        for t in &corners {
            let best = refined
                .corners
                .iter()
                .map(|c| (c - t).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.15, "corner {t} off by {best}");
        }
    }
}
