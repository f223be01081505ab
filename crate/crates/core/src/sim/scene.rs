//! Ground-truth sampling, analytic corner observation and bus-top rendering.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::ScenarioConfig;
use crate::detect::{GrayImage, TagCode, TagCodebook};
use crate::error::{Error, Result};
use crate::geom::{project, rot_from_vec, CameraModel, RigidTransform, RotationVector};
use crate::pose::{Observations, TagLayout};

pub const GROUND_LEVEL: u8 = 200;
pub const BUS_LEVEL: f64 = 140.0;
pub const BLACK_LEVEL: f64 = 20.0;
pub const WHITE_LEVEL: f64 = 235.0;
const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthSample {
    pub x: f64,
    pub y: f64,
    /// Heading in `[0, 2 pi)`.
    pub phi: f64,
    /// Tag-plane height offset from the nominal bus height.
    pub delta: f64,
    /// Horizontal distance from the RSU foot to the bus center.
    pub dist: f64,
}

impl GroundTruthSample {
    /// Tag-to-world transform with the tag plane at `bus_height + delta`.
    pub fn tag_to_world(&self, bus_height: f64) -> RigidTransform {
        RigidTransform::new(
            rot_from_vec(&RotationVector::new(0.0, 0.0, self.phi)),
            Vector3::new(self.x, self.y, bus_height + self.delta),
        )
    }
}

/// Independent random stream of trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn check_sector(cfg: &ScenarioConfig) -> Result<()> {
    let ok = cfg.sector_radius_min >= 0.0
        && cfg.sector_radius_max > cfg.sector_radius_min
        && cfg.sector_azimuth_half_deg > 0.0;
    if ok {
        Ok(())
    } else {
        Err(Error::EmptySector)
    }
}

/// Draws one pose uniformly over the sector area (radius by inverse CDF of
/// the area law), a uniform heading and a uniform height disturbance.
pub fn sample_pose(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<GroundTruthSample> {
    check_sector(cfg)?;
    let (r0, r1) = (cfg.sector_radius_min, cfg.sector_radius_max);
    let u: f64 = rng.random();
    let r = (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt();
    let half = cfg.sector_azimuth_half_deg.to_radians();
    let foot = cfg.rsu_foot(cfg.rsu_index);
    let axis = (-foot.y).atan2(-foot.x);
    let az = axis + rng.random_range(-half..=half);
    let phi = rng.random_range(0.0..TAU);
    let d = cfg.height_disturbance_max;
    let delta = if d > 0.0 { rng.random_range(-d..=d) } else { 0.0 };
    Ok(GroundTruthSample {
        x: foot.x + r * az.cos(),
        y: foot.y + r * az.sin(),
        phi,
        delta,
        dist: r,
    })
}

/// `cfg.samples` poses, sample `i` drawn from [`trial_rng`]`(seed, i)`.
pub fn sample_poses(cfg: &ScenarioConfig) -> Result<Vec<GroundTruthSample>> {
    check_sector(cfg)?;
    (0..cfg.samples)
        .map(|i| sample_pose(cfg, &mut trial_rng(cfg.seed, i)))
        .collect()
}

/// Projects the layout corners of `sample`, adds Gaussian noise of
/// `pixel_noise_sigma` per coordinate and keeps the points inside the
/// image. Fewer than 4 survivors give an empty observation.
pub fn observe_corners(
    cfg: &ScenarioConfig,
    layout: &TagLayout,
    cam: &CameraModel,
    sample: &GroundTruthSample,
    rng: &mut impl Rng,
) -> Observations {
    let tw = sample.tag_to_world(cfg.bus_height);
    let noise = (cfg.pixel_noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.pixel_noise_sigma).expect("finite sigma"));
    let mut pts = Vec::with_capacity(layout.len());
    for (i, p) in layout.control_points().iter().enumerate() {
        let Ok(mut uv) = project(cam, &tw.apply(p)) else {
            continue;
        };
        if let Some(n) = &noise {
            uv += Vector2::new(n.sample(rng), n.sample(rng));
        }
        if cam.contains(&uv) {
            pts.push((i, uv));
        }
    }
    if pts.len() < 4 {
        return Observations::empty();
    }
    Observations::new(pts).unwrap_or_default()
}

/// Tag-plane to image homography of the bus top.
pub fn tag_plane_homography(cam: &CameraModel, tw: &RigidTransform) -> Matrix3<f64> {
    let tc = cam.world_to_cam.compose(tw);
    let m = Matrix3::from_columns(&[
        tc.rotation.column(0).into_owned(),
        tc.rotation.column(1).into_owned(),
        tc.translation,
    ]);
    cam.intrinsics * m
}

/// Renders the bus top (mid gray) with its tags on light-gray ground. A
/// pixel whose four corners fall in the same convex region (and which holds
/// no region vertex) is flat; every other pixel gets 4x4 supersampled
/// coverage.
pub fn render_frame(
    cfg: &ScenarioConfig,
    layout: &TagLayout,
    codebook: &TagCodebook,
    cam: &CameraModel,
    sample: &GroundTruthSample,
) -> Result<GrayImage> {
    let tw = sample.tag_to_world(cfg.bus_height);
    let (hl, hw) = (0.5 * cfg.bus_length, 0.5 * cfg.bus_width);
    let codes = layout
        .tags()
        .iter()
        .map(|t| {
            codebook
                .get(t.tag_id)
                .ok_or_else(|| Error::Config(format!("tag id {} missing from the codebook", t.tag_id)))
        })
        .collect::<Result<Vec<_>>>()?;

    // outline: bus rectangle plus every tag with its white margin
    let mut outline: Vec<(f64, f64)> = vec![(-hl, -hw), (-hl, hw), (hl, hw), (hl, -hw)];
    for (t, code) in layout.tags().iter().zip(&codes) {
        let m = 1.0 + 2.0 / (code.k + 2) as f64;
        for (a, b) in [(-m, -m), (-m, m), (m, m), (m, -m)] {
            let q = t.to_tag_frame(a, b);
            outline.push((q.x, q.y));
        }
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(a, b) in &outline {
        let uv = project(cam, &tw.apply(&Vector3::new(a, b, 0.0)))?;
        x0 = x0.min(uv.x);
        y0 = y0.min(uv.y);
        x1 = x1.max(uv.x);
        y1 = y1.max(uv.y);
    }

    let (w, h) = (cam.width() as usize, cam.height() as usize);
    let mut img = GrayImage::new(w, h, GROUND_LEVEL);
    let clampx = |v: f64| (v.max(0.0) as usize).min(w);
    let clampy = |v: f64| (v.max(0.0) as usize).min(h);
    let (px0, px1) = (clampx(x0.floor() - 1.0), clampx(x1.ceil() + 2.0));
    let (py0, py1) = (clampy(y0.floor() - 1.0), clampy(y1.ceil() + 2.0));
    let Some(inv) = tag_plane_homography(cam, &tw).try_inverse() else {
        return Err(Error::DegenerateConfiguration("tag plane seen edge-on".into()));
    };

    let scene = Scene {
        layout,
        codes: &codes,
        half_bus: (hl, hw),
    };
    // pixels holding a region vertex always get supersampled
    let mut vertices: Vec<(i64, i64)> = Vec::new();
    for (a, b) in outline {
        let uv = project(cam, &tw.apply(&Vector3::new(a, b, 0.0)))?;
        vertices.push((uv.x.round() as i64, uv.y.round() as i64));
    }
    let near_vertex = |x: usize, y: usize| {
        vertices
            .iter()
            .any(|&(vx, vy)| (vx - x as i64).abs() <= 1 && (vy - y as i64).abs() <= 1)
    };
    let to_plane = |px: f64, py: f64| -> Option<(f64, f64)> {
        let t = inv * Vector3::new(px, py, 1.0);
        (t.z != 0.0).then(|| (t.x / t.z, t.y / t.z))
    };

    let n = SUPERSAMPLE;
    let inv_n2 = 1.0 / (n * n) as f64;
    // regions at pixel corners: corner (x, y) sits at (x - 0.5, y - 0.5)
    let corner_row = |y: usize| -> Vec<Region> {
        (px0..=px1)
            .map(|x| to_plane(x as f64 - 0.5, y as f64 - 0.5).map_or(Region::Ground, |(a, b)| scene.region(a, b)))
            .collect()
    };
    let mut above = corner_row(py0);
    for y in py0..py1 {
        let below = corner_row(y + 1);
        for x in px0..px1 {
            let k = x - px0;
            let r = above[k];
            let uniform = r == above[k + 1] && r == below[k] && r == below[k + 1] && !near_vertex(x, y);
            let value = if uniform {
                scene.level(r)
            } else {
                let mut acc = 0.0;
                for sy in 0..n {
                    let py = y as f64 - 0.5 + (sy as f64 + 0.5) / n as f64;
                    for sx in 0..n {
                        let px = x as f64 - 0.5 + (sx as f64 + 0.5) / n as f64;
                        acc += to_plane(px, py).map_or(GROUND_LEVEL as f64, |(a, b)| scene.level(scene.region(a, b)));
                    }
                }
                acc * inv_n2
            };
            img.set(x, y, value.round() as u8);
        }
        above = below;
    }
    Ok(img)
}

/// Piecewise-constant bus-top scene in tag-plane coordinates. Every tag
/// region is a convex cell of its `(k + 4)`-grid (code, border ring and
/// white band).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Ground,
    Bus,
    Cell { tag: usize, i: usize, j: usize },
}

struct Scene<'a> {
    layout: &'a TagLayout,
    codes: &'a [&'a TagCode],
    half_bus: (f64, f64),
}

impl Scene<'_> {
    fn region(&self, a: f64, b: f64) -> Region {
        for (tag, (t, code)) in self.layout.tags().iter().zip(self.codes).enumerate() {
            let s = 2.0 / (code.k + 2) as f64;
            let m = 1.0 + s;
            let ca = (a - t.center.x) / t.half.x;
            let cb = (b - t.center.y) / t.half.y;
            if ca.abs() <= m && cb.abs() <= m {
                let last = code.k + 3;
                let i = (((m - ca) / s) as usize).min(last);
                let j = (((m - cb) / s) as usize).min(last);
                return Region::Cell { tag, i, j };
            }
        }
        if a.abs() <= self.half_bus.0 && b.abs() <= self.half_bus.1 {
            Region::Bus
        } else {
            Region::Ground
        }
    }

    fn level(&self, r: Region) -> f64 {
        match r {
            Region::Ground => GROUND_LEVEL as f64,
            Region::Bus => BUS_LEVEL,
            Region::Cell { tag, i, j } => {
                let code = self.codes[tag];
                let last = code.k + 3;
                let black = if i == 0 || j == 0 || i == last || j == last {
                    false
                } else if i == 1 || j == 1 || i == last - 1 || j == last - 1 {
                    true
                } else {
                    code.cell(i - 2, j - 2)
                };
                if black {
                    BLACK_LEVEL
                } else {
                    WHITE_LEVEL
                }
            }
        }
    }
}

/// True when `uv` lies at least `margin` pixels inside the image.
pub fn in_frame(cam: &CameraModel, uv: &Vector2<f64>, margin: f64) -> bool {
    uv.x >= margin
        && uv.y >= margin
        && uv.x <= cam.width() as f64 - 1.0 - margin
        && uv.y <= cam.height() as f64 - 1.0 - margin
}
