#![allow(dead_code)]

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use toptag::detect::{GrayImage, TagCode, TagCodebook};
use toptag::geom::{project, rot_from_vec, CameraModel, RigidTransform, RotationVector};
use toptag::pose::{Observations, TagLayout};

/// RSU at the (-7.4, -7.4) corner, 8 m high, 40 degrees down, facing the
/// intersection center.
pub fn rsu_camera(focal: f64, resolution: (u32, u32)) -> CameraModel {
    CameraModel::looking_at(
        Vector3::new(-7.4, -7.4, 8.0),
        Vector3::zeros(),
        40f64.to_radians(),
        focal,
        resolution,
    )
}

pub fn default_camera() -> CameraModel {
    rsu_camera(800.0, (960, 720))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tag-to-world transform of a bus-top pose.
pub fn truth(x: f64, y: f64, phi: f64, z: f64) -> RigidTransform {
    RigidTransform::new(rot_from_vec(&RotationVector::new(0.0, 0.0, phi)), Vector3::new(x, y, z))
}

/// Random pose at horizontal range `[r0, r1]` from the RSU foot, within
/// +-30 degrees of its forward direction.
pub fn random_pose(rng: &mut ChaCha8Rng, r0: f64, r1: f64) -> (f64, f64, f64) {
    let r = rng.random_range(r0..r1);
    let a = std::f64::consts::FRAC_PI_4 + rng.random_range(-0.5..0.5);
    let phi = rng.random_range(-3.1..3.1);
    (-7.4 + r * a.cos(), -7.4 + r * a.sin(), phi)
}

/// Projects every control point, optionally with Gaussian pixel noise.
pub fn observe(
    layout: &TagLayout,
    cam: &CameraModel,
    tw: &RigidTransform,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Observations {
    let noise = Normal::new(0.0, sigma.max(1e-300)).unwrap();
    let pts = layout
        .control_points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut uv = project(cam, &tw.apply(p)).unwrap();
            if sigma > 0.0 {
                uv += Vector2::new(noise.sample(rng), noise.sample(rng));
            }
            (i, uv)
        })
        .collect();
    Observations::new(pts).unwrap()
}

/// Textured image without any codebook tag: smooth shading, pixel noise,
/// random gray rectangles and perspective quads carrying codes that the
/// codebook cannot decode.
pub fn tag_free_image(seed: u64, width: usize, height: usize, book: &TagCodebook) -> GrayImage {
    let mut rng = rng(seed);
    let k = book.k();
    let (gx, gy, base) = (
        rng.random_range(-0.05..0.05),
        rng.random_range(-0.05..0.05),
        rng.random_range(90.0..190.0),
    );
    let mut level: Vec<f64> = (0..width * height)
        .map(|i| base + gx * (i % width) as f64 + gy * (i / width) as f64)
        .collect();
    for _ in 0..rng.random_range(0..6) {
        let (x0, y0) = (rng.random_range(0..width), rng.random_range(0..height));
        let (w, h) = (rng.random_range(5..width / 3), rng.random_range(5..height / 3));
        let v = rng.random_range(10.0..245.0);
        for y in y0..(y0 + h).min(height) {
            for x in x0..(x0 + w).min(width) {
                level[y * width + x] = v;
            }
        }
    }
    for _ in 0..rng.random_range(1..5) {
        let code = loop {
            let c = TagCode::new(rng.random::<u64>() & ((1u64 << (k * k)) - 1), k);
            // the quad below may show the code mirrored
            let mirrored = TagCode::from_cells(k, |r, col| c.cell(col, r));
            let far = |x: &TagCode| {
                book.entries()
                    .iter()
                    .all(|e| e.code.rotational_distance(x) > 2 * book.max_hamming())
            };
            if far(&c) && far(&mirrored) {
                break c;
            }
        };
        let s = rng.random_range(15.0..120.0);
        let (c, sn) = (
            rng.random_range(0.0..std::f64::consts::TAU).cos(),
            rng.random_range(0.0..std::f64::consts::TAU).sin(),
        );
        let (cx, cy) = (
            rng.random_range(0.0..width as f64),
            rng.random_range(0.0..height as f64),
        );
        let h = Matrix3::new(
            s * c,
            -s * sn,
            cx,
            s * sn,
            s * c,
            cy,
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
            1.0,
        );
        let Some(inv) = h.try_inverse() else { continue };
        let r = (3.0 * s) as i64;
        for y in (cy as i64 - r).max(0)..(cy as i64 + r).min(height as i64) {
            for x in (cx as i64 - r).max(0)..(cx as i64 + r).min(width as i64) {
                let mut acc = 0.0;
                let mut hit = false;
                for sy in 0..4 {
                    for sx in 0..4 {
                        let t = inv
                            * Vector3::new(
                                x as f64 - 0.375 + 0.25 * sx as f64,
                                y as f64 - 0.375 + 0.25 * sy as f64,
                                1.0,
                            );
                        let v = if t.z > 0.0 {
                            code.canonical_is_black(t.x / t.z, t.y / t.z)
                        } else {
                            None
                        };
                        hit |= v.is_some();
                        acc += match v {
                            Some(true) => 20.0,
                            Some(false) => 235.0,
                            None => level[y as usize * width + x as usize],
                        };
                    }
                }
                if hit {
                    level[y as usize * width + x as usize] = acc / 16.0;
                }
            }
        }
    }
    let noise = Normal::new(0.0, rng.random_range(0.0..8.0)).unwrap();
    let data = level
        .into_iter()
        .map(|v| (v + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::from_raw(width, height, data).unwrap()
}
