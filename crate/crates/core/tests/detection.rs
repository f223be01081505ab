mod common;

use nalgebra::Vector2;
use toptag::detect::*;
use toptag::sim::{render_frame, sample_pose, trial_rng, ScenarioConfig};

fn rendered(trial: usize) -> (ScenarioConfig, GrayImage) {
    let cfg = ScenarioConfig::default();
    let s = sample_pose(&cfg, &mut trial_rng(21, trial)).unwrap();
    let img = render_frame(
        &cfg,
        &cfg.tag_layout(),
        &TagCodebook::default_family(),
        &cfg.camera(),
        &s,
    )
    .unwrap();
    (cfg, img)
}

/// Direct window sums, then flood-fill removal of small components.
fn naive_threshold(img: &GrayImage, window: usize, offset: i64, min_area: usize) -> Vec<bool> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = (window / 2) as i64;
    let mut fg = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let (mut sum, mut n) = (0i64, 0i64);
            for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                    sum += img.get(xx as usize, yy as usize) as i64;
                    n += 1;
                }
            }
            fg[(y * w + x) as usize] = (img.get(x as usize, y as usize) as i64 + offset) * n < sum;
        }
    }
    let mut seen = vec![false; fg.len()];
    for start in 0..fg.len() {
        if !fg[start] || seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < comp.len() {
            let (x, y) = ((comp[k] as i64) % w, (comp[k] as i64) / w);
            k += 1;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if fg[j] && !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                    }
                }
            }
        }
        if comp.len() < min_area {
            for j in comp {
                fg[j] = false;
            }
        }
    }
    fg
}

#[test]
fn threshold_matches_naive_definition_on_rendered_scene() {
    let (_, img) = rendered(0);
    let p = DetectorParams::default();
    let fast = adaptive_threshold(&img, p.window, p.offset).unwrap();
    let naive = naive_threshold(&img, p.window, p.offset as i64, MIN_FOREGROUND_AREA);
    let mut diff = 0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            diff += (fast.get(x, y) != naive[y * img.width() + x]) as usize;
        }
    }
    assert_eq!(diff, 0);
    assert!(fast.count() > 0);
}

#[test]
fn rendered_tag_boundaries_are_simple_cycles() {
    let (_, img) = rendered(1);
    let p = DetectorParams::default();
    let mut bin = adaptive_threshold(&img, p.window, p.offset).unwrap();
    prune_spurs(&mut bin);
    let clusters = extract_edge_clusters(&bin);
    let quads: Vec<(usize, EdgeCycle)> = clusters
        .iter()
        .filter_map(|c| {
            extract_simple_cycles(std::slice::from_ref(c))
                .pop()
                .map(|cy| (c.points.len(), cy))
        })
        .filter(|(_, cy)| verify_quadrilateral(cy, &p.quad).is_some())
        .collect();
    assert!(quads.len() >= 2);
    for (size, cycle) in &quads {
        assert_eq!(*size, cycle.len());
        let mut pts = cycle.points.clone();
        pts.sort_unstable();
        pts.dedup();
        assert_eq!(pts.len(), cycle.len());
        let n = cycle.len();
        for i in 0..n {
            let (a, b) = (cycle.points[i], cycle.points[(i + 1) % n]);
            let (dx, dy) = (a.0.abs_diff(b.0), a.1.abs_diff(b.1));
            assert!(dx <= 1 && dy <= 1 && dx + dy > 0);
        }
    }
}

#[test]
fn rendered_frame_detections_rotate_with_the_image() {
    let book = TagCodebook::default_family();
    let (_, img) = rendered(2);
    let base = detect_tags(&img, &book, &DetectorParams::default()).unwrap();
    assert!(!base.is_empty());
    let rot = img.rotated_cw();
    let turned = detect_tags(&rot, &book, &DetectorParams::default()).unwrap();
    assert_eq!(base.len(), turned.len());
    let h = img.height() as f64;
    for (a, b) in base.iter().zip(&turned) {
        assert_eq!(a.tag_id, b.tag_id);
        assert_eq!(b.rotation_applied, (a.rotation_applied + 90) % 360);
        for (p, q) in a.corners.iter().zip(&b.corners) {
            let mapped = Vector2::new(h - 1.0 - p.y, p.x);
            assert!((mapped - q).norm() < 0.5, "{mapped} vs {q}");
        }
    }
}

#[test]
fn tag_free_images_give_no_detections() {
    let book = TagCodebook::default_family();
    let params = DetectorParams::default();
    for seed in 0..200 {
        let img = common::tag_free_image(10_000 + seed, 960, 720, &book);
        let dets = detect_tags(&img, &book, &params).unwrap();
        assert!(dets.is_empty(), "seed {seed}: {dets:?}");
    }
}

#[test]
fn pgm_file_round_trip_preserves_detections() {
    let book = TagCodebook::default_family();
    let (_, img) = rendered(3);
    let path = std::env::temp_dir().join(format!("toptag-detect-{}.pgm", std::process::id()));
    img.write_pgm(&path).unwrap();
    let back = GrayImage::read_pgm(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(back, img);
    assert_eq!(
        detect_tags(&back, &book, &DetectorParams::default()).unwrap(),
        detect_tags(&img, &book, &DetectorParams::default()).unwrap()
    );
}
