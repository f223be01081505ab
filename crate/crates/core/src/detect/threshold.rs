//! Local-mean adaptive thresholding on an integral image, followed by removal
//! of small foreground components.

use super::image::{BinaryImage, GrayImage, IntegralImage};
use crate::error::{Error, Result};

/// Foreground components smaller than this many pixels are discarded.
pub const MIN_FOREGROUND_AREA: usize = 24;

/// Marks dark pixels: `I(x, y) < mean - offset`, with the mean taken over the
/// `window x window` box centered at the pixel and clipped to the image.
/// Foreground components (8-connected) smaller than `min_area` are removed.
pub fn adaptive_threshold(img: &GrayImage, window: usize, offset: i32) -> Result<BinaryImage> {
    let ii = IntegralImage::new(img);
    adaptive_threshold_with(img, &ii, window, offset, MIN_FOREGROUND_AREA)
}

/// [`adaptive_threshold`] on a precomputed integral image.
pub fn adaptive_threshold_with(
    img: &GrayImage,
    ii: &IntegralImage,
    window: usize,
    offset: i32,
    min_area: usize,
) -> Result<BinaryImage> {
    let (w, h) = (img.width(), img.height());
    if window < 3 || window % 2 == 0 {
        return Err(Error::Config(format!(
            "threshold window must be odd and >= 3, got {window}"
        )));
    }
    if window > w || window > h {
        return Err(Error::ImageTooSmall {
            window,
            width: w,
            height: h,
        });
    }
    let r = window / 2;
    let mut out = BinaryImage::new(w, h);
    let offset = offset as i64;
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r + 1).min(h);
        let (top, bot) = (ii.row(y0), ii.row(y1));
        let row = &img.data()[y * w..(y + 1) * w];
        let dst = &mut out.data[y * w..(y + 1) * w];
        let rows = (y1 - y0) as i64;
        let clipped = |x: usize| {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r + 1).min(w);
            let sum = bot[x1]
                .wrapping_sub(top[x1])
                .wrapping_sub(bot[x0])
                .wrapping_add(top[x0]);
            // I < sum/count - offset, in integers
            (row[x] as i64 + offset) * (x1 - x0) as i64 * rows < sum as i64
        };
        for x in (0..r).chain(w - r..w) {
            dst[x] = clipped(x);
        }
        // full-width windows: x0 = x - r, x1 = x + r + 1
        let count = window as i64 * rows;
        let n = w - 2 * r;
        let cols = bot[window..]
            .iter()
            .zip(&top[window..])
            .zip(bot[..n].iter().zip(&top[..n]));
        for ((d, &v), ((&b1, &t1), (&b0, &t0))) in dst[r..w - r].iter_mut().zip(&row[r..w - r]).zip(cols) {
            let sum = b1.wrapping_sub(t1).wrapping_sub(b0).wrapping_add(t0);
            *d = (v as i64 + offset) * count < sum as i64;
        }
    }
    remove_small_components(&mut out, min_area);
    Ok(out)
}

#[derive(Clone, Copy)]
struct Run {
    y: usize,
    x0: usize,
    x1: usize, // exclusive
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Clears 8-connected foreground components with fewer than `min_area`
/// pixels, using run-length union-find.
pub fn remove_small_components(bin: &mut BinaryImage, min_area: usize) {
    if min_area <= 1 {
        return;
    }
    let w = bin.width;
    let mut runs: Vec<Run> = Vec::new();
    let mut row_start = Vec::with_capacity(bin.height + 1);
    for y in 0..bin.height {
        row_start.push(runs.len());
        let row = &bin.data[y * w..(y + 1) * w];
        let mut x = 0;
        while x < w {
            if row[x] {
                let x0 = x;
                while x < w && row[x] {
                    x += 1;
                }
                runs.push(Run { y, x0, x1: x });
            } else {
                x += 1;
            }
        }
    }
    row_start.push(runs.len());
    let mut parent: Vec<usize> = (0..runs.len()).collect();
    for y in 1..bin.height {
        let (mut a, a_end) = (row_start[y - 1], row_start[y]);
        let (mut b, b_end) = (row_start[y], row_start[y + 1]);
        // 8-connectivity: runs touch if [x0-1, x1] ranges overlap
        while a < a_end && b < b_end {
            let ra = runs[a];
            let rb = runs[b];
            if ra.x1 + 1 > rb.x0 && rb.x1 + 1 > ra.x0 {
                union(&mut parent, a, b);
            }
            if ra.x1 < rb.x1 {
                a += 1;
            } else {
                b += 1;
            }
        }
    }
    let mut area = vec![0usize; runs.len()];
    for i in 0..runs.len() {
        let root = find(&mut parent, i);
        area[root] += runs[i].x1 - runs[i].x0;
    }
    for i in 0..runs.len() {
        let root = find(&mut parent, i);
        if area[root] < min_area {
            let r = runs[i];
            bin.data[r.y * w + r.x0..r.y * w + r.x1].fill(false);
        }
    }
}
