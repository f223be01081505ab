//! Edge points, edge clusters, and the boundary walk that keeps only simple
//! cycles.

use super::image::BinaryImage;

/// Integer pixel position `(x, y)`.
pub type Pixel = (i32, i32);

/// 8-connected set of edge points, in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeCluster {
    pub points: Vec<Pixel>,
}

impl EdgeCluster {
    pub fn touches_border(&self, width: usize, height: usize) -> bool {
        let (w, h) = (width as i32, height as i32);
        self.points
            .iter()
            .any(|&(x, y)| x == 0 || y == 0 || x == w - 1 || y == h - 1)
    }
}

/// Closed boundary walk visiting each point of its cluster exactly once;
/// consecutive points (and last-to-first) are 8-neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeCycle {
    pub points: Vec<Pixel>,
}

impl EdgeCycle {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Neighbor offsets ordered counter-clockwise as displayed (y down):
/// E, NE, N, NW, W, SW, S, SE.
const DIRS: [(i32, i32); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let p = parent[parent[i as usize] as usize];
        parent[i as usize] = p;
        i = p;
    }
    i
}

/// A foreground pixel at the very end of a tip: at most one 8-neighbor, or
/// two 8-neighbors that touch each other (a one-pixel nub).
fn is_tip(b: &BinaryImage, x: i64, y: i64) -> bool {
    let mut nb = [(0i32, 0i32); 3];
    let mut n = 0;
    for d in DIRS {
        if b.get_signed(x + d.0 as i64, y + d.1 as i64) {
            if n == 2 {
                return false;
            }
            nb[n] = d;
            n += 1;
        }
    }
    n <= 1 || ((nb[0].0 - nb[1].0).abs() <= 1 && (nb[0].1 - nb[1].1).abs() <= 1)
}

/// Repeatedly clears tip pixels (see `is_tip`), so one-pixel spurs and nubs
/// left by acute corners do not break the boundary walk. Returns the number
/// of cleared pixels.
pub fn prune_spurs(bin: &mut BinaryImage) -> usize {
    let (w, h) = (bin.width as i64, bin.height as i64);
    let mut stack: Vec<(i64, i64)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if bin.get_signed(x, y) && is_tip(bin, x, y) {
                stack.push((x, y));
            }
        }
    }
    let mut cleared = 0;
    while let Some((x, y)) = stack.pop() {
        if !bin.get_signed(x, y) || !is_tip(bin, x, y) {
            continue;
        }
        bin.data[(y * w + x) as usize] = false;
        cleared += 1;
        for d in DIRS {
            let (nx, ny) = (x + d.0 as i64, y + d.1 as i64);
            if bin.get_signed(nx, ny) && is_tip(bin, nx, ny) {
                stack.push((nx, ny));
            }
        }
    }
    cleared
}

/// Edge points are foreground pixels with at least one background
/// 4-neighbor (outside the image counts as background); clusters are the
/// 8-connected components of edge points.
pub fn extract_edge_clusters(bin: &BinaryImage) -> Vec<EdgeCluster> {
    let (w, h) = (bin.width, bin.height);
    // index + 1 of the edge point at each pixel of the previous and current
    // rows, 0 when not an edge
    let mut prev = vec![0u32; w];
    let mut cur = vec![0u32; w];
    let mut points: Vec<Pixel> = Vec::new();
    let mut parent: Vec<u32> = Vec::new();
    for y in 0..h {
        let row = &bin.data[y * w..(y + 1) * w];
        cur.fill(0);
        if row.iter().any(|&b| b) {
            for x in 0..w {
                if !row[x] {
                    continue;
                }
                let edge = x == 0
                    || y == 0
                    || x + 1 == w
                    || y + 1 == h
                    || !row[x - 1]
                    || !row[x + 1]
                    || !bin.data[(y - 1) * w + x]
                    || !bin.data[(y + 1) * w + x];
                if !edge {
                    continue;
                }
                let i = points.len() as u32;
                points.push((x as i32, y as i32));
                parent.push(i);
                cur[x] = i + 1;
                // already-visited neighbors in raster order: W, NW, N, NE
                let left = if x > 0 { [cur[x - 1], prev[x - 1]] } else { [0, 0] };
                let right = if x + 1 < w { prev[x + 1] } else { 0 };
                for j in [left[0], left[1], prev[x], right] {
                    if j != 0 {
                        let (ra, rb) = (find(&mut parent, i), find(&mut parent, j - 1));
                        if ra != rb {
                            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                            parent[hi as usize] = lo;
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    // group by root; roots are the smallest index, so clusters come out in
    // raster order of their first point
    let mut slot = vec![u32::MAX; points.len()];
    let mut clusters: Vec<EdgeCluster> = Vec::new();
    for i in 0..points.len() {
        let root = find(&mut parent, i as u32) as usize;
        if slot[root] == u32::MAX {
            slot[root] = clusters.len() as u32;
            clusters.push(EdgeCluster { points: Vec::new() });
        }
        clusters[slot[root] as usize].points.push(points[i]);
    }
    clusters
}

/// Membership bitmap over a cluster's bounding box.
struct Membership {
    x0: i32,
    y0: i32,
    w: i32,
    h: i32,
    bits: Vec<bool>,
}

impl Membership {
    fn new(points: &[Pixel]) -> Self {
        let x0 = points.iter().map(|p| p.0).min().unwrap_or(0);
        let x1 = points.iter().map(|p| p.0).max().unwrap_or(0);
        let y0 = points.iter().map(|p| p.1).min().unwrap_or(0);
        let y1 = points.iter().map(|p| p.1).max().unwrap_or(0);
        let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
        let mut bits = vec![false; (w * h) as usize];
        for &(x, y) in points {
            bits[((y - y0) * w + (x - x0)) as usize] = true;
        }
        Self { x0, y0, w, h, bits }
    }

    fn slot(&self, p: Pixel) -> Option<usize> {
        let (x, y) = (p.0 - self.x0, p.1 - self.y0);
        (x >= 0 && y >= 0 && x < self.w && y < self.h).then(|| (y * self.w + x) as usize)
    }

    fn contains(&self, p: Pixel) -> bool {
        self.slot(p).is_some_and(|s| self.bits[s])
    }
}

/// Walks a cluster keeping non-members on the left. Returns the visiting
/// order when the walk covers every point exactly once and closes on the
/// start point.
pub fn trace_simple_cycle(cluster: &EdgeCluster) -> Option<EdgeCycle> {
    let n = cluster.points.len();
    if n < 3 {
        return None;
    }
    let members = Membership::new(&cluster.points);
    let mut visited = vec![false; members.bits.len()];
    // topmost, then leftmost point; nothing of the cluster lies above it, so
    // heading east keeps the outside on the left
    let start = *cluster.points.iter().min_by_key(|p| (p.1, p.0))?;
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    let mut heading = 0usize;
    visited[members.slot(start)?] = true;
    order.push(start);
    loop {
        let mut next = None;
        // sweep from sharp left to sharp right, never straight back
        for k in 0..7 {
            let d = (heading + 3 + 8 - k) % 8;
            let cand = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if members.contains(cand) {
                next = Some((cand, d));
                break;
            }
        }
        let (cand, d) = next?;
        if cand == start {
            return (order.len() == n).then(|| EdgeCycle { points: order });
        }
        let s = members.slot(cand)?;
        if visited[s] || order.len() >= n {
            return None;
        }
        visited[s] = true;
        order.push(cand);
        cur = cand;
        heading = d;
    }
}

/// Keeps the clusters that trace as simple cycles.
pub fn extract_simple_cycles(clusters: &[EdgeCluster]) -> Vec<EdgeCycle> {
    clusters.iter().filter_map(trace_simple_cycle).collect()
}
