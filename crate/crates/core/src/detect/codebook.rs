//! Tag code families: loading, validation, rotation, and generation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Family shipped with the crate: 4×4 interior codes, pairwise distance at
/// least 5 under rotation.
pub const DEFAULT_CODEBOOK: &str = include_str!("../../data/codebook.txt");

/// A k×k code stored row-major, most-significant bit = top-left cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TagCode {
    pub bits: u64,
    pub k: usize,
}

impl TagCode {
    pub fn new(bits: u64, k: usize) -> Self {
        Self { bits, k }
    }

    pub fn from_cells(k: usize, cell: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = 0u64;
        for r in 0..k {
            for c in 0..k {
                bits = (bits << 1) | cell(r, c) as u64;
            }
        }
        Self { bits, k }
    }

    /// `true` = black.
    pub fn cell(&self, r: usize, c: usize) -> bool {
        let n = self.k * self.k;
        (self.bits >> (n - 1 - (r * self.k + c))) & 1 == 1
    }

    /// Quarter turn: `rot(C)[r][c] = C[c][k - 1 - r]`.
    pub fn rotate(&self) -> TagCode {
        let k = self.k;
        TagCode::from_cells(k, |r, c| self.cell(c, k - 1 - r))
    }

    pub fn rotated(&self, quarter_turns: usize) -> TagCode {
        (0..quarter_turns % 4).fold(*self, |c, _| c.rotate())
    }

    pub fn hamming(&self, other: &TagCode) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }

    /// Minimum distance to `other` over its four rotations.
    pub fn rotational_distance(&self, other: &TagCode) -> u32 {
        (0..4).map(|s| self.hamming(&other.rotated(s))).min().unwrap_or(0)
    }

    /// Minimum distance to its own non-trivial rotations.
    pub fn self_distance(&self) -> u32 {
        (1..4).map(|s| self.hamming(&self.rotated(s))).min().unwrap_or(0)
    }

    /// Printed appearance at canonical tag coordinates, where the black
    /// border spans `[-1, 1]^2`, the interior row index grows toward `-x`
    /// and the column index toward `-y`, and a one-cell white band surrounds
    /// the border. `Some(true)` is black, `None` lies outside the band.
    pub fn canonical_is_black(&self, x: f64, y: f64) -> Option<bool> {
        let n = self.k + 2;
        let s = 2.0 / n as f64;
        if x.abs() > 1.0 + s || y.abs() > 1.0 + s {
            return None;
        }
        if x.abs() >= 1.0 || y.abs() >= 1.0 {
            return Some(false);
        }
        let i = (((1.0 - x) / s) as usize).min(n - 1);
        let j = (((1.0 - y) / s) as usize).min(n - 1);
        if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            return Some(true);
        }
        Some(self.cell(i - 1, j - 1))
    }

    pub fn to_hex(&self) -> String {
        let digits = (self.k * self.k).div_ceil(4);
        format!("{:0width$x}", self.bits, width = digits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEntry {
    pub tag_id: u32,
    pub code: TagCode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagCodebook {
    entries: Vec<CodebookEntry>,
    k: usize,
    max_hamming: u32,
}

impl TagCodebook {
    /// Validates that every pair of entries, and every entry against its own
    /// rotations, differs by more than `2 * max_hamming` bits.
    pub fn new(entries: Vec<CodebookEntry>, max_hamming: u32) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::InvalidCodebook("codebook is empty".into()))?;
        let k = first.code.k;
        if !(1..=8).contains(&k) {
            return Err(Error::InvalidCodebook(format!("cell count {k} outside 1..=8")));
        }
        let limit = 2 * max_hamming;
        for (i, a) in entries.iter().enumerate() {
            if a.code.k != k {
                return Err(Error::InvalidCodebook(format!(
                    "tag {} has k = {}, expected {k}",
                    a.tag_id, a.code.k
                )));
            }
            if a.code.self_distance() <= limit {
                return Err(Error::InvalidCodebook(format!(
                    "tag {} is ambiguous under its own rotation",
                    a.tag_id
                )));
            }
            for b in &entries[i + 1..] {
                if a.tag_id == b.tag_id {
                    return Err(Error::InvalidCodebook(format!("duplicate tag id {}", a.tag_id)));
                }
                let d = a.code.rotational_distance(&b.code);
                if d <= limit {
                    return Err(Error::InvalidCodebook(format!(
                        "tags {} and {} differ by {d} bits, need > {limit}",
                        a.tag_id, b.tag_id
                    )));
                }
            }
        }
        Ok(Self {
            entries,
            k,
            max_hamming,
        })
    }

    /// Parses `tag_id hex_code k` lines; `#` starts a comment.
    pub fn parse(text: &str, max_hamming: u32) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::InvalidCodebook(format!("line {}: {what}: {raw:?}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(bad("expected `tag_id hex_code k`"));
            }
            let tag_id: u32 = fields[0].parse().map_err(|_| bad("bad tag id"))?;
            let k: usize = fields[2].parse().map_err(|_| bad("bad cell count"))?;
            if !(1..=8).contains(&k) {
                return Err(bad("cell count outside 1..=8"));
            }
            let hex = fields[1].trim_start_matches("0x");
            let bits = u64::from_str_radix(hex, 16).map_err(|_| bad("bad hex code"))?;
            if k * k < 64 && bits >> (k * k) != 0 {
                return Err(bad("code has more than k*k bits"));
            }
            entries.push(CodebookEntry {
                tag_id,
                code: TagCode::new(bits, k),
            });
        }
        Self::new(entries, max_hamming)
    }

    pub fn load(path: impl AsRef<Path>, max_hamming: u32) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text, max_hamming)
    }

    /// The shipped family with `max_hamming = 1`.
    pub fn default_family() -> Self {
        Self::parse(DEFAULT_CODEBOOK, 1).expect("shipped codebook is valid")
    }

    pub fn with_max_hamming(self, max_hamming: u32) -> Result<Self> {
        Self::new(self.entries, max_hamming)
    }

    pub fn entries(&self) -> &[CodebookEntry] {
        &self.entries
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_hamming(&self) -> u32 {
        self.max_hamming
    }

    pub fn get(&self, tag_id: u32) -> Option<&TagCode> {
        self.entries.iter().find(|e| e.tag_id == tag_id).map(|e| &e.code)
    }

    /// Best `(tag_id, quarter_turns, hamming)` such that
    /// `observed == entry.rotated(quarter_turns)` up to `hamming` bits.
    /// Ties go to the earlier entry, then the smaller rotation.
    pub fn best_match(&self, observed: &TagCode) -> Option<(u32, usize, u32)> {
        let mut best: Option<(u32, usize, u32)> = None;
        for e in &self.entries {
            for s in 0..4 {
                let d = observed.hamming(&e.code.rotated(s));
                if best.is_none_or(|b| d < b.2) {
                    best = Some((e.tag_id, s, d));
                }
            }
        }
        best
    }

    /// Greedy family: scans codes in a fixed pseudo-random order, keeping
    /// those with between `min_distance` and `k*k - min_distance` black
    /// cells whose distance to every kept code and to their own rotations is
    /// at least `min_distance`.
    pub fn generate(k: usize, min_distance: u32, count: usize) -> Vec<CodebookEntry> {
        assert!((1..=5).contains(&k), "generation supports k up to 5");
        let n = (k * k) as u32;
        let size = 1u64 << n;
        let mask = size - 1;
        let mut kept: Vec<TagCode> = Vec::new();
        for i in 0..size {
            if kept.len() == count {
                break;
            }
            let bits = (i.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5A5A_5A5A_5A5A_5A5A) & mask;
            let ones = bits.count_ones();
            if ones < min_distance || ones + min_distance > n {
                continue;
            }
            let code = TagCode::new(bits, k);
            if code.self_distance() >= min_distance && kept.iter().all(|c| code.rotational_distance(c) >= min_distance)
            {
                kept.push(code);
            }
        }
        kept.into_iter()
            .enumerate()
            .map(|(i, code)| CodebookEntry { tag_id: i as u32, code })
            .collect()
    }

    pub fn to_text(entries: &[CodebookEntry]) -> String {
        let mut s = String::new();
        for e in entries {
            let _ = writeln!(s, "{} {} {}", e.tag_id, e.code.to_hex(), e.code.k);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_has_order_four() {
        let c = TagCode::new(0b1000_0000_0000_0001 | 0b0100_0000_0000, 4);
        assert_eq!(c.rotated(4), c);
        assert_ne!(c.rotated(1), c);
        // top-left cell moves to top-right under a quarter turn
        let tl = TagCode::from_cells(4, |r, c| r == 0 && c == 0);
        let r1 = tl.rotate();
        assert!(r1.cell(3, 0));
        assert_eq!(r1.bits.count_ones(), 1);
    }

    #[test]
    fn shipped_family_matches_generator_and_is_valid() {
        let book = TagCodebook::default_family();
        let body: String = DEFAULT_CODEBOOK
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(body, TagCodebook::to_text(&TagCodebook::generate(4, 5, 30)));
        assert_eq!(book.entries().len(), 30);
        assert_eq!(book.k(), 4);
        // exhaustive distance check, independent of the loader
        let codes: Vec<_> = book.entries().iter().map(|e| e.code).collect();
        for (i, a) in codes.iter().enumerate() {
            for s in 1..4 {
                assert!((a.bits ^ a.rotated(s).bits).count_ones() >= 5);
            }
            for b in &codes[i + 1..] {
                for s in 0..4 {
                    assert!((a.bits ^ b.rotated(s).bits).count_ones() >= 5);
                }
            }
        }
    }

    #[test]
    fn loader_rejects_close_codes() {
        let text = "0 8421 4\n1 8420 4\n";
        assert!(matches!(TagCodebook::parse(text, 1), Err(Error::InvalidCodebook(_))));
        assert!(TagCodebook::parse("", 1).is_err());
        assert!(TagCodebook::parse("0 zz 4", 1).is_err());
        assert!(TagCodebook::parse("0 1ffff 4", 1).is_err());
    }

    #[test]
    fn best_match_reports_rotation() {
        let book = TagCodebook::default_family();
        let e = &book.entries()[7];
        for s in 0..4 {
            let obs = e.code.rotated(s);
            assert_eq!(book.best_match(&obs), Some((e.tag_id, s, 0)));
        }
        let flipped = TagCode::new(e.code.bits ^ 0b100, 4);
        assert_eq!(book.best_match(&flipped), Some((e.tag_id, 0, 1)));
    }
}
