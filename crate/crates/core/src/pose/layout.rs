//! Tag control points in the vehicle-top-tag frame (x forward, y left,
//! z up, origin at the vehicle center on the tag plane).

use std::fmt;
use std::str::FromStr;

use nalgebra::{Vector2, Vector3};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutKind {
    SingleCenter,
    DoubleFrontRear,
    Triple,
    Long,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 4] = [
        LayoutKind::SingleCenter,
        LayoutKind::DoubleFrontRear,
        LayoutKind::Triple,
        LayoutKind::Long,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::SingleCenter => "single-center",
            LayoutKind::DoubleFrontRear => "double-front-rear",
            LayoutKind::Triple => "triple",
            LayoutKind::Long => "long",
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        LayoutKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown layout {s:?}")))
    }
}

/// One printed tag: black square (or rectangle) centered at `center` with
/// half extents `half`, its 4 control points at
/// `first_index..first_index + 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagPlacement {
    pub tag_id: u32,
    pub center: Vector2<f64>,
    pub half: Vector2<f64>,
    pub first_index: usize,
}

impl TagPlacement {
    /// Maps canonical tag coordinates (black border on `[-1, 1]^2`) to the
    /// tag frame.
    pub fn to_tag_frame(&self, a: f64, b: f64) -> Vector2<f64> {
        Vector2::new(self.center.x + self.half.x * a, self.center.y + self.half.y * b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagLayout {
    kind: LayoutKind,
    control_points: Vec<Vector3<f64>>,
    tags: Vec<TagPlacement>,
}

/// Corner order of one tag: `(-w,-w), (-w,w), (w,w), (w,-w)`.
pub const CORNER_SIGNS: [(f64, f64); 4] = [(-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (1.0, -1.0)];

impl TagLayout {
    /// Builds a layout from tags given as `(tag_id, center, half extents)`.
    pub fn from_tags(kind: LayoutKind, tags: &[(u32, Vector2<f64>, Vector2<f64>)]) -> Self {
        let mut control_points = Vec::with_capacity(4 * tags.len());
        let mut placed = Vec::with_capacity(tags.len());
        for &(tag_id, center, half) in tags {
            let p = TagPlacement {
                tag_id,
                center,
                half,
                first_index: control_points.len(),
            };
            for (a, b) in CORNER_SIGNS {
                let q = p.to_tag_frame(a, b);
                control_points.push(Vector3::new(q.x, q.y, 0.0));
            }
            placed.push(p);
        }
        Self {
            kind,
            control_points,
            tags: placed,
        }
    }

    /// Standard layout for a tag whose black square is `tag_width` wide.
    /// Tag ids start at 0 and run front to rear.
    pub fn new(kind: LayoutKind, tag_width: f64) -> Self {
        let w = 0.5 * tag_width;
        let sq = Vector2::new(w, w);
        // one white cell of a 4x4 code on each side of the black border
        let band = tag_width / 6.0;
        match kind {
            LayoutKind::SingleCenter => Self::from_tags(kind, &[(0, Vector2::zeros(), sq)]),
            LayoutKind::DoubleFrontRear => {
                let dx = w + band + 0.3 * tag_width;
                Self::from_tags(kind, &[(0, Vector2::new(dx, 0.0), sq), (1, Vector2::new(-dx, 0.0), sq)])
            }
            LayoutKind::Triple => {
                let dx = 2.0 * w + band;
                Self::from_tags(
                    kind,
                    &[
                        (0, Vector2::new(dx, 0.0), sq),
                        (1, Vector2::zeros(), sq),
                        (2, Vector2::new(-dx, 0.0), sq),
                    ],
                )
            }
            LayoutKind::Long => Self::from_tags(kind, &[(0, Vector2::zeros(), Vector2::new(3.0 * w, w))]),
        }
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn control_points(&self) -> &[Vector3<f64>] {
        &self.control_points
    }

    pub fn len(&self) -> usize {
        self.control_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_points.is_empty()
    }

    pub fn tags(&self) -> &[TagPlacement] {
        &self.tags
    }

    pub fn tag(&self, tag_id: u32) -> Option<&TagPlacement> {
        self.tags.iter().find(|t| t.tag_id == tag_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layout_matches_corner_formula() {
        let l = TagLayout::new(LayoutKind::SingleCenter, 1.6);
        let expect = [(-0.8, -0.8), (-0.8, 0.8), (0.8, 0.8), (0.8, -0.8)];
        for (p, (x, y)) in l.control_points().iter().zip(expect) {
            assert_eq!((p.x, p.y, p.z), (x, y, 0.0));
        }
    }

    #[test]
    fn layouts_are_planar_and_symmetric() {
        for kind in LayoutKind::ALL {
            let l = TagLayout::new(kind, 1.6);
            assert_eq!(l.len(), 4 * l.tags().len());
            assert!(l.control_points().iter().all(|p| p.z == 0.0));
            let centroid = l.control_points().iter().sum::<Vector3<f64>>() / l.len() as f64;
            assert!(centroid.norm() < 1e-12, "{kind}");
            assert_eq!(kind.name().parse::<LayoutKind>().unwrap(), kind);
        }
        let d = TagLayout::new(LayoutKind::DoubleFrontRear, 1.6);
        for p in d.control_points() {
            assert!(d.control_points().iter().any(|q| (p + q).norm() < 1e-12));
        }
        // double layout tags with their white bands fit on a 6 m roof
        let band = 1.6 / 6.0;
        assert!(d.tags()[0].center.x + 0.8 + band <= 3.0);
        assert!(d.tags()[0].center.x - 0.8 - band >= 0.0);
    }

    #[test]
    fn unknown_layout_name_rejected() {
        assert!("quad".parse::<LayoutKind>().is_err());
    }
}
