//! Text form of tag detections: one line per tag,
//! `tag_id u0 v0 u1 v1 u2 v2 u3 v3 hamming`.

use nalgebra::Vector2;
use toptag::detect::TagDetection;
use toptag::pose::{Observations, TagLayout};
use toptag::textfmt::sig9;
use toptag::{Error, Result};

pub fn format_detection(d: &TagDetection) -> String {
    let mut f = vec![d.tag_id.to_string()];
    for c in &d.corners {
        f.push(sig9(c.x));
        f.push(sig9(c.y));
    }
    f.push(d.hamming.to_string());
    f.join(" ")
}

/// Corners listed for one tag, in layout corner order.
#[derive(Debug, Clone, PartialEq)]
pub struct TagCorners {
    pub tag_id: u32,
    pub corners: Vec<Vector2<f64>>,
}

/// Reads detection lines. A line may list fewer than four corners (the
/// leading ones in layout order); with an odd number of values after the id
/// the last one is the Hamming distance and is ignored. `#` starts a comment.
pub fn parse_detections(text: &str) -> Result<Vec<TagCorners>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("line {}: {what}: {raw:?}", n + 1));
        let mut fields = line.split_whitespace();
        let tag_id: u32 = fields.next().unwrap_or("").parse().map_err(|_| bad("bad tag id"))?;
        let mut vals: Vec<f64> = fields
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<_>>()?;
        if vals.len() % 2 == 1 {
            vals.pop();
        }
        if vals.is_empty() || vals.len() > 8 {
            return Err(bad("expected 1 to 4 corners"));
        }
        out.push(TagCorners {
            tag_id,
            corners: vals.chunks(2).map(|p| Vector2::new(p[0], p[1])).collect(),
        });
    }
    Ok(out)
}

/// Maps tag corners onto layout control-point indices. Ids absent from the
/// layout are returned separately.
pub fn to_observations(layout: &TagLayout, tags: &[TagCorners]) -> Result<(Observations, Vec<u32>)> {
    let mut pts = Vec::new();
    let mut unknown = Vec::new();
    for t in tags {
        match layout.tag(t.tag_id) {
            Some(p) => pts.extend(t.corners.iter().enumerate().map(|(j, c)| (p.first_index + j, *c))),
            None => unknown.push(t.tag_id),
        }
    }
    Ok((Observations::new(pts)?, unknown))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detect_output_parses_back() {
        let d = TagDetection {
            tag_id: 3,
            corners: [
                Vector2::new(1.5, 2.0),
                Vector2::new(10.25, 2.0),
                Vector2::new(10.0, 12.0),
                Vector2::new(1.0, 11.0),
            ],
            hamming: 1,
            rotation_applied: 90,
        };
        let line = format_detection(&d);
        assert_eq!(
            line,
            "3 1.50000000 2.00000000 10.2500000 2.00000000 10.0000000 12.0000000 1.00000000 11.0000000 1"
        );
        let back = parse_detections(&line).unwrap();
        assert_eq!(back[0].tag_id, 3);
        assert_eq!(back[0].corners, d.corners.to_vec());
    }

    #[test]
    fn partial_and_malformed_lines() {
        let t = parse_detections("# header\n7 1 2 3 4 5 6\n").unwrap();
        assert_eq!(t[0].corners.len(), 3);
        assert!(parse_detections("x 1 2").is_err());
        assert!(parse_detections("1 2 3 4 5 6 7 8 9 10 11").is_err());
        assert!(parse_detections("1").is_err());
    }
}
