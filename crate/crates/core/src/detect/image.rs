//! 8-bit grayscale rasters, binary masks, integral images and PGM/PPM I/O.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Parse(format!(
                "image buffer has {} bytes, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Bilinear sample at sub-pixel position (pixel centers at integers),
    /// clamped to the image.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let xm = (self.width - 1) as f64;
        let ym = (self.height - 1) as f64;
        let x = x.clamp(0.0, xm);
        let y = y.clamp(0.0, ym);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) as f64 * (1.0 - fx) + self.get(x1, y0) as f64 * fx;
        let bottom = self.get(x0, y1) as f64 * (1.0 - fx) + self.get(x1, y1) as f64 * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Image rotated by 90 degrees clockwise as displayed (x right, y down).
    pub fn rotated_cw(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        GrayImage::from_fn(h, w, |x, y| self.get(y, h - 1 - x))
    }

    /// Parses a binary (P5) PGM with maxval 255.
    pub fn parse_pgm(bytes: &[u8]) -> Result<Self> {
        let (magic, header, rest) = parse_pnm_header(bytes)?;
        if magic != "P5" {
            return Err(Error::Parse(format!("expected P5 PGM, found {magic}")));
        }
        let [width, height] = header;
        let need = width * height;
        if rest.len() < need {
            return Err(Error::Parse("truncated PGM pixel data".into()));
        }
        Self::from_raw(width, height, rest[..need].to_vec())
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::parse_pgm(&bytes)
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_pgm_bytes())?;
        Ok(())
    }
}

fn parse_pnm_header(bytes: &[u8]) -> Result<(String, [usize; 2], &[u8])> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::Parse("truncated PNM header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    i += 1;
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad PNM header field {s:?}")))
    };
    let (w, h, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
    if maxval != 255 {
        return Err(Error::Parse(format!("unsupported maxval {maxval}")));
    }
    Ok((tokens[0].clone(), [w, h], bytes.get(i..).unwrap_or(&[])))
}

/// Row-major RGB image used for debug overlays (written as P6).
#[derive(Debug, Clone)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.data().iter().map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.data[y as usize * self.width + x as usize] = rgb;
        }
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), rgb: [u8; 3]) {
        let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = a.0 + t * (b.0 - a.0);
            let y = a.1 + t * (b.1 - a.1);
            self.put(x.round() as i64, y.round() as i64, rgb);
        }
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "P6\n{} {}\n255\n", self.width, self.height)?;
        for px in &self.data {
            f.write_all(px)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Foreground mask, row-major, `true` = foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-image positions read as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Summed-area table with one padding row and column. Sums are kept modulo
/// 2^32; any box with fewer than 2^24 pixels is recovered exactly.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sums: Vec<u32>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let stride = w + 1;
        let mut sums = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let row = &img.data()[y * w..(y + 1) * w];
            let mut acc = 0u32;
            let (above, below) = sums.split_at_mut((y + 1) * stride);
            let above = &above[y * stride..];
            let below = &mut below[..stride];
            for x in 0..w {
                acc = acc.wrapping_add(row[x] as u32);
                below[x + 1] = above[x + 1].wrapping_add(acc);
            }
        }
        Self {
            width: w,
            height: h,
            sums,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row `y` of the padded table (`width + 1` entries, `y` in `0..=height`).
    #[inline]
    pub fn row(&self, y: usize) -> &[u32] {
        let s = self.width + 1;
        &self.sums[y * s..(y + 1) * s]
    }

    /// Sum over the half-open box `[x0, x1) x [y0, y1)`.
    #[inline]
    pub fn box_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u32 {
        let s = self.width + 1;
        self.sums[y1 * s + x1]
            .wrapping_sub(self.sums[y0 * s + x1])
            .wrapping_sub(self.sums[y1 * s + x0])
            .wrapping_add(self.sums[y0 * s + x0])
    }

    /// Mean of the `(2r+1)^2` box centered at `(x, y)`, clipped to the image.
    pub fn box_mean(&self, x: i64, y: i64, r: i64) -> f64 {
        let x = x.clamp(0, self.width as i64 - 1);
        let y = y.clamp(0, self.height as i64 - 1);
        let x0 = (x - r).max(0) as usize;
        let y0 = (y - r).max(0) as usize;
        let x1 = ((x + r + 1) as usize).min(self.width);
        let y1 = ((y + r + 1) as usize).min(self.height);
        self.box_sum(x0, y0, x1, y1) as f64 / ((x1 - x0) * (y1 - y0)) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_with_comment() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 40 + y) as u8);
        let bytes = img.to_pgm_bytes();
        assert_eq!(GrayImage::parse_pgm(&bytes).unwrap(), img);
        let mut commented = b"P5\n# made by hand\n5 3\n255\n".to_vec();
        commented.extend_from_slice(img.data());
        assert_eq!(GrayImage::parse_pgm(&commented).unwrap(), img);
    }

    #[test]
    fn pgm_rejects_other_formats() {
        assert!(GrayImage::parse_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(GrayImage::parse_pgm(b"P5\n4 4\n255\nabc").is_err());
        assert!(GrayImage::parse_pgm(b"P5\n1 1\n65535\n\0\0").is_err());
    }

    #[test]
    fn integral_box_sums_match_direct_sums() {
        let img = GrayImage::from_fn(13, 9, |x, y| ((x * 31 + y * 17) % 256) as u8);
        let ii = IntegralImage::new(&img);
        for (x0, y0, x1, y1) in [(0, 0, 13, 9), (2, 3, 7, 8), (5, 5, 6, 6), (0, 4, 13, 5)] {
            let mut direct = 0u32;
            for y in y0..y1 {
                for x in x0..x1 {
                    direct += img.get(x, y) as u32;
                }
            }
            assert_eq!(ii.box_sum(x0, y0, x1, y1), direct);
        }
    }

    #[test]
    fn wrapping_sums_stay_exact_on_large_images() {
        let img = GrayImage::new(4000, 4300, 255);
        let ii = IntegralImage::new(&img);
        // the full-image total overflows u32 but small boxes are exact
        assert_eq!(ii.box_sum(3990, 4290, 4000, 4300), 255 * 100);
        assert_eq!(ii.box_mean(3999, 4299, 1), 255.0);
    }

    #[test]
    fn rotation_moves_top_left_to_top_right() {
        let mut img = GrayImage::new(4, 3, 0);
        img.set(0, 0, 9);
        let r = img.rotated_cw();
        assert_eq!((r.width(), r.height()), (3, 4));
        assert_eq!(r.get(2, 0), 9);
    }

    #[test]
    fn bilinear_interpolates_between_centers() {
        let img = GrayImage::from_fn(2, 1, |x, _| if x == 0 { 0 } else { 100 });
        assert_eq!(img.bilinear(0.25, 0.0), 25.0);
        assert_eq!(img.bilinear(-3.0, 0.0), 0.0);
    }
}
