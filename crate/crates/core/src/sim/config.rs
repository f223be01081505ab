//! Scenario configuration: flat `key = value` text with `#` comments.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::geom::CameraModel;
use crate::pose::{LayoutKind, SolverSettings, TagLayout};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub lane_width: f64,
    /// Lanes per road, both directions together.
    pub lanes_per_road: u32,
    pub rsu_height: f64,
    pub rsu_pitch_down_deg: f64,
    /// Which intersection corner hosts the camera: 0 `(-,-)`, 1 `(+,-)`,
    /// 2 `(+,+)`, 3 `(-,+)`.
    pub rsu_index: usize,
    pub resolution: (u32, u32),
    /// `None` scales 800 px at 960 px width to the configured width.
    pub focal_length: Option<f64>,
    pub bus_length: f64,
    pub bus_width: f64,
    pub bus_height: f64,
    pub tag_width: f64,
    pub layout: LayoutKind,
    pub height_disturbance_max: f64,
    /// Gaussian noise per pixel coordinate in analytic mode.
    pub pixel_noise_sigma: f64,
    pub sector_radius_min: f64,
    pub sector_radius_max: f64,
    pub sector_azimuth_half_deg: f64,
    pub samples: usize,
    pub seed: u64,
    pub mu: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            lane_width: 3.7,
            lanes_per_road: 4,
            rsu_height: 8.0,
            rsu_pitch_down_deg: 40.0,
            rsu_index: 0,
            resolution: (960, 720),
            focal_length: None,
            bus_length: 6.0,
            bus_width: 2.0,
            bus_height: 3.0,
            tag_width: 1.6,
            layout: LayoutKind::DoubleFrontRear,
            height_disturbance_max: 0.0,
            pixel_noise_sigma: 0.3,
            sector_radius_min: 6.0,
            sector_radius_max: 17.0,
            sector_azimuth_half_deg: 30.0,
            samples: 20_000,
            seed: 1,
            mu: 1.0,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_resolution(value: &str) -> Result<(u32, u32)> {
    let (w, h) = value
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Config(format!("resolution {value:?} is not WIDTHxHEIGHT")))?;
    Ok((num("resolution", w.trim())?, num("resolution", h.trim())?))
}

impl ScenarioConfig {
    /// Parses a config file body on top of the defaults. Unknown keys are
    /// errors. The result is not validated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lane_width" => self.lane_width = num(key, value)?,
            "lanes_per_road" => self.lanes_per_road = num(key, value)?,
            "rsu_height" => self.rsu_height = num(key, value)?,
            "rsu_pitch_down_deg" => self.rsu_pitch_down_deg = num(key, value)?,
            "rsu_index" => self.rsu_index = num(key, value)?,
            "resolution" => self.resolution = parse_resolution(value)?,
            "focal_length" => {
                self.focal_length = if value == "auto" { None } else { Some(num(key, value)?) };
            }
            "bus_length" => self.bus_length = num(key, value)?,
            "bus_width" => self.bus_width = num(key, value)?,
            "bus_height" => self.bus_height = num(key, value)?,
            "tag_width" => self.tag_width = num(key, value)?,
            "layout" => self.layout = value.parse()?,
            "height_disturbance_max" => self.height_disturbance_max = num(key, value)?,
            "pixel_noise_sigma" => self.pixel_noise_sigma = num(key, value)?,
            "sector_radius_min" => self.sector_radius_min = num(key, value)?,
            "sector_radius_max" => self.sector_radius_max = num(key, value)?,
            "sector_azimuth_half_deg" => self.sector_azimuth_half_deg = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "mu" => self.mu = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?} = {value:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lane_width", self.lane_width),
            ("rsu_height", self.rsu_height),
            ("bus_length", self.bus_length),
            ("bus_width", self.bus_width),
            ("bus_height", self.bus_height),
            ("tag_width", self.tag_width),
            ("sector_radius_max", self.sector_radius_max),
            ("focal_length", self.focal_length()),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("height_disturbance_max", self.height_disturbance_max),
            ("pixel_noise_sigma", self.pixel_noise_sigma),
            ("sector_radius_min", self.sector_radius_min),
            ("sector_azimuth_half_deg", self.sector_azimuth_half_deg),
            ("mu", self.mu),
        ];
        for (k, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be non-negative, got {v}")));
            }
        }
        if !(self.rsu_pitch_down_deg > 0.0 && self.rsu_pitch_down_deg < 90.0) {
            return Err(Error::Config(format!(
                "rsu_pitch_down_deg must lie in (0, 90), got {}",
                self.rsu_pitch_down_deg
            )));
        }
        if self.rsu_index > 3 {
            return Err(Error::Config(format!(
                "rsu_index must be 0..=3, got {}",
                self.rsu_index
            )));
        }
        if self.lanes_per_road == 0 {
            return Err(Error::Config("lanes_per_road must be positive".into()));
        }
        if self.resolution.0 < 16 || self.resolution.1 < 16 {
            return Err(Error::Config(format!("resolution {:?} too small", self.resolution)));
        }
        if self.sector_azimuth_half_deg > 180.0 {
            return Err(Error::Config("sector_azimuth_half_deg must not exceed 180".into()));
        }
        if self.height_disturbance_max >= self.bus_height {
            return Err(Error::Config(
                "height disturbance must stay below the bus height".into(),
            ));
        }
        if self.bus_height >= self.rsu_height {
            return Err(Error::Config("the camera must be above the bus top".into()));
        }
        Ok(())
    }

    pub fn focal_length(&self) -> f64 {
        self.focal_length.unwrap_or(800.0 * self.resolution.0 as f64 / 960.0)
    }

    /// Ground-foot of RSU `index` at an intersection corner.
    pub fn rsu_foot(&self, index: usize) -> Vector2<f64> {
        let c = 0.5 * self.lanes_per_road as f64 * self.lane_width;
        match index % 4 {
            0 => Vector2::new(-c, -c),
            1 => Vector2::new(c, -c),
            2 => Vector2::new(c, c),
            _ => Vector2::new(-c, c),
        }
    }

    pub fn camera_at(&self, index: usize) -> CameraModel {
        let f = self.rsu_foot(index);
        CameraModel::looking_at(
            Vector3::new(f.x, f.y, self.rsu_height),
            Vector3::zeros(),
            self.rsu_pitch_down_deg.to_radians(),
            self.focal_length(),
            self.resolution,
        )
    }

    /// The configured RSU camera.
    pub fn camera(&self) -> CameraModel {
        self.camera_at(self.rsu_index)
    }

    pub fn all_cameras(&self) -> Vec<CameraModel> {
        (0..4).map(|k| self.camera_at(k)).collect()
    }

    pub fn tag_layout(&self) -> TagLayout {
        TagLayout::new(self.layout, self.tag_width)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            mu: self.mu,
            ..Default::default()
        }
    }

    /// Serializes every key so that `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let focal = self.focal_length.map_or("auto".to_string(), |f| f.to_string());
        let pairs: [(&str, String); 20] = [
            ("lane_width", self.lane_width.to_string()),
            ("lanes_per_road", self.lanes_per_road.to_string()),
            ("rsu_height", self.rsu_height.to_string()),
            ("rsu_pitch_down_deg", self.rsu_pitch_down_deg.to_string()),
            ("rsu_index", self.rsu_index.to_string()),
            ("resolution", format!("{}x{}", self.resolution.0, self.resolution.1)),
            ("focal_length", focal),
            ("bus_length", self.bus_length.to_string()),
            ("bus_width", self.bus_width.to_string()),
            ("bus_height", self.bus_height.to_string()),
            ("tag_width", self.tag_width.to_string()),
            ("layout", self.layout.to_string()),
            ("height_disturbance_max", self.height_disturbance_max.to_string()),
            ("pixel_noise_sigma", self.pixel_noise_sigma.to_string()),
            ("sector_radius_min", self.sector_radius_min.to_string()),
            ("sector_radius_max", self.sector_radius_max.to_string()),
            ("sector_azimuth_half_deg", self.sector_azimuth_half_deg.to_string()),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
            ("mu", self.mu.to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        let mut cfg = ScenarioConfig::default();
        cfg.focal_length = Some(712.5);
        cfg.layout = LayoutKind::Triple;
        cfg.resolution = (3200, 2400);
        cfg.height_disturbance_max = 0.1;
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(
            ScenarioConfig::parse(&ScenarioConfig::default().to_text()).unwrap(),
            ScenarioConfig::default()
        );
    }

    #[test]
    fn comments_and_overrides() {
        let mut cfg = ScenarioConfig::parse("# scenario\nseed = 9 # trailing\n\nresolution=3200x2400\n").unwrap();
        assert_eq!((cfg.seed, cfg.resolution), (9, (3200, 2400)));
        assert!((cfg.focal_length() - 800.0 * 10.0 / 3.0).abs() < 1e-9);
        cfg.apply_override("samples=12").unwrap();
        assert_eq!(cfg.samples, 12);
        assert!(cfg.apply_override("sample=12").is_err());
        assert!(cfg.apply_override("samples").is_err());
        assert!(ScenarioConfig::parse("colour = red").is_err());
        assert!(ScenarioConfig::parse("seed 4").is_err());
    }

    #[test]
    fn validation_rejects_bad_geometry() {
        assert!(ScenarioConfig::default().validate().is_ok());
        for kv in [
            "rsu_pitch_down_deg=90",
            "rsu_pitch_down_deg=0",
            "lane_width=0",
            "tag_width=-1",
            "rsu_index=4",
            "focal_length=0",
            "pixel_noise_sigma=-0.1",
            "bus_height=9",
        ] {
            let mut cfg = ScenarioConfig::default();
            cfg.apply_override(kv).unwrap();
            assert!(cfg.validate().is_err(), "{kv}");
        }
    }

    #[test]
    fn rsu_faces_the_intersection_center() {
        let cfg = ScenarioConfig::default();
        for k in 0..4 {
            let cam = cfg.camera_at(k);
            let foot = cfg.rsu_foot(k);
            assert!((foot.norm() - 7.4 * 2f64.sqrt()).abs() < 1e-12);
            let p = cam.world_to_cam.apply(&Vector3::zeros());
            // the intersection center lies on the vertical midline of the image
            assert!(p.x.abs() < 1e-9 && p.z > 0.0);
        }
    }
}
