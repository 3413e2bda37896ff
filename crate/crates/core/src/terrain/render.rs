use serde::{Deserialize, Serialize};

use super::{ClassTag, TerrainMap};
use crate::dynamics::State;

/// Forward-facing camera stand-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub fov_deg: f64,
    /// Distance of the first (nearest) image row's lower edge.
    pub near: f64,
    /// Distance of the last (farthest) image row's upper edge.
    pub range: f64,
    /// Pose is rounded to this many metres/radians before projecting.
    pub pose_quantum: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { width: 32, height: 32, fov_deg: 90.0, near: 0.0, range: 4.0, pose_quantum: 1e-6 }
    }
}

impl RenderConfig {
    fn half_tan(&self) -> f64 {
        (self.fov_deg.to_radians() * 0.5).tan()
    }

    /// Forward distance sampled by image row `r`. Rows run near to far.
    pub fn row_depth(&self, r: usize) -> f64 {
        self.near + (r as f64 + 0.5) * (self.range - self.near) / self.height as f64
    }

    /// Signed lateral offset (left positive) sampled by column `c` at depth `d`.
    pub fn column_offset(&self, c: usize, d: f64) -> f64 {
        d * self.half_tan() * (1.0 - 2.0 * (c as f64 + 0.5) / self.width as f64)
    }
}

pub const OUT_OF_MAP_COLOR: [f32; 3] = [0.0, 0.0, 0.0];

pub fn class_color(tag: ClassTag) -> [f32; 3] {
    match tag {
        ClassTag::Free => [0.6, 0.5, 0.35],
        ClassTag::TallGrass => [0.4, 0.8, 0.3],
        ClassTag::Shrub => [0.1, 0.35, 0.1],
        ClassTag::Tree => [0.35, 0.2, 0.1],
        ClassTag::Slip => [0.85, 0.9, 0.95],
    }
}

/// Three-channel image stored channel-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoObservation {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f32>,
}

impl EgoObservation {
    pub fn filled(height: usize, width: usize, color: [f32; 3]) -> Self {
        let mut pixels = vec![0.0; 3 * height * width];
        for (ch, &v) in color.iter().enumerate() {
            pixels[ch * height * width..(ch + 1) * height * width].fill(v);
        }
        Self { channels: 3, height, width, pixels }
    }

    pub fn pixel(&self, ch: usize, r: usize, c: usize) -> f32 {
        self.pixels[(ch * self.height + r) * self.width + c]
    }

    pub fn rgb(&self, r: usize, c: usize) -> [f32; 3] {
        [self.pixel(0, r, c), self.pixel(1, r, c), self.pixel(2, r, c)]
    }

    pub fn set_rgb(&mut self, r: usize, c: usize, rgb: [f32; 3]) {
        let plane = self.height * self.width;
        let idx = r * self.width + c;
        for (ch, &v) in rgb.iter().enumerate() {
            self.pixels[ch * plane + idx] = v;
        }
    }

    pub fn same_dims(&self, other: &EgoObservation) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }
}

fn quantize(v: f64, q: f64) -> f64 {
    if q > 0.0 {
        (v / q).round() * q
    } else {
        v
    }
}

/// Rasterises the trapezoidal field of view in front of the robot. Each pixel
/// takes the colour of the terrain class under its sample point.
pub fn render_observation(robot: &State, map: &TerrainMap, cfg: &RenderConfig) -> EgoObservation {
    let x = quantize(robot.chi, cfg.pose_quantum);
    let y = quantize(robot.y, cfg.pose_quantum);
    let phi = quantize(robot.phi, cfg.pose_quantum);
    let (sin, cos) = phi.sin_cos();
    let palette: Vec<[f32; 3]> = map.classes.iter().map(|c| class_color(c.tag)).collect();

    let mut obs = EgoObservation::filled(cfg.height, cfg.width, OUT_OF_MAP_COLOR);
    for r in 0..cfg.height {
        let d = cfg.row_depth(r);
        for c in 0..cfg.width {
            let l = cfg.column_offset(c, d);
            let wx = x + d * cos - l * sin;
            let wy = y + d * sin + l * cos;
            let color = match map.cell_of(wx, wy) {
                Some((ix, iy)) => palette[map.class_index(ix, iy) as usize],
                None => OUT_OF_MAP_COLOR,
            };
            obs.set_rgb(r, c, color);
        }
    }
    obs
}

/// Maps a world point into continuous image coordinates `(column, row)` of
/// the observation rendered at `robot`. Pixel `(r, c)` covers
/// `[c, c + 1) x [r, r + 1)`. Returns `None` behind the camera.
pub fn project_to_image(robot: &State, point: [f64; 2], cfg: &RenderConfig) -> Option<[f64; 2]> {
    let (sin, cos) = robot.phi.sin_cos();
    let (dx, dy) = (point[0] - robot.chi, point[1] - robot.y);
    let d = dx * cos + dy * sin;
    let l = -dx * sin + dy * cos;
    if d <= 1e-9 {
        return None;
    }
    let col = 0.5 * (1.0 - l / (d * cfg.half_tan())) * cfg.width as f64;
    let row = (d - cfg.near) / (cfg.range - cfg.near) * cfg.height as f64;
    Some([col, row])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::TerrainMap;

    #[test]
    fn uniform_scene_renders_uniform_image() {
        let map = TerrainMap::open(80, 80, 0.25);
        let obs = render_observation(&State::new(10.0, 10.0, 0.7), &map, &RenderConfig::default());
        let free = class_color(ClassTag::Free);
        for r in 0..32 {
            for c in 0..32 {
                assert_eq!(obs.rgb(r, c), free);
            }
        }
    }

    #[test]
    fn shrub_wall_occupies_far_rows() {
        // Wall of shrubs at x >= 11.0, robot at x = 10.0 looking along +x.
        let mut map = TerrainMap::open(80, 80, 0.25);
        map.fill_rect([11.0, 0.0], [20.0, 20.0], 2);
        let cfg = RenderConfig::default();
        let obs = render_observation(&State::new(10.0, 10.0, 0.0), &map, &cfg);
        // Oracle: row r samples depth near + (r + 0.5) * (range - near) / rows.
        for r in 0..cfg.height {
            let depth = (r as f64 + 0.5) * 4.0 / 32.0;
            let expect = if depth >= 1.0 { ClassTag::Shrub } else { ClassTag::Free };
            for c in 0..cfg.width {
                assert_eq!(obs.rgb(r, c), class_color(expect), "row {r} col {c}");
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut map = TerrainMap::open(60, 60, 0.25);
        map.fill_disc([8.0, 8.0], 1.0, 2);
        let s = State::new(6.3, 7.1, 0.2);
        let a = render_observation(&s, &map, &RenderConfig::default());
        let b = render_observation(&s, &map, &RenderConfig::default());
        assert_eq!(a, b);
        assert!(a.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn outside_map_is_black() {
        let map = TerrainMap::open(8, 8, 0.25);
        let obs = render_observation(&State::new(1.0, 1.0, 0.0), &map, &RenderConfig::default());
        assert_eq!(obs.rgb(31, 16), OUT_OF_MAP_COLOR);
    }

    #[test]
    fn projection_inverts_sampling() {
        let cfg = RenderConfig::default();
        let robot = State::new(3.0, -1.0, 1.1);
        let (sin, cos) = robot.phi.sin_cos();
        for (r, c) in [(0usize, 0usize), (7, 20), (31, 31)] {
            let d = cfg.row_depth(r);
            let l = cfg.column_offset(c, d);
            let p = [robot.chi + d * cos - l * sin, robot.y + d * sin + l * cos];
            let [pc, pr] = project_to_image(&robot, p, &cfg).unwrap();
            assert!((pc - (c as f64 + 0.5)).abs() < 1e-9);
            assert!((pr - (r as f64 + 0.5)).abs() < 1e-9);
        }
    }
}
