//! Simulated 2D terrain: the class grid, its on-disk format, and the helpers
//! built on top of it (realized dynamics, ego rendering, goal sampling and
//! procedural generation).

mod goal;
mod mapgen;
mod render;
mod sim;

pub use goal::{nearest_clear_position, sample_goal, sample_goal_in, Region};
pub use mapgen::{generate_map, ClassDensities, MapGenConfig};
pub use render::{
    class_color, project_to_image, render_observation, EgoObservation, RenderConfig, OUT_OF_MAP_COLOR,
};
pub use sim::{SimConfig, SimState};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    Free,
    TallGrass,
    Shrub,
    Tree,
    Slip,
}

impl ClassTag {
    pub const ALL: [ClassTag; 5] =
        [ClassTag::Free, ClassTag::TallGrass, ClassTag::Shrub, ClassTag::Tree, ClassTag::Slip];
}

/// Per-class disturbance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainClass {
    pub tag: ClassTag,
    /// Multiplier applied to the commanded forward velocity.
    pub drag: f64,
    /// Rigid cells block motion entirely.
    pub rigid: bool,
    /// Standard deviation of the per-step heading perturbation (rad).
    pub heading_noise_std: f64,
}

impl TerrainClass {
    pub const fn free() -> Self {
        Self { tag: ClassTag::Free, drag: 1.0, rigid: false, heading_noise_std: 0.0 }
    }

    pub const fn tall_grass(drag: f64) -> Self {
        Self { tag: ClassTag::TallGrass, drag, rigid: false, heading_noise_std: 0.0 }
    }

    pub const fn shrub() -> Self {
        Self { tag: ClassTag::Shrub, drag: 0.0, rigid: true, heading_noise_std: 0.0 }
    }

    pub const fn tree() -> Self {
        Self { tag: ClassTag::Tree, drag: 0.0, rigid: true, heading_noise_std: 0.0 }
    }

    pub const fn slip(heading_noise_std: f64) -> Self {
        Self { tag: ClassTag::Slip, drag: 1.0, rigid: false, heading_noise_std }
    }

    /// The default class table, indexed in `ClassTag::ALL` order.
    pub fn default_table() -> Vec<TerrainClass> {
        vec![Self::free(), Self::tall_grass(0.6), Self::shrub(), Self::tree(), Self::slip(0.15)]
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drag) {
            return Err(Error::InvalidMap(format!("{:?}: drag {} outside [0, 1]", self.tag, self.drag)));
        }
        if !(self.heading_noise_std >= 0.0 && self.heading_noise_std.is_finite()) {
            return Err(Error::InvalidMap(format!("{:?}: bad heading_noise_std", self.tag)));
        }
        if self.tag == ClassTag::Free && (self.drag != 1.0 || self.rigid) {
            return Err(Error::InvalidMap("Free must have drag 1 and be non-rigid".into()));
        }
        Ok(())
    }
}

/// Row-major grid of class indices into `classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainMap {
    pub width: usize,
    pub height: usize,
    /// Metres per cell.
    pub resolution: f64,
    /// World coordinates of the lower-left corner of cell (0, 0).
    pub origin: [f64; 2],
    pub classes: Vec<TerrainClass>,
    pub cells: Vec<u8>,
}

impl TerrainMap {
    /// A map filled with the first class of `classes`.
    pub fn filled(width: usize, height: usize, resolution: f64, classes: Vec<TerrainClass>) -> Self {
        Self { width, height, resolution, origin: [0.0, 0.0], classes, cells: vec![0; width * height] }
    }

    /// All-Free map using the default class table.
    pub fn open(width: usize, height: usize, resolution: f64) -> Self {
        Self::filled(width, height, resolution, TerrainClass::default_table())
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidMap("empty grid".into()));
        }
        if self.width * self.height != self.cells.len() {
            return Err(Error::InvalidMap(format!(
                "{}x{} grid but {} cells",
                self.width,
                self.height,
                self.cells.len()
            )));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidMap("resolution must be positive".into()));
        }
        for c in &self.classes {
            c.validate()?;
        }
        if let Some(&bad) = self.cells.iter().find(|&&c| c as usize >= self.classes.len()) {
            return Err(Error::InvalidMap(format!("cell refers to unknown class {bad}")));
        }
        Ok(())
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.width as f64 * self.resolution, self.height as f64 * self.resolution]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y).is_some()
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.origin[0]) / self.resolution).floor();
        let fy = ((y - self.origin[1]) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 || fx.is_nan() || fy.is_nan() {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.resolution,
            self.origin[1] + (iy as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn class_index(&self, ix: usize, iy: usize) -> u8 {
        self.cells[iy * self.width + ix]
    }

    pub fn class_at_cell(&self, ix: usize, iy: usize) -> &TerrainClass {
        &self.classes[self.class_index(ix, iy) as usize]
    }

    pub fn class_at(&self, x: f64, y: f64) -> Option<&TerrainClass> {
        self.cell_of(x, y).map(|(ix, iy)| self.class_at_cell(ix, iy))
    }

    pub fn set_cell(&mut self, ix: usize, iy: usize, class: u8) {
        self.cells[iy * self.width + ix] = class;
    }

    /// Index of the first class carrying `tag`.
    pub fn class_id(&self, tag: ClassTag) -> Option<u8> {
        self.classes.iter().position(|c| c.tag == tag).map(|i| i as u8)
    }

    pub fn is_rigid_cell(&self, ix: usize, iy: usize) -> bool {
        self.class_at_cell(ix, iy).rigid
    }

    /// Paints every cell whose centre lies inside the axis-aligned box.
    pub fn fill_rect(&mut self, min: [f64; 2], max: [f64; 2], class: u8) {
        for iy in 0..self.height {
            for ix in 0..self.width {
                let c = self.cell_center(ix, iy);
                if c[0] >= min[0] && c[0] < max[0] && c[1] >= min[1] && c[1] < max[1] {
                    self.set_cell(ix, iy, class);
                }
            }
        }
    }

    /// Paints every cell whose centre lies within `radius` of `center`.
    pub fn fill_disc(&mut self, center: [f64; 2], radius: f64, class: u8) {
        for iy in 0..self.height {
            for ix in 0..self.width {
                let c = self.cell_center(ix, iy);
                if (c[0] - center[0]).hypot(c[1] - center[1]) <= radius {
                    self.set_cell(ix, iy, class);
                }
            }
        }
    }

    /// Fraction of cells carrying `tag`.
    pub fn fraction(&self, tag: ClassTag) -> f64 {
        let n = self.cells.iter().filter(|&&c| self.classes[c as usize].tag == tag).count();
        n as f64 / self.cells.len() as f64
    }

    /// Distance from each cell centre to the nearest rigid cell centre, capped
    /// at `max_radius`.
    pub fn rigid_clearance(&self, max_radius: f64) -> Vec<f64> {
        let mut out = vec![max_radius; self.cells.len()];
        let reach = (max_radius / self.resolution).ceil() as isize;
        for iy in 0..self.height {
            for ix in 0..self.width {
                if !self.is_rigid_cell(ix, iy) {
                    continue;
                }
                for dy in -reach..=reach {
                    for dx in -reach..=reach {
                        let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                        if jx < 0 || jy < 0 || jx >= self.width as isize || jy >= self.height as isize {
                            continue;
                        }
                        let d = (dx as f64).hypot(dy as f64) * self.resolution;
                        let slot = &mut out[jy as usize * self.width + jx as usize];
                        if d < *slot {
                            *slot = d;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let file = MapFile {
            width: self.width,
            height: self.height,
            resolution: self.resolution,
            origin: self.origin,
            classes: self.classes.clone(),
            grid_base64: base64::engine::general_purpose::STANDARD.encode(&self.cells),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(text)?;
        let cells = base64::engine::general_purpose::STANDARD
            .decode(file.grid_base64.as_bytes())
            .map_err(|e| Error::InvalidMap(format!("grid_base64: {e}")))?;
        let map = TerrainMap {
            width: file.width,
            height: file.height,
            resolution: file.resolution,
            origin: file.origin,
            classes: file.classes,
            cells,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    classes: Vec<TerrainClass>,
    grid_base64: String,
}
