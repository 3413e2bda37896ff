use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassTag, TerrainClass, TerrainMap};
use crate::error::{Error, Result};

/// Target fraction of the map covered by each non-Free class. The remainder
/// is Free.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassDensities {
    pub tall_grass: f64,
    pub shrub: f64,
    pub tree: f64,
    pub slip: f64,
}

impl ClassDensities {
    pub fn total(&self) -> f64 {
        self.tall_grass + self.shrub + self.tree + self.slip
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapGenConfig {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub seed: u64,
    pub densities: ClassDensities,
    /// Radius of the painted blobs in metres; 0 paints single cells.
    pub blob_radius: f64,
    /// Surround the map with a one-cell ring of Tree cells.
    pub border: bool,
    pub grass_drag: f64,
    pub slip_heading_noise_std: f64,
}

impl Default for MapGenConfig {
    fn default() -> Self {
        Self {
            width: 240,
            height: 120,
            resolution: 0.25,
            seed: 0,
            densities: ClassDensities { tall_grass: 0.15, shrub: 0.05, tree: 0.0, slip: 0.08 },
            blob_radius: 1.0,
            border: true,
            grass_drag: 0.6,
            slip_heading_noise_std: 0.15,
        }
    }
}

impl MapGenConfig {
    pub fn validate(&self) -> Result<()> {
        let d = &self.densities;
        for (name, v) in [("tall_grass", d.tall_grass), ("shrub", d.shrub), ("tree", d.tree), ("slip", d.slip)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("densities.{name}"), "must lie in [0, 1]"));
            }
        }
        if d.total() > 1.0 + 1e-12 {
            return Err(Error::config("densities", format!("sum {} exceeds 1", d.total())));
        }
        if self.width < 3 || self.height < 3 {
            return Err(Error::config("width/height", "map must be at least 3x3 cells"));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::config("resolution", "must be positive"));
        }
        if self.blob_radius < 0.0 {
            return Err(Error::config("blob_radius", "must be non-negative"));
        }
        Ok(())
    }
}

/// Procedural map: blobs of each class are painted onto Free cells until the
/// class reaches its target cell count.
pub fn generate_map(cfg: &MapGenConfig) -> Result<TerrainMap> {
    cfg.validate()?;
    let mut classes = TerrainClass::default_table();
    classes[1] = TerrainClass::tall_grass(cfg.grass_drag);
    classes[4] = TerrainClass::slip(cfg.slip_heading_noise_std);
    let mut map = TerrainMap::filled(cfg.width, cfg.height, cfg.resolution, classes);
    map.validate()?;
    let id = |tag| map.classes.iter().position(|c: &TerrainClass| c.tag == tag).unwrap() as u8;
    let (free, tree) = (id(ClassTag::Free), id(ClassTag::Tree));

    let total = cfg.width * cfg.height;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.densities;
    let plan = [
        (id(ClassTag::TallGrass), d.tall_grass),
        (id(ClassTag::Slip), d.slip),
        (id(ClassTag::Shrub), d.shrub),
        (tree, d.tree),
    ];
    let mut border_trees = 0;
    if cfg.border {
        for iy in 0..cfg.height {
            for ix in 0..cfg.width {
                if ix == 0 || iy == 0 || ix == cfg.width - 1 || iy == cfg.height - 1 {
                    map.set_cell(ix, iy, tree);
                    border_trees += 1;
                }
            }
        }
    }
    let radius_cells = cfg.blob_radius / cfg.resolution;
    for (class, density) in plan {
        let target = (density * total as f64).round() as usize;
        let mut painted = if class == tree { border_trees.min(target) } else { 0 };
        let mut attempts = 0usize;
        while painted < target && attempts < 100 * target + 1000 {
            attempts += 1;
            let cx = rng.random_range(0..cfg.width) as isize;
            let cy = rng.random_range(0..cfg.height) as isize;
            let r = if radius_cells > 0.0 { radius_cells * rng.random_range(0.5..=1.0) } else { 0.0 };
            let reach = r.ceil() as isize;
            'blob: for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if ((dx * dx + dy * dy) as f64).sqrt() > r {
                        continue;
                    }
                    let (x, y) = (cx + dx, cy + dy);
                    if x < 0 || y < 0 || x >= cfg.width as isize || y >= cfg.height as isize {
                        continue;
                    }
                    let (x, y) = (x as usize, y as usize);
                    if map.class_index(x, y) == free {
                        map.set_cell(x, y, class);
                        painted += 1;
                        if painted >= target {
                            break 'blob;
                        }
                    }
                }
            }
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(shrub: f64) -> MapGenConfig {
        MapGenConfig {
            width: 100,
            height: 100,
            seed: 42,
            densities: ClassDensities { tall_grass: 0.2, shrub, tree: 0.0, slip: 0.05 },
            border: false,
            ..Default::default()
        }
    }

    #[test]
    fn zero_shrub_density_means_no_shrubs() {
        let map = generate_map(&cfg(0.0)).unwrap();
        assert_eq!(map.fraction(ClassTag::Shrub), 0.0);
    }

    #[test]
    fn shrub_fraction_matches_density() {
        for seed in 0..5 {
            let map = generate_map(&MapGenConfig { seed, ..cfg(0.1) }).unwrap();
            let f = map.fraction(ClassTag::Shrub);
            assert!((f - 0.1).abs() <= 0.01, "seed {seed}: {f}");
        }
    }

    #[test]
    fn single_cell_mode_matches_density() {
        let map = generate_map(&MapGenConfig { blob_radius: 0.0, ..cfg(0.1) }).unwrap();
        assert!((map.fraction(ClassTag::Shrub) - 0.1).abs() <= 0.01);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_map(&cfg(0.1)).unwrap().to_json().unwrap();
        let b = generate_map(&cfg(0.1)).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_overfull_densities() {
        let mut c = cfg(0.5);
        c.densities.tall_grass = 0.6;
        assert!(matches!(generate_map(&c), Err(Error::InvalidConfig { .. })));
        c.densities.tall_grass = -0.1;
        assert!(generate_map(&c).is_err());
    }

    #[test]
    fn border_is_rigid() {
        let map = generate_map(&MapGenConfig { border: true, ..cfg(0.0) }).unwrap();
        assert!(map.is_rigid_cell(0, 50) && map.is_rigid_cell(99, 0) && map.is_rigid_cell(50, 99));
    }
}
