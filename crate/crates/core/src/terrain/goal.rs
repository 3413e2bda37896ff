use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TerrainMap;
use crate::dynamics::State;
use crate::error::{Error, Result};

/// Axis-aligned world-frame rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Region {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }
}

/// Uniformly samples the centre of a non-rigid cell whose distance from the
/// robot lies in `[min_dist, max_dist]`.
pub fn sample_goal<R: Rng + ?Sized>(
    map: &TerrainMap,
    robot: &State,
    rng: &mut R,
    min_dist: f64,
    max_dist: f64,
) -> Result<[f64; 2]> {
    sample_goal_in(map, robot, rng, min_dist, max_dist, None)
}

/// Like [`sample_goal`], optionally restricted to cells centred in `region`.
pub fn sample_goal_in<R: Rng + ?Sized>(
    map: &TerrainMap,
    robot: &State,
    rng: &mut R,
    min_dist: f64,
    max_dist: f64,
    region: Option<&Region>,
) -> Result<[f64; 2]> {
    let mut eligible = Vec::new();
    for iy in 0..map.height {
        for ix in 0..map.width {
            if map.is_rigid_cell(ix, iy) {
                continue;
            }
            let c = map.cell_center(ix, iy);
            let d = (c[0] - robot.chi).hypot(c[1] - robot.y);
            if d >= min_dist && d <= max_dist && region.is_none_or(|r| r.contains(c)) {
                eligible.push(c);
            }
        }
    }
    if eligible.is_empty() {
        return Err(Error::NoValidGoal { min_dist, max_dist });
    }
    Ok(eligible[rng.random_range(0..eligible.len())])
}

/// Centre of the non-rigid cell nearest to `p` whose clearance from every
/// rigid cell is at least `min_clearance`. `clearance` comes from
/// [`TerrainMap::rigid_clearance`].
pub fn nearest_clear_position(
    map: &TerrainMap,
    clearance: &[f64],
    p: [f64; 2],
    min_clearance: f64,
    region: Option<&Region>,
) -> Option<[f64; 2]> {
    let mut best: Option<([f64; 2], f64)> = None;
    for iy in 0..map.height {
        for ix in 0..map.width {
            if clearance[iy * map.width + ix] < min_clearance || map.is_rigid_cell(ix, iy) {
                continue;
            }
            let c = map.cell_center(ix, iy);
            if region.is_some_and(|r| !r.contains(c)) {
                continue;
            }
            let d = (c[0] - p[0]).hypot(c[1] - p[1]);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((c, d));
            }
        }
    }
    best.map(|(c, _)| c)
}
