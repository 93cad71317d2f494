//! Random network drops: AP/MS placement and link distances.

use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::rng::{substream, Purpose};
use crate::RMat;
use rand::Rng;

/// A point at fixed antenna height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn distance_to(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// One network drop: positions are immutable after construction and safe to
/// share across parallel workers.
#[derive(Debug, Clone)]
pub struct NetworkScenario {
    pub ap_positions: Vec<Position>,
    pub ms_positions: Vec<Position>,
    /// 3-D AP-to-MS distances, M x K.
    pub distances: RMat,
    /// AP-to-AP distances, M x M (used by the shadowing field).
    pub ap_pair_distances: RMat,
    /// MS-to-MS distances, K x K.
    pub ms_pair_distances: RMat,
}

impl NetworkScenario {
    pub fn ap_count(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn ms_count(&self) -> usize {
        self.ms_positions.len()
    }
}

/// Place M APs and K MSs i.i.d. uniformly on the square, at their configured
/// heights, and precompute all pairwise distances. Deterministic per seed;
/// positions are drawn sequentially so a scenario with K+1 users shares its
/// first K user positions with the K-user scenario of the same seed.
pub fn generate_scenario(config: &SimConfig, seed: u64) -> Result<NetworkScenario> {
    config.validate()?;
    let d = config.geometry.area_side_m;
    let m = config.network.ap_count;
    let k = config.network.ms_count;

    let mut ap_rng = substream(seed, Purpose::ApPlacement, 0, 0);
    let ap_positions: Vec<Position> = (0..m)
        .map(|_| Position {
            x: ap_rng.random::<f64>() * d,
            y: ap_rng.random::<f64>() * d,
            z: config.geometry.ap_height_m,
        })
        .collect();

    let mut ms_rng = substream(seed, Purpose::MsPlacement, 0, 0);
    let ms_positions: Vec<Position> = (0..k)
        .map(|_| Position {
            x: ms_rng.random::<f64>() * d,
            y: ms_rng.random::<f64>() * d,
            z: config.geometry.ms_height_m,
        })
        .collect();

    let distances = RMat::from_fn(m, k, |i, j| ap_positions[i].distance_to(&ms_positions[j]));
    let ap_pair_distances =
        RMat::from_fn(m, m, |i, j| ap_positions[i].distance_to(&ap_positions[j]));
    let ms_pair_distances =
        RMat::from_fn(k, k, |i, j| ms_positions[i].distance_to(&ms_positions[j]));

    Ok(NetworkScenario {
        ap_positions,
        ms_positions,
        distances,
        ap_pair_distances,
        ms_pair_distances,
    })
}

/// Validate a scenario against an externally constructed one (test hook for
/// hand-built toy layouts).
pub fn scenario_from_positions(
    ap_positions: Vec<Position>,
    ms_positions: Vec<Position>,
) -> Result<NetworkScenario> {
    if ap_positions.is_empty() || ms_positions.is_empty() {
        return Err(SimError::Config("need at least one AP and one MS".into()));
    }
    let m = ap_positions.len();
    let k = ms_positions.len();
    let distances = RMat::from_fn(m, k, |i, j| ap_positions[i].distance_to(&ms_positions[j]));
    let ap_pair_distances =
        RMat::from_fn(m, m, |i, j| ap_positions[i].distance_to(&ap_positions[j]));
    let ms_pair_distances =
        RMat::from_fn(k, k, |i, j| ms_positions[i].distance_to(&ms_positions[j]));
    Ok(NetworkScenario {
        ap_positions,
        ms_positions,
        distances,
        ap_pair_distances,
        ms_pair_distances,
    })
}
