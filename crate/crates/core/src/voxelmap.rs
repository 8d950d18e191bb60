//! Voxel-hash association: every voxel is one candidate planar feature and a
//! frame's points inside it are that frame's observation of the feature.
//!
//! Points are binned once, by their world position under the initial poses,
//! and summarized in the frame's local coordinates. Later pose updates only
//! re-transform the summaries; voxels are never re-associated.

use std::collections::{BTreeMap, HashMap};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{sorted_eigendecomposition, Pose};
use crate::objective::FeatureObservation;
use crate::plane::{estimate_plane, PlaneParam};
use crate::solver::Feature;
use crate::stats::{aggregate, compute_stats, transform_stats, LocalStats, WorldStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelKey {
    pub ix: i64,
    pub iy: i64,
    pub iz: i64,
}

/// Half-open cells: `[i·r, (i+1)·r)` along each axis.
pub fn voxel_key(point: &Vector3<f64>, resolution: f64) -> VoxelKey {
    VoxelKey {
        ix: (point.x / resolution).floor() as i64,
        iy: (point.y / resolution).floor() as i64,
        iz: (point.z / resolution).floor() as i64,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VoxelCell {
    /// Frame id → summary of that frame's points in this voxel (local frame).
    pub per_frame: BTreeMap<usize, LocalStats>,
    pub active: bool,
    pub plane: Option<PlaneParam>,
}

impl VoxelCell {
    pub fn point_count(&self) -> u64 {
        self.per_frame.values().map(|s| s.count).sum()
    }

    fn world_parts(&self, poses: &[Pose]) -> Vec<WorldStats> {
        self.per_frame
            .iter()
            .map(|(&k, s)| transform_stats(s, &poses[k]))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoxelMap {
    pub resolution: f64,
    pub cells: HashMap<VoxelKey, VoxelCell>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterConfig {
    pub min_points: u64,
    pub planarity_ratio: f64,
    pub min_frames: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_points: 10,
            planarity_ratio: 0.1,
            min_frames: 2,
        }
    }
}

/// Bin every frame's points by world position under `poses`.
pub fn build_map(clouds: &[Vec<Vector3<f64>>], poses: &[Pose], resolution: f64) -> Result<VoxelMap> {
    if clouds.len() != poses.len() {
        return Err(Error::LengthMismatch {
            left: clouds.len(),
            right: poses.len(),
        });
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidConfig(format!("voxel resolution {resolution}")));
    }
    let mut cells: HashMap<VoxelKey, VoxelCell> = HashMap::new();
    for (k, (cloud, pose)) in clouds.iter().zip(poses).enumerate() {
        let mut groups: HashMap<VoxelKey, Vec<Vector3<f64>>> = HashMap::new();
        for p in cloud {
            groups
                .entry(voxel_key(&pose.transform_point(p), resolution))
                .or_default()
                .push(*p);
        }
        for (key, pts) in groups {
            let stats = compute_stats(&pts)?;
            cells.entry(key).or_default().per_frame.insert(k, stats);
        }
    }
    Ok(VoxelMap { resolution, cells })
}

/// Whether one frame's summary is a usable planar observation.
pub fn is_inlier(stats: &LocalStats, min_points: u64, planarity_ratio: f64) -> bool {
    if stats.count < min_points {
        return false;
    }
    match sorted_eigendecomposition(&stats.cov) {
        Ok(e) => e.lambda3() <= planarity_ratio * e.lambda2(),
        Err(_) => false,
    }
}

/// Drop non-inlier observations and mark cells with at least `min_frames`
/// remaining observations as active.
pub fn filter_active(mut map: VoxelMap, cfg: &FilterConfig) -> VoxelMap {
    for cell in map.cells.values_mut() {
        cell.per_frame
            .retain(|_, s| is_inlier(s, cfg.min_points, cfg.planarity_ratio));
        cell.active = cell.per_frame.len() >= cfg.min_frames.max(1);
        if !cell.active {
            cell.plane = None;
        }
    }
    map
}

impl VoxelMap {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn point_count(&self) -> u64 {
        self.cells.values().map(VoxelCell::point_count).sum()
    }

    /// Keys of active cells in ascending order.
    pub fn active_keys(&self) -> Vec<VoxelKey> {
        let mut keys: Vec<_> = self
            .cells
            .iter()
            .filter(|(_, c)| c.active)
            .map(|(k, _)| *k)
            .collect();
        keys.sort_unstable();
        keys
    }

    /// One feature per active cell, ordered by key.
    pub fn features(&self) -> Result<Vec<Feature>> {
        self.active_keys()
            .iter()
            .map(|k| {
                self.cells[k]
                    .per_frame
                    .iter()
                    .map(|(&frame, s)| FeatureObservation::new(frame, *s))
                    .collect()
            })
            .collect()
    }

    /// Re-fit the plane of every active cell under `poses`; cells whose fit
    /// is degenerate get `None`.
    pub fn update_planes(&mut self, poses: &[Pose]) {
        for cell in self.cells.values_mut().filter(|c| c.active) {
            cell.plane = aggregate(&cell.world_parts(poses))
                .ok()
                .and_then(|a| estimate_plane(&a).ok());
        }
    }
}
