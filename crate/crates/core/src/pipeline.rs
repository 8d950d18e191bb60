//! End-to-end registration: bin scans into voxels, keep planar voxels seen
//! by several frames, then jointly refine the poses.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::solver::{solve, Problem, SolveReport, SolverConfig};
use crate::voxelmap::{build_map, filter_active, voxel_key, FilterConfig, VoxelKey, VoxelMap};

/// Registration settings, read from a flat JSON object. Missing keys take
/// their defaults; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub voxel_resolution: f64,
    pub min_points: u64,
    pub planarity_ratio: f64,
    pub min_frames: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub step_tol: f64,
    /// Optional voxel-grid downsampling applied to every cloud first.
    pub downsample_resolution: Option<f64>,
    pub fix_frame: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        let f = FilterConfig::default();
        PipelineConfig {
            voxel_resolution: 1.0,
            min_points: f.min_points,
            planarity_ratio: f.planarity_ratio,
            min_frames: f.min_frames,
            max_iters: s.max_iters,
            rel_tol: s.rel_tol,
            step_tol: s.step_tol,
            downsample_resolution: None,
            fix_frame: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::parse(path, m),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.voxel_resolution > 0.0) {
            return bad("voxel_resolution must be positive");
        }
        if self.min_points == 0 || self.min_frames == 0 {
            return bad("min_points and min_frames must be positive");
        }
        if !(self.planarity_ratio > 0.0) {
            return bad("planarity_ratio must be positive");
        }
        if let Some(r) = self.downsample_resolution {
            if !(r > 0.0) {
                return bad("downsample_resolution must be positive or null");
            }
        }
        self.solver().validate()
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            step_tol: self.step_tol,
            ..SolverConfig::default()
        }
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            min_points: self.min_points,
            planarity_ratio: self.planarity_ratio,
            min_frames: self.min_frames,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Registration {
    pub poses: Vec<Pose>,
    pub report: SolveReport,
    /// Filtered map with planes fit at the optimized poses.
    pub map: VoxelMap,
}

pub fn register(
    clouds: &[Vec<Vector3<f64>>],
    initial_poses: &[Pose],
    cfg: &PipelineConfig,
) -> Result<(Vec<Pose>, SolveReport)> {
    register_detailed(clouds, initial_poses, cfg).map(|r| (r.poses, r.report))
}

pub fn register_detailed(
    clouds: &[Vec<Vector3<f64>>],
    initial_poses: &[Pose],
    cfg: &PipelineConfig,
) -> Result<Registration> {
    cfg.validate()?;
    if clouds.len() != initial_poses.len() {
        return Err(Error::LengthMismatch {
            left: clouds.len(),
            right: initial_poses.len(),
        });
    }
    if clouds.len() < 2 {
        return Err(Error::InvalidProblem("need at least two clouds".into()));
    }
    if cfg.fix_frame >= clouds.len() {
        return Err(Error::InvalidConfig(format!(
            "fix_frame {} out of range for {} clouds",
            cfg.fix_frame,
            clouds.len()
        )));
    }

    let downsampled: Vec<Vec<Vector3<f64>>>;
    let clouds = match cfg.downsample_resolution {
        Some(r) => {
            downsampled = clouds.iter().map(|c| downsample(c, r)).collect();
            &downsampled
        }
        None => clouds,
    };

    let map = build_map(clouds, initial_poses, cfg.voxel_resolution)?;
    let mut map = filter_active(map, &cfg.filter());
    if map.active_keys().is_empty() {
        return Err(Error::NoActiveVoxels);
    }
    let problem = Problem {
        poses: initial_poses.to_vec(),
        features: map.features()?,
        fixed_frames: BTreeSet::from([cfg.fix_frame]),
    };
    let (poses, report) = solve(&problem, &cfg.solver())?;
    map.update_planes(&poses);
    Ok(Registration { poses, report, map })
}

/// Voxel-grid downsampling: one centroid per occupied voxel, in order of
/// each voxel's first point.
pub fn downsample(cloud: &[Vector3<f64>], resolution: f64) -> Vec<Vector3<f64>> {
    let mut index: HashMap<VoxelKey, usize> = HashMap::new();
    let mut sums: Vec<(Vector3<f64>, usize)> = Vec::new();
    for p in cloud {
        let slot = *index.entry(voxel_key(p, resolution)).or_insert_with(|| {
            sums.push((Vector3::zeros(), 0));
            sums.len() - 1
        });
        sums[slot].0 += p;
        sums[slot].1 += 1;
    }
    sums.into_iter().map(|(s, n)| s / n as f64).collect()
}
