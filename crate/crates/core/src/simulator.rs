//! Monte-Carlo scene generator: random poses observing random square plane
//! patches, noise along the patch normal, known associations.
//!
//! Randomness comes from ChaCha8 seeded with `SceneConfig::seed`
//! ([`RNG_ALGORITHM`]), so scenes are bit-identical across machines.

use nalgebra::{UnitQuaternion, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{exp_se3, Pose, Twist};
use crate::objective::FeatureObservation;
use crate::plane::PlaneParam;
use crate::solver::Feature;
use crate::stats::compute_stats;

pub const RNG_ALGORITHM: &str = "ChaCha8";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub num_poses: usize,
    pub num_planes: usize,
    pub points_per_plane_per_frame: usize,
    /// Standard deviation of the along-normal displacement (m).
    pub noise_sigma: f64,
    /// Half-extent of the cube pose positions are drawn from (m).
    pub pose_box: f64,
    /// Half-size of each square plane patch (m).
    pub plane_extent: f64,
    pub seed: u64,
    /// Minimum distance between any two plane patches; 0 disables the check.
    #[serde(default)]
    pub min_plane_gap: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            num_poses: 10,
            num_planes: 30,
            points_per_plane_per_frame: 50,
            noise_sigma: 0.0,
            pose_box: 2.0,
            plane_extent: 1.0,
            seed: 0,
            min_plane_gap: 0.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_poses == 0 || self.num_planes == 0 || self.points_per_plane_per_frame == 0 {
            return Err(Error::InvalidConfig("scene counts must be at least 1".into()));
        }
        if !(self.noise_sigma >= 0.0) || !(self.pose_box >= 0.0) || !(self.plane_extent > 0.0)
            || !(self.min_plane_gap >= 0.0)
        {
            return Err(Error::InvalidConfig(
                "noise_sigma and pose_box must be non-negative, plane_extent positive".into(),
            ));
        }
        Ok(())
    }
}

/// A contiguous run of points in one frame's cloud belonging to one plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub frame: usize,
    pub start: usize,
    pub end: usize,
    pub plane: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub gt_poses: Vec<Pose>,
    pub planes: Vec<PlaneParam>,
    /// Per frame, points in that frame's local coordinates.
    pub clouds: Vec<Vec<Vector3<f64>>>,
    pub associations: Vec<Association>,
}

impl Scene {
    /// One feature per plane, one observation per frame, built from the
    /// known associations.
    pub fn features(&self) -> Result<Vec<Feature>> {
        let mut features: Vec<Feature> = vec![Vec::new(); self.planes.len()];
        for a in &self.associations {
            let stats = compute_stats(&self.clouds[a.frame][a.start..a.end])?;
            features[a.plane].push(FeatureObservation::new(a.frame, stats)?);
        }
        Ok(features)
    }

    /// Points of `frame` belonging to `plane`.
    pub fn points_of(&self, frame: usize, plane: usize) -> &[Vector3<f64>] {
        self.associations
            .iter()
            .find(|a| a.frame == frame && a.plane == plane)
            .map(|a| &self.clouds[a.frame][a.start..a.end])
            .unwrap_or(&[])
    }

    /// All points in world coordinates under `poses`.
    pub fn world_points(&self, poses: &[Pose]) -> Vec<Vector3<f64>> {
        self.clouds
            .iter()
            .zip(poses)
            .flat_map(|(c, p)| c.iter().map(move |x| p.transform_point(x)))
            .collect()
    }
}

fn uniform_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    let q = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q))
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = n.cross(&helper).normalize();
    (u, n.cross(&u))
}

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
const GAP_GRID: usize = 11;

/// Conservative lower bound on the distance between two square patches,
/// from the closest pair of grid samples minus the sampling slack.
fn patch_gap_lower_bound(a: &PlaneParam, b: &PlaneParam, extent: f64) -> f64 {
    let samples = |p: &PlaneParam| {
        let (u, v) = tangent_basis(&p.normal);
        let step = 2.0 * extent / (GAP_GRID - 1) as f64;
        (0..GAP_GRID * GAP_GRID)
            .map(|i| {
                let s = -extent + step * (i / GAP_GRID) as f64;
                let t = -extent + step * (i % GAP_GRID) as f64;
                p.anchor + u * s + v * t
            })
            .collect::<Vec<_>>()
    };
    let (sa, sb) = (samples(a), samples(b));
    let closest = sa
        .iter()
        .flat_map(|x| sb.iter().map(move |y| (x - y).norm()))
        .fold(f64::INFINITY, f64::min);
    // every patch point lies within half a grid diagonal of a sample
    let slack = 2.0 * extent / (GAP_GRID - 1) as f64 * std::f64::consts::SQRT_2;
    closest - slack
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let b = cfg.pose_box;
    let uniform = |rng: &mut ChaCha8Rng, h: f64| {
        if h > 0.0 {
            rng.random_range(-h..h)
        } else {
            0.0
        }
    };

    let gt_poses: Vec<Pose> = (0..cfg.num_poses)
        .map(|_| {
            let r = uniform_rotation(&mut rng).to_rotation_matrix().into_inner();
            let t = Vector3::from_fn(|_, _| uniform(&mut rng, b));
            Pose::new(r, t)
        })
        .collect();

    let mut planes: Vec<PlaneParam> = Vec::with_capacity(cfg.num_planes);
    while planes.len() < cfg.num_planes {
        let mut attempts = 0;
        let plane = loop {
            let n = unit_vector(&mut rng);
            let anchor = Vector3::from_fn(|_, _| uniform(&mut rng, 2.0 * b));
            let candidate = PlaneParam::new(n, anchor);
            if cfg.min_plane_gap <= 0.0
                || planes
                    .iter()
                    .all(|p| patch_gap_lower_bound(p, &candidate, cfg.plane_extent) >= cfg.min_plane_gap)
            {
                break candidate;
            }
            attempts += 1;
            if attempts >= MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::InvalidConfig(format!(
                    "could not place {} planes {} apart",
                    cfg.num_planes, cfg.min_plane_gap
                )));
            }
        };
        planes.push(plane);
    }

    let noise = Normal::new(0.0, cfg.noise_sigma)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let e = cfg.plane_extent;
    let mut clouds = Vec::with_capacity(cfg.num_poses);
    let mut associations = Vec::new();
    for (k, pose) in gt_poses.iter().enumerate() {
        let inv = pose.inverse();
        let mut cloud = Vec::with_capacity(cfg.num_planes * cfg.points_per_plane_per_frame);
        for (j, plane) in planes.iter().enumerate() {
            let (u, v) = tangent_basis(&plane.normal);
            let start = cloud.len();
            for _ in 0..cfg.points_per_plane_per_frame {
                let a = rng.random_range(-e..e);
                let c = rng.random_range(-e..e);
                let d = if cfg.noise_sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                let world = plane.anchor + u * a + v * c + plane.normal * d;
                cloud.push(inv.transform_point(&world));
            }
            associations.push(Association {
                frame: k,
                start,
                end: cloud.len(),
                plane: j,
            });
        }
        clouds.push(cloud);
    }

    Ok(Scene {
        gt_poses,
        planes,
        clouds,
        associations,
    })
}

/// Right-perturb every pose but the first by `exp(δξ)`, with the rotational
/// components of `δξ` drawn from N(0, rot_sigma²) and the translational ones
/// from N(0, trans_sigma²).
pub fn perturb_poses(poses: &[Pose], rot_sigma: f64, trans_sigma: f64, seed: u64) -> Vec<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    poses
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut d = [0.0; 6];
            for (i, x) in d.iter_mut().enumerate() {
                let s = if i < 3 { rot_sigma } else { trans_sigma };
                *x = s * rng.sample::<f64, _>(StandardNormal);
            }
            if k == 0 {
                *p
            } else {
                p.compose(&exp_se3(&Twist::from_slice(&d)))
            }
        })
        .collect()
}
