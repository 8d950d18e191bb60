use std::path::PathBuf;

use mvreg::io::{write_scene, Perturbation};
use mvreg::simulator::{generate_scene, perturb_poses, SceneConfig};

use crate::{CmdResult, Failure};

#[derive(clap::Args)]
pub struct Args {
    /// Number of frames (at least 2).
    #[arg(long)]
    poses: usize,
    /// Number of plane patches.
    #[arg(long)]
    planes: usize,
    /// Standard deviation of point noise along the plane normal (m).
    #[arg(long)]
    sigma: f64,
    /// Seed for the scene; the initial-pose perturbation uses seed + 1.
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Points sampled per plane per frame.
    #[arg(long, default_value_t = 50)]
    points_per_plane: usize,
    /// Half-extent of the cube frame positions are drawn from (m).
    #[arg(long, default_value_t = 2.0)]
    pose_box: f64,
    /// Half-size of each square plane patch (m).
    #[arg(long, default_value_t = 1.0)]
    plane_extent: f64,
    /// Minimum distance between plane patches (m); 0 allows overlap.
    #[arg(long, default_value_t = 0.0)]
    min_plane_gap: f64,
    /// Standard deviation of the initial rotation perturbation (rad).
    #[arg(long, default_value_t = 0.01)]
    rot_sigma: f64,
    /// Standard deviation of the initial translation perturbation (m).
    #[arg(long, default_value_t = 0.05)]
    trans_sigma: f64,
}

pub fn run(a: Args) -> CmdResult {
    if a.poses < 2 {
        return Err(Failure::input("--poses must be at least 2"));
    }
    if !(a.rot_sigma >= 0.0 && a.trans_sigma >= 0.0) {
        return Err(Failure::input("perturbation sigmas must be non-negative"));
    }
    let cfg = SceneConfig {
        num_poses: a.poses,
        num_planes: a.planes,
        points_per_plane_per_frame: a.points_per_plane,
        noise_sigma: a.sigma,
        pose_box: a.pose_box,
        plane_extent: a.plane_extent,
        seed: a.seed,
        min_plane_gap: a.min_plane_gap,
    };
    let scene = generate_scene(&cfg)?;
    let perturbation = Perturbation {
        rot_sigma: a.rot_sigma,
        trans_sigma: a.trans_sigma,
        seed: a.seed.wrapping_add(1),
    };
    let init = perturb_poses(&scene.gt_poses, a.rot_sigma, a.trans_sigma, perturbation.seed);
    write_scene(&a.out, &scene, &cfg, &init, perturbation)?;
    println!("wrote {} frames to {}", a.poses, a.out.display());
    Ok(())
}
