use std::path::PathBuf;
use std::time::Instant;

use mvreg::metrics::{ape, rpe, ApeAlignment};
use mvreg::simulator::{generate_scene, perturb_poses, SceneConfig};
use mvreg::solver::{linearize_raw_ef_lm, RawObservation};
use mvreg::{solve, ObjectiveKind, Problem, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{CmdResult, Failure};

/// Overrides `--jobs` when set.
const THREADS_ENV: &str = "MVREG_THREADS";

#[derive(clap::Args)]
pub struct Args {
    /// Grid description (JSON); see the README for its keys.
    #[arg(long)]
    grid: PathBuf,
    /// Output CSV, one row per (grid point, seed, objective).
    #[arg(long)]
    out: PathBuf,
    /// Number of seeds per grid point (seeds 0..N).
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Worker threads; the MVREG_THREADS environment variable takes precedence.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Grid {
    poses: Vec<usize>,
    planes: Vec<usize>,
    sigma: Vec<f64>,
    points_per_plane: Vec<usize>,
    objectives: Vec<ObjectiveKind>,
    rot_sigma: f64,
    trans_sigma: f64,
    pose_box: f64,
    plane_extent: f64,
    max_iters: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            poses: vec![10],
            planes: vec![30],
            sigma: vec![0.0],
            points_per_plane: vec![50],
            objectives: vec![ObjectiveKind::Proposed, ObjectiveKind::EfLm],
            rot_sigma: 5f64.to_radians(),
            trans_sigma: 0.1,
            pose_box: 2.0,
            plane_extent: 1.0,
            max_iters: 100,
        }
    }
}

#[derive(Clone, Copy)]
struct Point {
    poses: usize,
    planes: usize,
    sigma: f64,
    points_per_plane: usize,
    seed: u64,
}

#[derive(Serialize)]
struct Row {
    poses: usize,
    planes: usize,
    points_per_plane: usize,
    sigma: f64,
    seed: u64,
    objective: &'static str,
    rpe_trans: f64,
    rpe_rot: f64,
    ape_rmse: f64,
    iterations: usize,
    converged: bool,
    wall_time: f64,
    time_per_iteration: f64,
    /// One raw-point EF(LM) linearization on the same scene, for comparison.
    raw_ef_lm_time: f64,
}

fn run_point(grid: &Grid, p: Point) -> Result<Vec<Row>, mvreg::Error> {
    let scene = generate_scene(&SceneConfig {
        num_poses: p.poses,
        num_planes: p.planes,
        points_per_plane_per_frame: p.points_per_plane,
        noise_sigma: p.sigma,
        pose_box: grid.pose_box,
        plane_extent: grid.plane_extent,
        seed: p.seed,
        min_plane_gap: 0.0,
    })?;
    let init = perturb_poses(&scene.gt_poses, grid.rot_sigma, grid.trans_sigma, p.seed.wrapping_add(1));
    let problem = Problem::new(init.clone(), scene.features()?)?;

    let mut raw: Vec<Vec<RawObservation>> = vec![Vec::new(); scene.planes.len()];
    for a in &scene.associations {
        raw[a.plane].push(RawObservation {
            frame_id: a.frame,
            points: scene.clouds[a.frame][a.start..a.end].to_vec(),
        });
    }
    let start = Instant::now();
    linearize_raw_ef_lm(&raw, &init)?;
    let raw_ef_lm_time = start.elapsed().as_secs_f64();

    grid.objectives
        .iter()
        .map(|&objective| {
            let cfg = SolverConfig {
                max_iters: grid.max_iters,
                ..SolverConfig::default()
            }
            .with_objective(objective);
            let (est, report) = solve(&problem, &cfg)?;
            let r = rpe(&est, &scene.gt_poses)?;
            Ok(Row {
                poses: p.poses,
                planes: p.planes,
                points_per_plane: p.points_per_plane,
                sigma: p.sigma,
                seed: p.seed,
                objective: objective.name(),
                rpe_trans: r.mean_translation(),
                rpe_rot: r.mean_rotation(),
                ape_rmse: ape(&est, &scene.gt_poses, ApeAlignment::Translation)?.rmse(),
                iterations: report.iterations,
                converged: report.converged,
                wall_time: report.wall_time,
                time_per_iteration: report.wall_time / report.iterations.max(1) as f64,
                raw_ef_lm_time,
            })
        })
        .collect()
}

fn threads(jobs: usize) -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::input(format!("{THREADS_ENV}={v} is not a positive integer"))),
        Err(_) if jobs > 0 => Ok(jobs),
        Err(_) => Err(Failure::input("--jobs must be positive")),
    }
}

pub fn run(a: Args) -> CmdResult {
    let text = std::fs::read_to_string(&a.grid).map_err(|e| Failure::io(&a.grid, e))?;
    let grid: Grid = serde_json::from_str(&text).map_err(|e| Failure::io(&a.grid, e))?;
    if grid.objectives.is_empty() || a.seeds == 0 {
        return Err(Failure::input("grid needs at least one objective and one seed"));
    }
    let mut points = Vec::new();
    for &poses in &grid.poses {
        for &planes in &grid.planes {
            for &points_per_plane in &grid.points_per_plane {
                for &sigma in &grid.sigma {
                    for seed in 0..a.seeds {
                        points.push(Point {
                            poses,
                            planes,
                            sigma,
                            points_per_plane,
                            seed,
                        });
                    }
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Failure::input(format!("{}: grid has an empty axis", a.grid.display())));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads(a.jobs)?)
        .build()
        .map_err(|e| Failure::input(e.to_string()))?;
    let results: Vec<Result<Vec<Row>, mvreg::Error>> =
        pool.install(|| points.par_iter().map(|&p| run_point(&grid, p)).collect());

    let mut writer = csv::Writer::from_path(&a.out).map_err(|e| Failure::io(&a.out, e))?;
    let mut count = 0;
    for rows in results {
        for row in rows? {
            writer.serialize(&row).map_err(|e| Failure::io(&a.out, e))?;
            count += 1;
        }
    }
    writer.flush().map_err(|e| Failure::io(&a.out, e))?;
    println!("wrote {count} rows to {}", a.out.display());
    Ok(())
}
