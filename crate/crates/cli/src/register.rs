use std::path::{Path, PathBuf};

use mvreg::io::{list_ply, read_ply, read_trajectory, write_trajectory, SCHEMA_VERSION};
use mvreg::pipeline::{register_detailed, PipelineConfig};
use mvreg::SolveReport;
use serde::Serialize;

use crate::{write_json, CmdResult, Failure};

#[derive(clap::Args)]
pub struct Args {
    /// Pipeline configuration (JSON object; unknown keys are rejected).
    #[arg(long)]
    config: PathBuf,
    /// Directory of .ply files (sorted by name) or a comma-separated list of .ply files.
    #[arg(long)]
    clouds: String,
    /// Initial trajectory, one pose per cloud.
    #[arg(long)]
    init: PathBuf,
    /// Output trajectory.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON report with the solver summary and cost trace.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    #[serde(flatten)]
    solve: &'a SolveReport,
    frames: usize,
    active_voxels: usize,
    config: &'a PipelineConfig,
}

/// Resolve `--clouds` into an ordered list of files.
pub fn cloud_paths(spec: &str) -> Result<Vec<PathBuf>, Failure> {
    let path = Path::new(spec);
    if path.is_dir() {
        let files = list_ply(path)?;
        if files.is_empty() {
            return Err(Failure::input(format!("{spec}: no .ply files")));
        }
        return Ok(files);
    }
    Ok(spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
        .collect())
}

pub fn run(args: Args) -> CmdResult {
    let cfg = PipelineConfig::load(&args.config)?;
    let clouds = cloud_paths(&args.clouds)?
        .iter()
        .map(|p| read_ply(p))
        .collect::<Result<Vec<_>, _>>()?;
    let init = read_trajectory(&args.init)?;
    if init.len() != clouds.len() {
        return Err(Failure::input(format!(
            "{}: {} poses for {} clouds",
            args.init.display(),
            init.len(),
            clouds.len()
        )));
    }
    let reg = register_detailed(&clouds, &init, &cfg)?;
    write_trajectory(&args.out, &reg.poses)?;
    if let Some(path) = &args.report {
        write_json(
            path,
            &Report {
                schema_version: SCHEMA_VERSION,
                solve: &reg.report,
                frames: clouds.len(),
                active_voxels: reg.map.active_keys().len(),
                config: &cfg,
            },
        )?;
    }
    let r = &reg.report;
    if !r.converged {
        eprintln!("warning: stopped after {} iterations without converging", r.iterations);
    }
    println!(
        "{} iterations, cost {:.6e} -> {:.6e} ({:?})",
        r.iterations, r.initial_cost, r.final_cost, r.termination
    );
    Ok(())
}
