use std::path::PathBuf;

use clap::ValueEnum;
use mvreg::io::{read_ply, read_trajectory};
use mvreg::metrics::{ape, rpe, structural_error, write_structural_csv, write_trajectory_csv, ApeAlignment};

use crate::{CmdResult, Failure};

#[derive(Clone, Copy, ValueEnum)]
enum Align {
    /// Match position centroids only.
    Translation,
    /// Best rigid fit of positions.
    Rigid,
}

#[derive(clap::Args)]
pub struct Args {
    /// Estimated trajectory.
    #[arg(long)]
    est: PathBuf,
    /// Reference trajectory.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Reconstructed cloud for the structural error (needs --model).
    #[arg(long, requires = "model")]
    cloud: Option<PathBuf>,
    /// Ground-truth model cloud (needs --cloud).
    #[arg(long, requires = "cloud")]
    model: Option<PathBuf>,
    /// Per-frame CSV: frame,ape_trans,rpe_trans,rpe_rot.
    #[arg(long)]
    out: PathBuf,
    /// Per-point structural CSV; defaults to the --out path with a _structural suffix.
    #[arg(long)]
    structural_out: Option<PathBuf>,
    /// Trajectory alignment used for APE.
    #[arg(long, value_enum, default_value_t = Align::Translation)]
    align: Align,
}

pub fn run(a: Args) -> CmdResult {
    let est = read_trajectory(&a.est)?;
    let reference = read_trajectory(&a.reference)?;
    if est.len() != reference.len() {
        return Err(Failure::input(format!(
            "trajectory lengths differ: {} has {}, {} has {}",
            a.est.display(),
            est.len(),
            a.reference.display(),
            reference.len()
        )));
    }
    let alignment = match a.align {
        Align::Translation => ApeAlignment::Translation,
        Align::Rigid => ApeAlignment::Rigid,
    };
    let r = rpe(&est, &reference)?;
    let e = ape(&est, &reference, alignment)?;
    write_trajectory_csv(&a.out, &e, &r)?;
    let mut summary = format!(
        "rpe_trans_mean={:e} rpe_trans_rmse={:e} rpe_rot_mean={:e} rpe_rot_rmse={:e} ape_mean={:e} ape_rmse={:e}",
        r.mean_translation(),
        r.rmse_translation(),
        r.mean_rotation(),
        r.rmse_rotation(),
        e.mean(),
        e.rmse()
    );
    if let (Some(cloud), Some(model)) = (&a.cloud, &a.model) {
        let s = structural_error(&read_ply(cloud)?, &read_ply(model)?)?;
        let path = a.structural_out.clone().unwrap_or_else(|| {
            let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            a.out.with_file_name(format!("{stem}_structural.csv"))
        });
        write_structural_csv(&path, &s)?;
        summary.push_str(&format!(
            " structural_mean={:e} structural_median={:e} structural_p95={:e}",
            s.mean, s.median, s.p95
        ));
    }
    println!("{summary}");
    Ok(())
}
