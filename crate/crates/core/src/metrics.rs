//! Trajectory and map accuracy measures.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::Pose;

#[derive(Clone, Debug, PartialEq)]
pub struct RpeResult {
    /// Per adjacent pair `(k, k+1)`: translation error and rotation angle (rad).
    pub translation: Vec<f64>,
    pub rotation: Vec<f64>,
}

impl RpeResult {
    pub fn mean_translation(&self) -> f64 {
        mean(&self.translation)
    }
    pub fn rmse_translation(&self) -> f64 {
        rms(&self.translation)
    }
    pub fn mean_rotation(&self) -> f64 {
        mean(&self.rotation)
    }
    pub fn rmse_rotation(&self) -> f64 {
        rms(&self.rotation)
    }
}

/// Relative pose error over adjacent pairs.
pub fn rpe(estimate: &[Pose], reference: &[Pose]) -> Result<RpeResult> {
    check_lengths(estimate, reference)?;
    let mut translation = Vec::new();
    let mut rotation = Vec::new();
    for k in 0..estimate.len().saturating_sub(1) {
        let rel_est = estimate[k].inverse() * estimate[k + 1];
        let rel_ref = reference[k].inverse() * reference[k + 1];
        let err = rel_ref.inverse() * rel_est;
        translation.push(err.translation.norm());
        rotation.push(err.rotation_angle());
    }
    Ok(RpeResult { translation, rotation })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ApeAlignment {
    /// Shift the estimate so both trajectories share a position centroid.
    #[default]
    Translation,
    /// Best rigid alignment of positions (Umeyama, no scale).
    Rigid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApeResult {
    /// Per frame: distance between aligned estimated and reference position.
    pub errors: Vec<f64>,
}

impl ApeResult {
    pub fn mean(&self) -> f64 {
        mean(&self.errors)
    }
    pub fn rmse(&self) -> f64 {
        rms(&self.errors)
    }
}

/// Absolute position error after aligning the estimate to the reference.
pub fn ape(estimate: &[Pose], reference: &[Pose], alignment: ApeAlignment) -> Result<ApeResult> {
    check_lengths(estimate, reference)?;
    let est: Vec<_> = estimate.iter().map(|p| p.translation).collect();
    let gt: Vec<_> = reference.iter().map(|p| p.translation).collect();
    let ce = centroid(&est);
    let cg = centroid(&gt);
    let rot = match alignment {
        ApeAlignment::Translation => Matrix3::identity(),
        ApeAlignment::Rigid => umeyama_rotation(&est, &gt, &ce, &cg),
    };
    let errors = est
        .iter()
        .zip(&gt)
        .map(|(e, g)| (rot * (e - ce) + cg - g).norm())
        .collect();
    Ok(ApeResult { errors })
}

fn umeyama_rotation(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
    cs: &Vector3<f64>,
    cd: &Vector3<f64>,
) -> Matrix3<f64> {
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (d - cd) * (s - cs).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut s = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        s[(2, 2)] = -1.0;
    }
    u * s * v_t
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuralError {
    /// Per reconstructed point: distance to its nearest ground-truth point.
    pub distances: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
}

/// Nearest-neighbour distance from every reconstructed point to the
/// ground-truth model.
pub fn structural_error(reconstructed: &[Vector3<f64>], model: &[Vector3<f64>]) -> Result<StructuralError> {
    if reconstructed.is_empty() || model.is_empty() {
        return Err(Error::EmptyInput);
    }
    let index = GridIndex::new(model);
    let distances: Vec<f64> = reconstructed.iter().map(|q| index.nearest_distance(q)).collect();
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    Ok(StructuralError {
        mean: mean(&distances),
        median,
        p95: sorted[rank - 1],
        distances,
    })
}

/// Nearest-neighbour distance by exhaustive scan.
pub fn nearest_distance_linear(q: &Vector3<f64>, model: &[Vector3<f64>]) -> f64 {
    model.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min)
}

/// Uniform grid over the model points for exact nearest-neighbour queries.
struct GridIndex<'a> {
    points: &'a [Vector3<f64>],
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
    lo: [i64; 3],
    hi: [i64; 3],
}

impl<'a> GridIndex<'a> {
    fn new(points: &'a [Vector3<f64>]) -> Self {
        let (mut min, mut max) = (points[0], points[0]);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        let extent = (max - min).max();
        let cell = extent / (points.len() as f64).cbrt();
        let cell = if cell.is_finite() && cell > 0.0 { cell } else { 1.0 };
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let (mut lo, mut hi) = ([i64::MAX; 3], [i64::MIN; 3]);
        for (i, p) in points.iter().enumerate() {
            let c = Self::cell_of(p, cell);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
            buckets.entry(c).or_default().push(i);
        }
        GridIndex { points, cell, buckets, lo, hi }
    }

    fn cell_of(p: &Vector3<f64>, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    fn nearest_distance(&self, q: &Vector3<f64>) -> f64 {
        let c = Self::cell_of(q, self.cell);
        // shells beyond this radius cannot contain any model point
        let max_shell = (0..3)
            .map(|a| c[a].abs_diff(self.lo[a]).max(self.hi[a].abs_diff(c[a])))
            .max()
            .unwrap_or(0);
        let mut best = f64::INFINITY;
        for s in 0..=max_shell.min(i64::MAX as u64 / 4) as i64 {
            // once the search box outgrows the point count a scan is cheaper
            if (2 * s + 1).saturating_pow(3) as usize > 8 * self.points.len() {
                return nearest_distance_linear(q, self.points);
            }
            self.visit_shell(c, s, |i| best = best.min((self.points[i] - q).norm()));
            // every unvisited point lies at least s cells away along some axis
            if best <= s as f64 * self.cell {
                break;
            }
        }
        best
    }

    fn visit_shell(&self, c: [i64; 3], s: i64, mut f: impl FnMut(usize)) {
        for dx in -s..=s {
            for dy in -s..=s {
                for dz in -s..=s {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != s {
                        continue;
                    }
                    if let Some(b) = self.buckets.get(&[c[0].wrapping_add(dx), c[1].wrapping_add(dy), c[2].wrapping_add(dz)]) {
                        b.iter().for_each(|&i| f(i));
                    }
                }
            }
        }
    }
}

/// Per-frame error table: `frame,ape_trans,rpe_trans,rpe_rot`. The RPE
/// columns of frame `k` describe the pair `(k-1, k)`; frame 0 reports zero.
pub fn write_trajectory_csv(path: &Path, ape: &ApeResult, rpe: &RpeResult) -> Result<()> {
    let mut out = String::from("frame,ape_trans,rpe_trans,rpe_rot\n");
    for (k, e) in ape.errors.iter().enumerate() {
        let (t, r) = match k {
            0 => (0.0, 0.0),
            _ => (rpe.translation[k - 1], rpe.rotation[k - 1]),
        };
        out.push_str(&format!("{k},{e},{t},{r}\n"));
    }
    write_text(path, &out)
}

/// Per-point table: `point,distance`.
pub fn write_structural_csv(path: &Path, err: &StructuralError) -> Result<()> {
    let mut out = String::from("point,distance\n");
    for (i, d) in err.distances.iter().enumerate() {
        out.push_str(&format!("{i},{d}\n"));
    }
    write_text(path, &out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

fn check_lengths(a: &[Pose], b: &[Pose]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn centroid(v: &[Vector3<f64>]) -> Vector3<f64> {
    v.iter().sum::<Vector3<f64>>() / v.len() as f64
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}
