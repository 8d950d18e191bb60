//! Levenberg-Marquardt over the frame poses.
//!
//! Each outer iteration follows the same order: re-fit every feature plane
//! from the merged per-frame summaries, linearize all residuals with the
//! planes held constant, then take a damped step. With the planes constant
//! every residual touches exactly one pose, so the normal equations are
//! block diagonal and are assembled and solved as one 6×6 block per frame.
//!
//! The cost that decides whether a step is accepted is always evaluated with
//! planes re-fit at the candidate poses, so the reported cost trace is the
//! cost of a well-defined function of the poses alone and never increases.
//!
//! Gauge: the lowest-indexed fixed frame anchors the trajectory. All frames
//! except the remaining fixed ones take a step, then the whole trajectory is
//! moved rigidly so the anchor sits exactly at its initial pose. The cost is
//! invariant under that motion.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{Matrix4, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Twist};
use crate::objective::{
    ef_lm_raw_residual, ef_lm_residual, pivoted_cholesky, proposed_residual, FeatureObservation, ResidualBlock,
};
use crate::plane::{estimate_plane, PlaneParam};
use crate::stats::{aggregate, compute_stats, transform_stats, WorldStats};

/// Damping beyond which the solver gives up.
const MAX_DAMPING: f64 = 1e8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Eigenvalue-weighted planar residuals from per-frame summaries.
    #[default]
    Proposed,
    /// Homogeneous-scatter Cholesky residuals.
    EfLm,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Proposed => "proposed",
            ObjectiveKind::EfLm => "ef_lm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub step_tol: f64,
    pub damping_init: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    #[serde(default)]
    pub objective: ObjectiveKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 100,
            rel_tol: 1e-8,
            step_tol: 1e-10,
            damping_init: 1e-4,
            damping_up: 4.0,
            damping_down: 0.5,
            objective: ObjectiveKind::Proposed,
        }
    }
}

impl SolverConfig {
    /// Same as the default but stopping after `iters` iterations.
    pub fn capped(iters: usize) -> Self {
        SolverConfig {
            max_iters: iters,
            ..Default::default()
        }
    }

    pub fn with_objective(mut self, objective: ObjectiveKind) -> Self {
        self.objective = objective;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.rel_tol >= 0.0
            && self.step_tol >= 0.0
            && self.damping_init > 0.0
            && self.damping_up > 1.0
            && self.damping_down > 0.0
            && self.damping_down < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Observations of one planar feature, at most one per frame.
pub type Feature = Vec<FeatureObservation>;

#[derive(Clone, Debug)]
pub struct Problem {
    pub poses: Vec<Pose>,
    pub features: Vec<Feature>,
    pub fixed_frames: BTreeSet<usize>,
}

impl Problem {
    /// Problem with frame 0 fixed.
    pub fn new(poses: Vec<Pose>, features: Vec<Feature>) -> Result<Self> {
        let p = Problem {
            poses,
            features,
            fixed_frames: BTreeSet::from([0]),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_fixed(mut self, fixed: impl IntoIterator<Item = usize>) -> Result<Self> {
        self.fixed_frames = fixed.into_iter().collect();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.poses.len();
        if n == 0 {
            return Err(Error::InvalidProblem("no poses".into()));
        }
        if self.fixed_frames.is_empty() {
            return Err(Error::InvalidProblem("no fixed frame".into()));
        }
        if let Some(&f) = self.fixed_frames.iter().find(|&&f| f >= n) {
            return Err(Error::InvalidProblem(format!("fixed frame {f} out of range")));
        }
        if self.features.is_empty() {
            return Err(Error::InvalidProblem("no features".into()));
        }
        for (i, feat) in self.features.iter().enumerate() {
            if feat.is_empty() {
                return Err(Error::InvalidProblem(format!("feature {i} has no observations")));
            }
            if let Some(o) = feat.iter().find(|o| o.frame_id >= n) {
                return Err(Error::InvalidProblem(format!(
                    "feature {i} observed by unknown frame {}",
                    o.frame_id
                )));
            }
        }
        Ok(())
    }

    /// Total number of summarized points over all observations.
    pub fn point_count(&self) -> u64 {
        self.features
            .iter()
            .flat_map(|f| f.iter().map(|o| o.stats.count))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    RelativeDecrease,
    SmallStep,
    ZeroCost,
    /// Damping exceeded its ceiling without finding a decrease.
    NoDecrease,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective: ObjectiveKind,
    pub iterations: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub converged: bool,
    pub termination: Termination,
    /// Cost at the start and after every accepted step.
    pub cost_trace: Vec<f64>,
    pub wall_time: f64,
}

/// Re-fit every feature's plane under `poses`.
pub fn update_planes(features: &[Feature], poses: &[Pose]) -> Result<Vec<PlaneParam>> {
    features
        .iter()
        .map(|feat| {
            let parts: Vec<WorldStats> = feat
                .iter()
                .map(|o| transform_stats(&o.stats, &poses[o.frame_id]))
                .collect();
            estimate_plane(&aggregate(&parts)?)
        })
        .collect()
}

/// Per-observation precomputation for the chosen objective.
enum Model {
    Proposed,
    /// One Cholesky factor of the homogeneous scatter per observation,
    /// indexed like `features`.
    EfLm(Vec<Vec<Matrix4<f64>>>),
}

impl Model {
    fn new(kind: ObjectiveKind, features: &[Feature]) -> Result<Self> {
        Ok(match kind {
            ObjectiveKind::Proposed => Model::Proposed,
            ObjectiveKind::EfLm => Model::EfLm(
                features
                    .iter()
                    .map(|f| {
                        f.iter()
                            .map(|o| pivoted_cholesky(&o.homogeneous_scatter()).map(|c| c.l))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?,
            ),
        })
    }

    /// Visit every residual block.
    fn for_each_block(
        &self,
        features: &[Feature],
        poses: &[Pose],
        planes: &[PlaneParam],
        mut visit: impl FnMut(usize, &[f64], &[f64]),
    ) {
        fn emit<const M: usize>(
            b: &ResidualBlock<M>,
            visit: &mut impl FnMut(usize, &[f64], &[f64]),
        ) {
            visit(b.frame_id, b.residual.as_slice(), b.jacobian.as_slice());
        }
        for (fi, (feat, plane)) in features.iter().zip(planes).enumerate() {
            match self {
                Model::Proposed => {
                    for o in feat {
                        emit(&proposed_residual(o, &poses[o.frame_id], plane), &mut visit);
                    }
                }
                Model::EfLm(factors) => {
                    let eta = plane.homogeneous();
                    for (o, l) in feat.iter().zip(&factors[fi]) {
                        emit(
                            &ef_lm_residual(l, o.frame_id, &poses[o.frame_id], &eta),
                            &mut visit,
                        );
                    }
                }
            }
        }
    }

    fn cost(&self, features: &[Feature], poses: &[Pose], planes: &[PlaneParam]) -> f64 {
        let mut c = 0.0;
        self.for_each_block(features, poses, planes, |_, r, _| {
            c += r.iter().map(|x| x * x).sum::<f64>();
        });
        c
    }

    /// Per-frame `JᵀJ` and `Jᵀr` blocks plus the cost.
    fn linearize(
        &self,
        features: &[Feature],
        poses: &[Pose],
        planes: &[PlaneParam],
    ) -> (Vec<Matrix6<f64>>, Vec<Vector6<f64>>, f64) {
        let mut h = vec![Matrix6::zeros(); poses.len()];
        let mut g = vec![Vector6::zeros(); poses.len()];
        let mut cost = 0.0;
        self.for_each_block(features, poses, planes, |k, r, j| {
            let m = r.len();
            // column-major M×6
            for a in 0..6 {
                let ja = &j[a * m..(a + 1) * m];
                g[k][a] += ja.iter().zip(r).map(|(x, y)| x * y).sum::<f64>();
                for b in a..6 {
                    let jb = &j[b * m..(b + 1) * m];
                    let v: f64 = ja.iter().zip(jb).map(|(x, y)| x * y).sum();
                    h[k][(a, b)] += v;
                }
            }
            cost += r.iter().map(|x| x * x).sum::<f64>();
        });
        for hk in &mut h {
            hk.fill_lower_triangle_with_upper_triangle();
        }
        (h, g, cost)
    }
}

/// Cost of `poses` with every plane re-fit, for the chosen objective.
pub fn evaluate_cost(features: &[Feature], poses: &[Pose], kind: ObjectiveKind) -> Result<f64> {
    let model = Model::new(kind, features)?;
    let planes = update_planes(features, poses)?;
    Ok(model.cost(features, poses, &planes))
}

/// One linearization at `poses` (plane re-fit plus per-frame normal
/// equations); returns the cost. Work is independent of the point count.
pub fn linearize_once(features: &[Feature], poses: &[Pose], kind: ObjectiveKind) -> Result<f64> {
    let model = Model::new(kind, features)?;
    let planes = update_planes(features, poses)?;
    Ok(model.linearize(features, poses, &planes).2)
}

/// One frame's raw points of a feature, in local coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RawObservation {
    pub frame_id: usize,
    pub points: Vec<Vector3<f64>>,
}

/// The same linearization as [`linearize_once`] with the point-to-plane
/// objective evaluated from raw points: planes are fit to the transformed
/// points and every scatter matrix is rebuilt and factored on each call.
pub fn linearize_raw_ef_lm(features: &[Vec<RawObservation>], poses: &[Pose]) -> Result<f64> {
    let mut h = vec![Matrix6::<f64>::zeros(); poses.len()];
    let mut cost = 0.0;
    for feat in features {
        let world: Vec<Vector3<f64>> = feat
            .iter()
            .flat_map(|o| o.points.iter().map(|p| poses[o.frame_id].transform_point(p)))
            .collect();
        let plane = estimate_plane(&compute_stats(&world)?.as_world().into())?;
        for o in feat {
            let b = ef_lm_raw_residual(&o.points, o.frame_id, &poses[o.frame_id], &plane)?;
            h[o.frame_id] += b.jacobian.transpose() * b.jacobian;
            cost += b.squared_norm();
        }
    }
    std::hint::black_box(&h);
    Ok(cost)
}

/// Solve `(H + λ D) δ = −g` per frame, `D = diag(H)` floored relative to
/// its mean so unobserved directions stay invertible.
fn damped_step(
    h: &[Matrix6<f64>],
    g: &[Vector6<f64>],
    active: &[bool],
    lambda: f64,
) -> Option<Vec<Vector6<f64>>> {
    let mut steps = vec![Vector6::zeros(); h.len()];
    for k in 0..h.len() {
        if !active[k] {
            continue;
        }
        let diag = h[k].diagonal();
        let mean = diag.mean();
        if !(mean > 0.0) {
            continue;
        }
        let floor = 1e-9 * mean;
        let mut a = h[k];
        for i in 0..6 {
            a[(i, i)] += lambda * diag[i].max(floor);
        }
        let chol = a.cholesky()?;
        steps[k] = -chol.solve(&g[k]);
    }
    Some(steps)
}

fn apply_step(poses: &[Pose], steps: &[Vector6<f64>], anchor: usize, anchor_pose: &Pose) -> Vec<Pose> {
    let moved: Vec<Pose> = poses
        .iter()
        .zip(steps)
        .map(|(p, d)| p.retract(&Twist(*d)))
        .collect();
    let gauge = anchor_pose.compose(&moved[anchor].inverse());
    let mut out: Vec<Pose> = moved.iter().map(|p| gauge.compose(p)).collect();
    out[anchor] = *anchor_pose;
    out
}

/// Optimize the poses of `problem`; returns the final poses and a report.
pub fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<(Vec<Pose>, SolveReport)> {
    let start = Instant::now();
    problem.validate()?;
    cfg.validate()?;
    let features = &problem.features;
    let model = Model::new(cfg.objective, features)?;

    let anchor = *problem.fixed_frames.iter().next().expect("validated");
    let anchor_pose = problem.poses[anchor];
    // a lone fixed frame is held by re-anchoring; with several, all of them
    // are simply left out of the step
    let reanchor = problem.fixed_frames.len() == 1;
    let active: Vec<bool> = (0..problem.poses.len())
        .map(|k| (reanchor && k == anchor) || !problem.fixed_frames.contains(&k))
        .collect();

    let mut poses = problem.poses.clone();
    let mut planes = update_planes(features, &poses)
        .map_err(|e| Error::InvalidProblem(format!("initial plane fit failed: {e}")))?;
    let mut cost = model.cost(features, &poses, &planes);
    let initial_cost = cost;
    let mut cost_trace = vec![cost];
    let mut lambda = cfg.damping_init;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    'outer: while iterations < cfg.max_iters {
        if cost <= 0.0 {
            termination = Termination::ZeroCost;
            break;
        }
        iterations += 1;
        let (h, g, _) = model.linearize(features, &poses, &planes);
        loop {
            let Some(steps) = damped_step(&h, &g, &active, lambda) else {
                lambda *= cfg.damping_up;
                if lambda > MAX_DAMPING {
                    return Err(Error::SingularNormalEquations { damping: lambda });
                }
                continue;
            };
            let step_norm = steps.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt();
            if step_norm < cfg.step_tol {
                termination = Termination::SmallStep;
                break 'outer;
            }
            let candidate = apply_step(&poses, &steps, anchor, &anchor_pose);
            let trial = update_planes(features, &candidate)
                .ok()
                .map(|pl| (model.cost(features, &candidate, &pl), pl));
            match trial {
                Some((new_cost, new_planes)) if new_cost < cost => {
                    let rel = (cost - new_cost) / cost;
                    poses = candidate;
                    planes = new_planes;
                    cost = new_cost;
                    cost_trace.push(cost);
                    lambda = (lambda * cfg.damping_down).max(1e-15);
                    if rel < cfg.rel_tol {
                        termination = Termination::RelativeDecrease;
                        break 'outer;
                    }
                    break;
                }
                _ => {
                    lambda *= cfg.damping_up;
                    if lambda > MAX_DAMPING {
                        termination = Termination::NoDecrease;
                        break 'outer;
                    }
                }
            }
        }
    }

    let report = SolveReport {
        objective: cfg.objective,
        iterations,
        initial_cost,
        final_cost: cost,
        converged: termination != Termination::MaxIterations,
        termination,
        cost_trace,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((poses, report))
}

/// Stack residual blocks densely (`Σ rows × 6N`); test and diagnostic helper.
pub fn dense_jacobian(
    problem: &Problem,
    planes: &[PlaneParam],
    kind: ObjectiveKind,
) -> Result<(nalgebra::DMatrix<f64>, nalgebra::DVector<f64>)> {
    let model = Model::new(kind, &problem.features)?;
    let n = problem.poses.len();
    let mut rows: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
    model.for_each_block(&problem.features, &problem.poses, planes, |k, r, j| {
        rows.push((k, r.to_vec(), j.to_vec()));
    });
    let m: usize = rows.iter().map(|r| r.1.len()).sum();
    let mut jac = nalgebra::DMatrix::zeros(m, 6 * n);
    let mut res = nalgebra::DVector::zeros(m);
    let mut row = 0;
    for (k, r, j) in rows {
        let mm = r.len();
        for i in 0..mm {
            res[row + i] = r[i];
            for c in 0..6 {
                jac[(row + i, 6 * k + c)] = j[c * mm + i];
            }
        }
        row += mm;
    }
    Ok((jac, res))
}
