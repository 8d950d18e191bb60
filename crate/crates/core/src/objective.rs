//! Residuals and analytic Jacobians.
//!
//! Three cost formulations live here:
//!
//! * the eigenvalue-weighted planar residual used by the solver by default,
//!   built only from per-frame Gaussian summaries;
//! * the homogeneous-scatter least-squares baseline ("EF(LM)"), whose
//!   residual is `Lᵀ Tᵀ η` for a factor `L Lᵀ = S` of the frame's
//!   homogeneous scatter;
//! * the smallest-eigenvalue cost of an aggregate and its point-wise
//!   counterpart, which serve as oracles.
//!
//! All Jacobians are with respect to a right perturbation of the frame pose,
//! twist ordering `[φ; ρ]`. Plane parameters are treated as constants.

use nalgebra::{Matrix4, SMatrix, SVector, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::geometry::{hat, sorted_eigendecomposition, EigenDecomp, Pose};
use crate::plane::PlaneParam;
use crate::stats::{AggregateStats, LocalStats};

/// One frame's observation of one planar feature, with the local
/// decomposition computed once before optimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureObservation {
    pub frame_id: usize,
    pub stats: LocalStats,
    pub basis: EigenDecomp,
    /// `(√(n λ1), √(n λ2), √n)`.
    pub weights: Vector3<f64>,
}

impl FeatureObservation {
    pub fn new(frame_id: usize, stats: LocalStats) -> Result<Self> {
        let basis = sorted_eigendecomposition(&stats.cov)?;
        let n = stats.count as f64;
        let weights = Vector3::new(
            (n * basis.lambda1().max(0.0)).sqrt(),
            (n * basis.lambda2().max(0.0)).sqrt(),
            n.sqrt(),
        );
        Ok(FeatureObservation {
            frame_id,
            stats,
            basis,
            weights,
        })
    }

    /// Homogeneous scatter `Σᵢ p̃ᵢ p̃ᵢᵀ` recovered from the summary alone:
    /// `n [Σ + μμᵀ, μ; μᵀ, 1]`.
    pub fn homogeneous_scatter(&self) -> Matrix4<f64> {
        scatter_from_stats(&self.stats)
    }
}

/// Residual and 6-column Jacobian contributed by one observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualBlock<const M: usize> {
    pub frame_id: usize,
    pub residual: SVector<f64, M>,
    pub jacobian: SMatrix<f64, M, 6>,
}

impl<const M: usize> ResidualBlock<M> {
    pub fn squared_norm(&self) -> f64 {
        self.residual.norm_squared()
    }
}

/// Eigenvalue-weighted planar residual
/// `[√(nλ1)·nᵀR R_Σ eₓ, √(nλ2)·nᵀR R_Σ e_y, √n·nᵀ(R μ + t − μ_π)]`.
pub fn proposed_residual(
    obs: &FeatureObservation,
    pose: &Pose,
    plane: &PlaneParam,
) -> ResidualBlock<3> {
    let n = plane.normal;
    let rt_n = pose.rotation.transpose() * n;
    let w = obs.weights;
    let u1 = obs.basis.axis(0);
    let u2 = obs.basis.axis(1);
    let mu = obs.stats.mean;

    let residual = Vector3::new(
        w[0] * rt_n.dot(&u1),
        w[1] * rt_n.dot(&u2),
        w[2] * n.dot(&(pose.rotation * mu + pose.translation - plane.anchor)),
    );

    // d/dφ of aᵀ exp(φ^) u = −aᵀ hat(u) = (u × a)ᵀ
    let mut jacobian = SMatrix::<f64, 3, 6>::zeros();
    jacobian
        .fixed_view_mut::<1, 3>(0, 0)
        .copy_from(&(w[0] * u1.cross(&rt_n)).transpose());
    jacobian
        .fixed_view_mut::<1, 3>(1, 0)
        .copy_from(&(w[1] * u2.cross(&rt_n)).transpose());
    jacobian
        .fixed_view_mut::<1, 3>(2, 0)
        .copy_from(&(w[2] * mu.cross(&rt_n)).transpose());
    jacobian
        .fixed_view_mut::<1, 3>(2, 3)
        .copy_from(&(w[2] * rt_n).transpose());

    ResidualBlock {
        frame_id: obs.frame_id,
        residual,
        jacobian,
    }
}

/// Smallest eigenvalue of the aggregate covariance.
pub fn evm_cost(agg: &AggregateStats) -> f64 {
    sorted_eigendecomposition(&agg.cov)
        .map(|e| e.lambda3().max(0.0))
        .unwrap_or(f64::NAN)
}

/// Mean squared point-to-plane distance of all frames' points, mapped to
/// the world by their poses. Equals [`evm_cost`] when `plane` is the optimal
/// plane of the same aggregate.
pub fn mean_point_plane_sq_distance(points_per_frame: &[(Pose, Vec<Vector3<f64>>)], plane: &PlaneParam) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (pose, points) in points_per_frame {
        for p in points {
            let d = plane.signed_distance(&pose.transform_point(p));
            sum += d * d;
        }
        count += points.len();
    }
    if count == 0 {
        return 0.0;
    }
    sum / count as f64
}

/// `P̃ P̃ᵀ` over homogeneous points `[p; 1]`.
pub fn build_homogeneous_scatter(points: &[Vector3<f64>]) -> Result<Matrix4<f64>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut s = Matrix4::zeros();
    for p in points {
        let h = p.push(1.0);
        s += h * h.transpose();
    }
    Ok(s)
}

pub fn scatter_from_stats(stats: &LocalStats) -> Matrix4<f64> {
    let n = stats.count as f64;
    let mu = stats.mean;
    let mut s = Matrix4::zeros();
    s.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&((stats.cov + mu * mu.transpose()) * n));
    s.fixed_view_mut::<3, 1>(0, 3).copy_from(&(mu * n));
    s.fixed_view_mut::<1, 3>(3, 0).copy_from(&(mu * n).transpose());
    s[(3, 3)] = n;
    s
}

/// Factor `L` with `L Lᵀ = S` for a symmetric PSD 4×4 matrix.
///
/// Diagonal pivoting: at each step the largest remaining diagonal entry is
/// eliminated, and elimination stops once it drops below `1e-10·trace(S)`,
/// which detects the rank of singular scatters (e.g. coplanar points). The
/// factor is lower-triangular in the pivoted ordering; `perm[i]` is the
/// original row eliminated at step `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterFactor {
    pub l: Matrix4<f64>,
    pub rank: usize,
    pub perm: [usize; 4],
}

pub fn pivoted_cholesky(s: &Matrix4<f64>) -> Result<ScatterFactor> {
    let trace = s.trace();
    if !(trace >= 0.0) || !s.iter().all(|x| x.is_finite()) {
        return Err(Error::CholeskyFailure { pivot: trace });
    }
    let tol = 1e-10 * trace;
    let mut a = 0.5 * (s + s.transpose());
    let mut perm = [0usize, 1, 2, 3];
    // factor columns expressed in the original row ordering
    let mut l = Matrix4::<f64>::zeros();
    let mut rank = 0;
    for k in 0..4 {
        let (j, &pivot) = (k..4)
            .map(|i| (i, &a[(perm[i], perm[i])]))
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("non-empty range");
        if pivot < -tol {
            return Err(Error::CholeskyFailure { pivot });
        }
        if pivot <= tol {
            break;
        }
        perm.swap(k, j);
        let p = perm[k];
        let d = pivot.sqrt();
        let mut col = Vector4::zeros();
        col[p] = d;
        for &i in &perm[k + 1..] {
            col[i] = a[(i, p)] / d;
        }
        for &i in &perm[k + 1..] {
            for &m in &perm[k + 1..] {
                a[(i, m)] -= col[i] * col[m];
            }
        }
        l.set_column(k, &col);
        rank += 1;
    }
    // remaining untouched pivots must be non-negative within tolerance
    for &i in &perm[rank..] {
        if a[(i, i)] < -tol {
            return Err(Error::CholeskyFailure { pivot: a[(i, i)] });
        }
    }
    Ok(ScatterFactor { l, rank, perm })
}

/// Homogeneous least-squares residual `Lᵀ Tᵀ η`; its squared norm is
/// `ηᵀ T S Tᵀ η`, the sum of squared point-to-plane distances.
pub fn ef_lm_residual(
    factor: &Matrix4<f64>,
    frame_id: usize,
    pose: &Pose,
    plane_h: &Vector4<f64>,
) -> ResidualBlock<4> {
    let n = plane_h.fixed_rows::<3>(0).into_owned();
    let a = pose.rotation.transpose() * n;
    let g = a.push(pose.translation.dot(&n) + plane_h[3]);
    let lt = factor.transpose();
    let residual = lt * g;

    // d(Tᵀη) = [hat(a) φ; aᵀ ρ]
    let mut dg = SMatrix::<f64, 4, 6>::zeros();
    dg.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat(&a));
    dg.fixed_view_mut::<1, 3>(3, 3).copy_from(&a.transpose());
    ResidualBlock {
        frame_id,
        residual,
        jacobian: lt * dg,
    }
}

/// EF(LM) residuals driven by raw points: the scatter and its factor are
/// rebuilt from the points on every call, so cost grows with point count.
pub fn ef_lm_raw_residual(
    points: &[Vector3<f64>],
    frame_id: usize,
    pose: &Pose,
    plane: &PlaneParam,
) -> Result<ResidualBlock<4>> {
    let s = build_homogeneous_scatter(points)?;
    let f = pivoted_cholesky(&s)?;
    Ok(ef_lm_residual(&f.l, frame_id, pose, &plane.homogeneous()))
}

/// Sum of `n_k λ3 (nᵀ R R_Σ e_z)²` over a feature: the part of the
/// point-to-plane energy that the proposed residual leaves out.
pub fn thickness_term(obs: &FeatureObservation, pose: &Pose, plane: &PlaneParam) -> f64 {
    let c = plane.normal.dot(&(pose.rotation * obs.basis.normal()));
    obs.stats.count as f64 * obs.basis.lambda3().max(0.0) * c * c
}
