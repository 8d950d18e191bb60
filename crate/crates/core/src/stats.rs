//! Gaussian summaries of point clusters.
//!
//! Covariances use population normalization, `Σ = (1/n) Σᵢ (pᵢ−μ)(pᵢ−μ)ᵀ`,
//! not the `1/(n−1)` sample estimator most point-cloud tools report.
//! Merging summaries of disjoint subsets under this normalization is exact,
//! which is what lets a feature be refreshed from per-frame summaries
//! without touching raw points.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{sorted_eigendecomposition, Pose};

/// Summary of one frame's points inside one cluster, in the frame's own
/// coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalStats {
    pub count: u64,
    pub mean: Vector3<f64>,
    pub cov: Matrix3<f64>,
}

/// A [`LocalStats`] carried into world coordinates by a pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldStats {
    pub count: u64,
    pub mean: Vector3<f64>,
    pub cov: Matrix3<f64>,
}

/// Distribution of the union of several [`WorldStats`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateStats {
    pub total_count: u64,
    pub mean: Vector3<f64>,
    pub cov: Matrix3<f64>,
}

impl From<WorldStats> for AggregateStats {
    fn from(w: WorldStats) -> Self {
        AggregateStats {
            total_count: w.count,
            mean: w.mean,
            cov: w.cov,
        }
    }
}

impl From<AggregateStats> for WorldStats {
    fn from(a: AggregateStats) -> Self {
        WorldStats {
            count: a.total_count,
            mean: a.mean,
            cov: a.cov,
        }
    }
}

impl LocalStats {
    /// Treat local coordinates as world coordinates (identity pose).
    pub fn as_world(&self) -> WorldStats {
        WorldStats {
            count: self.count,
            mean: self.mean,
            cov: self.cov,
        }
    }
}

/// Mean and population covariance of a point set (two-pass).
pub fn compute_stats(points: &[Vector3<f64>]) -> Result<LocalStats> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    Ok(LocalStats {
        count: points.len() as u64,
        mean,
        cov: symmetrize(&cov),
    })
}

pub fn transform_stats(s: &LocalStats, pose: &Pose) -> WorldStats {
    let r = &pose.rotation;
    WorldStats {
        count: s.count,
        mean: r * s.mean + pose.translation,
        cov: symmetrize(&(r * s.cov * r.transpose())),
    }
}

/// Closed-form merge of disjoint subsets; cost is linear in `parts.len()`.
pub fn aggregate(parts: &[WorldStats]) -> Result<AggregateStats> {
    if parts.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: u64 = parts.iter().map(|p| p.count).sum();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let n = total as f64;
    let mean = parts
        .iter()
        .map(|p| p.mean * (p.count as f64 / n))
        .sum::<Vector3<f64>>();
    let mut cov = Matrix3::zeros();
    for p in parts {
        let d = p.mean - mean;
        cov += (p.cov + d * d.transpose()) * (p.count as f64 / n);
    }
    Ok(AggregateStats {
        total_count: total,
        mean,
        cov: symmetrize(&cov),
    })
}

/// `λ3(Σ) − Σₖ (nₖ/n) λ3(Σₖ)`, non-negative by Weyl's inequality.
pub fn weyl_gap(agg: &AggregateStats, parts: &[WorldStats]) -> f64 {
    let n = agg.total_count as f64;
    let lambda3 = |m: &Matrix3<f64>| {
        sorted_eigendecomposition(m)
            .map(|e| e.lambda3())
            .unwrap_or(f64::NAN)
    };
    let weighted: f64 = parts
        .iter()
        .map(|p| (p.count as f64 / n) * lambda3(&p.cov))
        .sum();
    lambda3(&agg.cov) - weighted
}

pub(crate) fn symmetrize(m: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (m + m.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_se3, Twist};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector3<f64>> {
        let c = Vector3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        );
        let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        (0..n)
            .map(|_| {
                let u = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                c + a * u
            })
            .collect()
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        let v: [f64; 6] = std::array::from_fn(|i| {
            if i < 3 {
                rng.random_range(-1.5..1.5)
            } else {
                rng.random_range(-10.0..10.0)
            }
        });
        exp_se3(&Twist::from_slice(&v))
    }

    /// Welford's streaming update, independent of the two-pass path.
    fn welford(points: &[Vector3<f64>]) -> (Vector3<f64>, Matrix3<f64>) {
        let mut mean = Vector3::zeros();
        let mut m2 = Matrix3::zeros();
        for (i, p) in points.iter().enumerate() {
            let d = p - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (p - mean).transpose();
        }
        (mean, m2 / points.len() as f64)
    }

    fn rel(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn single_point() {
        let p = Vector3::new(1.0, -2.0, 0.5);
        let s = compute_stats(&[p]).unwrap();
        assert_eq!(s.count, 1);
        assert_eq!(s.mean, p);
        assert_eq!(s.cov, Matrix3::zeros());
    }

    #[test]
    fn two_symmetric_points() {
        let s = compute_stats(&[Vector3::x(), -Vector3::x()]).unwrap();
        assert_eq!(s.mean, Vector3::zeros());
        assert_eq!(s.cov, Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(compute_stats(&[]), Err(Error::EmptyInput)));
        assert!(matches!(aggregate(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn matches_streaming_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = cloud(&mut rng, 1000);
        let s = compute_stats(&pts).unwrap();
        let (m, c) = welford(&pts);
        assert!((s.mean - m).norm() <= 1e-12 * m.norm());
        assert!(rel(&s.cov, &c) < 1e-12);
    }

    #[test]
    fn transform_identity_and_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = compute_stats(&cloud(&mut rng, 50)).unwrap();
        let w = transform_stats(&s, &Pose::identity());
        assert_eq!(w, s.as_world());
        let t = Vector3::new(0.3, -1.0, 2.0);
        let w = transform_stats(&s, &Pose::from_translation(t));
        assert_eq!(w.mean, s.mean + t);
        assert_eq!(w.cov, s.cov);
    }

    #[test]
    fn transform_matches_pointwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let pts = cloud(&mut rng, 80);
            let pose = random_pose(&mut rng);
            let w = transform_stats(&compute_stats(&pts).unwrap(), &pose);
            let moved: Vec<_> = pts.iter().map(|p| pose.transform_point(p)).collect();
            let oracle = compute_stats(&moved).unwrap();
            assert!((w.mean - oracle.mean).norm() < 1e-10);
            assert!((w.cov - oracle.cov).norm() < 1e-10);
            let e0 = sorted_eigendecomposition(&compute_stats(&pts).unwrap().cov).unwrap();
            let e1 = sorted_eigendecomposition(&w.cov).unwrap();
            assert!((e0.eigenvalues - e1.eigenvalues).norm() < 1e-12 * e0.lambda1().max(1.0));
        }
    }

    #[test]
    fn aggregate_single_part_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = compute_stats(&cloud(&mut rng, 30)).unwrap().as_world();
        let a = aggregate(&[w]).unwrap();
        assert_eq!(a.total_count, w.count);
        assert!((a.mean - w.mean).norm() < 1e-15);
        assert!((a.cov - w.cov).norm() < 1e-15);
    }

    #[test]
    fn aggregate_symmetric_split() {
        let part = |x: f64| WorldStats {
            count: 5,
            mean: Vector3::new(x, 0.0, 0.0),
            cov: Matrix3::zeros(),
        };
        let a = aggregate(&[part(1.0), part(-1.0)]).unwrap();
        assert_eq!(a.mean, Vector3::zeros());
        assert_eq!(a.cov, Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn aggregate_matches_union_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let k = rng.random_range(1..8);
            let mut parts = Vec::new();
            let mut union = Vec::new();
            for _ in 0..k {
                let n = rng.random_range(1..200);
                let pts = cloud(&mut rng, n);
                let pose = random_pose(&mut rng);
                parts.push(transform_stats(&compute_stats(&pts).unwrap(), &pose));
                union.extend(pts.iter().map(|p| pose.transform_point(p)));
            }
            let a = aggregate(&parts).unwrap();
            let oracle = compute_stats(&union).unwrap();
            assert_eq!(a.total_count, union.len() as u64);
            assert!((a.mean - oracle.mean).norm() <= 1e-10 * oracle.mean.norm().max(1.0));
            assert!(rel(&a.cov, &oracle.cov) < 1e-10);
        }
    }

    #[test]
    fn aggregate_is_order_and_grouping_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let parts: Vec<_> = (0..6)
            .map(|_| {
                let pts = cloud(&mut rng, 40);
                transform_stats(&compute_stats(&pts).unwrap(), &random_pose(&mut rng))
            })
            .collect();
        let flat = aggregate(&parts).unwrap();
        let mut rev = parts.clone();
        rev.reverse();
        let reversed = aggregate(&rev).unwrap();
        let left = WorldStats::from(aggregate(&parts[..2]).unwrap());
        let right = WorldStats::from(aggregate(&parts[2..]).unwrap());
        let grouped = aggregate(&[left, right]).unwrap();
        for other in [reversed, grouped] {
            assert!((flat.mean - other.mean).norm() < 1e-12 * flat.mean.norm().max(1.0));
            assert!(rel(&flat.cov, &other.cov) < 1e-12);
        }
    }

    #[test]
    fn weyl_gap_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = compute_stats(&cloud(&mut rng, 50)).unwrap().as_world();
        assert!(weyl_gap(&aggregate(&[w]).unwrap(), &[w]).abs() < 1e-12);

        let patch = |offset: f64, rot: &Pose| {
            let pts: Vec<_> = (0..10)
                .flat_map(|i| (0..10).map(move |j| Vector3::new(i as f64 * 0.1 + offset, j as f64 * 0.1, 0.0)))
                .map(|p| rot.transform_point(&p))
                .collect();
            compute_stats(&pts).unwrap().as_world()
        };
        let a = patch(0.0, &Pose::identity());
        let b = patch(2.0, &Pose::identity());
        let gap = weyl_gap(&aggregate(&[a, b]).unwrap(), &[a, b]);
        assert!(gap.abs() < 1e-9);

        let tilted = patch(
            2.0,
            &Pose::from_axis_angle(&Vector3::y(), std::f64::consts::FRAC_PI_4),
        );
        let gap = weyl_gap(&aggregate(&[a, tilted]).unwrap(), &[a, tilted]);
        assert!(gap > 1e-3, "gap {gap}");
    }
}
