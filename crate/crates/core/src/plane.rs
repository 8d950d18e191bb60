use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{sorted_eigendecomposition, Pose};
use crate::stats::{transform_stats, AggregateStats, LocalStats};

/// A planar feature: unit normal plus the aggregate mean as anchor.
///
/// The normal's sign is fixed so that its first non-negligible component in
/// the order z, y, x is positive. Residuals square it, so the choice only
/// matters for reproducibility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneParam {
    pub normal: Vector3<f64>,
    pub anchor: Vector3<f64>,
}

impl PlaneParam {
    pub fn new(normal: Vector3<f64>, anchor: Vector3<f64>) -> Self {
        PlaneParam {
            normal: normal.normalize(),
            anchor,
        }
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(&(p - self.anchor))
    }

    /// Homogeneous form `η = [n; −nᵀμ]`.
    pub fn homogeneous(&self) -> nalgebra::Vector4<f64> {
        let n = self.normal;
        nalgebra::Vector4::new(n.x, n.y, n.z, -n.dot(&self.anchor))
    }
}

/// Plane through the aggregate mean, normal along the least-variance axis.
pub fn estimate_plane(agg: &AggregateStats) -> Result<PlaneParam> {
    if agg.total_count < 3 {
        return Err(Error::DegenerateCluster(format!(
            "{} points, need at least 3",
            agg.total_count
        )));
    }
    let eig = sorted_eigendecomposition(&agg.cov)?;
    if eig.lambda2() <= 1e-12 {
        return Err(Error::DegenerateCluster(format!(
            "second eigenvalue {:e} too small",
            eig.lambda2()
        )));
    }
    Ok(PlaneParam {
        normal: eig.normal(),
        anchor: agg.mean,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// Per frame: angle (rad, sign-agnostic) between the frame's rotated
    /// local normal and the feature normal.
    pub normal_angles: Vec<f64>,
    /// Per unordered frame pair `(k, k')`, `k < k'`: `|nᵀ(μₖ − μₖ')|`.
    pub mean_offsets: Vec<(usize, usize, f64)>,
    pub satisfied: bool,
}

impl ConditionReport {
    pub fn max_angle(&self) -> f64 {
        self.normal_angles.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_offset(&self) -> f64 {
        self.mean_offsets.iter().map(|x| x.2).fold(0.0, f64::max)
    }
}

/// Check the two optimality conditions for one feature: every frame's local
/// normal, rotated into the world, is parallel to the feature normal, and
/// the world-frame means of all frames lie in a common plane orthogonal to it.
pub fn check_optimal_conditions(
    poses: &[Pose],
    locals: &[LocalStats],
    plane: &PlaneParam,
    tol_angle: f64,
    tol_dist: f64,
) -> ConditionReport {
    let n = plane.normal;
    let mut normal_angles = Vec::with_capacity(locals.len());
    let mut world_means = Vec::with_capacity(locals.len());
    for (pose, local) in poses.iter().zip(locals) {
        let local_normal = sorted_eigendecomposition(&local.cov)
            .map(|e| e.normal())
            .unwrap_or_else(|_| Vector3::z());
        let a = pose.rotation * local_normal;
        normal_angles.push(a.cross(&n).norm().atan2(a.dot(&n).abs()));
        world_means.push(transform_stats(local, pose).mean);
    }
    let mut mean_offsets = Vec::new();
    for i in 0..world_means.len() {
        for j in i + 1..world_means.len() {
            mean_offsets.push((i, j, n.dot(&(world_means[i] - world_means[j])).abs()));
        }
    }
    let satisfied = normal_angles.iter().all(|&a| a <= tol_angle)
        && mean_offsets.iter().all(|&(_, _, d)| d <= tol_dist);
    ConditionReport {
        normal_angles,
        mean_offsets,
        satisfied,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{aggregate, compute_stats, WorldStats};
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid(offset: Vector3<f64>) -> Vec<Vector3<f64>> {
        (0..8)
            .flat_map(|i| (0..8).map(move |j| Vector3::new(i as f64 * 0.1, j as f64 * 0.1, 0.0)))
            .map(|p| p + offset)
            .collect()
    }

    fn agg_of(points: &[Vector3<f64>]) -> AggregateStats {
        compute_stats(points).unwrap().as_world().into()
    }

    #[test]
    fn horizontal_plane() {
        let pl = estimate_plane(&agg_of(&grid(Vector3::new(0.0, 0.0, 2.0)))).unwrap();
        assert!((pl.normal - Vector3::z()).norm() < 1e-12);
        assert!((pl.anchor.z - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slanted_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<_> = (0..200)
            .map(|_| {
                let x: f64 = rng.random_range(-2.0..2.0);
                let y: f64 = rng.random_range(-2.0..2.0);
                Vector3::new(x, y, 1.0 - x - y)
            })
            .collect();
        let pl = estimate_plane(&agg_of(&pts)).unwrap();
        let truth = Vector3::repeat(1.0).normalize();
        assert!(pl.normal.cross(&truth).norm() < 1e-9);
        assert!(pl.normal.dot(&truth) > 0.0);
    }

    #[test]
    fn noisy_plane_within_half_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let truth = Vector3::new(0.2, -0.4, 1.0).normalize();
        let u = truth.cross(&Vector3::x()).normalize();
        let v = truth.cross(&u);
        let pts: Vec<_> = (0..500)
            .map(|_| {
                u * rng.random_range(-1.0..1.0)
                    + v * rng.random_range(-1.0..1.0)
                    + truth * noise.sample(&mut rng)
            })
            .collect();
        let pl = estimate_plane(&agg_of(&pts)).unwrap();
        let angle = pl.normal.cross(&truth).norm().atan2(pl.normal.dot(&truth).abs());
        assert!(angle < 0.5f64.to_radians(), "angle {angle}");
    }

    #[test]
    fn degenerate_clusters_rejected() {
        let two = agg_of(&[Vector3::zeros(), Vector3::x()]);
        assert!(matches!(estimate_plane(&two), Err(Error::DegenerateCluster(_))));
        let line: Vec<_> = (0..10).map(|i| Vector3::x() * i as f64).collect();
        assert!(matches!(
            estimate_plane(&agg_of(&line)),
            Err(Error::DegenerateCluster(_))
        ));
    }

    #[test]
    fn rayleigh_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let pts: Vec<_> = (0..100)
                .map(|_| a * Vector3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let agg = agg_of(&pts);
            let pl = estimate_plane(&agg).unwrap();
            let best = pl.normal.dot(&(agg.cov * pl.normal));
            for _ in 0..1000 {
                let c = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
                .normalize();
                assert!(c.dot(&(agg.cov * c)) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn single_frame_satisfies_conditions() {
        let pts = grid(Vector3::new(1.0, 2.0, 3.0));
        let local = compute_stats(&pts).unwrap();
        let pl = estimate_plane(&local.as_world().into()).unwrap();
        let r = check_optimal_conditions(&[Pose::identity()], &[local], &pl, 1e-9, 1e-9);
        assert!(r.satisfied);
        assert!(r.mean_offsets.is_empty());
    }

    fn two_frames(rot_error: f64) -> (Vec<Pose>, Vec<LocalStats>, PlaneParam) {
        // world patches on z = 1 seen from two frames
        let gt = [
            Pose::identity(),
            Pose::new(
                Pose::from_axis_angle(&Vector3::new(0.3, -0.2, 1.0), 0.7).rotation,
                Vector3::new(0.5, -1.0, 0.2),
            ),
        ];
        let world = [grid(Vector3::new(0.0, 0.0, 1.0)), grid(Vector3::new(0.4, 0.3, 1.0))];
        let locals: Vec<_> = gt
            .iter()
            .zip(&world)
            .map(|(p, w)| {
                let inv = p.inverse();
                let l: Vec<_> = w.iter().map(|x| inv.transform_point(x)).collect();
                compute_stats(&l).unwrap()
            })
            .collect();
        // rotate frame 1 about the world x axis through its patch centroid
        let c = transform_stats(&locals[1], &gt[1]).mean;
        let about = Pose::from_translation(c)
            * Pose::from_axis_angle(&Vector3::x(), rot_error)
            * Pose::from_translation(-c);
        let mut poses = gt.to_vec();
        poses[1] = about * poses[1];
        let parts: Vec<WorldStats> = poses
            .iter()
            .zip(&locals)
            .map(|(p, l)| transform_stats(l, p))
            .collect();
        let plane = estimate_plane(&aggregate(&parts).unwrap()).unwrap();
        (poses, locals, plane)
    }

    #[test]
    fn coplanar_patches_satisfy_conditions() {
        let (poses, locals, plane) = two_frames(0.0);
        let r = check_optimal_conditions(&poses, &locals, &plane, 1e-9, 1e-9);
        assert!(r.satisfied, "{r:?}");
    }

    #[test]
    fn rotated_frame_violates_normal_condition() {
        let ten = 10f64.to_radians();
        let (poses, locals, plane) = two_frames(ten);
        let r = check_optimal_conditions(&poses, &locals, &plane, 1e-6, 1e-6);
        assert!(!r.satisfied);
        // the frames' normals are 10 degrees apart and the fitted normal sits
        // roughly between them, so the two angles add up to about 10 degrees
        let spread = r.normal_angles[0] + r.normal_angles[1];
        assert!(spread >= ten - 1e-9, "{:?}", r.normal_angles);
        assert!(spread < ten + 1f64.to_radians(), "{:?}", r.normal_angles);
        assert!(r.max_angle() > 4f64.to_radians());
    }
}
