//! Rigid-body primitives and the sorted 3×3 symmetric eigendecomposition.
//!
//! Twists are ordered `[φ; ρ]`: rotational part first, translational part
//! second. Every Jacobian in this crate is taken with respect to a
//! right-multiplied perturbation `T ← T · exp(δξ^)`.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3, Vector6};
use std::ops::Mul;

use crate::error::{Error, Result};

/// Angles below this use the series expansions of `exp`/`log`.
const SMALL_ANGLE: f64 = 1e-9;

/// Closest permitted distance of a logarithm's angle to π.
const PI_MARGIN: f64 = 1e-6;

/// Skew-symmetric (hat) matrix of a 3-vector, `hat(a) * b == a × b`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] on the antisymmetric part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// A tangent vector of SE(3): `[φ (rad); ρ (m)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist(pub Vector6<f64>);

impl Twist {
    pub fn zero() -> Self {
        Twist(Vector6::zeros())
    }

    pub fn new(rot: Vector3<f64>, trans: Vector3<f64>) -> Self {
        Twist(Vector6::new(rot.x, rot.y, rot.z, trans.x, trans.y, trans.z))
    }

    pub fn from_slice(v: &[f64; 6]) -> Self {
        Twist(Vector6::from_row_slice(v))
    }

    pub fn rotation(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// A rigid transform `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Pose::new(Matrix3::identity(), t)
    }

    /// Rotation about a (not necessarily unit) axis by `angle` radians.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let phi = axis.normalize() * angle;
        Pose::new(so3_exp(&phi), Vector3::zeros())
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    pub fn compose(&self, other: &Pose) -> Self {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn transform_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    /// Homogeneous 4×4 matrix `[R t; 0 1]`.
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Right-perturbation update `self · exp(δ)`.
    pub fn retract(&self, delta: &Twist) -> Self {
        self.compose(&exp_se3(delta))
    }

    /// Geodesic rotation angle in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }

    /// Re-orthonormalize the rotation block (polar projection via SVD).
    pub fn orthonormalized(&self) -> Self {
        let svd = self.rotation.svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * vt;
        }
        Pose::new(r, self.translation)
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

/// Geodesic angle of a rotation matrix, computed with `atan2` so it stays
/// well conditioned near both 0 and π.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let s = vee(r).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

pub fn so3_exp(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(phi);
    let k2 = k * k;
    if theta < SMALL_ANGLE {
        Matrix3::identity() + k + 0.5 * k2
    } else {
        Matrix3::identity() + (theta.sin() / theta) * k + ((1.0 - theta.cos()) / theta2) * k2
    }
}

/// Exponential map `se(3) → SE(3)` (Rodrigues form).
pub fn exp_se3(xi: &Twist) -> Pose {
    let phi = xi.rotation();
    let rho = xi.translation();
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(&phi);
    let k2 = k * k;
    let (r, v) = if theta < SMALL_ANGLE {
        (
            Matrix3::identity() + k + 0.5 * k2,
            Matrix3::identity() + 0.5 * k + k2 / 6.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        let a = s / theta;
        let b = (1.0 - c) / theta2;
        let cc = (theta - s) / (theta2 * theta);
        (
            Matrix3::identity() + a * k + b * k2,
            Matrix3::identity() + b * k + cc * k2,
        )
    };
    Pose::new(r, v * rho)
}

/// Logarithm on the principal branch. Fails within `1e-6` of a half turn,
/// where the rotation axis is ill-defined.
pub fn log_se3(p: &Pose) -> Result<Twist> {
    let r = &p.rotation;
    let w = vee(r);
    let s = w.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if std::f64::consts::PI - theta < PI_MARGIN {
        return Err(Error::AngleNearPi { angle: theta });
    }
    let phi = if theta < SMALL_ANGLE {
        w
    } else {
        w * (theta / s)
    };
    let k = hat(&phi);
    let k2 = k * k;
    let v_inv = if theta < SMALL_ANGLE {
        Matrix3::identity() - 0.5 * k + k2 / 12.0
    } else {
        let coef = (1.0 - theta * s / (2.0 * (1.0 - c))) / (theta * theta);
        Matrix3::identity() - 0.5 * k + coef * k2
    };
    Ok(Twist::new(phi, v_inv * p.translation))
}

/// Eigendecomposition of a symmetric 3×3 matrix with eigenvalues sorted
/// in descending order and a right-handed eigenvector basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenDecomp {
    /// Columns are the eigenvectors matching `eigenvalues`.
    pub rotation_basis: Matrix3<f64>,
    /// `λ1 ≥ λ2 ≥ λ3`.
    pub eigenvalues: Vector3<f64>,
}

impl EigenDecomp {
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn lambda3(&self) -> f64 {
        self.eigenvalues[2]
    }

    /// Eigenvector of the smallest eigenvalue.
    pub fn normal(&self) -> Vector3<f64> {
        self.rotation_basis.column(2).into_owned()
    }

    pub fn axis(&self, i: usize) -> Vector3<f64> {
        self.rotation_basis.column(i).into_owned()
    }

    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.rotation_basis
            * Matrix3::from_diagonal(&self.eigenvalues)
            * self.rotation_basis.transpose()
    }
}

/// Flip `v` so that its first component (in the order z, y, x) whose
/// magnitude exceeds `1e-9` is positive.
pub(crate) fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    for i in [2usize, 1, 0] {
        if v[i].abs() > 1e-9 {
            return if v[i] < 0.0 { -v } else { v };
        }
    }
    v
}

/// Sorted eigendecomposition with a deterministic sign convention: the third
/// column follows [`canonical_sign`], the first column is chosen the same way,
/// and the second is their cross product so the basis has determinant +1.
pub fn sorted_eigendecomposition(m: &Matrix3<f64>) -> Result<EigenDecomp> {
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-9 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let sym = 0.5 * (m + m.transpose());
    let SymmetricEigen {
        eigenvectors,
        eigenvalues,
    } = sym.symmetric_eigen();

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));

    let values = Vector3::new(
        eigenvalues[order[0]],
        eigenvalues[order[1]],
        eigenvalues[order[2]],
    );
    let e1 = canonical_sign(eigenvectors.column(order[0]).normalize());
    let e3 = canonical_sign(eigenvectors.column(order[2]).normalize());
    let e2 = e3.cross(&e1).normalize();
    Ok(EigenDecomp {
        rotation_basis: Matrix3::from_columns(&[e1, e2, e3]),
        eigenvalues: values,
    })
}
