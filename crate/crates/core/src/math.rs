//! Rigid-motion primitives and closed-form solvers.

use nalgebra::{Matrix3, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Angles below this use the series expansions of the SE(3) exponential.
const SMALL_ANGLE: f64 = 1e-8;

/// Skew-symmetric cross-product matrix, `skew(a) * b == a.cross(b)`.
#[inline]
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// A proper rigid motion `x -> rotation * x + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` radians about the unit `axis` through `pivot`.
    pub fn about_axis(pivot: &Vec3, axis: &Vec3, angle: f64) -> Self {
        let rotation = twist_exp(&Twist::new(axis * angle, Vec3::zeros())).rotation;
        Self {
            rotation,
            translation: pivot - rotation * pivot,
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle in radians, in `[0, pi]`.
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Checks orthonormality and `det = +1` within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let ortho = (self.rotation.transpose() * self.rotation - Mat3::identity()).amax();
        ortho <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
            && self.translation.iter().all(|c| c.is_finite())
    }

    /// Inverse of [`twist_exp`].
    pub fn log(&self) -> Twist {
        let omega = rotation_log(&self.rotation);
        let theta = omega.norm();
        let w = skew(&omega);
        let v_inv = if theta < SMALL_ANGLE {
            Mat3::identity() - w * 0.5 + w * w * (1.0 / 12.0)
        } else {
            let a = theta.sin() / theta;
            let b = (1.0 - theta.cos()) / (theta * theta);
            Mat3::identity() - w * 0.5 + w * w * ((1.0 - a / (2.0 * b)) / (theta * theta))
        };
        Twist {
            omega,
            v: v_inv * self.translation,
        }
    }
}

impl core::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

/// Six-parameter motion: axis-angle rotation `omega` and translational part `v`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Twist {
    pub omega: Vec3,
    pub v: Vec3,
}

impl Twist {
    pub fn new(omega: Vec3, v: Vec3) -> Self {
        Self { omega, v }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `[omega; v]` as a flat array.
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.omega.x,
            self.omega.y,
            self.omega.z,
            self.v.x,
            self.v.y,
            self.v.z,
        ]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            omega: Vec3::new(s[0], s[1], s[2]),
            v: Vec3::new(s[3], s[4], s[5]),
        }
    }
}

impl core::ops::Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist {
            omega: -self.omega,
            v: -self.v,
        }
    }
}

/// SE(3) exponential: Rodrigues rotation and the left-Jacobian translation.
pub fn twist_exp(xi: &Twist) -> RigidTransform {
    let theta2 = xi.omega.norm_squared();
    let theta = theta2.sqrt();
    let (a, b, c) = if theta < SMALL_ANGLE {
        (
            1.0 - theta2 / 6.0,
            0.5 - theta2 / 24.0,
            1.0 / 6.0 - theta2 / 120.0,
        )
    } else {
        let (s, co) = (theta.sin(), theta.cos());
        (s / theta, (1.0 - co) / theta2, (theta - s) / (theta2 * theta))
    };
    let w = skew(&xi.omega);
    let w2 = w * w;
    let rotation = Mat3::identity() + w * a + w2 * b;
    let jac = Mat3::identity() + w * b + w2 * c;
    RigidTransform {
        rotation,
        translation: jac * xi.v,
    }
}

/// Axis-angle vector of a rotation matrix.
pub fn rotation_log(r: &Mat3) -> Vec3 {
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let vee = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if theta < 1e-6 {
        return vee * 0.5;
    }
    if core::f64::consts::PI - theta > 1e-4 {
        return vee * (theta / (2.0 * theta.sin()));
    }
    // Near pi: recover the axis from the symmetric part, R + I = 2 a a^T (1 - cos) + ...
    let b = (r + r.transpose()) * 0.5 - Mat3::identity() * cos_theta;
    let k = (0..3)
        .max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)]))
        .unwrap_or(0);
    let mut axis = b.column(k).into_owned();
    axis /= axis.norm();
    if axis.dot(&vee) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

/// Singular value decomposition `a = u * diag(sigma) * v^T` of a 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Svd3Result {
    pub u: Mat3,
    pub sigma: Vec3,
    pub v: Mat3,
}

impl Svd3Result {
    pub fn reconstruct(&self) -> Mat3 {
        self.u * Mat3::from_diagonal(&self.sigma) * self.v.transpose()
    }

    /// `max_R tr(R a)` over proper rotations: `sigma0 + sigma1 + d * sigma2`
    /// with `d = det(v u^T)`.
    pub fn rotation_trace(&self) -> f64 {
        let d = (self.u.determinant() * self.v.determinant()).signum();
        self.sigma[0] + self.sigma[1] + d * self.sigma[2]
    }

    /// Optimal rotation `v * diag(1, 1, det(v u^T)) * u^T` for the cross-covariance.
    pub fn optimal_rotation(&self) -> Mat3 {
        let d = (self.v * self.u.transpose()).determinant().signum();
        self.v * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * self.u.transpose()
    }
}

/// 3x3 SVD by one-sided Jacobi rotations.
///
/// Singular values are sorted descending. `det(u) = +1` always; `det(v) = +1`
/// unless `det(a) < 0`, which no sign choice with non-negative sigma can avoid.
pub fn svd3(a: &Mat3) -> Svd3Result {
    let mut w = *a;
    let mut v = Mat3::identity();
    for _sweep in 0..60 {
        let mut rotated = false;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let alpha = w.column(p).norm_squared();
            let beta = w.column(q).norm_squared();
            let gamma = w.column(p).dot(&w.column(q));
            if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            for m in [&mut w, &mut v] {
                for r in 0..3 {
                    let xp = m[(r, p)];
                    let xq = m[(r, q)];
                    m[(r, p)] = c * xp - s * xq;
                    m[(r, q)] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms = [w.column(0).norm(), w.column(1).norm(), w.column(2).norm()];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut u = Mat3::zeros();
    let mut vs = Mat3::zeros();
    let mut sigma = Vec3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = norms[src];
        vs.set_column(dst, &v.column(src));
        u.set_column(dst, &w.column(src));
    }

    let scale = sigma[0];
    let null = |s: f64| s <= 1e-14 * scale || s == 0.0;
    if scale == 0.0 {
        return Svd3Result {
            u: Mat3::identity(),
            sigma: Vec3::zeros(),
            v: Mat3::identity(),
        };
    }
    let u0 = u.column(0) / sigma[0];
    u.set_column(0, &u0);
    let u1 = if null(sigma[1]) {
        any_orthogonal(&u0)
    } else {
        u.column(1) / sigma[1]
    };
    u.set_column(1, &u1);
    let u2 = if null(sigma[2]) {
        u0.cross(&u1)
    } else {
        u.column(2) / sigma[2]
    };
    u.set_column(2, &u2);

    if u.determinant() < 0.0 {
        let c = -u.column(2);
        u.set_column(2, &c);
        let c = -vs.column(2);
        vs.set_column(2, &c);
    }
    if vs.determinant() < 0.0 && null(sigma[2]) {
        let c = -vs.column(2);
        vs.set_column(2, &c);
    }
    Svd3Result { u, sigma, v: vs }
}

fn any_orthogonal(a: &Vec3) -> Vec3 {
    let helper = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let o = a.cross(&helper);
    o / o.norm()
}

/// Closed-form rigid alignment of paired point sets (`dst ~ R * src + t`).
///
/// Also returns the SVD of the centered cross-covariance `sum (x - c)(y - c_t)^T`,
/// from which callers form the optimal residual.
pub fn procrustes(src: &[Vec3], dst: &[Vec3]) -> Result<(RigidTransform, Svd3Result)> {
    if src.is_empty() {
        return Err(Error::EmptyCluster);
    }
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch {
            expected: src.len(),
            actual: dst.len(),
        });
    }
    let n = src.len() as f64;
    let c_src = src.iter().sum::<Vec3>() / n;
    let c_dst = dst.iter().sum::<Vec3>() / n;
    let mut a = Mat3::zeros();
    for (x, y) in src.iter().zip(dst) {
        a += (x - c_src) * (y - c_dst).transpose();
    }
    let svd = svd3(&a);
    let rotation = svd.optimal_rotation();
    let translation = c_dst - rotation * c_src;
    Ok((RigidTransform::new(rotation, translation), svd))
}
