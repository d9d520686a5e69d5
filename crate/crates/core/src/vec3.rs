//! Small fixed-size vector helpers and proper rotations.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub const E1: Vec3 = [1.0, 0.0, 0.0];
pub const E2: Vec3 = [0.0, 1.0, 0.0];
pub const E3: Vec3 = [0.0, 0.0, 1.0];

#[inline]
pub fn axis(i: usize) -> Vec3 {
    let mut e = [0.0; 3];
    e[i] = 1.0;
    e
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s * b`
#[inline]
pub fn axpy(a: Vec3, s: f64, b: Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn norm2(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Scalar triple product `a . (b x c)`.
#[inline]
pub fn det3(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    dot(a, cross(b, c))
}

/// Component of `v` orthogonal to the unit vector `m`.
#[inline]
pub fn tangent(m: Vec3, v: Vec3) -> Vec3 {
    axpy(v, -dot(m, v), m)
}

/// Signed solid angle of the spherical triangle spanned by three unit vectors
/// (Van Oosterom-Strackee). Positive for counterclockwise orientation seen
/// from outside; range (-2 pi, 2 pi]. The determinant is taken on edge
/// differences so that small triangles keep their relative accuracy.
#[inline]
pub fn solid_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = det3(a, sub(b, a), sub(c, a));
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

/// `solid_angle(a1, b1, c1) - solid_angle(a0, b0, c0)` for nearby triangles.
/// Numerator and denominator changes are expanded multilinearly in the
/// vertex differences, so the rounding error scales with the change.
#[inline]
pub fn solid_angle_difference(t0: [Vec3; 3], t1: [Vec3; 3]) -> f64 {
    let [a0, b0, c0] = t0;
    let [a1, b1, c1] = t1;
    let (da, db, dc) = (sub(a1, a0), sub(b1, b0), sub(c1, c0));
    let n0 = det3(a0, sub(b0, a0), sub(c0, a0));
    let d0 = 1.0 + dot(a0, b0) + dot(b0, c0) + dot(c0, a0);
    let dn = det3(da, b1, c1) + det3(a0, db, c1) + det3(a0, b0, dc);
    let dd = dot(da, b1) + dot(a0, db) + dot(db, c1) + dot(b0, dc) + dot(dc, a1) + dot(c0, da);
    let (n1, d1) = (n0 + dn, d0 + dd);
    2.0 * (d0 * dn - n0 * dd).atan2(d0 * d1 + n0 * n1)
}

/// Solid angle together with its partial derivatives with respect to the
/// three (unconstrained) arguments.
#[inline]
pub fn solid_angle_with_grad(a: Vec3, b: Vec3, c: Vec3) -> (f64, [Vec3; 3]) {
    let bc = cross(b, c);
    let num = dot(a, bc);
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    let omega = 2.0 * num.atan2(den);
    let q = 2.0 / (num * num + den * den);
    let ga = scale(sub(scale(bc, den), scale(add(b, c), num)), q);
    let gb = scale(sub(scale(cross(c, a), den), scale(add(a, c), num)), q);
    let gc = scale(sub(scale(cross(a, b), den), scale(add(a, b), num)), q);
    (omega, [ga, gb, gc])
}

/// Pairwise summation; the reduction tree depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum3(xs: &[Vec3]) -> Vec3 {
    if xs.len() <= 32 {
        return xs.iter().fold([0.0; 3], |acc, v| add(acc, *v));
    }
    let mid = xs.len() / 2;
    add(pairwise_sum3(&xs[..mid]), pairwise_sum3(&xs[mid..]))
}

/// A proper rotation of R^3 stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub const IDENTITY: Rotation = Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Validates orthogonality and unit determinant to 1e-10.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Rotation(m);
        let mut defect = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += m[k][i] * m[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((s - target).abs());
            }
        }
        let det = det3(m[0], m[1], m[2]);
        if defect > 1e-10 || (det - 1.0).abs() > 1e-10 {
            return Err(Error::NotARotation { defect, det });
        }
        Ok(r)
    }

    /// Rotation by `angle` about the unit vector `axis` (right-hand rule).
    pub fn about_axis(axis: Vec3, angle: f64) -> Self {
        let [x, y, z] = normalize(axis);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Rotation([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    /// `R(alpha) = exp(alpha J)` with `J y = e3 x y`.
    pub fn about_e3(angle: f64) -> Self {
        Self::about_axis(E3, angle)
    }

    /// Uniformly distributed rotation (unit quaternion from four normals).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut q = [0.0; 4];
        loop {
            for v in q.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-6 {
                for v in q.iter_mut() {
                    *v /= n;
                }
                break;
            }
        }
        let [w, x, y, z] = q;
        Rotation([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ])
    }

    /// Smallest rotation taking direction `from` onto direction `to`.
    pub fn aligning(from: Vec3, to: Vec3) -> Self {
        let a = normalize(from);
        let b = normalize(to);
        let c = dot(a, b).clamp(-1.0, 1.0);
        let ax = cross(a, b);
        if norm(ax) < 1e-14 {
            if c > 0.0 {
                return Self::IDENTITY;
            }
            // antiparallel: any orthogonal axis
            let trial = if a[0].abs() < 0.9 { E1 } else { E2 };
            return Self::about_axis(cross(a, trial), std::f64::consts::PI);
        }
        Self::about_axis(ax, c.acos())
    }

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
    }

    #[inline]
    pub fn apply_inverse(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = m[j][i];
            }
        }
        Rotation(t)
    }

    /// Matrix product `self * other` (apply `other` first).
    pub fn compose(&self, other: &Rotation) -> Self {
        let mut p = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                p[i][j] = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Rotation(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solid_angle_octant() {
        let w = solid_angle(E1, E2, E3);
        assert!((w - std::f64::consts::PI / 2.0).abs() < 1e-14);
        assert!((solid_angle(E1, E3, E2) + std::f64::consts::PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn solid_angle_difference_is_accurate_for_small_moves() {
        let t0 = [normalize([0.3, 0.1, 1.0]), normalize([0.5, 0.2, 0.9]), normalize([0.2, 0.6, 0.8])];
        let d = [[1.0, -0.5, 0.2], [0.3, 0.8, -0.1], [-0.7, 0.4, 0.6]];
        // a large move agrees with the direct difference
        let big: Vec<Vec3> = t0.iter().zip(&d).map(|(a, b)| normalize(add(*a, scale(*b, 0.1)))).collect();
        let t1 = [big[0], big[1], big[2]];
        let direct = solid_angle(t1[0], t1[1], t1[2]) - solid_angle(t0[0], t0[1], t0[2]);
        assert!((solid_angle_difference(t0, t1) - direct).abs() < 1e-14);
        // a tiny move: first order from the gradient, far below the direct rounding error
        let h = 1e-11;
        let t1 = [add(t0[0], scale(d[0], h)), add(t0[1], scale(d[1], h)), add(t0[2], scale(d[2], h))];
        let (_, g) = solid_angle_with_grad(t0[0], t0[1], t0[2]);
        // the stored perturbation differs from h d by rounding
        let lin: f64 = (0..3).map(|k| dot(g[k], sub(t1[k], t0[k]))).sum();
        let diff = solid_angle_difference(t0, t1);
        assert!((diff - lin).abs() < 1e-6 * lin.abs(), "{diff} {lin}");
        assert_eq!(solid_angle_difference(t0, t0), 0.0);
    }

    #[test]
    fn solid_angle_gradient_matches_fd() {
        let a = normalize([0.3, 0.1, 1.0]);
        let b = normalize([0.5, 0.2, 0.9]);
        let c = normalize([0.2, 0.6, 0.8]);
        let (_, g) = solid_angle_with_grad(a, b, c);
        let h = 1e-6;
        for k in 0..3 {
            let mut ap = a;
            let mut am = a;
            ap[k] += h;
            am[k] -= h;
            let fd = (solid_angle(ap, b, c) - solid_angle(am, b, c)) / (2.0 * h);
            assert!((fd - g[0][k]).abs() < 1e-8, "{fd} {}", g[0][k]);
        }
    }

    #[test]
    fn random_rotation_is_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let r = Rotation::random(&mut rng);
            Rotation::new(r.0).unwrap();
        }
    }

    #[test]
    fn reflection_rejected() {
        let m = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(matches!(Rotation::new(m), Err(Error::NotARotation { .. })));
    }

    #[test]
    fn aligning_maps_direction() {
        let a = normalize([0.2, -0.4, 0.9]);
        let b = normalize([-0.7, 0.1, -0.3]);
        let r = Rotation::aligning(a, b);
        let ra = r.apply(a);
        assert!(norm(sub(ra, b)) < 1e-12);
        let r2 = Rotation::aligning(a, scale(a, -1.0));
        assert!(norm(add(r2.apply(a), a)) < 1e-12);
    }
}
