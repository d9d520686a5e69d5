//! Energy, topological charge, vorticity moments, angular momenta, their
//! L2 gradients and the Poisson bracket.

mod frame_energy;

pub use frame_energy::{frame_energy, FrameEnergy};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{azimuthal_derivative, azimuthal_derivative_about, sphere_to_stereo, ChartPoint, SpherePoint};
use crate::vec3::{
    add, axis, cross, dot, norm2, pairwise_sum, pairwise_sum3, scale, solid_angle, solid_angle_difference, solid_angle_with_grad, sub,
    tangent, Vec3, E3,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub kappa: f64,
}

impl EnergyParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
        }
        Ok(EnergyParams { kappa })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub exchange: f64,
    pub anisotropy: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub exchange: f64,
    pub anisotropy: f64,
    pub total: f64,
    pub q: f64,
    pub s: Vec3,
    pub l: Vec3,
    pub j: Vec3,
}

impl Diagnostics {
    pub const CSV_HEADER: &'static str = "E_exchange,E_anis,E_total,Q,S1,S2,S3,L1,L2,L3,J1,J2,J3";

    pub fn csv_row(&self) -> String {
        let v = [
            self.exchange,
            self.anisotropy,
            self.total,
            self.q,
            self.s[0],
            self.s[1],
            self.s[2],
            self.l[0],
            self.l[1],
            self.l[2],
            self.j[0],
            self.j[1],
            self.j[2],
        ];
        v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(",")
    }
}

pub fn exchange_energy(m: &Field) -> f64 {
    let v = m.values();
    let terms: Vec<f64> = m.mesh().edges().par_iter().map(|e| 0.5 * e.cotan * norm2(sub(v[e.i], v[e.j]))).collect();
    pairwise_sum(&terms)
}

pub fn anisotropy_energy(m: &Field, p: EnergyParams) -> f64 {
    let mesh = m.mesh();
    let terms: Vec<f64> = m
        .values()
        .par_iter()
        .zip(mesh.vertices())
        .zip(mesh.vertex_area())
        .map(|((v, y), a)| {
            let c = dot(*v, *y);
            0.5 * p.kappa * a * (1.0 - c * c)
        })
        .collect();
    pairwise_sum(&terms)
}

pub fn energy(m: &Field, p: EnergyParams) -> EnergyParts {
    let exchange = exchange_energy(m);
    let anisotropy = anisotropy_energy(m, p);
    EnergyParts { exchange, anisotropy, total: exchange + anisotropy }
}

/// `E(new) - E(old)` assembled from local differences, accurate relative to
/// the change rather than to `E`.
pub fn energy_difference(old: &Field, new: &Field, p: EnergyParams) -> f64 {
    let (a, b) = (old.values(), new.values());
    let mesh = old.mesh();
    let ex: Vec<f64> = mesh
        .edges()
        .par_iter()
        .map(|e| {
            let (d0, d1) = (sub(a[e.i], a[e.j]), sub(b[e.i], b[e.j]));
            0.5 * e.cotan * dot(sub(d1, d0), add(d1, d0))
        })
        .collect();
    let an: Vec<f64> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let y = mesh.vertex(i);
            let (c0, c1) = (dot(a[i], y), dot(b[i], y));
            0.5 * p.kappa * mesh.vertex_area()[i] * dot(sub(a[i], b[i]), y) * (c0 + c1)
        })
        .collect();
    pairwise_sum(&ex) + pairwise_sum(&an)
}

/// `J(new) - J(old)` from per-vertex and per-triangle differences.
pub fn momentum_difference(old: &Field, new: &Field) -> Result<Vec3> {
    let (a, b) = (old.values(), new.values());
    let mesh = old.mesh();
    let ds: Vec<Vec3> =
        a.par_iter().zip(b.par_iter()).zip(mesh.vertex_area()).map(|((x, y), w)| scale(sub(*y, *x), *w)).collect();
    // both fields must be free of folded triangles
    triangle_solid_angles(old)?;
    triangle_solid_angles(new)?;
    let dl: Vec<Vec3> = mesh
        .triangles()
        .par_iter()
        .zip(mesh.triangle_centers().par_iter())
        .map(|(&[i, j, k], c)| scale(*c, solid_angle_difference([a[i], a[j], a[k]], [b[i], b[j], b[k]])))
        .collect();
    Ok(add(pairwise_sum3(&ds), pairwise_sum3(&dl)))
}

/// Signed solid angle of every image triangle.
pub fn triangle_solid_angles(m: &Field) -> Result<Vec<f64>> {
    let v = m.values();
    m.mesh()
        .triangles()
        .par_iter()
        .enumerate()
        .map(|(t, &[a, b, c])| {
            let w = solid_angle(v[a], v[b], v[c]);
            if w.abs() > PI {
                Err(Error::IllConditionedTriangle { triangle: t, solid_angle: w })
            } else {
                Ok(w)
            }
        })
        .collect()
}

/// Degree of the field: total image solid angle over `4 pi`.
pub fn charge(m: &Field) -> Result<f64> {
    Ok(pairwise_sum(&triangle_solid_angles(m)?) / (4.0 * PI))
}

/// Weights for vorticity moments. The built-in weights are written as
/// functions on the sphere and stay bounded at the chart singularity.
pub enum ChartWeight<'a> {
    One,
    /// `lambda |x|^2 = 1 - y3`.
    LambdaR2,
    /// `|x|^2 lambda^2 = 1 - y3^2`.
    R2Lambda2,
    /// Arbitrary chart function; fails near the south pole.
    Chart(&'a (dyn Fn(ChartPoint) -> f64 + Sync)),
}

impl ChartWeight<'_> {
    fn eval(&self, y: Vec3) -> Result<f64> {
        Ok(match self {
            ChartWeight::One => 1.0,
            ChartWeight::LambdaR2 => 1.0 - y[2],
            ChartWeight::R2Lambda2 => 1.0 - y[2] * y[2],
            ChartWeight::Chart(f) => f(sphere_to_stereo(SpherePoint(y))?),
        })
    }
}

/// `sum_T Omega_T w(x_T)`: the integral of `w omega(m)` over the chart,
/// with `x_T` the chart image of the triangle centroid.
pub fn vorticity_integral(m: &Field, w: &ChartWeight) -> Result<f64> {
    let omega = triangle_solid_angles(m)?;
    let centers = m.mesh().triangle_centers();
    let terms: Result<Vec<f64>> = omega.par_iter().zip(centers).map(|(o, c)| Ok(o * w.eval(*c)?)).collect();
    Ok(pairwise_sum(&terms?))
}

pub fn spin_momentum(m: &Field) -> Vec3 {
    let terms: Vec<Vec3> =
        m.values().par_iter().zip(m.mesh().vertex_area()).map(|(v, a)| scale(*v, *a)).collect();
    pairwise_sum3(&terms)
}

/// `sum_T Omega_T nu(c_T)`.
pub fn orbital_momentum(m: &Field) -> Result<Vec3> {
    let omega = triangle_solid_angles(m)?;
    let terms: Vec<Vec3> =
        omega.par_iter().zip(m.mesh().triangle_centers()).map(|(o, c)| scale(*c, *o)).collect();
    Ok(pairwise_sum3(&terms))
}

/// Third orbital component through the chart: `4 pi Q - int lambda |x|^2 omega`.
pub fn orbital_momentum_3_chart(m: &Field) -> Result<f64> {
    let q = charge(m)?;
    Ok(4.0 * PI * q - vorticity_integral(m, &ChartWeight::LambdaR2)?)
}

pub fn angular_momentum(m: &Field) -> Result<Vec3> {
    Ok(add(spin_momentum(m), orbital_momentum(m)?))
}

pub fn diagnostics(m: &Field, p: EnergyParams) -> Result<Diagnostics> {
    let e = energy(m, p);
    let omega = triangle_solid_angles(m)?;
    let q = pairwise_sum(&omega) / (4.0 * PI);
    let s = spin_momentum(m);
    let lt: Vec<Vec3> = omega.iter().zip(m.mesh().triangle_centers()).map(|(o, c)| scale(*c, *o)).collect();
    let l = pairwise_sum3(&lt);
    Ok(Diagnostics { exchange: e.exchange, anisotropy: e.anisotropy, total: e.total, q, s, l, j: add(s, l) })
}

/// `grad E = -(Delta m + kappa (m . nu) nu)` with the cotangent Laplacian
/// divided by the lumped area. Not projected.
pub fn grad_energy(m: &Field, p: EnergyParams) -> Vec<Vec3> {
    let mesh = m.mesh();
    let v = m.values();
    let mut lap = vec![[0.0; 3]; v.len()];
    for e in mesh.edges() {
        let d = scale(sub(v[e.i], v[e.j]), e.cotan);
        lap[e.i] = add(lap[e.i], d);
        lap[e.j] = sub(lap[e.j], d);
    }
    lap.par_iter_mut()
        .zip(v.par_iter())
        .zip(mesh.vertices().par_iter().zip(mesh.vertex_area().par_iter()))
        .for_each(|((g, mi), (y, a))| {
            *g = sub(scale(*g, 1.0 / a), scale(*y, p.kappa * dot(*mi, *y)));
        });
    lap
}

/// Gradient of `S_axis`: the constant field `e_axis`.
pub fn grad_s(axis_index: usize, n_vertices: usize) -> Vec<Vec3> {
    vec![axis(axis_index); n_vertices]
}

/// Tangent L2 gradient of `c . L` for the discrete orbital momentum
/// `L = sum_T Omega_T nu(c_T)`, from the exact derivative of the solid angle.
pub fn grad_l_along(m: &Field, c: Vec3) -> Result<Vec<Vec3>> {
    let mesh = m.mesh();
    let v = m.values();
    let per_tri: Result<Vec<[Vec3; 3]>> = mesh
        .triangles()
        .par_iter()
        .zip(mesh.triangle_centers())
        .enumerate()
        .map(|(t, (&[a, b, cc], center))| {
            let (w, g) = solid_angle_with_grad(v[a], v[b], v[cc]);
            if w.abs() > PI {
                return Err(Error::IllConditionedTriangle { triangle: t, solid_angle: w });
            }
            let s = dot(c, *center);
            Ok([scale(g[0], s), scale(g[1], s), scale(g[2], s)])
        })
        .collect();
    let mut out = vec![[0.0; 3]; v.len()];
    for (tri, g) in mesh.triangles().iter().zip(per_tri?) {
        for k in 0..3 {
            out[tri[k]] = add(out[tri[k]], g[k]);
        }
    }
    out.par_iter_mut()
        .zip(v.par_iter().zip(mesh.vertex_area().par_iter()))
        .for_each(|(g, (mi, a))| *g = scale(tangent(*mi, *g), 1.0 / a));
    Ok(out)
}

/// Gradient of `L_axis`. With `full_variation` the normal component of the
/// unconstrained variation, `-3 (1 - y_a) (local image area density) m`,
/// is added; it is invisible to tangent perturbations and to the bracket.
pub fn grad_l(m: &Field, axis_index: usize, full_variation: bool) -> Result<Vec<Vec3>> {
    let mut g = grad_l_along(m, axis(axis_index))?;
    if full_variation {
        let mesh = m.mesh();
        let omega = triangle_solid_angles(m)?;
        let mut density = vec![0.0; m.len()];
        for (tri, o) in mesh.triangles().iter().zip(&omega) {
            for &i in tri {
                density[i] += o / 3.0;
            }
        }
        for (i, gi) in g.iter_mut().enumerate() {
            let y = mesh.vertex(i);
            let s = -3.0 * (1.0 - y[axis_index]) * density[i] / mesh.vertex_area()[i];
            *gi = add(*gi, scale(m.value(i), s));
        }
    }
    Ok(g)
}

/// Continuum form `-(m x d_chi m)` of the `L_3` gradient, with the one-ring
/// azimuthal derivative.
pub fn grad_l3_continuum(m: &Field) -> Vec<Vec3> {
    let d = azimuthal_derivative(m);
    m.values().par_iter().zip(d.par_iter()).map(|(v, dv)| scale(cross(*v, *dv), -1.0)).collect()
}

/// `{F, G} = int m . (grad F x grad G)`.
pub fn poisson_bracket(grad_f: &[Vec3], grad_g: &[Vec3], m: &Field) -> f64 {
    let terms: Vec<f64> = m
        .values()
        .par_iter()
        .zip(grad_f.par_iter().zip(grad_g.par_iter()))
        .zip(m.mesh().vertex_area().par_iter())
        .map(|((mi, (f, g)), a)| a * dot(*mi, cross(*f, *g)))
        .collect();
    pairwise_sum(&terms)
}

/// `{m, J_3} = e3 x m - d_chi m`.
pub fn generator_j3(m: &Field) -> Vec<Vec3> {
    generator_about(m, E3)
}

/// `e x m - d_chi,e m` for rotations about the unit axis `e`.
pub fn generator_about(m: &Field, e: Vec3) -> Vec<Vec3> {
    let d = azimuthal_derivative_about(m, e);
    m.values().par_iter().zip(d.par_iter()).map(|(v, dv)| sub(cross(e, *v), *dv)).collect()
}

/// `{m, J_3}` from the exact gradient of the discrete `J_3`:
/// `-m x (e3 + grad L_3)`.
pub fn generator_j3_discrete(m: &Field) -> Result<Vec<Vec3>> {
    let gl = grad_l_along(m, E3)?;
    Ok(m.values().par_iter().zip(gl.par_iter()).map(|(v, g)| scale(cross(*v, add(E3, *g)), -1.0)).collect())
}

/// Area-weighted inner product of two vertex vector fields.
pub fn inner(m: &Field, a: &[Vec3], b: &[Vec3]) -> f64 {
    let terms: Vec<f64> = a
        .par_iter()
        .zip(b.par_iter())
        .zip(m.mesh().vertex_area().par_iter())
        .map(|((x, y), w)| w * dot(*x, *y))
        .collect();
    pairwise_sum(&terms)
}

/// Area-weighted L2 norm.
pub fn l2_norm(m: &Field, a: &[Vec3]) -> f64 {
    inner(m, a, a).sqrt()
}

/// Relative residual of the 1-equivariance generator about `e`:
/// `|e x m - d_chi,e m| / |grad m|` with `|grad m|^2 = 2 * exchange`.
pub fn equivariance_defect_about(m: &Field, e: Vec3) -> f64 {
    let g = generator_about(m, e);
    let grad_norm = (2.0 * exchange_energy(m)).sqrt();
    if grad_norm < 1e-14 {
        return 0.0;
    }
    l2_norm(m, &g) / grad_norm
}

/// Defect above which a field is not treated as equivariant.
pub const EQUIVARIANCE_GUARD: f64 = 1e-2;

/// `-1/2 int omega(m) |x|^2 lambda^2 dx`. Requires the equivariance defect
/// about `e3` to stay below [`EQUIVARIANCE_GUARD`].
pub fn elliptical_hessian_rhs(m: &Field) -> Result<f64> {
    let defect = equivariance_defect_about(m, E3);
    if defect > EQUIVARIANCE_GUARD {
        return Err(Error::NotEquivariant(defect));
    }
    Ok(-0.5 * vorticity_integral(m, &ChartWeight::R2Lambda2)?)
}

#[cfg(test)]
mod tests;
