//! Derivatives along rotation orbits.

use rayon::prelude::*;

use crate::error::Result;
use crate::field::{interpolate, Field};
use crate::geometry::SpherePoint;
use crate::vec3::{cross, norm, scale, sub, Rotation, Vec3, E3};

/// Below this `|e x y|` the orbit degenerates to a point.
pub const POLE_TOL: f64 = 1e-8;

/// `d/dchi m` for rotations about `e3`: the derivative of `m` along the
/// tangent field `e3 x y`.
pub fn azimuthal_derivative(m: &Field) -> Vec<Vec3> {
    azimuthal_derivative_about(m, E3)
}

/// Derivative of `m` along `e x y` for a unit axis `e`, from the one-ring
/// quadratic reconstruction of the mesh.
pub fn azimuthal_derivative_about(m: &Field, e: Vec3) -> Vec<Vec3> {
    let mesh = m.mesh();
    let vals = m.values();
    (0..mesh.n_vertices())
        .into_par_iter()
        .map(|i| {
            let v = cross(e, mesh.vertex(i));
            if norm(v) < POLE_TOL {
                [0.0; 3]
            } else {
                mesh.directional_derivative(vals, i, v)
            }
        })
        .collect()
}

/// Central difference along the rotation orbit of the interpolated field,
/// with arc step `sqrt(eps)` times the local edge length. Exact for fields
/// that the interpolant reproduces (such as `nu`), but only first order in
/// the mesh size otherwise.
pub fn azimuthal_derivative_orbit(m: &Field, e: Vec3) -> Result<Vec<Vec3>> {
    let mesh = m.mesh();
    (0..mesh.n_vertices())
        .into_par_iter()
        .map(|i| {
            let y = mesh.vertex(i);
            let rho = norm(cross(e, y));
            if rho < POLE_TOL {
                return Ok([0.0; 3]);
            }
            let delta = f64::EPSILON.sqrt() * mesh.local_edge_len()[i] / rho;
            let fwd = interpolate(m, SpherePoint(Rotation::about_axis(e, delta).apply(y)))?;
            let bwd = interpolate(m, SpherePoint(Rotation::about_axis(e, -delta).apply(y)))?;
            Ok(scale(sub(fwd, bwd), 0.5 / delta))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{constant_field, from_equivariant, hedgehog, EquivariantProfile, ProfileFlavor};
    use crate::geometry::build_icosphere;

    fn max_err(a: &[Vec3], b: &[Vec3]) -> f64 {
        a.iter().zip(b).map(|(u, v)| norm(sub(*u, *v))).fold(0.0, f64::max)
    }

    #[test]
    fn derivative_of_normal_is_rotation_generator() {
        let mesh = build_icosphere(5).unwrap();
        let nu = hedgehog(1, mesh.clone());
        let exact: Vec<Vec3> = mesh.vertices().iter().map(|&y| cross(E3, y)).collect();
        assert!(max_err(&azimuthal_derivative(&nu), &exact) < 1e-4);
        let orbit = max_err(&azimuthal_derivative_orbit(&nu, E3).unwrap(), &exact);
        assert!(orbit < 1e-4, "{orbit}");
        let c = constant_field([0.6, 0.0, 0.8], mesh).unwrap();
        assert!(azimuthal_derivative(&c).iter().all(|v| norm(*v) == 0.0));
    }

    #[test]
    fn equivariant_field_generator() {
        let mesh = build_icosphere(5).unwrap();
        let p = EquivariantProfile::tabulate(1, ProfileFlavor::Ambient, 4096, 1e-4, 1e9, |r| 2.0 * (0.5 * r).atan(), |r| 0.4 / (1.0 + r * r))
            .unwrap();
        let m = from_equivariant(&p, mesh.clone()).unwrap();
        let d = azimuthal_derivative(&m);
        let exact: Vec<Vec3> = m.values().iter().map(|&v| cross(E3, v)).collect();
        assert!(max_err(&d, &exact) < 5e-3, "{}", max_err(&d, &exact));
    }
}
