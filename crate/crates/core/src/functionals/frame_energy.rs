//! Energy of a frame field: `E = E0(u) + E1(u)` on the polar chart grid.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EnergyParams;
use crate::error::{Error, Result};
use crate::field::FrameField;
use crate::vec3::{dot, norm, norm2, pairwise_sum, scale, sub, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameEnergy {
    pub e0: f64,
    pub e1: f64,
    pub total: f64,
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Densities `(e0, e1)` at one point. `ur`, `uc` are the radial and angular
/// derivatives of the unit frame components `u`.
fn densities(r: f64, chi: f64, u: Vec3, ur: Vec3, uc: Vec3, kappa: f64) -> (f64, f64) {
    let lam = 2.0 / (1.0 + r * r);
    let (s, c) = chi.sin_cos();
    let d1 = sub(scale(ur, c), scale(uc, s / r));
    let d2 = add(scale(ur, s), scale(uc, c / r));
    let grad2 = norm2(d1) + norm2(d2);
    let div = d1[0] + d2[1];
    let adv = u[0] * d1[2] + u[1] * d2[2];
    let e0 = 0.5 * grad2 + (u[2] * div - adv) * lam + 0.5 * kappa * (1.0 - u[2] * u[2]) * lam * lam;
    let curl = u[0] * uc[1] - u[1] * uc[0];
    let xu = r * (u[0] * c + u[1] * s);
    let e1 = ((1.0 - u[2] * u[2]) - curl) * lam + (u[2] * u[2] - xu * u[2]) * lam * lam;
    (e0, e1)
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    crate::vec3::add(a, b)
}

/// Tensor-product quadrature: three-point Gauss per radial cell of the
/// (linearly interpolated, renormalized) grid data, trapezoid in `chi` with
/// fourth-order angular differences. The constant tail beyond the grid is
/// integrated in closed form.
pub fn frame_energy(u: &FrameField, p: EnergyParams) -> Result<FrameEnergy> {
    let defect = u.tail_defect();
    if defect > 1e-12 {
        return Err(Error::UnsupportedTail(defect));
    }
    let radii = u.radii();
    let n = u.n_chi();
    let dchi = 2.0 * PI / n as f64;
    let cells: Vec<(f64, f64)> = (0..radii.len() - 1)
        .into_par_iter()
        .map(|i| {
            let (r0, r1) = (radii[i], radii[i + 1]);
            let dr = r1 - r0;
            let (a, b) = (u.ring(i), u.ring(i + 1));
            let mut e0 = 0.0;
            let mut e1 = 0.0;
            for &(t, w) in &GAUSS3 {
                let r = r0 + t * dr;
                let raw: Vec<Vec3> = (0..n).map(|j| add(scale(a[j], 1.0 - t), scale(b[j], t))).collect();
                let uu: Vec<Vec3> = raw.iter().map(|v| scale(*v, 1.0 / norm(*v))).collect();
                let (mut s0, mut s1) = (0.0, 0.0);
                for j in 0..n {
                    let at = |k: isize| uu[(j as isize + k).rem_euclid(n as isize) as usize];
                    let uc = scale(
                        add(sub(scale(sub(at(1), at(-1)), 8.0), at(2)), at(-2)),
                        1.0 / (12.0 * dchi),
                    );
                    let slope = scale(sub(b[j], a[j]), 1.0 / dr);
                    let nr = norm(raw[j]);
                    let ur = scale(sub(slope, scale(uu[j], dot(uu[j], slope))), 1.0 / nr);
                    let (d0, d1) = densities(r, j as f64 * dchi, uu[j], ur, uc, p.kappa);
                    s0 += d0;
                    s1 += d1;
                }
                e0 += w * dr * r * dchi * s0;
                e1 += w * dr * r * dchi * s1;
            }
            (e0, e1)
        })
        .collect();
    let c0: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let c1: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let r_max = u.r_max();
    let e0 = pairwise_sum(&c0);
    let e1 = pairwise_sum(&c1) + 4.0 * PI / (1.0 + r_max * r_max);
    Ok(FrameEnergy { e0, e1, total: e0 + e1 })
}
