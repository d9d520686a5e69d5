//! High-precision radial quadrature for equivariant profiles: energy,
//! charge and angular momentum of k-equivariant fields as 1D integrals.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{EquivariantProfile, ProfileFlavor, RadialShape};
use crate::functionals::EnergyParams;
use crate::vec3::{dot, norm2};

/// Gauss-Legendre order per panel.
pub const GAUSS_ORDER: usize = 20;
/// Uniform panels in the polar angle before knots are inserted.
pub const DEFAULT_PANELS: usize = 64;

/// Composite Gauss-Legendre rule for `int_0^inf f(r) dr` after the
/// substitution `r = tan(psi / 2)`, `psi in [0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialQuadrature {
    /// Radii of the nodes.
    pub r: Vec<f64>,
    /// Weights including the Jacobian `dr / dpsi = (1 + r^2) / 2`.
    pub w: Vec<f64>,
    pub panels: usize,
}

impl RadialQuadrature {
    /// `panels` uniform polar-angle panels, split further at the given radii.
    pub fn new(panels: usize, knots: &[f64]) -> Self {
        let rule = GaussLegendre::new(GAUSS_ORDER).expect("order >= 2");
        let mut breaks: Vec<f64> = (0..=panels).map(|i| PI * i as f64 / panels as f64).collect();
        breaks.extend(knots.iter().filter(|k| k.is_finite() && **k > 0.0).map(|k| 2.0 * k.atan()));
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut r = Vec::with_capacity(breaks.len() * GAUSS_ORDER);
        let mut w = Vec::with_capacity(breaks.len() * GAUSS_ORDER);
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let half = 0.5 * (b - a);
            for &(x, wt) in rule.as_node_weight_pairs() {
                let psi = a + half * (x + 1.0);
                let rr = (0.5 * psi).tan();
                r.push(rr);
                w.push(wt * half * 0.5 * (1.0 + rr * rr));
            }
        }
        RadialQuadrature { r, w, panels: breaks.len() - 1 }
    }

    pub fn for_profile(p: &EquivariantProfile, panels: usize) -> Self {
        Self::new(panels, &p.knots())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.r.iter().zip(&self.w).map(|(r, w)| w * f(*r)).sum()
    }
}

/// Independent check integrator: composite trapezoid in the polar angle on
/// each knot interval with one Richardson step.
pub fn trapezoid_reference(f: impl Fn(f64) -> f64, knots: &[f64], per_segment: usize) -> f64 {
    let mut breaks = vec![0.0, PI];
    breaks.extend(knots.iter().filter(|k| k.is_finite() && **k > 0.0).map(|k| 2.0 * k.atan()));
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let g = |psi: f64| {
        let r = (0.5 * psi).tan();
        if !r.is_finite() {
            return 0.0;
        }
        f(r) * 0.5 * (1.0 + r * r)
    };
    let trap = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        // endpoints are where the profile has kinks; evaluate just inside
        let inner = 1e-13 * (b - a);
        let mut s = 0.5 * (g(a + inner) + g(b - inner));
        for i in 1..n {
            s += g(a + i as f64 * h);
        }
        s * h
    };
    breaks
        .windows(2)
        .map(|s| {
            let coarse = trap(s[0], s[1], per_segment);
            let fine = trap(s[0], s[1], 2 * per_segment);
            (4.0 * fine - coarse) / 3.0
        })
        .sum()
}

fn lambda(r: f64) -> f64 {
    2.0 / (1.0 + r * r)
}

fn has_zero_phase(p: &EquivariantProfile) -> bool {
    match &p.shape {
        RadialShape::Sampled { alpha, .. } => alpha.iter().all(|a| *a == 0.0),
        _ => true,
    }
}

/// Energy density integrated over the circle at radius `r`, times `r`.
fn ambient_energy_density(p: &EquivariantProfile, kappa: f64, r: f64) -> Result<f64> {
    let k = p.k as f64;
    let lam = lambda(r);
    let vt = 2.0 * r.atan();
    let (sv, cv) = vt.sin_cos();
    let st = p.radial_state(r)?;
    let m = st.m;
    let m3 = m[2];
    let exch = PI * (norm2(st.dm) + k * k * (1.0 - m3 * m3) / (r * r)) * r;
    // angular average of (m . nu)^2
    let mn2 = if p.k == 1 {
        let d = dot(m, [sv, 0.0, cv]);
        d * d
    } else {
        m3 * m3 * cv * cv + 0.5 * (1.0 - m3 * m3) * sv * sv
    };
    let anis = 0.5 * kappa * (1.0 - mn2) * lam * lam * 2.0 * PI * r;
    Ok(exch + anis)
}

/// Co-rotational frame reduction `E0 + E1` with `u = (sin t cos chi,
/// sin t sin chi, cos t)`.
fn frame_energy_density(p: &EquivariantProfile, kappa: f64, r: f64) -> f64 {
    let th = p.theta(r);
    let dth = p.dtheta(r);
    let lam = lambda(r);
    let (s, c) = th.sin_cos();
    let e0 = 0.5 * (dth * dth + s * s / (r * r)) + (dth + s * c / r) * lam + 0.5 * kappa * s * s * lam * lam;
    let e1 = (c * c - r * s * c) * lam * lam;
    2.0 * PI * r * (e0 + e1)
}

/// Energy of the field described by the profile.
pub fn oracle_energy(p: &EquivariantProfile, params: EnergyParams) -> Result<f64> {
    oracle_energy_with(p, params, DEFAULT_PANELS)
}

pub fn oracle_energy_with(p: &EquivariantProfile, params: EnergyParams, panels: usize) -> Result<f64> {
    let q = RadialQuadrature::for_profile(p, panels);
    if p.flavor == ProfileFlavor::Frame {
        if p.k != 1 {
            return Err(Error::ProfileOutOfRange(format!("frame profile with k = {} is not equivariant", p.k)));
        }
        if has_zero_phase(p) {
            return Ok(q.integrate(|r| frame_energy_density(p, params.kappa, r)));
        }
    }
    let vals: Result<Vec<f64>> = q.r.iter().map(|&r| ambient_energy_density(p, params.kappa, r)).collect();
    Ok(vals?.iter().zip(&q.w).map(|(v, w)| v * w).sum())
}

/// Same energy through the trapezoid reference integrator and the ambient
/// (converted) representation.
pub fn oracle_energy_reference(p: &EquivariantProfile, params: EnergyParams, per_segment: usize) -> Result<f64> {
    p.radial_state(1.0)?;
    let mut knots = p.knots();
    knots.extend((1..16).map(|i| (i as f64 / 16.0 * PI * 0.5).tan()));
    Ok(trapezoid_reference(|r| ambient_energy_density(p, params.kappa, r).unwrap_or(f64::NAN), &knots, per_segment))
}

/// `k (m3(e3) - m3(-e3)) / 2`.
pub fn oracle_charge(p: &EquivariantProfile) -> f64 {
    let (n, s) = p.pole_m3();
    p.k as f64 * (n - s) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMomentum {
    pub s3: f64,
    pub l3: f64,
    /// Closed form `(1 - k) S3 + 4 pi k p`.
    pub j3: f64,
    /// `S3 + L3` with `L3` from the vorticity moment.
    pub j3_direct: f64,
    pub polarity: f64,
}

/// Third angular momentum component by two routes. Fails with
/// `RouteMismatch` when they differ by more than `1e-6 (1 + |J3|)`.
pub fn oracle_j3(p: &EquivariantProfile) -> Result<OracleMomentum> {
    let quad = RadialQuadrature::for_profile(p, DEFAULT_PANELS);
    let k = p.k as f64;
    let mut s3 = 0.0;
    let mut moment = 0.0;
    for (&r, &w) in quad.r.iter().zip(&quad.w) {
        let st = p.radial_state(r)?;
        let lam = lambda(r);
        s3 += w * 2.0 * PI * lam * lam * st.m[2] * r;
        moment += w * lam * r * r * st.dm[2];
    }
    let l3 = 4.0 * PI * oracle_charge(p) + 2.0 * PI * k * moment;
    let pol = p.polarity();
    let closed = (1.0 - k) * s3 + 4.0 * PI * k * pol;
    let direct = s3 + l3;
    if (closed - direct).abs() > 1e-6 * (1.0 + closed.abs()) {
        return Err(Error::RouteMismatch { closed, direct });
    }
    Ok(OracleMomentum { s3, l3, j3: closed, j3_direct: direct, polarity: pol })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub energy: f64,
    pub q: f64,
    pub s3: f64,
    pub l3: f64,
    pub j3: f64,
}

pub fn oracle_report(p: &EquivariantProfile, params: EnergyParams) -> Result<OracleReport> {
    let energy = oracle_energy(p, params)?;
    let j = oracle_j3(p)?;
    Ok(OracleReport { energy, q: oracle_charge(p), s3: j.s3, l3: j.l3, j3: j.j3 })
}
