//! Landau-Lifshitz time stepping `dm/dt = -m x grad E(m)`, conservation
//! traces and the fit of the rotating ansatz `{m, E} = nu {m, J_3}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functionals::{
    diagnostics, generator_j3, generator_j3_discrete, grad_energy, inner, l2_norm, Diagnostics, EnergyParams,
};
use crate::vec3::{add, cross, dot, norm, norm2, normalize, scale, sub, Vec3};

/// Fixed-point tolerance of the midpoint solve.
pub const MIDPOINT_TOL: f64 = 1e-12;
pub const MIDPOINT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    #[default]
    ProjectedRK4,
    SemiImplicitMidpoint,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" | "projectedrk4" | "projected-rk4" => Ok(Scheme::ProjectedRK4),
            "midpoint" | "semiimplicitmidpoint" | "semi-implicit-midpoint" => Ok(Scheme::SemiImplicitMidpoint),
            _ => Err(Error::InvalidInput(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub scheme: Scheme,
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Heuristic bound `h^2 / 4` from the mean edge length. Exceeding it is
    /// allowed; callers may print the returned message.
    pub fn stability_warning(&self, m: &Field) -> Option<String> {
        let h = m.mesh().mean_edge_length();
        let bound = 0.25 * h * h;
        (self.dt > bound).then(|| format!("dt = {} exceeds the stability estimate h^2/4 = {bound:.3e}", self.dt))
    }
}

/// `-m x h` per vertex.
fn precession(m: &[Vec3], h: &[Vec3]) -> Vec<Vec3> {
    m.par_iter().zip(h.par_iter()).map(|(a, b)| cross(*b, *a)).collect()
}

fn lin(a: &[Vec3], s: f64, b: &[Vec3]) -> Vec<Vec3> {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| add(*x, scale(*y, s))).collect()
}

/// One step of `dm/dt = -m x h(m)` for an arbitrary effective field `h`
/// (the L2 gradient of the Hamiltonian).
pub fn step_with<H>(m: &Field, dt: f64, scheme: Scheme, h: H) -> Result<Field>
where
    H: Fn(&Field) -> Result<Vec<Vec3>>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    match scheme {
        Scheme::ProjectedRK4 => rk4(m, dt, &h),
        Scheme::SemiImplicitMidpoint => midpoint(m, dt, &h),
    }
}

fn rk4<H>(m: &Field, dt: f64, h: &H) -> Result<Field>
where
    H: Fn(&Field) -> Result<Vec<Vec3>>,
{
    let v0 = m.values();
    // intermediate stages are not normalized
    let rhs = |v: &[Vec3]| -> Result<Vec<Vec3>> {
        let f = m.with_raw_values(v.to_vec());
        Ok(precession(v, &h(&f)?))
    };
    let k1 = rhs(v0)?;
    let k2 = rhs(&lin(v0, 0.5 * dt, &k1))?;
    let k3 = rhs(&lin(v0, 0.5 * dt, &k2))?;
    let k4 = rhs(&lin(v0, dt, &k3))?;
    let out = (0..v0.len())
        .into_par_iter()
        .map(|i| {
            let inc = add(add(k1[i], scale(add(k2[i], k3[i]), 2.0)), k4[i]);
            normalize(add(v0[i], scale(inc, dt / 6.0)))
        })
        .collect();
    Ok(m.with_values(out))
}

/// Solves `(I - [w]x) x = b`: `x = (b + w x b + (w . b) w) / (1 + |w|^2)`.
fn cayley(b: Vec3, w: Vec3) -> Vec3 {
    scale(add(add(b, cross(w, b)), scale(w, dot(w, b))), 1.0 / (1.0 + norm2(w)))
}

/// Implicit midpoint: `x - m = -dt ((m + x)/2) x h((m + x)/2)`. For frozen
/// `h` each vertex is an exact Cayley rotation of `m_i`; the coupling is
/// resolved by Jacobi iteration.
fn midpoint<H>(m: &Field, dt: f64, h: &H) -> Result<Field>
where
    H: Fn(&Field) -> Result<Vec<Vec3>>,
{
    let v0 = m.values();
    let a = 0.5 * dt;
    let mut x = v0.to_vec();
    let mut change = f64::INFINITY;
    for _ in 0..MIDPOINT_MAX_ITER {
        let mid: Vec<Vec3> = v0.par_iter().zip(x.par_iter()).map(|(p, q)| scale(add(*p, *q), 0.5)).collect();
        let hm = h(&m.with_raw_values(mid))?;
        let next: Vec<Vec3> = v0
            .par_iter()
            .zip(hm.par_iter())
            .map(|(mi, hi)| {
                let w = scale(*hi, a);
                cayley(add(*mi, cross(w, *mi)), w)
            })
            .collect();
        change = next.par_iter().zip(x.par_iter()).map(|(p, q)| norm(sub(*p, *q))).reduce(|| 0.0, f64::max);
        x = next;
        if !change.is_finite() {
            break;
        }
        if change < MIDPOINT_TOL {
            return Ok(m.with_values(x));
        }
    }
    Err(Error::MidpointNoConvergence(change))
}

/// One Landau-Lifshitz step.
pub fn ll_step(m: &Field, dt: f64, p: EnergyParams, scheme: Scheme) -> Result<Field> {
    step_with(m, dt, scheme, |f| Ok(grad_energy(f, p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub diagnostics: Diagnostics,
}

impl TracePoint {
    pub const CSV_HEADER: &'static str = "t,E_exchange,E_anis,E_total,Q,S1,S2,S3,L1,L2,L3,J1,J2,J3";

    pub fn csv_row(&self) -> String {
        format!("{:.12e},{}", self.t, self.diagnostics.csv_row())
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub trace: Vec<TracePoint>,
    pub field: Field,
}

impl Evolution {
    /// Largest drifts from the initial record: `(|dE| / E0, |dJ| / (1 + |J0|), |dQ|)`.
    pub fn drifts(&self) -> (f64, f64, f64) {
        let d0 = self.trace[0].diagnostics;
        self.trace.iter().fold((0.0, 0.0, 0.0), |acc, tp| {
            let d = tp.diagnostics;
            let de = (d.total - d0.total).abs() / d0.total.abs().max(1e-300);
            let dj = norm(sub(d.j, d0.j)) / (1.0 + norm(d0.j));
            let dq = (d.q - d0.q).abs();
            (acc.0.max(de), acc.1.max(dj), acc.2.max(dq))
        })
    }
}

/// Repeated [`ll_step`]; diagnostics at `t = 0` and every `record_every`
/// steps (and at the final step).
pub fn evolve(m0: &Field, cfg: &EvolveConfig, p: EnergyParams) -> Result<Evolution> {
    cfg.validate()?;
    let n = cfg.n_steps();
    let mut m = m0.clone();
    let mut trace = vec![TracePoint { t: 0.0, diagnostics: diagnostics(&m, p)? }];
    for step in 1..=n {
        m = ll_step(&m, cfg.dt, p, cfg.scheme)?;
        if step % cfg.record_every == 0 || step == n {
            trace.push(TracePoint { t: step as f64 * cfg.dt, diagnostics: diagnostics(&m, p)? });
        }
    }
    Ok(Evolution { trace, field: m })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinningFit {
    pub nu_hat: f64,
    pub residual_rel: f64,
}

/// Least-squares fit of `{m, E} = nu {m, J_3}` in L2. The generator is the
/// exact Hamiltonian vector field of the discrete `J_3`, so that constrained
/// critical points of the discrete problem give a vanishing residual; if a
/// triangle is folded it falls back to the one-ring generator.
pub fn spinning_fit(m: &Field, p: EnergyParams) -> SpinningFit {
    let g = generator_j3_discrete(m).unwrap_or_else(|_| generator_j3(m));
    fit_against(m, p, &g)
}

/// Same fit against the one-ring generator `e3 x m - d_chi m`.
pub fn spinning_fit_one_ring(m: &Field, p: EnergyParams) -> SpinningFit {
    fit_against(m, p, &generator_j3(m))
}

/// Below this L2 norm a vector field is treated as zero.
pub const FIT_ZERO: f64 = 1e-10;

fn fit_against(m: &Field, p: EnergyParams, g: &[Vec3]) -> SpinningFit {
    let a = precession(m.values(), &grad_energy(m, p));
    let an = l2_norm(m, &a);
    let gn = l2_norm(m, g);
    // a static field rotates at any frequency; report zero
    if an < FIT_ZERO {
        return SpinningFit { nu_hat: 0.0, residual_rel: 0.0 };
    }
    if gn < FIT_ZERO {
        return SpinningFit { nu_hat: 0.0, residual_rel: 1.0 };
    }
    let nu_hat = inner(m, &a, g) / (gn * gn);
    let r: Vec<Vec3> = a.iter().zip(g).map(|(x, y)| sub(*x, scale(*y, nu_hat))).collect();
    SpinningFit { nu_hat, residual_rel: l2_norm(m, &r) / an.max(1e-14) }
}

#[cfg(test)]
mod tests;
