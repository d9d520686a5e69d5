//! Energy minimization over unit fields with `Q = 0`, optionally under the
//! angular momentum constraint `J(m) = J0`: augmented Lagrangian outer
//! loop, projected limited-memory BFGS descent with Armijo backtracking
//! inside (plain Barzilai-Borwein gradient steps as the fallback).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{elliptical_distort, from_equivariant, rotate_joint, trial_profile, Field};
use crate::functionals::{
    angular_momentum, charge, energy, energy_difference, triangle_solid_angles, equivariance_defect_about, momentum_difference, EQUIVARIANCE_GUARD, grad_energy, grad_l_along, inner, EnergyParams,
};
use crate::geometry::build_icosphere;
use crate::oracle::oracle_energy;
use crate::vec3::{add, axpy, pairwise_sum, cross, dot, norm, normalize, scale, sub, tangent, Rotation, Vec3, E3};

pub const SCHEMA_VERSION: u32 = 1;

/// Trial-field scales searched by [`seed_field`]: 12 log-spaced values.
pub const EPS_GRID_MIN: f64 = 2e-4;
pub const EPS_GRID_MAX: f64 = 0.45;
pub const EPS_GRID_LEN: usize = 12;

/// Fields with a defect above this are reported as not equivariant.
pub const DEFECT_THRESHOLD: f64 = EQUIVARIANCE_GUARD;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    pub mu0: f64,
    pub mu_growth: f64,
    pub mu_cap: f64,
    /// Stop the inner loop when the tangent gradient L2 norm drops below.
    pub inner_tol: f64,
    /// Required `|J - J0|`.
    pub constraint_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub armijo_c: f64,
    pub shrink: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Inner iterations between charge checks.
    pub q_check_every: usize,
    /// Step-size restarts allowed after a sector change before giving up.
    pub max_sector_retries: usize,
    /// Curvature pairs kept for the quasi-Newton direction; 0 gives plain
    /// Barzilai-Borwein gradient steps.
    pub lbfgs_memory: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            mu0: 10.0,
            mu_growth: 2.0,
            mu_cap: 1e6,
            inner_tol: 1e-6,
            constraint_tol: 1e-4,
            max_outer: 30,
            max_inner: 5000,
            armijo_c: 1e-4,
            shrink: 0.5,
            step_min: 1e-6,
            step_max: 1e2,
            q_check_every: 25,
            max_sector_retries: 4,
            lbfgs_memory: 10,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("mu0", self.mu0),
            ("mu_cap", self.mu_cap),
            ("inner_tol", self.inner_tol),
            ("constraint_tol", self.constraint_tol),
            ("armijo_c", self.armijo_c),
            ("step_min", self.step_min),
            ("step_max", self.step_max),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.mu_growth > 1.0) {
            return Err(Error::InvalidInput(format!("mu_growth must exceed 1, got {}", self.mu_growth)));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidInput(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if self.step_min > self.step_max {
            return Err(Error::InvalidInput("step_min exceeds step_max".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.q_check_every == 0 {
            return Err(Error::InvalidInput("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub outer: usize,
    pub mu: f64,
    pub energy: f64,
    pub constraint_residual: f64,
    pub gradient_norm: f64,
    pub inner_iterations: usize,
    pub multiplier: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationCounts {
    pub outer: usize,
    pub inner: usize,
    pub sector_retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub schema_version: u32,
    pub converged: bool,
    pub e_final: f64,
    pub j_final: Vec3,
    pub j_target: Option<Vec3>,
    pub q_final: f64,
    pub multiplier: Vec3,
    /// `|P_tan(grad E - sum_i multiplier_i grad J_i)|_L2`.
    pub kkt_residual: f64,
    pub equivariance_defect: f64,
    pub defect_threshold: f64,
    pub iterations: IterationCounts,
    /// The last inner solve stopped with no admissible descent step.
    #[serde(default)]
    pub stalled: bool,
    pub trace: Vec<OuterRecord>,
}

/// The fixed trial-scale search grid.
pub fn eps_grid() -> Vec<f64> {
    let (a, b) = (EPS_GRID_MIN.ln(), EPS_GRID_MAX.ln());
    (0..EPS_GRID_LEN).map(|i| (a + (b - a) * i as f64 / (EPS_GRID_LEN - 1) as f64).exp()).collect()
}

/// Trial scale with the lowest energy below `8 pi`, judged by the radial
/// quadrature (mesh energies of unresolved cores are spuriously low).
/// Returns `None` when no grid value qualifies.
pub fn best_trial_eps(grid: &[f64], p: EnergyParams) -> Result<Option<(f64, f64)>> {
    let mut best: Option<(f64, f64)> = None;
    for &eps in grid {
        let e = oracle_energy(&trial_profile(eps)?, p)?;
        if e < 8.0 * PI && best.is_none_or(|(_, b)| e < b) {
            best = Some((eps, e));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct Seed {
    pub field: Field,
    pub eps: f64,
    pub distortion: f64,
    pub rotation: Rotation,
}

/// Initial field for the constrained problem: trial field at the best grid
/// scale (or `eps` if given), elliptically distorted until `|J| = |J0|`,
/// then jointly rotated so that `J` points along `J0`.
pub fn seed_field(j0: Vec3, p: EnergyParams, level: usize, eps: Option<f64>) -> Result<Seed> {
    let target = norm(j0);
    if !(target > 4.0 * PI) {
        return Err(Error::TargetTooSmall(target));
    }
    let mesh = build_icosphere(level)?;
    let eps = match eps {
        Some(e) => e,
        None => best_trial_eps(&eps_grid(), p)?.map(|b| b.0).ok_or_else(|| {
            Error::InvalidInput(format!("no trial scale in the grid has energy below 8 pi at kappa = {}", p.kappa))
        })?,
    };
    let base = from_equivariant(&trial_profile(eps)?, mesh)?;
    // distortion keeps J on the e3 axis, so the rotation is fixed up front;
    // bisecting on the rotated field absorbs the interpolation error of the
    // rotation into |J|
    let rotation = Rotation::aligning(angular_momentum(&base)?, j0);
    let excess = |s: f64| -> Result<(f64, Field)> {
        let m = rotate_joint(&elliptical_distort(&base, s)?, &rotation)?;
        Ok((norm(angular_momentum(&m)?) - target, m))
    };
    let (f1, _) = excess(1.0)?;
    if f1 >= 0.0 {
        return Err(Error::TargetUnreachable(target));
    }
    // bracket on a coarse scan of (1, 3]
    let mut lo = 1.0;
    let mut hi = None;
    for k in 1..=20 {
        let s = 1.0 + 0.1 * k as f64;
        if excess(s)?.0 > 0.0 {
            hi = Some(s);
            break;
        }
        lo = s;
    }
    let mut hi = hi.ok_or(Error::TargetUnreachable(target))?;
    let mut found = None;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let (f, field) = excess(mid)?;
        let done = f.abs() < 1e-6;
        found = Some((mid, field));
        if done {
            break;
        }
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (s, field) = found.expect("bisection ran");
    Ok(Seed { field, eps, distortion: s, rotation })
}

/// Per-vertex tangent projection.
fn project(m: &Field, g: &[Vec3]) -> Vec<Vec3> {
    m.values().par_iter().zip(g.par_iter()).map(|(mi, gi)| tangent(*mi, *gi)).collect()
}

/// Unprojected `grad E - grad (c . J)`; `grad (c . J) = c + grad (c . L)`.
fn lagrangian_gradient_full(m: &Field, p: EnergyParams, c: Option<Vec3>) -> Result<Vec<Vec3>> {
    let mut g = grad_energy(m, p);
    if let Some(c) = c {
        let gl = grad_l_along(m, c)?;
        g.par_iter_mut().zip(gl.par_iter()).for_each(|(gi, li)| *gi = sub(*gi, add(c, *li)));
    }
    Ok(g)
}

fn lagrangian_gradient(m: &Field, p: EnergyParams, c: Option<Vec3>) -> Result<Vec<Vec3>> {
    Ok(project(m, &lagrangian_gradient_full(m, p, c)?))
}

/// Safety factor on the rounding bound of an objective change.
const NOISE_FACTOR: f64 = 8.0;

/// First-order effect on the objective of perturbing every stored unit
/// vector by one rounding error: `eps sum_i A_i |G_i|_1` with `G` the
/// unprojected gradient. Normalized vectors carry this error in every
/// direction, including the normal one, where `G` can be large.
fn rounding_bound(m: &Field, g_full: &[Vec3]) -> f64 {
    let terms: Vec<f64> = g_full
        .par_iter()
        .zip(m.mesh().vertex_area().par_iter())
        .map(|(g, a)| a * (g[0].abs() + g[1].abs() + g[2].abs()))
        .collect();
    NOISE_FACTOR * f64::EPSILON * pairwise_sum(&terms)
}

/// Constraint state for one inner solve.
#[derive(Debug, Clone, Copy)]
struct Constraint {
    j0: Vec3,
    lambda: Vec3,
    mu: f64,
}

impl Constraint {
    /// Effective multiplier `lambda - mu (J - J0)`.
    fn effective(&self, j: Vec3) -> Vec3 {
        sub(self.lambda, scale(sub(j, self.j0), self.mu))
    }
}

struct InnerState {
    m: Field,
    grad: Vec<Vec3>,
    j: Vec3,
    noise: f64,
    /// Charge, from the same solid angles as the fold check.
    q: f64,
}

/// Fails with `IllConditionedTriangle` if a triangle image is folded.
fn evaluate(m: Field, p: EnergyParams, con: Option<&Constraint>) -> Result<InnerState> {
    let omega = triangle_solid_angles(&m)?;
    let (j, c) = match con {
        Some(c) => {
            let j = angular_momentum(&m)?;
            (j, Some(c.effective(j)))
        }
        None => ([0.0; 3], None),
    };
    let full = lagrangian_gradient_full(&m, p, c)?;
    let noise = rounding_bound(&m, &full);
    let grad = project(&m, &full);
    let q = pairwise_sum(&omega) / (4.0 * PI);
    Ok(InnerState { grad, j, noise, q, m })
}

/// Change of the objective between two states, assembled from local
/// differences: near convergence the decrease per step is far below the
/// rounding error of `E` itself.
fn objective_change(old: &InnerState, new: &InnerState, p: EnergyParams, con: Option<&Constraint>) -> Result<f64> {
    let de = energy_difference(&old.m, &new.m, p);
    let Some(c) = con else { return Ok(de) };
    let dj = momentum_difference(&old.m, &new.m)?;
    let rsum = add(sub(old.j, c.j0), sub(new.j, c.j0));
    Ok(de - dot(c.lambda, dj) + 0.5 * c.mu * dot(dj, rsum))
}

fn retract(m: &Field, dir: &[Vec3], step: f64) -> Field {
    let v = m.values().par_iter().zip(dir.par_iter()).map(|(mi, d)| normalize(axpy(*mi, -step, *d))).collect();
    m.with_values(v)
}

/// Recent `(s, y, 1 / s.y)` pairs of the limited-memory BFGS update, with
/// ambient differences standing in for transported tangent vectors.
#[derive(Default)]
struct CurvatureHistory {
    pairs: std::collections::VecDeque<(Vec<Vec3>, Vec<Vec3>, f64)>,
}

impl CurvatureHistory {
    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, s: Vec<Vec3>, y: Vec<Vec3>, sy: f64, memory: usize) {
        if !(sy > 0.0 && sy.is_finite()) {
            return;
        }
        if self.pairs.len() == memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: approximate inverse Hessian applied to `g`.
    fn apply(&self, m: &Field, g: &[Vec3]) -> Vec<Vec3> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * inner(m, s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi = axpy(*qi, -a, *yi));
            alphas.push(a);
        }
        let (s, y, _) = self.pairs.back().expect("non-empty history");
        let gamma = inner(m, s, y) / inner(m, y, y);
        q.iter_mut().for_each(|qi| *qi = scale(*qi, gamma));
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * inner(m, y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi = axpy(*qi, a - b, *si));
        }
        q
    }
}

struct InnerOutcome {
    state: InnerState,
    iterations: usize,
    gradient_norm: f64,
    retries: usize,
    /// Line search found no admissible step above the tolerance.
    stalled: bool,
}

/// Triangles that may be frozen during one line search.
const MAX_FROZEN: usize = 64;

/// Armijo backtracking along `-dir` from `eta`. A trial step that folds a
/// triangle freezes the direction on its vertices (the fold limit acts as an
/// active constraint) and is retried at the same length.
fn line_search(
    st: &InnerState,
    mut dir: Vec<Vec3>,
    mut slope: f64,
    mut eta: f64,
    p: EnergyParams,
    con: Option<&Constraint>,
    opts: &MinimizeOptions,
) -> Option<(InnerState, f64)> {
    let mut frozen = 0;
    while eta > 1e-14 && slope > 0.0 {
        match evaluate(retract(&st.m, &dir, eta), p, con) {
            // a finite step can carry image triangles through the fold limit
            // and back; such a step changes the charge and is too long
            Ok(t) if (t.q - st.q).abs() > 0.5 => {}
            Ok(t) => {
                if let Ok(d) = objective_change(st, &t, p, con) {
                    // sufficient decrease, up to the rounding floor of the change
                    let floor = st.noise + t.noise;
                    if d <= -opts.armijo_c * eta * slope + floor {
                        assert!(d <= floor, "objective increased by {d}");
                        return Some((t, eta));
                    }
                }
            }
            Err(Error::IllConditionedTriangle { triangle, .. }) if frozen < MAX_FROZEN => {
                for &v in &st.m.mesh().triangles()[triangle] {
                    dir[v] = [0.0; 3];
                }
                frozen += 1;
                slope = inner(&st.m, &st.grad, &dir);
                continue;
            }
            Err(_) => {}
        }
        eta *= opts.shrink;
    }
    None
}

/// Projected descent on the (augmented) objective, staying in the sector of
/// charge `q_ref`. The charge is checked every `q_check_every` iterations; a
/// sector change rolls back to the last checked field and halves the step cap.
fn inner_solve(
    m0: Field,
    p: EnergyParams,
    con: Option<&Constraint>,
    q_ref: f64,
    opts: &MinimizeOptions,
    retries_left: &mut usize,
) -> Result<InnerOutcome> {
    let left_sector = |m: &Field| -> Option<f64> {
        let q = charge(m).unwrap_or(f64::INFINITY);
        ((q - q_ref).abs() > 0.5).then_some(q)
    };
    let mut st = evaluate(m0, p, con)?;
    let mut checkpoint = st.m.clone();
    let mut step_max = opts.step_max;
    let mut step = 1e-3_f64.clamp(opts.step_min, step_max);
    let mut history = CurvatureHistory::default();
    let mut retries = 0;
    let mut gnorm = inner(&st.m, &st.grad, &st.grad).sqrt();
    let mut it = 0;
    let mut stalled = false;
    while it < opts.max_inner && gnorm >= opts.inner_tol {
        // candidate directions: quasi-Newton first, then the plain gradient
        let mut candidates = Vec::with_capacity(2);
        if opts.lbfgs_memory > 0 && !history.is_empty() {
            let d = project(&st.m, &history.apply(&st.m, &st.grad));
            let slope = inner(&st.m, &st.grad, &d);
            if slope > 0.0 {
                candidates.push((d, slope, 1.0));
            }
        }
        candidates.push((st.grad.clone(), gnorm * gnorm, step));
        let mut accepted = None;
        for (dir, slope, eta0) in candidates {
            accepted = line_search(&st, dir, slope, eta0.clamp(opts.step_min, step_max), p, con, opts);
            if accepted.is_some() {
                break;
            }
            history.clear();
        }
        // no descent left: machine precision, or a triangle at the fold limit
        let Some((next, eta)) = accepted else {
            stalled = true;
            break;
        };
        // Barzilai-Borwein from ambient differences
        let s: Vec<Vec3> = next.m.values().iter().zip(st.m.values()).map(|(a, b)| sub(*a, *b)).collect();
        let y: Vec<Vec3> = next.grad.iter().zip(&st.grad).map(|(a, b)| sub(*a, *b)).collect();
        let sy = inner(&next.m, &s, &y);
        step = if sy > 0.0 { inner(&next.m, &s, &s) / sy } else { eta };
        if opts.lbfgs_memory > 0 {
            history.push(s, y, sy, opts.lbfgs_memory);
        }
        st = next;
        gnorm = inner(&st.m, &st.grad, &st.grad).sqrt();
        it += 1;
        if it % opts.q_check_every == 0 {
            if let Some(q) = left_sector(&st.m) {
                if *retries_left == 0 {
                    return Err(Error::TopologicalSectorChange(q));
                }
                *retries_left -= 1;
                retries += 1;
                step_max *= 0.5;
                st = evaluate(checkpoint.clone(), p, con)?;
                gnorm = inner(&st.m, &st.grad, &st.grad).sqrt();
                history.clear();
                step = step.min(step_max);
                continue;
            }
            checkpoint = st.m.clone();
        }
    }
    if let Some(q) = left_sector(&st.m) {
        return Err(Error::TopologicalSectorChange(q));
    }
    Ok(InnerOutcome { state: st, iterations: it, gradient_norm: gnorm, retries, stalled })
}

fn check_seed_charge(seed: &Field) -> Result<()> {
    let q = charge(seed)?;
    if q.abs() > 1e-4 {
        return Err(Error::InvalidInput(format!("seed must have zero charge, got Q = {q}")));
    }
    Ok(())
}

/// Minimizes `E` subject to `J = J0` (and `Q = 0`, by continuity).
pub fn minimize_constrained(
    seed: &Field,
    j0: Vec3,
    p: EnergyParams,
    opts: &MinimizeOptions,
) -> Result<(Field, MinimizeReport)> {
    opts.validate()?;
    check_seed_charge(seed)?;
    let mut con = Constraint { j0, lambda: [0.0; 3], mu: opts.mu0 };
    let mut m = seed.clone();
    let mut trace = Vec::new();
    let mut counts = IterationCounts { outer: 0, inner: 0, sector_retries: 0 };
    let mut retries_left = opts.max_sector_retries;
    let mut prev_res = f64::INFINITY;
    let mut converged = false;
    let mut stalled = false;
    for outer in 0..opts.max_outer {
        let out = inner_solve(m, p, Some(&con), 0.0, opts, &mut retries_left)?;
        counts.outer = outer + 1;
        counts.inner += out.iterations;
        counts.sector_retries += out.retries;
        let j = out.state.j;
        let res = norm(sub(j, j0));
        con.lambda = con.effective(j);
        m = out.state.m;
        trace.push(OuterRecord {
            outer,
            mu: con.mu,
            energy: energy(&m, p).total,
            constraint_residual: res,
            gradient_norm: out.gradient_norm,
            inner_iterations: out.iterations,
            multiplier: con.lambda,
        });
        if res <= opts.constraint_tol && out.gradient_norm < opts.inner_tol {
            converged = true;
            break;
        }
        // further outer steps would only inflate the penalty around a frozen field
        if out.stalled {
            stalled = true;
            break;
        }
        if res > opts.constraint_tol && res > 0.5 * prev_res {
            con.mu = (con.mu * opts.mu_growth).min(opts.mu_cap);
        }
        prev_res = res;
    }
    let report = finish(&m, p, Some(j0), con.lambda, (converged, stalled), counts, trace)?;
    Ok((m, report))
}

/// Minimizes `E` without the momentum constraint, keeping the charge of the
/// seed.
pub fn minimize_free(seed: &Field, p: EnergyParams, opts: &MinimizeOptions) -> Result<(Field, MinimizeReport)> {
    opts.validate()?;
    let q0 = charge(seed)?.round();
    let mut retries_left = opts.max_sector_retries;
    let out = inner_solve(seed.clone(), p, None, q0, opts, &mut retries_left)?;
    let counts = IterationCounts { outer: 1, inner: out.iterations, sector_retries: out.retries };
    let m = out.state.m;
    let trace = vec![OuterRecord {
        outer: 0,
        mu: 0.0,
        energy: energy(&m, p).total,
        constraint_residual: 0.0,
        gradient_norm: out.gradient_norm,
        inner_iterations: out.iterations,
        multiplier: [0.0; 3],
    }];
    let converged = out.gradient_norm < opts.inner_tol;
    let report = finish(&m, p, None, [0.0; 3], (converged, out.stalled && !converged), counts, trace)?;
    Ok((m, report))
}

fn finish(
    m: &Field,
    p: EnergyParams,
    j0: Option<Vec3>,
    multiplier: Vec3,
    (converged, stalled): (bool, bool),
    iterations: IterationCounts,
    trace: Vec<OuterRecord>,
) -> Result<MinimizeReport> {
    let e = energy(m, p).total;
    let j = angular_momentum(m)?;
    let q = charge(m)?;
    let kkt = {
        let g = lagrangian_gradient(m, p, j0.map(|_| multiplier))?;
        inner(m, &g, &g).sqrt()
    };
    Ok(MinimizeReport {
        schema_version: SCHEMA_VERSION,
        converged,
        e_final: e,
        j_final: j,
        j_target: j0,
        q_final: q,
        multiplier,
        kkt_residual: kkt,
        equivariance_defect: equivariance_defect(m),
        defect_threshold: DEFECT_THRESHOLD,
        iterations,
        stalled,
        trace,
    })
}

/// Minimum over rotation axes of the relative 1-equivariance residual:
/// a 162-direction icosphere grid, then a shrinking pattern search around
/// the best axis.
pub fn equivariance_defect(m: &Field) -> f64 {
    let axes = build_icosphere(2).expect("level 2 is valid");
    let candidates: Vec<(Vec3, f64)> =
        axes.vertices().par_iter().map(|&e| (e, equivariance_defect_about(m, e))).collect();
    let (mut best, mut val) =
        candidates.into_iter().fold(([0.0, 0.0, 1.0], f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    // refinement: pattern search in the tangent plane of the best axis
    let mut delta = 0.5 * axes.mean_edge_length();
    while delta > 1e-6 {
        let b1 = normalize(if norm(cross(E3, best)) > 1e-8 { cross(E3, best) } else { cross(best, [0.0, 1.0, 0.0]) });
        let b2 = cross(best, b1);
        let mut improved = false;
        for (a, b) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let e = normalize(add(best, add(scale(b1, a * delta), scale(b2, b * delta))));
            let v = equivariance_defect_about(m, e);
            if v < val {
                best = e;
                val = v;
                improved = true;
                break;
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    val
}
