//! Acceptance run at icosphere level 5 with the tolerances fixed below.
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
//!
//! `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spherosim::dynamics::{evolve, EvolveConfig, Scheme};
use spherosim::field::{
    corpus, elliptical_distort, frame_assemble, from_equivariant, hedgehog, perturbed_hedgehog, random_smooth_field,
    rotate_joint, trial_profile, FrameField,
};
use spherosim::functionals::{
    angular_momentum, charge, elliptical_hessian_rhs, energy, exchange_energy, frame_energy, grad_energy, grad_l,
    grad_s, inner, orbital_momentum, poisson_bracket, spin_momentum, EnergyParams,
};
use spherosim::geometry::build_icosphere;
use spherosim::minimizer::{best_trial_eps, eps_grid, MinimizeOptions, DEFECT_THRESHOLD};
use spherosim::vec3::{add, norm, scale, sub, tangent, Rotation, Vec3};
use spherosim::verify::{
    certificate, free_minimizer, hessian_j3_sweep, identity_profiles, sublevel_area, SWEEP_HALF_POINTS,
    SWEEP_HALF_WIDTH, TRIAL_EPS,
};
use spherosim::{Field, Result, TriMesh};

const LEVEL: usize = 5;
const KAPPA: f64 = 50.0;
const SEED: u64 = 7;

/// Relative error of `E(nu)` against `4 pi`, and the accepted range of the
/// error ratio between levels 4 and 5 ("about 4x").
const TOL_GROUND: f64 = 1e-3;
const GROUND_RATIO: (f64, f64) = (3.0, 5.0);
const TOL_CHARGE: f64 = 1e-6;
const TOL_ROT_J: f64 = 1e-3;
const TOL_ROT_E: f64 = 1e-4;
const TOL_FIRST_VARIATION: f64 = 1e-4;
const TOL_SPIN_BRACKET: f64 = 1e-4;
const TOL_ORBITAL_BRACKET: f64 = 1e-2;
const TOL_DRIFT_E: f64 = 1e-4;
const TOL_DRIFT_J: f64 = 1e-4;
const TOL_DRIFT_Q: f64 = 1e-6;
/// RK4 is unstable at `dt = 1e-3` on this mesh; half of it is the largest
/// power-of-two fraction that is stable.
const CONSERVATION_DT: f64 = 5e-4;
const TOL_J3_IDENTITY: f64 = 1e-3;
const TOL_HESSIAN: f64 = 1e-2;
/// `-1/2 int lambda^4 |x|^2 dx` for the identity map.
const HEDGEHOG_HESSIAN: f64 = -4.0 * PI / 3.0;
const TOL_MAX_J3: f64 = 1e-2;
const TOL_SPLIT: f64 = 1e-3;
const SPLIT_EPS: [f64; 3] = [0.2, 0.3, 0.45];
const TRIAL_KAPPAS: [f64; 4] = [0.5, 5.0, 50.0, 200.0];
const TOL_TRIAL_ORACLE: f64 = 1e-3;
const J_TARGET: f64 = 4.1 * PI;
const TOL_CONSTRAINT: f64 = 1e-4;
const TOL_RESIDUAL: f64 = 1e-2;
const TOL_TRACKING: f64 = 1e-2;
const TOL_LOWER_BOUND: f64 = 1e-2;
const SWEEP_KAPPAS: [f64; 3] = [10.0, 50.0, 200.0];

struct Outcome {
    passed: bool,
    details: String,
}

fn outcome(passed: bool, details: String) -> Result<Outcome> {
    Ok(Outcome { passed, details })
}

struct Ctx {
    mesh: Arc<TriMesh>,
    p: EnergyParams,
}

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ctx = Ctx { mesh: build_icosphere(LEVEL).expect("level 5 mesh"), p: EnergyParams::new(KAPPA).unwrap() };
    let criteria: [(&str, fn(&Ctx) -> Result<Outcome>); 14] = [
        ("ground-state energy", ground_state),
        ("charge of the corpus", corpus_charges),
        ("joint rotation covariance", joint_rotation),
        ("first variations", first_variations),
        ("commutation relations", commutation),
        ("conservation under evolution", conservation),
        ("equivariant J3 identity", j3_identity),
        ("elliptical second variation", elliptical),
        ("J3 local maximum at trial field", local_maximum),
        ("moving-frame energy split", frame_split),
        ("trial field below 8 pi", trial_below_bound),
        ("constrained minimizer certificate", certificate_run),
        ("topological lower bound", lower_bound),
        ("concentration of free minimizers", concentration),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !wanted.is_empty() && !wanted.contains(&(i + 1)) {
            continue;
        }
        let t = Instant::now();
        let o = f(&ctx).unwrap_or_else(|e| Outcome { passed: false, details: format!("error: {e}") });
        if !o.passed {
            failed += 1;
        }
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {:2} {name:<34} [{:6.1} s] {}", i + 1, t.elapsed().as_secs_f64(), o.details);
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ground_state(ctx: &Ctx) -> Result<Outcome> {
    let err = |mesh: Arc<TriMesh>| (energy(&hedgehog(1, mesh), ctx.p).total - 4.0 * PI).abs() / (4.0 * PI);
    let e5 = err(ctx.mesh.clone());
    let e4 = err(build_icosphere(4)?);
    let ratio = e4 / e5;
    outcome(
        e5 < TOL_GROUND && ratio >= GROUND_RATIO.0 && ratio <= GROUND_RATIO.1,
        format!("relative error {e5:.3e} (tol {TOL_GROUND:.0e}); level 4 / level 5 = {ratio:.2}"),
    )
}

fn corpus_charges(ctx: &Ctx) -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut seen = Vec::new();
    for entry in corpus(ctx.mesh.clone(), SEED) {
        let q = charge(&entry.field)?;
        worst = worst.max((q - entry.expected_charge as f64).abs());
        if !seen.contains(&entry.expected_charge) {
            seen.push(entry.expected_charge);
        }
    }
    seen.sort();
    outcome(worst < TOL_CHARGE, format!("max |Q - expected| {worst:.2e} over charges {seen:?}"))
}

fn joint_rotation(ctx: &Ctx) -> Result<Outcome> {
    let m = from_equivariant(&trial_profile(TRIAL_EPS)?, ctx.mesh.clone())?;
    let (e0, j0) = (energy(&m, ctx.p).total, angular_momentum(&m)?);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut ej, mut ee) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let r = Rotation::random(&mut rng);
        let mr = rotate_joint(&m, &r)?;
        ej = ej.max(norm(sub(angular_momentum(&mr)?, r.apply(j0))) / norm(j0));
        ee = ee.max((energy(&mr, ctx.p).total - e0).abs() / e0);
    }
    outcome(
        ej < TOL_ROT_J && ee < TOL_ROT_E,
        format!("trial eps {TRIAL_EPS}, 10 rotations: J {ej:.2e} (tol {TOL_ROT_J:.0e}), E {ee:.2e} (tol {TOL_ROT_E:.0e})"),
    )
}

fn random_tangent(m: &Field, seed: u64) -> Vec<Vec3> {
    let shift = random_smooth_field(m.mesh().clone(), 0, 0.3, seed);
    m.values().iter().zip(shift.values()).map(|(a, b)| tangent(*a, *b)).collect()
}

fn central_difference(m: &Field, f: &dyn Fn(&Field) -> Result<f64>, phi: &[Vec3]) -> Result<f64> {
    let h = 1e-5;
    let shifted = |t: f64| m.with_values(m.values().iter().zip(phi).map(|(a, b)| add(*a, scale(*b, t))).collect());
    Ok((f(&shifted(h))? - f(&shifted(-h))?) / (2.0 * h))
}

fn first_variations(ctx: &Ctx) -> Result<Outcome> {
    let m = random_smooth_field(ctx.mesh.clone(), 0, 0.3, SEED);
    let grads = [grad_energy(&m, ctx.p), grad_s(2, m.len()), grad_l(&m, 2, false)?];
    let fs: [&dyn Fn(&Field) -> Result<f64>; 3] = [
        &|f| Ok(energy(f, ctx.p).total),
        &|f| Ok(spin_momentum(f)[2]),
        &|f| Ok(orbital_momentum(f)?[2]),
    ];
    let mut worst = [0.0f64; 3];
    for k in 0..5 {
        let phi = random_tangent(&m, SEED + 100 + k);
        for i in 0..3 {
            let fd = central_difference(&m, fs[i], &phi)?;
            let an = inner(&m, &grads[i], &phi);
            worst[i] = worst[i].max((fd - an).abs() / an.abs().max(1e-12));
        }
    }
    outcome(
        worst.iter().all(|w| *w < TOL_FIRST_VARIATION),
        format!("relative error E {:.2e}, S3 {:.2e}, L3 {:.2e} (tol {TOL_FIRST_VARIATION:.0e})", worst[0], worst[1], worst[2]),
    )
}

fn commutation(ctx: &Ctx) -> Result<Outcome> {
    let (mut es, mut el) = (0.0f64, 0.0f64);
    for i in 0..20u64 {
        let q = [0, 1, -1][(i % 3) as usize];
        let m = random_smooth_field(ctx.mesh.clone(), q, 0.3, SEED + 1000 + i);
        let s3 = spin_momentum(&m)[2];
        es = es.max((poisson_bracket(&grad_s(0, m.len()), &grad_s(1, m.len()), &m) - s3).abs() / s3.abs().max(1e-12));
        let l3 = orbital_momentum(&m)?[2];
        let b = poisson_bracket(&grad_l(&m, 0, true)?, &grad_l(&m, 1, true)?, &m);
        // some charged fields have L3 = 0 up to roundoff; relative errors
        // are taken against at least 1e-12
        el = el.max((b - l3).abs() / l3.abs().max(1e-12));
    }
    outcome(
        es < TOL_SPIN_BRACKET && el < TOL_ORBITAL_BRACKET,
        format!(
            "20 fields: {{S1,S2}} {es:.2e} (tol {TOL_SPIN_BRACKET:.0e}), {{L1,L2}} {el:.2e} (tol {TOL_ORBITAL_BRACKET:.0e})"
        ),
    )
}

fn conservation(ctx: &Ctx) -> Result<Outcome> {
    // the random fields use kappa = 1: at kappa = 50 their phase winds below
    // the mesh scale well before t = 1
    let one = EnergyParams::new(1.0)?;
    let cases = [
        ("perturbed hedgehog", perturbed_hedgehog(ctx.mesh.clone(), 0.05, SEED), ctx.p),
        ("random Q=0", random_smooth_field(ctx.mesh.clone(), 0, 0.3, SEED), one),
        ("random Q=1", random_smooth_field(ctx.mesh.clone(), 1, 0.3, SEED), one),
    ];
    let cfg = EvolveConfig { dt: CONSERVATION_DT, t_end: 1.0, record_every: 10, scheme: Scheme::ProjectedRK4 };
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut details = Vec::new();
    for (name, m, p) in cases {
        let (de, dj, dq) = evolve(&m, &cfg, p)?.drifts();
        worst = (worst.0.max(de), worst.1.max(dj), worst.2.max(dq));
        details.push(format!("{name}: {de:.1e}/{dj:.1e}/{dq:.1e}"));
    }
    outcome(
        worst.0 < TOL_DRIFT_E && worst.1 < TOL_DRIFT_J && worst.2 < TOL_DRIFT_Q,
        format!("T = 1, dt = {CONSERVATION_DT}, drift E/J/Q {}", details.join(", ")),
    )
}

fn j3_identity(ctx: &Ctx) -> Result<Outcome> {
    let (mut worst, mut modulus) = (0.0f64, 0.0f64);
    for prof in identity_profiles()? {
        let m = from_equivariant(&prof, ctx.mesh.clone())?;
        let j = angular_momentum(&m)?;
        let k = prof.k as f64;
        let closed = (1.0 - k) * spin_momentum(&m)[2] + 4.0 * PI * k * prof.polarity();
        worst = worst.max((j[2] - closed).abs() / (1.0 + j[2].abs()));
        if prof.k == 1 {
            modulus = (norm(j) - 4.0 * PI * prof.polarity().abs()).abs() / (1.0 + norm(j));
        }
    }
    outcome(
        worst < TOL_J3_IDENTITY && modulus < TOL_J3_IDENTITY,
        format!("k = -1, 0, 1, 2: {worst:.2e}; |J| = 4 pi |p|: {modulus:.2e} (tol {TOL_J3_IDENTITY:.0e})"),
    )
}

fn elliptical(ctx: &Ctx) -> Result<Outcome> {
    let trial = from_equivariant(&trial_profile(TRIAL_EPS)?, ctx.mesh.clone())?;
    let fd = hessian_j3_sweep(&trial, SWEEP_HALF_WIDTH, SWEEP_HALF_POINTS)?;
    let moment = elliptical_hessian_rhs(&trial)?;
    let e_trial = (fd - moment).abs() / moment.abs();
    let fd_nu = hessian_j3_sweep(&hedgehog(1, ctx.mesh.clone()), SWEEP_HALF_WIDTH, SWEEP_HALF_POINTS)?;
    let e_nu = (fd_nu - HEDGEHOG_HESSIAN).abs() / HEDGEHOG_HESSIAN.abs();
    outcome(
        e_trial < TOL_HESSIAN && e_nu < TOL_HESSIAN,
        format!(
            "trial {fd:.5} vs moment {moment:.5} ({e_trial:.2e}); nu {fd_nu:.5} vs -4 pi/3 ({e_nu:.2e}); tol {TOL_HESSIAN:.0e}"
        ),
    )
}

fn local_maximum(ctx: &Ctx) -> Result<Outcome> {
    let Some((eps, _)) = best_trial_eps(&eps_grid(), ctx.p)? else {
        return outcome(false, "no grid scale below 8 pi".into());
    };
    let m = from_equivariant(&trial_profile(eps)?, ctx.mesh.clone())?;
    let j = angular_momentum(&m)?[2];
    let mut rise = f64::NEG_INFINITY;
    for s in [0.9, 1.1] {
        rise = rise.max(angular_momentum(&elliptical_distort(&m, s)?)?[2] - j);
    }
    let err = (j + 4.0 * PI).abs();
    outcome(
        err < TOL_MAX_J3 && rise < 0.0,
        format!("eps {eps:.3e}: |J3 + 4 pi| {err:.2e} (tol {TOL_MAX_J3:.0e}); max J3(m_s) - J3(m) {rise:.3e}"),
    )
}

fn frame_split(ctx: &Ctx) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for eps in SPLIT_EPS {
        let u = FrameField::from_profile(&trial_profile(eps)?, 3000, 64)?;
        let split = frame_energy(&u, ctx.p)?.total;
        let e = energy(&frame_assemble(&u, ctx.mesh.clone()), ctx.p).total;
        worst = worst.max((e - split).abs() / e);
    }
    outcome(worst < TOL_SPLIT, format!("eps {SPLIT_EPS:?}: max |E - E0 - E1| / E {worst:.2e} (tol {TOL_SPLIT:.0e})"))
}

fn trial_below_bound(ctx: &Ctx) -> Result<Outcome> {
    let mut ok = true;
    let mut details = Vec::new();
    for kappa in TRIAL_KAPPAS {
        let p = EnergyParams::new(kappa)?;
        let Some((eps, oracle)) = best_trial_eps(&eps_grid(), p)? else {
            ok = false;
            details.push(format!("kappa {kappa}: none"));
            continue;
        };
        let m = from_equivariant(&trial_profile(eps)?, ctx.mesh.clone())?;
        let (e, q) = (energy(&m, p).total, charge(&m)?);
        let gap = (e - oracle).abs() / oracle;
        ok &= e < 8.0 * PI && q.abs() < TOL_CHARGE && gap < TOL_TRIAL_ORACLE;
        details.push(format!("kappa {kappa}: eps {eps:.2e} E {e:.4} oracle {oracle:.4} ({gap:.1e}) Q {q:.0e}"));
    }
    outcome(ok, format!("{}; oracle tol {TOL_TRIAL_ORACLE:.0e}", details.join("; ")))
}

fn certificate_run(ctx: &Ctx) -> Result<Outcome> {
    let j0 = [0.0, 0.0, -J_TARGET];
    let (_, c) = certificate(LEVEL, j0, ctx.p, &MinimizeOptions::default())?;
    let r = &c.report;
    let dj = norm(sub(r.j_final, j0));
    let items = [
        ("converged", r.converged),
        ("E < 8 pi", r.e_final < 8.0 * PI),
        ("|J - J0|", dj < TOL_CONSTRAINT),
        ("Q = 0", r.q_final.abs() < TOL_CHARGE),
        ("defect", r.equivariance_defect > DEFECT_THRESHOLD),
        ("fit residual", c.residual_rel < TOL_RESIDUAL),
        ("tracking", c.tracking_error < TOL_TRACKING),
    ];
    let failing: Vec<&str> = items.iter().filter(|i| !i.1).map(|i| i.0).collect();
    outcome(
        failing.is_empty(),
        format!(
            "E {:.5}, |J - J0| {dj:.1e}, Q {:.0e}, defect {:.3}, residual {:.1e}, tracking {:.2e} (tol {TOL_TRACKING:.0e}, \
             rotation round trip {:.1e}), nu {:.4}; failing: {failing:?}",
            r.e_final, r.q_final, r.equivariance_defect, c.residual_rel, c.tracking_error, c.interpolation_floor, c.nu_hat
        ),
    )
}

fn lower_bound(ctx: &Ctx) -> Result<Outcome> {
    let mut worst = f64::NEG_INFINITY;
    let mut name = String::new();
    for entry in corpus(ctx.mesh.clone(), SEED) {
        let deficit = 4.0 * PI * charge(&entry.field)?.abs() - exchange_energy(&entry.field);
        if deficit > worst {
            worst = deficit;
            name = entry.name;
        }
    }
    outcome(
        worst < TOL_LOWER_BOUND,
        format!("max 4 pi |Q| - exchange {worst:.3e} ({name}), tol {TOL_LOWER_BOUND:.0e}"),
    )
}

fn concentration(ctx: &Ctx) -> Result<Outcome> {
    let mut areas = Vec::new();
    let mut details = Vec::new();
    let mut all_converged = true;
    for kappa in SWEEP_KAPPAS {
        let (m, r) = free_minimizer(&ctx.mesh, EnergyParams::new(kappa)?, &MinimizeOptions::default())?;
        all_converged &= r.converged && r.q_final.abs() < TOL_CHARGE;
        let a = sublevel_area(&m, 0.9);
        areas.push(a);
        details.push(format!("kappa {kappa}: area {a:.4e} E {:.4} converged {}", r.e_final, r.converged));
    }
    let decreasing = areas.windows(2).all(|w| w[1] < w[0]);
    outcome(all_converged && decreasing, details.join("; "))
}

