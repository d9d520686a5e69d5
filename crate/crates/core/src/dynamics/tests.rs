use super::*;
use crate::field::{
    constant_field, hedgehog, perturbed_hedgehog, random_smooth_field, rotate_coordinates, rotate_spin,
};
use crate::functionals::grad_l3_continuum;
use crate::geometry::build_icosphere;
use crate::vec3::{Rotation, E3};

fn max_dev(a: &Field, b: &[Vec3]) -> f64 {
    a.values().iter().zip(b).map(|(x, y)| norm(sub(*x, *y))).fold(0.0, f64::max)
}

#[test]
fn hedgehog_is_stationary() {
    let mesh = build_icosphere(4).unwrap();
    let nu = hedgehog(1, mesh);
    let p = EnergyParams::new(50.0).unwrap();
    for scheme in [Scheme::ProjectedRK4, Scheme::SemiImplicitMidpoint] {
        let next = ll_step(&nu, 1e-3, p, scheme).unwrap();
        assert!(max_dev(&next, nu.values()) < 1e-10, "{scheme:?}");
    }
    let fit = spinning_fit(&nu, p);
    assert_eq!((fit.nu_hat, fit.residual_rel), (0.0, 0.0));
}

/// Anisotropy-only effective field: each vertex precesses about its normal
/// at rate `-kappa (m . nu)`, which is conserved.
fn anisotropy_field(kappa: f64) -> impl Fn(&Field) -> Result<Vec<Vec3>> {
    move |f: &Field| {
        Ok(f.values().iter().zip(f.mesh().vertices()).map(|(m, y)| scale(*y, -kappa * dot(*m, *y))).collect())
    }
}

fn precession_exact(m0: &Field, kappa: f64, t: f64) -> Vec<Vec3> {
    m0.values()
        .iter()
        .zip(m0.mesh().vertices())
        .map(|(m, y)| Rotation::about_axis(*y, -kappa * dot(*m, *y) * t).apply(*m))
        .collect()
}

#[test]
fn constant_field_precesses_about_normal() {
    let mesh = build_icosphere(3).unwrap();
    let m = constant_field(E3, mesh).unwrap();
    let p = EnergyParams::new(5.0).unwrap();
    let drift = |dt: f64| {
        let next = ll_step(&m, dt, p, Scheme::ProjectedRK4).unwrap();
        next.values()
            .iter()
            .zip(next.mesh().vertices())
            .map(|(v, y)| (dot(*v, *y).abs() - y[2].abs()).abs())
            .fold(0.0, f64::max)
    };
    // the pointwise part conserves m . nu; exchange enters at O(dt^2)
    let (a, b) = (drift(1e-3), drift(5e-4));
    assert!(a < 1e-5, "{a}");
    assert!((a / b - 4.0).abs() < 0.5, "{}", a / b);
}

#[test]
fn temporal_order_on_pointwise_precession() {
    let mesh = build_icosphere(2).unwrap();
    let kappa = 10.0;
    let m0 = random_smooth_field(mesh, 0, 0.3, 3);
    let period = 2.0 * std::f64::consts::PI / kappa;
    let exact = precession_exact(&m0, kappa, period);
    let run = |scheme: Scheme, n: usize| {
        let dt = period / n as f64;
        let mut m = m0.clone();
        for _ in 0..n {
            m = step_with(&m, dt, scheme, anisotropy_field(kappa)).unwrap();
        }
        max_dev(&m, &exact)
    };
    let (a, b) = (run(Scheme::ProjectedRK4, 40), run(Scheme::ProjectedRK4, 80));
    assert!((a / b - 16.0).abs() < 3.0, "rk4 ratio {}", a / b);
    let (a, b) = (run(Scheme::SemiImplicitMidpoint, 40), run(Scheme::SemiImplicitMidpoint, 80));
    assert!((a / b - 4.0).abs() < 0.6, "midpoint ratio {}", a / b);
}

#[test]
fn midpoint_preserves_length_and_energy() {
    let mesh = build_icosphere(3).unwrap();
    let m = random_smooth_field(mesh, 0, 0.3, 11);
    let p = EnergyParams::new(5.0).unwrap();
    // skip renormalization to see the raw step
    let raw = midpoint(&m, 1e-3, &|f: &Field| Ok(grad_energy(f, p))).unwrap();
    let len = raw.values().iter().map(|v| (norm(*v) - 1.0).abs()).fold(0.0, f64::max);
    assert!(len < 1e-12, "{len}");
    let e0 = crate::functionals::energy(&m, p).total;
    let e1 = crate::functionals::energy(&raw, p).total;
    assert!((e1 - e0).abs() < 1e-10 * e0, "{}", e1 - e0);
}

#[test]
fn midpoint_reports_divergence() {
    let mesh = build_icosphere(4).unwrap();
    let m = random_smooth_field(mesh, 0, 0.3, 2);
    let p = EnergyParams::new(1.0).unwrap();
    assert!(matches!(ll_step(&m, 0.1, p, Scheme::SemiImplicitMidpoint), Err(Error::MidpointNoConvergence(_))));
}

#[test]
fn spin_flow_is_spin_rotation() {
    let mesh = build_icosphere(3).unwrap();
    let m = random_smooth_field(mesh, 1, 0.3, 5);
    let alpha = 0.3;
    let n = 30;
    let mut f = m.clone();
    for _ in 0..n {
        f = step_with(&f, alpha / n as f64, Scheme::ProjectedRK4, |g: &Field| Ok(vec![E3; g.len()])).unwrap();
    }
    let exact = rotate_spin(&m, &Rotation::about_e3(alpha));
    assert!(max_dev(&f, exact.values()) < 1e-8);
}

#[test]
fn orbital_flow_is_coordinate_rotation() {
    let alpha = 0.2;
    let mut errs = Vec::new();
    for level in [3, 4] {
        let mesh = build_icosphere(level).unwrap();
        let m = random_smooth_field(mesh, 0, 0.3, 5);
        let n = 40;
        let mut f = m.clone();
        for _ in 0..n {
            f = step_with(&f, alpha / n as f64, Scheme::ProjectedRK4, |g: &Field| Ok(grad_l3_continuum(g))).unwrap();
        }
        let exact = rotate_coordinates(&m, &Rotation::about_e3(alpha)).unwrap();
        errs.push(f.l2_distance(&exact));
    }
    assert!(errs[1] < 2e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn short_evolution_conserves() {
    let mesh = build_icosphere(3).unwrap();
    let m = perturbed_hedgehog(mesh, 0.05, 1);
    let p = EnergyParams::new(50.0).unwrap();
    let cfg = EvolveConfig { dt: 2e-3, t_end: 0.2, record_every: 10, scheme: Scheme::ProjectedRK4 };
    assert!(cfg.stability_warning(&m).is_none());
    assert!(EvolveConfig { dt: 1e-2, ..cfg }.stability_warning(&m).is_some());
    let ev = evolve(&m, &cfg, p).unwrap();
    assert_eq!(ev.trace.len(), 11);
    assert!((ev.trace.last().unwrap().t - 0.2).abs() < 1e-12);
    let (de, dj, dq) = ev.drifts();
    // J is conserved up to the O(h^2) error of the discrete orbital momentum
    assert!(de < 1e-6 && dj < 1e-3 && dq < 1e-6, "{de} {dj} {dq}");
}

#[test]
fn config_validation_and_parsing() {
    let ok = EvolveConfig { dt: 1e-3, t_end: 1.0, record_every: 1, scheme: Scheme::default() };
    assert!(ok.validate().is_ok());
    assert_eq!(ok.n_steps(), 1000);
    assert!(EvolveConfig { dt: 0.0, ..ok }.validate().is_err());
    assert!(EvolveConfig { record_every: 0, ..ok }.validate().is_err());
    assert!(EvolveConfig { t_end: f64::NAN, ..ok }.validate().is_err());
    assert_eq!("rk4".parse::<Scheme>().unwrap(), Scheme::ProjectedRK4);
    assert_eq!("midpoint".parse::<Scheme>().unwrap(), Scheme::SemiImplicitMidpoint);
    assert!("euler".parse::<Scheme>().is_err());
}
