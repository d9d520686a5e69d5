//! Radial profiles of k-equivariant fields.
//!
//! A profile describes `m3 = cos(theta(r))` and the in-plane phase
//! `phi = k chi + alpha(r)` in polar chart coordinates `x = r e^{i chi}`.
//! Frame profiles describe the components `u` of the field in the moving
//! frame `{tau_1, tau_2, nu}` instead of the ambient components of `m`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::chart_frame;
use crate::geometry::ChartPoint;
use crate::vec3::{add, scale, Vec3};

/// Default number of samples for tabulated profiles.
pub const DEFAULT_SAMPLES: usize = 4096;

/// Tolerance for the pole values of profiles built by constructors.
const POLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileFlavor {
    /// `theta`, `alpha` describe the ambient components of `m`.
    Ambient,
    /// `theta`, `alpha` describe the frame components `u`.
    Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialShape {
    /// Piecewise-linear samples; constant continuation beyond the last radius.
    Sampled { r: Vec<f64>, theta: Vec<f64>, alpha: Vec<f64> },
    /// Core `pi - 2 atan(r / eps)` for `r <= 1`, linear tail to zero on `(1, 2)`.
    Trial { eps: f64 },
    /// `theta = 2 atan(r)`: with `k = 1` this is the identity map.
    Stereographic,
    Constant { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivariantProfile {
    pub k: i32,
    pub flavor: ProfileFlavor,
    pub shape: RadialShape,
}

/// Field value at `chi = 0` and its radial derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialState {
    pub m: Vec3,
    pub dm: Vec3,
}

#[inline]
fn trial_core(rho: f64) -> f64 {
    PI - 2.0 * rho.atan()
}

/// `n` radii: `0` followed by `n - 1` log-spaced points in `[r_min, r_max]`.
pub fn log_grid(n: usize, r_min: f64, r_max: f64) -> Vec<f64> {
    assert!(n >= 2 && r_min > 0.0 && r_max > r_min);
    let mut r = Vec::with_capacity(n);
    r.push(0.0);
    let m = n - 1;
    let (a, b) = (r_min.ln(), r_max.ln());
    for i in 0..m {
        let t = if m == 1 { 1.0 } else { i as f64 / (m - 1) as f64 };
        r.push((a + t * (b - a)).exp());
    }
    r
}

impl EquivariantProfile {
    /// The identity map `m = nu`.
    pub fn identity() -> Self {
        EquivariantProfile { k: 1, flavor: ProfileFlavor::Ambient, shape: RadialShape::Stereographic }
    }

    pub fn constant(k: i32, theta: f64) -> Self {
        EquivariantProfile { k, flavor: ProfileFlavor::Ambient, shape: RadialShape::Constant { theta } }
    }

    /// Tabulated profile. Radii must start at 0 and increase strictly.
    pub fn sampled(
        k: i32,
        flavor: ProfileFlavor,
        r: Vec<f64>,
        theta: Vec<f64>,
        alpha: Vec<f64>,
    ) -> Result<Self> {
        if r.len() < 2 || theta.len() != r.len() || alpha.len() != r.len() {
            return Err(Error::ProfileOutOfRange("sample arrays must have equal length >= 2".into()));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ProfileOutOfRange("radii must start at 0 and increase".into()));
        }
        if theta.iter().chain(&alpha).chain(&r).any(|v| !v.is_finite()) {
            return Err(Error::ProfileOutOfRange("non-finite sample".into()));
        }
        Ok(EquivariantProfile { k, flavor, shape: RadialShape::Sampled { r, theta, alpha } })
    }

    /// Samples `theta_fn`, `alpha_fn` on a log-spaced grid in `[0, r_max]`.
    pub fn tabulate(
        k: i32,
        flavor: ProfileFlavor,
        n: usize,
        r_min: f64,
        r_max: f64,
        theta_fn: impl Fn(f64) -> f64,
        alpha_fn: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let r = log_grid(n, r_min, r_max);
        let theta = r.iter().map(|&x| theta_fn(x)).collect();
        let alpha = r.iter().map(|&x| alpha_fn(x)).collect();
        Self::sampled(k, flavor, r, theta, alpha)
    }

    pub fn r_max(&self) -> f64 {
        match &self.shape {
            RadialShape::Sampled { r, .. } => *r.last().unwrap(),
            RadialShape::Trial { .. } => 2.0,
            _ => f64::INFINITY,
        }
    }

    fn segment(r: &[f64], x: f64) -> (usize, f64) {
        let n = r.len();
        if x >= r[n - 1] {
            return (n - 2, 1.0);
        }
        let i = r.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
        (i, (x - r[i]) / (r[i + 1] - r[i]))
    }

    pub fn theta(&self, r: f64) -> f64 {
        match &self.shape {
            RadialShape::Sampled { r: rs, theta, .. } => {
                if r >= *rs.last().unwrap() {
                    return *theta.last().unwrap();
                }
                let (i, t) = Self::segment(rs, r);
                theta[i] + t * (theta[i + 1] - theta[i])
            }
            RadialShape::Trial { eps } => {
                if r <= 1.0 {
                    trial_core(r / eps)
                } else if r < 2.0 {
                    trial_core(1.0 / eps) * (2.0 - r)
                } else {
                    0.0
                }
            }
            RadialShape::Stereographic => 2.0 * r.atan(),
            RadialShape::Constant { theta } => *theta,
        }
    }

    pub fn dtheta(&self, r: f64) -> f64 {
        match &self.shape {
            RadialShape::Sampled { r: rs, theta, .. } => {
                if r >= *rs.last().unwrap() {
                    return 0.0;
                }
                let (i, _) = Self::segment(rs, r);
                (theta[i + 1] - theta[i]) / (rs[i + 1] - rs[i])
            }
            RadialShape::Trial { eps } => {
                if r <= 1.0 {
                    let q = r / eps;
                    -2.0 / (eps * (1.0 + q * q))
                } else if r < 2.0 {
                    -trial_core(1.0 / eps)
                } else {
                    0.0
                }
            }
            RadialShape::Stereographic => {
                if r.is_infinite() {
                    0.0
                } else {
                    2.0 / (1.0 + r * r)
                }
            }
            RadialShape::Constant { .. } => 0.0,
        }
    }

    pub fn alpha(&self, r: f64) -> f64 {
        match &self.shape {
            RadialShape::Sampled { r: rs, alpha, .. } => {
                if r >= *rs.last().unwrap() {
                    return *alpha.last().unwrap();
                }
                let (i, t) = Self::segment(rs, r);
                alpha[i] + t * (alpha[i + 1] - alpha[i])
            }
            _ => 0.0,
        }
    }

    pub fn dalpha(&self, r: f64) -> f64 {
        match &self.shape {
            RadialShape::Sampled { r: rs, alpha, .. } => {
                if r >= *rs.last().unwrap() {
                    return 0.0;
                }
                let (i, _) = Self::segment(rs, r);
                (alpha[i + 1] - alpha[i]) / (rs[i + 1] - rs[i])
            }
            _ => 0.0,
        }
    }

    pub fn theta_at_zero(&self) -> f64 {
        self.theta(0.0)
    }

    pub fn theta_at_infinity(&self) -> f64 {
        self.theta(f64::INFINITY)
    }

    /// Whether the field is continuous at both poles: `theta(0)` and
    /// `theta(inf)` in `{0, pi}` (mod 2 pi) within 1e-8.
    pub fn is_pole_regular(&self) -> bool {
        let regular = |t: f64| t.sin().abs() < POLE_TOL;
        regular(self.theta_at_zero()) && regular(self.theta_at_infinity())
    }

    /// Radii at which the profile has kinks or a characteristic scale;
    /// quadrature panels are aligned to these.
    pub fn knots(&self) -> Vec<f64> {
        match &self.shape {
            RadialShape::Sampled { r, .. } => r[1..].to_vec(),
            RadialShape::Trial { eps } => {
                let mut k: Vec<f64> = (-8..=8).map(|j| eps * 2f64.powf(j as f64 * 0.5)).filter(|&v| v < 1.0).collect();
                k.push(1.0);
                k.push(2.0);
                k
            }
            _ => Vec::new(),
        }
    }

    fn frame_components(&self, r: f64) -> (Vec3, Vec3) {
        let th = self.theta(r);
        let dth = self.dtheta(r);
        let al = self.alpha(r);
        let dal = self.dalpha(r);
        let (st, ct) = th.sin_cos();
        let (sa, ca) = al.sin_cos();
        let v = [st * ca, st * sa, ct];
        let dv = add(scale([ct * ca, ct * sa, -st], dth), scale([-sa, ca, 0.0], st * dal));
        (v, dv)
    }

    /// Field value at `chi = 0` and its radial derivative, in ambient
    /// components. Requires `k = 1` for frame profiles, which are then
    /// co-rotational; the field at angle `chi` is `Rz(k chi)` applied to it.
    pub fn radial_state(&self, r: f64) -> Result<RadialState> {
        let (v, dv) = self.frame_components(r);
        match self.flavor {
            ProfileFlavor::Ambient => Ok(RadialState { m: v, dm: dv }),
            ProfileFlavor::Frame => {
                if self.k != 1 {
                    return Err(Error::ProfileOutOfRange(format!(
                        "frame profile with k = {} is not equivariant in ambient components",
                        self.k
                    )));
                }
                let vt = 2.0 * r.atan();
                let lam = if r.is_infinite() { 0.0 } else { 2.0 / (1.0 + r * r) };
                let (sv, cv) = vt.sin_cos();
                let tau_r = [cv, 0.0, -sv];
                let tau_chi = [0.0, 1.0, 0.0];
                let nu = [sv, 0.0, cv];
                let m = add(add(scale(tau_r, v[0]), scale(tau_chi, v[1])), scale(nu, v[2]));
                let dm = add(
                    add(add(scale(tau_r, dv[0]), scale(tau_chi, dv[1])), scale(nu, dv[2])),
                    scale(add(scale(tau_r, v[2]), scale(nu, -v[0])), lam),
                );
                Ok(RadialState { m, dm })
            }
        }
    }

    /// Ambient value at polar chart coordinates; `r = inf` is the south pole.
    pub fn eval(&self, r: f64, chi: f64) -> Vec3 {
        let th = self.theta(r);
        let phi = self.k as f64 * chi + self.alpha(r);
        let (st, ct) = th.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let u = [st * cp, st * sp, ct];
        match self.flavor {
            ProfileFlavor::Ambient => u,
            ProfileFlavor::Frame => {
                if r.is_infinite() {
                    // tau_1 = -e1, tau_2 = e2 in the limit along chi = 0; nu = -e3
                    return [-u[0], u[1], -u[2]];
                }
                let x = ChartPoint::from_polar(r, chi);
                let (t1, t2) = chart_frame(x);
                let nu = crate::geometry::stereo_to_sphere(x).0;
                add(add(scale(t1, u[0]), scale(t2, u[1])), scale(nu, u[2]))
            }
        }
    }

    /// `m3` at the north (`r = 0`) and south (`r = inf`) poles.
    pub fn pole_m3(&self) -> (f64, f64) {
        let n = self.eval(0.0, 0.0)[2];
        let s = self.eval(f64::INFINITY, 0.0)[2];
        (n, s)
    }

    /// Polarity `(m3(e3) + m3(-e3)) / 2`.
    pub fn polarity(&self) -> f64 {
        let (n, s) = self.pole_m3();
        0.5 * (n + s)
    }
}

/// Frame profile of the trial field: anti-conformal core of scale `eps`
/// and a linear co-rotational tail on `1 < r < 2`.
pub fn trial_profile(eps: f64) -> Result<EquivariantProfile> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    Ok(EquivariantProfile { k: 1, flavor: ProfileFlavor::Frame, shape: RadialShape::Trial { eps } })
}
