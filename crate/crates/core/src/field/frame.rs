//! Fields written in the moving frame `{tau_1, tau_2, nu}` of the chart,
//! tabulated on a polar grid.

use std::sync::Arc;

use rayon::prelude::*;

use super::{EquivariantProfile, Field, ProfileFlavor};
use crate::error::{Error, Result};
use crate::geometry::{chart_frame, sphere_to_stereo, SpherePoint, TriMesh};
use crate::vec3::{add, normalize, norm, scale, sub, Vec3, E3};

/// Frame components `u` on an `n_r x n_chi` polar grid; `u = e3` for
/// `r >= support`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    radii: Vec<f64>,
    n_chi: usize,
    support: f64,
    /// Row-major: ring `i` occupies `i * n_chi .. (i + 1) * n_chi`.
    values: Vec<Vec3>,
}

/// Log-graded radii `0, r_min .. r_max` with the given knots inserted.
pub fn graded_radii(n: usize, r_min: f64, r_max: f64, knots: &[f64]) -> Vec<f64> {
    let mut r = super::log_grid(n, r_min, r_max);
    r.extend(knots.iter().copied().filter(|&k| k > 0.0 && k < r_max));
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    r
}

impl FrameField {
    pub fn from_fn(
        radii: Vec<f64>,
        n_chi: usize,
        support: f64,
        f: impl Fn(f64, f64) -> Vec3 + Sync,
    ) -> Result<Self> {
        if radii.len() < 2 || radii[0] != 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("frame radii must start at 0 and increase".into()));
        }
        if n_chi < 8 {
            return Err(Error::InvalidInput("at least 8 angular nodes required".into()));
        }
        if !(support > 0.0) {
            return Err(Error::InvalidInput("support radius must be positive".into()));
        }
        let dchi = 2.0 * std::f64::consts::PI / n_chi as f64;
        let values = radii
            .par_iter()
            .flat_map_iter(|&r| {
                let f = &f;
                (0..n_chi).map(move |j| if r >= support { E3 } else { normalize(f(r, j as f64 * dchi)) })
            })
            .collect();
        Ok(FrameField { radii, n_chi, support, values })
    }

    /// Tabulates a frame profile. The support is the profile's `r_max`
    /// (the radius beyond which it is constant); the grid extends 50% past it.
    pub fn from_profile(p: &EquivariantProfile, n_r: usize, n_chi: usize) -> Result<Self> {
        if p.flavor != ProfileFlavor::Frame {
            return Err(Error::InvalidInput("frame field needs a frame-flavoured profile".into()));
        }
        let support = p.r_max();
        if !support.is_finite() {
            return Err(Error::UnsupportedTail(support));
        }
        let scale_min = p.knots().into_iter().fold(support, f64::min).min(1.0);
        let mut knots = p.knots();
        knots.push(support);
        let radii = graded_radii(n_r, 1e-3 * scale_min, 1.5 * support, &knots);
        let pc = p.clone();
        Self::from_fn(radii, n_chi, support, move |r, chi| {
            let th = pc.theta(r);
            let phi = pc.k as f64 * chi + pc.alpha(r);
            [th.sin() * phi.cos(), th.sin() * phi.sin(), th.cos()]
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_chi(&self) -> usize {
        self.n_chi
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn node(&self, i: usize, j: usize) -> Vec3 {
        self.values[i * self.n_chi + j]
    }

    pub fn ring(&self, i: usize) -> &[Vec3] {
        &self.values[i * self.n_chi..(i + 1) * self.n_chi]
    }

    fn ring_interp(&self, i: usize, chi: f64) -> Vec3 {
        // periodic Catmull-Rom
        let n = self.n_chi;
        let s = chi.rem_euclid(2.0 * std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * n as f64;
        let j = s.floor() as usize % n;
        let t = s - s.floor();
        let p = |k: isize| self.node(i, (j as isize + k).rem_euclid(n as isize) as usize);
        let (p0, p1, p2, p3) = (p(-1), p(0), p(1), p(2));
        let t2 = t * t;
        let t3 = t2 * t;
        let c0 = -0.5 * t3 + t2 - 0.5 * t;
        let c1 = 1.5 * t3 - 2.5 * t2 + 1.0;
        let c2 = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
        let c3 = 0.5 * t3 - 0.5 * t2;
        add(add(scale(p0, c0), scale(p1, c1)), add(scale(p2, c2), scale(p3, c3)))
    }

    /// Interpolated unit value at polar coordinates.
    pub fn sample(&self, r: f64, chi: f64) -> Vec3 {
        if r >= self.support || r >= self.r_max() {
            return E3;
        }
        let i = self.radii.partition_point(|&v| v <= r).saturating_sub(1).min(self.radii.len() - 2);
        let t = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i]);
        let a = self.ring_interp(i, chi);
        let b = self.ring_interp(i + 1, chi);
        normalize(add(scale(a, 1.0 - t), scale(b, t)))
    }

    /// Largest deviation from `e3` on the outermost ring.
    pub fn tail_defect(&self) -> f64 {
        self.ring(self.radii.len() - 1).iter().map(|u| norm(sub(*u, E3))).fold(0.0, f64::max)
    }
}

/// `m = u1 tau_1 + u2 tau_2 + u3 nu`; vertices with `r >= support` (and the
/// south pole) get `m = nu`.
pub fn frame_assemble(u: &FrameField, mesh: Arc<TriMesh>) -> Field {
    let values = mesh
        .vertices()
        .par_iter()
        .map(|&y| {
            let sp = SpherePoint(y);
            let x = match sphere_to_stereo(sp) {
                Ok(x) => x,
                Err(_) => return y,
            };
            let r = x.r();
            if r >= u.support() {
                return y;
            }
            let v = u.sample(r, x.chi());
            let (t1, t2) = chart_frame(x);
            normalize(add(add(scale(t1, v[0]), scale(t2, v[1])), scale(y, v[2])))
        })
        .collect();
    Field::from_normalized(mesh, values)
}
