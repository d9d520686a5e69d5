//! North-pole stereographic chart and its conformal geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::{norm, Vec3};

/// Distance to `-e3` below which a point is treated as the chart singularity.
pub const SOUTH_POLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub x1: f64,
    pub x2: f64,
}

impl ChartPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        ChartPoint { x1, x2 }
    }

    pub fn from_polar(r: f64, chi: f64) -> Self {
        ChartPoint { x1: r * chi.cos(), x2: r * chi.sin() }
    }

    #[inline]
    pub fn r2(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r2().sqrt()
    }

    #[inline]
    pub fn chi(&self) -> f64 {
        self.x2.atan2(self.x1)
    }
}

/// A point on the unit sphere. Also the outer normal `nu(y) = y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint(pub Vec3);

impl SpherePoint {
    /// Projects an arbitrary nonzero vector onto the sphere.
    pub fn from_vector(v: Vec3) -> Self {
        SpherePoint(crate::vec3::normalize(v))
    }

    #[inline]
    pub fn as_vec(&self) -> Vec3 {
        self.0
    }

    #[inline]
    pub fn is_south_pole(&self) -> bool {
        norm([self.0[0], self.0[1], self.0[2] + 1.0]) < SOUTH_POLE_TOL
    }
}

/// `lambda(x) = 2 / (1 + |x|^2)`.
#[inline]
pub fn conformal_factor(x: ChartPoint) -> f64 {
    2.0 / (1.0 + x.r2())
}

/// `Phi(x) = lambda(x) (x1, x2, (1 - |x|^2) / 2)`.
pub fn stereo_to_sphere(x: ChartPoint) -> SpherePoint {
    let r2 = x.r2();
    let lam = 2.0 / (1.0 + r2);
    SpherePoint([lam * x.x1, lam * x.x2, lam * 0.5 * (1.0 - r2)])
}

pub fn sphere_to_stereo(y: SpherePoint) -> Result<ChartPoint> {
    if y.is_south_pole() {
        return Err(Error::SouthPoleSingularity);
    }
    let d = 1.0 + y.0[2];
    Ok(ChartPoint { x1: y.0[0] / d, x2: y.0[1] / d })
}

/// Unit coordinate vector fields `tau_a = (d Phi / d x_a) / lambda`.
pub fn chart_frame(x: ChartPoint) -> (Vec3, Vec3) {
    let lam = conformal_factor(x);
    let (a, b) = (x.x1, x.x2);
    let t1 = [1.0 - lam * a * a, -lam * a * b, -lam * a];
    let t2 = [-lam * a * b, 1.0 - lam * b * b, -lam * b];
    (t1, t2)
}

/// Chart weights written as functions on the sphere, bounded at the south pole.
/// With `y3 = (1 - r^2)/(1 + r^2)`: `lambda = 1 + y3` and `lambda |x|^2 = 1 - y3`.
#[inline]
pub fn lambda_r2(y: Vec3) -> f64 {
    1.0 - y[2]
}

/// `|x|^2 lambda^2 = 1 - y3^2`.
#[inline]
pub fn r2_lambda2(y: Vec3) -> f64 {
    1.0 - y[2] * y[2]
}
