//! Stereographic chart, conformal geometry and the icosphere discretization.

mod azimuthal;
mod chart;
mod mesh;

pub use azimuthal::{azimuthal_derivative, azimuthal_derivative_about, azimuthal_derivative_orbit, POLE_TOL};
pub use chart::{
    chart_frame, conformal_factor, lambda_r2, r2_lambda2, sphere_to_stereo, stereo_to_sphere, ChartPoint,
    SpherePoint, SOUTH_POLE_TOL,
};
pub use mesh::{Edge, TriMesh, MAX_LEVEL};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::Result;

/// Shared icosphere of the given level. Meshes are built once per process
/// and cached, since the vertex relaxation dominates construction time.
pub fn build_icosphere(level: usize) -> Result<Arc<TriMesh>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<TriMesh>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(m) = guard.get(&level) {
        return Ok(m.clone());
    }
    let m = Arc::new(TriMesh::icosphere(level)?);
    guard.insert(level, m.clone());
    Ok(m)
}
