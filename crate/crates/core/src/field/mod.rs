//! Sphere-valued fields on a mesh: constructors, interpolation and transforms.

mod corpus;
mod frame;
mod profile;

pub use corpus::{perturbed_hedgehog, random_smooth_field, CorpusEntry, corpus};
pub use frame::{frame_assemble, graded_radii, FrameField};
pub use profile::{
    log_grid, trial_profile, EquivariantProfile, ProfileFlavor, RadialShape, RadialState, DEFAULT_SAMPLES,
};

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{sphere_to_stereo, stereo_to_sphere, ChartPoint, SpherePoint, TriMesh};
use crate::vec3::{add, norm, normalize, scale, Rotation, Vec3};

/// Tolerance on `| |m_i| - 1 |` accepted by [`Field::new`].
pub const UNIT_TOL: f64 = 1e-10;

/// Per-vertex unit vectors on a shared mesh.
#[derive(Debug, Clone)]
pub struct Field {
    mesh: Arc<TriMesh>,
    values: Vec<Vec3>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) && self.values == other.values
    }
}

impl Field {
    /// Wraps values that must already be unit length.
    pub fn new(mesh: Arc<TriMesh>, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "{} values for a mesh with {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) || (norm(*v) - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidInput(format!("value {i} is not a unit vector: {v:?}")));
            }
        }
        Ok(Field { mesh, values })
    }

    /// Normalizes every value; panics on zero vectors.
    pub fn from_normalized(mesh: Arc<TriMesh>, values: Vec<Vec3>) -> Self {
        debug_assert_eq!(values.len(), mesh.n_vertices());
        let values = values.into_par_iter().map(normalize).collect();
        Field { mesh, values }
    }

    /// Evaluates `f` at every vertex and normalizes.
    pub fn from_fn(mesh: Arc<TriMesh>, f: impl Fn(Vec3) -> Vec3 + Sync) -> Self {
        let values = mesh.vertices().par_iter().map(|&y| normalize(f(y))).collect();
        Field { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn value(&self, i: usize) -> Vec3 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.values
    }

    /// Same mesh, new values (normalized).
    pub fn with_values(&self, values: Vec<Vec3>) -> Self {
        Field::from_normalized(self.mesh.clone(), values)
    }

    /// Same mesh, values taken as given. Used for Runge-Kutta stages and
    /// other intermediate vectors that are not unit length.
    pub(crate) fn with_raw_values(&self, values: Vec<Vec3>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Field { mesh: self.mesh.clone(), values }
    }

    /// Area-weighted L2 distance to another field on the same mesh.
    pub fn l2_distance(&self, other: &Field) -> f64 {
        let a = self.mesh.vertex_area();
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .zip(a)
            .map(|((u, v), w)| w * crate::vec3::norm2(crate::vec3::sub(*u, *v)))
            .collect();
        crate::vec3::pairwise_sum(&terms).sqrt()
    }
}

/// `m = sign * nu`; any negative `sign` gives the antipodal map.
pub fn hedgehog(sign: i32, mesh: Arc<TriMesh>) -> Field {
    let s = if sign < 0 { -1.0 } else { 1.0 };
    let values = mesh.vertices().iter().map(|&y| scale(y, s)).collect();
    Field { mesh, values }
}

pub fn constant_field(d: Vec3, mesh: Arc<TriMesh>) -> Result<Field> {
    if !d.iter().all(|c| c.is_finite()) || (norm(d) - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitDirection(d));
    }
    let values = vec![d; mesh.n_vertices()];
    Ok(Field { mesh, values })
}

/// Samples an equivariant profile at the polar chart coordinates of every
/// vertex. The south pole is `r = inf`.
pub fn from_equivariant(p: &EquivariantProfile, mesh: Arc<TriMesh>) -> Result<Field> {
    let r_max = p.r_max();
    let tail_constant = (p.theta(r_max)).sin().abs() < 1e-8;
    let values: Result<Vec<Vec3>> = mesh
        .vertices()
        .par_iter()
        .map(|&y| {
            let sp = SpherePoint(y);
            if sp.is_south_pole() {
                return Ok(p.eval(f64::INFINITY, 0.0));
            }
            let x = sphere_to_stereo(sp)?;
            let r = x.r();
            if r > r_max && !tail_constant {
                return Err(Error::ProfileOutOfRange(format!("vertex at r = {r} beyond r_max = {r_max}")));
            }
            Ok(normalize(p.eval(r, x.chi())))
        })
        .collect();
    Ok(Field { mesh, values: values? })
}

/// Value at an arbitrary point: gnomonic point location, barycentric blend
/// of the three vertex values, normalization.
pub fn interpolate(m: &Field, y: SpherePoint) -> Result<Vec3> {
    let mesh = &m.mesh;
    let (t, w) = mesh.locate(y.0);
    let tri = mesh.triangles()[t];
    for k in 0..3 {
        if mesh.vertex(tri[k]) == y.0 {
            return Ok(m.values[tri[k]]);
        }
    }
    let v = add(
        add(scale(m.values[tri[0]], w[0]), scale(m.values[tri[1]], w[1])),
        scale(m.values[tri[2]], w[2]),
    );
    let n = norm(v);
    if n < 1e-6 {
        return Err(Error::DegenerateBlend(n));
    }
    Ok(scale(v, 1.0 / n))
}

/// `m_R(y) = R m(R^-1 y)`.
pub fn rotate_joint(m: &Field, r: &Rotation) -> Result<Field> {
    let r = Rotation::new(r.0)?;
    let values: Result<Vec<Vec3>> = m
        .mesh
        .vertices()
        .par_iter()
        .map(|&y| interpolate(m, SpherePoint(r.apply_inverse(y))).map(|v| normalize(r.apply(v))))
        .collect();
    Ok(Field { mesh: m.mesh.clone(), values: values? })
}

/// Spin-only rotation `m -> R m` (no change of the base point).
pub fn rotate_spin(m: &Field, r: &Rotation) -> Field {
    let values = m.values.par_iter().map(|&v| normalize(r.apply(v))).collect();
    Field { mesh: m.mesh.clone(), values }
}

/// Coordinate-only rotation `m -> m(R^-1 y)`.
pub fn rotate_coordinates(m: &Field, r: &Rotation) -> Result<Field> {
    let values: Result<Vec<Vec3>> =
        m.mesh.vertices().par_iter().map(|&y| interpolate(m, SpherePoint(r.apply_inverse(y)))).collect();
    Ok(Field { mesh: m.mesh.clone(), values: values? })
}

/// `m_s(x) = m(s x1, x2)` in the chart; the south pole keeps its value.
pub fn elliptical_distort(m: &Field, s: f64) -> Result<Field> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!("distortion parameter must be positive, got {s}")));
    }
    let values: Result<Vec<Vec3>> = m
        .mesh
        .vertices()
        .par_iter()
        .enumerate()
        .map(|(i, &y)| {
            let sp = SpherePoint(y);
            if sp.is_south_pole() {
                return Ok(m.values[i]);
            }
            let x = sphere_to_stereo(sp)?;
            let xs = ChartPoint::new(s * x.x1, x.x2);
            interpolate(m, stereo_to_sphere(xs))
        })
        .collect();
    Ok(Field { mesh: m.mesh.clone(), values: values? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_icosphere;
    use crate::vec3::{sub, E3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values().iter().zip(b.values()).map(|(u, v)| norm(sub(*u, *v))).fold(0.0, f64::max)
    }

    #[test]
    fn constructors() {
        let mesh = build_icosphere(3).unwrap();
        let h = hedgehog(1, mesh.clone());
        assert_eq!(h.values(), mesh.vertices());
        assert!(matches!(constant_field([0.0, 0.0, 2.0], mesh.clone()), Err(Error::NonUnitDirection(_))));
        let c = constant_field(E3, mesh.clone()).unwrap();
        assert!(c.values().iter().all(|v| *v == E3));
        assert!(Field::new(mesh.clone(), vec![[1.0, 1.0, 0.0]; mesh.n_vertices()]).is_err());
        let nu = from_equivariant(&EquivariantProfile::identity(), mesh.clone()).unwrap();
        assert!(max_diff(&nu, &h) < 1e-13);
    }

    #[test]
    fn interpolation_reproduces_vertices_and_normal() {
        let mesh = build_icosphere(3).unwrap();
        let h = hedgehog(1, mesh.clone());
        let g = Field::from_fn(mesh.clone(), |y| [y[0] + 0.3, y[1] * y[2], 1.0]);
        for i in (0..mesh.n_vertices()).step_by(13) {
            assert_eq!(interpolate(&g, SpherePoint(mesh.vertex(i))).unwrap(), g.value(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let y = Rotation::random(&mut rng).apply(E3);
            assert!(norm(sub(interpolate(&h, SpherePoint(y)).unwrap(), y)) < 1e-12);
        }
    }

    #[test]
    fn degenerate_blend_detected() {
        let mesh = build_icosphere(0).unwrap();
        let mut vals = vec![E3; mesh.n_vertices()];
        let [a, b, _] = mesh.triangles()[0];
        vals[b] = [0.0, 0.0, -1.0];
        let m = Field::new(mesh.clone(), vals).unwrap();
        let mid = normalize(add(mesh.vertex(a), mesh.vertex(b)));
        assert!(matches!(interpolate(&m, SpherePoint(mid)), Err(Error::DegenerateBlend(_))));
    }

    #[test]
    fn joint_rotation_group_action() {
        let mesh = build_icosphere(4).unwrap();
        let m = random_smooth_field(mesh.clone(), 0, 0.6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r1 = Rotation::random(&mut rng);
        let r2 = Rotation::random(&mut rng);
        let a = rotate_joint(&rotate_joint(&m, &r1).unwrap(), &r2).unwrap();
        let b = rotate_joint(&m, &r2.compose(&r1)).unwrap();
        let h = mesh.mean_edge_length();
        assert!(a.l2_distance(&b) < 4.0 * h * h * 10.0, "{}", a.l2_distance(&b));
        let id = rotate_joint(&m, &Rotation::IDENTITY).unwrap();
        assert!(max_diff(&id, &m) < 1e-14);
        let nu = hedgehog(1, mesh.clone());
        assert!(max_diff(&rotate_joint(&nu, &r1).unwrap(), &nu) < 1e-12);
    }

    #[test]
    fn elliptical_distortion_inverse() {
        let mesh = build_icosphere(4).unwrap();
        let m = from_equivariant(&trial_profile(0.3).unwrap(), mesh.clone()).unwrap();
        assert!(max_diff(&elliptical_distort(&m, 1.0).unwrap(), &m) < 1e-14);
        let back = elliptical_distort(&elliptical_distort(&m, 1.2).unwrap(), 1.0 / 1.2).unwrap();
        let h = mesh.mean_edge_length();
        assert!(back.l2_distance(&m) < 40.0 * h * h, "{}", back.l2_distance(&m));
        assert!(elliptical_distort(&m, 0.0).is_err());
    }
}
