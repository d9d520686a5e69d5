//! Geodesic icosphere triangulation with spherical dual-cell areas, cotangent
//! edge weights and hierarchical point location.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::vec3::{cross, det3, dot, norm, normalize, solid_angle, sub, Vec3};

pub const MAX_LEVEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// `(cot a + cot b) / 2` over the two flat triangles sharing the edge.
    pub cotan: f64,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    level: usize,
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    vertex_area: Vec<f64>,
    edges: Vec<Edge>,
    /// Mean length of the edges incident to each vertex.
    local_edge_len: Vec<f64>,
    /// Triangle lists of every subdivision level; children of triangle `t`
    /// at level `l` are `4t..4t+4` at level `l + 1`.
    hierarchy: Vec<Vec<[usize; 3]>>,
    /// One-ring neighbours in CSR layout.
    nbr_offsets: Vec<usize>,
    nbr: Vec<usize>,
    /// Orthonormal tangent basis per vertex.
    tangent_basis: Vec<(Vec3, Vec3)>,
    /// Tangent-gradient weights: `grad f(y_i) = sum_j c_ij (f_j - f_i)` with
    /// `c_ij` in the tangent basis of `i`.
    grad_coef: Vec<[f64; 2]>,
    /// Normalized centroids of the triangles.
    centers: Vec<Vec3>,
    /// `adjacency[t][k]` shares the edge opposite corner `k` of `t`.
    adjacency: Vec<[usize; 3]>,
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw: [Vec3; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let verts: Vec<Vec3> = raw.iter().map(|v| normalize(*v)).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for f in faces.iter_mut() {
        if det3(verts[f[0]], verts[f[1]], verts[f[2]]) < 0.0 {
            f.swap(1, 2);
        }
    }
    (verts, faces)
}

fn subdivide(vertices: &mut Vec<Vec3>, faces: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 2);
    let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
        let key = if a < b { (a, b) } else { (b, a) };
        *midpoints.entry(key).or_insert_with(|| {
            let m = normalize(crate::vec3::add(verts[a], verts[b]));
            verts.push(m);
            verts.len() - 1
        })
    };
    let mut out = Vec::with_capacity(faces.len() * 4);
    for &[a, b, c] in faces {
        let ab = mid(a, b, vertices);
        let bc = mid(b, c, vertices);
        let ca = mid(c, a, vertices);
        out.push([a, ab, ca]);
        out.push([ab, b, bc]);
        out.push([ca, bc, c]);
        out.push([ab, bc, ca]);
    }
    out
}

#[inline]
fn cot_at(apex: Vec3, p: Vec3, q: Vec3) -> f64 {
    let e1 = sub(p, apex);
    let e2 = sub(q, apex);
    dot(e1, e2) / norm(cross(e1, e2))
}

/// Orthonormal tangent pair at `y`; `b1` follows `e3 x y` away from the poles.
pub(crate) fn tangent_frame(y: Vec3) -> (Vec3, Vec3) {
    let a = cross(crate::vec3::E3, y);
    let b1 = if norm(a) > 1e-8 { normalize(a) } else { normalize(cross(y, crate::vec3::E2)) };
    (b1, cross(y, b1))
}

/// Least-squares quadratic fit through the centre value over the one-ring,
/// in orthogonally projected tangent coordinates (exact for linear
/// functions of the ambient coordinates up to O(h^3)). Returns the weights
/// mapping neighbour differences to the tangent gradient.
fn quadratic_fit_gradient(y: Vec3, basis: (Vec3, Vec3), ring: &[usize], verts: &[Vec3], h: f64) -> Vec<[f64; 2]> {
    use nalgebra::{DMatrix, SMatrix};
    let n = ring.len();
    let mut a = DMatrix::<f64>::zeros(n, 5);
    for (r, &j) in ring.iter().enumerate() {
        let t = sub(verts[j], y);
        let p = dot(t, basis.0) / h;
        let q = dot(t, basis.1) / h;
        let row = [p, q, 0.5 * p * p, p * q, 0.5 * q * q];
        for (c, v) in row.iter().enumerate() {
            a[(r, c)] = *v;
        }
    }
    let ata: SMatrix<f64, 5, 5> = SMatrix::from_iterator((a.transpose() * &a).iter().copied());
    let inv = ata.try_inverse().expect("degenerate one-ring stencil");
    let at = a.transpose();
    (0..n)
        .map(|r| {
            let mut g = [0.0; 2];
            for (k, gk) in g.iter_mut().enumerate() {
                *gk = (0..5).map(|c| inv[(k, c)] * at[(c, r)]).sum::<f64>() / h;
            }
            g
        })
        .collect()
}

/// Neighbouring triangle across the edge opposite each corner.
fn triangle_adjacency(triangles: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut by_edge: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3);
    for (t, &[a, b, c]) in triangles.iter().enumerate() {
        for (i, j) in [(a, b), (b, c), (c, a)] {
            by_edge.insert((i, j), t);
        }
    }
    triangles
        .iter()
        .map(|&[a, b, c]| [by_edge[&(c, b)], by_edge[&(a, c)], by_edge[&(b, a)]])
        .collect()
}

/// Tangential part of the gradient of the total flat area at each vertex,
/// `1/2 sum_ij cot (y_j - y_i)` projected; zero iff the cotangent Laplacian
/// of the position field is normal.
fn area_force(v: &[Vec3], triangles: &[[usize; 3]]) -> (Vec<Vec3>, Vec<f64>) {
    let mut f = vec![[0.0; 3]; v.len()];
    let mut wsum = vec![0.0; v.len()];
    for &[a, b, c] in triangles {
        for (i, j, k) in [(a, b, c), (b, c, a), (c, a, b)] {
            let w = 0.5 * cot_at(v[k], v[i], v[j]);
            let d = crate::vec3::scale(sub(v[j], v[i]), w);
            f[i] = crate::vec3::add(f[i], d);
            f[j] = sub(f[j], d);
            wsum[i] += w;
            wsum[j] += w;
        }
    }
    for (fi, y) in f.iter_mut().zip(v) {
        *fi = crate::vec3::tangent(*y, *fi);
    }
    (f, wsum)
}

/// Moves vertices along the sphere to a critical point of the inscribed
/// polyhedron's area. Symmetries of the input are kept.
fn relax(v: &mut [Vec3], triangles: &[[usize; 3]]) -> f64 {
    // Jacobi-scaled ascent, Nesterov momentum with gradient restart
    let mut vel = vec![[0.0; 3]; v.len()];
    let mut k = 0usize;
    let mut res = f64::INFINITY;
    for _ in 0..RELAX_MAX_ITER {
        let (f, wsum) = area_force(v, triangles);
        res = f.iter().map(|x| norm(*x)).fold(0.0, |a: f64, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) });
        if res < RELAX_TOL || res.is_nan() {
            break;
        }
        let step: Vec<Vec3> = f.iter().zip(&wsum).map(|(fi, w)| crate::vec3::scale(*fi, -0.5 / w)).collect();
        let along: f64 = step.iter().zip(&vel).map(|(a, b)| dot(*a, *b)).sum();
        if along < 0.0 {
            k = 0;
            vel.iter_mut().for_each(|u| *u = [0.0; 3]);
        }
        k += 1;
        let beta = (k as f64 - 1.0) / (k as f64 + 2.0);
        for ((y, s), u) in v.iter_mut().zip(&step).zip(vel.iter_mut()) {
            *u = crate::vec3::tangent(*y, crate::vec3::add(crate::vec3::scale(*u, beta), *s));
            *y = normalize(crate::vec3::add(*y, *u));
        }
    }
    res
}

const RELAX_TOL: f64 = 1e-14;
const RELAX_MAX_ITER: usize = 200_000;

/// Areas of the spherical circumcentric dual cells. The cells tile the
/// sphere when every triangle is acute, so the areas sum to `4 pi`.
fn voronoi_areas(v: &[Vec3], triangles: &[[usize; 3]]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for &[a, b, c] in triangles {
        let cc = normalize(cross(sub(v[b], v[a]), sub(v[c], v[a])));
        for (i, j, k) in [(a, b, c), (b, c, a), (c, a, b)] {
            let mij = normalize(crate::vec3::add(v[i], v[j]));
            let mik = normalize(crate::vec3::add(v[i], v[k]));
            out[i] += solid_angle(v[i], mij, cc) + solid_angle(v[i], cc, mik);
        }
    }
    out
}

impl TriMesh {
    pub fn icosphere(level: usize) -> Result<TriMesh> {
        if level > MAX_LEVEL {
            return Err(Error::LevelOutOfRange(level));
        }
        let (mut vertices, faces) = icosahedron();
        let mut hierarchy = vec![faces];
        for _ in 0..level {
            let next = subdivide(&mut vertices, hierarchy.last().unwrap());
            let res = relax(&mut vertices, &next);
            debug_assert!(res < 1e-10, "vertex relaxation stalled at {res:e}");
            hierarchy.push(next);
        }
        let triangles = hierarchy.last().unwrap().clone();
        let nv = vertices.len();

        let vertex_area = voronoi_areas(&vertices, &triangles);

        let mut edge_map: HashMap<(usize, usize), f64> = HashMap::with_capacity(triangles.len() * 2);
        for &[a, b, c] in &triangles {
            for (i, j, k) in [(a, b, c), (b, c, a), (c, a, b)] {
                let key = if i < j { (i, j) } else { (j, i) };
                *edge_map.entry(key).or_insert(0.0) +=
                    0.5 * cot_at(vertices[k], vertices[i], vertices[j]);
            }
        }
        let mut edges: Vec<Edge> = edge_map
            .into_iter()
            .map(|((i, j), cotan)| Edge { i, j, cotan })
            .collect();
        edges.sort_by_key(|e| (e.i, e.j));

        let mut len_sum = vec![0.0; nv];
        let mut deg = vec![0usize; nv];
        for e in &edges {
            let l = norm(sub(vertices[e.i], vertices[e.j]));
            len_sum[e.i] += l;
            len_sum[e.j] += l;
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        let local_edge_len: Vec<f64> = len_sum.iter().zip(&deg).map(|(s, d)| s / *d as f64).collect();

        let mut nbr_offsets = Vec::with_capacity(nv + 1);
        nbr_offsets.push(0);
        for d in &deg {
            nbr_offsets.push(nbr_offsets.last().unwrap() + d);
        }
        let mut fill = nbr_offsets[..nv].to_vec();
        let mut nbr = vec![0usize; nbr_offsets[nv]];
        for e in &edges {
            nbr[fill[e.i]] = e.j;
            fill[e.i] += 1;
            nbr[fill[e.j]] = e.i;
            fill[e.j] += 1;
        }
        let centers = triangles
            .iter()
            .map(|&[a, b, c]| normalize(crate::vec3::add(crate::vec3::add(vertices[a], vertices[b]), vertices[c])))
            .collect();
        let adjacency = triangle_adjacency(&triangles);
        let tangent_basis: Vec<(Vec3, Vec3)> = vertices.iter().map(|&y| tangent_frame(y)).collect();
        let mut grad_coef = vec![[0.0; 2]; nbr.len()];
        for i in 0..nv {
            let (lo, hi) = (nbr_offsets[i], nbr_offsets[i + 1]);
            let c = quadratic_fit_gradient(vertices[i], tangent_basis[i], &nbr[lo..hi], &vertices, local_edge_len[i]);
            grad_coef[lo..hi].copy_from_slice(&c);
        }

        Ok(TriMesh {
            level,
            vertices,
            triangles,
            vertex_area,
            edges,
            local_edge_len,
            hierarchy,
            nbr_offsets,
            nbr,
            tangent_basis,
            grad_coef,
            centers,
            adjacency,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_area(&self) -> &[f64] {
        &self.vertex_area
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn local_edge_len(&self) -> &[f64] {
        &self.local_edge_len
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.nbr[self.nbr_offsets[i]..self.nbr_offsets[i + 1]]
    }

    pub fn tangent_basis(&self, i: usize) -> (Vec3, Vec3) {
        self.tangent_basis[i]
    }

    /// Derivative of the vertex function `f` at vertex `i` along the tangent
    /// vector `v`, from the one-ring quadratic fit.
    pub fn directional_derivative(&self, f: &[Vec3], i: usize, v: Vec3) -> Vec3 {
        let (b1, b2) = self.tangent_basis[i];
        let (v1, v2) = (dot(v, b1), dot(v, b2));
        let (lo, hi) = (self.nbr_offsets[i], self.nbr_offsets[i + 1]);
        let mut out = [0.0; 3];
        for (c, &j) in self.grad_coef[lo..hi].iter().zip(&self.nbr[lo..hi]) {
            let w = c[0] * v1 + c[1] * v2;
            out = crate::vec3::axpy(out, w, sub(f[j], f[i]));
        }
        out
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Normalized centroid of a mesh triangle.
    pub fn triangle_center(&self, t: usize) -> Vec3 {
        self.centers[t]
    }

    pub fn triangle_centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn mean_edge_length(&self) -> f64 {
        let s: f64 = self.edges.iter().map(|e| norm(sub(self.vertices[e.i], self.vertices[e.j]))).sum();
        s / self.edges.len() as f64
    }

    pub fn total_area(&self) -> f64 {
        crate::vec3::pairwise_sum(&self.vertex_area)
    }

    /// Locates the spherical triangle containing direction `p` and returns
    /// its index with gnomonic barycentric weights (summing to one).
    pub fn locate(&self, p: Vec3) -> (usize, [f64; 3]) {
        let score = |tri: &[usize; 3]| -> f64 {
            let [a, b, c] = *tri;
            let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
            det3(va, vb, p).min(det3(vb, vc, p)).min(det3(vc, va, p))
        };
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (t, tri) in self.hierarchy[0].iter().enumerate() {
            let s = score(tri);
            if s > best_score {
                best_score = s;
                best = t;
            }
        }
        for lvl in 1..self.hierarchy.len() {
            let tris = &self.hierarchy[lvl];
            let base = 4 * best;
            let mut b = base;
            let mut bs = f64::NEG_INFINITY;
            for t in base..base + 4 {
                let s = score(&tris[t]);
                if s > bs {
                    bs = s;
                    b = t;
                }
            }
            best = b;
        }
        // Relaxed vertices make the hierarchy nest only approximately;
        // finish with a walk across edges with negative weight.
        for _ in 0..self.triangles.len() {
            let [a, b, c] = self.triangles[best];
            let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
            let w = [det3(p, vb, vc), det3(va, p, vc), det3(va, vb, p)];
            let (k, wmin) = w.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &x)| if x < acc.1 { (k, x) } else { acc });
            // tolerance absorbs rounding on shared edges
            if wmin >= -1e-15 {
                break;
            }
            let next = self.adjacency[best][k];
            best = next;
        }
        let [a, b, c] = self.triangles[best];
        let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let w = [det3(p, vb, vc), det3(va, p, vc), det3(va, vb, p)];
        let s = w[0] + w[1] + w[2];
        (best, [w[0] / s, w[1] / s, w[2] / s])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn counts() {
        let m0 = TriMesh::icosphere(0).unwrap();
        assert_eq!(m0.n_vertices(), 12);
        assert_eq!(m0.triangles().len(), 20);
        for level in 0..=5 {
            let m = TriMesh::icosphere(level).unwrap();
            assert_eq!(m.n_vertices(), 10 * 4usize.pow(level as u32) + 2);
            let (v, e, f) = (m.n_vertices() as i64, m.edges().len() as i64, m.triangles().len() as i64);
            assert_eq!(v - e + f, 2);
        }
        assert_eq!(TriMesh::icosphere(3).unwrap().n_vertices(), 642);
        assert!(matches!(TriMesh::icosphere(9), Err(Error::LevelOutOfRange(9))));
    }

    #[test]
    fn orientation_and_manifold() {
        let m = TriMesh::icosphere(3).unwrap();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, &[a, b, c]) in m.triangles().iter().enumerate() {
            assert!(det3(m.vertex(a), m.vertex(b), m.vertex(c)) > 0.0);
            for (i, j) in [(a, b), (b, c), (c, a)] {
                assert!(directed.insert((i, j), t).is_none(), "directed edge repeated");
            }
        }
        for &(i, j) in directed.keys() {
            assert!(directed.contains_key(&(j, i)), "edge ({i},{j}) lacks its opposite");
        }
        for v in m.vertices() {
            assert!((norm(*v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lumped_area_sums_to_sphere() {
        for level in [4, 5] {
            let m = TriMesh::icosphere(level).unwrap();
            assert!((m.total_area() - 4.0 * PI).abs() < 1e-6 * 4.0 * PI);
        }
    }

    #[test]
    fn one_ring_gradient_accuracy() {
        // f = y is reproduced to third order; f = y1 y2 y3 to second order
        for level in [3, 4, 5] {
            let m = TriMesh::icosphere(level).unwrap();
            let lin: Vec<Vec3> = m.vertices().to_vec();
            let quad: Vec<Vec3> = m.vertices().iter().map(|y| [y[0] * y[1], y[1] * y[2], y[2] * y[0]]).collect();
            let (mut e_lin, mut e_quad) = (0.0_f64, 0.0_f64);
            for i in 0..m.n_vertices() {
                let y = m.vertex(i);
                let v = tangent_frame(y).0;
                let d = m.directional_derivative(&lin, i, v);
                e_lin = e_lin.max(norm(sub(d, v)));
                let exact = [v[0] * y[1] + y[0] * v[1], v[1] * y[2] + y[1] * v[2], v[2] * y[0] + y[2] * v[0]];
                let d = m.directional_derivative(&quad, i, v);
                e_quad = e_quad.max(norm(sub(d, exact)));
            }
            let h = m.mean_edge_length();
            assert!(e_lin < 0.2 * h * h, "level {level}: {e_lin}");
            assert!(e_quad < 2.0 * h * h, "level {level}: {e_quad}");
        }
    }

    #[test]
    fn locate_vertices_and_random_points() {
        let m = TriMesh::icosphere(4).unwrap();
        for i in (0..m.n_vertices()).step_by(7) {
            let (t, w) = m.locate(m.vertex(i));
            let tri = m.triangles()[t];
            let k = tri.iter().position(|&v| v == i).expect("vertex in located triangle");
            assert!((w[k] - 1.0).abs() < 1e-12);
        }
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let p = normalize([
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            let (_, w) = m.locate(p);
            assert!(w.iter().all(|&x| x > -1e-12), "{w:?}");
        }
    }
}
