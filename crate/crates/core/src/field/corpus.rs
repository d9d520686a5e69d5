//! Seeded test corpus: low-pass random fields and a fixed set of
//! equivariant and constant fields with known charge.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{constant_field, from_equivariant, hedgehog, trial_profile, EquivariantProfile, Field, ProfileFlavor};
use crate::geometry::TriMesh;
use crate::vec3::{add, dot, normalize, scale, tangent, Vec3, E3};

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    normalize([rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)])
}

/// Three polynomial modes `c_k (d_k . y)^n_k` with `n_k <= 3`.
fn modes(rng: &mut ChaCha8Rng) -> Vec<(Vec3, Vec3, i32)> {
    (0..3)
        .map(|_| {
            let c = random_unit(rng);
            let d = random_unit(rng);
            let n = rng.random_range(1..=3);
            (c, d, n)
        })
        .collect()
}

fn mode_sum(ms: &[(Vec3, Vec3, i32)], amp: f64, y: Vec3) -> Vec3 {
    ms.iter().fold([0.0; 3], |acc, (c, d, n)| add(acc, scale(*c, amp * dot(*d, y).powi(*n))))
}

/// `base + sum of three modes`, normalized. `charge` selects the base:
/// `1 -> nu`, `-1 -> -nu`, otherwise `e3`. For `amp < 1/3` the perturbation
/// never cancels the base, so the charge of the base is kept.
pub fn random_smooth_field(mesh: Arc<TriMesh>, charge: i32, amp: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ms = modes(&mut rng);
    Field::from_fn(mesh, move |y| {
        let base = match charge {
            1 => y,
            -1 => scale(y, -1.0),
            _ => E3,
        };
        add(base, mode_sum(&ms, amp, y))
    })
}

/// `nu + amp * (smooth random tangent field)`, normalized.
pub fn perturbed_hedgehog(mesh: Arc<TriMesh>, amp: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ms = modes(&mut rng);
    Field::from_fn(mesh, move |y| add(y, tangent(y, mode_sum(&ms, amp, y))))
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub field: Field,
    pub expected_charge: i32,
}

/// Fixed constructor fields plus seeded random fields, all resolved at
/// level >= 4.
pub fn corpus(mesh: Arc<TriMesh>, seed: u64) -> Vec<CorpusEntry> {
    let mut out = vec![
        CorpusEntry { name: "hedgehog".into(), field: hedgehog(1, mesh.clone()), expected_charge: 1 },
        CorpusEntry { name: "antihedgehog".into(), field: hedgehog(-1, mesh.clone()), expected_charge: -1 },
        CorpusEntry { name: "constant".into(), field: constant_field(E3, mesh.clone()).unwrap(), expected_charge: 0 },
    ];
    let k2 = EquivariantProfile::tabulate(2, ProfileFlavor::Ambient, 2048, 1e-4, 1e9, |r| 2.0 * r.atan(), |_| 0.0)
        .unwrap();
    out.push(CorpusEntry {
        name: "equivariant_k2".into(),
        field: from_equivariant(&k2, mesh.clone()).unwrap(),
        expected_charge: 2,
    });
    let km1 = EquivariantProfile::tabulate(-1, ProfileFlavor::Ambient, 2048, 1e-4, 1e9, |r| 2.0 * (0.7 * r).atan(), |r| 0.3 * r / (1.0 + r))
        .unwrap();
    out.push(CorpusEntry {
        name: "equivariant_km1".into(),
        field: from_equivariant(&km1, mesh.clone()).unwrap(),
        expected_charge: -1,
    });
    out.push(CorpusEntry {
        name: "trial_0.3".into(),
        field: from_equivariant(&trial_profile(0.3).unwrap(), mesh.clone()).unwrap(),
        expected_charge: 0,
    });
    for (j, q) in [0, 1, -1, 0].into_iter().enumerate() {
        out.push(CorpusEntry {
            name: format!("random_q{q}_{j}"),
            field: random_smooth_field(mesh.clone(), q, 0.3, seed.wrapping_add(j as u64)),
            expected_charge: q,
        });
    }
    out
}
