use std::collections::BTreeMap;

use nbcollide_core::bodies::{RigidBody, Shape};
use nbcollide_core::collision::{forces_general, forces_spherical, preprocess, BoxDomain, CollisionMap, Domain, Mode};
use nbcollide_core::dynamics::{CollisionParams, FluidProperties, ScenarioState};
use nbcollide_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 0.01;
const RHO: f64 = 0.08;

/// Disks in [0, 2]² whose wall gaps stay outside both zones and whose pair
/// gaps are resolvable by the mesh and at least 2h away from ρ.
fn random_disks(rng: &mut ChaCha8Rng, n: usize) -> Vec<(Vec3, f64)> {
    'retry: loop {
        let mut disks: Vec<(Vec3, f64)> = Vec::new();
        while disks.len() < n {
            let r = rng.random_range(0.08..0.12);
            let c = if !disks.is_empty() && rng.random_bool(0.6) {
                let (c0, r0) = disks[rng.random_range(0..disks.len())];
                let gap = rng.random_range(3.0 * H..RHO - 2.0 * H);
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                c0 + (r0 + r + gap) * Vec3::new(a.cos(), a.sin(), 0.0)
            } else {
                Vec3::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), 0.0)
            };
            let wall_ok = (0..2).all(|k| c[k] - r >= RHO + 3.0 * H && 2.0 - c[k] - r >= RHO + 3.0 * H);
            let pairs_ok = disks.iter().all(|(c1, r1)| {
                let g = (c - c1).norm() - r - r1;
                g >= 3.0 * H && (g - RHO).abs() >= 2.0 * H
            });
            if wall_ok && pairs_ok {
                disks.push((c, r));
            } else if rng.random_bool(0.01) {
                continue 'retry;
            }
        }
        return disks;
    }
}

fn state(disks: &[(Vec3, f64)], mode: Mode) -> ScenarioState {
    let bodies = disks
        .iter()
        .enumerate()
        .map(|(i, (c, r))| RigidBody::new(i, 2, Shape::Sphere { radius: *r }, 1.1, *c).unwrap())
        .collect();
    let mut params = CollisionParams::with_defaults(mode, H);
    params.rho = RHO;
    let domain = Domain::Box(BoxDomain::new(2, Vec3::zeros(), Vec3::new(2.0, 2.0, 0.0)));
    ScenarioState::new(2, bodies, domain, FluidProperties::new(1.0, 0.01, Vec3::zeros()), params, 1e-3).unwrap()
}

fn pair_distances(map: &CollisionMap) -> BTreeMap<(usize, isize), f64> {
    map.pairs.iter().map(|p| ((p.i, p.j), p.distance)).collect()
}

#[test]
fn general_detection_matches_spherical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut total_pairs = 0;
    for _ in 0..5 {
        let n = rng.random_range(3..=10);
        let disks = random_disks(&mut rng, n);
        let (exact, _) = state(&disks, Mode::Spherical).detect().unwrap();
        let (meshed, elements) = state(&disks, Mode::General).detect().unwrap();
        assert!(elements > 0);
        let (a, b) = (pair_distances(&exact), pair_distances(&meshed));
        assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
        for (k, d) in &a {
            assert!((d - b[k]).abs() <= 2.0 * H, "pair {k:?}: {d} vs {}", b[k]);
        }
        total_pairs += a.len();
    }
    assert!(total_pairs > 0);
}

#[test]
fn pair_forces_are_antisymmetric() {
    let disks = [(Vec3::new(0.5, 0.5, 0.0), 0.1), (Vec3::new(0.73, 0.55, 0.0), 0.1)];
    let s = state(&disks, Mode::Spherical);
    let (map, _) = s.detect().unwrap();
    assert_eq!(map.body_pair_count(), 1);
    let pre = preprocess(&s.bodies, &s.domain, Mode::Spherical).unwrap();
    let f = forces_spherical(&map, &pre, 1e-4, 1e-4);
    assert_eq!(f[0].force, -f[1].force);
    assert!(f[0].force.x < 0.0);

    let g = forces_general(&map, &s.bodies, 1e-4, 1e-4);
    assert_eq!(g[0].force, -g[1].force);
    // centers are the contact points here, so there is no lever arm
    assert_eq!(g[0].torque, Vec3::zeros());
    assert_eq!(g[1].torque, Vec3::zeros());
}
