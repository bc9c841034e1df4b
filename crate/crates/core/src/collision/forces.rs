use rayon::prelude::*;

use super::{CollisionMap, CollisionPair, PreprocessData};
use crate::bodies::{ForceTorque, RigidBody};
use crate::Vec3;

fn activation(p: &CollisionPair, rho: f64, eps: f64, eps_wall: f64) -> f64 {
    let d = if p.distance < 0.0 {
        log::warn!("overlap between body {} and {} (distance {:e}); clamped to contact", p.i, p.j, p.distance);
        0.0
    } else {
        p.distance
    };
    let e = if p.is_wall() { eps_wall } else { eps };
    (rho - d).powi(2) / e
}

/// Sums per-pair contributions into per-body totals in map order, so the
/// result does not depend on how the pairs were evaluated.
fn accumulate(n: usize, map: &CollisionMap, per_pair: Vec<(ForceTorque, ForceTorque)>) -> Vec<ForceTorque> {
    let mut out = vec![ForceTorque::default(); n];
    for (p, (on_i, on_j)) in map.pairs.iter().zip(per_pair) {
        out[p.i] += on_i;
        if !p.is_wall() {
            out[p.j as usize] += on_j;
        }
    }
    out
}

/// Repulsion between spherical bodies: `F = (CM_i − CM_j)(ρ − d)²/ε`,
/// added to `i` and subtracted from `j`. Wall pairs use `eps_wall` and the
/// stored image (or obstacle) center. Spheres receive no torque.
pub fn forces_spherical(map: &CollisionMap, pre: &PreprocessData, eps: f64, eps_wall: f64) -> Vec<ForceTorque> {
    let c = &pre.mass_centers;
    let per_pair: Vec<_> = map
        .pairs
        .par_iter()
        .map(|p| {
            let other = if p.is_wall() { p.x_other } else { c[p.j as usize] };
            let f = (c[p.i] - other) * activation(p, map.rho, eps, eps_wall);
            (ForceTorque::new(f, Vec3::zeros()), ForceTorque::new(-f, Vec3::zeros()))
        })
        .collect();
    accumulate(c.len(), map, per_pair)
}

/// Repulsion between arbitrary bodies along the contact points:
/// `F = (X_i − X_j)(ρ − d)²/ε` with torques `T_i = −(X_i − CM_i) × F` and
/// `T_j = −(X_j − CM_j) × (−F)` about each body's center of mass.
pub fn forces_general(map: &CollisionMap, bodies: &[RigidBody], eps: f64, eps_wall: f64) -> Vec<ForceTorque> {
    let per_pair: Vec<_> = map
        .pairs
        .par_iter()
        .map(|p| {
            let f = (p.x_i - p.x_other) * activation(p, map.rho, eps, eps_wall);
            let t_i = -(p.x_i - bodies[p.i].position).cross(&f);
            let on_j = if p.is_wall() {
                ForceTorque::default()
            } else {
                let t_j = -(p.x_other - bodies[p.j as usize].position).cross(&-f);
                ForceTorque::new(-f, t_j)
            };
            (ForceTorque::new(f, t_i), on_j)
        })
        .collect();
    accumulate(bodies.len(), map, per_pair)
}
