use rayon::prelude::*;

use super::{component_marker, CollisionError, CollisionMap, CollisionPair, PreprocessData, Result, WALL};
use crate::bodies::{RigidBody, Shape};
use crate::fmm::{march, DistanceField, MarchOptions};
use crate::mesh::SimplicialMesh;

/// Pairs of spherical bodies (and their wall images) within `rho`.
pub fn detect_spherical(pre: &PreprocessData, rho: f64) -> Result<CollisionMap> {
    if !(rho > 0.0) {
        return Err(CollisionError::InvalidRho(rho));
    }
    let radii = pre.radii.as_deref().ok_or(CollisionError::NeedsBox)?;
    let c = &pre.mass_centers;
    let n = c.len();
    let pairs: Vec<CollisionPair> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for m in &pre.imag_mass_centers[i] {
                let d = (m - c[i]).norm() - 2.0 * radii[i];
                if d <= rho {
                    out.push(CollisionPair { i, j: WALL, ci: 0, cj: 0, distance: d, x_i: c[i], x_other: *m });
                }
            }
            for o in &pre.obstacles {
                let d = (o.center - c[i]).norm() - radii[i] - o.radius;
                if d <= rho {
                    out.push(CollisionPair { i, j: WALL, ci: 0, cj: 0, distance: d, x_i: c[i], x_other: o.center });
                }
            }
            for j in i + 1..n {
                let d = (c[j] - c[i]).norm() - radii[i] - radii[j];
                if d <= rho {
                    out.push(CollisionPair { i, j: j as isize, ci: 0, cj: 0, distance: d, x_i: c[i], x_other: c[j] });
                }
            }
            out
        })
        .collect();
    let map = CollisionMap::from_pairs(pairs, rho);
    if map.overlap_events > 0 {
        log::warn!("{} overlapping pair(s) detected", map.overlap_events);
    }
    Ok(map)
}

/// One marked body surface: a whole body, or one sphere of a swimmer.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceRef {
    pub body: usize,
    pub component: usize,
    pub marker: String,
}

pub fn surface_markers(bodies: &[RigidBody], pre: &PreprocessData) -> Vec<SurfaceRef> {
    let mut out = Vec::new();
    for (i, b) in bodies.iter().enumerate() {
        if let Shape::Swimmer(_) = b.shape {
            for k in 0..3 {
                out.push(SurfaceRef { body: i, component: k, marker: component_marker(b.id, k) });
            }
        } else {
            out.push(SurfaceRef { body: i, component: 0, marker: pre.body_markers[i].clone() });
        }
    }
    out
}

struct Surface {
    field: DistanceField,
    seeds: Vec<usize>,
}

impl Surface {
    fn new(mesh: &SimplicialMesh, marker: &str, d_max: f64) -> Result<Self> {
        let seeds = mesh.boundary_vertices(marker).map_err(crate::fmm::FmmError::from)?;
        let opts = MarchOptions { d_max: Some(d_max), delta: None, record_order: false };
        let (field, _) = march(mesh, &seeds, marker, opts)?;
        Ok(Self { field, seeds })
    }

    /// Vertex of this surface closest to `other` according to its field;
    /// lowest index on ties. `None` when the field does not reach here.
    fn closest_to(&self, other: &DistanceField) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for &v in &self.seeds {
            if !other.in_band(v) {
                continue;
            }
            let x = other.value(v);
            if best.is_none_or(|(b, _)| x < b) {
                best = Some((x, v));
            }
        }
        best.map(|(_, v)| v)
    }

    /// In-band vertex of this surface nearest to point `p`.
    fn nearest_to(&self, mesh: &SimplicialMesh, other: &DistanceField, p: &crate::Vec3) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for &v in &self.seeds {
            if !other.in_band(v) {
                continue;
            }
            let d = (mesh.vertex(v) - p).norm_squared();
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, v));
            }
        }
        best.map(|(_, v)| v)
    }
}

/// Pairs of arbitrary bodies found from narrow-band distance fields on a
/// mesh of the fluid region. Each body surface (each sphere of a swimmer)
/// seeds a field truncated at `band_factor · rho`; contact points are the
/// surface vertices nearest to the partner's surface.
pub fn detect_general(
    pre: &PreprocessData,
    mesh: &SimplicialMesh,
    bodies: &[RigidBody],
    rho: f64,
    band_factor: f64,
) -> Result<CollisionMap> {
    if !(rho > 0.0) {
        return Err(CollisionError::InvalidRho(rho));
    }
    let d_max = band_factor * rho;
    let h = mesh.mesh_size();
    let refs = surface_markers(bodies, pre);
    let surfaces: Vec<Surface> =
        refs.par_iter().map(|s| Surface::new(mesh, &s.marker, d_max)).collect::<Result<_>>()?;
    let fluid = if mesh.has_marker(&pre.fluid_marker) {
        Some(Surface::new(mesh, &pre.fluid_marker, d_max)?)
    } else {
        None
    };

    let mut candidates = Vec::new();
    for s in 0..refs.len() {
        candidates.push((s, None));
        for t in s + 1..refs.len() {
            if refs[s].body != refs[t].body {
                candidates.push((s, Some(t)));
            }
        }
    }
    let pairs: Vec<CollisionPair> = candidates
        .par_iter()
        .filter_map(|&(s, t)| {
            let a = &surfaces[s];
            let (b, j, cj) = match t {
                Some(t) => (&surfaces[t], refs[t].body as isize, refs[t].component),
                None => (fluid.as_ref()?, WALL, 0),
            };
            let xa = a.closest_to(&b.field)?;
            let mut xb = b.closest_to(&a.field)?;
            let pa = mesh.vertex(xa);
            // Near-equal minima on separate features (a disk in a corner)
            // can pick contact points facing different walls; re-pick the
            // partner point facing X_i.
            if (mesh.vertex(xb) - pa).norm() > b.field.value(xa) + h {
                xb = b.nearest_to(mesh, &a.field, &pa)?;
            }
            let pb = mesh.vertex(xb);
            let d = (pb - pa).norm();
            (d <= rho).then(|| CollisionPair {
                i: refs[s].body,
                j,
                ci: refs[s].component,
                cj,
                distance: d,
                x_i: pa,
                x_other: pb,
            })
        })
        .collect();
    Ok(CollisionMap::from_pairs(pairs, rho))
}

#[cfg(test)]
mod tests {
    use super::super::{preprocess, BoxDomain, Domain, Mode, Obstacle};
    use super::*;
    use crate::Vec3;

    fn disk(id: usize, r: f64, c: (f64, f64)) -> RigidBody {
        RigidBody::new(id, 2, Shape::Sphere { radius: r }, 1.0, Vec3::new(c.0, c.1, 0.0)).unwrap()
    }

    fn detect(bodies: &[RigidBody], lo: (f64, f64), hi: (f64, f64), rho: f64) -> CollisionMap {
        let dom = Domain::Box(BoxDomain::new(2, Vec3::new(lo.0, lo.1, 0.0), Vec3::new(hi.0, hi.1, 0.0)));
        let pre = preprocess(bodies, &dom, Mode::Spherical).unwrap();
        detect_spherical(&pre, rho).unwrap()
    }

    #[test]
    fn close_pair_found() {
        let map = detect(&[disk(0, 1.0, (0.0, 0.0)), disk(1, 1.0, (0.0, 2.5))], (-10.0, -10.0), (10.0, 10.0), 0.6);
        assert_eq!(map.len(), 1);
        assert!((map.pairs[0].distance - 0.5).abs() < 1e-15);
        assert_eq!((map.pairs[0].i, map.pairs[0].j), (0, 1));
    }

    #[test]
    fn far_pair_ignored() {
        let map = detect(&[disk(0, 1.0, (0.0, 0.0)), disk(1, 1.0, (0.0, 4.0))], (-10.0, -10.0), (10.0, 10.0), 0.6);
        assert!(map.is_empty());
    }

    #[test]
    fn wall_image_pair() {
        let map = detect(&[disk(0, 0.5, (1.0, 3.2))], (0.0, 0.0), (4.0, 4.0), 0.7);
        assert_eq!(map.len(), 1);
        let p = &map.pairs[0];
        assert!(p.is_wall());
        assert!((p.distance - 0.6).abs() < 1e-12);
        assert!((p.x_other - Vec3::new(1.0, 4.8, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn corner_gets_two_wall_pairs() {
        let map = detect(&[disk(0, 0.5, (0.6, 0.6))], (0.0, 0.0), (4.0, 4.0), 0.3);
        assert_eq!(map.wall_pair_count(), 2);
    }

    #[test]
    fn obstacle_pair() {
        let mut bx = BoxDomain::new(2, Vec3::zeros(), Vec3::new(4.0, 4.0, 0.0));
        bx.obstacles.push(Obstacle { center: Vec3::new(2.0, 0.0, 0.0), radius: 1.0 });
        let bodies = [disk(0, 0.5, (2.0, 1.6))];
        let pre = preprocess(&bodies, &Domain::Box(bx), Mode::Spherical).unwrap();
        let map = detect_spherical(&pre, 0.2).unwrap();
        assert_eq!(map.len(), 1);
        assert!((map.pairs[0].distance - 0.1).abs() < 1e-12);
    }

    #[test]
    fn overlap_is_counted() {
        let map = detect(&[disk(0, 1.0, (0.0, 0.0)), disk(1, 1.0, (0.0, 1.9))], (-10.0, -10.0), (10.0, 10.0), 0.6);
        assert_eq!(map.overlap_events, 1);
    }
}
