use std::collections::HashMap;
use std::f64::consts::PI;

use super::{MeshError, Result, SimplicialMesh};
use crate::Vec3;

const AXES: [&str; 3] = ["x", "y", "z"];

/// Structured simplicial mesh of the box `[lo, hi]`.
///
/// Each grid cell is split into 2 triangles (2D) or 6 Kuhn tetrahedra (3D)
/// along the main diagonal. Boundary facets are tagged `wall_xlo`,
/// `wall_xhi`, `wall_ylo`, ... according to the face they lie on.
pub fn generate_box(lo: &[f64], hi: &[f64], h: f64) -> Result<SimplicialMesh> {
    let dim = lo.len();
    if dim != hi.len() || !(2..=3).contains(&dim) {
        return Err(MeshError::InvalidGeometry("lo and hi must both have 2 or 3 components".into()));
    }
    if !(h > 0.0) {
        return Err(MeshError::InvalidGeometry(format!("mesh size must be positive, got {h}")));
    }
    for d in 0..dim {
        if !(hi[d] > lo[d]) {
            return Err(MeshError::InvalidGeometry(format!(
                "non-positive extent along {}: [{}, {}]",
                AXES[d], lo[d], hi[d]
            )));
        }
    }
    let n: Vec<usize> = (0..dim).map(|d| (((hi[d] - lo[d]) / h) - 1e-9).ceil().max(1.0) as usize).collect();
    let coord = |d: usize, i: usize| {
        if i == n[d] {
            hi[d]
        } else {
            lo[d] + (hi[d] - lo[d]) * i as f64 / n[d] as f64
        }
    };

    let mut vertices = Vec::new();
    let mut simplices = Vec::new();
    if dim == 2 {
        let id = |i: usize, j: usize| j * (n[0] + 1) + i;
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                vertices.push(Vec3::new(coord(0, i), coord(1, j), 0.0));
            }
        }
        for j in 0..n[1] {
            for i in 0..n[0] {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                simplices.extend_from_slice(&[a, b, c, a, c, d]);
            }
        }
    } else {
        let id = |i: usize, j: usize, k: usize| (k * (n[1] + 1) + j) * (n[0] + 1) + i;
        for k in 0..=n[2] {
            for j in 0..=n[1] {
                for i in 0..=n[0] {
                    vertices.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    for p in PERMS {
                        let mut c = [i, j, k];
                        let mut tet = [id(i, j, k), 0, 0, 0];
                        for (step, &axis) in p.iter().enumerate() {
                            c[axis] += 1;
                            tet[step + 1] = id(c[0], c[1], c[2]);
                        }
                        simplices.extend_from_slice(&tet);
                    }
                }
            }
        }
    }

    let facets = boundary_faces(dim, &simplices)
        .into_iter()
        .map(|f| {
            let name = wall_name(dim, &f, &vertices, lo, hi);
            (f, name)
        })
        .collect();
    SimplicialMesh::new(dim, vertices, simplices, facets)
}

fn wall_name(dim: usize, f: &[usize], vertices: &[Vec3], lo: &[f64], hi: &[f64]) -> String {
    for d in 0..dim {
        if f.iter().all(|&v| vertices[v][d] == lo[d]) {
            return format!("wall_{}lo", AXES[d]);
        }
        if f.iter().all(|&v| vertices[v][d] == hi[d]) {
            return format!("wall_{}hi", AXES[d]);
        }
    }
    unreachable!("boundary face of a box mesh off every wall")
}

/// Faces belonging to exactly one simplex, in deterministic order.
pub(crate) fn boundary_faces(dim: usize, simplices: &[usize]) -> Vec<Vec<usize>> {
    let stride = dim + 1;
    let mut count: HashMap<Vec<usize>, (u32, usize, Vec<usize>)> = HashMap::new();
    let mut order = 0usize;
    for s in simplices.chunks(stride) {
        for skip in 0..stride {
            let f: Vec<usize> = (0..stride).filter(|&k| k != skip).map(|k| s[k]).collect();
            let mut key = f.clone();
            key.sort_unstable();
            let e = count.entry(key).or_insert_with(|| {
                order += 1;
                (0, order, f)
            });
            e.0 += 1;
        }
    }
    let mut out: Vec<(usize, Vec<usize>)> =
        count.into_values().filter(|(c, _, _)| *c == 1).map(|(_, o, f)| (o, f)).collect();
    out.sort_unstable_by_key(|(o, _)| *o);
    out.into_iter().map(|(_, f)| f).collect()
}

/// Triangulated 2D annulus built from concentric rings.
///
/// Ring spacing is `h·√3/2` and each ring carries `⌈2πr/h⌉` equally spaced
/// vertices, giving near-equilateral triangles of edge ≈ h. Boundary facets
/// are tagged `inner` and `outer`; boundary vertices lie exactly on the
/// circles.
pub fn generate_annulus(r_inner: f64, r_outer: f64, h: f64) -> Result<SimplicialMesh> {
    if !(r_inner > 0.0 && r_outer > r_inner) {
        return Err(MeshError::InvalidGeometry(format!(
            "annulus radii must satisfy 0 < r_inner < r_outer (got {r_inner}, {r_outer})"
        )));
    }
    if !(h > 0.0 && h < r_inner) {
        return Err(MeshError::InvalidGeometry(format!("mesh size must satisfy 0 < h < r_inner (got {h})")));
    }
    let n_rings = ((r_outer - r_inner) / (h * 3f64.sqrt() / 2.0)).round().max(1.0) as usize;
    let mut vertices = Vec::new();
    // (first vertex index, count, angular offset)
    let mut rings: Vec<(usize, usize, f64)> = Vec::with_capacity(n_rings + 1);
    for k in 0..=n_rings {
        let r = if k == n_rings { r_outer } else { r_inner + (r_outer - r_inner) * k as f64 / n_rings as f64 };
        let count = ((2.0 * PI * r / h).ceil() as usize).max(6);
        let offset = if k % 2 == 1 { PI / count as f64 } else { 0.0 };
        rings.push((vertices.len(), count, offset));
        for i in 0..count {
            let a = offset + 2.0 * PI * i as f64 / count as f64;
            vertices.push(Vec3::new(r * a.cos(), r * a.sin(), 0.0));
        }
    }

    let mut simplices = Vec::new();
    for w in rings.windows(2) {
        stitch_rings(w[0], w[1], &mut simplices);
    }

    let mut facets = Vec::new();
    let (s0, n0, _) = rings[0];
    for i in 0..n0 {
        facets.push((vec![s0 + i, s0 + (i + 1) % n0], "inner".to_string()));
    }
    let (s1, n1, _) = rings[n_rings];
    for i in 0..n1 {
        facets.push((vec![s1 + i, s1 + (i + 1) % n1], "outer".to_string()));
    }
    SimplicialMesh::new(2, vertices, simplices, facets)
}

/// Triangulates the strip between two concentric rings by merging their
/// angular sequences.
fn stitch_rings(inner: (usize, usize, f64), outer: (usize, usize, f64), out: &mut Vec<usize>) {
    let (sa, na, oa) = inner;
    let (sb, nb, ob) = outer;
    let step_a = 2.0 * PI / na as f64;
    let step_b = 2.0 * PI / nb as f64;
    // outer index whose angle is closest to inner vertex 0
    let rel = (oa - ob).rem_euclid(2.0 * PI);
    let j0 = ((rel / step_b).round() as usize) % nb;
    let base_b = ob + j0 as f64 * step_b;
    let base_b = base_b - 2.0 * PI * ((base_b - oa + PI) / (2.0 * PI)).floor();
    let angle_a = |i: usize| oa + step_a * i as f64;
    let angle_b = |j: usize| base_b + step_b * j as f64;
    let va = |i: usize| sa + i % na;
    let vb = |j: usize| sb + (j0 + j) % nb;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let advance_a = if i == na {
            false
        } else if j == nb {
            true
        } else {
            angle_a(i + 1) <= angle_b(j + 1)
        };
        if advance_a {
            out.extend_from_slice(&[va(i), va(i + 1), vb(j)]);
            i += 1;
        } else {
            out.extend_from_slice(&[va(i), vb(j + 1), vb(j)]);
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_h_half() {
        let m = generate_box(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        assert_eq!(m.vertex_count(), 9);
        assert_eq!(m.element_count(), 8);
        assert_eq!(m.facet_count(), 8);
        assert_eq!(m.markers().len(), 4);
        m.check_watertight().unwrap();
    }

    #[test]
    fn unit_cube_is_six_kuhn_tets() {
        let m = generate_box(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.element_count(), 6);
        let vol: f64 = (0..6).map(|i| m.simplex_volume(i)).sum();
        assert!((vol - 1.0).abs() < 1e-14);
        // 6 faces × 2 triangles
        assert_eq!(m.facet_count(), 12);
        m.check_watertight().unwrap();
    }

    #[test]
    fn kuhn_lattice_is_conforming() {
        let m = generate_box(&[0.0, 0.0, 0.0], &[1.0, 2.0, 1.5], 0.5).unwrap();
        m.check_watertight().unwrap();
        let vol: f64 = (0..m.element_count()).map(|i| m.simplex_volume(i)).sum();
        assert!((vol - 3.0).abs() < 1e-12);
        for d in ["wall_xlo", "wall_xhi", "wall_ylo", "wall_yhi", "wall_zlo", "wall_zhi"] {
            assert!(m.has_marker(d));
        }
    }

    #[test]
    fn two_disk_channel_box() {
        let m = generate_box(&[0.0, 0.0], &[2.0, 8.0], 0.05).unwrap();
        assert_eq!(m.vertex_count(), 41 * 161);
        let ylo = m.boundary_vertices("wall_ylo").unwrap();
        assert!(ylo.iter().all(|&v| m.vertex(v).y == 0.0));
        assert_eq!(ylo.len(), 41);
    }

    #[test]
    fn box_rejects_bad_extent() {
        assert!(generate_box(&[0.0, 1.0], &[1.0, 1.0], 0.1).is_err());
        assert!(generate_box(&[0.0, 0.0], &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn annulus_containment_and_markers() {
        let (ri, ro, h) = (0.5, 1.0, 0.1);
        let m = generate_annulus(ri, ro, h).unwrap();
        for v in m.vertices() {
            let r = v.norm();
            assert!(r >= ri - h / 2.0 && r <= ro + h / 2.0);
        }
        for v in m.boundary_vertices("inner").unwrap() {
            assert!((m.vertex(v).norm() - ri).abs() <= h / 2.0);
        }
        for v in m.boundary_vertices("outer").unwrap() {
            assert!((m.vertex(v).norm() - ro).abs() <= h / 2.0);
        }
        m.check_watertight().unwrap();
        let area: f64 = (0..m.element_count()).map(|i| m.simplex_volume(i)).sum();
        let exact = PI * (ro * ro - ri * ri);
        assert!((area - exact).abs() / exact < 0.02, "area {area} vs {exact}");
    }

    #[test]
    fn annulus_rejects_bad_radii() {
        assert!(generate_annulus(1.0, 0.5, 0.1).is_err());
        assert!(generate_annulus(0.1, 1.0, 0.2).is_err());
    }

    #[test]
    fn annulus_count_quadruples_when_h_halves() {
        let a = generate_annulus(0.5, 2.0, 0.1).unwrap().element_count() as f64;
        let b = generate_annulus(0.5, 2.0, 0.05).unwrap().element_count() as f64;
        let ratio = b / a;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }
}
