//! First-arrival distance fields on simplicial meshes by the fast marching
//! method, with optional narrow-band truncation.
//!
//! The local update for a vertex `w` in a simplex whose other vertices are
//! partly finalized minimizes `T(p) + |w - p|` over the convex hull of the
//! finalized vertices, with `T` interpolated linearly. When the minimizer
//! falls on the hull boundary (obtuse elements) this reduces to the
//! edge-wise update.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::mesh::{MeshError, SimplicialMesh};
use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum FmmError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("seed set {0:?} contains no vertices")]
    EmptySeed(String),
    #[error("narrow band requires d_max > 0 (got {0})")]
    InvalidBandWidth(f64),
    #[error("fill value delta = {delta} must be at least d_max = {d_max}")]
    InvalidFill { d_max: f64, delta: f64 },
}

pub type Result<T> = std::result::Result<T, FmmError>;

/// Per-vertex distance from a marked boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    pub values: Vec<f64>,
    pub seed_marker: String,
    /// `None` for an unbounded march.
    pub d_max: Option<f64>,
    /// Value stored at every vertex outside the band.
    pub delta: f64,
    pub band_element_count: usize,
    state: Vec<u8>,
    pub warnings: Vec<String>,
}

impl DistanceField {
    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    /// Whether `v` was finalized by the march (its value is a computed
    /// distance rather than the fill value).
    pub fn in_band(&self, v: usize) -> bool {
        self.state[v] == KNOWN
    }

    pub fn band_vertex_count(&self) -> usize {
        self.state.iter().filter(|&&s| s == KNOWN).count()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MarchOptions {
    pub d_max: Option<f64>,
    /// Fill value outside the band; defaults to `d_max` (or to the largest
    /// computed value for an unbounded march).
    pub delta: Option<f64>,
    pub record_order: bool,
}

/// Full-domain distance field from the vertices of `seed_marker`.
pub fn fast_march(mesh: &SimplicialMesh, seed_marker: &str) -> Result<DistanceField> {
    let seeds = mesh.boundary_vertices(seed_marker)?;
    Ok(march(mesh, &seeds, seed_marker, MarchOptions::default())?.0)
}

/// Distance field truncated at `d_max`; every vertex farther than `d_max`
/// holds exactly `delta` (default `d_max`).
pub fn narrow_band_fast_march(
    mesh: &SimplicialMesh,
    seed_marker: &str,
    d_max: f64,
    delta: Option<f64>,
) -> Result<DistanceField> {
    let seeds = mesh.boundary_vertices(seed_marker)?;
    let opts = MarchOptions { d_max: Some(d_max), delta, record_order: false };
    Ok(march(mesh, &seeds, seed_marker, opts)?.0)
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    value: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // reversed so BinaryHeap pops the smallest (value, vertex)
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const FAR: u8 = 0;
const TRIAL: u8 = 1;
const KNOWN: u8 = 2;

/// Marches from an explicit seed vertex set. Returns the field and, when
/// requested, the finalization order.
pub fn march(
    mesh: &SimplicialMesh,
    seeds: &[usize],
    label: &str,
    opts: MarchOptions,
) -> Result<(DistanceField, Option<Vec<usize>>)> {
    if seeds.is_empty() {
        return Err(FmmError::EmptySeed(label.to_string()));
    }
    if let Some(d) = opts.d_max {
        if !(d > 0.0) {
            return Err(FmmError::InvalidBandWidth(d));
        }
        if let Some(delta) = opts.delta {
            if delta < d {
                return Err(FmmError::InvalidFill { d_max: d, delta });
            }
        }
    }
    let limit = opts.d_max.unwrap_or(f64::INFINITY);
    let nv = mesh.vertex_count();
    // with a band, candidates at or above the fill value can never be
    // accepted, so starting from it leaves only trial vertices to reset
    let fill = opts.d_max.map(|d| opts.delta.unwrap_or(d));
    let mut values = vec![fill.unwrap_or(f64::INFINITY); nv];
    let mut state = vec![FAR; nv];
    let mut touched = vec![false; mesh.element_count()];
    let mut band_element_count = 0;
    let mut heap = BinaryHeap::with_capacity(seeds.len() * 4);
    let mut order = opts.record_order.then(Vec::new);

    for &s in seeds {
        values[s] = 0.0;
        state[s] = TRIAL;
        heap.push(Entry { value: 0.0, vertex: s });
    }

    let stride = mesh.dim() + 1;
    let mut known = [0usize; 4];
    while let Some(Entry { value, vertex: v }) = heap.pop() {
        if state[v] == KNOWN || value != values[v] {
            continue;
        }
        if value > limit {
            values[v] = fill.unwrap_or(value);
            break;
        }
        state[v] = KNOWN;
        if let Some(o) = order.as_mut() {
            o.push(v);
        }
        for &si in mesh.incident_simplices(v) {
            if !touched[si] {
                touched[si] = true;
                band_element_count += 1;
            }
            let simplex = mesh.simplex(si);
            let mut nk = 0;
            for &u in simplex {
                if state[u] == KNOWN {
                    known[nk] = u;
                    nk += 1;
                }
            }
            if nk == stride {
                continue;
            }
            for &w in simplex {
                if state[w] == KNOWN {
                    continue;
                }
                let candidate = local_update(mesh, &values, w, &known[..nk]);
                if candidate < values[w] {
                    values[w] = candidate;
                    state[w] = TRIAL;
                    heap.push(Entry { value: candidate, vertex: w });
                }
            }
        }
    }

    let mut warnings = Vec::new();
    let delta = match fill {
        Some(delta) => {
            for Entry { vertex, .. } in heap {
                if state[vertex] != KNOWN {
                    values[vertex] = delta;
                }
            }
            delta
        }
        None => {
            let unreachable = state.iter().filter(|&&s| s != KNOWN).count();
            if unreachable > 0 {
                let msg = format!("{unreachable} vertices unreachable from {label}; filled with delta");
                log::warn!("{msg}");
                warnings.push(msg);
            }
            let max = values.iter().zip(&state).filter(|(_, &s)| s == KNOWN).map(|(&x, _)| x).fold(0.0, f64::max);
            let delta = opts.delta.unwrap_or(max);
            for (x, &s) in values.iter_mut().zip(&state) {
                if s != KNOWN {
                    *x = delta;
                }
            }
            delta
        }
    };
    Ok((
        DistanceField {
            values,
            seed_marker: label.to_string(),
            d_max: opts.d_max,
            delta,
            band_element_count,
            state,
            warnings,
        },
        order,
    ))
}

fn local_update(mesh: &SimplicialMesh, values: &[f64], w: usize, known: &[usize]) -> f64 {
    let pw = mesh.vertex(w);
    match *known {
        [a] => values[a] + (pw - mesh.vertex(a)).norm(),
        [a, b] => segment_update(&pw, &mesh.vertex(a), values[a], &mesh.vertex(b), values[b]),
        [a, b, c] => face_update(
            &pw,
            [mesh.vertex(a), mesh.vertex(b), mesh.vertex(c)],
            [values[a], values[b], values[c]],
        ),
        _ => f64::INFINITY,
    }
}

/// min over p on [a, b] of linear T(p) + |w - p|.
fn segment_update(w: &Vec3, a: &Vec3, ta: f64, b: &Vec3, tb: f64) -> f64 {
    let edge_min = (ta + (w - a).norm()).min(tb + (w - b).norm());
    let e = a - b;
    let s = e.norm();
    let delta = ta - tb;
    if s <= delta.abs() {
        return edge_min;
    }
    let u = w - b;
    let along = u.dot(&e) / s;
    let off2 = u.norm_squared() - along * along;
    if off2 <= 0.0 {
        return edge_min;
    }
    let off = off2.sqrt();
    let t = delta * off / (s * s - delta * delta).sqrt();
    let lambda = (along - t) / s;
    if lambda > 0.0 && lambda < 1.0 {
        (tb + lambda * delta + (t * t + off2).sqrt()).min(edge_min)
    } else {
        edge_min
    }
}

/// min over p in triangle (a, b, c) of linear T(p) + |w - p|.
fn face_update(w: &Vec3, p: [Vec3; 3], t: [f64; 3]) -> f64 {
    let edges = || {
        segment_update(w, &p[0], t[0], &p[1], t[1])
            .min(segment_update(w, &p[1], t[1], &p[2], t[2]))
            .min(segment_update(w, &p[0], t[0], &p[2], t[2]))
    };
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let (g11, g12, g22) = (e1.dot(&e1), e1.dot(&e2), e2.dot(&e2));
    let det = g11 * g22 - g12 * g12;
    if det <= 0.0 {
        return edges();
    }
    let solve = |r1: f64, r2: f64| ((g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det);
    let (x, y) = solve(t[1] - t[0], t[2] - t[0]);
    let grad = e1 * x + e2 * y;
    let g2 = grad.norm_squared();
    if g2 >= 1.0 {
        return edges();
    }
    let n = e1.cross(&e2).normalize();
    let height = (w - p[0]).dot(&n);
    if height == 0.0 {
        return edges();
    }
    let foot = w - n * height;
    let q = foot - grad * (height.abs() / (1.0 - g2).sqrt());
    let r = q - p[0];
    let (l1, l2) = solve(r.dot(&e1), r.dot(&e2));
    if l1 >= 0.0 && l2 >= 0.0 && l1 + l2 <= 1.0 {
        (t[0] + grad.dot(&r) + (w - q).norm()).min(edges())
    } else {
        edges()
    }
}

/// Band size summary for a computed field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandStatistics {
    pub band_elements: usize,
    pub total_elements: usize,
    /// `total / band`; infinite when the band is empty.
    pub ratio: f64,
}

pub fn band_statistics(field: &DistanceField, mesh: &SimplicialMesh) -> BandStatistics {
    let total = mesh.element_count();
    let band = field.band_element_count;
    let ratio = if band == 0 { f64::INFINITY } else { total as f64 / band as f64 };
    BandStatistics { band_elements: band, total_elements: total, ratio }
}

/// CSV rows `vertex_id, x, y[, z], value`.
pub fn field_to_csv(field: &DistanceField, mesh: &SimplicialMesh) -> String {
    use std::fmt::Write as _;
    let dim = mesh.dim();
    let mut out = String::from(if dim == 2 { "vertex_id,x,y,value\n" } else { "vertex_id,x,y,z,value\n" });
    for (v, p) in mesh.vertices().iter().enumerate() {
        let _ = write!(out, "{v}");
        for k in 0..dim {
            let _ = write!(out, ",{:.12e}", p[k]);
        }
        let _ = writeln!(out, ",{:.12e}", field.values[v]);
    }
    out
}

/// Legacy ASCII VTK unstructured grid with the field as point data.
pub fn field_to_vtk(field: &DistanceField, mesh: &SimplicialMesh) -> String {
    use std::fmt::Write as _;
    let dim = mesh.dim();
    let nv = mesh.vertex_count();
    let ne = mesh.element_count();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\ndistance from {}\nASCII\nDATASET UNSTRUCTURED_GRID", field.seed_marker);
    let _ = writeln!(out, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    let _ = writeln!(out, "CELLS {ne} {}", ne * (dim + 2));
    for s in mesh.simplices() {
        let _ = write!(out, "{}", dim + 1);
        for v in s {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_TYPES {ne}");
    let cell_type = if dim == 2 { 5 } else { 10 };
    for _ in 0..ne {
        let _ = writeln!(out, "{cell_type}");
    }
    let _ = writeln!(out, "POINT_DATA {nv}\nSCALARS distance double 1\nLOOKUP_TABLE default");
    for x in &field.values {
        let _ = writeln!(out, "{x}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_annulus, generate_box};

    #[test]
    fn segment_update_exact_for_planar_front() {
        // front T = y moving upward; a, b on y = 0
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let w = Vec3::new(0.5, 0.8, 0.0);
        assert!((segment_update(&w, &a, 0.0, &b, 0.0) - 0.8).abs() < 1e-15);
        // oblique front T = (x + y)/√2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = Vec3::new(0.7, 0.5, 0.0);
        let got = segment_update(&w, &a, 0.0, &b, s);
        assert!((got - 1.2 * s).abs() < 1e-14, "{got}");
    }

    #[test]
    fn segment_update_falls_back_to_edges_when_obtuse() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let w = Vec3::new(2.0, 0.1, 0.0);
        let got = segment_update(&w, &a, 0.0, &b, 0.0);
        assert!((got - (w - b).norm()).abs() < 1e-15);
    }

    #[test]
    fn face_update_exact_for_planar_front() {
        let p = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let w = Vec3::new(0.2, 0.2, 0.7);
        assert!((face_update(&w, p, [0.0; 3]) - 0.7).abs() < 1e-15);
        let n = Vec3::new(1.0, 1.0, 1.0).normalize();
        let w = Vec3::new(0.4, 0.4, 0.1);
        let t = p.map(|q| q.dot(&n));
        let got = face_update(&w, p, t);
        assert!((got - w.dot(&n)).abs() < 1e-14, "{got} vs {}", w.dot(&n));
    }

    #[test]
    fn seeds_are_zero_and_band_is_full() {
        let m = generate_box(&[0.0, 0.0], &[1.0, 1.0], 0.1).unwrap();
        let f = fast_march(&m, "wall_xlo").unwrap();
        for v in m.boundary_vertices("wall_xlo").unwrap() {
            assert_eq!(f.value(v), 0.0);
        }
        assert_eq!(f.band_element_count, m.element_count());
        assert_eq!(band_statistics(&f, &m).ratio, 1.0);
        // planar front on a structured mesh is exact
        for (v, p) in m.vertices().iter().enumerate() {
            assert!((f.value(v) - p.x).abs() < 1e-12, "{} vs {}", f.value(v), p.x);
        }
    }

    #[test]
    fn planar_front_exact_in_3d() {
        let m = generate_box(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 0.25).unwrap();
        let f = fast_march(&m, "wall_zlo").unwrap();
        for (v, p) in m.vertices().iter().enumerate() {
            assert!((f.value(v) - p.z).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_dichotomy_on_annulus() {
        let h = 0.05;
        let m = generate_annulus(0.1, 2.0, h).unwrap();
        let f = narrow_band_fast_march(&m, "inner", 0.25, None).unwrap();
        for (v, &x) in f.values.iter().enumerate() {
            assert!(x <= 0.25 + 2.0 * h || x == f.delta, "vertex {v}: {x}");
            if f.in_band(v) {
                assert!(x <= 0.25);
            } else {
                assert_eq!(x, 0.25);
            }
        }
    }

    #[test]
    fn wide_band_equals_full_march() {
        let m = generate_annulus(0.2, 1.0, 0.05).unwrap();
        let full = fast_march(&m, "inner").unwrap();
        let band = narrow_band_fast_march(&m, "inner", 10.0, None).unwrap();
        assert_eq!(full.values, band.values);
    }

    #[test]
    fn dumps() {
        let m = generate_box(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        let f = fast_march(&m, "wall_xlo").unwrap();
        let csv = field_to_csv(&f, &m);
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("vertex_id,x,y,value\n0,"));
        let vtk = field_to_vtk(&f, &m);
        assert!(vtk.contains("CELLS 8 32"));
        assert!(vtk.contains("POINT_DATA 9"));
    }

    #[test]
    fn empty_band_statistics() {
        let m = generate_box(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        let mut f = fast_march(&m, "wall_xlo").unwrap();
        f.band_element_count = 0;
        let s = band_statistics(&f, &m);
        assert_eq!(s.band_elements, 0);
        assert!(s.ratio.is_infinite());
    }

    #[test]
    fn invalid_band_parameters() {
        let m = generate_box(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        assert!(matches!(narrow_band_fast_march(&m, "wall_xlo", 0.0, None), Err(FmmError::InvalidBandWidth(_))));
        assert!(matches!(
            narrow_band_fast_march(&m, "wall_xlo", 0.5, Some(0.1)),
            Err(FmmError::InvalidFill { .. })
        ));
        assert!(matches!(fast_march(&m, "nope"), Err(FmmError::Mesh(MeshError::UnknownMarker { .. }))));
    }

    #[test]
    fn unreachable_component_gets_delta_and_warning() {
        // two disjoint triangles
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(5.0, 0.0, 0.0),
            Vec3::new(6.0, 0.0, 0.0),
            Vec3::new(5.0, 1.0, 0.0),
        ];
        let m = SimplicialMesh::new(2, v, vec![0, 1, 2, 3, 4, 5], vec![(vec![0, 1], "seed".into())]).unwrap();
        let f = fast_march(&m, "seed").unwrap();
        assert_eq!(f.warnings.len(), 1);
        assert_eq!(f.value(3), f.delta);
        assert_eq!(f.delta, 1.0);
        assert_eq!(f.band_element_count, 1);
    }
}
