//! Box domains perforated by body-shaped holes.
//!
//! 2D: constrained Delaunay triangulation of a triangular point lattice with
//! the box edges and the hole outlines as constraints.
//! 3D: Kuhn lattice carved by the holes, with carved boundary vertices
//! projected onto the hole surfaces where that keeps every tetrahedron valid.

use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2, Triangulation};

use super::generate::{boundary_faces, generate_box};
use super::{MeshError, Result, SimplicialMesh};
use crate::{Mat3, Vec3};

/// Analytic hole outline: an ellipsoid (ellipse in 2D) posed in the box.
#[derive(Clone, Debug, PartialEq)]
pub enum HoleShape {
    /// Points `center + rotation · q` with `Σ (q_i / semi_axes_i)² ≤ 1`.
    /// Disks and spheres use equal semi-axes.
    Ellipsoid { center: Vec3, semi_axes: Vec3, rotation: Mat3 },
}

impl HoleShape {
    pub fn disk(center: Vec3, radius: f64) -> Self {
        HoleShape::Ellipsoid { center, semi_axes: Vec3::repeat(radius), rotation: Mat3::identity() }
    }

    /// Normalized level: < 1 inside, 1 on the surface.
    fn level(&self, p: &Vec3, dim: usize) -> f64 {
        let HoleShape::Ellipsoid { center, semi_axes, rotation } = self;
        let q = rotation.transpose() * (p - center);
        (0..dim).map(|i| (q[i] / semi_axes[i]).powi(2)).sum::<f64>().sqrt()
    }

    /// Radial projection onto the surface, in the body frame.
    fn project(&self, p: &Vec3, dim: usize) -> Vec3 {
        let HoleShape::Ellipsoid { center, .. } = self;
        let l = self.level(p, dim);
        center + (p - center) / l
    }

    fn bounding_radius(&self) -> f64 {
        let HoleShape::Ellipsoid { semi_axes, .. } = self;
        semi_axes.max()
    }

    /// Half-width of the axis-aligned bounding box along world axis `d`.
    pub fn half_extent(&self, d: usize) -> f64 {
        let HoleShape::Ellipsoid { semi_axes, rotation, .. } = self;
        (0..3).map(|i| (rotation[(d, i)] * semi_axes[i]).powi(2)).sum::<f64>().sqrt()
    }

    fn center(&self) -> Vec3 {
        let HoleShape::Ellipsoid { center, .. } = self;
        *center
    }

    /// Closed 2D outline sampled at arc-length spacing ≤ `h`.
    fn outline(&self, h: f64) -> Vec<Vec3> {
        let HoleShape::Ellipsoid { center, semi_axes, rotation } = self;
        let (a, b) = (semi_axes.x, semi_axes.y);
        const FINE: usize = 4096;
        let param = |t: f64| Vec3::new(a * t.cos(), b * t.sin(), 0.0);
        let mut cumulative = Vec::with_capacity(FINE + 1);
        cumulative.push(0.0);
        for k in 0..FINE {
            let t0 = std::f64::consts::TAU * k as f64 / FINE as f64;
            let t1 = std::f64::consts::TAU * (k + 1) as f64 / FINE as f64;
            let last = *cumulative.last().unwrap();
            cumulative.push(last + (param(t1) - param(t0)).norm());
        }
        let perimeter = cumulative[FINE];
        let n = ((perimeter / h).ceil() as usize).max(8);
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for i in 0..n {
            let s = perimeter * i as f64 / n as f64;
            while cumulative[k + 1] < s {
                k += 1;
            }
            let frac = (s - cumulative[k]) / (cumulative[k + 1] - cumulative[k]);
            let t = std::f64::consts::TAU * (k as f64 + frac) / FINE as f64;
            let mut p = center + rotation * param(t);
            p.z = 0.0;
            out.push(p);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hole {
    pub marker: String,
    pub shape: HoleShape,
}

/// Description of a perforated box.
#[derive(Clone, Debug)]
pub struct PerforatedBox {
    pub dim: usize,
    pub lo: Vec3,
    pub hi: Vec3,
    pub h: f64,
    /// Finer spacing for box edges and hole outlines (2D only), used when
    /// contact distances smaller than `h` must be resolved.
    pub boundary_h: Option<f64>,
    /// Marker for box sides that are physical walls.
    pub wall_marker: String,
    /// Marker for box sides that only truncate a larger domain.
    pub window_marker: String,
    /// Per side (xlo, xhi, ylo, yhi, zlo, zhi): true when the side is a wall.
    pub walls: [bool; 6],
    pub holes: Vec<Hole>,
}

impl PerforatedBox {
    pub fn new(dim: usize, lo: Vec3, hi: Vec3, h: f64) -> Self {
        Self {
            dim,
            lo,
            hi,
            h,
            boundary_h: None,
            wall_marker: "fluid".into(),
            window_marker: "window".into(),
            walls: [true; 6],
            holes: Vec::new(),
        }
    }

    pub fn with_hole(mut self, marker: impl Into<String>, shape: HoleShape) -> Self {
        self.holes.push(Hole { marker: marker.into(), shape });
        self
    }

    fn side_marker(&self, side: usize) -> String {
        if self.walls[side] {
            self.wall_marker.clone()
        } else {
            self.window_marker.clone()
        }
    }
}

/// Meshes the box minus its holes. Holes must lie strictly inside the box
/// and must not overlap each other.
pub fn generate_perforated_box(spec: &PerforatedBox) -> Result<SimplicialMesh> {
    if !(spec.h > 0.0) {
        return Err(MeshError::InvalidGeometry(format!("mesh size must be positive, got {}", spec.h)));
    }
    for d in 0..spec.dim {
        if !(spec.hi[d] > spec.lo[d]) {
            return Err(MeshError::InvalidGeometry("non-positive box extent".into()));
        }
    }
    match spec.dim {
        2 => perforated_2d(spec),
        3 => perforated_3d(spec),
        d => Err(MeshError::InvalidGeometry(format!("dimension {d} not supported"))),
    }
}

#[derive(Clone, Copy)]
struct Site {
    x: f64,
    y: f64,
    id: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

fn point_in_polygon(p: &Vec3, poly: &[Vec3]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn segments_intersect(p1: &Vec3, p2: &Vec3, q1: &Vec3, q2: &Vec3) -> bool {
    let orient = |a: &Vec3, b: &Vec3, c: &Vec3| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

fn perforated_2d(spec: &PerforatedBox) -> Result<SimplicialMesh> {
    let h = spec.h;
    let hb = spec.boundary_h.map_or(h, |b| b.min(h));
    let (lo, hi) = (spec.lo, spec.hi);
    let mut sites: Vec<Vec3> = Vec::new();
    let mut edges: Vec<([usize; 2], String)> = Vec::new();

    // box outline, counter-clockwise: ylo, xhi, yhi, xlo
    let corners = [
        Vec3::new(lo.x, lo.y, 0.0),
        Vec3::new(hi.x, lo.y, 0.0),
        Vec3::new(hi.x, hi.y, 0.0),
        Vec3::new(lo.x, hi.y, 0.0),
    ];
    let sides = [2usize, 1, 3, 0];
    let first = sites.len();
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let step = if spec.walls[sides[k]] { hb } else { h };
        let n = (((b - a).norm() / step).ceil() as usize).max(1);
        for i in 0..n {
            sites.push(a + (b - a) * (i as f64 / n as f64));
        }
    }
    let count = sites.len() - first;
    let side_of = |p: &Vec3, q: &Vec3| -> usize {
        if p.y == lo.y && q.y == lo.y {
            sides[0]
        } else if p.x == hi.x && q.x == hi.x {
            sides[1]
        } else if p.y == hi.y && q.y == hi.y {
            sides[2]
        } else {
            sides[3]
        }
    };
    for i in 0..count {
        let (a, b) = (first + i, first + (i + 1) % count);
        let side = side_of(&sites[a], &sites[b]);
        edges.push(([a, b], spec.side_marker(side)));
    }

    let mut outlines: Vec<Vec<Vec3>> = Vec::with_capacity(spec.holes.len());
    for hole in &spec.holes {
        let outline = hole.shape.outline(hb);
        for p in &outline {
            if p.x <= lo.x || p.x >= hi.x || p.y <= lo.y || p.y >= hi.y {
                return Err(MeshError::InvalidGeometry(format!("hole {} leaves the box", hole.marker)));
            }
        }
        outlines.push(outline);
    }
    check_disjoint_2d(spec, &outlines)?;

    for (hole, outline) in spec.holes.iter().zip(&outlines) {
        let first = sites.len();
        sites.extend_from_slice(outline);
        let n = outline.len();
        for i in 0..n {
            edges.push(([first + i, first + (i + 1) % n], hole.marker.clone()));
        }
    }

    // interior lattice, keeping clear of every constraint
    let clearance = 0.55 * h;
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi.y - lo.y) / dy).floor() as usize;
    let cols = ((hi.x - lo.x) / h).floor() as usize;
    for r in 1..=rows {
        let y = lo.y + r as f64 * dy;
        let shift = if r % 2 == 1 { 0.5 * h } else { 0.0 };
        for c in 0..=cols {
            let x = lo.x + shift + c as f64 * h;
            let p = Vec3::new(x, y, 0.0);
            if x - lo.x < clearance || hi.x - x < clearance || y - lo.y < clearance || hi.y - y < clearance {
                continue;
            }
            let blocked = spec.holes.iter().zip(&outlines).any(|(hole, outline)| {
                let reach = hole.shape.bounding_radius() + clearance;
                if (p - hole.shape.center()).norm() > reach {
                    return false;
                }
                if hole.shape.level(&p, 2) <= 1.0 || point_in_polygon(&p, outline) {
                    return true;
                }
                let n = outline.len();
                (0..n).any(|i| segment_distance(&p, &outline[i], &outline[(i + 1) % n]) < clearance)
            });
            if !blocked {
                sites.push(p);
            }
        }
    }

    let verts: Vec<Site> = sites.iter().enumerate().map(|(id, p)| Site { x: p.x, y: p.y, id }).collect();
    let constraint_edges: Vec<[usize; 2]> = edges.iter().map(|(e, _)| *e).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Site>::bulk_load_cdt(verts, constraint_edges)
        .map_err(|e| MeshError::InvalidGeometry(format!("triangulation failed: {e:?}")))?;

    let mut triangles = Vec::with_capacity(cdt.num_inner_faces() * 3);
    for face in cdt.inner_faces() {
        let ids = face.vertices().map(|v| v.data().id);
        let c = (sites[ids[0]] + sites[ids[1]] + sites[ids[2]]) / 3.0;
        let inside = spec.holes.iter().zip(&outlines).any(|(hole, o)| {
            (c - hole.shape.center()).norm() <= hole.shape.bounding_radius() + h && point_in_polygon(&c, o)
        });
        if inside {
            continue;
        }
        triangles.extend_from_slice(&ids);
    }
    let facets = edges.into_iter().map(|(e, m)| (e.to_vec(), m)).collect();
    compact(2, sites, triangles, facets)
}

fn check_disjoint_2d(spec: &PerforatedBox, outlines: &[Vec<Vec3>]) -> Result<()> {
    for i in 0..outlines.len() {
        for j in i + 1..outlines.len() {
            let (si, sj) = (&spec.holes[i].shape, &spec.holes[j].shape);
            let gap = (si.center() - sj.center()).norm() - si.bounding_radius() - sj.bounding_radius();
            if gap > spec.h {
                continue;
            }
            let (a, b) = (&outlines[i], &outlines[j]);
            let overlap = a.iter().any(|p| point_in_polygon(p, b))
                || b.iter().any(|p| point_in_polygon(p, a))
                || (0..a.len()).any(|k| {
                    (0..b.len()).any(|l| {
                        segments_intersect(&a[k], &a[(k + 1) % a.len()], &b[l], &b[(l + 1) % b.len()])
                    })
                });
            if overlap {
                return Err(MeshError::InvalidGeometry(format!(
                    "holes {} and {} overlap",
                    spec.holes[i].marker, spec.holes[j].marker
                )));
            }
        }
    }
    Ok(())
}

fn perforated_3d(spec: &PerforatedBox) -> Result<SimplicialMesh> {
    let (lo, hi) = (spec.lo, spec.hi);
    let lattice = generate_box(&[lo.x, lo.y, lo.z], &[hi.x, hi.y, hi.z], spec.h)?;
    let mut vertices = lattice.vertices.clone();
    let nv = vertices.len();

    for hole in &spec.holes {
        let c = hole.shape.center();
        for d in 0..3 {
            let r = hole.shape.half_extent(d);
            if c[d] - r <= lo[d] || c[d] + r >= hi[d] {
                return Err(MeshError::InvalidGeometry(format!("hole {} leaves the box", hole.marker)));
            }
        }
    }

    // owning hole per vertex (inside), if any
    let mut inside: Vec<Option<usize>> = vec![None; nv];
    for (k, hole) in spec.holes.iter().enumerate() {
        let c = hole.shape.center();
        let r = hole.shape.bounding_radius();
        for (v, p) in vertices.iter().enumerate() {
            if (p - c).norm() <= r && hole.shape.level(p, 3) < 1.0 {
                if let Some(other) = inside[v] {
                    return Err(MeshError::InvalidGeometry(format!(
                        "holes {} and {} overlap",
                        spec.holes[other].marker, hole.marker
                    )));
                }
                inside[v] = Some(k);
            }
        }
    }

    let mut tets = Vec::with_capacity(lattice.simplices.len());
    for s in lattice.simplices.chunks(4) {
        if s.iter().all(|&v| inside[v].is_none()) {
            tets.extend_from_slice(s);
        }
    }

    let faces = boundary_faces(3, &tets);
    let eps = 1e-12 * spec.h;
    let mut facets = Vec::with_capacity(faces.len());
    let mut surface_owner: Vec<Option<usize>> = vec![None; nv];
    for f in faces {
        let mut side = None;
        for d in 0..3 {
            if f.iter().all(|&v| (vertices[v][d] - lo[d]).abs() < eps) {
                side = Some(2 * d);
            } else if f.iter().all(|&v| (vertices[v][d] - hi[d]).abs() < eps) {
                side = Some(2 * d + 1);
            }
        }
        let marker = match side {
            Some(s) => spec.side_marker(s),
            None => {
                let centroid = (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0;
                let k = nearest_hole(spec, &centroid);
                for &v in &f {
                    // vertices on the box stay there
                    let on_box = (0..3).any(|d| {
                        (vertices[v][d] - lo[d]).abs() < eps || (vertices[v][d] - hi[d]).abs() < eps
                    });
                    if !on_box {
                        surface_owner[v] = Some(k);
                    }
                }
                spec.holes[k].marker.clone()
            }
        };
        facets.push((f, marker));
    }

    // project carved surface vertices onto their hole, reverting any that
    // would collapse a tetrahedron
    let original = vertices.clone();
    for v in 0..nv {
        if let Some(k) = surface_owner[v] {
            vertices[v] = spec.holes[k].shape.project(&original[v], 3);
        }
    }
    let min_vol = 0.05 * spec.h.powi(3) / 6.0;
    loop {
        let mut reverted = false;
        for s in tets.chunks(4) {
            if super::signed_volume(&vertices, s).abs() < min_vol
                || super::signed_volume(&vertices, s).signum() != super::signed_volume(&original, s).signum()
            {
                for &v in s {
                    if vertices[v] != original[v] {
                        vertices[v] = original[v];
                        reverted = true;
                    }
                }
            }
        }
        if !reverted {
            break;
        }
    }
    compact(3, vertices, tets, facets)
}

fn nearest_hole(spec: &PerforatedBox, p: &Vec3) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, hole) in spec.holes.iter().enumerate() {
        let l = hole.shape.level(p, 3);
        if l < best.0 {
            best = (l, k);
        }
    }
    best.1
}

/// Drops vertices unused by any simplex and renumbers.
fn compact(
    dim: usize,
    vertices: Vec<Vec3>,
    simplices: Vec<usize>,
    facets: Vec<(Vec<usize>, String)>,
) -> Result<SimplicialMesh> {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    for &v in &simplices {
        if map[v] == usize::MAX {
            map[v] = 0;
        }
    }
    for (v, p) in vertices.iter().enumerate() {
        if map[v] == 0 {
            map[v] = kept.len();
            kept.push(*p);
        }
    }
    let simplices = simplices.into_iter().map(|v| map[v]).collect();
    let facets = facets
        .into_iter()
        .map(|(f, m)| {
            let f = f.into_iter().map(|v| map[v]).collect::<Vec<_>>();
            (f, m)
        })
        .collect::<Vec<_>>();
    if facets.iter().any(|(f, _)| f.iter().any(|&v| v == usize::MAX)) {
        return Err(MeshError::Invalid("boundary facet references a discarded vertex".into()));
    }
    SimplicialMesh::new(dim, kept, simplices, facets)
}
