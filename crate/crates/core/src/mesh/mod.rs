//! Conforming simplicial meshes (triangles in 2D, tetrahedra in 3D) with
//! named boundary markers.
//!
//! Vertices are always stored as 3-vectors; 2D meshes keep `z = 0`.

mod generate;
mod holes;
pub mod msh;

use std::collections::{BTreeSet, HashMap};

pub use generate::{generate_annulus, generate_box};
pub use holes::{generate_perforated_box, Hole, HoleShape, PerforatedBox};

use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported element type {type_id} ({name})")]
    UnsupportedElement { type_id: u32, name: &'static str },
    #[error("mesh file has no $PhysicalNames section; boundary markers cannot be assigned")]
    MissingPhysicalNames,
    #[error("unknown marker {marker:?}; known markers: {known:?}")]
    UnknownMarker { marker: String, known: Vec<String> },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("simplex {index} is degenerate (volume {volume:e})")]
    DegenerateSimplex { index: usize, volume: f64 },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MeshError>;

/// Immutable simplicial mesh with precomputed vertex adjacency and
/// vertex-to-simplex incidence.
#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Vec3>,
    /// Flat connectivity, `dim + 1` vertex indices per simplex.
    simplices: Vec<usize>,
    /// Flat boundary facets, `dim` vertex indices per facet.
    facets: Vec<usize>,
    facet_markers: Vec<usize>,
    markers: Vec<String>,
    adj_offsets: Vec<usize>,
    adj: Vec<usize>,
    inc_offsets: Vec<usize>,
    inc: Vec<usize>,
    h: f64,
}

impl SimplicialMesh {
    /// Builds a mesh from raw parts, validating every structural invariant.
    ///
    /// Simplices with negative orientation are reoriented. Each facet must be
    /// a face of exactly one simplex.
    pub fn new(
        dim: usize,
        vertices: Vec<Vec3>,
        mut simplices: Vec<usize>,
        facets: Vec<(Vec<usize>, String)>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::Invalid(format!("dimension must be 2 or 3, got {dim}")));
        }
        let stride = dim + 1;
        if simplices.len() % stride != 0 {
            return Err(MeshError::Invalid("connectivity length is not a multiple of dim+1".into()));
        }
        let nv = vertices.len();
        if let Some(&bad) = simplices.iter().find(|&&v| v >= nv) {
            return Err(MeshError::Invalid(format!("simplex references vertex {bad} but mesh has {nv} vertices")));
        }

        let mut h: f64 = 0.0;
        for s in simplices.chunks(stride) {
            for a in 0..stride {
                for b in a + 1..stride {
                    h = h.max((vertices[s[a]] - vertices[s[b]]).norm());
                }
            }
        }
        let tol = 1e-14 * h.powi(dim as i32);
        for (index, s) in simplices.chunks_mut(stride).enumerate() {
            let vol = signed_volume(&vertices, s);
            if vol.abs() < tol || !vol.is_finite() {
                return Err(MeshError::DegenerateSimplex { index, volume: vol });
            }
            if vol < 0.0 {
                s.swap(0, 1);
            }
        }

        // face -> number of incident simplices
        let mut face_count: HashMap<Vec<usize>, u32> = HashMap::with_capacity(simplices.len() / stride * 2);
        for s in simplices.chunks(stride) {
            for skip in 0..stride {
                let mut f: Vec<usize> = (0..stride).filter(|&k| k != skip).map(|k| s[k]).collect();
                f.sort_unstable();
                *face_count.entry(f).or_insert(0) += 1;
            }
        }

        let mut markers: Vec<String> = Vec::new();
        let mut flat_facets = Vec::with_capacity(facets.len() * dim);
        let mut facet_markers = Vec::with_capacity(facets.len());
        for (f, name) in facets {
            if f.len() != dim {
                return Err(MeshError::Invalid(format!("facet {f:?} must have {dim} vertices")));
            }
            let mut key = f.clone();
            key.sort_unstable();
            match face_count.get(&key) {
                Some(1) => {}
                Some(n) => {
                    return Err(MeshError::Invalid(format!("facet {f:?} ({name}) is shared by {n} simplices")));
                }
                None => return Err(MeshError::Invalid(format!("facet {f:?} ({name}) is not a face of any simplex"))),
            }
            let idx = match markers.iter().position(|m| *m == name) {
                Some(i) => i,
                None => {
                    markers.push(name);
                    markers.len() - 1
                }
            };
            flat_facets.extend_from_slice(&f);
            facet_markers.push(idx);
        }

        let (adj_offsets, adj) = build_adjacency(nv, &simplices, stride);
        let (inc_offsets, inc) = build_incidence(nv, &simplices, stride);

        Ok(Self {
            dim,
            vertices,
            simplices,
            facets: flat_facets,
            facet_markers,
            markers,
            adj_offsets,
            adj,
            inc_offsets,
            inc,
            h,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn element_count(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn simplex(&self, i: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.simplices[i * s..(i + 1) * s]
    }

    pub fn simplices(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.simplices.chunks(self.dim + 1)
    }

    pub fn facet_count(&self) -> usize {
        self.facet_markers.len()
    }

    pub fn facet(&self, i: usize) -> &[usize] {
        &self.facets[i * self.dim..(i + 1) * self.dim]
    }

    pub fn facet_marker(&self, i: usize) -> &str {
        &self.markers[self.facet_markers[i]]
    }

    /// Marker names in first-appearance order.
    pub fn markers(&self) -> &[String] {
        &self.markers
    }

    pub fn has_marker(&self, marker: &str) -> bool {
        self.markers.iter().any(|m| m == marker)
    }

    /// Vertices sharing a simplex with `v`, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    /// Simplices containing `v`, sorted ascending.
    pub fn incident_simplices(&self, v: usize) -> &[usize] {
        &self.inc[self.inc_offsets[v]..self.inc_offsets[v + 1]]
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    pub fn simplex_volume(&self, i: usize) -> f64 {
        signed_volume(&self.vertices, self.simplex(i))
    }

    /// Exactly the vertices incident to facets carrying `marker`, sorted.
    pub fn boundary_vertices(&self, marker: &str) -> Result<Vec<usize>> {
        let idx = self.marker_index(marker)?;
        let mut set = BTreeSet::new();
        for (f, &m) in self.facet_markers.iter().enumerate() {
            if m == idx {
                set.extend(self.facet(f).iter().copied());
            }
        }
        Ok(set.into_iter().collect())
    }

    /// Union of `boundary_vertices` over several markers.
    pub fn boundary_vertices_any(&self, markers: &[&str]) -> Result<Vec<usize>> {
        let mut set = BTreeSet::new();
        for m in markers {
            set.extend(self.boundary_vertices(m)?);
        }
        Ok(set.into_iter().collect())
    }

    fn marker_index(&self, marker: &str) -> Result<usize> {
        self.markers.iter().position(|m| m == marker).ok_or_else(|| MeshError::UnknownMarker {
            marker: marker.to_string(),
            known: self.markers.clone(),
        })
    }

    /// Counts, for every face of every simplex, how many simplices share it,
    /// and checks that each boundary facet is used exactly once.
    pub fn check_watertight(&self) -> Result<()> {
        let stride = self.dim + 1;
        let mut face_count: HashMap<Vec<usize>, u32> = HashMap::new();
        for s in self.simplices() {
            for skip in 0..stride {
                let mut f: Vec<usize> = (0..stride).filter(|&k| k != skip).map(|k| s[k]).collect();
                f.sort_unstable();
                *face_count.entry(f).or_insert(0) += 1;
            }
        }
        if let Some(n) = face_count.values().find(|&&n| n > 2) {
            return Err(MeshError::Invalid(format!("a face is shared by {n} simplices")));
        }
        for i in 0..self.facet_count() {
            let mut f = self.facet(i).to_vec();
            f.sort_unstable();
            if face_count.get(&f) != Some(&1) {
                return Err(MeshError::Invalid(format!("facet {i} is not a face of exactly one simplex")));
            }
        }
        Ok(())
    }
}

/// Signed volume (area in 2D) of a simplex given by vertex indices.
pub fn signed_volume(vertices: &[Vec3], s: &[usize]) -> f64 {
    match s.len() {
        3 => {
            let a = vertices[s[1]] - vertices[s[0]];
            let b = vertices[s[2]] - vertices[s[0]];
            0.5 * (a.x * b.y - a.y * b.x)
        }
        4 => {
            let a = vertices[s[1]] - vertices[s[0]];
            let b = vertices[s[2]] - vertices[s[0]];
            let c = vertices[s[3]] - vertices[s[0]];
            a.dot(&b.cross(&c)) / 6.0
        }
        n => panic!("simplex with {n} vertices"),
    }
}

fn build_adjacency(nv: usize, simplices: &[usize], stride: usize) -> (Vec<usize>, Vec<usize>) {
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for s in simplices.chunks(stride) {
        for &a in s {
            for &b in s {
                if a != b {
                    lists[a].push(b);
                }
            }
        }
    }
    let mut offsets = Vec::with_capacity(nv + 1);
    let mut flat = Vec::new();
    offsets.push(0);
    for mut l in lists {
        l.sort_unstable();
        l.dedup();
        flat.extend(l);
        offsets.push(flat.len());
    }
    (offsets, flat)
}

fn build_incidence(nv: usize, simplices: &[usize], stride: usize) -> (Vec<usize>, Vec<usize>) {
    let mut counts = vec![0usize; nv + 1];
    for &v in simplices {
        counts[v + 1] += 1;
    }
    for i in 0..nv {
        counts[i + 1] += counts[i];
    }
    let mut fill = counts.clone();
    let mut inc = vec![0usize; simplices.len()];
    for (si, s) in simplices.chunks(stride).enumerate() {
        for &v in s {
            inc[fill[v]] = si;
            fill[v] += 1;
        }
    }
    (counts, inc)
}
