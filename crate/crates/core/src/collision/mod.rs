//! Collision detection and repulsive forces.
//!
//! Detection produces a [`CollisionMap`] of interacting pairs whose surface
//! distance is at most the zone width ρ. Spherical bodies use center
//! distances and mirrored wall images; other shapes use narrow-band distance
//! fields on a mesh of the fluid region.

mod detect;
mod forces;

use std::fmt::Write as _;

pub use detect::{detect_general, detect_spherical, surface_markers, SurfaceRef};
pub use forces::{forces_general, forces_spherical};

use crate::bodies::{RigidBody, Shape};
use crate::mesh::SimplicialMesh;
use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum CollisionError {
    #[error("duplicate body id {0}")]
    DuplicateId(usize),
    #[error("spherical mode needs an axis-aligned box domain; use general mode for other domains")]
    NeedsBox,
    #[error("spherical mode supports only disks and spheres; body {0} needs general mode")]
    NeedsGeneral(usize),
    #[error("zone width rho must be positive (got {0})")]
    InvalidRho(f64),
    #[error(transparent)]
    Fmm(#[from] crate::fmm::FmmError),
}

pub type Result<T> = std::result::Result<T, CollisionError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Spherical,
    General,
}

/// Static circular (spherical) obstacle fixed to the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obstacle {
    pub center: Vec3,
    pub radius: f64,
}

/// Axis-aligned box domain with optional static obstacles.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub dim: usize,
    pub lo: Vec3,
    pub hi: Vec3,
    pub obstacles: Vec<Obstacle>,
}

impl BoxDomain {
    pub fn new(dim: usize, lo: Vec3, hi: Vec3) -> Self {
        Self { dim, lo, hi, obstacles: Vec::new() }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..self.dim).all(|k| p[k] >= self.lo[k] && p[k] <= self.hi[k])
    }
}

#[derive(Clone, Debug)]
pub enum Domain {
    Box(BoxDomain),
    /// A fixed mesh whose boundary markers already carry the bodies.
    Mesh(std::sync::Arc<SimplicialMesh>),
}

/// Marker naming a body's boundary in generated meshes.
pub fn body_marker(id: usize) -> String {
    format!("body{id}")
}

/// Marker for component `k` of an articulated body.
pub fn component_marker(id: usize, k: usize) -> String {
    format!("body{id}_c{k}")
}

pub const FLUID_MARKER: &str = "fluid";

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessData {
    pub body_ids: Vec<usize>,
    pub mass_centers: Vec<Vec3>,
    pub body_markers: Vec<String>,
    /// Present in spherical mode only.
    pub radii: Option<Vec<f64>>,
    /// Per body, its mirror images across each box wall (spherical mode).
    pub imag_mass_centers: Vec<Vec<Vec3>>,
    pub fluid_marker: String,
    /// Static obstacles, treated as wall contacts in spherical mode.
    pub obstacles: Vec<Obstacle>,
}

/// Collects the per-body data used by detection.
pub fn preprocess(bodies: &[RigidBody], domain: &Domain, mode: Mode) -> Result<PreprocessData> {
    let mut seen = std::collections::BTreeSet::new();
    for b in bodies {
        if !seen.insert(b.id) {
            return Err(CollisionError::DuplicateId(b.id));
        }
    }
    let body_markers = bodies
        .iter()
        .map(|b| match &b.shape {
            Shape::Meshed { marker, .. } => marker.clone(),
            _ => body_marker(b.id),
        })
        .collect();
    let mut pre = PreprocessData {
        body_ids: bodies.iter().map(|b| b.id).collect(),
        mass_centers: bodies.iter().map(|b| b.position).collect(),
        body_markers,
        radii: None,
        imag_mass_centers: vec![Vec::new(); bodies.len()],
        fluid_marker: FLUID_MARKER.to_string(),
        obstacles: Vec::new(),
    };
    if mode == Mode::General {
        return Ok(pre);
    }
    let Domain::Box(bx) = domain else {
        return Err(CollisionError::NeedsBox);
    };
    let mut radii = Vec::with_capacity(bodies.len());
    for b in bodies {
        match b.shape {
            Shape::Sphere { radius } => radii.push(radius),
            _ => return Err(CollisionError::NeedsGeneral(b.id)),
        }
    }
    pre.imag_mass_centers = bodies
        .iter()
        .map(|b| {
            let c = b.position;
            let mut out = Vec::with_capacity(2 * bx.dim);
            for k in 0..bx.dim {
                for wall in [bx.lo[k], bx.hi[k]] {
                    let mut m = c;
                    m[k] = 2.0 * wall - c[k];
                    out.push(m);
                }
            }
            out
        })
        .collect();
    pre.radii = Some(radii);
    pre.obstacles = bx.obstacles.clone();
    Ok(pre)
}

/// Partner index of a wall (or static obstacle) contact.
pub const WALL: isize = -1;

#[derive(Clone, Debug, PartialEq)]
pub struct CollisionPair {
    /// Index of the first body in the body list.
    pub i: usize,
    /// Index of the second body, or [`WALL`].
    pub j: isize,
    /// Component of body `i` (swimmer sphere), 0 otherwise.
    pub ci: usize,
    /// Component of body `j`, 0 otherwise.
    pub cj: usize,
    pub distance: f64,
    /// Contact point on `i` (its center in spherical mode).
    pub x_i: Vec3,
    /// Contact point on the partner; for walls the mirror image center or
    /// obstacle center in spherical mode.
    pub x_other: Vec3,
}

impl CollisionPair {
    pub fn is_wall(&self) -> bool {
        self.j == WALL
    }

    fn key(&self) -> (usize, isize, usize, usize) {
        (self.i, self.j, self.ci, self.cj)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollisionMap {
    pub pairs: Vec<CollisionPair>,
    pub rho: f64,
    /// Pairs whose raw distance was negative (overlap).
    pub overlap_events: usize,
}

impl CollisionMap {
    pub(crate) fn from_pairs(mut pairs: Vec<CollisionPair>, rho: f64) -> Self {
        // stable: wall pairs with equal keys keep their wall order
        pairs.sort_by_key(|p| p.key());
        let overlap_events = pairs.iter().filter(|p| p.distance < 0.0).count();
        Self { pairs, rho, overlap_events }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn body_pair_count(&self) -> usize {
        self.pairs.iter().filter(|p| !p.is_wall()).count()
    }

    pub fn wall_pair_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_wall()).count()
    }

    pub fn min_distance(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.distance).min_by(f64::total_cmp)
    }

    /// CSV with columns `i, j, distance, X_i, X_other`; body indices are
    /// translated to ids through `ids`.
    pub fn to_csv(&self, dim: usize, ids: &[usize]) -> String {
        let axes = &["x", "y", "z"][..dim];
        let mut out = String::from("i,j,distance");
        for prefix in ["xi", "xo"] {
            for a in axes {
                let _ = write!(out, ",{prefix}_{a}");
            }
        }
        out.push('\n');
        for p in &self.pairs {
            let j = if p.is_wall() { -1 } else { ids[p.j as usize] as i64 };
            let _ = write!(out, "{},{},{:.12e}", ids[p.i], j, p.distance);
            for v in [&p.x_i, &p.x_other] {
                for k in 0..dim {
                    let _ = write!(out, ",{:.12e}", v[k]);
                }
            }
            out.push('\n');
        }
        out
    }
}
