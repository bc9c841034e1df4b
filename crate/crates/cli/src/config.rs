//! Scenario configuration files.
//!
//! Units are cm, g and s throughout: lengths in cm, densities in g/cm³
//! (g/cm² for 2D bodies of unit depth), viscosity in g/(cm·s), gravity in
//! cm/s², pressure gradients in g/(cm²·s²), times in s.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nbcollide_core::bodies::{ellipsoid_reference, RigidBody, Shape, Swimmer};
use nbcollide_core::collision::{body_marker, component_marker, BoxDomain, Domain, Mode, Obstacle};
use nbcollide_core::dynamics::{CollisionParams, FluidProperties, ScenarioState};
use nbcollide_core::mesh::msh::load_mesh;
use nbcollide_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A configuration problem, tied to the offending field.
#[derive(Debug, thiserror::Error, PartialEq)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// 2 or 3.
    pub dim: usize,
    /// Seed for lattice jitter.
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainConfig,
    pub fluid: FluidConfig,
    pub collision: CollisionConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bodies: Vec<BodyConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lattices: Vec<LatticeConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Lower box corner (cm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    /// Upper box corner (cm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    /// Gmsh file used instead of a box; its boundary markers must name the
    /// bodies (`body<id>`) and the walls (`fluid`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleConfig>,
}

/// Static circular obstacle attached to the walls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    /// cm
    pub center: Vec<f64>,
    /// cm
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidConfig {
    /// g/cm³
    pub density: f64,
    /// g/(cm·s)
    pub viscosity: f64,
    /// cm/s²
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<Vec<f64>>,
    /// Uniform ∇p in g/(cm²·s²); bodies feel −V∇p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure_gradient: Option<Vec<f64>>,
    /// Squeeze-film resistance inside the collision zone.
    #[serde(default = "yes")]
    pub lubrication: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeConfig {
    #[default]
    Spherical,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionConfig {
    #[serde(default)]
    pub mode: ModeConfig,
    /// Collision zone width ρ (cm).
    pub rho: f64,
    /// Body-body stiffness ε; defaults to h².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Body-wall stiffness ε_F; defaults to h²/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_wall: Option<f64>,
    /// Mesh size h (cm) of detection meshes.
    pub mesh_size: f64,
    /// Narrow-band width in units of ρ.
    #[serde(default = "default_d_max_factor")]
    pub d_max_factor: f64,
}

fn default_d_max_factor() -> f64 {
    1.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// s
    pub dt: f64,
    /// s
    pub final_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Defaults to `output/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Collision-map snapshot interval in steps; 0 writes only the last step.
    #[serde(default)]
    pub snapshot_every: u64,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, snapshot_every: 0, workers: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Disk,
    Sphere,
    Ellipse,
    Ellipsoid,
    Swimmer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    /// Defaults to the body's position in the list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<usize>,
    pub shape: ShapeKind,
    /// Disk, sphere and swimmer-sphere radius (cm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Ellipse/ellipsoid semi-axes in the body frame (cm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<Vec<f64>>,
    /// g/cm³
    pub density: f64,
    /// Center of mass (cm).
    pub position: Vec<f64>,
    /// cm/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    /// θ (rad): one angle in 2D, (θx, θy, θz) in 3D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Vec<f64>>,
    /// ω (1/s), same layout as `orientation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_velocity: Option<Vec<f64>>,
    /// Swimmer rod rest length (cm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rest_length: Option<f64>,
    /// Swimmer stroke amplitude (cm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Swimmer stroke period (s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

/// Regular block of identical disks or spheres; ids follow the explicit
/// bodies, x fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub shape: ShapeKind,
    /// cm
    pub radius: f64,
    /// g/cm³
    pub density: f64,
    /// Center of the first body (cm).
    pub origin: Vec<f64>,
    /// Center spacing per axis (cm).
    pub spacing: Vec<f64>,
    /// Body count per axis.
    pub counts: Vec<usize>,
    /// Uniform random offset bound per coordinate (cm).
    #[serde(default)]
    pub jitter: f64,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(|| "config".to_string(), |s| field_at(text, s.start));
            ConfigError::new(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(mesh) = &cfg.domain.mesh {
            if mesh.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.domain.mesh = Some(dir.join(mesh));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn output_directory(&self) -> PathBuf {
        self.output.directory.clone().unwrap_or_else(|| PathBuf::from("output").join(&self.name))
    }

    /// Checks every field without building the scenario.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim;
        if dim != 2 && dim != 3 {
            return Err(ConfigError::new("dim", format!("must be 2 or 3, got {dim}")));
        }
        if self.name.trim().is_empty() {
            return Err(ConfigError::new("name", "must not be empty"));
        }
        self.validate_domain()?;
        let f = &self.fluid;
        positive("fluid.density", f.density)?;
        if !(f.viscosity >= 0.0) || !f.viscosity.is_finite() {
            return Err(ConfigError::new("fluid.viscosity", format!("must be non-negative, got {}", f.viscosity)));
        }
        vector("fluid.gravity", f.gravity.as_deref(), dim)?;
        vector("fluid.pressure_gradient", f.pressure_gradient.as_deref(), dim)?;

        let c = &self.collision;
        positive("collision.rho", c.rho)?;
        positive("collision.mesh_size", c.mesh_size)?;
        if let Some(e) = c.epsilon {
            positive("collision.epsilon", e)?;
        }
        if let Some(e) = c.epsilon_wall {
            positive("collision.epsilon_wall", e)?;
        }
        if !(c.d_max_factor >= 1.0) || !c.d_max_factor.is_finite() {
            return Err(ConfigError::new(
                "collision.d_max_factor",
                format!("must be at least 1 so the band covers the zone, got {}", c.d_max_factor),
            ));
        }

        positive("time.dt", self.time.dt)?;
        if !(self.time.final_time >= self.time.dt) || !self.time.final_time.is_finite() {
            return Err(ConfigError::new(
                "time.final_time",
                format!("must be at least dt = {}, got {}", self.time.dt, self.time.final_time),
            ));
        }
        if self.output.workers == 0 {
            return Err(ConfigError::new("output.workers", "must be at least 1"));
        }

        if self.bodies.is_empty() && self.lattices.is_empty() {
            return Err(ConfigError::new("bodies", "at least one body or lattice is required"));
        }
        for (k, b) in self.bodies.iter().enumerate() {
            self.validate_body(k, b)?;
        }
        for (k, l) in self.lattices.iter().enumerate() {
            let field = |n: &str| format!("lattices[{k}].{n}");
            if !matches!(l.shape, ShapeKind::Disk | ShapeKind::Sphere) {
                return Err(ConfigError::new(field("shape"), "lattices hold disks or spheres only"));
            }
            self.check_round_shape(&field("shape"), l.shape)?;
            positive(&field("radius"), l.radius)?;
            positive(&field("density"), l.density)?;
            vector(&field("origin"), Some(&l.origin), dim)?;
            vector(&field("spacing"), Some(&l.spacing), dim)?;
            if l.counts.len() != dim || l.counts.contains(&0) {
                return Err(ConfigError::new(field("counts"), format!("needs {dim} positive counts")));
            }
            if !(l.jitter >= 0.0) {
                return Err(ConfigError::new(field("jitter"), "must be non-negative"));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for (k, id) in self.body_ids().into_iter().enumerate() {
            if !ids.insert(id) {
                return Err(ConfigError::new(format!("bodies[{k}].id"), format!("duplicate id {id}")));
            }
        }
        if c.mode == ModeConfig::Spherical {
            if self.domain.mesh.is_some() {
                return Err(ConfigError::new("domain.mesh", "spherical mode needs a box domain"));
            }
            if let Some(k) = self.bodies.iter().position(|b| !matches!(b.shape, ShapeKind::Disk | ShapeKind::Sphere)) {
                return Err(ConfigError::new(format!("bodies[{k}].shape"), "this shape needs collision.mode = \"general\""));
            }
        } else if !self.domain.obstacles.is_empty() {
            return Err(ConfigError::new("domain.obstacles", "static obstacles need collision.mode = \"spherical\""));
        }
        Ok(())
    }

    fn validate_domain(&self) -> Result<()> {
        let d = &self.domain;
        match (&d.mesh, &d.lo, &d.hi) {
            (Some(_), None, None) => {
                if !d.obstacles.is_empty() {
                    return Err(ConfigError::new("domain.obstacles", "obstacles need a box domain"));
                }
                Ok(())
            }
            (Some(_), _, _) => Err(ConfigError::new("domain.mesh", "give either a mesh or lo/hi, not both")),
            (None, Some(lo), Some(hi)) => {
                vector("domain.lo", Some(lo), self.dim)?;
                vector("domain.hi", Some(hi), self.dim)?;
                if let Some(k) = (0..self.dim).find(|&k| !(hi[k] > lo[k])) {
                    return Err(ConfigError::new("domain.hi", format!("component {k} must exceed domain.lo")));
                }
                for (k, o) in d.obstacles.iter().enumerate() {
                    vector(&format!("domain.obstacles[{k}].center"), Some(&o.center), self.dim)?;
                    positive(&format!("domain.obstacles[{k}].radius"), o.radius)?;
                }
                Ok(())
            }
            (None, None, _) => Err(ConfigError::new("domain.lo", "missing (or give domain.mesh)")),
            (None, _, None) => Err(ConfigError::new("domain.hi", "missing (or give domain.mesh)")),
        }
    }

    fn check_round_shape(&self, field: &str, shape: ShapeKind) -> Result<()> {
        let want = match (shape, self.dim) {
            (ShapeKind::Disk | ShapeKind::Ellipse, 3) => Some("sphere/ellipsoid in 3D"),
            (ShapeKind::Sphere | ShapeKind::Ellipsoid, 2) => Some("disk/ellipse in 2D"),
            _ => None,
        };
        match want {
            Some(w) => Err(ConfigError::new(field, format!("use {w}"))),
            None => Ok(()),
        }
    }

    fn validate_body(&self, k: usize, b: &BodyConfig) -> Result<()> {
        let dim = self.dim;
        let field = |n: &str| format!("bodies[{k}].{n}");
        self.check_round_shape(&field("shape"), b.shape)?;
        positive(&field("density"), b.density)?;
        vector(&field("position"), Some(&b.position), dim)?;
        vector(&field("velocity"), b.velocity.as_deref(), dim)?;
        let angles = if dim == 2 { 1 } else { 3 };
        vector(&field("orientation"), b.orientation.as_deref(), angles)?;
        vector(&field("angular_velocity"), b.angular_velocity.as_deref(), angles)?;
        let need = |name: &str, v: Option<f64>| -> Result<f64> {
            let v = v.ok_or_else(|| ConfigError::new(field(name), format!("required for shape {:?}", b.shape)))?;
            positive(&field(name), v)?;
            Ok(v)
        };
        match b.shape {
            ShapeKind::Disk | ShapeKind::Sphere => {
                need("radius", b.radius)?;
            }
            ShapeKind::Ellipse | ShapeKind::Ellipsoid => {
                let axes = b
                    .semi_axes
                    .as_deref()
                    .ok_or_else(|| ConfigError::new(field("semi_axes"), "required for ellipses and ellipsoids"))?;
                vector(&field("semi_axes"), Some(axes), dim)?;
                if axes.iter().any(|a| !(*a > 0.0)) {
                    return Err(ConfigError::new(field("semi_axes"), "must be positive"));
                }
            }
            ShapeKind::Swimmer => {
                if dim != 2 {
                    return Err(ConfigError::new(field("shape"), "swimmers are 2D only"));
                }
                let r = need("radius", b.radius)?;
                let l = need("rest_length", b.rest_length)?;
                let a = need("amplitude", b.amplitude)?;
                need("period", b.period)?;
                if l - a <= 2.0 * r {
                    return Err(ConfigError::new(
                        field("amplitude"),
                        format!("retracted rod {} would not clear two spheres of radius {r}", l - a),
                    ));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (&self.domain.lo, &self.domain.hi) {
            if (0..dim).any(|i| b.position[i] < lo[i] || b.position[i] > hi[i]) {
                return Err(ConfigError::new(field("position"), "outside the domain box"));
            }
        }
        Ok(())
    }

    fn body_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.bodies.iter().enumerate().map(|(k, b)| b.id.unwrap_or(k)).collect();
        let mut next = ids.iter().max().map_or(0, |m| m + 1);
        for l in &self.lattices {
            let n: usize = l.counts.iter().product();
            ids.extend(next..next + n);
            next += n;
        }
        ids
    }

    /// Validates, then builds the initial simulation state. `seed`
    /// overrides the configured seed.
    pub fn build(&self, seed: Option<u64>) -> Result<ScenarioState> {
        self.validate()?;
        let dim = self.dim;
        let c = &self.collision;
        let h = c.mesh_size;
        let ids = self.body_ids();
        let mut bodies = Vec::with_capacity(ids.len());
        for (k, b) in self.bodies.iter().enumerate() {
            bodies.push(self.build_body(k, ids[k], b)?);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(self.seed));
        let mut next = self.bodies.len();
        for (k, l) in self.lattices.iter().enumerate() {
            let counts = [l.counts[0], l.counts[1], l.counts.get(2).copied().unwrap_or(1)];
            for iz in 0..counts[2] {
                for iy in 0..counts[1] {
                    for ix in 0..counts[0] {
                        let index = [ix, iy, iz];
                        let mut p = Vec3::zeros();
                        for a in 0..dim {
                            p[a] = l.origin[a] + index[a] as f64 * l.spacing[a];
                            if l.jitter > 0.0 {
                                p[a] += rng.random_range(-l.jitter..=l.jitter);
                            }
                        }
                        let body = RigidBody::new(ids[next], dim, Shape::Sphere { radius: l.radius }, l.density, p)
                            .map_err(|e| ConfigError::new(format!("lattices[{k}]"), e.to_string()))?;
                        bodies.push(body);
                        next += 1;
                    }
                }
            }
        }

        let domain = match &self.domain.mesh {
            Some(path) => {
                let mesh = load_mesh(path).map_err(|e| ConfigError::new("domain.mesh", e.to_string()))?;
                if mesh.dim() != dim {
                    return Err(ConfigError::new("domain.mesh", format!("mesh is {}D but dim = {dim}", mesh.dim())));
                }
                for b in &bodies {
                    let markers = match b.shape {
                        Shape::Swimmer(_) => (0..3).map(|k| component_marker(b.id, k)).collect(),
                        _ => vec![body_marker(b.id)],
                    };
                    for m in markers {
                        if !mesh.has_marker(&m) {
                            return Err(ConfigError::new("domain.mesh", format!("marker {m} for body {} not found", b.id)));
                        }
                    }
                }
                Domain::Mesh(Arc::new(mesh))
            }
            None => {
                let (lo, hi) = (self.domain.lo.as_deref().unwrap(), self.domain.hi.as_deref().unwrap());
                let mut bx = BoxDomain::new(dim, to_vec3(lo), to_vec3(hi));
                bx.obstacles = self
                    .domain
                    .obstacles
                    .iter()
                    .map(|o| Obstacle { center: to_vec3(&o.center), radius: o.radius })
                    .collect();
                for (k, b) in bodies.iter().enumerate() {
                    if !bx.contains(&b.position) {
                        return Err(ConfigError::new(
                            format!("lattices (body {k})"),
                            "jittered lattice position falls outside the domain box",
                        ));
                    }
                }
                Domain::Box(bx)
            }
        };

        let mut fluid = FluidProperties::new(
            self.fluid.density,
            self.fluid.viscosity,
            self.fluid.gravity.as_deref().map_or_else(Vec3::zeros, to_vec3),
        );
        fluid.pressure_gradient = self.fluid.pressure_gradient.as_deref().map_or_else(Vec3::zeros, to_vec3);
        fluid.lubrication = self.fluid.lubrication;

        let mode = match c.mode {
            ModeConfig::Spherical => Mode::Spherical,
            ModeConfig::General => Mode::General,
        };
        let mut params = CollisionParams::with_defaults(mode, h);
        params.rho = c.rho;
        params.epsilon = c.epsilon.unwrap_or(h * h);
        params.epsilon_wall = c.epsilon_wall.unwrap_or(h * h / 2.0);
        params.band_factor = c.d_max_factor;

        ScenarioState::new(dim, bodies, domain, fluid, params, self.time.dt)
            .map_err(|e| ConfigError::new("config", e.to_string()))
    }

    fn build_body(&self, k: usize, id: usize, b: &BodyConfig) -> Result<RigidBody> {
        let dim = self.dim;
        let shape = match b.shape {
            ShapeKind::Disk | ShapeKind::Sphere => Shape::Sphere { radius: b.radius.unwrap() },
            ShapeKind::Ellipse | ShapeKind::Ellipsoid => {
                let semi_axes = to_vec3(b.semi_axes.as_deref().unwrap());
                let reference = ellipsoid_reference(&semi_axes, dim, self.collision.mesh_size);
                Shape::Meshed { marker: body_marker(id), semi_axes, reference }
            }
            ShapeKind::Swimmer => Shape::Swimmer(
                Swimmer::new(b.radius.unwrap(), b.rest_length.unwrap(), b.amplitude.unwrap(), b.period.unwrap())
                    .map_err(|e| ConfigError::new(format!("bodies[{k}]"), e.to_string()))?,
            ),
        };
        let mut body = RigidBody::new(id, dim, shape, b.density, to_vec3(&b.position))
            .map_err(|e| ConfigError::new(format!("bodies[{k}]"), e.to_string()))?;
        if let Some(v) = &b.velocity {
            body.velocity = to_vec3(v);
        }
        body.orientation = angles(b.orientation.as_deref(), dim);
        body.angular_velocity = angles(b.angular_velocity.as_deref(), dim);
        Ok(body)
    }
}

fn to_vec3(v: &[f64]) -> Vec3 {
    Vec3::new(v[0], v[1], v.get(2).copied().unwrap_or(0.0))
}

/// 2D angles live in the z slot.
fn angles(v: Option<&[f64]>, dim: usize) -> Vec3 {
    match v {
        None => Vec3::zeros(),
        Some(a) if dim == 2 => Vec3::new(0.0, 0.0, a[0]),
        Some(a) => to_vec3(a),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive, got {v}")))
    }
}

fn vector(field: &str, v: Option<&[f64]>, len: usize) -> Result<()> {
    match v {
        Some(v) if v.len() != len => Err(ConfigError::new(field, format!("needs {len} components, got {}", v.len()))),
        Some(v) if v.iter().any(|x| !x.is_finite()) => Err(ConfigError::new(field, "components must be finite")),
        _ => Ok(()),
    }
}

/// Best-effort dotted path of the key or table enclosing byte `offset`.
fn field_at(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let mut table = String::new();
    for line in before.lines() {
        let t = line.trim();
        if t.starts_with('[') {
            table = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
    }
    let line = before.rsplit('\n').next().unwrap_or("");
    let line_full = text[before.len() - line.len()..].lines().next().unwrap_or("");
    let key = line_full.split('=').next().unwrap_or("").trim();
    match (table.is_empty(), key.is_empty() || key.starts_with('[')) {
        (true, true) => "config".into(),
        (true, false) => key.into(),
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
dim = 2

[domain]
lo = [0.0, 0.0]
hi = [2.0, 6.0]

[fluid]
density = 1.0
viscosity = 0.1
gravity = [0.0, -981.0]

[collision]
rho = 0.015
mesh_size = 0.01

[time]
dt = 0.001
final_time = 0.01

[[bodies]]
shape = "disk"
radius = 0.125
density = 1.25
position = [1.0, 4.0]
"#;

    #[test]
    fn minimal_builds() {
        let cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        let state = cfg.build(None).unwrap();
        assert_eq!(state.bodies.len(), 1);
        assert_eq!(state.collision.epsilon, 1e-4);
        assert_eq!(state.collision.band_factor, 1.5);
    }

    #[test]
    fn bad_rho_names_field() {
        let text = MINIMAL.replace("rho = 0.015", "rho = -1.0");
        let err = ScenarioConfig::parse(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.field, "collision.rho");
    }

    #[test]
    fn parse_error_names_field() {
        let text = MINIMAL.replace("viscosity = 0.1", "viscosity = \"thick\"");
        let err = ScenarioConfig::parse(&text).unwrap_err();
        assert_eq!(err.field, "fluid.viscosity");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("dim = 2", "dim = 2\ncolour = 1");
        assert!(ScenarioConfig::parse(&text).is_err());
    }

    #[test]
    fn final_time_below_dt() {
        let text = MINIMAL.replace("final_time = 0.01", "final_time = 0.0001");
        let err = ScenarioConfig::parse(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.field, "time.final_time");
    }

    #[test]
    fn ellipse_needs_general_mode() {
        let text = MINIMAL.replace("shape = \"disk\"\nradius = 0.125", "shape = \"ellipse\"\nsemi_axes = [0.1, 0.05]");
        let err = ScenarioConfig::parse(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.field, "bodies[0].shape");
    }

    #[test]
    fn lattice_ids_follow_bodies() {
        let text = format!(
            "{MINIMAL}\n[[lattices]]\nshape = \"disk\"\nradius = 0.05\ndensity = 1.1\norigin = [0.2, 0.2]\nspacing = [0.2, 0.2]\ncounts = [3, 2]\n"
        );
        let state = ScenarioConfig::parse(&text).unwrap().build(None).unwrap();
        let ids: Vec<usize> = state.bodies.iter().map(|b| b.id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5, 6]);
        assert!((state.bodies[2].position - Vec3::new(0.4, 0.2, 0.0)).norm() < 1e-15);
    }
}
