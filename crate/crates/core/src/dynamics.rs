//! Time stepping: collision detection and forces, a proxy hydrodynamic
//! model, swimmer actuation, and the rigid-body update.
//!
//! The proxy fluid provides buoyant gravity, an optional uniform
//! pressure-gradient body force, linear (Stokes-type) drag, and a
//! squeeze-film resistance between surfaces inside the collision zone. Drag
//! and squeeze-film terms are integrated implicitly, so the reported
//! hydrodynamic force is evaluated at the end-of-step velocity and
//! `Σ m ΔU = Δt Σ F` holds exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::bodies::{advance_pose, BodyError, ForceTorque, RigidBody, Shape};
use crate::collision::{
    body_marker, component_marker, detect_general, detect_spherical, forces_general, forces_spherical,
    preprocess, BoxDomain, CollisionError, CollisionMap, Domain, Mode, Obstacle,
};
use crate::mesh::{generate_perforated_box, HoleShape, MeshError, PerforatedBox, SimplicialMesh};
use crate::{Mat3, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error("body {id} left the domain at step {step}")]
    Escaped { id: usize, step: u64 },
    #[error("body {id} state is no longer finite at step {step}")]
    Diverged { id: usize, step: u64 },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error("detection mesh: {0}")]
    Mesh(#[from] MeshError),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

#[derive(Clone, Debug, PartialEq)]
pub struct FluidProperties {
    pub density: f64,
    pub viscosity: f64,
    pub gravity: Vec3,
    /// Uniform pressure gradient; bodies feel `−∇p · V`.
    pub pressure_gradient: Vec3,
    /// Squeeze-film resistance between surfaces inside the collision zone.
    pub lubrication: bool,
}

impl FluidProperties {
    pub fn new(density: f64, viscosity: f64, gravity: Vec3) -> Self {
        Self { density, viscosity, gravity, pressure_gradient: Vec3::zeros(), lubrication: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollisionParams {
    pub mode: Mode,
    /// Collision zone width ρ.
    pub rho: f64,
    /// Body-body stiffness ε.
    pub epsilon: f64,
    /// Body-wall stiffness ε_F.
    pub epsilon_wall: f64,
    /// Mesh size of detection meshes (general mode).
    pub mesh_size: f64,
    /// Narrow-band width as a multiple of ρ.
    pub band_factor: f64,
}

impl CollisionParams {
    /// ρ = 1.5h, ε = h², ε_F = h²/2.
    pub fn with_defaults(mode: Mode, h: f64) -> Self {
        Self { mode, rho: 1.5 * h, epsilon: h * h, epsilon_wall: h * h / 2.0, mesh_size: h, band_factor: 1.5 }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioState {
    pub dim: usize,
    pub bodies: Vec<RigidBody>,
    pub domain: Domain,
    pub fluid: FluidProperties,
    pub collision: CollisionParams,
    pub dt: f64,
    pub t: f64,
    pub step: u64,
    /// Overlapping pairs seen so far.
    pub overlap_events: usize,
}

/// Everything computed during one step, for output and checks.
#[derive(Clone, Debug, Default)]
pub struct StepRecord {
    pub map: CollisionMap,
    pub collision: Vec<ForceTorque>,
    /// Gravity, pressure surrogate and drag (at the new velocity).
    pub hydrodynamic: Vec<ForceTorque>,
    pub actuation: Vec<ForceTorque>,
    /// Implicit pair forces at the new velocity: squeeze film plus the
    /// correction from linearizing the collision force over the step.
    pub lubrication: Vec<Vec3>,
    /// Element count of the detection mesh (general mode).
    pub mesh_elements: usize,
}

/// Translational drag coefficient of a single sphere (per unit depth in 2D).
fn sphere_drag(dim: usize, mu: f64, r: f64) -> f64 {
    if dim == 2 {
        4.0 * PI * mu
    } else {
        6.0 * PI * mu * r
    }
}

fn sphere_rot_drag(dim: usize, mu: f64, r: f64) -> f64 {
    if dim == 2 {
        4.0 * PI * mu * r * r
    } else {
        8.0 * PI * mu * r.powi(3)
    }
}

/// Translational and rotational drag coefficients of a body.
pub fn drag_coefficients(body: &RigidBody, mu: f64) -> (f64, f64) {
    match &body.shape {
        Shape::Swimmer(s) => {
            let c = sphere_drag(body.dim, mu, s.radius);
            let arms: f64 = s.local_centers().iter().map(|c| c.norm_squared()).sum();
            (3.0 * c, 3.0 * sphere_rot_drag(body.dim, mu, s.radius) + c * arms)
        }
        _ => {
            let r = body.effective_radius();
            (sphere_drag(body.dim, mu, r), sphere_rot_drag(body.dim, mu, r))
        }
    }
}

/// Buoyant gravity and pressure surrogate, independent of velocity.
fn body_forces(body: &RigidBody, fluid: &FluidProperties) -> Vec3 {
    let v = body.volume();
    let mut f = (body.density - fluid.density) * v * fluid.gravity - v * fluid.pressure_gradient;
    if body.dim == 2 {
        f.z = 0.0;
    }
    f
}

/// Proxy hydrodynamic load at the body's current velocities: buoyant
/// gravity, pressure surrogate, `−c_d μ r U` and `−c_r μ r³ ω` (2D: `−4πμU`
/// and `−4πμr²ω` per unit depth).
pub fn proxy_hydrodynamics(body: &RigidBody, fluid: &FluidProperties) -> ForceTorque {
    let (c, cr) = drag_coefficients(body, fluid.viscosity);
    ForceTorque::new(body_forces(body, fluid) - c * body.velocity, -cr * body.angular_velocity)
}

/// Swimmer propulsion: the force whose drag balance is the three-sphere
/// swimming velocity for the current rod rates.
fn actuation(body: &RigidBody, fluid: &FluidProperties, t: f64) -> ForceTorque {
    let Shape::Swimmer(s) = &body.shape else {
        return ForceTorque::default();
    };
    let (_, rates) = s.schedule(t);
    let xi = sphere_drag(body.dim, fluid.viscosity, s.radius);
    let speed = s.swimming_speed(rates, fluid.viscosity, xi);
    let axis = body.rotation() * Vec3::x();
    ForceTorque::new(3.0 * xi * speed * axis, Vec3::zeros())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub reynolds: f64,
    pub kinetic_energy: f64,
    /// True when the body is not a disk or sphere and `r` is the effective
    /// radius.
    pub approximate: bool,
}

/// `Re = 2 r ρ_s |U| / μ` and `E_t = ½ m |U|²` (`½ π r² ρ_s |U|²` for a disk).
pub fn diagnostics(body: &RigidBody, fluid: &FluidProperties) -> Diagnostics {
    let r = body.effective_radius();
    let speed = body.velocity.norm();
    let approximate = !matches!(body.shape, Shape::Sphere { .. });
    if approximate {
        log::debug!("body {}: Reynolds number uses the effective radius {r}", body.id);
    }
    let reynolds = if fluid.viscosity > 0.0 { 2.0 * r * body.density * speed / fluid.viscosity } else { f64::INFINITY };
    Diagnostics { reynolds, kinetic_energy: 0.5 * body.mass * speed * speed, approximate }
}

impl ScenarioState {
    pub fn new(
        dim: usize,
        bodies: Vec<RigidBody>,
        domain: Domain,
        fluid: FluidProperties,
        collision: CollisionParams,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(DynamicsError::Invalid(format!("time step {dt} must be positive")));
        }
        if !(fluid.density > 0.0) || !(fluid.viscosity >= 0.0) {
            return Err(DynamicsError::Invalid("fluid density must be positive and viscosity non-negative".into()));
        }
        if !(collision.rho > 0.0) || !(collision.epsilon > 0.0) || !(collision.epsilon_wall > 0.0) {
            return Err(DynamicsError::Invalid("rho, epsilon and epsilon_wall must be positive".into()));
        }
        if collision.mode == Mode::Spherical {
            if let Some(b) = bodies.iter().find(|b| !matches!(b.shape, Shape::Sphere { .. })) {
                return Err(CollisionError::NeedsGeneral(b.id).into());
            }
        }
        if let Domain::Box(bx) = &domain {
            if collision.mode == Mode::General && !bx.obstacles.is_empty() {
                return Err(DynamicsError::Invalid("static obstacles are supported in spherical mode only".into()));
            }
            for b in &bodies {
                if !bx.contains(&b.position) {
                    return Err(DynamicsError::Invalid(format!("body {} starts outside the domain", b.id)));
                }
            }
        }
        let mut state = Self { dim, bodies, domain, fluid, collision, dt, t: 0.0, step: 0, overlap_events: 0 };
        for b in &mut state.bodies {
            if let Shape::Swimmer(s) = &b.shape {
                let ((l, r), _) = s.schedule(0.0);
                b.set_rod_lengths(l, r);
            }
        }
        Ok(state)
    }

    /// Mesh of the fluid region used by general-mode detection: the domain
    /// box restricted to a window around the bodies, with each body (or
    /// swimmer sphere) cut out. Window sides that are not domain walls are
    /// marked `window` and do not seed the wall field.
    pub fn detection_mesh(&self) -> Result<SimplicialMesh> {
        let bx = match &self.domain {
            Domain::Mesh(m) => return Ok((**m).clone()),
            Domain::Box(bx) => bx,
        };
        let p = &self.collision;
        let h = p.mesh_size;
        let mut holes = Vec::new();
        for b in &self.bodies {
            match &b.shape {
                Shape::Sphere { radius } => holes.push((body_marker(b.id), HoleShape::disk(b.position, *radius))),
                Shape::Meshed { marker, semi_axes, .. } => holes.push((
                    marker.clone(),
                    HoleShape::Ellipsoid { center: b.position, semi_axes: *semi_axes, rotation: b.rotation() },
                )),
                Shape::Swimmer(_) => {
                    for (k, (c, r)) in b.spheres().into_iter().enumerate() {
                        holes.push((component_marker(b.id, k), HoleShape::disk(c, r)));
                    }
                }
            }
        }
        let margin = p.band_factor * p.rho + 2.0 * h;
        let (mut lo, mut hi) = (bx.hi, bx.lo);
        for (_, shape) in &holes {
            let HoleShape::Ellipsoid { center, .. } = shape;
            let reach = Vec3::from_fn(|d, _| shape.half_extent(d) + margin);
            lo = lo.inf(&(center - reach));
            hi = hi.sup(&(center + reach));
        }
        if holes.is_empty() {
            lo = bx.lo;
            hi = bx.hi;
        }
        let mut walls = [true; 6];
        for k in 0..self.dim {
            lo[k] = lo[k].max(bx.lo[k]);
            hi[k] = hi[k].min(bx.hi[k]);
            walls[2 * k] = lo[k] == bx.lo[k];
            walls[2 * k + 1] = hi[k] == bx.hi[k];
        }
        if self.dim == 2 {
            lo.z = 0.0;
            hi.z = 0.0;
        }
        let mut spec = PerforatedBox::new(self.dim, lo, hi, h);
        spec.walls = walls;
        if p.rho < h {
            spec.boundary_h = Some(p.rho / 2.0);
        }
        for (marker, shape) in holes {
            spec = spec.with_hole(marker, shape);
        }
        Ok(generate_perforated_box(&spec)?)
    }

    /// Collision detection on the current configuration.
    pub fn detect(&self) -> Result<(CollisionMap, usize)> {
        let p = &self.collision;
        let pre = preprocess(&self.bodies, &self.domain, p.mode)?;
        match p.mode {
            Mode::Spherical => Ok((detect_spherical(&pre, p.rho)?, 0)),
            Mode::General => {
                let mesh = self.detection_mesh()?;
                let map = detect_general(&pre, &mesh, &self.bodies, p.rho, p.band_factor)?;
                Ok((map, mesh.element_count()))
            }
        }
    }

    /// Advances one step of size `dt`.
    pub fn step(&mut self) -> Result<StepRecord> {
        let n = self.bodies.len();
        let dt = self.dt;
        let p = self.collision.clone();
        let (map, mesh_elements) = self.detect()?;
        if map.overlap_events > 0 {
            self.overlap_events += map.overlap_events;
        }
        let collision = match p.mode {
            Mode::Spherical => {
                let pre = preprocess(&self.bodies, &self.domain, p.mode)?;
                forces_spherical(&map, &pre, p.epsilon, p.epsilon_wall)
            }
            Mode::General => forces_general(&map, &self.bodies, p.epsilon, p.epsilon_wall),
        };
        let actuation: Vec<ForceTorque> = self.bodies.iter().map(|b| actuation(b, &self.fluid, self.t)).collect();
        let external: Vec<Vec3> = self.bodies.iter().map(|b| body_forces(b, &self.fluid)).collect();

        let new_velocity = self.solve_translation(&map, &collision, &actuation, &external);
        let mut hydrodynamic = Vec::with_capacity(n);
        let mut lubrication = Vec::with_capacity(n);
        for (i, b) in self.bodies.iter_mut().enumerate() {
            let (c, cr) = drag_coefficients(b, self.fluid.viscosity);
            let u = new_velocity[i];
            let explicit = collision[i].force + actuation[i].force + external[i];
            lubrication.push(b.mass * (u - b.velocity) / dt - explicit + c * u);
            hydrodynamic.push(ForceTorque::new(external[i] - c * u, Vec3::zeros()));
            b.velocity = u;

            let torque = collision[i].torque + actuation[i].torque;
            let omega = if b.dim == 2 {
                let inertia = b.inertia[(2, 2)];
                Vec3::new(0.0, 0.0, (inertia * b.angular_velocity.z + dt * torque.z) / (inertia + dt * cr))
            } else {
                let a = b.world_inertia();
                let lhs = a + Mat3::identity() * (dt * cr);
                lhs.cholesky().ok_or(BodyError::SingularInertia(b.id))?.solve(&(a * b.angular_velocity + dt * torque))
            };
            hydrodynamic[i].torque = -cr * omega;
            b.angular_velocity = omega;
            advance_pose(b, dt);
        }

        self.step += 1;
        self.t = self.step as f64 * dt;
        for b in &mut self.bodies {
            if let Shape::Swimmer(s) = &b.shape {
                let ((l, r), _) = s.schedule(self.t);
                b.set_rod_lengths(l, r);
            }
        }
        for b in &self.bodies {
            let finite = b.position.iter().chain(b.velocity.iter()).chain(b.angular_velocity.iter()).all(|x| x.is_finite());
            if !finite {
                return Err(DynamicsError::Diverged { id: b.id, step: self.step });
            }
            if let Domain::Box(bx) = &self.domain {
                if !bx.contains(&b.position) {
                    return Err(DynamicsError::Escaped { id: b.id, step: self.step });
                }
            }
        }
        Ok(StepRecord { map, collision, hydrodynamic, actuation, lubrication, mesh_elements })
    }

    /// Implicit translational update with drag, squeeze-film and collision
    /// coupling:
    /// `(M/Δt + C + K) U_new = M U/Δt + F_explicit`.
    fn solve_translation(
        &self,
        map: &CollisionMap,
        collision: &[ForceTorque],
        actuation: &[ForceTorque],
        external: &[Vec3],
    ) -> Vec<Vec3> {
        let dt = self.dt;
        let mu = self.fluid.viscosity;
        let rhs: Vec<Vec3> = self
            .bodies
            .iter()
            .enumerate()
            .map(|(i, b)| b.mass * b.velocity / dt + collision[i].force + actuation[i].force + external[i])
            .collect();
        let diag: Vec<f64> =
            self.bodies.iter().map(|b| b.mass / dt + drag_coefficients(b, mu).0).collect();

        let mut films = if self.fluid.lubrication && mu > 0.0 { self.squeeze_films(map) } else { Vec::new() };
        films.extend(self.collision_stiffness(map));
        let mut out: Vec<Vec3> = rhs.iter().zip(&diag).map(|(r, d)| r / *d).collect();
        if films.is_empty() {
            return out;
        }
        let mut involved: Vec<usize> = films.iter().flat_map(|f| [Some(f.0), f.1]).flatten().collect();
        involved.sort_unstable();
        involved.dedup();
        let slot = |i: usize| involved.binary_search(&i).unwrap();
        let d = self.dim;
        let size = involved.len() * d;
        let mut a = DMatrix::<f64>::zeros(size, size);
        let mut b = DVector::<f64>::zeros(size);
        for (s, &i) in involved.iter().enumerate() {
            for k in 0..d {
                a[(s * d + k, s * d + k)] = diag[i];
                b[s * d + k] = rhs[i][k];
            }
        }
        for (i, j, k, n) in &films {
            let si = slot(*i);
            let block = |r: usize, c: usize| k * n[r] * n[c];
            for r in 0..d {
                for c in 0..d {
                    a[(si * d + r, si * d + c)] += block(r, c);
                }
            }
            if let Some(j) = j {
                let sj = slot(*j);
                for r in 0..d {
                    for c in 0..d {
                        a[(sj * d + r, sj * d + c)] += block(r, c);
                        a[(si * d + r, sj * d + c)] -= block(r, c);
                        a[(sj * d + r, si * d + c)] -= block(r, c);
                    }
                }
            }
        }
        let Some(x) = a.cholesky().map(|c| c.solve(&b)) else {
            log::warn!("squeeze-film system not positive definite; skipping it this step");
            return out;
        };
        for (s, &i) in involved.iter().enumerate() {
            for k in 0..d {
                out[i][k] = x[s * d + k];
            }
        }
        out
    }

    /// Linearized collision force `F(x + Δt U) ≈ F(x) + J Δt U`, kept along
    /// the pair normal where the force stiffens as the gap closes. Mirror
    /// images move with the body, so their relative displacement doubles.
    fn collision_stiffness(&self, map: &CollisionMap) -> Vec<(usize, Option<usize>, f64, Vec3)> {
        let p = &self.collision;
        let rho = map.rho;
        let obstacles: &[Obstacle] = match &self.domain {
            Domain::Box(bx) => &bx.obstacles,
            Domain::Mesh(_) => &[],
        };
        map.pairs
            .iter()
            .filter_map(|pair| {
                let normal = pair.x_i - pair.x_other;
                let len = normal.norm();
                if len == 0.0 {
                    return None;
                }
                let d = pair.distance.max(0.0);
                let eps = if pair.is_wall() { p.epsilon_wall } else { p.epsilon };
                // F = len · (ρ − d)²/ε with len growing one-for-one with d
                let slope = (2.0 * len * (rho - d) - (rho - d).powi(2)) / eps;
                if !(slope > 0.0) {
                    return None;
                }
                let image = pair.is_wall()
                    && p.mode == Mode::Spherical
                    && !obstacles.iter().any(|o| o.center == pair.x_other);
                let factor = if image { 2.0 } else { 1.0 };
                let j = if pair.is_wall() { None } else { Some(pair.j as usize) };
                Some((pair.i, j, factor * self.dt * slope, normal / len))
            })
            .collect()
    }

    /// Squeeze-film resistances `(i, j or wall, k, unit normal)` for the
    /// pairs of the collision map, evaluated at the surface gap.
    fn squeeze_films(&self, map: &CollisionMap) -> Vec<(usize, Option<usize>, f64, Vec3)> {
        let mu = self.fluid.viscosity;
        let floor = 1e-4 * map.rho;
        let obstacles: &[Obstacle] = match &self.domain {
            Domain::Box(bx) => &bx.obstacles,
            Domain::Mesh(_) => &[],
        };
        let radius = |b: &RigidBody| match &b.shape {
            Shape::Swimmer(s) => s.radius,
            _ => b.effective_radius(),
        };
        map.pairs
            .iter()
            .filter_map(|p| {
                let normal = p.x_i - p.x_other;
                if normal.norm() == 0.0 {
                    return None;
                }
                let n = normal.normalize();
                let ri = radius(&self.bodies[p.i]);
                let (j, reduced, gap) = if p.is_wall() {
                    let obstacle = obstacles.iter().find(|o| o.center == p.x_other);
                    match (self.collision.mode, obstacle) {
                        // the mirror image sits twice the gap away
                        (Mode::Spherical, None) => (None, ri, p.distance / 2.0),
                        (_, Some(o)) => (None, ri * o.radius / (ri + o.radius), p.distance),
                        _ => (None, ri, p.distance),
                    }
                } else {
                    let rj = radius(&self.bodies[p.j as usize]);
                    (Some(p.j as usize), ri * rj / (ri + rj), p.distance)
                };
                let gap = gap.max(floor);
                let k = if self.dim == 2 {
                    3.0 * PI * 2f64.sqrt() * mu * (reduced / gap).powf(1.5)
                } else {
                    6.0 * PI * mu * reduced * reduced / gap
                };
                Some((p.i, j, k, n))
            })
            .collect()
    }

    pub fn run_until(&mut self, final_time: f64, mut on_step: impl FnMut(&ScenarioState, &StepRecord)) -> Result<()> {
        let steps = (final_time / self.dt - 1e-9).ceil().max(0.0) as u64;
        while self.step < steps {
            let record = self.step()?;
            on_step(self, &record);
        }
        Ok(())
    }
}

/// Advances `state` by one step (see [`ScenarioState::step`]).
pub fn step(state: &mut ScenarioState) -> Result<StepRecord> {
    state.step()
}

/// Fixed header of the per-step trajectory CSV.
pub fn trajectory_header(dim: usize) -> String {
    let mut cols: Vec<&str> = vec!["step", "t", "id"];
    if dim == 2 {
        cols.extend(["x", "y", "ux", "uy", "omega", "theta", "fx", "fy", "torque"]);
    } else {
        cols.extend([
            "x", "y", "z", "ux", "uy", "uz", "wx", "wy", "wz", "theta_x", "theta_y", "theta_z", "fx", "fy", "fz",
            "torque_x", "torque_y", "torque_z",
        ]);
    }
    cols.extend(["pairs", "min_distance"]);
    cols.join(",")
}

/// One trajectory row per body after a step. Collision force and torque
/// are the repulsive contributions applied during the step.
pub fn trajectory_rows(state: &ScenarioState, record: &StepRecord) -> String {
    let mut out = String::new();
    let dim = state.dim;
    for (i, b) in state.bodies.iter().enumerate() {
        let _ = write!(out, "{},{:.12e},{}", state.step, state.t, b.id);
        let mut push = |v: &Vec3, planar: bool| {
            if planar {
                for k in 0..dim {
                    let _ = write!(out, ",{:.12e}", v[k]);
                }
            } else if dim == 2 {
                let _ = write!(out, ",{:.12e}", v.z);
            } else {
                for k in 0..3 {
                    let _ = write!(out, ",{:.12e}", v[k]);
                }
            }
        };
        let f = record.collision.get(i).copied().unwrap_or_default();
        push(&b.position, true);
        push(&b.velocity, true);
        push(&b.angular_velocity, false);
        push(&b.orientation, false);
        push(&f.force, true);
        push(&f.torque, false);
        let mine = record.map.pairs.iter().filter(|p| p.i == i || p.j == i as isize);
        let (count, min) = mine.fold((0usize, f64::INFINITY), |(c, m), p| (c + 1, m.min(p.distance)));
        if count == 0 {
            let _ = writeln!(out, ",0,");
        } else {
            let _ = writeln!(out, ",{count},{min:.12e}");
        }
    }
    out
}

/// Box domain helper for callers building states by hand.
pub fn box_domain(dim: usize, lo: Vec3, hi: Vec3) -> Domain {
    Domain::Box(BoxDomain::new(dim, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::Swimmer;

    fn disk(id: usize, r: f64, density: f64, c: (f64, f64)) -> RigidBody {
        RigidBody::new(id, 2, Shape::Sphere { radius: r }, density, Vec3::new(c.0, c.1, 0.0)).unwrap()
    }

    fn state(bodies: Vec<RigidBody>, fluid: FluidProperties, h: f64, dt: f64) -> ScenarioState {
        let dom = box_domain(2, Vec3::zeros(), Vec3::new(2.0, 6.0, 0.0));
        ScenarioState::new(2, bodies, dom, fluid, CollisionParams::with_defaults(Mode::Spherical, h), dt).unwrap()
    }

    #[test]
    fn neutral_body_at_rest_stays() {
        let fluid = FluidProperties::new(1.0, 0.1, Vec3::new(0.0, -981.0, 0.0));
        let mut s = state(vec![disk(0, 0.1, 1.0, (1.0, 3.0))], fluid, 0.01, 1e-3);
        let before = s.bodies[0].clone();
        for _ in 0..10 {
            s.step().unwrap();
        }
        assert_eq!(s.bodies[0].position, before.position);
        assert_eq!(s.bodies[0].velocity, before.velocity);
        assert_eq!(s.step, 10);
        assert!((s.t - 0.01).abs() < 1e-15);
    }

    #[test]
    fn buoyant_weight_of_paper_disk() {
        let fluid = FluidProperties::new(1.0, 0.1, Vec3::new(0.0, -981.0, 0.0));
        let b = disk(0, 0.125, 1.25, (1.0, 4.0));
        let f = proxy_hydrodynamics(&b, &fluid);
        assert!((f.force.y + 0.25 * PI * 0.125 * 0.125 * 981.0).abs() < 1e-10);
        assert!((f.force.y.abs() - 12.04).abs() < 0.01);
    }

    #[test]
    fn terminal_velocity() {
        let fluid = FluidProperties::new(1.0, 0.1, Vec3::new(0.0, -981.0, 0.0));
        let mut s = state(vec![disk(0, 0.125, 1.25, (1.0, 5.5))], fluid, 0.01, 1e-3);
        for _ in 0..400 {
            s.step().unwrap();
        }
        let want = 0.25 * PI * 0.125 * 0.125 * 981.0 / (4.0 * PI * 0.1);
        assert!((s.bodies[0].velocity.y.abs() - want).abs() / want < 0.01);
    }

    #[test]
    fn diagnostics_formulas() {
        let fluid = FluidProperties::new(1.0, 0.1, Vec3::zeros());
        let mut b = disk(0, 0.125, 1.25, (1.0, 1.0));
        assert_eq!(diagnostics(&b, &fluid).reynolds, 0.0);
        b.velocity = Vec3::new(0.6, 0.8, 0.0);
        let d = diagnostics(&b, &fluid);
        assert!((d.reynolds - 3.125).abs() < 1e-12);
        b.velocity *= 2.0;
        assert!((diagnostics(&b, &fluid).kinetic_energy / d.kinetic_energy - 4.0).abs() < 1e-12);
        assert!((d.kinetic_energy - 0.5 * PI * 0.125 * 0.125 * 1.25).abs() < 1e-15);
    }

    #[test]
    fn momentum_bookkeeping() {
        let fluid = FluidProperties::new(1.0, 0.1, Vec3::new(0.0, -981.0, 0.0));
        let mut s = state(
            vec![disk(0, 0.1, 1.5, (0.5, 0.11)), disk(1, 0.1, 1.2, (0.5, 0.32)), disk(2, 0.1, 1.2, (1.5, 2.0))],
            fluid,
            0.01,
            1e-3,
        );
        let (mut body_pairs, mut wall_pairs) = (0, 0);
        for _ in 0..20 {
            let before: Vec<Vec3> = s.bodies.iter().map(|b| b.mass * b.velocity).collect();
            let r = s.step().unwrap();
            body_pairs += r.map.body_pair_count();
            wall_pairs += r.map.wall_pair_count();
            let mut residual = Vec3::zeros();
            for (i, b) in s.bodies.iter().enumerate() {
                residual += b.mass * b.velocity - before[i]
                    - s.dt * (r.collision[i].force + r.hydrodynamic[i].force + r.lubrication[i]);
            }
            assert!(residual.norm() < 1e-10, "{residual:?}");
        }
        assert!(body_pairs > 0 && wall_pairs > 0);
    }

    #[test]
    fn escape_is_reported() {
        let fluid = FluidProperties::new(1.0, 0.0, Vec3::zeros());
        let mut b = disk(0, 0.1, 1.0, (1.99, 3.0));
        b.velocity.x = 100.0;
        let mut s = state(vec![b], fluid, 0.001, 1e-3);
        s.fluid.lubrication = false;
        assert!(matches!(s.step(), Err(DynamicsError::Escaped { id: 0, step: 1 })));
    }

    #[test]
    fn swimmer_moves_along_axis() {
        let fluid = FluidProperties::new(1.0, 1.0, Vec3::zeros());
        let sw = Swimmer::new(1.0, 10.0, 4.0, 8.0).unwrap();
        let mut b = RigidBody::new(0, 2, Shape::Swimmer(sw), 0.1, Vec3::new(75.0, 20.0, 0.0)).unwrap();
        b.orientation.z = 0.3;
        let axis = b.rotation() * Vec3::x();
        let dom = box_domain(2, Vec3::zeros(), Vec3::new(150.0, 40.0, 0.0));
        let mut p = CollisionParams::with_defaults(Mode::General, 0.3);
        p.rho = 0.03;
        let mut s = ScenarioState::new(2, vec![b], dom, fluid, p, 0.1).unwrap();
        let start = s.bodies[0].position;
        s.run_until(8.0, |_, _| {}).unwrap();
        let disp = s.bodies[0].position - start;
        assert!(disp.norm() > 1e-3, "{disp:?}");
        assert!((disp.normalize().dot(&axis)).abs() > 1.0 - 1e-9);
    }
}
