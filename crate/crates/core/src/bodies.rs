//! Rigid bodies: shapes, poses, inertia and the Newton–Euler update.
//!
//! Orientation follows the Euler-angle convention `R = Rz(θz) Ry(θy) Rx(θx)`
//! in 3D and `R(θ) = [[cos, sin], [-sin, cos]]` in 2D. Body-frame points map
//! to the world as `CM + R(θ) q`. In 2D the angle, the angular velocity and
//! the torque live in the `z` component of their vectors.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::{Mat3, Vec3};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BodyError {
    #[error("dimension must be 2 or 3 (got {0})")]
    Dimension(usize),
    #[error("invalid body parameter: {0}")]
    Invalid(String),
    #[error("stroke amplitude {amplitude} must be smaller than the rod length {length}")]
    Amplitude { amplitude: f64, length: f64 },
    #[error("effective inertia of body {0} is singular")]
    SingularInertia(usize),
    #[error("{0} has no closed-form inertia; integrate over its mesh instead")]
    NoAnalyticInertia(&'static str),
}

pub type Result<T> = std::result::Result<T, BodyError>;

/// Three collinear spheres joined by two rods along the body-frame x axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Swimmer {
    pub radius: f64,
    pub rest_length: f64,
    pub l_left: f64,
    pub l_right: f64,
    /// Rod shortening during a stroke phase.
    pub amplitude: f64,
    /// Duration of the full four-phase cycle.
    pub period: f64,
}

impl Swimmer {
    pub fn new(radius: f64, rest_length: f64, amplitude: f64, period: f64) -> Result<Self> {
        if !(radius > 0.0) || !(period > 0.0) || !(amplitude >= 0.0) {
            return Err(BodyError::Invalid(format!(
                "swimmer radius {radius}, amplitude {amplitude}, period {period}"
            )));
        }
        if rest_length <= 2.0 * radius {
            return Err(BodyError::Invalid(format!("rod length {rest_length} does not clear the spheres")));
        }
        if amplitude >= rest_length {
            return Err(BodyError::Amplitude { amplitude, length: rest_length });
        }
        Ok(Self { radius, rest_length, l_left: rest_length, l_right: rest_length, amplitude, period })
    }

    /// Body-frame sphere centers (left, middle, right) relative to the
    /// center of mass.
    pub fn local_centers(&self) -> [Vec3; 3] {
        let mid = -(self.l_right - self.l_left) / 3.0;
        [
            Vec3::new(mid - self.l_left, 0.0, 0.0),
            Vec3::new(mid, 0.0, 0.0),
            Vec3::new(mid + self.l_right, 0.0, 0.0),
        ]
    }

    /// Rod lengths and their rates at time `t` of the periodic stroke.
    pub fn schedule(&self, t: f64) -> ((f64, f64), (f64, f64)) {
        let (l, a) = (self.rest_length, self.amplitude);
        let quarter = self.period / 4.0;
        let cycles = (t / self.period).floor();
        let local = t - cycles * self.period;
        let q = ((local / quarter).floor() as usize).min(3);
        let s = (local - q as f64 * quarter) / quarter;
        let rate = a / quarter;
        match q {
            0 => ((l - a * s, l), (-rate, 0.0)),
            1 => ((l - a, l - a * s), (0.0, -rate)),
            2 => ((l - a + a * s, l - a), (rate, 0.0)),
            _ => ((l, l - a + a * s), (0.0, rate)),
        }
    }

    /// Swimming speed along the body axis for rod rates `(dl_left, dl_right)`,
    /// from three point forces coupled by the Oseen tensor with zero net
    /// force. `xi` is the single-sphere drag coefficient.
    pub fn swimming_speed(&self, rates: (f64, f64), viscosity: f64, xi: f64) -> f64 {
        if viscosity <= 0.0 {
            return 0.0;
        }
        let x = self.local_centers().map(|c| c.x);
        let mut g = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                g[(i, j)] = if i == j { 1.0 / xi } else { 1.0 / (4.0 * PI * viscosity * (x[i] - x[j]).abs()) };
            }
        }
        let mut a = Mat3::zeros();
        for j in 0..3 {
            a[(0, j)] = g[(1, j)] - g[(0, j)];
            a[(1, j)] = g[(2, j)] - g[(1, j)];
            a[(2, j)] = 1.0;
        }
        let b = Vec3::new(rates.0, rates.1, 0.0);
        match a.lu().solve(&b) {
            Some(f) => (g * f).sum() / 3.0,
            None => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrokePhase {
    RetractLeft,
    RetractRight,
    ExtendLeft,
    ExtendRight,
}

impl StrokePhase {
    pub const CYCLE: [StrokePhase; 4] =
        [StrokePhase::RetractLeft, StrokePhase::RetractRight, StrokePhase::ExtendLeft, StrokePhase::ExtendRight];
}

/// Applies one discrete stroke phase with the middle sphere held fixed.
/// Returns the updated swimmer and the shift of its center of mass along the
/// body axis.
pub fn swimmer_stroke(swimmer: &Swimmer, phase: StrokePhase, amplitude: f64) -> Result<(Swimmer, f64)> {
    if amplitude >= swimmer.rest_length {
        return Err(BodyError::Amplitude { amplitude, length: swimmer.rest_length });
    }
    let mut s = swimmer.clone();
    match phase {
        StrokePhase::RetractLeft => s.l_left -= amplitude,
        StrokePhase::RetractRight => s.l_right -= amplitude,
        StrokePhase::ExtendLeft => s.l_left += amplitude,
        StrokePhase::ExtendRight => s.l_right += amplitude,
    }
    if s.l_left <= 2.0 * s.radius || s.l_right <= 2.0 * s.radius {
        return Err(BodyError::Amplitude { amplitude, length: swimmer.l_left.min(swimmer.l_right) });
    }
    let shift = ((s.l_right - s.l_left) - (swimmer.l_right - swimmer.l_left)) / 3.0;
    Ok((s, shift))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Disk in 2D, ball in 3D.
    Sphere { radius: f64 },
    /// Ellipse or ellipsoid resolved by the mesh. `reference` holds
    /// body-frame boundary samples relative to the center of mass.
    Meshed { marker: String, semi_axes: Vec3, reference: Vec<Vec3> },
    Swimmer(Swimmer),
}

/// Shapes with closed-form mass properties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticShape {
    Disk { r: f64 },
    Sphere { r: f64 },
    Ellipse { a: f64, b: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
}

/// Mass and body-frame inertia tensor. 2D shapes are laminae of unit depth;
/// their in-plane rotational inertia is the `(2, 2)` entry.
pub fn analytic_inertia(shape: AnalyticShape, density: f64) -> (f64, Mat3) {
    match shape {
        AnalyticShape::Disk { r } => analytic_inertia(AnalyticShape::Ellipse { a: r, b: r }, density),
        AnalyticShape::Sphere { r } => analytic_inertia(AnalyticShape::Ellipsoid { a: r, b: r, c: r }, density),
        AnalyticShape::Ellipse { a, b } => {
            let m = density * PI * a * b;
            (m, Mat3::from_diagonal(&Vec3::new(m * b * b / 4.0, m * a * a / 4.0, m * (a * a + b * b) / 4.0)))
        }
        AnalyticShape::Ellipsoid { a, b, c } => {
            let m = density * 4.0 / 3.0 * PI * a * b * c;
            let k = m / 5.0;
            (m, Mat3::from_diagonal(&Vec3::new(k * (b * b + c * c), k * (a * a + c * c), k * (a * a + b * b))))
        }
    }
}

/// Mass, center of mass and inertia tensor of a uniform-density simplicial
/// region, integrated exactly per simplex. 2D meshes yield the lamina
/// tensor as in [`analytic_inertia`].
pub fn mesh_inertia(mesh: &crate::mesh::SimplicialMesh, density: f64) -> (f64, Vec3, Mat3) {
    let dim = mesh.dim();
    let n = (dim + 1) as f64;
    let mut mass = 0.0;
    let mut first = Vec3::zeros();
    let mut second = Mat3::zeros();
    for (k, s) in mesh.simplices().enumerate() {
        let vol = mesh.simplex_volume(k).abs();
        let mut sum = Vec3::zeros();
        let mut outer = Mat3::zeros();
        for &v in s {
            let p = mesh.vertex(v);
            sum += p;
            outer += p * p.transpose();
        }
        mass += density * vol;
        first += density * vol * sum / n;
        second += density * vol / (n * (n + 1.0)) * (outer + sum * sum.transpose());
    }
    let cm = first / mass;
    let central = second - mass * cm * cm.transpose();
    let inertia = Mat3::identity() * central.trace() - central;
    (mass, cm, inertia)
}

/// Rotation matrix for Euler angles `theta`; in 2D only `theta.z` is used
/// and the result is embedded in the upper-left block.
pub fn rotation_matrix(theta: &Vec3, dim: usize) -> Mat3 {
    if dim == 2 {
        let (s, c) = theta.z.sin_cos();
        return Mat3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0);
    }
    let (sx, cx) = theta.x.sin_cos();
    let (sy, cy) = theta.y.sin_cos();
    let (sz, cz) = theta.z.sin_cos();
    let rz = Mat3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    let ry = Mat3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rx = Mat3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    rz * ry * rx
}

fn wrap_into(x: f64, lo: f64, period: f64) -> f64 {
    let w = lo + (x - lo).rem_euclid(period);
    // keep the closed upper bound reachable
    if w == lo && x > lo { lo + period } else { w }
}

/// Wraps Euler angles into the admissible set: `[-π, π]` in 2D, and
/// `[-π, π] × [0, π] × [0, π/2]` in 3D (each modulo its interval length).
/// Returns whether any component was moved.
pub fn wrap_angles(theta: &Vec3, dim: usize) -> (Vec3, bool) {
    let fold = |x: f64, lo: f64, hi: f64| {
        if x >= lo && x <= hi { x } else { wrap_into(x, lo, hi - lo) }
    };
    let out = if dim == 2 {
        Vec3::new(0.0, 0.0, fold(theta.z, -PI, PI))
    } else {
        Vec3::new(fold(theta.x, -PI, PI), fold(theta.y, 0.0, PI), fold(theta.z, 0.0, FRAC_PI_2))
    };
    let moved = out != *theta;
    (out, moved)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ForceTorque {
    pub force: Vec3,
    pub torque: Vec3,
}

impl ForceTorque {
    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Self { force, torque }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|x| x.is_finite())
    }
}

impl std::ops::Add for ForceTorque {
    type Output = ForceTorque;
    fn add(self, o: ForceTorque) -> ForceTorque {
        ForceTorque { force: self.force + o.force, torque: self.torque + o.torque }
    }
}

impl std::ops::AddAssign for ForceTorque {
    fn add_assign(&mut self, o: ForceTorque) {
        self.force += o.force;
        self.torque += o.torque;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidBody {
    pub id: usize,
    pub dim: usize,
    pub shape: Shape,
    pub density: f64,
    pub mass: f64,
    /// Body-frame inertia tensor.
    pub inertia: Mat3,
    pub position: Vec3,
    pub velocity: Vec3,
    pub angular_velocity: Vec3,
    pub orientation: Vec3,
}

impl RigidBody {
    /// Body of a closed-form shape at rest. Meshed shapes get their
    /// reference boundary sampled at spacing `h`.
    pub fn new(id: usize, dim: usize, shape: Shape, density: f64, position: Vec3) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(BodyError::Dimension(dim));
        }
        if !(density > 0.0) {
            return Err(BodyError::Invalid(format!("density {density} must be positive")));
        }
        let (mass, inertia) = match &shape {
            Shape::Sphere { radius } => {
                if !(*radius > 0.0) {
                    return Err(BodyError::Invalid(format!("radius {radius} must be positive")));
                }
                let s = if dim == 2 { AnalyticShape::Disk { r: *radius } } else { AnalyticShape::Sphere { r: *radius } };
                analytic_inertia(s, density)
            }
            Shape::Meshed { semi_axes, .. } => {
                if (0..dim).any(|i| !(semi_axes[i] > 0.0)) {
                    return Err(BodyError::Invalid(format!("semi-axes {semi_axes:?} must be positive")));
                }
                let s = if dim == 2 {
                    AnalyticShape::Ellipse { a: semi_axes.x, b: semi_axes.y }
                } else {
                    AnalyticShape::Ellipsoid { a: semi_axes.x, b: semi_axes.y, c: semi_axes.z }
                };
                analytic_inertia(s, density)
            }
            Shape::Swimmer(s) => swimmer_inertia(s, dim, density),
        };
        let mut position = position;
        if dim == 2 {
            position.z = 0.0;
        }
        Ok(Self {
            id,
            dim,
            shape,
            density,
            mass,
            inertia,
            position,
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            orientation: Vec3::zeros(),
        })
    }

    pub fn rotation(&self) -> Mat3 {
        rotation_matrix(&self.orientation, self.dim)
    }

    /// Displaced volume (area per unit depth in 2D).
    pub fn volume(&self) -> f64 {
        self.mass / self.density
    }

    /// Radius used by the drag model and the Reynolds number: the radius for
    /// spheres, the geometric mean of the semi-axes for ellipses and
    /// ellipsoids, the sphere radius for swimmers.
    pub fn effective_radius(&self) -> f64 {
        match &self.shape {
            Shape::Sphere { radius } => *radius,
            Shape::Meshed { semi_axes, .. } => {
                let n = self.dim as f64;
                semi_axes.iter().take(self.dim).product::<f64>().powf(1.0 / n)
            }
            Shape::Swimmer(s) => s.radius,
        }
    }

    /// World-frame centers and radii of the spherical components: one for a
    /// sphere, three for a swimmer, none for meshed shapes.
    pub fn spheres(&self) -> Vec<(Vec3, f64)> {
        match &self.shape {
            Shape::Sphere { radius } => vec![(self.position, *radius)],
            Shape::Swimmer(s) => {
                let r = self.rotation();
                s.local_centers().iter().map(|c| (self.position + r * c, s.radius)).collect()
            }
            Shape::Meshed { .. } => Vec::new(),
        }
    }

    /// Replaces the swimmer rod lengths keeping the center of mass fixed and
    /// recomputes the inertia.
    pub fn set_rod_lengths(&mut self, l_left: f64, l_right: f64) {
        if let Shape::Swimmer(s) = &mut self.shape {
            s.l_left = l_left;
            s.l_right = l_right;
            let (_, inertia) = swimmer_inertia(s, self.dim, self.density);
            self.inertia = inertia;
        }
    }

    /// World-frame inertia `R I Rᵀ`.
    pub fn world_inertia(&self) -> Mat3 {
        let r = self.rotation();
        r * self.inertia * r.transpose()
    }

    /// Angular momentum `R I Rᵀ ω` (3D) or `I ω` (2D, in `z`).
    pub fn angular_momentum(&self) -> Vec3 {
        if self.dim == 2 {
            Vec3::new(0.0, 0.0, self.inertia[(2, 2)] * self.angular_velocity.z)
        } else {
            self.world_inertia() * self.angular_velocity
        }
    }
}

fn swimmer_inertia(s: &Swimmer, dim: usize, density: f64) -> (f64, Mat3) {
    let one = if dim == 2 {
        analytic_inertia(AnalyticShape::Disk { r: s.radius }, density)
    } else {
        analytic_inertia(AnalyticShape::Sphere { r: s.radius }, density)
    };
    let mut inertia = Mat3::zeros();
    for c in s.local_centers() {
        inertia += one.1 + one.0 * (Mat3::identity() * c.norm_squared() - c * c.transpose());
    }
    (3.0 * one.0, inertia)
}

/// Ellipse (2D) or ellipsoid surface samples in the body frame at spacing
/// about `h`.
pub fn ellipsoid_reference(semi_axes: &Vec3, dim: usize, h: f64) -> Vec<Vec3> {
    if dim == 2 {
        let (a, b) = (semi_axes.x, semi_axes.y);
        let perimeter = PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt());
        let n = ((perimeter / h).ceil() as usize).max(8);
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                Vec3::new(a * t.cos(), b * t.sin(), 0.0)
            })
            .collect()
    } else {
        let r = semi_axes.max();
        fibonacci_sphere(((4.0 * PI * r * r / (h * h)).ceil() as usize).max(12))
            .into_iter()
            .map(|u| u.component_mul(semi_axes))
            .collect()
    }
}

fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

fn sphere_samples(center: Vec3, radius: f64, dim: usize, spacing: f64) -> Vec<Vec3> {
    if dim == 2 {
        let n = ((TAU * radius / spacing - 1e-9).ceil() as usize).max(4);
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                center + Vec3::new(radius * t.cos(), radius * t.sin(), 0.0)
            })
            .collect()
    } else {
        let n = ((4.0 * PI * radius * radius / (spacing * spacing)).ceil() as usize).max(6);
        fibonacci_sphere(n).into_iter().map(|u| center + radius * u).collect()
    }
}

/// Current surface samples tagged with their component index (always 0
/// except for swimmer spheres 0, 1, 2). Spheres are sampled at spacing
/// `spacing`; meshed shapes use their reference samples.
pub fn boundary_points(body: &RigidBody, spacing: f64) -> Vec<(usize, Vec3)> {
    match &body.shape {
        Shape::Sphere { radius } => {
            sphere_samples(body.position, *radius, body.dim, spacing).into_iter().map(|p| (0, p)).collect()
        }
        Shape::Meshed { reference, .. } => {
            let r = body.rotation();
            reference.iter().map(|q| (0, body.position + r * q)).collect()
        }
        Shape::Swimmer(_) => body
            .spheres()
            .into_iter()
            .enumerate()
            .flat_map(|(k, (c, r))| sphere_samples(c, r, body.dim, spacing).into_iter().map(move |p| (k, p)))
            .collect(),
    }
}

/// Velocity half of the Newton–Euler update: `U += Δt F/m` and the angular
/// update (scalar in 2D; `(R I Rᵀ)⁻¹[(R I Rᵀ) ω + Δt T]` with `R` frozen at
/// the step start in 3D).
pub fn update_velocities(body: &mut RigidBody, total: &ForceTorque, dt: f64) -> Result<()> {
    body.velocity += dt * total.force / body.mass;
    if body.dim == 2 {
        body.velocity.z = 0.0;
        let i = body.inertia[(2, 2)];
        if !(i > 0.0) {
            return Err(BodyError::SingularInertia(body.id));
        }
        body.angular_velocity = Vec3::new(0.0, 0.0, body.angular_velocity.z + dt * total.torque.z / i);
    } else {
        let a = body.world_inertia();
        let rhs = a * body.angular_velocity + dt * total.torque;
        body.angular_velocity = a.cholesky().ok_or(BodyError::SingularInertia(body.id))?.solve(&rhs);
    }
    Ok(())
}

/// Position half of the update: `X += Δt U`, `θ += Δt ω`, then wrap.
pub fn advance_pose(body: &mut RigidBody, dt: f64) {
    body.position += dt * body.velocity;
    let (theta, wrapped) = wrap_angles(&(body.orientation + dt * body.angular_velocity), body.dim);
    if wrapped {
        log::warn!("body {} orientation wrapped into the admissible range: {:?}", body.id, theta.as_slice());
    }
    body.orientation = theta;
}

/// Semi-implicit Euler step: velocities first, then the pose.
pub fn newton_euler_step(body: &RigidBody, total: &ForceTorque, dt: f64) -> Result<RigidBody> {
    if !(dt > 0.0) {
        return Err(BodyError::Invalid(format!("time step {dt} must be positive")));
    }
    let mut next = body.clone();
    update_velocities(&mut next, total, dt)?;
    advance_pose(&mut next, dt);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(r: f64) -> RigidBody {
        RigidBody::new(0, 2, Shape::Sphere { radius: r }, 1.25, Vec3::zeros()).unwrap()
    }

    #[test]
    fn identity_rotation() {
        assert_eq!(rotation_matrix(&Vec3::zeros(), 2), Mat3::identity());
        assert_eq!(rotation_matrix(&Vec3::zeros(), 3), Mat3::identity());
    }

    #[test]
    fn quarter_turn_2d() {
        let r = rotation_matrix(&Vec3::new(0.0, 0.0, FRAC_PI_2), 2);
        let want = Mat3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((r - want).abs().max() < 1e-15);
    }

    #[test]
    fn quarter_turn_x_3d() {
        let r = rotation_matrix(&Vec3::new(FRAC_PI_2, 0.0, 0.0), 3);
        let want = Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert!((r - want).abs().max() < 1e-15);
    }

    #[test]
    fn wrap_ranges() {
        let (t, moved) = wrap_angles(&Vec3::new(0.0, 0.0, 3.5), 2);
        assert!(moved);
        assert!((t.z - (3.5 - TAU)).abs() < 1e-15);
        let (t, moved) = wrap_angles(&Vec3::new(1.0, 0.5, 0.2), 3);
        assert!(!moved);
        assert_eq!(t, Vec3::new(1.0, 0.5, 0.2));
        let (t, _) = wrap_angles(&Vec3::new(0.0, -0.1, 1.7), 3);
        assert!((t.y - (PI - 0.1)).abs() < 1e-15);
        assert!((t.z - (1.7 - FRAC_PI_2)).abs() < 1e-15);
        let (t, moved) = wrap_angles(&Vec3::new(0.0, 0.0, PI), 2);
        assert!(!moved);
        assert_eq!(t.z, PI);
    }

    #[test]
    fn disk_mass_matches_paper_parameters() {
        let (m, i) = analytic_inertia(AnalyticShape::Disk { r: 0.125 }, 1.25);
        assert!((m - 0.061359).abs() < 1e-6);
        assert!((i[(2, 2)] - m * 0.125 * 0.125 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn unit_sphere_mass() {
        let (m, i) = analytic_inertia(AnalyticShape::Sphere { r: 1.0 }, 1.0);
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((i - Mat3::identity() * 0.4 * m).abs().max() < 1e-14);
    }

    #[test]
    fn ellipse_inertia() {
        let (m, i) = analytic_inertia(AnalyticShape::Ellipse { a: 0.1, b: 0.05 }, 1.35);
        assert!((m - 1.35 * PI * 0.1 * 0.05).abs() < 1e-15);
        assert!((i[(2, 2)] - m * (0.01 + 0.0025) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn free_fall_and_torque() {
        let mut b = disk(0.125);
        let g = Vec3::new(0.0, -981.0, 0.0);
        for _ in 0..100 {
            b = newton_euler_step(&b, &ForceTorque::new(b.mass * g, Vec3::zeros()), 1e-3).unwrap();
        }
        assert!((b.velocity.y + 981.0 * 0.1).abs() < 1e-10);

        let b = disk(0.125);
        let t = ForceTorque::new(Vec3::zeros(), Vec3::new(0.0, 0.0, 0.3));
        let next = newton_euler_step(&b, &t, 0.01).unwrap();
        assert!((next.angular_velocity.z - 0.01 * 0.3 / b.inertia[(2, 2)]).abs() < 1e-15);
    }

    #[test]
    fn zero_force_moves_uniformly() {
        let mut b = disk(0.5);
        b.velocity = Vec3::new(1.0, -2.0, 0.0);
        b.angular_velocity = Vec3::new(0.0, 0.0, 0.7);
        let next = newton_euler_step(&b, &ForceTorque::default(), 0.1).unwrap();
        assert_eq!(next.velocity, b.velocity);
        assert_eq!(next.angular_velocity, b.angular_velocity);
        assert_eq!(next.position, b.position + 0.1 * b.velocity);
        assert!(newton_euler_step(&b, &ForceTorque::default(), 0.0).is_err());
    }

    #[test]
    fn stroke_cycle_closes() {
        let s = Swimmer::new(1.0, 10.0, 4.0, 1.0).unwrap();
        let mut cur = s.clone();
        for p in StrokePhase::CYCLE {
            cur = swimmer_stroke(&cur, p, 4.0).unwrap().0;
        }
        assert_eq!((cur.l_left, cur.l_right), (10.0, 10.0));
        let (one, _) = swimmer_stroke(&s, StrokePhase::RetractLeft, 3.0).unwrap();
        assert_eq!((one.l_left, one.l_right), (7.0, 10.0));
        assert!(swimmer_stroke(&s, StrokePhase::RetractLeft, 10.0).is_err());
    }

    #[test]
    fn schedule_matches_discrete_phases() {
        let s = Swimmer::new(1.0, 10.0, 4.0, 8.0).unwrap();
        assert_eq!(s.schedule(0.0).0, (10.0, 10.0));
        assert_eq!(s.schedule(2.0).0, (6.0, 10.0));
        assert_eq!(s.schedule(4.0).0, (6.0, 6.0));
        assert_eq!(s.schedule(6.0).0, (10.0, 6.0));
        assert_eq!(s.schedule(8.0).0, (10.0, 10.0));
    }

    #[test]
    fn swimmer_geometry() {
        let s = Swimmer::new(1.0, 10.0, 4.0, 8.0).unwrap();
        let b = RigidBody::new(3, 2, Shape::Swimmer(s), 0.1, Vec3::new(15.0, 10.0, 0.0)).unwrap();
        let c = b.spheres();
        assert_eq!(c.len(), 3);
        assert!(((c[1].0 - c[0].0).norm() - 10.0).abs() < 1e-12);
        assert!(((c[2].0 - c[1].0).norm() - 10.0).abs() < 1e-12);
        let pts = boundary_points(&b, 0.3);
        let groups: std::collections::BTreeSet<_> = pts.iter().map(|p| p.0).collect();
        assert_eq!(groups.len(), 3);
    }

    #[test]
    fn swimming_speed_vanishes_for_rigid_rods() {
        let s = Swimmer::new(1.0, 10.0, 4.0, 8.0).unwrap();
        assert_eq!(s.swimming_speed((0.0, 0.0), 1.0, 6.0 * PI), 0.0);
        assert!(s.swimming_speed((-1.0, 0.0), 1.0, 6.0 * PI).abs() > 0.0);
    }

    #[test]
    fn disk_samples_on_circle() {
        let b = disk(1.0);
        let pts = boundary_points(&b, 2.0);
        assert_eq!(pts.len(), 4);
        for (_, p) in pts {
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn meshed_points_follow_rotation() {
        let axes = Vec3::new(0.1, 0.05, 0.0);
        let reference = ellipsoid_reference(&axes, 2, 0.01);
        let shape = Shape::Meshed { marker: "e".into(), semi_axes: axes, reference: reference.clone() };
        let mut b = RigidBody::new(0, 2, shape, 1.35, Vec3::new(0.5, 1.0, 0.0)).unwrap();
        b.orientation.z = PI / 3.0;
        let r = rotation_matrix(&b.orientation, 2);
        for ((_, p), q) in boundary_points(&b, 0.01).iter().zip(&reference) {
            assert!((p - (r * q + b.position)).norm() < 1e-15);
        }
    }
}
