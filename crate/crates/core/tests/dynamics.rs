use nbcollide_core::bodies::{RigidBody, Shape};
use nbcollide_core::collision::{BoxDomain, Domain, Mode};
use nbcollide_core::dynamics::{trajectory_rows, CollisionParams, FluidProperties, ScenarioState};
use nbcollide_core::Vec3;

fn channel(lo: Vec3, hi: Vec3) -> Domain {
    Domain::Box(BoxDomain::new(2, lo, hi))
}

#[test]
fn inviscid_free_fall_is_exact() {
    let body = RigidBody::new(0, 2, Shape::Sphere { radius: 0.1 }, 2.0, Vec3::new(1.0, 5.0, 0.0)).unwrap();
    let fluid = FluidProperties::new(1.0, 0.0, Vec3::new(0.0, -981.0, 0.0));
    let params = CollisionParams::with_defaults(Mode::Spherical, 0.01);
    let dt = 1e-3;
    let mut s = ScenarioState::new(2, vec![body], channel(Vec3::zeros(), Vec3::new(2.0, 6.0, 0.0)), fluid, params, dt).unwrap();
    // buoyancy halves gravity at density ratio 2
    let g = -490.5;
    let mut y = 5.0;
    for n in 1..=50 {
        s.step().unwrap();
        let v = n as f64 * dt * g;
        y += dt * v;
        assert!((s.bodies[0].velocity.y - v).abs() <= 1e-12 * v.abs());
        assert!((s.bodies[0].position.y - y).abs() <= 1e-12);
        assert_eq!(s.bodies[0].velocity.x, 0.0);
    }
}

#[test]
fn disk_settles_on_the_floor() {
    let r = 0.125;
    let body = RigidBody::new(0, 2, Shape::Sphere { radius: r }, 1.25, Vec3::new(1.0, 4.0, 0.0)).unwrap();
    let fluid = FluidProperties::new(1.0, 0.1, Vec3::new(0.0, -981.0, 0.0));
    let mut params = CollisionParams::with_defaults(Mode::Spherical, 0.01);
    params.rho = 0.015;
    params.epsilon_wall = 5e-6;
    let mut s = ScenarioState::new(2, vec![body], channel(Vec3::zeros(), Vec3::new(2.0, 6.0, 0.0)), fluid, params, 1e-3).unwrap();
    let mut peak: f64 = 0.0;
    for _ in 0..1500 {
        let record = s.step().unwrap();
        let b = &s.bodies[0];
        assert!(b.position.y - r > 0.0, "disk reached the floor at step {}", s.step);
        assert!(record.map.overlap_events == 0);
        peak = peak.max(b.velocity.y.abs());
    }
    let b = &s.bodies[0];
    assert!(b.position.y - r < 0.015, "gap {}", b.position.y - r);
    assert!(b.velocity.y.abs() < 1e-3 * peak);
    assert_eq!(s.overlap_events, 0);
}

fn two_bodies_general() -> ScenarioState {
    let a = RigidBody::new(0, 2, Shape::Sphere { radius: 0.1 }, 1.05, Vec3::new(0.5, 0.8, 0.0)).unwrap();
    let b = RigidBody::new(1, 2, Shape::Sphere { radius: 0.1 }, 1.05, Vec3::new(0.52, 0.55, 0.0)).unwrap();
    let fluid = FluidProperties::new(1.0, 0.05, Vec3::new(0.0, -981.0, 0.0));
    let mut params = CollisionParams::with_defaults(Mode::General, 0.01);
    params.rho = 0.04;
    // peak repulsion 4ρ³/(27ε) ≈ 95 dyn against a buoyant weight of 1.5 dyn
    params.epsilon = 1e-7;
    params.epsilon_wall = 1e-7;
    ScenarioState::new(2, vec![a, b], channel(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0)), fluid, params, 1e-3).unwrap()
}

fn rows_with_workers(workers: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
    pool.install(|| {
        let mut s = two_bodies_general();
        let mut out = String::new();
        for _ in 0..40 {
            let record = s.step().unwrap();
            out.push_str(&trajectory_rows(&s, &record));
        }
        out
    })
}

#[test]
fn general_mode_is_worker_independent() {
    let one = rows_with_workers(1);
    assert_eq!(one, rows_with_workers(3));
}

#[test]
fn bodies_stay_apart_when_pushed_together() {
    let mut s = two_bodies_general();
    let mut met = false;
    for _ in 0..400 {
        let record = s.step().unwrap();
        met |= record.map.body_pair_count() > 0;
    }
    assert!(met);
    assert_eq!(s.overlap_events, 0);
    let gap = (s.bodies[0].position - s.bodies[1].position).norm() - 0.2;
    assert!(gap > 0.0);
}
