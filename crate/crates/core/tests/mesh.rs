use nbcollide_core::mesh::msh::{load_mesh, save_mesh, write_msh};
use nbcollide_core::mesh::{generate_annulus, generate_perforated_box, HoleShape, PerforatedBox};
use nbcollide_core::Vec3;

#[test]
fn perforated_box_survives_msh_round_trip() {
    let spec = PerforatedBox::new(2, Vec3::zeros(), Vec3::new(1.0, 0.5, 0.0), 0.05)
        .with_hole("body0", HoleShape::disk(Vec3::new(0.3, 0.25, 0.0), 0.1))
        .with_hole("body1", HoleShape::disk(Vec3::new(0.7, 0.25, 0.0), 0.08));
    let mesh = generate_perforated_box(&spec).unwrap();
    mesh.check_watertight().unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("box.msh");
    save_mesh(&mesh, &path).unwrap();
    let back = load_mesh(&path).unwrap();
    assert_eq!(back.vertex_count(), mesh.vertex_count());
    assert_eq!(back.element_count(), mesh.element_count());
    for marker in ["fluid", "body0", "body1"] {
        assert_eq!(back.boundary_vertices(marker).unwrap(), mesh.boundary_vertices(marker).unwrap());
    }
    // the writer is deterministic
    assert_eq!(write_msh(&back), write_msh(&mesh));
}

#[test]
fn carved_sphere_is_watertight() {
    let spec = PerforatedBox::new(3, Vec3::zeros(), Vec3::repeat(1.0), 0.1)
        .with_hole("body0", HoleShape::disk(Vec3::repeat(0.5), 0.25));
    let mesh = generate_perforated_box(&spec).unwrap();
    mesh.check_watertight().unwrap();
    for v in mesh.boundary_vertices("body0").unwrap() {
        let r = (mesh.vertex(v) - Vec3::repeat(0.5)).norm();
        assert!(r >= 0.25 - 1e-12 && r <= 0.25 + 0.1 * 3f64.sqrt());
    }
    let volume: f64 = (0..mesh.element_count()).map(|i| mesh.simplex_volume(i)).sum();
    let ball = 4.0 / 3.0 * std::f64::consts::PI * 0.25f64.powi(3);
    assert!((volume - (1.0 - ball)).abs() < 0.02, "{volume}");
}

#[test]
fn annulus_area_approaches_exact() {
    let mesh = generate_annulus(0.1, 2.0, 0.02).unwrap();
    let area: f64 = (0..mesh.element_count()).map(|i| mesh.simplex_volume(i)).sum();
    let exact = std::f64::consts::PI * (4.0 - 0.01);
    assert!((area - exact).abs() / exact < 1e-3);
}
