use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nbcollide_core::fmm::{band_statistics, fast_march, march, narrow_band_fast_march, MarchOptions};
use nbcollide_core::mesh::{generate_annulus, generate_box, generate_perforated_box, HoleShape, PerforatedBox, SimplicialMesh};
use nbcollide_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shortest paths along mesh edges with Euclidean edge lengths.
fn dijkstra(mesh: &SimplicialMesh, seeds: &[usize]) -> Vec<f64> {
    let n = mesh.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        dist[s] = 0.0;
        heap.push(Reverse((0u64, s)));
    }
    while let Some(Reverse((bits, v))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[v] {
            continue;
        }
        for &w in mesh.neighbors(v) {
            let nd = d + (mesh.vertex(w) - mesh.vertex(v)).norm();
            if nd < dist[w] {
                dist[w] = nd;
                // non-negative floats order like their bit patterns
                heap.push(Reverse((nd.to_bits(), w)));
            }
        }
    }
    dist
}

fn random_perforated(rng: &mut ChaCha8Rng) -> SimplicialMesh {
    loop {
        let w = rng.random_range(0.6..1.2);
        let hgt = rng.random_range(0.6..1.2);
        let h = rng.random_range(0.06..0.09);
        let mut spec = PerforatedBox::new(2, Vec3::zeros(), Vec3::new(w, hgt, 0.0), h);
        let holes = rng.random_range(1..=3);
        for k in 0..holes {
            let r = rng.random_range(0.08..0.15);
            let c = Vec3::new(rng.random_range(0.25..w - 0.25), rng.random_range(0.25..hgt - 0.25), 0.0);
            let shape = HoleShape::Ellipsoid {
                center: c,
                semi_axes: Vec3::new(r, r * rng.random_range(0.6..1.0), r),
                rotation: nbcollide_core::bodies::rotation_matrix(&Vec3::new(0.0, 0.0, rng.random_range(0.0..3.0)), 2),
            };
            spec = spec.with_hole(format!("hole{k}"), shape);
        }
        if let Ok(m) = generate_perforated_box(&spec) {
            if m.vertex_count() <= 500 {
                return m;
            }
        }
    }
}

#[test]
fn fmm_never_exceeds_edge_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let mesh = random_perforated(&mut rng);
        let seeds = mesh.boundary_vertices("hole0").unwrap();
        let (field, _) = march(&mesh, &seeds, "hole0", MarchOptions::default()).unwrap();
        let oracle = dijkstra(&mesh, &seeds);
        for v in 0..mesh.vertex_count() {
            assert!(field.value(v) <= oracle[v] + 1e-10, "vertex {v}: {} > {}", field.value(v), oracle[v]);
        }
        for &s in &seeds {
            assert_eq!(field.value(s), 0.0);
            assert_eq!(oracle[s], 0.0);
        }
    }
}

#[test]
fn fmm_never_exceeds_edge_paths_3d() {
    let mesh = generate_box(&[0.0, 0.0, 0.0], &[1.0, 0.75, 0.5], 0.125).unwrap();
    assert!(mesh.vertex_count() <= 500);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seeds: Vec<usize> = (0..3).map(|_| rng.random_range(0..mesh.vertex_count())).collect();
    let (field, _) = march(&mesh, &seeds, "points", MarchOptions::default()).unwrap();
    let oracle = dijkstra(&mesh, &seeds);
    for v in 0..mesh.vertex_count() {
        assert!(field.value(v) <= oracle[v] + 1e-10);
        // and never below the straight-line distance to the nearest seed
        let straight = seeds.iter().map(|&s| (mesh.vertex(s) - mesh.vertex(v)).norm()).fold(f64::INFINITY, f64::min);
        assert!(field.value(v) >= straight - 1e-10);
    }
}

fn annulus_max_error(h: f64) -> (f64, f64) {
    let mesh = generate_annulus(0.1, 2.0, h).unwrap();
    let field = fast_march(&mesh, "inner").unwrap();
    let mut max_err: f64 = 0.0;
    for v in 0..mesh.vertex_count() {
        let exact = mesh.vertex(v).norm() - 0.1;
        max_err = max_err.max((field.value(v) - exact).abs());
    }
    let outer = mesh.boundary_vertices("outer").unwrap();
    let worst_outer = outer.iter().map(|&v| (field.value(v) - 1.9).abs()).fold(0.0, f64::max);
    (max_err, worst_outer)
}

#[test]
fn annulus_distance_converges() {
    let (coarse, outer_coarse) = annulus_max_error(0.04);
    let (fine, outer_fine) = annulus_max_error(0.02);
    assert!(outer_coarse <= 2.0 * 0.04, "{outer_coarse}");
    assert!(outer_fine <= 2.0 * 0.02, "{outer_fine}");
    let ratio = coarse / fine;
    assert!((1.5..=3.0).contains(&ratio), "error ratio {ratio} ({coarse} / {fine})");
}

#[test]
fn band_values_match_full_march_inside() {
    let mesh = generate_annulus(0.1, 2.0, 0.04).unwrap();
    let full = fast_march(&mesh, "inner").unwrap();
    let mut previous = 0;
    for d_max in [1.9, 1.0, 0.5, 0.25] {
        let band = narrow_band_fast_march(&mesh, "inner", d_max, None).unwrap();
        for v in 0..mesh.vertex_count() {
            if band.in_band(v) {
                assert_eq!(band.value(v), full.value(v));
                assert!(band.value(v) <= d_max + 1e-12 || d_max >= 1.9);
            } else {
                assert_eq!(band.value(v), d_max);
            }
        }
        let stats = band_statistics(&band, &mesh);
        if previous > 0 {
            assert!(stats.band_elements < previous);
        }
        previous = stats.band_elements;
    }
}
