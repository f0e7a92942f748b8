use std::f64::consts::PI;

use cli3d_core::baselines::{normalize_surface_moments, surface_descriptor, surface_moments, InvariantConfig};
use cli3d_core::shapes::{ellipsoid, icosphere, random_rotation};
use cli3d_core::{TriangleMesh, Vec3};
use nalgebra::Matrix3;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lumpy() -> TriangleMesh {
    ellipsoid(Vec3::new(1.5, 1.0, 0.6), 3).map_vertices(|v| Vec3::new(v.x, v.y + 0.3 * v.x * v.x, v.z - 0.2 * v.y))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn central_moments_ignore_translation_and_mu_ignores_scale() {
    let mesh = lumpy();
    let moved = mesh.transformed(&Matrix3::identity(), 3.0, &Vec3::new(5.0, -2.0, 7.0));
    let a = normalize_surface_moments(&surface_moments(&mesh)).unwrap();
    let b = normalize_surface_moments(&surface_moments(&moved)).unwrap();
    for ((k, l, m, x), (.., y)) in a.entries().into_iter().zip(b.entries()) {
        assert!(close(x, y, 1e-9), "mu{k}{l}{m}: {x} vs {y}");
    }
}

#[test]
fn trace_is_rotation_invariant() {
    let mesh = lumpy();
    let config = InvariantConfig::parse("m200 + m020 + m002").unwrap();
    let base = surface_descriptor(&mesh, &config).unwrap()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let r = random_rotation(&mut rng);
        let v = surface_descriptor(&mesh.map_vertices(|p| r * p), &config).unwrap()[0];
        assert!(close(base, v, 1e-9), "{base} vs {v}");
    }
}

#[test]
fn sphere_area_within_mesh_defect() {
    for subdiv in [2, 3, 4] {
        let sphere = icosphere(subdiv);
        let m000 = surface_moments(&sphere).get(0, 0, 0);
        let defect = 4.0 * PI - sphere.surface_area();
        assert!((4.0 * PI - m000 - defect).abs() < 1e-10);
        assert!(defect / (4.0 * PI) < 0.02);
    }
}

#[test]
fn identical_meshes_have_identical_descriptors() {
    let config = InvariantConfig::default();
    let a = surface_descriptor(&lumpy(), &config).unwrap();
    let b = surface_descriptor(&lumpy(), &config).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|v| v.is_finite()));
}
