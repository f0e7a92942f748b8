//! Procedural test solids, random similarity transforms and a labelled
//! synthetic corpus. All generators produce closed (watertight) meshes.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Matrix3, UnitQuaternion, Quaternion};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::mesh::{TriangleMesh, Vec3};

fn build(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, id: &str) -> TriangleMesh {
    TriangleMesh::new(vertices, triangles, id).expect("generator produced a valid mesh")
}

/// Unit-radius icosphere with `subdivisions` rounds of midpoint refinement.
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    build(vertices, faces, "icosphere")
}

/// Icosphere scaled to the given semi-axes.
pub fn ellipsoid(semi_axes: Vec3, subdivisions: u32) -> TriangleMesh {
    icosphere(subdivisions)
        .map_vertices(|v| v.component_mul(&semi_axes))
        .with_source_id("ellipsoid")
}

/// Axis-aligned box centred at the origin, each face split into a
/// `divisions x divisions` grid of quads.
pub fn box_mesh(size: Vec3, divisions: usize) -> TriangleMesh {
    let n = divisions.max(1);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let half = size * 0.5;
    // Lattice coordinates in [0, n] per axis; only surface points are emitted.
    let mut vertex = |p: [i64; 3], vertices: &mut Vec<Vec3>| {
        *index.entry(p).or_insert_with(|| {
            let v = Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64) / n as f64;
            vertices.push((v * 2.0 - Vec3::repeat(1.0)).component_mul(&half));
            vertices.len() - 1
        })
    };
    let n_i = n as i64;
    for axis in 0..3 {
        let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n_i] {
            for i in 0..n_i {
                for j in 0..n_i {
                    let corner = |di: i64, dj: i64| {
                        let mut p = [0i64; 3];
                        p[axis] = side;
                        p[u] = i + di;
                        p[w] = j + dj;
                        p
                    };
                    let q = [
                        vertex(corner(0, 0), &mut vertices),
                        vertex(corner(1, 0), &mut vertices),
                        vertex(corner(1, 1), &mut vertices),
                        vertex(corner(0, 1), &mut vertices),
                    ];
                    if side == 0 {
                        triangles.push([q[0], q[2], q[1]]);
                        triangles.push([q[0], q[3], q[2]]);
                    } else {
                        triangles.push([q[0], q[1], q[2]]);
                        triangles.push([q[0], q[2], q[3]]);
                    }
                }
            }
        }
    }
    build(vertices, triangles, "box")
}

/// Extrudes a simple polygon in the (y, z) plane along X over `[-length/2, length/2]`.
/// `cap` triangulates the profile; the side walls get `rings` segments.
pub fn prism(profile: &[(f64, f64)], cap: &[[usize; 3]], length: f64, rings: usize) -> TriangleMesh {
    let m = profile.len();
    let rings = rings.max(1);
    let mut vertices = Vec::with_capacity(m * (rings + 1));
    for r in 0..=rings {
        let x = -length / 2.0 + length * r as f64 / rings as f64;
        vertices.extend(profile.iter().map(|&(y, z)| Vec3::new(x, y, z)));
    }
    let mut triangles = Vec::new();
    for r in 0..rings {
        for i in 0..m {
            let j = (i + 1) % m;
            let (a, b) = (r * m + i, r * m + j);
            let (c, d) = (a + m, b + m);
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    let top = rings * m;
    for &[a, b, c] in cap {
        triangles.push([a, c, b]);
        triangles.push([top + a, top + b, top + c]);
    }
    build(vertices, triangles, "prism")
}

fn regular_polygon(sides: usize, radius: f64) -> Vec<(f64, f64)> {
    (0..sides)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / sides as f64;
            (radius * a.cos(), radius * a.sin())
        })
        .collect()
}

fn fan(n: usize) -> Vec<[usize; 3]> {
    (1..n - 1).map(|i| [0, i, i + 1]).collect()
}

/// Closed circular cylinder along X.
pub fn cylinder(radius: f64, length: f64, sides: usize, rings: usize) -> TriangleMesh {
    prism(&regular_polygon(sides, radius), &fan(sides), length, rings).with_source_id("cylinder")
}

/// Prism with an equilateral-triangle cross-section of circumradius `radius`.
pub fn triangular_prism(radius: f64, length: f64, rings: usize) -> TriangleMesh {
    prism(&regular_polygon(3, radius), &fan(3), length, rings).with_source_id("triangular_prism")
}

/// Prism with an L-shaped cross-section of outer side `side`.
pub fn l_prism(side: f64, length: f64, rings: usize) -> TriangleMesh {
    let s = side;
    let h = side / 2.0;
    let profile = [(0.0, 0.0), (s, 0.0), (s, h), (h, h), (h, s), (0.0, s)];
    // Fan from the reflex corner (index 3); the L is star-shaped about it.
    let cap = [[3, 4, 5], [3, 5, 0], [3, 0, 1], [3, 1, 2]];
    let centre = Vec3::new(0.0, s * 5.0 / 12.0, s * 5.0 / 12.0);
    prism(&profile, &cap, length, rings)
        .map_vertices(|v| v - centre)
        .with_source_id("l_prism")
}

/// Hollow tube along X with annular cross-section.
pub fn tube(outer: f64, inner: f64, length: f64, sides: usize, rings: usize) -> TriangleMesh {
    let rings = rings.max(1);
    let mut vertices = Vec::new();
    for r in 0..=rings {
        let x = -length / 2.0 + length * r as f64 / rings as f64;
        for radius in [outer, inner] {
            vertices.extend(
                regular_polygon(sides, radius)
                    .into_iter()
                    .map(|(y, z)| Vec3::new(x, y, z)),
            );
        }
    }
    let stride = 2 * sides;
    let outer_at = |r: usize, i: usize| r * stride + i % sides;
    let inner_at = |r: usize, i: usize| r * stride + sides + i % sides;
    let mut triangles = Vec::new();
    for r in 0..rings {
        for i in 0..sides {
            let (a, b, c, d) = (outer_at(r, i), outer_at(r, i + 1), outer_at(r + 1, i), outer_at(r + 1, i + 1));
            triangles.extend([[a, b, d], [a, d, c]]);
            let (a, b, c, d) = (inner_at(r, i), inner_at(r, i + 1), inner_at(r + 1, i), inner_at(r + 1, i + 1));
            triangles.extend([[a, d, b], [a, c, d]]);
        }
    }
    for (r, flip) in [(0, true), (rings, false)] {
        for i in 0..sides {
            let (o0, o1, i0, i1) = (outer_at(r, i), outer_at(r, i + 1), inner_at(r, i), inner_at(r, i + 1));
            if flip {
                triangles.extend([[o0, i0, o1], [o1, i0, i1]]);
            } else {
                triangles.extend([[o0, o1, i0], [o1, i1, i0]]);
            }
        }
    }
    build(vertices, triangles, "tube")
}

/// Two disjoint unit spheres centred at `(+-offset, 0, 0)`.
pub fn two_spheres(offset: f64, subdivisions: u32) -> TriangleMesh {
    let sphere = icosphere(subdivisions);
    let n = sphere.vertices().len();
    let mut vertices = Vec::with_capacity(2 * n);
    let mut triangles = Vec::with_capacity(2 * sphere.triangle_count());
    for (k, dx) in [-offset, offset].into_iter().enumerate() {
        vertices.extend(sphere.vertices().iter().map(|v| v + Vec3::new(dx, 0.0, 0.0)));
        triangles.extend(
            sphere
                .triangles()
                .iter()
                .map(|t| [t[0] + k * n, t[1] + k * n, t[2] + k * n]),
        );
    }
    build(vertices, triangles, "two_spheres")
}

/// Uniformly distributed proper rotation.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let mut q = [0.0f64; 4];
    for c in &mut q {
        *c = StandardNormal.sample(rng);
    }
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
        .to_rotation_matrix()
        .into_inner()
}

#[derive(Debug, Clone, Copy)]
pub struct Similarity {
    pub rotation: Matrix3<f64>,
    pub scale: f64,
    pub translation: Vec3,
}

impl Similarity {
    pub fn apply(&self, mesh: &TriangleMesh) -> TriangleMesh {
        mesh.transformed(&self.rotation, self.scale, &self.translation)
    }
}

/// Random rotation, scale in `[0.2, 5]` (log-uniform) and translation in `[-10, 10]^3`.
pub fn random_similarity<R: Rng + ?Sized>(rng: &mut R) -> Similarity {
    let rotation = random_rotation(rng);
    let scale = 10f64.powf(rng.random_range(-0.7..0.7));
    let translation = Vec3::new(
        rng.random_range(-10.0..10.0),
        rng.random_range(-10.0..10.0),
        rng.random_range(-10.0..10.0),
    );
    Similarity {
        rotation,
        scale,
        translation,
    }
}

/// Displaces every vertex by isotropic Gaussian noise with standard deviation
/// `fraction` times the bounding-box half-diagonal.
pub fn jitter<R: Rng + ?Sized>(mesh: &TriangleMesh, fraction: f64, rng: &mut R) -> TriangleMesh {
    let sigma = fraction * mesh.bounding_box().extent().norm() / 2.0;
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let offsets: Vec<Vec3> = (0..mesh.vertices().len())
        .map(|_| Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng)))
        .collect();
    let vertices = mesh.vertices().iter().zip(&offsets).map(|(v, d)| v + d).collect();
    build(vertices, mesh.triangles().to_vec(), mesh.source_id())
}

/// Closed spindle along X over `[-half_length, half_length]`: the cross-section
/// at `x` is `profile` scaled by `radius * sqrt(1 - (x / half_length)^2)`, so
/// the ends taper smoothly to two poles. `profile(theta)` is a polar radius.
pub fn spindle(
    half_length: f64,
    radius: f64,
    profile: impl Fn(f64) -> f64,
    rings: usize,
    sectors: usize,
) -> TriangleMesh {
    let rings = rings.max(2);
    let mut vertices = vec![Vec3::new(-half_length, 0.0, 0.0)];
    for i in 1..rings {
        let t = PI * i as f64 / rings as f64;
        let (x, rho) = (-half_length * t.cos(), radius * t.sin());
        for j in 0..sectors {
            let theta = 2.0 * PI * j as f64 / sectors as f64;
            let r = rho * profile(theta);
            vertices.push(Vec3::new(x, r * theta.cos(), r * theta.sin()));
        }
    }
    vertices.push(Vec3::new(half_length, 0.0, 0.0));
    let last = vertices.len() - 1;
    let at = |ring: usize, j: usize| 1 + (ring - 1) * sectors + j % sectors;
    let mut triangles = Vec::new();
    for j in 0..sectors {
        triangles.push([0, at(1, j + 1), at(1, j)]);
        triangles.push([last, at(rings - 1, j), at(rings - 1, j + 1)]);
    }
    for ring in 1..rings - 1 {
        for j in 0..sectors {
            let (a, b, c, d) = (at(ring, j), at(ring, j + 1), at(ring + 1, j), at(ring + 1, j + 1));
            triangles.extend([[a, b, d], [a, d, c]]);
        }
    }
    build(vertices, triangles, "spindle")
}

/// Torus around the Z axis with centre-line radius `major` and tube radius `minor`.
pub fn torus(major: f64, minor: f64, segments: usize, sides: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(segments * sides);
    for i in 0..segments {
        let u = 2.0 * PI * i as f64 / segments as f64;
        for j in 0..sides {
            let v = 2.0 * PI * j as f64 / sides as f64;
            let r = major + minor * v.cos();
            vertices.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let at = |i: usize, j: usize| (i % segments) * sides + j % sides;
    let mut triangles = Vec::new();
    for i in 0..segments {
        for j in 0..sides {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
            triangles.extend([[a, b, d], [a, d, c]]);
        }
    }
    build(vertices, triangles, "torus")
}

/// The five base solids of the synthetic retrieval corpus, as `(class, mesh)`.
/// All are smooth closed surfaces with distinct cross-section families
/// perpendicular to their principal axis.
pub fn corpus_base_shapes() -> Vec<(&'static str, TriangleMesh)> {
    vec![
        ("ellipsoid", ellipsoid(Vec3::new(3.0, 2.0, 1.0), 3)),
        ("cigar", spindle(2.0, 0.6, |_| 1.0, 48, 48)),
        ("trefoil", spindle(2.0, 0.7, |t| 1.0 + 0.25 * (3.0 * t).cos(), 48, 60)),
        ("teardrop", spindle(2.0, 0.6, |t| 1.0 + 0.8 * t.cos(), 48, 72)),
        ("torus", torus(1.0, 0.35, 64, 24)),
    ]
}

#[derive(Debug, Clone)]
pub struct CorpusModel {
    pub id: String,
    pub class: String,
    pub mesh: TriangleMesh,
}

/// `per_class` jittered, randomly transformed instances of every base shape.
pub fn synthetic_corpus(per_class: usize, jitter_fraction: f64, seed: u64) -> Vec<CorpusModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models = Vec::new();
    for (class, base) in corpus_base_shapes() {
        for i in 0..per_class {
            let noisy = jitter(&base, jitter_fraction, &mut rng);
            let g = random_similarity(&mut rng);
            let id = format!("{class}_{i:02}");
            models.push(CorpusModel {
                mesh: g.apply(&noisy).with_source_id(id.clone()),
                id,
                class: class.to_string(),
            });
        }
    }
    models
}
