//! Triangle meshes and the OFF file format.
//!
//! Polygon faces with more than three corners are fan-triangulated from their
//! first vertex at parse time. Degenerate (zero-area) triangles are kept; the
//! area-weighted consumers simply get zero weight from them.

use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("malformed OFF header: {0}")]
    MalformedHeader(String),
    #[error("declared counts disagree with body: {0}")]
    CountMismatch(String),
    #[error("face {face} references vertex {index}, but only {vertex_count} vertices exist")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("mesh has no non-degenerate triangle")]
    NoTriangles,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoundingBox {
    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }
}

/// Indexed triangle soup.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    source_id: String,
}

impl TriangleMesh {
    /// Builds a mesh, checking index bounds and dropping triangles that repeat
    /// a vertex index.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        source_id: impl Into<String>,
    ) -> Result<Self, MeshError> {
        let n = vertices.len();
        let mut kept = Vec::with_capacity(triangles.len());
        for (face, tri) in triangles.into_iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= n) {
                return Err(MeshError::IndexOutOfRange {
                    face,
                    index,
                    vertex_count: n,
                });
            }
            if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
                kept.push(tri);
            }
        }
        if kept.is_empty() {
            return Err(MeshError::NoTriangles);
        }
        Ok(Self {
            vertices,
            triangles: kept,
            source_id: source_id.into(),
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Half the norm of the edge cross product.
    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.corners(i);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn triangle_centroid(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.corners(i);
        (a + b + c) / 3.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let mut min = Vec3::repeat(f64::INFINITY);
        let mut max = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        BoundingBox { min, max }
    }

    /// Applies `v -> scale * rotation * v + translation` to every vertex.
    pub fn transformed(&self, rotation: &Matrix3<f64>, scale: f64, translation: &Vec3) -> Self {
        self.map_vertices(|v| scale * (rotation * v) + translation)
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            source_id: self.source_id.clone(),
        }
    }
}

/// Strips an optional BOM and `#` comments, yielding numbered non-empty lines.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let line = line.trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_num<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T, MeshError> {
    token.parse().map_err(|_| MeshError::MalformedLine {
        line,
        message: format!("invalid {what} '{token}'"),
    })
}

/// Parses an OFF document into a triangle mesh.
pub fn parse_off(text: &str, source_id: &str) -> Result<TriangleMesh, MeshError> {
    let mut lines = content_lines(text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| MeshError::MalformedHeader("empty input".into()))?;
    let mut tokens = header.split_whitespace();
    let first = tokens.next().unwrap_or_default();
    if first != "OFF" {
        return Err(MeshError::MalformedHeader(format!(
            "expected 'OFF', found '{first}'"
        )));
    }
    // Counts may follow the keyword on the same line.
    let mut rest: Vec<&str> = tokens.collect();
    let mut count_line = 1;
    if rest.is_empty() {
        let (n, line) = lines
            .next()
            .ok_or_else(|| MeshError::MalformedHeader("missing vertex/face counts".into()))?;
        rest = line.split_whitespace().collect();
        count_line = n;
    }
    if rest.len() < 2 {
        return Err(MeshError::MalformedHeader(
            "counts line needs at least vertex and face counts".into(),
        ));
    }
    let n_vertices: usize = parse_num(rest[0], count_line, "vertex count")?;
    let n_faces: usize = parse_num(rest[1], count_line, "face count")?;

    let mut vertices = Vec::with_capacity(n_vertices);
    for k in 0..n_vertices {
        let (line, content) = lines.next().ok_or_else(|| {
            MeshError::CountMismatch(format!("declared {n_vertices} vertices, found {k}"))
        })?;
        let coords: Vec<&str> = content.split_whitespace().take(3).collect();
        if coords.len() < 3 {
            return Err(MeshError::MalformedLine {
                line,
                message: "vertex needs three coordinates".into(),
            });
        }
        vertices.push(Vec3::new(
            parse_num(coords[0], line, "coordinate")?,
            parse_num(coords[1], line, "coordinate")?,
            parse_num(coords[2], line, "coordinate")?,
        ));
    }

    let mut triangles = Vec::with_capacity(n_faces);
    for face in 0..n_faces {
        let (line, content) = lines.next().ok_or_else(|| {
            MeshError::CountMismatch(format!("declared {n_faces} faces, found {face}"))
        })?;
        let mut tokens = content.split_whitespace();
        let arity: usize = parse_num(tokens.next().unwrap_or_default(), line, "face arity")?;
        if arity < 3 {
            return Err(MeshError::MalformedLine {
                line,
                message: format!("face with {arity} corners"),
            });
        }
        let mut corners = Vec::with_capacity(arity);
        for _ in 0..arity {
            let token = tokens.next().ok_or_else(|| MeshError::MalformedLine {
                line,
                message: format!("face declares {arity} corners but lists fewer"),
            })?;
            let index: usize = parse_num(token, line, "vertex index")?;
            if index >= n_vertices {
                return Err(MeshError::IndexOutOfRange {
                    face,
                    index,
                    vertex_count: n_vertices,
                });
            }
            corners.push(index);
        }
        // Trailing tokens are colour data and are ignored.
        for w in corners[1..].windows(2) {
            triangles.push([corners[0], w[0], w[1]]);
        }
    }

    if let Some((line, _)) = lines.next() {
        return Err(MeshError::CountMismatch(format!(
            "unexpected data on line {line} after {n_vertices} vertices and {n_faces} faces"
        )));
    }
    TriangleMesh::new(vertices, triangles, source_id)
}

/// Nine significant digits, e.g. `1.23456789e-1`.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn off_string(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {} {}", sig9(v.x), sig9(v.y), sig9(v.z));
    }
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    out
}

pub fn write_off<W: Write>(mesh: &TriangleMesh, mut writer: W) -> io::Result<()> {
    writer.write_all(off_string(mesh).as_bytes())
}
