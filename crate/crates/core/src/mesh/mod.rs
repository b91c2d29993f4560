//! Indexed triangle meshes and the surface queries the remesher relies on.
//!
//! A [`TriangleMesh`] is immutable once built: construction validates every
//! face, computes per-face normals and the vertex-to-face adjacency, and
//! records the bounding-box diagonal that the rest of the crate uses as its
//! length scale for tolerances.

mod obj;
mod query;
mod sampling;

use std::path::PathBuf;

use glam::DVec3;
use thiserror::Error;

pub use obj::{load_mesh, parse_obj, save_mesh, write_obj};
pub use query::{closest_point_on_triangle, point_triangle_closest, triangle_area};
pub use sampling::{sample_points, sample_uniform, SiteSet};

/// Faces whose area falls below this multiple of `bbox_diag²` are degenerate.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} (line {line}) references vertex {index}, but only {count} vertices are defined")]
    IndexOutOfRange {
        face: usize,
        line: usize,
        index: i64,
        count: usize,
    },
    #[error("face {face} (line {line}) has {corners} corners; a face needs at least 3")]
    TooFewCorners {
        face: usize,
        line: usize,
        corners: usize,
    },
    #[error("face {face} repeats a vertex index")]
    RepeatedVertex { face: usize },
    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("mesh has no faces")]
    NoFaces,
    #[error("face index {0} is out of range")]
    FaceOutOfRange(usize),
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("at least 4 samples are required, got {0}")]
    TooFewSamples(usize),
}

pub type Result<T, E = MeshError> = std::result::Result<T, E>;

/// Neighborhood depth for [`TriangleMesh::face_ring`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingDepth {
    One,
    Two,
}

#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<DVec3>,
    faces: Vec<[usize; 3]>,
    face_normals: Vec<DVec3>,
    vertex_to_faces: Vec<Vec<usize>>,
    bbox_min: DVec3,
    bbox_max: DVec3,
    bbox_diag: f64,
    /// +1 when the stored normals point out of the enclosed volume, -1 otherwise.
    orientation: f64,
}

impl TriangleMesh {
    /// Validates the faces and builds normals and adjacency.
    pub fn new(vertices: Vec<DVec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(MeshError::NoFaces);
        }
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        line: 0,
                        index: v as i64,
                        count: vertices.len(),
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::RepeatedVertex { face: fi });
            }
        }

        let (bbox_min, bbox_max) = bounding_box(&vertices);
        let bbox_diag = (bbox_max - bbox_min).length();
        let face_normals = compute_face_normals(&vertices, &faces)?;

        let mut vertex_to_faces = vec![Vec::new(); vertices.len()];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_to_faces[v].push(fi);
            }
        }

        // Signed volume about the box center; positive for counter-clockwise
        // outward winding, in which case the right-hand-rule normals point in.
        let center = 0.5 * (bbox_min + bbox_max);
        let signed_volume: f64 = faces
            .iter()
            .map(|f| {
                let a = vertices[f[0]] - center;
                let b = vertices[f[1]] - center;
                let c = vertices[f[2]] - center;
                a.dot(b.cross(c))
            })
            .sum::<f64>()
            / 6.0;
        let orientation = if signed_volume >= 0.0 { -1.0 } else { 1.0 };

        Ok(Self {
            vertices,
            faces,
            face_normals,
            vertex_to_faces,
            bbox_min,
            bbox_max,
            bbox_diag,
            orientation,
        })
    }

    pub fn vertices(&self) -> &[DVec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Unit normal `(v3 - v1) x (v2 - v1)`, exactly as computed at load.
    pub fn face_normal(&self, face: usize) -> DVec3 {
        self.face_normals[face]
    }

    pub fn face_normals(&self) -> &[DVec3] {
        &self.face_normals
    }

    /// Face normal flipped, if needed, to point out of the enclosed volume.
    pub fn outward_normal(&self, face: usize) -> DVec3 {
        self.face_normals[face] * self.orientation
    }

    /// +1 if [`Self::face_normal`] already points outward, -1 if it points inward.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn vertex_faces(&self, vertex: usize) -> &[usize] {
        &self.vertex_to_faces[vertex]
    }

    pub fn bbox(&self) -> (DVec3, DVec3) {
        (self.bbox_min, self.bbox_max)
    }

    pub fn bbox_diag(&self) -> f64 {
        self.bbox_diag
    }

    pub fn triangle(&self, face: usize) -> [DVec3; 3] {
        let f = self.faces[face];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn face_centroid(&self, face: usize) -> DVec3 {
        let [a, b, c] = self.triangle(face);
        (a + b + c) / 3.0
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        triangle_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Longest edge over all faces.
    pub fn max_edge_length(&self) -> f64 {
        self.faces
            .iter()
            .flat_map(|f| {
                let [a, b, c] = [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]];
                [a.distance(b), b.distance(c), c.distance(a)]
            })
            .fold(0.0, f64::max)
    }

    /// Faces sharing at least one vertex with `face` (depth one), or with
    /// any depth-one face (depth two). `face` itself is never included.
    /// The result is sorted ascending.
    pub fn face_ring(&self, face: usize, depth: RingDepth) -> Result<Vec<usize>> {
        if face >= self.faces.len() {
            return Err(MeshError::FaceOutOfRange(face));
        }
        let mut ring = self.vertex_sharing(std::iter::once(face));
        if depth == RingDepth::Two {
            ring = self.vertex_sharing(ring.iter().copied().chain(std::iter::once(face)));
        }
        ring.retain(|&f| f != face);
        Ok(ring)
    }

    fn vertex_sharing(&self, seeds: impl Iterator<Item = usize>) -> Vec<usize> {
        let mut out = Vec::new();
        for f in seeds {
            for &v in &self.faces[f] {
                out.extend_from_slice(&self.vertex_to_faces[v]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Unit right-hand-rule normals `(v3 - v1) x (v2 - v1)` for every face.
///
/// Faces whose area is below `1e-12 * bbox_diag²` are rejected.
pub fn compute_face_normals(vertices: &[DVec3], faces: &[[usize; 3]]) -> Result<Vec<DVec3>> {
    let (lo, hi) = bounding_box(vertices);
    let diag = (hi - lo).length();
    let min_area = DEGENERATE_AREA_FACTOR * diag * diag;
    faces
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let (v1, v2, v3) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            let raw = (v3 - v1).cross(v2 - v1);
            let area = 0.5 * raw.length();
            if !(area > min_area) {
                return Err(MeshError::DegenerateFace { face: fi, area });
            }
            Ok(raw / raw.length())
        })
        .collect()
}

pub(crate) fn bounding_box(points: &[DVec3]) -> (DVec3, DVec3) {
    if points.is_empty() {
        return (DVec3::ZERO, DVec3::ZERO);
    }
    points.iter().fold(
        (DVec3::splat(f64::INFINITY), DVec3::splat(f64::NEG_INFINITY)),
        |(lo, hi), &p| (lo.min(p), hi.max(p)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn unit_square() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                DVec3::new(0.0, 0.0, 0.0),
                DVec3::new(1.0, 0.0, 0.0),
                DVec3::new(1.0, 1.0, 0.0),
                DVec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn right_hand_normal_of_reference_triangle() {
        let n = compute_face_normals(
            &[DVec3::ZERO, DVec3::X, DVec3::Y],
            &[[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(n[0], DVec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn degenerate_face_is_named() {
        let err = TriangleMesh::new(
            vec![DVec3::ZERO, DVec3::X, DVec3::Y, DVec3::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::DegenerateFace { face: 1, .. }), "{err}");
    }

    #[test]
    fn repeated_index_rejected() {
        let err = TriangleMesh::new(vec![DVec3::ZERO, DVec3::X, DVec3::Y], vec![[0, 1, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::RepeatedVertex { face: 0 }));
    }

    #[test]
    fn closed_ccw_mesh_orientation() {
        let ico = shapes::icosahedron();
        assert_eq!(ico.orientation(), -1.0);
        for f in 0..ico.face_count() {
            let outward = ico.outward_normal(f);
            assert!(outward.dot(ico.face_centroid(f)) > 0.0);
        }
    }

    #[test]
    fn single_triangle_has_empty_rings() {
        let m = TriangleMesh::new(vec![DVec3::ZERO, DVec3::X, DVec3::Y], vec![[0, 1, 2]]).unwrap();
        assert!(m.face_ring(0, RingDepth::One).unwrap().is_empty());
        assert!(m.face_ring(0, RingDepth::Two).unwrap().is_empty());
    }

    #[test]
    fn icosahedron_one_ring_matches_vertex_scan() {
        let ico = shapes::icosahedron();
        for f in 0..ico.face_count() {
            let ring = ico.face_ring(f, RingDepth::One).unwrap();
            let brute: Vec<usize> = (0..ico.face_count())
                .filter(|&g| g != f && ico.faces()[g].iter().any(|v| ico.faces()[f].contains(v)))
                .collect();
            assert_eq!(ring, brute);
            // Three valence-5 vertices: 15 incidences, minus the face itself
            // counted three times and each edge neighbour counted twice.
            assert_eq!(ring.len(), 9);
        }
    }

    #[test]
    fn face_ring_out_of_range() {
        assert!(matches!(
            unit_square().face_ring(7, RingDepth::One),
            Err(MeshError::FaceOutOfRange(7))
        ));
    }

    #[test]
    fn vertex_to_faces_matches_scan() {
        let m = shapes::icosphere(2);
        for v in 0..m.vertex_count() {
            let scan: Vec<usize> = (0..m.face_count()).filter(|&f| m.faces()[f].contains(&v)).collect();
            assert_eq!(m.vertex_faces(v), scan.as_slice());
        }
    }

    #[test]
    fn square_area_and_diag() {
        let m = unit_square();
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        assert!((m.bbox_diag() - 2f64.sqrt()).abs() < 1e-15);
    }
}
