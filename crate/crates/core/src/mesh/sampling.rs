use glam::DVec3;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MeshError, Result, TriangleMesh};

/// Sample sites constrained to a mesh surface, each tagged with the face it lies on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    pub positions: Vec<DVec3>,
    pub host_facet: Vec<usize>,
}

impl SiteSet {
    pub fn new(positions: Vec<DVec3>, host_facet: Vec<usize>) -> Self {
        assert_eq!(positions.len(), host_facet.len());
        Self {
            positions,
            host_facet,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Index of the first site that is off its host facet's plane by more than
    /// `1e-7 * bbox_diag` or outside the facet, if any.
    pub fn first_off_surface(&self, mesh: &TriangleMesh) -> Option<usize> {
        let tol = 1e-7 * mesh.bbox_diag();
        (0..self.len()).find(|&i| {
            let f = self.host_facet[i];
            if f >= mesh.face_count() {
                return true;
            }
            let p = self.positions[i];
            let [a, b, c] = mesh.triangle(f);
            let n = mesh.face_normal(f);
            if (p - a).dot(n).abs() > tol {
                return true;
            }
            let (u, v, w) = barycentric(p, a, b, c);
            let slack = tol / a.distance(b).max(b.distance(c)).max(c.distance(a));
            [u, v, w].iter().any(|&x| x < -slack || x > 1.0 + slack)
        })
    }
}

pub(crate) fn barycentric(p: DVec3, a: DVec3, b: DVec3, c: DVec3) -> (f64, f64, f64) {
    let v0 = b - a;
    let v1 = c - a;
    let v2 = p - a;
    let d00 = v0.dot(v0);
    let d01 = v0.dot(v1);
    let d11 = v1.dot(v1);
    let d20 = v2.dot(v0);
    let d21 = v2.dot(v1);
    let denom = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    (1.0 - v - w, v, w)
}

/// Draws `n` area-uniform points: a face chosen with probability proportional
/// to its area, then a uniform barycentric position inside it.
pub fn sample_points<R: Rng>(mesh: &TriangleMesh, n: usize, rng: &mut R) -> Vec<(DVec3, usize)> {
    let areas: Vec<f64> = (0..mesh.face_count()).map(|f| mesh.face_area(f)).collect();
    let faces = WeightedIndex::new(&areas).expect("validated faces have positive area");
    (0..n)
        .map(|_| {
            let f = faces.sample(rng);
            let [a, b, c] = mesh.triangle(f);
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let s = r1.sqrt();
            let p = a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2);
            (p, f)
        })
        .collect()
}

/// Seeded uniform surface sampling of the initial site set.
pub fn sample_uniform(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<SiteSet> {
    if n < 4 {
        return Err(MeshError::TooFewSamples(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (positions, host_facet) = sample_points(mesh, n, &mut rng).into_iter().unzip();
    Ok(SiteSet::new(positions, host_facet))
}
