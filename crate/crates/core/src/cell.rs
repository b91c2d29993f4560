//! Bounded convex polyhedra clipped by tagged half-spaces, and Voronoi cells
//! built from them by nearest-neighbour bisector clipping.
//!
//! A [`ConvexCell`] stores its faces as counter-clockwise (seen from outside)
//! vertex loops. Every face remembers the tag of the plane that created it,
//! so the cross-section left by a given clipping plane can be read back
//! directly after any number of further clips.

use std::fmt::Write as _;

use glam::DVec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TriangleMesh;
use crate::spatial::PointIndex;

/// Relative tolerance: vertex classification uses `CELL_EPS_FACTOR * bbox_diag`.
pub const CELL_EPS_FACTOR: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CellError {
    #[error("sites {0} and {1} coincide; their bisector is undefined")]
    CoincidentSites(usize, usize),
    #[error("plane {0:?} was never applied to this cell")]
    UnknownTag(PlaneTag),
}

/// Where a clipping plane came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlaneTag {
    /// Bisector between the cell's site and site `k`.
    Bisector(usize),
    /// Supporting plane of original mesh facet `t`.
    Facet(usize),
    /// Side of the bounding box: 0..6 for -x, +x, -y, +y, -z, +z.
    Bound(u8),
}

/// The closed half-space `normal · x <= offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfSpace {
    pub normal: DVec3,
    pub offset: f64,
    pub tag: PlaneTag,
}

impl HalfSpace {
    /// Builds a half-space from any non-zero normal; normal and offset are
    /// rescaled so the stored normal has unit length.
    pub fn new(normal: DVec3, offset: f64, tag: PlaneTag) -> Self {
        let len = normal.length();
        Self {
            normal: normal / len,
            offset: offset / len,
            tag,
        }
    }

    /// Half-space bounded by the plane through `point` with outward `normal`.
    pub fn through(point: DVec3, normal: DVec3, tag: PlaneTag) -> Self {
        let n = normal.normalize();
        Self {
            normal: n,
            offset: n.dot(point),
            tag,
        }
    }

    pub fn signed_distance(&self, p: DVec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Points at least as close to `si` as to `sk`; tagged with `k`.
pub fn bisector(si: DVec3, sk: DVec3, k: usize) -> Result<HalfSpace, CellError> {
    let d = sk - si;
    let len = d.length();
    if !(len > 0.0) {
        return Err(CellError::CoincidentSites(usize::MAX, k));
    }
    let normal = d / len;
    let mid = 0.5 * (si + sk);
    Ok(HalfSpace {
        normal,
        offset: normal.dot(mid),
        tag: PlaneTag::Bisector(k),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFace {
    pub tag: PlaneTag,
    pub corners: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClipOutcome {
    /// No vertex lay strictly outside; the cell is unchanged.
    Unchanged,
    Clipped,
    /// Nothing of positive volume remains.
    Empty,
}

#[derive(Clone, Debug)]
pub struct ConvexCell {
    vertices: Vec<DVec3>,
    faces: Vec<CellFace>,
    provenance: Vec<HalfSpace>,
    eps: f64,
}

const BOX_FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

impl ConvexCell {
    /// The box `[lo, hi]` with six faces tagged `Bound(0..6)`.
    pub fn from_box(lo: DVec3, hi: DVec3, eps: f64) -> Self {
        let vertices = (0..8)
            .map(|i| {
                DVec3::new(
                    if i & 1 == 0 { lo.x } else { hi.x },
                    if i & 2 == 0 { lo.y } else { hi.y },
                    if i & 4 == 0 { lo.z } else { hi.z },
                )
            })
            .collect();
        let planes = [
            (DVec3::NEG_X, -lo.x),
            (DVec3::X, hi.x),
            (DVec3::NEG_Y, -lo.y),
            (DVec3::Y, hi.y),
            (DVec3::NEG_Z, -lo.z),
            (DVec3::Z, hi.z),
        ];
        let faces = BOX_FACES
            .iter()
            .enumerate()
            .map(|(i, c)| CellFace {
                tag: PlaneTag::Bound(i as u8),
                corners: c.to_vec(),
            })
            .collect();
        let provenance = planes
            .iter()
            .enumerate()
            .map(|(i, &(normal, offset))| HalfSpace {
                normal,
                offset,
                tag: PlaneTag::Bound(i as u8),
            })
            .collect();
        Self {
            vertices,
            faces,
            provenance,
            eps,
        }
    }

    pub fn vertices(&self) -> &[DVec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[CellFace] {
        &self.faces
    }

    pub fn provenance(&self) -> &[HalfSpace] {
        &self.provenance
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Largest distance from `p` to any vertex.
    pub fn max_distance_from(&self, p: DVec3) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.distance_squared(p))
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Clips away the part of the cell with `hs.signed_distance > eps`.
    ///
    /// Vertices within `eps` of the plane are kept. A clip that would leave a
    /// cap with fewer than three corners is treated as tangent and leaves the
    /// cell untouched.
    pub fn clip(&mut self, hs: &HalfSpace) -> ClipOutcome {
        if self.is_empty() {
            return ClipOutcome::Empty;
        }
        self.provenance.push(*hs);
        let eps = self.eps;
        let dist: Vec<f64> = self.vertices.iter().map(|&v| hs.signed_distance(v)).collect();
        let out = |i: usize| dist[i] > eps;
        if !dist.iter().any(|&d| d > eps) {
            return ClipOutcome::Unchanged;
        }
        if !dist.iter().any(|&d| d < -eps) {
            self.make_empty();
            return ClipOutcome::Empty;
        }

        let mut vertices = self.vertices.clone();
        // Intersection vertices keyed by the (sorted) edge they split.
        let mut split: Vec<((usize, usize), usize)> = Vec::new();
        let mut intersect = |a: usize, b: usize, vertices: &mut Vec<DVec3>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&(_, v)) = split.iter().find(|(k, _)| *k == key) {
                return v;
            }
            let (p, q) = (key.0, key.1);
            let t = dist[p] / (dist[p] - dist[q]);
            let x = self.vertices[p] + t * (self.vertices[q] - self.vertices[p]);
            vertices.push(x);
            split.push((key, vertices.len() - 1));
            vertices.len() - 1
        };

        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        // Cap edges in cap orientation: (from, to).
        let mut cap_edges: Vec<(usize, usize)> = Vec::new();
        for face in &self.faces {
            let c = &face.corners;
            let n = c.len();
            if !c.iter().any(|&v| out(v)) {
                faces.push(face.clone());
                continue;
            }
            let mut kept = Vec::with_capacity(n + 1);
            // Exit point of the current out-run, once seen.
            let mut exit: Option<usize> = None;
            let mut first_entry: Option<usize> = None;
            let mut pending_exit_before_start: Option<usize> = None;
            for i in 0..n {
                let a = c[i];
                let b = c[(i + 1) % n];
                if !out(a) {
                    kept.push(a);
                }
                match (out(a), out(b)) {
                    (false, true) => {
                        let x = if dist[a] >= -eps { a } else { intersect(a, b, &mut vertices) };
                        if x != a {
                            kept.push(x);
                        }
                        exit = Some(x);
                    }
                    (true, false) => {
                        let y = if dist[b] >= -eps { b } else { intersect(a, b, &mut vertices) };
                        if y != b {
                            kept.push(y);
                        }
                        match exit.take() {
                            Some(x) => {
                                if x != y {
                                    cap_edges.push((y, x));
                                }
                            }
                            None => first_entry = Some(y),
                        }
                    }
                    _ => {}
                }
                if i == n - 1 {
                    pending_exit_before_start = exit;
                }
            }
            // Out-run wrapping around the loop start.
            if let (Some(x), Some(y)) = (pending_exit_before_start, first_entry) {
                if x != y {
                    cap_edges.push((y, x));
                }
            }
            if kept.len() >= 3 {
                faces.push(CellFace {
                    tag: face.tag,
                    corners: kept,
                });
            }
        }

        let Some(cap) = chain_cap(&cap_edges) else {
            // Broken or degenerate cap: treat the plane as tangent.
            return ClipOutcome::Unchanged;
        };
        faces.push(CellFace {
            tag: hs.tag,
            corners: cap,
        });

        if faces.len() < 4 {
            self.make_empty();
            return ClipOutcome::Empty;
        }

        // Compact: drop vertices no face refers to.
        let mut remap = vec![usize::MAX; vertices.len()];
        let mut compact = Vec::with_capacity(vertices.len());
        for face in &mut faces {
            for v in &mut face.corners {
                if remap[*v] == usize::MAX {
                    remap[*v] = compact.len();
                    compact.push(vertices[*v]);
                }
                *v = remap[*v];
            }
        }
        self.vertices = compact;
        self.faces = faces;
        ClipOutcome::Clipped
    }

    fn make_empty(&mut self) {
        self.vertices.clear();
        self.faces.clear();
    }

    /// Loop of the face created by the plane tagged `tag`, or `None` if that
    /// plane no longer bounds the cell.
    pub fn face_on_plane(&self, tag: PlaneTag) -> Result<Option<Vec<DVec3>>, CellError> {
        if !self.provenance.iter().any(|h| h.tag == tag) {
            return Err(CellError::UnknownTag(tag));
        }
        Ok(self
            .faces
            .iter()
            .find(|f| f.tag == tag)
            .map(|f| f.corners.iter().map(|&v| self.vertices[v]).collect()))
    }

    pub fn volume(&self) -> f64 {
        let Some(&origin) = self.vertices.first() else {
            return 0.0;
        };
        let mut six_v = 0.0;
        for face in &self.faces {
            let c = &face.corners;
            let p0 = self.vertices[c[0]] - origin;
            for k in 1..c.len() - 1 {
                let p1 = self.vertices[c[k]] - origin;
                let p2 = self.vertices[c[k + 1]] - origin;
                six_v += p0.dot(p1.cross(p2));
            }
        }
        six_v / 6.0
    }

    /// Number of undirected edges, or `None` if some directed edge is not
    /// matched by exactly one opposite edge (non-manifold boundary).
    pub fn edge_count(&self) -> Option<usize> {
        let mut directed: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| {
                let c = &f.corners;
                (0..c.len()).map(move |i| (c[i], c[(i + 1) % c.len()]))
            })
            .collect();
        directed.sort_unstable();
        if directed.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        for &(a, b) in &directed {
            if directed.binary_search(&(b, a)).is_err() {
                return None;
            }
        }
        Some(directed.len() / 2)
    }

    /// `V - E + F`, or `None` if the edge structure is broken.
    pub fn euler_characteristic(&self) -> Option<i64> {
        let e = self.edge_count()?;
        Some(self.vertices.len() as i64 - e as i64 + self.faces.len() as i64)
    }

    /// Whether every vertex satisfies every applied half-space within `eps`.
    pub fn is_convex(&self) -> bool {
        self.vertices
            .iter()
            .all(|&v| self.provenance.iter().all(|h| h.signed_distance(v) <= self.eps))
    }

    /// Checks convexity, Euler's formula, edge pairing and positive volume.
    pub fn is_valid(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        self.is_convex() && self.euler_characteristic() == Some(2) && self.volume() > 0.0
    }

    /// Wavefront OBJ text of the cell's faces, for inspection.
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = write!(s, "# {:?}\nf", f.tag);
            for &c in &f.corners {
                let _ = write!(s, " {}", c + 1);
            }
            s.push('\n');
        }
        s
    }
}

/// Chains directed cap edges into one loop. Fails unless the edges form a
/// single simple cycle of at least three corners.
fn chain_cap(edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    if edges.len() < 3 {
        return None;
    }
    let mut loop_ = Vec::with_capacity(edges.len());
    let start = edges[0].0;
    let mut cur = start;
    for _ in 0..edges.len() {
        loop_.push(cur);
        let mut next = edges.iter().filter(|e| e.0 == cur).map(|e| e.1);
        let n = next.next()?;
        if next.next().is_some() {
            return None;
        }
        cur = n;
        if cur == start {
            break;
        }
    }
    (cur == start && loop_.len() == edges.len()).then_some(loop_)
}

/// `clip` on a copy: `None` when the result is empty.
pub fn clip_halfspace(cell: &ConvexCell, hs: &HalfSpace) -> Option<ConvexCell> {
    let mut c = cell.clone();
    match c.clip(hs) {
        ClipOutcome::Empty => None,
        _ => Some(c),
    }
}

/// Cell tolerance for a mesh: `1e-9 * bbox_diag`.
pub fn cell_eps(mesh: &TriangleMesh) -> f64 {
    CELL_EPS_FACTOR * mesh.bbox_diag()
}

/// The mesh bounding box grown by `padding * bbox_diag` on every side.
pub fn init_bounding_cell(mesh: &TriangleMesh, padding: f64) -> ConvexCell {
    let (lo, hi) = mesh.bbox();
    let pad = DVec3::splat(padding * mesh.bbox_diag());
    ConvexCell::from_box(lo - pad, hi + pad, cell_eps(mesh))
}

/// A Voronoi cell together with the neighbour information used to build it.
#[derive(Clone, Debug)]
pub struct VoronoiCell {
    pub cell: ConvexCell,
    /// Neighbour sites clipped against, nearest first.
    pub neighbors: Vec<usize>,
    /// Distance to the farthest neighbour clipped against.
    pub d_max: f64,
    /// Distance to the nearest neighbour that was not clipped against, if any.
    pub next_distance: Option<f64>,
    /// True when no unprocessed site can cut the cell.
    pub secured: bool,
}

impl VoronoiCell {
    /// Whether a region of the cell within `radius` of the site is final:
    /// no unprocessed site is close enough to cut it.
    pub fn secures_radius(&self, radius: f64) -> bool {
        self.next_distance.is_none_or(|d| d > 2.0 * radius)
    }
}

/// Voronoi cell of `site` inside `bounds`, clipped by bisectors with up to
/// `k` nearest sites in ascending distance. Stops early once the next
/// neighbour is farther than twice the cell's radius around the site.
/// Sites coinciding with `site` are skipped.
pub fn compute_voronoi_cell(
    site: usize,
    sites: &[DVec3],
    index: &PointIndex,
    k: usize,
    bounds: &ConvexCell,
) -> VoronoiCell {
    let s = sites[site];
    let others = sites.len() - 1;
    let want = (k + 1).min(others);
    let candidates = index.knn(s, want, Some(site)).expect("k clamped to available sites");
    let mut cell = bounds.clone();
    let mut neighbors = Vec::with_capacity(k.min(others));
    let mut d_max: f64 = 0.0;
    let mut next_distance = None;
    let mut secured = false;
    for (j, nb) in candidates.iter().enumerate() {
        if j >= k {
            next_distance = Some(nb.distance);
            break;
        }
        let radius = cell.max_distance_from(s);
        if nb.distance > 2.0 * radius {
            next_distance = Some(nb.distance);
            secured = true;
            break;
        }
        if let Ok(hs) = bisector(s, sites[nb.id], nb.id) {
            cell.clip(&hs);
        }
        neighbors.push(nb.id);
        d_max = d_max.max(nb.distance);
    }
    if !secured {
        secured = match next_distance {
            None => true,
            Some(d) => d > 2.0 * cell.max_distance_from(s),
        };
    }
    VoronoiCell {
        cell,
        neighbors,
        d_max,
        next_distance,
        secured,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_cube_cell() -> ConvexCell {
        ConvexCell::from_box(DVec3::ZERO, DVec3::ONE, 1e-12)
    }

    #[test]
    fn box_is_valid() {
        let c = unit_cube_cell();
        assert_eq!(c.vertices().len(), 8);
        assert_eq!(c.edge_count(), Some(12));
        assert_eq!(c.euler_characteristic(), Some(2));
        assert!((c.volume() - 1.0).abs() < 1e-15);
        assert!(c.is_valid());
    }

    #[test]
    fn half_cube() {
        let mut c = unit_cube_cell();
        let hs = HalfSpace::new(DVec3::X, 0.5, PlaneTag::Bisector(1));
        assert_eq!(c.clip(&hs), ClipOutcome::Clipped);
        assert!((c.volume() - 0.5).abs() < 1e-15);
        assert!(c.is_valid());
        let quad = c.face_on_plane(PlaneTag::Bisector(1)).unwrap().unwrap();
        assert_eq!(quad.len(), 4);
        for p in &quad {
            assert_eq!(p.x, 0.5);
        }
        let area = polygon_area(&quad);
        assert!((area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plane_outside_cell_is_identity() {
        let mut c = unit_cube_cell();
        let before = c.vertices().to_vec();
        let hs = HalfSpace::new(DVec3::X, 2.0, PlaneTag::Bisector(3));
        assert_eq!(c.clip(&hs), ClipOutcome::Unchanged);
        assert_eq!(c.vertices(), before.as_slice());
        assert_eq!(c.faces().len(), 6);
        assert_eq!(c.face_on_plane(PlaneTag::Bisector(3)).unwrap(), None);
    }

    #[test]
    fn plane_through_face_is_identity() {
        let mut c = unit_cube_cell();
        let hs = HalfSpace::new(DVec3::X, 1.0, PlaneTag::Bisector(3));
        assert_eq!(c.clip(&hs), ClipOutcome::Unchanged);
        assert!((c.volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn everything_removed_is_empty() {
        let mut c = unit_cube_cell();
        let hs = HalfSpace::new(DVec3::X, -1.0, PlaneTag::Bisector(3));
        assert_eq!(c.clip(&hs), ClipOutcome::Empty);
        assert!(c.is_empty());
        assert_eq!(c.volume(), 0.0);
    }

    #[test]
    fn corner_cut_through_vertices_keeps_topology() {
        // Plane x + y + z <= 1 passes exactly through three cube vertices.
        let mut c = unit_cube_cell();
        let hs = HalfSpace::new(DVec3::ONE, 1.0, PlaneTag::Facet(0));
        assert_eq!(c.clip(&hs), ClipOutcome::Clipped);
        assert!(c.is_valid());
        assert!((c.volume() - 1.0 / 6.0).abs() < 1e-15);
        let tri = c.face_on_plane(PlaneTag::Facet(0)).unwrap().unwrap();
        assert_eq!(tri.len(), 3);
    }

    #[test]
    fn cut_away_face_reads_back_none() {
        let mut c = unit_cube_cell();
        c.clip(&HalfSpace::new(DVec3::X, 0.5, PlaneTag::Bisector(1)));
        c.clip(&HalfSpace::new(DVec3::X, 0.25, PlaneTag::Bisector(2)));
        assert_eq!(c.face_on_plane(PlaneTag::Bisector(1)).unwrap(), None);
        assert!(c.face_on_plane(PlaneTag::Bisector(2)).unwrap().is_some());
        assert_eq!(
            c.face_on_plane(PlaneTag::Bisector(9)),
            Err(CellError::UnknownTag(PlaneTag::Bisector(9)))
        );
    }

    #[test]
    fn bisector_of_axis_pair() {
        let hs = bisector(DVec3::ZERO, DVec3::new(2.0, 0.0, 0.0), 4).unwrap();
        assert_eq!(hs.normal, DVec3::X);
        assert_eq!(hs.offset, 1.0);
        assert_eq!(hs.tag, PlaneTag::Bisector(4));
        assert!(bisector(DVec3::ONE, DVec3::ONE, 1).is_err());
    }

    proptest! {
        #[test]
        fn bisector_agrees_with_distances(
            a in prop::array::uniform3(-5.0..5.0f64),
            b in prop::array::uniform3(-5.0..5.0f64),
            p in prop::array::uniform3(-5.0..5.0f64),
        ) {
            let (a, b, p) = (DVec3::from(a), DVec3::from(b), DVec3::from(p));
            prop_assume!(a.distance(b) > 1e-3);
            let hs = bisector(a, b, 0).unwrap();
            let mid = 0.5 * (a + b);
            prop_assert!((hs.signed_distance(mid)).abs() < 1e-12);
            let margin = (p.distance(a) - p.distance(b)).abs();
            prop_assume!(margin > 1e-9);
            prop_assert_eq!(hs.signed_distance(p) <= 0.0, p.distance(a) <= p.distance(b));
        }
    }

    pub(crate) fn polygon_area(poly: &[DVec3]) -> f64 {
        let mut n = DVec3::ZERO;
        for i in 1..poly.len() - 1 {
            n += (poly[i] - poly[0]).cross(poly[i + 1] - poly[0]);
        }
        0.5 * n.length()
    }

    fn random_cell(rng: &mut ChaCha8Rng, planes: usize) -> (ConvexCell, Vec<HalfSpace>) {
        let mut c = ConvexCell::from_box(DVec3::splat(-1.0), DVec3::splat(1.0), 1e-9);
        let mut applied = Vec::new();
        for i in 0..planes {
            let n = DVec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if n.length() < 1e-3 {
                continue;
            }
            let hs = HalfSpace::new(n, rng.gen_range(0.05..1.0) * n.length(), PlaneTag::Bisector(i));
            c.clip(&hs);
            applied.push(hs);
        }
        (c, applied)
    }

    /// Brute-force vertex enumeration: every triple of planes whose
    /// intersection satisfies all half-spaces.
    fn triple_vertices(planes: &[HalfSpace], tol: f64) -> Vec<DVec3> {
        let mut out: Vec<DVec3> = Vec::new();
        for i in 0..planes.len() {
            for j in i + 1..planes.len() {
                for k in j + 1..planes.len() {
                    let (a, b, c) = (planes[i], planes[j], planes[k]);
                    let det = a.normal.dot(b.normal.cross(c.normal));
                    if det.abs() < 1e-9 {
                        continue;
                    }
                    let x = (b.normal.cross(c.normal) * a.offset
                        + c.normal.cross(a.normal) * b.offset
                        + a.normal.cross(b.normal) * c.offset)
                        / det;
                    if planes.iter().all(|h| h.signed_distance(x) <= tol)
                        && !out.iter().any(|y| y.distance(x) < 1e-7)
                    {
                        out.push(x);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn random_polytopes_match_triple_intersection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let (cell, applied) = random_cell(&mut rng, 20);
            let mut planes = ConvexCell::from_box(DVec3::splat(-1.0), DVec3::splat(1.0), 1e-9)
                .provenance()
                .to_vec();
            planes.extend(applied);
            let oracle = triple_vertices(&planes, 1e-9);
            assert!(cell.is_valid());
            for v in cell.vertices() {
                assert!(oracle.iter().any(|o| o.distance(*v) < 1e-7), "extra vertex {v}");
            }
            for o in &oracle {
                assert!(cell.vertices().iter().any(|v| v.distance(*o) < 1e-7), "missing vertex {o}");
            }
        }
    }

    #[test]
    fn clip_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let count = rng.gen_range(1..=12);
            let planes: Vec<HalfSpace> = (0..count)
                .map(|i| {
                    let n = DVec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        + DVec3::splat(1e-3);
                    HalfSpace::new(n, rng.gen_range(0.1..1.0) * n.length(), PlaneTag::Bisector(i))
                })
                .collect();
            let mut a = ConvexCell::from_box(DVec3::splat(-1.0), DVec3::splat(1.0), 1e-9);
            let mut b = a.clone();
            planes.iter().for_each(|h| {
                a.clip(h);
            });
            planes.iter().rev().for_each(|h| {
                b.clip(h);
            });
            assert_eq!(a.is_empty(), b.is_empty());
            for v in a.vertices() {
                assert!(b.vertices().iter().any(|w| w.distance(*v) < 1e-7));
            }
            for v in b.vertices() {
                assert!(a.vertices().iter().any(|w| w.distance(*v) < 1e-7));
            }
        }
    }

    #[test]
    fn single_site_cell_is_bounding_box() {
        let sites = [DVec3::new(0.5, 0.5, 0.5)];
        let index = PointIndex::build(&sites).unwrap();
        let bounds = ConvexCell::from_box(DVec3::ZERO, DVec3::ONE, 1e-12);
        let vc = compute_voronoi_cell(0, &sites, &index, 24, &bounds);
        assert!(vc.secured);
        assert!(vc.neighbors.is_empty());
        assert!((vc.cell.volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_sites_halve_the_box() {
        let sites = [DVec3::new(0.25, 0.5, 0.5), DVec3::new(0.75, 0.5, 0.5)];
        let index = PointIndex::build(&sites).unwrap();
        let bounds = ConvexCell::from_box(DVec3::ZERO, DVec3::ONE, 1e-12);
        for i in 0..2 {
            let vc = compute_voronoi_cell(i, &sites, &index, 24, &bounds);
            assert!(vc.secured);
            assert!((vc.cell.volume() - 0.5).abs() < 1e-15);
            let face = vc.cell.face_on_plane(PlaneTag::Bisector(1 - i)).unwrap().unwrap();
            assert!(face.iter().all(|p| (p.x - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn cell_dump_lists_faces() {
        let obj = unit_cube_cell().to_obj();
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 8);
        assert_eq!(obj.lines().filter(|l| l.starts_with('f')).count(), 6);
    }
}
