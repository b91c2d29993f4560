//! Output mesh construction: the restricted Voronoi diagram of the sites on
//! the input surface, and the triangulation dual to its corners.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use glam::{DVec2, DVec3};
use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::{MeshError, SiteSet, TriangleMesh};
use crate::spatial::{Neighbor, PointIndex};

/// Corners of different pieces closer than this times `bbox_diag` are merged.
pub const CORNER_MERGE_FACTOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("restricted Voronoi diagram has no corner shared by three sites")]
    NoTriangles,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// What an edge of a restricted Voronoi piece lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    /// Edge `k` of the facet, from corner `k` to corner `k + 1`.
    FacetEdge(u8),
    /// Bisector with the given site.
    Bisector(usize),
}

/// The part of one facet closest to one site.
#[derive(Clone, Debug)]
pub struct RvdPiece {
    pub site: usize,
    /// Counter-clockwise about the facet's winding normal.
    pub points: Vec<DVec3>,
    /// `tags[i]` labels the edge from `points[i]` to `points[i + 1]`.
    pub tags: Vec<EdgeTag>,
    pub area: f64,
}

#[derive(Clone, Debug)]
pub struct RestrictedVoronoiDiagram {
    /// Pieces per input facet.
    pub facets: Vec<Vec<RvdPiece>>,
}

impl RestrictedVoronoiDiagram {
    pub fn piece_count(&self) -> usize {
        self.facets.iter().map(Vec::len).sum()
    }
}

/// Plane basis of a facet: origin at its first corner, `e1` along its first
/// edge, `e2` completing a frame with the winding normal `n`.
#[derive(Clone, Copy, Debug)]
pub struct FacetFrame {
    pub origin: DVec3,
    pub e1: DVec3,
    pub e2: DVec3,
    pub n: DVec3,
}

impl FacetFrame {
    pub fn new(tri: [DVec3; 3]) -> Self {
        let [a, b, c] = tri;
        let n = (b - a).cross(c - a).normalize();
        let e1 = (b - a).normalize();
        Self {
            origin: a,
            e1,
            e2: n.cross(e1),
            n,
        }
    }

    pub fn to_2d(&self, p: DVec3) -> DVec2 {
        let d = p - self.origin;
        DVec2::new(d.dot(self.e1), d.dot(self.e2))
    }

    pub fn to_3d(&self, q: DVec2) -> DVec3 {
        self.origin + q.x * self.e1 + q.y * self.e2
    }
}

/// Keeps `normal · x <= offset`, with `normal` of unit length.
#[derive(Clone, Copy, Debug)]
struct HalfPlane {
    normal: DVec2,
    offset: f64,
}

/// Points of the facet plane at least as close to `a` as to `c`. When `a` and
/// `c` project onto the same point of the plane the answer is the same
/// everywhere, and `Err(keep_all)` reports it.
fn bisector_half_plane(frame: &FacetFrame, a: DVec3, c: DVec3) -> Result<HalfPlane, bool> {
    let ra = a - frame.origin;
    let rc = c - frame.origin;
    let d = frame.to_2d(c) - frame.to_2d(a);
    let len = d.length();
    let rhs = 0.5 * (rc.length_squared() - ra.length_squared());
    if len < 1e-300 {
        return Err(rhs >= 0.0);
    }
    Ok(HalfPlane {
        normal: d / len,
        offset: rhs / len,
    })
}

fn polygon_area_2d(p: &[DVec2]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let a = p[i];
        let b = p[(i + 1) % p.len()];
        s += a.perp_dot(b);
    }
    0.5 * s
}

/// Sutherland-Hodgman clip of a tagged convex polygon by one half-plane.
/// Vertices within `tol` of the line count as inside; consecutive vertices
/// closer than `tol` are merged, the later edge tag winning.
fn clip_polygon(poly: &[DVec2], tags: &[EdgeTag], hp: HalfPlane, tag: EdgeTag, tol: f64) -> (Vec<DVec2>, Vec<EdgeTag>) {
    let f: Vec<f64> = poly.iter().map(|p| hp.normal.dot(*p) - hp.offset).collect();
    if f.iter().all(|&d| d <= tol) {
        return (poly.to_vec(), tags.to_vec());
    }
    let mut out: Vec<DVec2> = Vec::with_capacity(poly.len() + 1);
    let mut out_tags: Vec<EdgeTag> = Vec::with_capacity(poly.len() + 1);
    let push = |p: DVec2, t: EdgeTag, out: &mut Vec<DVec2>, out_tags: &mut Vec<EdgeTag>| {
        if let Some(last) = out.last() {
            if last.distance(p) <= tol {
                *out_tags.last_mut().unwrap() = t;
                return;
            }
        }
        out.push(p);
        out_tags.push(t);
    };
    let n = poly.len();
    for i in 0..n {
        let j = (i + 1) % n;
        let (cur_in, next_in) = (f[i] <= tol, f[j] <= tol);
        if cur_in {
            push(poly[i], tags[i], &mut out, &mut out_tags);
            if !next_in {
                let t = f[i] / (f[i] - f[j]);
                push(poly[i] + t * (poly[j] - poly[i]), tag, &mut out, &mut out_tags);
            }
        } else if next_in {
            let t = f[i] / (f[i] - f[j]);
            push(poly[i] + t * (poly[j] - poly[i]), tags[i], &mut out, &mut out_tags);
        }
    }
    // Merge across the wrap-around.
    while out.len() > 1 && out[0].distance(*out.last().unwrap()) <= tol {
        out.pop();
        out_tags.pop();
    }
    (out, out_tags)
}

struct SiteNeighbors<'a> {
    sites: &'a [DVec3],
    index: &'a PointIndex,
    base: Vec<Vec<Neighbor>>,
}

impl SiteNeighbors<'_> {
    /// Nearest `k` other sites of `s`; from the precomputed lists when they suffice.
    fn get(&self, s: usize, k: usize) -> Vec<Neighbor> {
        let k = k.min(self.sites.len() - 1);
        if k <= self.base[s].len() {
            return self.base[s][..k].to_vec();
        }
        self.index.knn(self.sites[s], k, Some(s)).expect("k clamped")
    }
}

/// Region of `facet` closest to `site`, by clipping the facet triangle with
/// bisectors of ever farther sites until no farther site can reach it.
fn facet_piece(
    frame: &FacetFrame,
    tri2: &[DVec2; 3],
    site: usize,
    neighbors: &SiteNeighbors,
    k0: usize,
    tol: f64,
) -> Option<(Vec<DVec2>, Vec<EdgeTag>)> {
    let sites = neighbors.sites;
    let a = sites[site];
    let mut poly = tri2.to_vec();
    let mut tags = vec![EdgeTag::FacetEdge(0), EdgeTag::FacetEdge(1), EdgeTag::FacetEdge(2)];
    let total = sites.len() - 1;
    let mut k = k0.min(total);
    let mut done = 0;
    loop {
        let list = neighbors.get(site, k);
        for nb in &list[done..] {
            let reach = poly
                .iter()
                .map(|&p| frame.to_3d(p).distance(a))
                .fold(0.0, f64::max);
            if nb.distance > 2.0 * reach {
                return Some((poly, tags));
            }
            match bisector_half_plane(frame, a, sites[nb.id]) {
                Ok(hp) => {
                    let (p, t) = clip_polygon(&poly, &tags, hp, EdgeTag::Bisector(nb.id), tol);
                    poly = p;
                    tags = t;
                }
                Err(true) => {}
                Err(false) => return None,
            }
            if poly.len() < 3 {
                return None;
            }
        }
        done = list.len();
        if done >= total {
            return Some((poly, tags));
        }
        k = (2 * k).min(total);
    }
}

/// Restricted Voronoi diagram of `sites` on `mesh`. Each facet is seeded with
/// the site nearest its centroid and flooded across shared bisector edges.
pub fn compute_rvd(mesh: &TriangleMesh, sites: &SiteSet, index: &PointIndex, k: usize) -> RestrictedVoronoiDiagram {
    let k = k.max(1);
    let pos = &sites.positions;
    let base: Vec<Vec<Neighbor>> = (0..pos.len())
        .into_par_iter()
        .map(|s| index.knn(pos[s], k.min(pos.len() - 1), Some(s)).expect("k clamped"))
        .collect();
    let neighbors = SiteNeighbors {
        sites: pos,
        index,
        base,
    };
    let tol = 1e-12 * mesh.bbox_diag();
    let facets = (0..mesh.face_count())
        .into_par_iter()
        .map(|f| {
            let tri = mesh.triangle(f);
            let frame = FacetFrame::new(tri);
            let tri2 = tri.map(|p| frame.to_2d(p));
            let seed = index.nearest(mesh.face_centroid(f)).id;
            let mut pieces = Vec::new();
            let mut seen = HashSet::from([seed]);
            let mut queue = VecDeque::from([seed]);
            while let Some(s) = queue.pop_front() {
                let Some((poly, tags)) = facet_piece(&frame, &tri2, s, &neighbors, k, tol) else {
                    continue;
                };
                let area = polygon_area_2d(&poly);
                if !(area > 0.0) {
                    continue;
                }
                for t in &tags {
                    if let EdgeTag::Bisector(b) = *t {
                        if seen.insert(b) {
                            queue.push_back(b);
                        }
                    }
                }
                pieces.push(RvdPiece {
                    site: s,
                    points: poly.iter().map(|&q| frame.to_3d(q)).collect(),
                    tags,
                    area,
                });
            }
            pieces
        })
        .collect();
    RestrictedVoronoiDiagram { facets }
}

/// Triangle mesh dual to the restricted Voronoi diagram.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub mesh: TriangleMesh,
    /// Original site id of every output vertex.
    pub site_ids: Vec<usize>,
    /// Edges used by more than two output triangles.
    pub non_manifold_edges: usize,
    /// Corners where four or more regions met and were fan-split.
    pub split_corners: usize,
}

struct Corner {
    position: DVec3,
    facet: usize,
    sites: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Builds triangles from RVD corners: three regions meeting give one
/// triangle, four or more are fanned in angular order from the lowest site id.
pub fn dual_triangulate(
    mesh: &TriangleMesh,
    rvd: &RestrictedVoronoiDiagram,
    sites: &SiteSet,
) -> Result<Extraction, ExtractError> {
    let mut corners = Vec::new();
    for (f, pieces) in rvd.facets.iter().enumerate() {
        for piece in pieces {
            let n = piece.points.len();
            for i in 0..n {
                let mut set = vec![piece.site];
                for t in [piece.tags[(i + n - 1) % n], piece.tags[i]] {
                    if let EdgeTag::Bisector(b) = t {
                        set.push(b);
                    }
                }
                corners.push(Corner {
                    position: piece.points[i],
                    facet: f,
                    sites: set,
                });
            }
        }
    }

    // Merge coincident corners through a hash grid and union-find.
    let tol = CORNER_MERGE_FACTOR * mesh.bbox_diag();
    let cell = |p: DVec3| (p / tol).floor().as_i64vec3().to_array();
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut parent: Vec<usize> = (0..corners.len()).collect();
    for (i, c) in corners.iter().enumerate() {
        let [x, y, z] = cell(c.position);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&[x + dx, y + dy, z + dz]) {
                        for &j in list {
                            if corners[j].position.distance(c.position) <= tol {
                                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                                if ri != rj {
                                    parent[ri.max(rj)] = ri.min(rj);
                                }
                            }
                        }
                    }
                }
            }
        }
        grid.entry([x, y, z]).or_default().push(i);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..corners.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }

    let pos = &sites.positions;
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut seen: HashSet<[usize; 3]> = HashSet::new();
    let mut split_corners = 0;
    let min_area = crate::mesh::DEGENERATE_AREA_FACTOR * mesh.bbox_diag().powi(2);
    for members in groups.values() {
        let mut set: Vec<usize> = members.iter().flat_map(|&i| corners[i].sites.iter().copied()).collect();
        set.sort_unstable();
        set.dedup();
        if set.len() < 3 {
            continue;
        }
        let first = &corners[members[0]];
        let frame = FacetFrame::new(mesh.triangle(first.facet));
        let fan: Vec<[usize; 3]> = if set.len() == 3 {
            vec![[set[0], set[1], set[2]]]
        } else {
            split_corners += 1;
            let centre = frame.to_2d(first.position);
            let angle = |s: usize| {
                let d = frame.to_2d(pos[s]) - centre;
                d.y.atan2(d.x)
            };
            let mut ring = set.clone();
            ring.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)).then(a.cmp(&b)));
            let lowest = ring.iter().position(|&s| s == set[0]).unwrap();
            ring.rotate_left(lowest);
            (1..ring.len() - 1).map(|k| [ring[0], ring[k], ring[k + 1]]).collect()
        };
        for mut t in fan {
            let normal = (pos[t[1]] - pos[t[0]]).cross(pos[t[2]] - pos[t[0]]);
            if !(0.5 * normal.length() > min_area) {
                continue;
            }
            if normal.dot(frame.n) < 0.0 {
                t.swap(1, 2);
            }
            let mut key = t;
            key.sort_unstable();
            if seen.insert(key) {
                triangles.push(t);
            }
        }
    }
    if triangles.is_empty() {
        return Err(ExtractError::NoTriangles);
    }

    let mut edge_use: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edge_use.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let non_manifold_edges = edge_use.values().filter(|&&c| c > 2).count();

    // Keep every site that owns a region, in site order.
    let mut owns = vec![false; pos.len()];
    for pieces in &rvd.facets {
        for p in pieces {
            owns[p.site] = true;
        }
    }
    let mut remap = vec![usize::MAX; pos.len()];
    let mut site_ids = Vec::new();
    for (s, &o) in owns.iter().enumerate() {
        if o {
            remap[s] = site_ids.len();
            site_ids.push(s);
        }
    }
    let vertices = site_ids.iter().map(|&s| pos[s]).collect();
    let faces = triangles.iter().map(|t| t.map(|s| remap[s])).collect();
    let mesh = TriangleMesh::new(vertices, faces)?;
    Ok(Extraction {
        mesh,
        site_ids,
        non_manifold_edges,
        split_corners,
    })
}

/// Restricted Voronoi diagram followed by its dual triangulation.
pub fn extract_mesh(mesh: &TriangleMesh, sites: &SiteSet, k: usize) -> Result<Extraction, ExtractError> {
    let index = PointIndex::build(&sites.positions).map_err(|_| ExtractError::NoTriangles)?;
    let rvd = compute_rvd(mesh, sites, &index, k);
    dual_triangulate(mesh, &rvd, sites)
}
