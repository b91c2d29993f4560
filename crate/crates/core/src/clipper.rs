//! Per-site choice of how many original facet planes (one to three) clip a
//! Voronoi cell, which facets they are, and the clipping itself.

use glam::DVec3;
use serde::Serialize;
use thiserror::Error;

use crate::cell::{ClipOutcome, ConvexCell, HalfSpace, PlaneTag};
use crate::mesh::{MeshError, RingDepth, TriangleMesh};

/// Polygons smaller than this times `bbox_diag²` are discarded.
pub const MIN_POLYGON_AREA_FACTOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ClipError {
    #[error("clipping by host facet {0} left nothing of the cell")]
    EmptyAfterHostClip(usize),
    #[error("host facet {0} has no cross-section with the cell")]
    NoCrossSection(usize),
}

/// Facets near a host facet that may take part in clipping its site's cell.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborFacetSet {
    pub facets: Vec<usize>,
    pub d_max: f64,
}

/// Two-ring facets of `host` whose centroids lie within `2 * d_max` of the
/// host centroid.
pub fn build_fnear(mesh: &TriangleMesh, host: usize, d_max: f64) -> Result<NeighborFacetSet, MeshError> {
    let c = mesh.face_centroid(host);
    let reach = 2.0 * d_max;
    let facets = mesh
        .face_ring(host, RingDepth::Two)?
        .into_iter()
        .filter(|&f| mesh.face_centroid(f).distance(c) <= reach)
        .collect();
    Ok(NeighborFacetSet { facets, d_max })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClipDecision {
    pub level: u8,
    pub f_t: usize,
    pub f_u: Option<usize>,
    pub f_v: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_v: Option<f64>,
}

impl ClipDecision {
    pub fn single(f_t: usize) -> Self {
        Self {
            level: 1,
            f_t,
            f_u: None,
            f_v: None,
            score_u: None,
            score_v: None,
        }
    }

    /// Drops clips beyond `max_clips`.
    pub fn capped(mut self, max_clips: u8) -> Self {
        if max_clips < 3 {
            self.f_v = None;
            self.score_v = None;
        }
        if max_clips < 2 {
            self.f_u = None;
            self.score_u = None;
        }
        self.level = self.level.min(max_clips.max(1));
        self
    }

    pub fn facets(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.f_t).chain(self.f_u).chain(self.f_v)
    }
}

fn abs_cos(mesh: &TriangleMesh, a: usize, b: usize) -> f64 {
    mesh.face_normal(a).dot(mesh.face_normal(b)).abs()
}

fn centroid_distance(mesh: &TriangleMesh, a: usize, b: usize) -> f64 {
    mesh.face_centroid(a).distance(mesh.face_centroid(b))
}

/// Lowest score, ties to the lowest facet id. Inputs are in ascending id order.
fn argmin(scored: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    scored.fold(None, |best, (f, s)| match best {
        Some((_, b)) if b <= s => best,
        _ => Some((f, s)),
    })
}

/// Score of a second-facet candidate: `|cos| + dis / d_max` against the host.
pub fn score_a(mesh: &TriangleMesh, host: usize, f: usize, d_max: f64) -> f64 {
    abs_cos(mesh, f, host) + centroid_distance(mesh, f, host) / d_max
}

/// Candidate-dependent part of the third-facet score, measured against both
/// the host and the second facet.
pub fn score_b(mesh: &TriangleMesh, host: usize, second: usize, f: usize, d_max: f64) -> f64 {
    score_a(mesh, host, f, d_max) + score_a(mesh, second, f, d_max)
}

/// Best facet whose normal deviates from the host's by `|cos| < alpha`.
pub fn select_second_facet(
    mesh: &TriangleMesh,
    fnear: &NeighborFacetSet,
    host: usize,
    alpha: f64,
    d_max: f64,
) -> Option<(usize, f64)> {
    argmin(
        fnear
            .facets
            .iter()
            .filter(|&&f| abs_cos(mesh, f, host) < alpha)
            .map(|&f| (f, score_a(mesh, host, f, d_max))),
    )
}

fn third_eligible(mesh: &TriangleMesh, host: usize, second: usize, beta: f64, f: usize) -> bool {
    abs_cos(mesh, f, host) < beta && abs_cos(mesh, f, second) < beta
}

/// Best facet deviating by `|cos| < beta` from both the host and the second facet.
pub fn select_third_facet(
    mesh: &TriangleMesh,
    fnear: &NeighborFacetSet,
    host: usize,
    second: usize,
    beta: f64,
    d_max: f64,
) -> Option<(usize, f64)> {
    argmin(
        fnear
            .facets
            .iter()
            .filter(|&&f| f != second && third_eligible(mesh, host, second, beta, f))
            .map(|&f| (f, score_b(mesh, host, second, f, d_max))),
    )
}

/// Decides how many facet planes clip the cell of a site hosted on `host`.
pub fn curvature_level(
    mesh: &TriangleMesh,
    fnear: &NeighborFacetSet,
    host: usize,
    alpha: f64,
    beta: f64,
) -> ClipDecision {
    let mut d = ClipDecision::single(host);
    let Some((u, su)) = select_second_facet(mesh, fnear, host, alpha, fnear.d_max) else {
        return d;
    };
    d.level = 2;
    d.f_u = Some(u);
    d.score_u = Some(su);
    if let Some((v, sv)) = select_third_facet(mesh, fnear, host, u, beta, fnear.d_max) {
        d.level = 3;
        d.f_v = Some(v);
        d.score_v = Some(sv);
    }
    d
}

/// A cross-section of the cell lying in one facet's plane.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetPolygon {
    pub facet: usize,
    pub vertices: Vec<DVec3>,
    pub area: f64,
    pub centroid: DVec3,
}

impl FacetPolygon {
    pub fn new(facet: usize, vertices: Vec<DVec3>) -> Self {
        let (area, centroid) = polygon_area_centroid(&vertices);
        Self {
            facet,
            vertices,
            area,
            centroid,
        }
    }
}

/// Area and area centroid of a planar convex polygon by fan triangulation.
pub fn polygon_area_centroid(poly: &[DVec3]) -> (f64, DVec3) {
    if poly.len() < 3 {
        return (0.0, poly.first().copied().unwrap_or(DVec3::ZERO));
    }
    let mut area = 0.0;
    let mut weighted = DVec3::ZERO;
    for k in 1..poly.len() - 1 {
        let a = 0.5 * (poly[k] - poly[0]).cross(poly[k + 1] - poly[0]).length();
        area += a;
        weighted += a * (poly[0] + poly[k] + poly[k + 1]) / 3.0;
    }
    if area > 0.0 {
        (area, weighted / area)
    } else {
        let mean = poly.iter().copied().sum::<DVec3>() / poly.len() as f64;
        (0.0, mean)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClippedFacets {
    pub polygons: Vec<FacetPolygon>,
    /// The decision actually applied (level 1 after a fallback).
    pub decision: ClipDecision,
    pub fell_back: bool,
}

impl ClippedFacets {
    pub fn total_area(&self) -> f64 {
        self.polygons.iter().map(|p| p.area).sum()
    }

    /// Largest distance from `p` to any polygon vertex.
    pub fn max_distance_from(&self, p: DVec3) -> f64 {
        self.polygons
            .iter()
            .flat_map(|poly| poly.vertices.iter())
            .map(|v| v.distance(p))
            .fold(0.0, f64::max)
    }
}

/// Half-space below facet `f`'s supporting plane (outward normal side removed).
pub fn facet_halfspace(mesh: &TriangleMesh, f: usize) -> HalfSpace {
    HalfSpace::through(mesh.triangle(f)[0], mesh.outward_normal(f), PlaneTag::Facet(f))
}

fn clip_sequence(cell: &ConvexCell, facets: &[usize], mesh: &TriangleMesh) -> Result<Vec<FacetPolygon>, ClipError> {
    let min_area = MIN_POLYGON_AREA_FACTOR * mesh.bbox_diag().powi(2);
    let mut c = cell.clone();
    for (i, &f) in facets.iter().enumerate() {
        if c.clip(&facet_halfspace(mesh, f)) == ClipOutcome::Empty {
            if i == 0 {
                return Err(ClipError::EmptyAfterHostClip(f));
            }
            return Ok(Vec::new());
        }
    }
    let mut polygons = Vec::with_capacity(facets.len());
    for &f in facets {
        let face = c.face_on_plane(PlaneTag::Facet(f)).expect("facet plane was applied");
        if let Some(vertices) = face {
            let poly = FacetPolygon::new(f, vertices);
            if poly.area >= min_area {
                polygons.push(poly);
            }
        }
    }
    Ok(polygons)
}

/// Clips the cell by the planes of `f_t`, `f_u`, `f_v` in that order and
/// returns the cross-sections lying in those planes. Falls back to the host
/// plane alone when the multi-plane clip leaves no host cross-section.
pub fn clip_cell_by_facets(
    cell: &ConvexCell,
    decision: &ClipDecision,
    mesh: &TriangleMesh,
) -> Result<ClippedFacets, ClipError> {
    let facets: Vec<usize> = decision.facets().collect();
    let polygons = clip_sequence(cell, &facets, mesh)?;
    if polygons.iter().any(|p| p.facet == decision.f_t) {
        return Ok(ClippedFacets {
            polygons,
            decision: *decision,
            fell_back: false,
        });
    }
    if decision.level == 1 {
        return Err(ClipError::NoCrossSection(decision.f_t));
    }
    let polygons = clip_sequence(cell, &[decision.f_t], mesh)?;
    if polygons.is_empty() {
        return Err(ClipError::NoCrossSection(decision.f_t));
    }
    Ok(ClippedFacets {
        polygons,
        decision: ClipDecision::single(decision.f_t),
        fell_back: true,
    })
}
