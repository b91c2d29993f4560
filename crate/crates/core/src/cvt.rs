//! Lloyd iteration over surface sites: per-site Voronoi cell, facet clipping,
//! area-weighted centroid and projection back onto the mesh.

use std::time::Instant;

use glam::DVec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell::{compute_voronoi_cell, init_bounding_cell, ConvexCell};
use crate::clipper::{build_fnear, clip_cell_by_facets, curvature_level, ClipDecision, ClippedFacets};
use crate::mesh::{closest_point_on_triangle, sample_uniform, MeshError, SiteSet, TriangleMesh};
use crate::spatial::PointIndex;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{name} must be {expected}, got {value}")]
    OutOfRange {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },
}

#[derive(Debug, Error)]
pub enum RemeshError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub max_clips: u8,
    pub knn: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub k_proj: usize,
    pub seed: u64,
    pub padding: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 1000,
            alpha: 0.8,
            beta: 0.7,
            max_clips: 3,
            knn: 24,
            epsilon: 1e-4,
            max_iters: 100,
            k_proj: 8,
            seed: 42,
            padding: 0.05,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, name, expected, value: f64| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { name, expected, value })
            }
        };
        check((0.0..=1.0).contains(&self.alpha), "alpha", "in [0, 1]", self.alpha)?;
        check((0.0..=1.0).contains(&self.beta), "beta", "in [0, 1]", self.beta)?;
        check(
            (1..=3).contains(&self.max_clips),
            "max_clips",
            "1, 2 or 3",
            self.max_clips as f64,
        )?;
        check(self.n >= 4, "n", "at least 4", self.n as f64)?;
        check(self.knn >= 1, "knn", "at least 1", self.knn as f64)?;
        check(self.k_proj >= 1, "k_proj", "at least 1", self.k_proj as f64)?;
        check(self.epsilon >= 0.0, "epsilon", "non-negative", self.epsilon)?;
        check(
            self.padding > 0.0 && self.padding.is_finite(),
            "padding",
            "positive and finite",
            self.padding,
        )?;
        Ok(())
    }
}

/// Outcome of one site's update within an iteration.
#[derive(Clone, Debug, Serialize)]
pub struct SiteUpdate {
    pub site: usize,
    pub position: DVec3,
    pub host_facet: usize,
    /// Decision actually applied; `None` when the site could not be updated.
    pub decision: Option<ClipDecision>,
    pub fell_back: bool,
    pub secured: bool,
    /// Neighbour count used for the cell (doubled once when unsecured).
    pub knn_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub delta: f64,
    /// Site counts at clipping levels 1, 2 and 3.
    pub levels: [usize; 3],
    /// Sites whose multi-facet clip was replaced by the host-facet clip.
    pub fallbacks: usize,
    /// Sites whose cell could not be certified by the security radius.
    pub unsecured: usize,
    /// Sites left in place because no cross-section could be computed.
    pub stuck: usize,
    pub seconds: f64,
}

/// Area-weighted mean of polygon centroids; `None` for zero total area.
pub fn centroid_of_clipped(cf: &ClippedFacets) -> Option<DVec3> {
    let total = cf.total_area();
    if !(total > 0.0) {
        return None;
    }
    let sum: DVec3 = cf.polygons.iter().map(|p| p.area * p.centroid).sum();
    Some(sum / total)
}

/// Closest point to `p` among the triangles incident to its `k_proj`
/// nearest mesh vertices, with that triangle's id. Ties go to the lowest id.
pub fn project_to_surface(
    p: DVec3,
    mesh: &TriangleMesh,
    vertex_index: &PointIndex,
    k_proj: usize,
) -> (DVec3, usize) {
    let k = k_proj.min(mesh.vertex_count()).max(1);
    let near = vertex_index.knn(p, k, None).expect("k clamped to vertex count");
    let mut faces: Vec<usize> = near
        .iter()
        .flat_map(|nb| mesh.vertex_faces(nb.id).iter().copied())
        .collect();
    faces.sort_unstable();
    faces.dedup();
    let mut best = (DVec3::ZERO, usize::MAX, f64::INFINITY);
    for f in faces {
        let [a, b, c] = mesh.triangle(f);
        let q = closest_point_on_triangle(p, a, b, c);
        let d = q.distance_squared(p);
        if d < best.2 {
            best = (q, f, d);
        }
    }
    (best.0, best.1)
}

/// Immutable per-mesh state shared by all iterations.
pub struct Remesher<'a> {
    mesh: &'a TriangleMesh,
    vertex_index: PointIndex,
    bounds: ConvexCell,
    cfg: Config,
}

impl<'a> Remesher<'a> {
    pub fn new(mesh: &'a TriangleMesh, cfg: Config) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let vertex_index = PointIndex::build(mesh.vertices()).expect("mesh has vertices");
        let bounds = init_bounding_cell(mesh, cfg.padding);
        Ok(Self {
            mesh,
            vertex_index,
            bounds,
            cfg,
        })
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.mesh
    }

    pub fn vertex_index(&self) -> &PointIndex {
        &self.vertex_index
    }

    /// New position of site `i` given the current site set.
    pub fn update_site(&self, i: usize, sites: &SiteSet, index: &PointIndex) -> SiteUpdate {
        let s = sites.positions[i];
        let host = sites.host_facet[i];
        let others = sites.len() - 1;
        let mut k = self.cfg.knn;
        loop {
            let vc = compute_voronoi_cell(i, &sites.positions, index, k, &self.bounds);
            let d_max = if vc.d_max > 0.0 { vc.d_max } else { self.mesh.bbox_diag() };
            let fnear = build_fnear(self.mesh, host, d_max).expect("host facet validated");
            let decision =
                curvature_level(self.mesh, &fnear, host, self.cfg.alpha, self.cfg.beta).capped(self.cfg.max_clips);
            let clipped = clip_cell_by_facets(&vc.cell, &decision, self.mesh);
            let secured = vc.secured
                || clipped
                    .as_ref()
                    .is_ok_and(|cf| vc.secures_radius(cf.max_distance_from(s)));
            if !secured && k == self.cfg.knn && k < others {
                k = (2 * k).min(others);
                continue;
            }
            let stay = SiteUpdate {
                site: i,
                position: s,
                host_facet: host,
                decision: None,
                fell_back: false,
                secured,
                knn_used: k,
            };
            let Ok(cf) = clipped else {
                return stay;
            };
            let Some(c) = centroid_of_clipped(&cf) else {
                return stay;
            };
            let (position, host_facet) = project_to_surface(c, self.mesh, &self.vertex_index, self.cfg.k_proj);
            return SiteUpdate {
                position,
                host_facet,
                decision: Some(cf.decision),
                fell_back: cf.fell_back,
                ..stay
            };
        }
    }

    /// One Lloyd step over all sites in parallel.
    pub fn lloyd_iterate(&self, sites: &SiteSet, iteration: usize) -> (SiteSet, IterationStats, Vec<SiteUpdate>) {
        let start = Instant::now();
        let index = PointIndex::build(&sites.positions).expect("site set is non-empty");
        let updates: Vec<SiteUpdate> = (0..sites.len())
            .into_par_iter()
            .map(|i| self.update_site(i, sites, &index))
            .collect();
        let mut stats = IterationStats {
            iteration,
            delta: 0.0,
            levels: [0; 3],
            fallbacks: 0,
            unsecured: 0,
            stuck: 0,
            seconds: 0.0,
        };
        let mut max_move: f64 = 0.0;
        for (u, &old) in updates.iter().zip(&sites.positions) {
            assert!(u.position.is_finite(), "site {} moved to a non-finite position", u.site);
            max_move = max_move.max(u.position.distance(old));
            match u.decision {
                Some(d) => stats.levels[d.level as usize - 1] += 1,
                None => stats.stuck += 1,
            }
            stats.fallbacks += u.fell_back as usize;
            stats.unsecured += !u.secured as usize;
        }
        stats.delta = max_move / self.mesh.bbox_diag();
        let next = SiteSet::new(
            updates.iter().map(|u| u.position).collect(),
            updates.iter().map(|u| u.host_facet).collect(),
        );
        stats.seconds = start.elapsed().as_secs_f64();
        (next, stats, updates)
    }

    /// Iterates from `sites` until `delta <= epsilon` or `max_iters` steps.
    /// `observe` sees every iteration's stats and per-site updates.
    pub fn optimize(
        &self,
        mut sites: SiteSet,
        mut observe: impl FnMut(&IterationStats, &[SiteUpdate]),
    ) -> (SiteSet, Vec<IterationStats>) {
        let mut trace = Vec::new();
        while trace.len() < self.cfg.max_iters {
            let (next, stats, updates) = self.lloyd_iterate(&sites, trace.len());
            observe(&stats, &updates);
            sites = next;
            let done = stats.delta <= self.cfg.epsilon;
            trace.push(stats);
            if done {
                break;
            }
        }
        (sites, trace)
    }
}

#[derive(Clone, Debug)]
pub struct RemeshRun {
    pub initial: SiteSet,
    pub sites: SiteSet,
    pub stats: Vec<IterationStats>,
}

/// Samples `cfg.n` sites and optimizes them.
pub fn run_remesh(mesh: &TriangleMesh, cfg: &Config) -> Result<RemeshRun, RemeshError> {
    run_remesh_observed(mesh, cfg, |_, _| {})
}

pub fn run_remesh_observed(
    mesh: &TriangleMesh,
    cfg: &Config,
    observe: impl FnMut(&IterationStats, &[SiteUpdate]),
) -> Result<RemeshRun, RemeshError> {
    let remesher = Remesher::new(mesh, cfg.clone())?;
    let initial = sample_uniform(mesh, cfg.n, cfg.seed)?;
    let (sites, stats) = remesher.optimize(initial.clone(), observe);
    Ok(RemeshRun { initial, sites, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clipper::FacetPolygon;
    use crate::shapes::{flat_grid, icosphere};

    #[test]
    fn equal_areas_average_centroids() {
        let sq = |x: f64| {
            FacetPolygon::new(
                0,
                vec![
                    DVec3::new(x - 0.5, -0.5, 0.0),
                    DVec3::new(x + 0.5, -0.5, 0.0),
                    DVec3::new(x + 0.5, 0.5, 0.0),
                    DVec3::new(x - 0.5, 0.5, 0.0),
                ],
            )
        };
        let cf = ClippedFacets {
            polygons: vec![sq(0.0), sq(2.0)],
            decision: ClipDecision::single(0),
            fell_back: false,
        };
        assert!((centroid_of_clipped(&cf).unwrap() - DVec3::X).length() < 1e-15);
        let one = ClippedFacets {
            polygons: vec![sq(3.0)],
            ..cf
        };
        assert!((centroid_of_clipped(&one).unwrap() - DVec3::new(3.0, 0.0, 0.0)).length() < 1e-15);
    }

    #[test]
    fn projection_identity_and_foot() {
        let m = flat_grid(4);
        let idx = PointIndex::build(m.vertices()).unwrap();
        let p = DVec3::new(0.3, 0.6, 0.0);
        let (q, f) = project_to_surface(p, &m, &idx, 8);
        assert!(q.distance(p) < 1e-15);
        let [a, b, c] = m.triangle(f);
        assert!(closest_point_on_triangle(p, a, b, c).distance(p) < 1e-15);
        let (q, _) = project_to_surface(DVec3::new(0.5, 0.5, 2.0), &m, &idx, 8);
        assert!((q - DVec3::new(0.5, 0.5, 0.0)).length() < 1e-15);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            Config { alpha: 1.5, ..Config::default() },
            Config { beta: -0.1, ..Config::default() },
            Config { max_clips: 0, ..Config::default() },
            Config { max_clips: 4, ..Config::default() },
            Config { knn: 0, ..Config::default() },
            Config { n: 3, ..Config::default() },
            Config { alpha: f64::NAN, ..Config::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(Config::default().validate().is_ok());
    }

    #[test]
    fn flat_mesh_sites_are_all_level_one() {
        let m = flat_grid(8);
        let cfg = Config {
            n: 60,
            max_iters: 3,
            ..Config::default()
        };
        let run = run_remesh(&m, &cfg).unwrap();
        for s in &run.stats {
            assert_eq!(s.levels, [60, 0, 0]);
        }
        assert_eq!(run.sites.first_off_surface(&m), None);
    }

    #[test]
    fn loop_guard_semantics() {
        let m = icosphere(2);
        let huge = Config {
            n: 50,
            epsilon: f64::INFINITY,
            ..Config::default()
        };
        assert_eq!(run_remesh(&m, &huge).unwrap().stats.len(), 1);
        let none = Config {
            n: 50,
            max_iters: 0,
            ..Config::default()
        };
        let run = run_remesh(&m, &none).unwrap();
        assert!(run.stats.is_empty());
        assert_eq!(run.sites, run.initial);
    }

    #[test]
    fn max_clips_one_keeps_every_site_at_level_one() {
        let m = crate::shapes::unit_cube();
        let cfg = Config {
            n: 40,
            max_clips: 1,
            max_iters: 5,
            ..Config::default()
        };
        let run = run_remesh(&m, &cfg).unwrap();
        for s in &run.stats {
            assert_eq!(s.levels[1] + s.levels[2], 0);
        }
    }

    #[test]
    fn level_counts_sum_to_site_count() {
        let m = crate::shapes::rounded_box(0.2, 2, 4);
        let cfg = Config {
            n: 200,
            max_iters: 4,
            ..Config::default()
        };
        let run = run_remesh(&m, &cfg).unwrap();
        for s in &run.stats {
            assert_eq!(s.levels.iter().sum::<usize>() + s.stuck, 200);
            assert!(s.delta.is_finite() && s.delta >= 0.0);
        }
        assert_eq!(run.sites.first_off_surface(&m), None);
    }
}
