//! Triangle quality, angle statistics, sampled surface deviation and the
//! combined report comparing an input mesh with its remeshed output.

use std::fmt;

use glam::DVec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{closest_point_on_triangle, sample_points, TriangleMesh};
use crate::spatial::PointIndex;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("run time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("at least {MIN_SAMPLES} samples per surface are required, got {0}")]
    TooFewSamples(usize),
}

/// `(6 / sqrt 3) * A / (S * E)`: 1 for equilateral triangles, 0 when degenerate.
pub fn triangle_quality(a: DVec3, b: DVec3, c: DVec3) -> f64 {
    let (la, lb, lc) = (b.distance(c), c.distance(a), a.distance(b));
    let longest = la.max(lb).max(lc);
    let semi = 0.5 * (la + lb + lc);
    let area = 0.5 * (b - a).cross(c - a).length();
    if !(area > 0.0 && longest > 0.0) {
        return 0.0;
    }
    (6.0 / 3f64.sqrt() * area / (semi * longest)).clamp(0.0, 1.0)
}

/// Interior angles in degrees at `a`, `b`, `c`, from the law of cosines.
pub fn triangle_angles(a: DVec3, b: DVec3, c: DVec3) -> [f64; 3] {
    let (la, lb, lc) = (b.distance(c), c.distance(a), a.distance(b));
    let angle = |opp: f64, s1: f64, s2: f64| {
        let cos = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
        cos.clamp(-1.0, 1.0).acos().to_degrees()
    };
    [angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleStats {
    pub min: f64,
    pub max: f64,
    /// Fraction of corner angles strictly below 30 degrees.
    pub lt30: f64,
    /// Fraction of corner angles strictly above 90 degrees.
    pub gt90: f64,
}

pub fn angle_stats(mesh: &TriangleMesh) -> AngleStats {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let (mut lt30, mut gt90) = (0usize, 0usize);
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.triangle(f);
        for t in triangle_angles(a, b, c) {
            min = min.min(t);
            max = max.max(t);
            lt30 += (t < 30.0) as usize;
            gt90 += (t > 90.0) as usize;
        }
    }
    let corners = (3 * mesh.face_count()) as f64;
    AngleStats {
        min,
        max,
        lt30: lt30 as f64 / corners,
        gt90: gt90 as f64 / corners,
    }
}

/// Quality minimum and mean over all faces.
pub fn quality_stats(mesh: &TriangleMesh) -> (f64, f64) {
    let q: Vec<f64> = (0..mesh.face_count())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            triangle_quality(a, b, c)
        })
        .collect();
    let min = q.iter().copied().fold(f64::INFINITY, f64::min);
    (min, q.iter().sum::<f64>() / q.len() as f64)
}

/// Exact point-to-surface distance backed by a vertex index. The closest
/// triangle always has a vertex within `r + L` of the query, where `r` is the
/// nearest-vertex distance and `L` the longest mesh edge.
pub struct SurfaceQuery<'a> {
    mesh: &'a TriangleMesh,
    index: PointIndex,
    longest_edge: f64,
}

impl<'a> SurfaceQuery<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Self {
        Self {
            mesh,
            index: PointIndex::build(mesh.vertices()).expect("mesh has vertices"),
            longest_edge: mesh.max_edge_length(),
        }
    }

    pub fn distance(&self, p: DVec3) -> f64 {
        let r = self.index.nearest(p).distance;
        let mut faces: Vec<usize> = self
            .index
            .within_radius(p, r + self.longest_edge)
            .iter()
            .flat_map(|nb| self.mesh.vertex_faces(nb.id).iter().copied())
            .collect();
        faces.sort_unstable();
        faces.dedup();
        faces
            .into_iter()
            .map(|f| {
                let [a, b, c] = self.mesh.triangle(f);
                closest_point_on_triangle(p, a, b, c).distance_squared(p)
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }
}

/// Sampled Hausdorff distance and RMS deviation between two surfaces, both
/// divided by `a`'s bounding-box diagonal and expressed in units of 1e-2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceDistance {
    pub hausdorff: f64,
    pub rms: f64,
}

/// Draws `samples` area-uniform points on each mesh and measures each
/// against the other surface. Identical meshes give exactly zero.
pub fn surface_distance(
    a: &TriangleMesh,
    b: &TriangleMesh,
    samples: usize,
    seed: u64,
) -> Result<SurfaceDistance, MetricsError> {
    if samples < MIN_SAMPLES {
        return Err(MetricsError::TooFewSamples(samples));
    }
    if a.vertices() == b.vertices() && a.faces() == b.faces() {
        return Ok(SurfaceDistance { hausdorff: 0.0, rms: 0.0 });
    }
    let one_side = |from: &TriangleMesh, to: &TriangleMesh, seed: u64| -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = sample_points(from, samples, &mut rng);
        let query = SurfaceQuery::new(to);
        let d: Vec<f64> = pts.par_iter().map(|&(p, _)| query.distance(p)).collect();
        let max = d.iter().copied().fold(0.0, f64::max);
        let sq: f64 = d.iter().map(|x| x * x).sum();
        (max, sq)
    };
    let (max_ab, sq_ab) = one_side(a, b, seed);
    let (max_ba, sq_ba) = one_side(b, a, seed.wrapping_add(1));
    let scale = 100.0 / a.bbox_diag();
    Ok(SurfaceDistance {
        hausdorff: max_ab.max(max_ba) * scale,
        rms: ((sq_ab + sq_ba) / (2 * samples) as f64).sqrt() * scale,
    })
}

/// Relative change of mean quality in percent.
pub fn quality_improvement(q_in: f64, q_out: f64) -> f64 {
    (q_out - q_in) / q_in * 100.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    #[serde(rename = "Q_min")]
    pub q_min: f64,
    #[serde(rename = "Q_avg")]
    pub q_avg: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_lt30: f64,
    pub theta_gt90: f64,
    #[serde(rename = "d_H")]
    pub d_h: f64,
    #[serde(rename = "RMS")]
    pub rms: f64,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(rename = "Q_up")]
    pub q_up: f64,
    #[serde(rename = "Q_up_per_T")]
    pub q_up_per_t: Option<f64>,
    pub n_in: usize,
    pub n_out: usize,
}

/// Full comparison of `output` against `input`. `time` is the remeshing run
/// time in seconds, if known.
pub fn quality_report(
    input: &TriangleMesh,
    output: &TriangleMesh,
    time: Option<f64>,
    samples: usize,
    seed: u64,
) -> Result<QualityReport, MetricsError> {
    if let Some(t) = time {
        if !(t > 0.0) {
            return Err(MetricsError::NonPositiveTime(t));
        }
    }
    let (_, q_in) = quality_stats(input);
    let (q_min, q_avg) = quality_stats(output);
    let angles = angle_stats(output);
    let dist = surface_distance(input, output, samples, seed)?;
    let q_up = quality_improvement(q_in, q_avg);
    Ok(QualityReport {
        q_min,
        q_avg,
        theta_min: angles.min,
        theta_max: angles.max,
        theta_lt30: angles.lt30,
        theta_gt90: angles.gt90,
        d_h: dist.hausdorff,
        rms: dist.rms,
        t: time,
        q_up,
        q_up_per_t: time.map(|t| q_up / t),
        n_in: input.vertex_count(),
        n_out: output.vertex_count(),
    })
}

impl QualityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

const COLUMNS: [&str; 12] = [
    "n", "Q_min", "Q_avg", "theta_min", "theta_max", "theta<30", "theta>90", "d_H", "RMS", "T", "Q_up", "Q_up/T",
];

/// Two-line aligned table: header, then values. Angle fractions are shown in
/// percent; missing values as `--`.
impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>, p: usize| v.map_or("--".to_string(), |x| format!("{x:.p$}"));
        let values = [
            self.n_out.to_string(),
            format!("{:.3}", self.q_min),
            format!("{:.3}", self.q_avg),
            format!("{:.2}", self.theta_min),
            format!("{:.2}", self.theta_max),
            format!("{:.3}%", 100.0 * self.theta_lt30),
            format!("{:.3}%", 100.0 * self.theta_gt90),
            format!("{:.3}", self.d_h),
            format!("{:.3}", self.rms),
            opt(self.t, 2),
            format!("{:.3}%", self.q_up),
            opt(self.q_up_per_t, 3),
        ];
        let widths: Vec<usize> = COLUMNS.iter().zip(&values).map(|(c, v)| c.len().max(v.len())).collect();
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(f, "{}", line(COLUMNS.to_vec()))?;
        writeln!(f, "{}", line(values.iter().map(String::as_str).collect()))
    }
}
