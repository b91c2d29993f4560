//! Procedural test surfaces: icosahedron, icospheres, rounded boxes and flat grids.
//!
//! All closed shapes are wound counter-clockwise when seen from outside.

use std::collections::HashMap;

use glam::DVec3;

use crate::mesh::TriangleMesh;

const ICO_FACES: [[usize; 3]; 20] = [
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

fn ico_vertices() -> Vec<DVec3> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    [
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
    .map(|&(x, y, z)| DVec3::new(x, y, z).normalize())
    .collect()
}

/// Regular icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> TriangleMesh {
    TriangleMesh::new(ico_vertices(), ICO_FACES.to_vec()).expect("icosahedron is valid")
}

/// Unit icosphere with `20 * 4^subdivisions` faces.
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let mut vertices = ico_vertices();
    let mut faces = ICO_FACES.to_vec();
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<DVec3>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push((vertices[a] + vertices[b]).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh::new(vertices, faces).expect("icosphere is valid")
}

/// Axis-aligned box `[-1, 1]^3` whose edges and corners are rounded with
/// radius `radius`. Each fillet band spans `fillet_segments` rows spaced
/// uniformly in angle; the flat part of each side has `flat_segments` rows.
pub fn rounded_box(radius: f64, fillet_segments: usize, flat_segments: usize) -> TriangleMesh {
    assert!(radius > 0.0 && radius < 1.0);
    assert!(fillet_segments >= 1 && flat_segments >= 1);
    let inner = 1.0 - radius;
    // Cube-surface tick positions; fillet ticks are placed so the mapped
    // points are equally spaced in angle.
    let mut ticks = Vec::new();
    for k in 0..fillet_segments {
        let theta = std::f64::consts::FRAC_PI_4 * (1.0 - k as f64 / fillet_segments as f64);
        ticks.push(-inner - radius * theta.tan());
    }
    for k in 0..=flat_segments {
        ticks.push(-inner + 2.0 * inner * k as f64 / flat_segments as f64);
    }
    for k in 1..=fillet_segments {
        let theta = std::f64::consts::FRAC_PI_4 * (k as f64 / fillet_segments as f64);
        ticks.push(inner + radius * theta.tan());
    }
    let map = |p: DVec3| {
        let core = p.clamp(DVec3::splat(-inner), DVec3::splat(inner));
        core + radius * (p - core).normalize()
    };
    cube_surface(&ticks, map)
}

/// Triangulates the surface of the cube `[t0, tn]^3` on the tick grid and maps
/// every grid point through `map`. Grid points on shared cube edges are
/// welded by their integer coordinates.
fn cube_surface(ticks: &[f64], map: impl Fn(DVec3) -> DVec3) -> TriangleMesh {
    let last = ticks.len() - 1;
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vertex = |ijk: [usize; 3], vertices: &mut Vec<DVec3>| {
        *index.entry(ijk).or_insert_with(|| {
            vertices.push(map(DVec3::new(ticks[ijk[0]], ticks[ijk[1]], ticks[ijk[2]])));
            vertices.len() - 1
        })
    };
    // (normal axis, u axis, v axis) with u x v along +normal, for each sign.
    for axis in 0..3 {
        let (u_axis, v_axis) = ((axis + 1) % 3, (axis + 2) % 3);
        for &positive in &[true, false] {
            let fixed = if positive { last } else { 0 };
            for i in 0..last {
                for j in 0..last {
                    let corner = |di: usize, dj: usize| {
                        let mut ijk = [0; 3];
                        ijk[axis] = fixed;
                        ijk[u_axis] = i + di;
                        ijk[v_axis] = j + dj;
                        ijk
                    };
                    let a = vertex(corner(0, 0), &mut vertices);
                    let b = vertex(corner(1, 0), &mut vertices);
                    let c = vertex(corner(1, 1), &mut vertices);
                    let d = vertex(corner(0, 1), &mut vertices);
                    if positive {
                        faces.push([a, b, c]);
                        faces.push([a, c, d]);
                    } else {
                        faces.push([a, c, b]);
                        faces.push([a, d, c]);
                    }
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("cube surface is valid")
}

/// Unit square `[0,1]^2` in the z = 0 plane split into `n x n` quads.
pub fn flat_grid(n: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(DVec3::new(i as f64 / n as f64, j as f64 / n as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("grid is valid")
}

/// Axis-aligned unit cube `[0,1]^3`, two triangles per side.
pub fn unit_cube() -> TriangleMesh {
    let ticks = [0.0, 1.0];
    cube_surface(&ticks, |p| p)
}
