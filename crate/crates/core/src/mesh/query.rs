use glam::DVec3;

use super::{MeshError, Result};

pub fn triangle_area(a: DVec3, b: DVec3, c: DVec3) -> f64 {
    0.5 * (b - a).cross(c - a).length()
}

/// Closest point to `p` on the closed triangle `abc`, by Voronoi-region
/// classification of `p` against the vertices, edges and interior.
pub fn closest_point_on_triangle(p: DVec3, a: DVec3, b: DVec3, c: DVec3) -> DVec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + v * ab;
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + w * ac;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Closest point on `tri` to `p` and its distance. Rejects triangles whose
/// area is negligible relative to their longest edge.
pub fn point_triangle_closest(p: DVec3, tri: [DVec3; 3]) -> Result<(DVec3, f64)> {
    let [a, b, c] = tri;
    let longest = a.distance(b).max(b.distance(c)).max(c.distance(a));
    if !(triangle_area(a, b, c) > 1e-12 * longest * longest) {
        return Err(MeshError::DegenerateTriangle);
    }
    let q = closest_point_on_triangle(p, a, b, c);
    Ok((q, p.distance(q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec3() -> impl Strategy<Value = DVec3> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| DVec3::new(x, y, z))
    }

    /// Brute-force search over a dense barycentric grid.
    fn grid_oracle(p: DVec3, a: DVec3, b: DVec3, c: DVec3, steps: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let u = i as f64 / steps as f64;
                let v = j as f64 / steps as f64;
                let q = a + u * (b - a) + v * (c - a);
                best = best.min(p.distance(q));
            }
        }
        best
    }

    #[test]
    fn point_above_interior_projects_to_foot() {
        let tri = [DVec3::ZERO, DVec3::new(2.0, 0.0, 0.0), DVec3::new(0.0, 2.0, 0.0)];
        let (q, d) = point_triangle_closest(DVec3::new(0.5, 0.5, 3.0), tri).unwrap();
        assert_eq!(q, DVec3::new(0.5, 0.5, 0.0));
        assert_eq!(d, 3.0);
    }

    #[test]
    fn vertex_is_its_own_closest_point() {
        let tri = [DVec3::new(1.0, 2.0, 3.0), DVec3::new(2.0, 0.0, 1.0), DVec3::new(-1.0, 1.0, 0.0)];
        for v in tri {
            let (q, d) = point_triangle_closest(v, tri).unwrap();
            assert_eq!(q, v);
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let tri = [DVec3::ZERO, DVec3::X, DVec3::new(2.0, 0.0, 0.0)];
        assert!(matches!(
            point_triangle_closest(DVec3::Y, tri),
            Err(MeshError::DegenerateTriangle)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_barycentric_grid(p in vec3(), a in vec3(), b in vec3(), c in vec3()) {
            prop_assume!(triangle_area(a, b, c) > 0.05);
            let (q, d) = point_triangle_closest(p, [a, b, c]).unwrap();
            // Grid spacing 1/2000 of each edge bounds the oracle's own error.
            let oracle = grid_oracle(p, a, b, c, 2000);
            let longest = a.distance(b).max(b.distance(c)).max(c.distance(a));
            prop_assert!(d <= oracle + 1e-12);
            prop_assert!(oracle - d <= longest / 2000.0);
            // The returned point is inside the closed triangle.
            let n = (b - a).cross(c - a);
            for (x, y) in [(a, b), (b, c), (c, a)] {
                prop_assert!((y - x).cross(q - x).dot(n) >= -1e-9 * n.length_squared());
            }
        }
    }

    #[test]
    fn refined_grid_agrees_to_1e6() {
        // Points near the triangle where the grid oracle is sharp enough to
        // pin the distance within 1e-6.
        let a = DVec3::new(0.1, -0.3, 0.2);
        let b = DVec3::new(1.2, 0.1, -0.1);
        let c = DVec3::new(0.3, 0.9, 0.4);
        for p in [
            DVec3::new(0.5, 0.2, 0.8),
            DVec3::new(2.0, 0.0, 0.0),
            DVec3::new(-1.0, -1.0, 0.0),
            DVec3::new(0.7, 0.6, -0.5),
        ] {
            let d = point_triangle_closest(p, [a, b, c]).unwrap().1;
            let coarse = grid_oracle(p, a, b, c, 400);
            // Local refinement around the best coarse grid point.
            let mut best = coarse;
            let steps = 4000;
            for i in 0..=steps {
                let u = i as f64 / steps as f64;
                // Closed-form minimum along each grid line in v.
                let start = a + u * (b - a);
                let dir = c - a;
                let vmax = 1.0 - u;
                let t = ((p - start).dot(dir) / dir.length_squared()).clamp(0.0, vmax);
                best = best.min(p.distance(start + t * dir));
            }
            assert!((d - best).abs() < 1e-6, "{d} vs {best}");
        }
    }
}
