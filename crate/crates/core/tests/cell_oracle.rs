use facetclip::cell::{bisector, compute_voronoi_cell, init_bounding_cell, ClipOutcome, ConvexCell, HalfSpace, PlaneTag};
use facetclip::shapes::unit_cube;
use facetclip::spatial::PointIndex;
use glam::DVec3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_cell(i: usize, sites: &[DVec3], bounds: &ConvexCell) -> ConvexCell {
    let mut cell = bounds.clone();
    for (k, &s) in sites.iter().enumerate() {
        if k != i {
            cell.clip(&bisector(sites[i], s, k).unwrap());
        }
    }
    cell
}

fn hausdorff(a: &[DVec3], b: &[DVec3]) -> f64 {
    let one = |x: &[DVec3], y: &[DVec3]| {
        x.iter()
            .map(|p| y.iter().map(|q| q.distance(*p)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

#[test]
fn secured_knn_cells_match_all_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bounds = ConvexCell::from_box(DVec3::ZERO, DVec3::ONE, 1e-9);
    let mut secured = 0;
    for _ in 0..40 {
        let n = rng.gen_range(5..=150);
        let sites: Vec<DVec3> = (0..n).map(|_| DVec3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let index = PointIndex::build(&sites).unwrap();
        for i in 0..n {
            let vc = compute_voronoi_cell(i, &sites, &index, 24, &bounds);
            if !vc.secured {
                continue;
            }
            secured += 1;
            let brute = brute_cell(i, &sites, &bounds);
            assert!(hausdorff(vc.cell.vertices(), brute.vertices()) < 1e-7, "site {i} of {n}");
            assert!((vc.cell.volume() - brute.volume()).abs() < 1e-12);
        }
    }
    assert!(secured > 1000);
}

#[test]
fn voronoi_volumes_tile_the_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let bounds = ConvexCell::from_box(DVec3::ZERO, DVec3::ONE, 1e-9);
    let sites: Vec<DVec3> = (0..60).map(|_| DVec3::new(rng.gen(), rng.gen(), rng.gen())).collect();
    let total: f64 = (0..sites.len()).map(|i| brute_cell(i, &sites, &bounds).volume()).sum();
    assert!((total - 1.0).abs() < 1e-10, "{total}");
}

#[test]
fn bounding_cell_of_unit_cube_is_padded() {
    let cell = init_bounding_cell(&unit_cube(), 0.05);
    let pad = 0.05 * 3f64.sqrt();
    let lo = cell.vertices().iter().fold(DVec3::splat(f64::INFINITY), |m, v| m.min(*v));
    let hi = cell.vertices().iter().fold(DVec3::splat(f64::NEG_INFINITY), |m, v| m.max(*v));
    assert!((lo - DVec3::splat(-pad)).abs().max_element() < 1e-12);
    assert!((hi - DVec3::splat(1.0 + pad)).abs().max_element() < 1e-12);
    assert!((lo.x + 0.0866).abs() < 1e-4);
}

fn plane() -> impl Strategy<Value = (DVec3, f64)> {
    ((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), -1.2..1.2f64)
        .prop_filter("non-zero normal", |((x, y, z), _)| x * x + y * y + z * z > 1e-4)
        .prop_map(|((x, y, z), d)| (DVec3::new(x, y, z).normalize(), d))
}

proptest! {
    #[test]
    fn clips_keep_cells_convex_and_shrinking(planes in prop::collection::vec(plane(), 1..25)) {
        let mut cell = ConvexCell::from_box(DVec3::splat(-1.0), DVec3::splat(1.0), 1e-9);
        for (k, (n, d)) in planes.into_iter().enumerate() {
            let before = cell.volume();
            let hs = HalfSpace::new(n, d, PlaneTag::Bisector(k));
            if cell.clip(&hs) == ClipOutcome::Empty {
                break;
            }
            prop_assert!(cell.is_valid());
            prop_assert!(cell.volume() <= before + 1e-12);
            let mut again = cell.clone();
            prop_assert_eq!(again.clip(&hs), ClipOutcome::Unchanged);
            for v in cell.vertices() {
                prop_assert!(hs.signed_distance(*v) <= cell.eps());
            }
        }
    }

    #[test]
    fn plane_through_a_vertex_keeps_cell_valid(seed in any::<u64>(), picks in prop::collection::vec(plane(), 1..15)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cell = ConvexCell::from_box(DVec3::splat(-1.0), DVec3::splat(1.0), 1e-9);
        for (k, (n, _)) in picks.into_iter().enumerate() {
            let v = cell.vertices()[rng.gen_range(0..cell.vertices().len())];
            let hs = HalfSpace::through(v, n, PlaneTag::Bisector(k));
            if cell.clip(&hs) == ClipOutcome::Empty {
                break;
            }
            prop_assert!(cell.is_valid());
            prop_assert_eq!(cell.euler_characteristic(), Some(2));
        }
    }
}
