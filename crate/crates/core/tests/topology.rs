use linkdeg::catalog::{self, EntryKind};
use linkdeg::degree::{degree_sphere_map_kronecker, degree_sphere_map_simplicial, local_degree_regular, BoxDomain};
use linkdeg::experiment::{iota_linking, random_parameter_pairs, LinkGrid};
use linkdeg::geom;
use linkdeg::linking::{crossing_linking_number, gauss_linking_circles, gauss_map_degree, linking_number};
use linkdeg::mesh::{
    embed_custom, embed_iota1, embed_iota2, make_sphere_mesh, reflect_last, ProductGrid, SphereQuadrature,
};
use linkdeg::sobolev::sample_points;
use linkdeg::MapOracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circle_grid(n: usize) -> ProductGrid {
    ProductGrid::new(SphereQuadrature::uniform_circle(n), SphereQuadrature::uniform_circle(n))
}

#[test]
fn catalog_degrees_are_certified() {
    for e in catalog::entries() {
        let Some(want) = e.known_int("degree") else { continue };
        let probe = e.probe.clone().unwrap();
        let got = match e.kind {
            EntryKind::SphereMap => {
                let k = e.oracle.dim_in() - 1;
                let sphere = embed_custom(&make_sphere_mesh(k, if k == 1 { 8 } else { 3 }).unwrap(), &e.oracle).unwrap();
                degree_sphere_map_simplicial(&sphere, &probe).unwrap().rounded
            }
            _ => {
                let f = e.ball_extension.as_ref().unwrap_or(&e.oracle);
                local_degree_regular(f, e.domain.as_ref().unwrap(), &probe).unwrap().rounded
            }
        };
        assert_eq!(got, want, "{}", e.name);
    }
    let kink = catalog::get("kink-2d").unwrap();
    let d = local_degree_regular(&kink.oracle, kink.domain.as_ref().unwrap(), kink.probe.as_ref().unwrap()).unwrap();
    assert_eq!(Some(d.rounded), kink.known_int("degree at (0.5, 0.1)"));
}

#[test]
fn sense_is_the_same_at_twenty_interior_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for e in catalog::entries() {
        let Some(sense) = e.known_int("sense") else { continue };
        let n = e.oracle.dim_in();
        if n > 3 && e.name.starts_with("identity") {
            continue;
        }
        // values are images of interior points well inside the box
        let dom = e.domain.clone().unwrap_or_else(|| BoxDomain::cube(n, 1.0));
        let inner = BoxDomain::new(
            dom.lo.iter().zip(&dom.hi).map(|(l, h)| l + 0.3 * (h - l)).collect(),
            dom.lo.iter().zip(&dom.hi).map(|(l, h)| h - 0.3 * (h - l)).collect(),
        )
        .unwrap();
        let cfg = linkdeg::degree::DegreeConfig {
            seeds_per_axis: if n == 4 { 5 } else { 9 },
            boundary_samples_per_axis: Some(if n == 4 { 10 } else { 40 }),
            ..Default::default()
        };
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|a| rng.gen_range(inner.lo[a]..inner.hi[a])).collect();
            let p = e.oracle.eval(&x);
            let d = linkdeg::degree::local_degree_regular_with(&e.oracle, &dom, &p, &cfg).unwrap();
            assert_eq!(d.rounded, sense, "{} at {x:?}", e.name);
        }
    }
}

#[test]
fn circle_pairs_agree_across_three_methods() {
    for e in catalog::of_kind(EntryKind::CurvePair).iter().filter(|e| e.oracle.dim_out() == 3) {
        let partner = e.partner.as_ref().unwrap();
        let crossings = crossing_linking_number(&e.oracle, partner, 400).unwrap();
        let integral = gauss_linking_circles(&e.oracle, partner, 128).unwrap();
        let degree = linking_number(&e.oracle, partner, &circle_grid(128)).unwrap();
        assert_eq!(integral.rounded, crossings, "{}", e.name);
        assert_eq!(degree.rounded, -integral.rounded, "{}", e.name);
        assert_eq!(Some(crossings.abs()), e.known_int("|linking|"), "{}", e.name);
    }
}

#[test]
fn iota_pair_fact_and_parameter_independence() {
    let grid = LinkGrid::REFERENCE.product().unwrap();
    let e = catalog::get("iota-pair-4d").unwrap();
    let base = linking_number(&e.oracle, e.partner.as_ref().unwrap(), &grid).unwrap();
    assert_eq!(Some(base.rounded.abs()), e.known_int("|linking|"));
    for (x, y) in random_parameter_pairs(5, 99) {
        // open balls: pull the samples slightly inside
        let x: Vec<f64> = x.iter().map(|v| 0.99 * v).collect();
        let y: Vec<f64> = y.iter().map(|v| 0.99 * v).collect();
        assert_eq!(iota_linking(&x, &y, &grid).unwrap().rounded, base.rounded, "{x:?} {y:?}");
    }
}

#[test]
fn tori_images_stay_apart() {
    let m1 = make_sphere_mesh(1, 5).unwrap();
    let m2 = make_sphere_mesh(2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut params: Vec<(Vec<f64>, Vec<f64>)> = vec![
        (vec![1.0, 0.0, 0.0], vec![0.0, 1.0]),
        (vec![-1.0, 0.0, 0.0], vec![0.0, -1.0]),
        (vec![0.0, 0.0, 1.0], vec![1.0, 0.0]),
    ];
    params.extend((0..10).map(|_| {
        let x = linkdeg::experiment::random_ball_point(3, &mut rng);
        let y = linkdeg::experiment::random_ball_point(2, &mut rng);
        (x, y)
    }));
    for (x, y) in params {
        let a = embed_iota1(4, &x, &m1).unwrap();
        let b = embed_iota2(4, &y, &m2).unwrap();
        let mut min = f64::INFINITY;
        for p in &a.image_vertices {
            for q in &b.image_vertices {
                min = min.min(geom::distance(p, q));
            }
        }
        assert!(min > 0.01, "{x:?} {y:?}: {min}");
    }
}

#[test]
fn linking_is_constant_along_a_translation_homotopy() {
    let hopf = catalog::get("hopf").unwrap();
    let partner = hopf.partner.unwrap();
    let grid = circle_grid(96);
    let mut seen = None;
    for i in 0..=10 {
        let s = 0.05 * i as f64;
        let moved = hopf.oracle.translated(vec![0.0, s, 0.0]);
        let l = linking_number(&moved, &partner, &grid).unwrap();
        assert!(l.separation > 1e-3);
        assert_eq!(*seen.get_or_insert(l.rounded), l.rounded, "s = {s}");
    }
}

#[test]
fn doubling_nodes_shrinks_the_residual() {
    let e = catalog::get("torus-curve-3").unwrap();
    let partner = e.partner.as_ref().unwrap();
    let r: Vec<f64> = [12, 24, 48]
        .iter()
        .map(|&n| gauss_map_degree(&e.oracle, partner, &circle_grid(n)).unwrap().residual)
        .collect();
    assert!(r[0] >= 2.0 * r[1] && r[1] >= 2.0 * r[2], "{r:?}");
}

#[test]
fn degree_is_constant_along_homotopies_away_from_zero() {
    // z² → z² + 0.3 on the circle; identity → rotation on S²
    let k = SphereQuadrature::for_sphere(1, 7).unwrap();
    let sq = MapOracle::new(2, 2, |x| vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]]);
    let shifted = sq.translated(vec![0.3, 0.0]);
    let rot = catalog::get("hom3-rotation").unwrap().oracle;
    let id = MapOracle::identity(3);
    let k2 = SphereQuadrature::for_sphere(2, 3).unwrap();
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let lerp = |a: &MapOracle, b: &MapOracle, d: usize| {
            let (a, b) = (a.clone(), b.clone());
            MapOracle::new(d, d, move |x| {
                a.eval(x).iter().zip(b.eval(x)).map(|(u, v)| (1.0 - t) * u + t * v).collect()
            })
        };
        let f = lerp(&sq, &shifted, 2);
        let min = k.nodes.iter().map(|u| geom::norm(&f.eval(u))).fold(f64::INFINITY, f64::min);
        assert!(min > 1e-3);
        assert_eq!(degree_sphere_map_kronecker(&f, &k, false).unwrap().rounded, 2);
        let g = lerp(&id, &rot, 3);
        let min = k2.nodes.iter().map(|u| geom::norm(&g.eval(u))).fold(f64::INFINITY, f64::min);
        assert!(min > 1e-3);
        assert_eq!(degree_sphere_map_kronecker(&g, &k2, false).unwrap().rounded, 1);
    }
}

#[test]
fn local_degree_only_sees_preimages() {
    let sq = catalog::get("complex-square").unwrap().oracle;
    let p = [0.3, 0.2];
    let full = local_degree_regular(&sq, &BoxDomain::cube(2, 1.0), &p).unwrap();
    let pre = full.preimages.clone().unwrap();
    // a smaller box still holding both roots
    let reach = pre.iter().map(|q| q.point.iter().map(|v| v.abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
    let small = local_degree_regular(&sq, &BoxDomain::cube(2, reach + 0.05), &p).unwrap();
    assert_eq!(full.rounded, small.rounded);
    // a half-plane box holding one root
    let right = BoxDomain::new(vec![0.05, -1.0], vec![1.0, 1.0]).unwrap();
    assert_eq!(local_degree_regular(&sq, &right, &p).unwrap().rounded, 1);
}

#[test]
fn simplicial_and_kronecker_agree_on_sphere_maps() {
    for name in catalog::sphere_maps_with_degree() {
        let e = catalog::get(name).unwrap();
        let k = e.oracle.dim_in() - 1;
        let r = if k == 3 { 2 } else { 4 };
        let s = degree_sphere_map_simplicial(&embed_custom(&make_sphere_mesh(k, r).unwrap(), &e.oracle).unwrap(), e.probe.as_ref().unwrap())
            .unwrap();
        let q = degree_sphere_map_kronecker(&e.oracle, &SphereQuadrature::for_sphere(k, r).unwrap(), false).unwrap();
        assert_eq!(s.rounded, q.rounded, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn degree_ignores_rotations_of_the_circle(k in -3i32..=3, a in 0.0f64..6.28) {
        let f = catalog::circle_power(k);
        let rot = MapOracle::new(2, 2, move |x| vec![a.cos() * x[0] - a.sin() * x[1], a.sin() * x[0] + a.cos() * x[1]]);
        let g = f.compose(&rot);
        let sphere = embed_custom(&make_sphere_mesh(1, 7).unwrap(), &g).unwrap();
        let d = degree_sphere_map_simplicial(&sphere, &[0.37, 0.11]).unwrap();
        prop_assert_eq!(d.rounded, k as i64);
    }

    #[test]
    fn reflect_last_is_an_isometry(pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 2..8)) {
        let r = reflect_last(&pts);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                prop_assert!((geom::distance(&pts[i], &pts[j]) - geom::distance(&r[i], &r[j])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rigid_motions_keep_the_hopf_link(a in 0.0f64..6.28, b in 0.0f64..3.14, t in prop::collection::vec(-2.0f64..2.0, 3)) {
        let hopf = catalog::get("hopf").unwrap();
        let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
        let motion = MapOracle::new(3, 3, move |x| {
            let y = [ca * x[0] - sa * x[1], sa * x[0] + ca * x[1], x[2]];
            vec![y[0] + t[0], cb * y[1] - sb * y[2] + t[1], sb * y[1] + cb * y[2] + t[2]]
        });
        let before = gauss_linking_circles(&hopf.oracle, hopf.partner.as_ref().unwrap(), 64).unwrap();
        let after = gauss_linking_circles(&motion.compose(&hopf.oracle), &motion.compose(hopf.partner.as_ref().unwrap()), 64).unwrap();
        prop_assert_eq!(before.rounded, after.rounded);
    }
}

#[test]
fn homeomorphism_jacobians_have_their_recorded_sign() {
    for name in catalog::homeomorphisms_3d(1).iter().chain(&catalog::homeomorphisms_3d(-1)) {
        let e = catalog::get(name).unwrap();
        let s = e.known_int("sense").unwrap() as f64;
        for p in sample_points(e.domain.as_ref().unwrap(), 30, 4) {
            assert!(s * e.oracle.jacobian_det(&p) > 0.0, "{name}");
        }
    }
}
