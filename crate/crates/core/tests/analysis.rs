use linkdeg::catalog::{self, scalar_field, SCALAR_FIELDS};
use linkdeg::experiment::blowup_convergence;
use linkdeg::extension::{convolve_at, det_bound_check, det_ratio, trace_error, Mollifier};
use linkdeg::sobolev::{blow_up, pointwise_inequality_check, unit_ball, w1p_norm, BlowUpSource, GridFunction, Region};
use linkdeg::MapOracle;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn field(name: &str, n: usize, res: usize) -> GridFunction {
    let corner = vec![-1.0; n];
    let sides = vec![2.0; n];
    GridFunction::sample(&scalar_field(name, n).unwrap(), &corner, &sides, &vec![res; n]).unwrap()
}

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blow_up_of_an_affine_map_is_its_linear_part(
        a in matrix(3),
        b in prop::collection::vec(-1.0f64..1.0, 3),
        x_o in prop::collection::vec(-1.0f64..1.0, 3),
        r in 0.01f64..1.0,
    ) {
        let lin = MapOracle::linear(a.clone());
        let f = lin.translated(b);
        let g = blow_up(&BlowUpSource::Oracle(&f, None), &x_o, r, 5).unwrap();
        for i in 0..g.node_count() {
            let want = lin.eval(&g.node_point(i));
            for (u, v) in g.value(i).iter().zip(&want) {
                prop_assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()) / r);
            }
        }
    }

    #[test]
    fn det_ratio_respects_the_bound(a in matrix(3), b in matrix(3)) {
        prop_assume!(a.norm() > 1e-3 || b.norm() > 1e-3);
        prop_assert!(det_ratio(&a, &b) <= 4.0 * 3f64.powf(-1.5) + 1e-12);
    }

    #[test]
    fn det_ratio_is_scale_invariant(a in matrix(2), b in matrix(2), s in 0.1f64..10.0) {
        prop_assume!(a.norm() > 1e-3 || b.norm() > 1e-3);
        let d = det_ratio(&a, &b);
        prop_assert!((det_ratio(&(&a * s), &(&b * s)) - d).abs() < 1e-9 * (1.0 + d));
    }

    #[test]
    fn extension_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, x in prop::collection::vec(-1.2f64..1.2, 2), t in 0.01f64..1.0) {
        let f = field("sine", 2, 17);
        let g = field("bump", 2, 17);
        let mix: Vec<f64> = (0..f.node_count()).map(|i| alpha * f.value(i)[0] + beta * g.value(i)[0]).collect();
        let h = GridFunction::new(f.corner.clone(), f.sides.clone(), f.resolution.clone(), 1, mix).unwrap();
        let phi = Mollifier::standard(2);
        let lhs = convolve_at(&h, &phi, &x, t)[0];
        let rhs = alpha * convolve_at(&f, &phi, &x, t)[0] + beta * convolve_at(&g, &phi, &x, t)[0];
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn w1p_norm_is_homogeneous(lambda in -5.0f64..5.0, p in 1.0f64..4.0) {
        let f = field("wave", 2, 9);
        let a = w1p_norm(&f.scaled(lambda), p, &Region::Whole).unwrap();
        let b = lambda.abs() * w1p_norm(&f, p, &Region::Whole).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + b));
    }
}

#[test]
fn sampled_determinant_ratio_stays_below_the_analytic_bound() {
    for n in 2..=4 {
        let r = det_bound_check(n, 2000, 3).unwrap();
        assert!(r.within_bound, "{r:?}");
        assert!((r.identity_ratio - r.bound).abs() < 1e-12);
        assert!((r.lambda_numeric - r.lambda).abs() < 1e-6 * r.lambda);
    }
}

#[test]
fn trace_error_shrinks_with_t() {
    let phi = Mollifier::standard(2);
    for name in SCALAR_FIELDS {
        let f = field(name, 2, 33);
        let errs: Vec<f64> = [0.4, 0.2, 0.1, 0.05, 0.025].iter().map(|&t| trace_error(&f, &phi, t, 2.0)).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{name}: {errs:?}");
    }
}

#[test]
fn pointwise_inequality_constant_is_uniform_over_fields() {
    let mut cs = Vec::new();
    for name in SCALAR_FIELDS {
        for res in [17, 33] {
            cs.push(pointwise_inequality_check(&field(name, 2, res), 400, 1).unwrap().fitted_constant);
        }
    }
    let max = cs.iter().cloned().fold(0.0, f64::max);
    assert!(cs.iter().all(|c| c.is_finite() && *c > 0.0));
    assert!(max < 10.0, "{cs:?}");
}

#[test]
fn sine_sequence_converges_at_rate_one_over_k() {
    let e = catalog::get("sine-sequence").unwrap();
    let seq = e.sequence.as_ref().unwrap();
    let corner = vec![-1.0; 2];
    let sides = vec![2.0; 2];
    let limit = GridFunction::sample(&e.oracle, &corner, &sides, &[257, 257]).unwrap();
    let d: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&k| {
            let fk = GridFunction::sample(&seq(k), &corner, &sides, &[257, 257]).unwrap();
            w1p_norm(&fk.minus(&limit).unwrap(), 2.0, &Region::Whole).unwrap()
        })
        .collect();
    for w in d.windows(2) {
        let factor = w[0] / w[1];
        assert!((1.5..3.0).contains(&factor), "{d:?}");
    }
}

#[test]
fn blow_up_errors_shrink_away_from_the_origin() {
    let f = catalog::reversing_diffeo(4);
    let f_inv = catalog::reversing_diffeo_inverse(4);
    let x_o = [0.1, -0.2, 0.05, 0.3];
    let r = blowup_convergence(&f, &f_inv, &x_o, &[0.4, 0.2, 0.1], 2.0, 1.0, 11).unwrap();
    assert!(r.det_a > 0.0);
    for factor in r.forward_factors.iter().chain(&r.inverse_factors) {
        assert!(*factor >= 1.0 / 0.7, "{r:?}");
    }
}

#[test]
fn unit_ball_region_sees_only_the_ball() {
    let f = GridFunction::sample(&MapOracle::new(2, 1, |_| vec![1.0]), &[-2.0, -2.0], &[4.0, 4.0], &[81, 81]).unwrap();
    let inside = w1p_norm(&f, 1.0, &unit_ball(2)).unwrap();
    assert!((inside - std::f64::consts::PI).abs() < 0.1, "{inside}");
}
