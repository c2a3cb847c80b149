use std::sync::Arc;

use proptest::prelude::*;
use rcdnet::graph::{enumerate_paths, make_topology, Topology};
use rcdnet::objective::{
    logistic, make_quad_logistic, make_quadratic, normalize_constraint, softplus, NodeFunction,
    QuadLogistic, QuadLogisticParams,
};
use rcdnet::oracle::optimal_multiplier;
use rcdnet::probdesign::dist_uniform;
use rcdnet::solver::{run, RunOptions, StopRule};
use rcdnet::BlockVector;

fn coeff() -> impl Strategy<Value = f64> {
    -15.0..15.0f64
}

fn term() -> impl Strategy<Value = QuadLogistic> {
    (coeff(), coeff(), coeff(), coeff()).prop_map(|(a, b, c, d)| QuadLogistic {
        a: a.abs(),
        b,
        c,
        d,
    })
}

fn grad(f: &dyn NodeFunction, x: f64) -> f64 {
    let mut g = [0.0];
    f.gradient(&[x], &mut g);
    g[0]
}

proptest! {
    #[test]
    fn gradient_matches_central_difference(t in term(), x in -30.0..30.0f64) {
        let h = 1e-5;
        let fd = (t.value(&[x + h]) - t.value(&[x - h])) / (2.0 * h);
        let g = grad(&t, x);
        prop_assert!((fd - g).abs() <= 1e-6 * (1.0 + g.abs()), "fd {fd} vs {g}");
    }

    #[test]
    fn gradient_is_lipschitz(t in term(), x in -30.0..30.0f64, y in -30.0..30.0f64) {
        let lhs = (grad(&t, x) - grad(&t, y)).abs();
        prop_assert!(lhs <= t.lipschitz() * (x - y).abs() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn descent_lemma(t in term(), x in -30.0..30.0f64, d in -5.0..5.0f64) {
        let upper = t.value(&[x]) + grad(&t, x) * d + 0.5 * t.lipschitz() * d * d;
        prop_assert!(t.value(&[x + d]) <= upper + 1e-9 * (1.0 + upper.abs()));
    }

    #[test]
    fn value_matches_direct_formula(t in term(), x in -30.0..30.0f64) {
        // log(1 + e^s) through ln_1p, independent of the library helper.
        let s = t.b * (x - t.d);
        let sp = if s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() };
        let direct = 0.5 * t.a * (x - t.c).powi(2) + sp;
        prop_assert!((t.value(&[x]) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn value_change_agrees_with_difference(t in term(), x in -30.0..30.0f64, d in -5.0..5.0f64) {
        let diff = t.value(&[x + d]) - t.value(&[x]);
        let vc = t.value_change(&[x], &[d]);
        prop_assert!((diff - vc).abs() <= 1e-9 * (1.0 + t.value(&[x]).abs()));
    }
}

#[test]
fn softplus_and_logistic_extremes() {
    assert_eq!(softplus(800.0), 800.0);
    assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
    assert_eq!(logistic(800.0), 1.0);
    assert!(logistic(-800.0) < 1e-300);
    assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn random_family_is_reproducible_and_in_range() {
    let a = QuadLogisticParams::random(40, 7);
    let b = QuadLogisticParams::random(40, 7);
    assert_eq!(a, b);
    assert_ne!(a, QuadLogisticParams::random(40, 8));
    for i in 0..40 {
        assert!((0.0..=15.0).contains(&a.a[i]));
        for v in [a.b[i], a.c[i], a.d[i]] {
            assert!((-15.0..=15.0).contains(&v));
        }
    }
    let obj = make_quad_logistic(40, 7).unwrap();
    for i in 0..40 {
        let t = a.term(i);
        assert_eq!(obj.lipschitz()[i], t.a + t.b * t.b / 4.0);
    }
}

#[test]
fn normalized_constraint_end_to_end() {
    // min sum a_i/2 (x_i - c_i)^2 s.t. sum alpha_i x_i = b has the closed form
    // x_i = c_i + alpha_i mu / a_i with mu = (b - sum alpha c) / sum(alpha^2/a).
    let a = [1.0, 2.0, 4.0, 0.5, 3.0];
    let c = [1.0, -2.0, 0.5, 3.0, -1.0];
    let alpha = [1.0, -2.0, 0.5, 3.0, 1.5];
    let b = 4.0;
    let obj = make_quadratic(&a, &c).unwrap();
    let (tobj, map) = normalize_constraint(&alpha, &[b], &obj).unwrap();

    let g = make_topology(Topology::Complete, 5).unwrap();
    let paths = Arc::new(enumerate_paths(&g, 2, None, 0).unwrap());
    let dist = dist_uniform(&paths);
    let report = run(
        &tobj,
        &g,
        &dist,
        BlockVector::zeros(5, 1),
        &StopRule::iterations(20_000),
        3,
        &RunOptions::default(),
    )
    .unwrap();
    let x = map.to_original(&report.x);

    let sac: f64 = alpha.iter().zip(&c).map(|(al, c)| al * c).sum();
    let saa: f64 = alpha.iter().zip(&a).map(|(al, a)| al * al / a).sum();
    let mu = (b - sac) / saa;
    for i in 0..5 {
        let expect = c[i] + alpha[i] * mu / a[i];
        assert!((x.block(i)[0] - expect).abs() < 1e-8, "node {i}");
    }
    let lhs: f64 = (0..5).map(|i| alpha[i] * x.block(i)[0]).sum();
    assert!((lhs - b).abs() < 1e-10, "constraint residual {}", lhs - b);

    let opt = optimal_multiplier(&tobj).unwrap();
    assert!((report.f - opt.f).abs() < 1e-10);
}

#[test]
fn normalize_rejects_zero_scaling() {
    let obj = make_quadratic(&[1.0; 3], &[0.0; 3]).unwrap();
    assert!(normalize_constraint(&[1.0, 0.0, 1.0], &[0.0], &obj).is_err());
    assert!(normalize_constraint(&[1.0, 1.0], &[0.0], &obj).is_err());
}
