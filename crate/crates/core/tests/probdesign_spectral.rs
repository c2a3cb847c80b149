use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcdnet::graph::{enumerate_paths, make_topology, PathSet, Topology};
use rcdnet::objective::make_quad_logistic;
use rcdnet::probdesign::{
    assemble_g_tau, assemble_matrix, build_sdp, compute_sigma_g, design_max_lambda2,
    design_max_sigma, dist_inverse_lipschitz, dist_uniform, export_sdp, g_path, lambda2,
    lambda2_feasible_point, lambda2_pair, sidecar_path, SdpKind, SdpaProblem, StepRule,
};
use rcdnet::solver::direction_from_gradients;
use rcdnet::PathDistribution;

fn paths(topology: Topology, n: usize, tau: usize) -> Arc<PathSet> {
    let g = make_topology(topology, n).unwrap();
    Arc::new(enumerate_paths(&g, tau, None, 0).unwrap())
}

fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.01).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn lips(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..20.0)).collect()
}

#[test]
fn path_matrix_reproduces_the_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let l = lips(&mut rng, 6);
    let path = [4, 1, 3, 0];
    let grads: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
    let lp: Vec<f64> = path.iter().map(|&i| l[i]).collect();
    let mut d = vec![0.0; 4];
    direction_from_gradients(&lp, &grads, 1, &mut d);
    let gn = g_path(&l, &path);
    let applied = &gn * DVector::from_vec(grads);
    for k in 0..4 {
        assert!((applied[k] + d[k]).abs() < 1e-12);
    }
}

#[test]
fn assembly_is_linear_and_annihilates_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ps = paths(Topology::Complete, 6, 3);
    let l = lips(&mut rng, 6);
    let p = random_simplex(&mut rng, ps.len());
    let q = random_simplex(&mut rng, ps.len());
    let theta = 0.3;
    let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
    let lhs = assemble_matrix(&l, ps.paths(), &mix);
    let rhs = assemble_matrix(&l, ps.paths(), &p) * theta + assemble_matrix(&l, ps.paths(), &q) * (1.0 - theta);
    assert!((lhs.clone() - rhs).amax() < 1e-12);
    let ones = DVector::from_element(6, 1.0);
    assert!((&lhs * ones).amax() < 1e-12);
    assert!(lhs.symmetric_eigenvalues().min() > -1e-12);
}

#[test]
fn lambda2_is_concave_in_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ps = paths(Topology::Ring, 7, 3);
    let l = lips(&mut rng, 7);
    for _ in 0..20 {
        let p = random_simplex(&mut rng, ps.len());
        let q = random_simplex(&mut rng, ps.len());
        let theta: f64 = rng.random();
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
        let f = |v: &[f64]| lambda2_pair(&assemble_matrix(&l, ps.paths(), v)).0;
        assert!(f(&mix) >= theta * f(&p) + (1.0 - theta) * f(&q) - 1e-12);
    }
}

#[test]
fn lambda2_matches_dense_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ps = paths(Topology::Complete, 5, 2);
    let l = lips(&mut rng, 5);
    let g = assemble_g_tau(&l, &dist_uniform(&ps)).unwrap();
    let mut eig: Vec<f64> = g.matrix().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    assert!(eig[0].abs() < 1e-12);
    assert!((lambda2(&g) - eig[1]).abs() < 1e-12);
    // adding a multiple of e e^T only moves the zero eigenvalue
    let shifted = g.matrix() + DMatrix::from_element(5, 5, 10.0);
    let mut s: Vec<f64> = shifted.symmetric_eigenvalues().iter().copied().collect();
    s.sort_by(f64::total_cmp);
    for k in 1..4 {
        assert!((s[k - 1] - eig[k]).abs() < 1e-10);
    }
    assert!((s[4] - 50.0).abs() < 1e-10);
}

#[test]
fn implicit_complete_distribution_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let l = lips(&mut rng, 6);
    for tau in 2..=6 {
        let implicit = PathDistribution::complete_inverse_lipschitz(tau, &l).unwrap();
        let explicit = dist_inverse_lipschitz(&paths(Topology::Complete, 6, tau), &l).unwrap();
        let a = assemble_g_tau(&l, &implicit).unwrap();
        let b = assemble_g_tau(&l, &explicit).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-12, "tau {tau}");
    }
}

#[test]
fn sigma_g_matches_shift_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ps = paths(Topology::Complete, 3, 2);
    let l = lips(&mut rng, 3);
    let sigma: Vec<f64> = l.iter().map(|v| v * rng.random_range(0.1..0.9)).collect();
    let g = assemble_g_tau(&l, &dist_uniform(&ps)).unwrap();
    let target = compute_sigma_g(&g, &sigma).unwrap();
    let dh = DMatrix::from_diagonal(&DVector::from_iterator(3, sigma.iter().map(|s| s.sqrt())));
    let ee = DMatrix::from_element(3, 3, 1.0);
    let mut best = f64::NEG_INFINITY;
    // lambda_min grows towards sigma_G as zeta -> inf, with an O(1/zeta) gap;
    // beyond ~1e5 the eigensolver's absolute error dominates.
    for k in 0..=400 {
        let zeta = 10f64.powf(-4.0 + 9.0 * k as f64 / 400.0);
        let m = &dh * (g.matrix() + &ee * zeta) * &dh;
        best = best.max(m.symmetric_eigenvalues().min());
    }
    assert!(best <= target + 1e-9);
    assert!(target - best < 1e-4 * target, "{target} vs grid {best}");
    assert!((0.0..=1.0).contains(&target));
}

#[test]
fn designed_lambda2_beats_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ps = paths(Topology::Star, 6, 2);
    let l = lips(&mut rng, 6);
    let d = design_max_lambda2(&ps, &l, 300, StepRule::default()).unwrap();
    let uni = lambda2(&assemble_g_tau(&l, &dist_uniform(&ps)).unwrap());
    assert!((d.start_value - uni).abs() < 1e-12);
    assert!(d.value >= uni);
    let got = lambda2(&assemble_g_tau(&l, &d.distribution).unwrap());
    assert!((got - d.value).abs() < 1e-10);
    let p = d.distribution.probabilities().unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(p.iter().all(|&v| v >= 0.0));
}

#[test]
fn designed_sigma_at_least_inverse_lipschitz() {
    let obj = make_quad_logistic(6, 3).unwrap();
    let l = obj.lipschitz().to_vec();
    let sigma: Vec<f64> = obj.strong_convexity().unwrap().iter().map(|s| s.max(0.5)).collect();
    let ps = paths(Topology::Complete, 6, 2);
    let probinv = dist_inverse_lipschitz(&ps, &l).unwrap();
    let reference = compute_sigma_g(&assemble_g_tau(&l, &probinv).unwrap(), &sigma).unwrap();
    let d = design_max_sigma(&ps, &l, &sigma, 2000, StepRule::default()).unwrap();
    assert!(
        d.value >= reference * (1.0 - 1e-3),
        "designed {} vs probinv {reference}",
        d.value
    );
}

#[test]
fn sdp_export_round_trip() {
    let ps = paths(Topology::Complete, 4, 3);
    let l = [1.0, 2.0, 4.0, 8.0];
    let radii = vec![1.0, 0.5, 2.0, 1.5];
    let dir = tempfile::tempdir().unwrap();
    for kind in [SdpKind::RadiusBound { radii: radii.clone() }, SdpKind::MaxLambda2] {
        let out = dir.path().join("design.dat-s");
        let sidecar = export_sdp(&ps, &l, &kind, &out).unwrap();
        assert_eq!(sidecar, sidecar_path(&out));
        assert!(std::fs::read_to_string(&sidecar).unwrap().contains('p'));
        let parsed = SdpaProblem::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let (built, _) = build_sdp(&ps, &l, &kind).unwrap();
        assert_eq!(parsed.block_struct, built.block_struct);
        assert_eq!(parsed.c, built.c);
        assert_eq!(parsed.entries.len(), built.entries.len());
        for (a, b) in parsed.entries.iter().zip(&built.entries) {
            assert_eq!((a.matno, a.block, a.i, a.j), (b.matno, b.block, b.i, b.j));
            assert!((a.value - b.value).abs() <= 1e-15 * b.value.abs());
        }
    }
}

#[test]
fn uniform_point_is_feasible_for_radius_sdp() {
    let ps = paths(Topology::Ring, 5, 3);
    let l = [1.0, 3.0, 2.0, 5.0, 4.0];
    let radii = vec![1.0, 2.0, 0.5, 1.0, 1.5];
    let (prob, _) = build_sdp(&ps, &l, &SdpKind::RadiusBound { radii: radii.clone() }).unwrap();
    let p = dist_uniform(&ps).probabilities().unwrap().to_vec();
    let x = lambda2_feasible_point(&ps, &l, &p);
    assert!(prob.min_slack_eigenvalue(&x) > -1e-9);
    let l2 = lambda2_pair(&assemble_matrix(&l, ps.paths(), &p)).0;
    let expect: f64 = radii.iter().map(|r| r * r).sum::<f64>() / l2;
    // SDPA minimizes c^T x
    assert!((prob.objective(&x) - expect).abs() < 1e-9 * expect);
}
