use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tukey_core::hardgen::{assignment_to_point, planted_formula, point_to_assignment, reduce_to_regression};
use tukey_core::io::{read_instance, write_instance, CsvLayout};
use tukey_core::linalg::{leverage_scores, thin_factorize};
use tukey_core::msketch::{draw_sketch, SketchSpec};
use tukey_core::rowsample::{sample_step, SampleConfig, WeightVector};
use tukey_core::solver::{irls_solve, SolveOptions};
use tukey_core::{LossSpec, Mat, RegressionInstance};

fn gaussian(n: usize, d: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng)).unwrap()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn any_loss() -> impl Strategy<Value = LossSpec> {
    prop_oneof![
        (0.1f64..20.0).prop_map(|t| LossSpec::tukey(t).unwrap()),
        (0.1f64..20.0, 1.0f64..=2.0).prop_map(|(t, p)| LossSpec::clipped(t, p).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn loss_is_symmetric(loss in any_loss(), a in -100.0f64..100.0) {
        prop_assert_eq!(loss.value(a), loss.value(-a));
    }

    #[test]
    fn loss_is_monotone(loss in any_loss(), a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let (hi, lo) = if a.abs() >= b.abs() { (a, b) } else { (b, a) };
        prop_assert!(loss.value(hi) >= loss.value(lo));
    }

    #[test]
    fn loss_growth_is_at_most_p(loss in any_loss(), a in 1e-6f64..50.0, b in 1e-6f64..50.0) {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        let bound = (hi / lo).powf(loss.p());
        prop_assert!(loss.value(hi) / loss.value(lo) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn small_perturbations_change_loss_slightly(loss in any_loss(), a in -50.0f64..50.0, t in -1.0f64..1.0) {
        prop_assume!(a != 0.0);
        let eps = 1e-3;
        let rel = (loss.value(a + t * eps * a.abs()) / loss.value(a) - 1.0).abs();
        prop_assert!(rel <= 10.0 * eps);
    }

    #[test]
    fn irls_weight_vanishes_beyond_tau(loss in any_loss(), r in 1.0f64..10.0) {
        prop_assert_eq!(loss.irls_weight(r * loss.tau() * 1.0001).unwrap(), 0.0);
    }

    #[test]
    fn leverage_is_basis_invariant(seed in 0u64..1000, d in 1usize..5) {
        let a = gaussian(30, d, seed);
        let g = gaussian(d, d, seed + 1);
        prop_assume!(thin_factorize(&g).unwrap().rank() == d);
        let mut ag = Vec::new();
        for row in a.to_dense_rows() {
            ag.push((0..d).map(|j| (0..d).map(|k| row[k] * g.get(k, j)).sum()).collect());
        }
        let ag = Mat::from_rows(&ag).unwrap();
        let (l1, l2) = (leverage_scores(&a).unwrap(), leverage_scores(&ag).unwrap());
        for (u, v) in l1.iter().zip(&l2) {
            prop_assert!((u - v).abs() <= 1e-8);
        }
    }

    #[test]
    fn leverage_bounds_and_mass(seed in 0u64..1000, n in 1usize..40, d in 1usize..6, dup in proptest::bool::ANY) {
        let mut rows = gaussian(n, d, seed).to_dense_rows();
        if dup && d > 1 {
            for r in &mut rows { r[d - 1] = r[0]; }
        }
        let a = Mat::from_rows(&rows).unwrap();
        let lev = leverage_scores(&a).unwrap();
        let rank = thin_factorize(&a).unwrap().rank();
        prop_assert!(lev.iter().all(|&t| (-1e-12..=1.0 + 1e-12).contains(&t)));
        prop_assert!((lev.iter().sum::<f64>() - rank as f64).abs() <= 1e-8);
    }

    #[test]
    fn orthonormal_leverage_is_row_norm(seed in 0u64..1000, d in 1usize..5) {
        let a = gaussian(25, d, seed);
        let q = thin_factorize(&a).unwrap().q_matrix();
        let qm = Mat::from_fn(25, d, |i, j| q[(i, j)]).unwrap();
        let lev = leverage_scores(&qm).unwrap();
        for (i, t) in lev.iter().enumerate() {
            prop_assert!((t - qm.row(i).norm_sq()).abs() <= 1e-10);
        }
    }

    #[test]
    fn sketch_is_linear(seed in 0u64..1000, n in 64usize..400) {
        let s = draw_sketch(n, &SketchSpec::for_dim(n), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let sum: Vec<f64> = y.iter().zip(&z).map(|(a, b)| 2.0 * a - b).collect();
        let (sy, sz, ss) = (s.apply_vec(&y).unwrap(), s.apply_vec(&z).unwrap(), s.apply_vec(&sum).unwrap());
        for k in 0..ss.len() {
            prop_assert!((ss[k] - 2.0 * sy[k] + sz[k]).abs() <= 1e-10);
        }
    }

    #[test]
    fn clipped_estimate_never_exceeds_plain(seed in 0u64..1000, clip in 1usize..20) {
        let spec = SketchSpec { b: 2, c: 2, m: 4, clip: Some(clip), ..SketchSpec::for_dim(200) };
        let s = draw_sketch(200, &spec, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..200).map(|_| 3.0 * normal(&mut rng)).collect();
        let v = s.apply_vec(&z).unwrap();
        let loss = LossSpec::tukey(4.0).unwrap();
        prop_assert!(s.estimate_clipped(&v, &loss).unwrap() <= s.estimate(&v, &loss).unwrap() + 1e-12);
    }

    #[test]
    fn sample_step_shrinks_support_and_keeps_heavy(seed in 0u64..200) {
        let a = gaussian(120, 2, seed);
        let b: Vec<f64> = gaussian(120, 1, seed + 7).to_dense_rows().into_iter().map(|r| r[0]).collect();
        let dense: Vec<f64> = (0..120).map(|i| match i % 4 { 0 => 0.0, 1 => 1.0, 2 => 2.5, _ => 7.0 }).collect();
        let w = WeightVector::from_dense(&dense).unwrap();
        let mut cfg = SampleConfig::new(&LossSpec::tukey(1.0).unwrap(), 10);
        cfg.seed = seed;
        let out = sample_step(&a, &b, &w, &cfg).unwrap();
        for &i in out.weights.support() {
            prop_assert!(dense[i] > 0.0);
            prop_assert!(out.weights.get(i) <= 2.0 * dense[i] + 1e-12);
        }
        for &h in &out.heavy {
            prop_assert_eq!(out.weights.get(h), dense[h]);
        }
        out.weights.check_invariants().unwrap();
    }

    #[test]
    fn planted_assignments_cost_5cm(seed in 0u64..500, vars in 3usize..30, clauses in 0usize..60) {
        let tau = 2.0;
        let loss = LossSpec::clipped(tau, 2.0).unwrap();
        let (phi, truth) = planted_formula(vars, clauses, seed).unwrap();
        let hard = reduce_to_regression(&phi, tau, &loss).unwrap();
        prop_assert_eq!(hard.instance.nrows(), 9 * clauses);
        let cost = hard.instance.objective(&loss, &assignment_to_point(&truth, tau)).unwrap();
        prop_assert!((cost - hard.satisfiable_cost()).abs() <= 1e-9);
        prop_assert_eq!(point_to_assignment(&assignment_to_point(&truth, tau), tau), truth);
    }

    #[test]
    fn weights_agree_with_replication(seed in 0u64..200) {
        let a = gaussian(15, 2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = (0..15).map(|_| 2.0 * normal(&mut rng)).collect();
        let w: Vec<f64> = (0..15).map(|i| (1 + i % 3) as f64).collect();
        let (mut rows, mut bb) = (Vec::new(), Vec::new());
        for (i, row) in a.to_dense_rows().into_iter().enumerate() {
            for _ in 0..w[i] as usize { rows.push(row.clone()); bb.push(b[i]); }
        }
        let rep = Mat::from_rows(&rows).unwrap();
        let loss = LossSpec::tukey(1.5).unwrap();
        let opts = SolveOptions { restarts: 3, seed, ..Default::default() };
        let r1 = irls_solve(&a, &b, Some(&w), &loss, &opts).unwrap();
        let r2 = irls_solve(&rep, &bb, None, &loss, &opts).unwrap();
        prop_assert!((r1.objective - r2.objective).abs() <= 1e-9 * r1.objective.max(1.0));
    }

    #[test]
    fn csv_round_trip(seed in 0u64..200, n in 1usize..20, d in 1usize..5) {
        let a = gaussian(n, d, seed);
        let b: Vec<f64> = (0..n).map(|i| i as f64 * 0.37 - 1.0).collect();
        let inst = RegressionInstance::new(a, b).unwrap().with_weights((0..n).map(|i| 1.0 + i as f64).collect()).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &inst, seed % 2 == 0).unwrap();
        let back = read_instance(&buf[..], CsvLayout { header: seed % 2 == 0, weighted: true }).unwrap();
        prop_assert_eq!(back, inst);
    }
}
