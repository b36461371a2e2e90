mod common;

use common::*;
use icnnm::analysis::diagnose;
use icnnm::conv::DEFAULT_EXPLICIT_CAP;
use icnnm::nalgebra::DMatrix;
use icnnm::solver::{l21_norm, objective_cnnm, objective_icnnm, prox_l21, svt};
use icnnm::synth::{crop, dead_leaves, synth_low_conv_rank};
use icnnm::{
    cnnm_solve, generate_mask, icnnm_solve, learn_ensemble_basis, DenseTensor, EigenBasis,
    KernelShape, MaskSpec, SamplingMask, SolveReport, SolverConfig, Termination,
};
use rand::Rng;

fn prox_objective(z: &DMatrix<f64>, w: &DMatrix<f64>, tau: f64) -> f64 {
    tau * l21_norm(z) + 0.5 * (z - w).norm_squared()
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn prox_with_zero_threshold_is_identity() {
    let w = random_matrix(7, 3, &mut rng(20));
    assert_eq!(prox_l21(&w, 0.0), w);
}

#[test]
fn prox_matches_scalar_oracle() {
    let mut w = DMatrix::zeros(3, 2);
    w.set_column(0, &icnnm::nalgebra::DVector::from_vec(vec![1.2, 0.0, 1.6]));
    w.set_column(1, &icnnm::nalgebra::DVector::from_vec(vec![0.0, 0.4, 0.0]));
    let tau = 0.5;
    let z = prox_l21(&w, tau);
    assert!((&z.column(0) - w.column(0) * 0.75).abs().max() < 1e-15);
    assert_eq!(z.column(1).norm(), 0.0);
    for j in 0..2 {
        let col = w.column(j).into_owned();
        let n = col.norm();
        let f = |c: f64| tau * c.abs() * n + 0.5 * (1.0 - c).powi(2) * n * n;
        let c = golden(f, 0.0, 1.0);
        // golden section resolves the minimizer to about sqrt(eps)
        assert!((z.column(j).norm() - c * n).abs() < 1e-7);
    }
}

#[test]
fn prox_column_norms_shrink_by_tau() {
    let mut r = rng(21);
    for _ in 0..20 {
        let w = random_matrix(20, 5, &mut r) * r.random_range(0.1..3.0);
        let tau = r.random_range(0.0..2.0);
        let z = prox_l21(&w, tau);
        for j in 0..5 {
            let want = (w.column(j).norm() - tau).max(0.0);
            let got = z.column(j).norm();
            assert!((got - want).abs() <= 4.0 * f64::EPSILON * want.max(f64::MIN_POSITIVE));
            assert!(got <= w.column(j).norm());
        }
    }
}

#[test]
fn prox_beats_random_perturbations() {
    let mut r = rng(22);
    let tau = 0.3;
    for _ in 0..20 {
        let w = random_matrix(20, 5, &mut r);
        let z = prox_l21(&w, tau);
        let best = prox_objective(&z, &w, tau);
        for _ in 0..1000 {
            let scale = r.random_range(1e-6..1e-1);
            let cand = &z + random_matrix(20, 5, &mut r) * scale;
            assert!(prox_objective(&cand, &w, tau) >= best - 1e-12);
        }
    }
}

#[test]
fn svt_beats_random_perturbations() {
    let mut r = rng(23);
    let tau = 0.5;
    let w = random_matrix(12, 4, &mut r);
    let (z, nuc) = svt(w.clone(), tau);
    let obj = |z: &DMatrix<f64>| tau * icnnm::solver::nuclear_norm(z) + 0.5 * (z - &w).norm_squared();
    assert!((nuc - icnnm::solver::nuclear_norm(&z)).abs() < 1e-10);
    let best = obj(&z);
    for _ in 0..500 {
        let cand = &z + random_matrix(12, 4, &mut r) * 1e-2;
        assert!(obj(&cand) >= best - 1e-12);
    }
}

fn rel(a: &DenseTensor, b: &DenseTensor) -> f64 {
    rel_err(a.values(), b.values())
}

fn cosine_instance(seed: u64) -> (DenseTensor, KernelShape, EigenBasis) {
    let ks = KernelShape::new(vec![8]).unwrap();
    let l0 = synth_low_conv_rank(&[32], &ks, 2, seed).unwrap();
    let basis = learn_ensemble_basis(&[l0.clone()], &ks).unwrap();
    (l0, ks, basis)
}

#[test]
fn fully_observed_returns_the_observation() {
    let mut r = rng(24);
    let m = random_tensor(&[6, 6], &mut r);
    let mask = SamplingMask::full(&[6, 6]).unwrap();
    let ks = KernelShape::new(vec![2, 2]).unwrap();
    let cfg = SolverConfig::default();
    let basis = learn_ensemble_basis(&[m.clone()], &ks).unwrap();
    let (a, ra) = icnnm_solve(&m, &mask, &basis, &cfg).unwrap();
    let (b, rb) = cnnm_solve(&m, &mask, &ks, &cfg).unwrap();
    assert_eq!(ra.termination, Termination::Converged);
    assert_eq!(rb.termination, Termination::Converged);
    // the penalized minimizer sits O(1 / lambda) away from the data
    assert!(rel(&a, &m) < 1e-3, "{}", rel(&a, &m));
    assert!(rel(&b, &m) < 1e-3, "{}", rel(&b, &m));
}

#[test]
fn cosine_recovered_from_quarter_missing() {
    let (l0, _, basis) = cosine_instance(1);
    let mask = generate_mask(&[32], &MaskSpec::Bernoulli { rate: 0.75, seed: 1 }).unwrap();
    let diag = diagnose(&l0, &basis, &mask, 1e-8, DEFAULT_EXPLICIT_CAP).unwrap();
    assert_eq!(diag.r_k, 2);
    // the sufficient condition does not cover 25% missing at this size
    assert!(!diag.certified_noiseless);
    let (lh, rep) = icnnm_solve(&mask.project(&l0).unwrap(), &mask, &basis, &SolverConfig::default()).unwrap();
    assert_eq!(rep.termination, Termination::Converged);
    assert!(rel(&lh, &l0) < 1e-3, "{}", rel(&lh, &l0));
}

#[test]
fn cnnm_and_icnnm_agree_with_exact_basis() {
    for seed in 0..4 {
        let (l0, ks, basis) = cosine_instance(seed);
        let mask = generate_mask(&[32], &MaskSpec::Bernoulli { rate: 0.75, seed }).unwrap();
        let obs = mask.project(&l0).unwrap();
        let cfg = SolverConfig::default();
        let (a, _) = icnnm_solve(&obs, &mask, &basis, &cfg).unwrap();
        let (b, _) = cnnm_solve(&obs, &mask, &ks, &cfg).unwrap();
        assert!(rel(&b, &l0) < 1e-3);
        assert!(rel(&a, &b) < 1e-4);
        let oi = objective_icnnm(&a, &obs, &mask, &basis, cfg.lambda).unwrap();
        let oc = objective_cnnm(&b, &obs, &mask, &ks, cfg.lambda).unwrap();
        assert!((oi - oc).abs() < 1e-6 * oc, "seed {seed}: {oi} vs {oc}");
    }
}

#[test]
fn objective_matches_explicit_matrices() {
    let mut r = rng(25);
    let ks = KernelShape::new(vec![2, 3]).unwrap();
    let l = random_tensor(&[5, 6], &mut r);
    let m = random_tensor(&[5, 6], &mut r);
    let mask = generate_mask(&[5, 6], &MaskSpec::Bernoulli { rate: 0.6, seed: 3 }).unwrap();
    let k = random_orthogonal(6, &mut r);
    let basis = EigenBasis::new(ks.clone(), k.clone(), vec![0.0; 6]).unwrap();
    let a = brute_conv_matrix(&l, &ks);
    let fit: f64 = (0..30)
        .map(|i| mask.indicator()[i] * (l.values()[i] - m.values()[i]).powi(2))
        .sum();
    let lambda = 7.0;
    let want = l21_norm(&(&a * &k)) + 0.5 * lambda * 6.0 * fit;
    let got = objective_icnnm(&l, &m, &mask, &basis, lambda).unwrap();
    assert!((got - want).abs() < 1e-10 * want);
    let nuclear: f64 = icnnm::linalg::thin_svd(&a).singular_values.sum();
    let got = objective_cnnm(&l, &m, &mask, &ks, lambda).unwrap();
    assert!((got - (nuclear + 0.5 * lambda * 6.0 * fit)).abs() < 1e-10 * got);
    let z = DenseTensor::zeros(&[5, 6]).unwrap();
    assert_eq!(objective_icnnm(&z, &z, &mask, &basis, lambda).unwrap(), 0.0);
}

fn assert_monotone_after_burn_in(rep: &SolveReport) {
    // early iterates oscillate while theta ramps up
    let burn_in = rep.objective.len() / 4;
    for (i, w) in rep.objective.windows(2).enumerate().skip(burn_in) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6), "objective rose at iteration {}: {} -> {}", i + 1, w[0], w[1]);
    }
}

#[test]
fn objective_trace_settles_monotonically() {
    for seed in 0..3 {
        let (l0, _, basis) = cosine_instance(seed);
        let mask = generate_mask(&[32], &MaskSpec::Bernoulli { rate: 0.75, seed }).unwrap();
        let (_, rep) = icnnm_solve(&mask.project(&l0).unwrap(), &mask, &basis, &SolverConfig::default()).unwrap();
        assert_monotone_after_burn_in(&rep);
    }
    let ks = KernelShape::new(vec![4, 4]).unwrap();
    let l0 = synth_low_conv_rank(&[16, 16], &ks, 4, 2).unwrap();
    let basis = learn_ensemble_basis(&[l0.clone()], &ks).unwrap();
    let mask = generate_mask(&[16, 16], &MaskSpec::Bernoulli { rate: 0.9, seed: 2 }).unwrap();
    let (_, rep) = icnnm_solve(&mask.project(&l0).unwrap(), &mask, &basis, &SolverConfig::default()).unwrap();
    assert_monotone_after_burn_in(&rep);
}

#[test]
fn converged_runs_are_feasible_and_traces_are_complete() {
    let (l0, ks, basis) = cosine_instance(2);
    let mask = generate_mask(&[32], &MaskSpec::Bernoulli { rate: 0.75, seed: 9 }).unwrap();
    let obs = mask.project(&l0).unwrap();
    let cfg = SolverConfig::default();
    for rep in [
        icnnm_solve(&obs, &mask, &basis, &cfg).unwrap().1,
        cnnm_solve(&obs, &mask, &ks, &cfg).unwrap().1,
    ] {
        assert_eq!(rep.termination, Termination::Converged);
        assert_eq!(rep.objective.len(), rep.iterations);
        assert_eq!(rep.primal_residual.len(), rep.iterations);
        assert_eq!(rep.iterate_change.len(), rep.iterations);
        assert!(*rep.primal_residual.last().unwrap() < cfg.tol_primal);
        let json = serde_json::to_string(&rep).unwrap();
        let back: SolveReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.iterations, rep.iterations);
        assert!(json.contains("\"termination\":\"converged\""));
    }
    let short = SolverConfig { max_iters: 3, ..cfg };
    let (_, rep) = icnnm_solve(&obs, &mask, &basis, &short).unwrap();
    assert_eq!(rep.termination, Termination::MaxIters);
    assert_eq!(rep.iterations, 3);
}

#[test]
fn mean_fill_reaches_the_same_solution() {
    let (l0, _, basis) = cosine_instance(3);
    let mask = generate_mask(&[32], &MaskSpec::Bernoulli { rate: 0.75, seed: 3 }).unwrap();
    let obs = mask.project(&l0).unwrap();
    let cfg = SolverConfig { init: icnnm::solver::InitFill::Mean, ..Default::default() };
    let (lh, _) = icnnm_solve(&obs, &mask, &basis, &cfg).unwrap();
    assert!(rel(&lh, &l0) < 1e-3);
}

#[test]
fn solvers_reject_mismatched_inputs() {
    let (l0, ks, basis) = cosine_instance(0);
    let mask = SamplingMask::full(&[16]).unwrap();
    let cfg = SolverConfig::default();
    assert!(icnnm_solve(&l0, &mask, &basis, &cfg).is_err());
    assert!(cnnm_solve(&l0, &mask, &ks, &cfg).is_err());
    let bad = SolverConfig { lambda: -1.0, ..Default::default() };
    assert!(icnnm_solve(&l0, &SamplingMask::full(&[32]).unwrap(), &basis, &bad).is_err());
    let big = KernelShape::new(vec![33]).unwrap();
    assert!(cnnm_solve(&l0, &SamplingMask::full(&[32]).unwrap(), &big, &cfg).is_err());
}

#[test]
fn cnnm_is_slower_with_a_large_kernel() {
    let img = dead_leaves(128, 64, 31).unwrap();
    let refs = [crop(&img, 0, 0, 64, 64).unwrap()];
    let target = crop(&img, 64, 0, 64, 64).unwrap();
    let ks = KernelShape::new(vec![13, 13]).unwrap();
    let basis = learn_ensemble_basis(&refs, &ks).unwrap();
    let mask = generate_mask(&[64, 64], &MaskSpec::BlockGrid { rate: 0.5, block: 2, seed: 0 }).unwrap();
    let obs = mask.project(&target).unwrap();
    let cfg = SolverConfig::default();
    let (_, ri) = icnnm_solve(&obs, &mask, &basis, &cfg).unwrap();
    let (_, rc) = cnnm_solve(&obs, &mask, &ks, &cfg).unwrap();
    assert!(
        rc.wall_time_secs > ri.wall_time_secs,
        "CNNM {:.3}s vs ICNNM {:.3}s",
        rc.wall_time_secs,
        ri.wall_time_secs
    );
}
