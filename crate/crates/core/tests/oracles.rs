mod common;

use common::*;
use dre::check::box_qp_instance;
use dre::functions::{moreau_gradient, moreau_value};
use dre::numerics::{extreme_eigenvalues, factor_spd, solve_with};
use dre::problems::{gen_box_qp, gen_sparse_ls, reference_solve};
use dre::solvers::optimal_gamma;
use dre::{CompositeProblem, ConvexQuadratic, DenseMatrix, LeastSquaresQuadratic, ProxFunction, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let b = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DenseMatrix::identity(n, n) * 0.1
}

#[test]
fn cholesky_matches_gaussian_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 5, 17, 40] {
        let a = random_spd(&mut rng, n);
        let b = Vector::from_fn(n, |_, _| rng.gen_range(-5.0..5.0));
        let x = solve_with(&factor_spd(&a).unwrap(), &b).unwrap();
        let y = gauss_solve(&a, &b);
        assert!((&x - &y).norm() <= 1e-9 * (1.0 + y.norm()), "n = {n}");
        assert!((&a * &x - &b).norm() <= 1e-10 * (1.0 + b.norm()));
    }
}

#[test]
fn extreme_eigenvalues_match_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [1, 3, 8, 30] {
        let a = random_spd(&mut rng, n);
        let ev = jacobi_eigenvalues(&a);
        let (mu, l) = extreme_eigenvalues(&a).unwrap();
        assert!((mu - ev[0]).abs() <= 1e-10 * ev[n - 1], "n = {n}");
        assert!((l - ev[n - 1]).abs() <= 1e-10 * ev[n - 1], "n = {n}");
    }
}

#[test]
fn box_qp_spectrum_matches_jacobi() {
    let inst = gen_box_qp(12, 4, 50.0, 1.0).unwrap();
    let ev = jacobi_eigenvalues(&inst.q_mat);
    assert!((ev[0] - 1.0 / 50.0).abs() < 1e-10);
    assert!((ev[11] - 1.0).abs() < 1e-10);
}

#[test]
fn reference_solve_agrees_with_active_set_enumeration() {
    for seed in 1..=20u64 {
        let n = 1 + (seed as usize % 8);
        let inst = gen_box_qp(n, seed, 30.0, 0.5).unwrap();
        let (x_exact, f_exact) =
            box_qp_by_enumeration(&inst.q_mat, &inst.q_vec, &inst.lower, &inst.upper);
        let prob = inst.to_problem().unwrap();
        let r = reference_solve(&prob, optimal_gamma(prob.l_f()).unwrap()).unwrap();
        assert!((r.f_star - f_exact).abs() <= 1e-8 * (1.0 + f_exact.abs()), "seed {seed}");
        assert!((&r.x_star - &x_exact).norm() <= 1e-6, "seed {seed}");
    }
}

#[test]
fn planted_sparse_ls_is_optimal() {
    for seed in 1..=5u64 {
        let inst = gen_sparse_ls(15, 40, seed, 0.7, 3).unwrap();
        let prob = inst.to_problem().unwrap();
        let r = reference_solve(&prob, optimal_gamma(prob.l_f()).unwrap()).unwrap();
        let f = inst.planted_objective();
        assert!((r.f_star - f).abs() <= 1e-8 * (1.0 + f.abs()), "seed {seed}");
        assert!((&r.x_star - &inst.x_plant).norm() <= 1e-6 * (1.0 + inst.x_plant.norm()));
    }
}

#[test]
fn l1_prox_matches_direct_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = ProxFunction::l1(0.8, 6).unwrap();
    for _ in 0..20 {
        let x = Vector::from_fn(6, |_, _| rng.gen_range(-3.0..3.0));
        let gamma = rng.gen_range(0.05..2.0);
        let p = g.prox(gamma, &x).unwrap();
        let oracle = separable_prox_search(|_, z| 0.8 * z.abs(), gamma, &x, 5.0);
        assert!((&p - &oracle).amax() < 1e-7);
    }
}

#[test]
fn quadratic_prox_matches_gaussian_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let q = random_spd(&mut rng, 7);
    let c = Vector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0));
    let f = ConvexQuadratic::new(q.clone(), c.clone()).unwrap();
    let x = Vector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0));
    let gamma = 0.3;
    let lhs = DenseMatrix::identity(7, 7) + &q * gamma;
    let expected = gauss_solve(&lhs, &(&x - &c * gamma));
    assert!((f.prox(gamma, &x).unwrap() - expected).norm() < 1e-12);
}

#[test]
fn wide_least_squares_matches_explicit_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let a = DenseMatrix::from_fn(4, 9, |_, _| rng.gen_range(-1.0..1.0));
    let b = Vector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
    let ls = LeastSquaresQuadratic::new(a.clone(), b.clone()).unwrap();
    let ata = a.transpose() * &a;
    let (_, l) = ls.curvature();
    for gamma in [0.1 / l, 0.9 / l] {
        let v = Vector::from_fn(9, |_, _| rng.gen_range(-1.0..1.0));
        let plus = gauss_solve(&(DenseMatrix::identity(9, 9) + &ata * gamma), &v);
        let minus = gauss_solve(&(DenseMatrix::identity(9, 9) - &ata * gamma), &v);
        assert!((ls.resolvent_apply(gamma, &v).unwrap() - plus).norm() < 1e-10);
        assert!((ls.reflected_inverse_apply(gamma, &v).unwrap() - minus).norm() < 1e-9);
    }
}

#[test]
fn moreau_envelope_gradient_matches_finite_differences() {
    let g = ProxFunction::l1(1.3, 5).unwrap();
    let x = Vector::from_vec(vec![0.3, -2.0, 1.1, 0.0, 4.0]);
    let gamma = 0.7;
    let fd = central_difference(|y| moreau_value(&g, gamma, y).unwrap(), &x);
    assert!((moreau_gradient(&g, gamma, &x).unwrap() - fd).amax() < 1e-6);
}

#[test]
fn dre_gradient_matches_finite_differences() {
    let inst = box_qp_instance(5, 3, 20.0).unwrap();
    let prob: &CompositeProblem = &inst.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let gamma = 0.6 / prob.l_f();
    for _ in 0..20 {
        let x = Vector::from_fn(5, |_, _| rng.gen_range(-3.0..3.0));
        let fd = central_difference(|y| prob.dre_value(gamma, y).unwrap(), &x);
        let g = prob.dre_gradient(gamma, &x).unwrap();
        assert!((&g - &fd).norm() <= 1e-5 * g.norm().max(1.0));
    }
}
