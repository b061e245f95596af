//! Fixed-point properties of the mean-field game maps: linearity of the
//! best response, contraction of the composed map, agreement of Picard
//! iteration with the direct affine solve, and the accuracy-schedule
//! guarantees of the iterative solver.

mod common;

use common::rng;
use lqmf::drifted::InterceptPolicy;
use lqmf::lqr::LqModel;
use lqmf::mfc::{example_model, MeanFieldModel};
use lqmf::mfg::{
    check_assumptions, composed_map, eps_schedule, lambda1, lipschitz_constants, nash_fixed_point,
    nash_residual, solve_mfg, MeanFieldState, MfgOptions,
};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

fn example_mu() -> MeanFieldState {
    MeanFieldState::new(DVector::from_element(3, 0.5), DVector::from_element(1, 0.5))
}

fn random_mu(r: &mut rand_chacha::ChaCha20Rng, scale: f64) -> MeanFieldState {
    MeanFieldState::new(
        DVector::from_fn(3, |_, _| {
            let z: f64 = StandardNormal.sample(r);
            scale * z
        }),
        DVector::from_fn(1, |_, _| {
            let z: f64 = StandardNormal.sample(r);
            scale * z
        }),
    )
}

/// Scalar game with weak coupling; its composed map happens to be
/// nilpotent, so Picard iteration lands exactly on the fixed point.
fn scalar_game() -> MeanFieldModel {
    let base = LqModel::new(
        DMatrix::from_element(1, 1, -1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
    )
    .unwrap();
    MeanFieldModel::new(
        base,
        DMatrix::from_element(1, 1, 0.1),
        DMatrix::from_element(1, 1, 0.1),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
    )
    .unwrap()
}

#[test]
fn best_response_gain_is_state_independent() {
    let model = example_model();
    let mut r = rng(401);
    let reference = lambda1(&model, &MeanFieldState::zeros(3, 1)).unwrap();
    for _ in 0..5 {
        let mu = random_mu(&mut r, 1.0);
        let pi = lambda1(&model, &mu).unwrap();
        assert!((&pi.k - &reference.k).norm() == 0.0, "gain must not depend on the state");
    }
}

#[test]
fn best_response_intercept_is_linear() {
    let model = example_model();
    let mut r = rng(402);
    for _ in 0..10 {
        let mu1 = random_mu(&mut r, 1.0);
        let mu2 = random_mu(&mut r, 1.0);
        let (alpha, beta) = (0.7, -1.3);
        let combo = MeanFieldState::new(
            &mu1.mean_x * alpha + &mu2.mean_x * beta,
            &mu1.mean_u * alpha + &mu2.mean_u * beta,
        );
        let b1 = lambda1(&model, &mu1).unwrap().b;
        let b2 = lambda1(&model, &mu2).unwrap().b;
        let bc = lambda1(&model, &combo).unwrap().b;
        assert!((bc - (b1 * alpha + b2 * beta)).norm() <= 1e-12);
    }
}

#[test]
fn composed_map_contracts_at_rate_l0() {
    // measured in the blockwise metric the moduli are derived in
    let model = example_model();
    let l0 = lipschitz_constants(&model, None).unwrap().l0;
    let mut r = rng(403);
    for _ in 0..100 {
        let mu1 = random_mu(&mut r, 1.0);
        let mu2 = random_mu(&mut r, 1.0);
        let image_gap =
            composed_map(&model, &mu1).unwrap().block_distance(&composed_map(&model, &mu2).unwrap());
        let gap = mu1.block_distance(&mu2);
        assert!(image_gap <= l0 * gap + 1e-10, "ratio {} exceeds L0 {l0}", image_gap / gap);
    }
}

#[test]
fn picard_agrees_with_direct_fixed_point() {
    let model = example_model();
    let direct = nash_fixed_point(&model).unwrap();
    let mut r = rng(404);
    for _ in 0..5 {
        let mut mu = random_mu(&mut r, 2.0);
        for _ in 0..200 {
            let next = composed_map(&model, &mu).unwrap();
            let delta = next.distance(&mu);
            mu = next;
            if delta <= 1e-13 {
                break;
            }
        }
        assert!(mu.distance(&direct) <= 1e-9, "Picard endpoint differs by {:.3e}", mu.distance(&direct));
    }
}

#[test]
fn residual_perturbation_bound_near_fixed_point() {
    let model = example_model();
    let l0 = lipschitz_constants(&model, None).unwrap().l0;
    let mu_star = nash_fixed_point(&model).unwrap();
    let mut r = rng(405);
    for _ in 0..20 {
        let delta = random_mu(&mut r, 1e-4);
        let perturbed = MeanFieldState::new(&mu_star.mean_x + &delta.mean_x, &mu_star.mean_u + &delta.mean_u);
        let residual = composed_map(&model, &perturbed).unwrap().distance(&perturbed);
        assert!(residual <= (1.0 + l0) * delta.norm() + 1e-12);
    }
}

#[test]
fn frozen_constants_of_example_state() {
    // c_b and c_k at the bundled initial state, cross-checked externally
    let model = example_model();
    let consts = lipschitz_constants(&model, Some(&example_mu())).unwrap();
    let c_b = consts.c_b.unwrap();
    let c_k = consts.c_k.unwrap();
    assert!((c_b - 0.535071028894552).abs() <= 1e-10 * c_b);
    assert!((c_k - 3.7201921127361133).abs() <= 1e-10 * c_k);
}

#[test]
fn schedule_value_at_example_state() {
    let model = example_model();
    let eps0 = eps_schedule(&model, &example_mu(), 0, 0.01).unwrap();
    let reference = 1.7214734206871982e-7;
    assert!(
        (eps0 - reference).abs() <= 1e-9 * reference,
        "eps_0 = {eps0:.12e}, reference {reference:.12e}"
    );
}

#[test]
fn scalar_game_fixed_point_and_solver_agree() {
    let model = scalar_game();
    let direct = nash_fixed_point(&model).unwrap();

    let mu0 = MeanFieldState::new(DVector::from_element(1, 0.8), DVector::from_element(1, -0.3));
    let pi0 = InterceptPolicy::new(DMatrix::zeros(1, 1), DVector::zeros(1));
    let trace = solve_mfg(&model, &mu0, &pi0, &MfgOptions::fixed(0.1, 8, 40)).unwrap();
    assert!(trace.final_mu.distance(&direct) <= 1e-8);
    assert!(trace.contractive);
}

#[test]
fn uncoupled_game_fixes_origin_immediately() {
    let base = example_model().base;
    let model = MeanFieldModel::new(
        base,
        DMatrix::zeros(3, 3),
        DMatrix::zeros(3, 1),
        DMatrix::identity(3, 3),
        DMatrix::identity(3, 3),
        DMatrix::identity(1, 1),
    )
    .unwrap();
    let report = check_assumptions(&model);
    assert!(report.passed());
    assert!(report.l0.unwrap().abs() < 1e-14);

    let mu0 = MeanFieldState::zeros(3, 1);
    let pi0 = lambda1(&model, &mu0).unwrap();
    let trace = solve_mfg(&model, &mu0, &pi0, &MfgOptions::fixed(0.01, 3, 4)).unwrap();
    for rec in &trace.outer_records {
        assert!(rec.nash_residual_mu <= 1e-10);
        assert!(rec.nash_residual_policy <= 1e-10);
    }
}

#[test]
fn outer_error_contracts_under_accuracy_schedule() {
    let model = example_model();
    let consts = lipschitz_constants(&model, None).unwrap();
    let mu_star = nash_fixed_point(&model).unwrap();
    let eps = 1e-3;

    let pi0 = InterceptPolicy::new(DMatrix::zeros(1, 3), DVector::zeros(1));
    let trace = solve_mfg(&model, &example_mu(), &pi0, &MfgOptions::scheduled(0.005, 10, eps)).unwrap();

    for pair in trace.outer_records.windows(2) {
        let s = pair[0].s;
        let err = pair[0].mu.distance(&mu_star);
        let err_next = pair[1].mu.distance(&mu_star);
        let allowance = consts.l0 * err + eps * 2f64.powi(-(s as i32) - 2);
        assert!(
            err_next <= allowance + 1e-12,
            "round {s}: error {err_next:.3e} above allowance {allowance:.3e}"
        );
    }
}

#[test]
fn accuracy_schedule_meets_terminal_bounds() {
    let model = example_model();
    let consts = lipschitz_constants(&model, None).unwrap();
    let mu_star = nash_fixed_point(&model).unwrap();
    let pi_star = lambda1(&model, &mu_star).unwrap();
    let eps = 1e-3;

    let mu0 = example_mu();
    let distance0 = mu0.distance(&mu_star);
    let outer = ((2.0 * distance0 / eps).ln() / (1.0 / consts.l0).ln()).ceil() as usize;

    let pi0 = InterceptPolicy::new(DMatrix::zeros(1, 3), DVector::zeros(1));
    let trace = solve_mfg(&model, &mu0, &pi0, &MfgOptions::scheduled(0.005, outer, eps)).unwrap();

    assert!(trace.final_mu.distance(&mu_star) <= eps);
    assert!((&trace.final_policy.k - &pi_star.k).norm() <= eps);
    assert!((&trace.final_policy.b - &pi_star.b).norm() <= (1.0 + consts.l1) * eps);

    let (r_mu, r_pi) = nash_residual(&model, &trace.final_mu, &trace.final_policy).unwrap();
    assert!(r_mu <= (1.0 + consts.l1) * eps);
    assert!(r_pi <= (1.0 + consts.l1) * eps);
}
