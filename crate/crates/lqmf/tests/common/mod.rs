//! Shared oracles and fixtures for the integration tests.
//!
//! Everything here is deliberately independent of the solver paths it
//! checks: the Lyapunov oracle integrates the matrix-exponential
//! representation with adaptive Simpson quadrature, gradients come from
//! central finite differences of the cost, and random models are drawn
//! in the slow-closed-loop regime `||A - BK|| <= 1/2` where the
//! covariance dominates the noise covariance and the perturbation and
//! domination inequalities provably apply.

#![allow(dead_code)]

use lqmf::lqr::{ergodic_cost, GainPolicy, LqModel};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Evaluates `int_0^T e^{W t} S e^{W^T t} dt` over one panel with
/// composite Simpson refinement until two refinements agree.
fn simpson_panel(w: &DMatrix<f64>, s: &DMatrix<f64>, a: f64, b: f64) -> DMatrix<f64> {
    let integrand = |t: f64| {
        let e = (w * t).exp();
        &e * s * e.transpose()
    };
    let mut n = 8usize;
    let mut prev: Option<DMatrix<f64>> = None;
    loop {
        let h = (b - a) / n as f64;
        let mut acc = integrand(a) + integrand(b);
        for i in 1..n {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += integrand(a + i as f64 * h).scale(weight);
        }
        let estimate = acc.scale(h / 3.0);
        if let Some(p) = &prev {
            if (&estimate - p).norm() <= 1e-11 * estimate.norm().max(1e-9) {
                return estimate;
            }
        }
        prev = Some(estimate);
        n *= 2;
        assert!(n <= 1 << 15, "Simpson refinement did not settle");
    }
}

/// Quadrature oracle for the continuous Lyapunov solution:
/// integrates panel by panel until the tail contribution falls below
/// `1e-12` of the accumulated value.
pub fn lyapunov_by_quadrature(w: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    let abscissa = lqmf::stationary::is_stable(w).expect("oracle needs a finite matrix").spectral_abscissa;
    assert!(abscissa < 0.0, "oracle needs a stable matrix");
    let panel = 1.0 / abscissa.abs();
    let mut total = DMatrix::zeros(s.nrows(), s.ncols());
    let mut t = 0.0;
    let mut quiet_panels = 0;
    for _ in 0..400 {
        let piece = simpson_panel(w, s, t, t + panel);
        total += &piece;
        t += panel;
        if piece.norm() <= 1e-12 * total.norm().max(1e-12) {
            quiet_panels += 1;
            if quiet_panels >= 2 {
                return total;
            }
        } else {
            quiet_panels = 0;
        }
    }
    panic!("quadrature tail did not decay");
}

/// Central finite differences of the ergodic cost in each gain entry.
/// Panics if any perturbed gain loses stability; callers pick `h`
/// small enough for the models they draw.
pub fn fd_gradient(model: &LqModel, policy: &GainPolicy, h: f64) -> DMatrix<f64> {
    let mut grad = DMatrix::zeros(policy.k.nrows(), policy.k.ncols());
    for i in 0..policy.k.nrows() {
        for j in 0..policy.k.ncols() {
            let mut plus = policy.k.clone();
            plus[(i, j)] += h;
            let mut minus = policy.k.clone();
            minus[(i, j)] -= h;
            let jp = ergodic_cost(model, &GainPolicy::new(plus)).expect("perturbed gain stays stable");
            let jm = ergodic_cost(model, &GainPolicy::new(minus)).expect("perturbed gain stays stable");
            grad[(i, j)] = (jp - jm) / (2.0 * h);
        }
    }
    grad
}

fn random_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

fn random_spd(rng: &mut ChaCha20Rng, dim: usize, min_eig: f64, spread: f64) -> DMatrix<f64> {
    let g = random_matrix(rng, dim, dim, spread);
    &g * g.transpose() + DMatrix::from_diagonal_element(dim, dim, min_eig)
}

/// Draws a model whose open loop is stable with `||A|| <= ~0.45`,
/// so gains of norm up to ~0.1 keep `||A - BK|| <= 1/2`.
pub fn random_slow_model(rng: &mut ChaCha20Rng, dim: usize) -> LqModel {
    loop {
        let diag = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                -(0.15 + 0.25 * rng.gen::<f64>())
            } else {
                0.0
            }
        });
        let a = diag + random_matrix(rng, dim, dim, 0.03);
        let b = random_matrix(rng, dim, 1, 0.3);
        let d = DMatrix::identity(dim, dim) + random_spd(rng, dim, 0.0, 0.05);
        let q = random_spd(rng, dim, 0.6, 0.2);
        let r = random_spd(rng, 1, 0.6, 0.2);
        let Ok(model) = LqModel::new(a.clone(), b, d, q, r) else { continue };
        let report = lqmf::stationary::is_stable(&a).unwrap();
        if report.is_stable
            && report.spectral_abscissa < -0.05
            && lqmf::stationary::spectral_norm(&a) < 0.45
        {
            return model;
        }
    }
}

/// Draws a stabilizing gain that keeps the closed loop in the slow
/// regime `||A - BK|| <= 1/2`.
pub fn random_slow_gain(rng: &mut ChaCha20Rng, model: &LqModel) -> GainPolicy {
    loop {
        let k = random_matrix(rng, model.input_dim(), model.state_dim(), 0.05);
        let policy = GainPolicy::new(k);
        let closed = model.closed_loop(&policy);
        let report = lqmf::stationary::is_stable(&closed).unwrap();
        if report.is_stable
            && report.spectral_abscissa < -0.05
            && lqmf::stationary::spectral_norm(&closed) <= 0.5
        {
            return policy;
        }
    }
}

/// Random state vector with standard normal entries.
pub fn random_state(rng: &mut ChaCha20Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Draws a `(model, gain)` pair for the domination inequalities. Their
/// proofs compare against the one-step Gauss-Newton gain
/// `K - R^-1 E_K`, so that closed loop must sit in the slow regime as
/// well; instances violating the premise are redrawn.
pub fn random_domination_instance(rng: &mut ChaCha20Rng, dim: usize) -> (LqModel, GainPolicy) {
    for _ in 0..200 {
        let model = random_slow_model(rng, dim);
        let gain = random_slow_gain(rng, &model);
        let st = lqmf::lqr::stationary_quantities(&model, &gain).unwrap();
        let Some(r_inv_e) = model.r().clone().lu().solve(&st.e_k) else { continue };
        let gauss_newton = GainPolicy::new(&gain.k - r_inv_e);
        let closed = model.closed_loop(&gauss_newton);
        let report = lqmf::stationary::is_stable(&closed).unwrap();
        if report.is_stable && lqmf::stationary::spectral_norm(&closed) <= 0.5 {
            return (model, gain);
        }
    }
    panic!("no in-regime instance found");
}

/// Scalar test model `A = -1, B = 1, D = 1, Q = 1, R = 1`.
pub fn scalar_model() -> LqModel {
    LqModel::new(
        DMatrix::from_element(1, 1, -1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
    )
    .unwrap()
}

/// Reference Riccati solution of the bundled three-state model,
/// cross-checked against an external solver to 4e-9.
pub fn example_p_star() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            0.04979778, 0.00336704, -0.00080209, //
            0.00336704, 0.0499634, -0.00082373, //
            -0.00080209, -0.00082373, 0.04927204,
        ],
    )
}
