//! Mean-field control by exact decoupling.
//!
//! Under the policy `u = -K (X - E0[X]) - L E0[X]`, the deviation
//! `Y1 = X - E0[X]` and the conditional mean `Y2 = E0[X]` evolve
//! independently:
//!
//! `dY1 = (A - B K) Y1 dt + D dW`,
//! `dY2 = (A + Abar - (B + Bbar) L) Y2 dt + Dbar dW0`,
//!
//! so the problem splits into two ordinary LQR blocks: the deviation
//! block `(A, B, D, Q, R)` and the mean block
//! `(A + Abar, B + Bbar, Dbar, Q + Qbar, R + Rbar)`. The joint cost is
//! the sum of the blocks' ergodic costs; this reduction is validated
//! against the Monte Carlo simulation in [`crate::sim`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lqr::{self, ConvergenceTrace, GainPolicy, GdOptions, LqModel, TraceRecord};
use crate::stationary::{frobenius_inner, is_finite, require_spd, solve_lyapunov};

/// LQR problem with mean-field coupling matrices.
///
/// `Dbar Dbar^T` may be singular at construction; operations that need
/// the mean block's noise to be positive definite fail there instead.
#[derive(Debug, Clone)]
pub struct MeanFieldModel {
    pub base: LqModel,
    a_bar: DMatrix<f64>,
    b_bar: DMatrix<f64>,
    d_bar: DMatrix<f64>,
    q_bar: DMatrix<f64>,
    r_bar: DMatrix<f64>,
}

impl MeanFieldModel {
    pub fn new(
        base: LqModel,
        a_bar: DMatrix<f64>,
        b_bar: DMatrix<f64>,
        d_bar: DMatrix<f64>,
        q_bar: DMatrix<f64>,
        r_bar: DMatrix<f64>,
    ) -> Result<Self> {
        let d = base.state_dim();
        let k = base.input_dim();
        for (name, m, rows, cols) in [
            ("Abar", &a_bar, d, d),
            ("Bbar", &b_bar, d, k),
            ("Dbar", &d_bar, d, d_bar.ncols()),
            ("Qbar", &q_bar, d, d),
            ("Rbar", &r_bar, k, k),
        ] {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    what: format!("{name} has shape {}x{}, expected {rows}x{cols}", m.nrows(), m.ncols()),
                });
            }
            if !is_finite(m) {
                return Err(Error::NonFinite { what: "mean-field matrix" });
            }
        }
        if d_bar.ncols() == 0 {
            return Err(Error::DimensionMismatch { what: "Dbar must have at least one column".into() });
        }
        require_spd(&q_bar, "Qbar")?;
        require_spd(&r_bar, "Rbar")?;
        Ok(Self { base, a_bar, b_bar, d_bar, q_bar, r_bar })
    }

    pub fn a_bar(&self) -> &DMatrix<f64> {
        &self.a_bar
    }

    pub fn b_bar(&self) -> &DMatrix<f64> {
        &self.b_bar
    }

    pub fn d_bar(&self) -> &DMatrix<f64> {
        &self.d_bar
    }

    pub fn q_bar(&self) -> &DMatrix<f64> {
        &self.q_bar
    }

    pub fn r_bar(&self) -> &DMatrix<f64> {
        &self.r_bar
    }
}

/// Pair of gains: `K` acts on the deviation from the conditional mean,
/// `L` on the conditional mean itself.
#[derive(Debug, Clone)]
pub struct MfcPolicy {
    pub k: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

impl MfcPolicy {
    pub fn new(k: DMatrix<f64>, l: DMatrix<f64>) -> Self {
        Self { k, l }
    }

    pub fn zero(model: &MeanFieldModel) -> Self {
        let k = DMatrix::zeros(model.base.input_dim(), model.base.state_dim());
        Self { l: k.clone(), k }
    }
}

/// The two independent LQR blocks: deviation `(A, B, D, Q, R)` and
/// mean `(A+Abar, B+Bbar, Dbar, Q+Qbar, R+Rbar)`.
pub fn decoupled_blocks(model: &MeanFieldModel) -> Result<(LqModel, LqModel)> {
    let deviation = model.base.clone();
    let mean = LqModel::new(
        model.base.a() + &model.a_bar,
        model.base.b() + &model.b_bar,
        model.d_bar.clone(),
        model.base.q() + &model.q_bar,
        model.base.r() + &model.r_bar,
    )?;
    Ok((deviation, mean))
}

fn block_policies(pi: &MfcPolicy) -> (GainPolicy, GainPolicy) {
    (GainPolicy::new(pi.k.clone()), GainPolicy::new(pi.l.clone()))
}

/// Joint ergodic cost: sum of the two blocks' costs.
pub fn mfc_cost(model: &MeanFieldModel, pi: &MfcPolicy) -> Result<f64> {
    let (deviation, mean) = decoupled_blocks(model)?;
    let (kp, lp) = block_policies(pi);
    let j1 = lqr::ergodic_cost(&deviation, &kp).map_err(label_deviation)?;
    let j2 = lqr::ergodic_cost(&mean, &lp).map_err(label_mean)?;
    Ok(j1 + j2)
}

/// Blockwise exact gradients `(grad_K, grad_L)`.
pub fn mfc_gradient(model: &MeanFieldModel, pi: &MfcPolicy) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (deviation, mean) = decoupled_blocks(model)?;
    let (kp, lp) = block_policies(pi);
    let gk = lqr::policy_gradient(&deviation, &kp).map_err(label_deviation)?;
    let gl = lqr::policy_gradient(&mean, &lp).map_err(label_mean)?;
    Ok((gk, gl))
}

/// Optimal pair `(K*, L*)` from the two blocks' Riccati solutions and
/// the optimal joint cost.
pub fn mfc_optimal(model: &MeanFieldModel) -> Result<(MfcPolicy, f64)> {
    let (deviation, mean) = decoupled_blocks(model)?;
    let (care_k, j1) = deviation.optimal()?;
    let (care_l, j2) = mean.optimal()?;
    Ok((MfcPolicy::new(care_k.k_star, care_l.k_star), j1 + j2))
}

/// Simultaneous gradient descent on both gains,
/// `K <- K - 2 eta grad_K`, `L <- L - 2 eta grad_L`.
///
/// The trace gap is measured against the optimal joint cost; the
/// gradient-norm column holds the combined Frobenius norm.
pub fn run_mfc_pg(
    model: &MeanFieldModel,
    pi0: &MfcPolicy,
    eta: f64,
    n_iters: usize,
) -> Result<ConvergenceTrace<MfcPolicy>> {
    run_mfc_pg_with(model, pi0, &GdOptions::new(eta, n_iters))
}

pub fn run_mfc_pg_with(
    model: &MeanFieldModel,
    pi0: &MfcPolicy,
    opts: &GdOptions,
) -> Result<ConvergenceTrace<MfcPolicy>> {
    let (deviation, mean) = decoupled_blocks(model)?;
    let (_, j_star) = mfc_optimal(model)?;
    let mut kp = GainPolicy::new(pi0.k.clone());
    let mut lp = GainPolicy::new(pi0.l.clone());

    let mut st_k = lqr::stationary_quantities(&deviation, &kp).map_err(label_deviation)?;
    let mut st_l = lqr::stationary_quantities(&mean, &lp).map_err(label_mean)?;
    let grad = |st: &lqr::LqrStationary| (&st.e_k * &st.sigma_k).scale(2.0);

    let mut records = Vec::with_capacity(opts.n_iters + 1);
    let push = |records: &mut Vec<TraceRecord>,
                iter: usize,
                st_k: &lqr::LqrStationary,
                st_l: &lqr::LqrStationary,
                step: f64| {
        let cost = st_k.cost + st_l.cost;
        let gn = (grad(st_k).norm_squared() + grad(st_l).norm_squared()).sqrt();
        records.push(TraceRecord { iter, cost, gap: cost - j_star, grad_norm: gn, stepsize: step });
    };
    push(&mut records, 0, &st_k, &st_l, 0.0);

    for iter in 1..=opts.n_iters {
        let gk = grad(&st_k);
        let gl = grad(&st_l);
        let mut step = opts.eta;
        let (next_k, next_l, next_st_k, next_st_l) = loop {
            let ck = GainPolicy::new(&kp.k - gk.scale(2.0 * step));
            let cl = GainPolicy::new(&lp.k - gl.scale(2.0 * step));
            let rk = lqr::stationary_quantities(&deviation, &ck);
            let rl = lqr::stationary_quantities(&mean, &cl);
            match (rk, rl) {
                (Ok(sk), Ok(sl)) => {
                    if !opts.backtracking || sk.cost + sl.cost <= st_k.cost + st_l.cost {
                        break (ck, cl, sk, sl);
                    }
                }
                (Err(Error::UnstablePolicy { .. }), _) if !opts.backtracking => {
                    return Err(Error::DestabilizedIterate { iter, block: Some("deviation") });
                }
                (_, Err(Error::UnstablePolicy { .. })) if !opts.backtracking => {
                    return Err(Error::DestabilizedIterate { iter, block: Some("mean") });
                }
                (Err(Error::UnstablePolicy { .. }), _) | (_, Err(Error::UnstablePolicy { .. })) => {}
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
            step *= 0.5;
            if step < opts.eta * 2f64.powi(-60) {
                return Err(Error::DestabilizedIterate { iter, block: None });
            }
        };
        kp = next_k;
        lp = next_l;
        st_k = next_st_k;
        st_l = next_st_l;
        let cost = st_k.cost + st_l.cost;
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost { iter });
        }
        push(&mut records, iter, &st_k, &st_l, step);
    }
    let converged = records.last().map(|r| r.gap <= opts.gap_tol).unwrap_or(false);
    Ok(ConvergenceTrace { records, converged, final_policy: MfcPolicy::new(kp.k, lp.k) })
}

/// Joint ergodic cost of the population when every agent plays the
/// affine policy `u = -K x + b` (no separate mean gain).
///
/// The deviation block is unchanged; the conditional mean becomes a
/// drifted process `dY2 = ((A+Abar-(B+Bbar)K) Y2 + (B+Bbar) b) dt + Dbar dW0`,
/// contributing its stationary-mean cost on top of the two covariance
/// terms.
pub fn social_cost_of_affine_policy(
    model: &MeanFieldModel,
    k: &DMatrix<f64>,
    b: &nalgebra::DVector<f64>,
) -> Result<f64> {
    let (deviation, mean) = decoupled_blocks(model)?;
    let kp = GainPolicy::new(k.clone());
    let j_dev = lqr::ergodic_cost(&deviation, &kp).map_err(label_deviation)?;

    mean.require_stabilizing(&kp).map_err(label_mean)?;
    let closed = mean.closed_loop(&kp);
    let sigma = solve_lyapunov(&closed, mean.noise_cov())?;
    let state_cost = mean.q() + k.transpose() * mean.r() * k;
    let j_mean_cov = frobenius_inner(&state_cost, &sigma);

    let m2 = -closed
        .lu()
        .solve(&(mean.b() * b))
        .ok_or(Error::SingularClosedLoop)?;
    let u_mean = b - k * &m2;
    let j_mean_loc = (m2.transpose() * mean.q() * &m2)[(0, 0)]
        + (u_mean.transpose() * mean.r() * &u_mean)[(0, 0)];
    Ok(j_dev + j_mean_cov + j_mean_loc)
}

fn label_deviation(e: Error) -> Error {
    label_block(e, "deviation")
}

fn label_mean(e: Error) -> Error {
    label_block(e, "mean")
}

fn label_block(e: Error, block: &'static str) -> Error {
    match e {
        Error::UnstablePolicy { abscissa, .. } => Error::UnstablePolicy { abscissa, block: Some(block) },
        other => other,
    }
}

/// Stability check for both blocks, reporting which block fails.
pub fn require_stabilizing(model: &MeanFieldModel, pi: &MfcPolicy) -> Result<()> {
    let (deviation, mean) = decoupled_blocks(model)?;
    let (kp, lp) = block_policies(pi);
    deviation.require_stabilizing(&kp).map_err(label_deviation)?;
    mean.require_stabilizing(&lp).map_err(label_mean)?;
    Ok(())
}

/// The model used throughout the bundled experiments: a stable 3-state,
/// single-input system with mean-field coupling `Abar = -A/2`,
/// `Bbar = -B/2`, unit noise on both blocks and weights
/// `Q = 0.1 I, Qbar = 0.05 I, R = 1, Rbar = 2`.
pub fn example_model() -> MeanFieldModel {
    let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.1, -0.05, 0.05, -1.0, -0.05, 0.0, 0.0, -1.0]);
    let b = DMatrix::from_row_slice(3, 1, &[-0.5, -0.5, 0.8]);
    let base = LqModel::new(
        a.clone(),
        b.clone(),
        DMatrix::identity(3, 3),
        DMatrix::from_diagonal_element(3, 3, 0.1),
        DMatrix::from_element(1, 1, 1.0),
    )
    .expect("example base model is valid");
    MeanFieldModel::new(
        base,
        a.scale(-0.5),
        b.scale(-0.5),
        DMatrix::identity(3, 3),
        DMatrix::from_diagonal_element(3, 3, 0.05),
        DMatrix::from_element(1, 1, 2.0),
    )
    .expect("example mean-field model is valid")
}
