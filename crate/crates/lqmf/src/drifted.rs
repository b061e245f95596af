//! LQR with a constant drift intercept.
//!
//! The dynamics `dX = (a + A X + B u) dt + D dW` under the policy
//! `u = -K x + b` have the invariant law `N(mu_{K,b}, Sigma_K)` with
//! `mu_{K,b} = -(A-BK)^{-1}(a + B b)`; the covariance is intercept-free.
//! The ergodic cost splits into the intercept-free part `J1(K)` plus a
//! quadratic form `J2(K, b)` in `(mu_{K,b}, b)`, and `J2` is minimized
//! in closed form by
//!
//! `b^K = -(K Q^-1 A^T + R^-1 B^T) (A Q^-1 A^T + B R^-1 B^T)^-1 a`,
//!
//! whose optimal value `a^T (A Q^-1 A^T + B R^-1 B^T)^-1 a` does not
//! depend on `K`. Gains are therefore optimized exactly as in the
//! intercept-free problem, with the intercept recovered at the end.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lqr::{self, ConvergenceTrace, GainPolicy, GdOptions, LqModel};
use crate::stationary::{condition_number, min_symmetric_eigenvalue};

/// Condition-number guard for inverting the gram matrix.
const GRAM_COND_LIMIT: f64 = 1e12;

/// LQR problem with a constant drift intercept.
#[derive(Debug, Clone)]
pub struct DriftedModel {
    pub base: LqModel,
    drift: DVector<f64>,
}

impl DriftedModel {
    pub fn new(base: LqModel, drift: DVector<f64>) -> Result<Self> {
        if drift.len() != base.state_dim() {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "drift intercept has length {}, expected {}",
                    drift.len(),
                    base.state_dim()
                ),
            });
        }
        if !drift.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { what: "drift intercept" });
        }
        Ok(Self { base, drift })
    }

    pub fn drift(&self) -> &DVector<f64> {
        &self.drift
    }
}

/// Affine policy `u = -K x + b`.
#[derive(Debug, Clone)]
pub struct InterceptPolicy {
    pub k: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl InterceptPolicy {
    pub fn new(k: DMatrix<f64>, b: DVector<f64>) -> Self {
        Self { k, b }
    }

    pub fn gain(&self) -> GainPolicy {
        GainPolicy::new(self.k.clone())
    }
}

/// Stationary description of an affine policy on a drifted model.
#[derive(Debug, Clone)]
pub struct DriftedStationary {
    /// Invariant mean `mu_{K,b}`.
    pub mean: DVector<f64>,
    /// Invariant covariance (does not depend on the intercept).
    pub sigma_k: DMatrix<f64>,
    /// Intercept-free cost part.
    pub j1: f64,
    /// Intercept-induced cost part, nonnegative.
    pub j2: f64,
    /// `j1 + j2`.
    pub total: f64,
}

/// `A Q^-1 A^T + B R^-1 B^T`, the weighting matrix of the
/// intercept-induced cost. Guarded by a condition-number check.
pub(crate) fn gram_matrix(model: &LqModel) -> Result<DMatrix<f64>> {
    let q_inv_at = model
        .q()
        .clone()
        .lu()
        .solve(&model.a().transpose())
        .ok_or_else(|| Error::Numerical { what: "Q is numerically singular".into() })?;
    let r_inv_bt = model
        .r()
        .clone()
        .lu()
        .solve(&model.b().transpose())
        .ok_or_else(|| Error::Numerical { what: "R is numerically singular".into() })?;
    let gram = model.a() * q_inv_at + model.b() * r_inv_bt;
    let cond = condition_number(&gram);
    if !cond.is_finite() || cond > GRAM_COND_LIMIT {
        return Err(Error::SingularGamma { cond });
    }
    Ok(gram)
}

/// Solves `gram x = v` with the same conditioning guard as
/// [`gram_matrix`].
pub(crate) fn solve_gram(gram: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    gram.clone()
        .lu()
        .solve(v)
        .ok_or(Error::SingularGamma { cond: f64::INFINITY })
}

/// Closed-form minimizer of `J2(K, .)` for a stabilizing gain.
pub fn optimal_intercept(model: &DriftedModel, policy: &GainPolicy) -> Result<DVector<f64>> {
    model.base.require_stabilizing(policy)?;
    let gram = gram_matrix(&model.base)?;
    let w = solve_gram(&gram, model.drift())?;
    let q_inv_at = model
        .base
        .q()
        .clone()
        .lu()
        .solve(&model.base.a().transpose())
        .ok_or_else(|| Error::Numerical { what: "Q is numerically singular".into() })?;
    let r_inv_bt = model
        .base
        .r()
        .clone()
        .lu()
        .solve(&model.base.b().transpose())
        .ok_or_else(|| Error::Numerical { what: "R is numerically singular".into() })?;
    Ok(-(&policy.k * q_inv_at + r_inv_bt) * w)
}

/// Invariant mean `mu_{K,b} = -(A-BK)^{-1}(a + B b)`.
pub fn stationary_mean(model: &DriftedModel, policy: &InterceptPolicy) -> Result<DVector<f64>> {
    model.base.require_stabilizing(&policy.gain())?;
    let closed = model.base.closed_loop(&policy.gain());
    let rhs = model.drift() + model.base.b() * &policy.b;
    let mean = closed
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularClosedLoop)?;
    Ok(-mean)
}

/// Splits the ergodic cost into `J1(K)` and the intercept part
/// `J2(K, b) = (mu; b)^T [[Q + K^T R K, -K^T R], [-R K, R]] (mu; b)`.
pub fn cost_decomposition(model: &DriftedModel, policy: &InterceptPolicy) -> Result<DriftedStationary> {
    let gain = policy.gain();
    let st = lqr::stationary_quantities(&model.base, &gain)?;
    let mean = stationary_mean(model, policy)?;

    let q = model.base.q();
    let r = model.base.r();
    let k = &policy.k;
    let state_cost = q + k.transpose() * r * k;
    let cross = k.transpose() * r;
    let j2 = (mean.transpose() * &state_cost * &mean)[(0, 0)]
        - 2.0 * (mean.transpose() * &cross * &policy.b)[(0, 0)]
        + (policy.b.transpose() * r * &policy.b)[(0, 0)];
    Ok(DriftedStationary { mean, sigma_k: st.sigma_k, j1: st.cost, j2, total: st.cost + j2 })
}

/// Error bounds implied by the achieved intercept-free optimality gap.
#[derive(Debug, Clone, Copy)]
pub struct DriftedErrorBounds {
    /// Bound on the Frobenius distance of the final gain to the
    /// optimal gain.
    pub gain_error: f64,
    /// Bound on the Euclidean distance of the final intercept to the
    /// optimal intercept.
    pub intercept_error: f64,
    /// Achieved gap `J1(K_N) - J1(K*)`, floored at zero.
    pub achieved_gap: f64,
}

/// Gradient descent on the gain (the intercept does not change the
/// gradient), followed by the closed-form intercept at the final gain.
///
/// The returned bounds dominate the true errors:
/// `||K_N - K*||_F <= sqrt(gap / (sigma_min(R) sigma_min(DD^T)))` and
/// `||b^{K_N} - b*|| <= C_b(a) sqrt(gap / (sigma_min(R) sigma_min(DD^T)))`
/// with `C_b(a) = ||Q^-1 A^T (A Q^-1 A^T + B R^-1 B^T)^-1 a||`.
pub fn run_drifted_pg(
    model: &DriftedModel,
    k0: &GainPolicy,
    eta: f64,
    n_iters: usize,
) -> Result<(ConvergenceTrace<GainPolicy>, InterceptPolicy, DriftedErrorBounds)> {
    run_drifted_pg_with(model, k0, &GdOptions::new(eta, n_iters))
}

pub fn run_drifted_pg_with(
    model: &DriftedModel,
    k0: &GainPolicy,
    opts: &GdOptions,
) -> Result<(ConvergenceTrace<GainPolicy>, InterceptPolicy, DriftedErrorBounds)> {
    let (_, j1_star) = model.base.optimal()?;
    let trace = lqr::descend(&model.base, k0, opts, j1_star, None)?;

    let intercept = optimal_intercept(model, &trace.final_policy)?;
    let policy = InterceptPolicy::new(trace.final_policy.k.clone(), intercept);

    let achieved_gap = (lqr::ergodic_cost(&model.base, &trace.final_policy)? - j1_star).max(0.0);
    let sigma_min_r = min_symmetric_eigenvalue(model.base.r());
    let sigma_min_noise = min_symmetric_eigenvalue(model.base.noise_cov());
    let gain_error = (achieved_gap / (sigma_min_r * sigma_min_noise)).sqrt();

    let gram = gram_matrix(&model.base)?;
    let w = solve_gram(&gram, model.drift())?;
    let q_inv_at = model
        .base
        .q()
        .clone()
        .lu()
        .solve(&model.base.a().transpose())
        .ok_or_else(|| Error::Numerical { what: "Q is numerically singular".into() })?;
    let c_b = (q_inv_at * w).norm();
    let intercept_error = c_b * gain_error;

    Ok((trace, policy, DriftedErrorBounds { gain_error, intercept_error, achieved_gap }))
}
