//! Ergodic-cost LQR under linear state feedback.
//!
//! For the linear SDE `dX = (A X + B u) dt + D dW` with running cost
//! `x^T Q x + u^T R u` and policy `u = -K x`, the stationary machinery is
//!
//! - invariant covariance: `(A-BK) S + S (A-BK)^T + D D^T = 0`,
//! - value matrix: `(A-BK)^T P + P (A-BK) + Q + K^T R K = 0`,
//! - ergodic cost `J(K) = <P, D D^T> = <Q + K^T R K, S>`,
//! - exact gradient `grad J(K) = 2 (R K - B^T P) S`.
//!
//! [`run_policy_gradient`] drives gradient descent on the gain; its
//! per-iterate records reproduce the convergence traces emitted by the
//! CLI. The update applied per iterate is `K <- K - 2 eta grad J(K)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stationary::{
    self, frobenius_inner, is_finite, min_symmetric_eigenvalue, require_spd, solve_lyapunov,
    spectral_norm, CareSolution,
};

/// Continuous-time LQR problem data `(A, B, D, Q, R)`.
///
/// `A` is `d x d`, `B` is `d x k`, the noise loading `D` is `d x m`,
/// and the cost weights `Q` (`d x d`) and `R` (`k x k`) are symmetric
/// positive definite. `D D^T` must be positive definite as well.
#[derive(Debug, Clone)]
pub struct LqModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    d: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    noise_cov: DMatrix<f64>,
}

impl LqModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        d: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = a.nrows();
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                what: format!("A must be square, got {}x{}", a.nrows(), a.ncols()),
            });
        }
        if b.nrows() != dim {
            return Err(Error::DimensionMismatch {
                what: format!("B has shape {}x{}, expected {dim} rows", b.nrows(), b.ncols()),
            });
        }
        if d.nrows() != dim || d.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                what: format!("D has shape {}x{}, expected {dim} rows and at least one column", d.nrows(), d.ncols()),
            });
        }
        if !q.is_square() || q.nrows() != dim {
            return Err(Error::DimensionMismatch {
                what: format!("Q has shape {}x{}, expected {dim}x{dim}", q.nrows(), q.ncols()),
            });
        }
        if !r.is_square() || r.nrows() != b.ncols() {
            return Err(Error::DimensionMismatch {
                what: format!("R has shape {}x{}, expected {0}x{0} with k = {0}", r.nrows(), b.ncols()),
            });
        }
        if !is_finite(&a) {
            return Err(Error::NonFinite { what: "A" });
        }
        if !is_finite(&b) {
            return Err(Error::NonFinite { what: "B" });
        }
        if !is_finite(&d) {
            return Err(Error::NonFinite { what: "D" });
        }
        require_spd(&q, "Q")?;
        require_spd(&r, "R")?;
        let noise_cov = &d * d.transpose();
        let min_eig = min_symmetric_eigenvalue(&noise_cov);
        if min_eig <= 1e-12 {
            return Err(Error::NotPositiveDefinite { what: "D D^T", min_eig });
        }
        Ok(Self { a, b, d, q, r, noise_cov })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `D D^T`.
    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    /// `A - B K`.
    pub fn closed_loop(&self, policy: &GainPolicy) -> DMatrix<f64> {
        &self.a - &self.b * &policy.k
    }

    /// Errors with `UnstablePolicy` unless `A - B K` is stable.
    pub fn require_stabilizing(&self, policy: &GainPolicy) -> Result<()> {
        if policy.k.nrows() != self.input_dim() || policy.k.ncols() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "gain has shape {}x{}, expected {}x{}",
                    policy.k.nrows(),
                    policy.k.ncols(),
                    self.input_dim(),
                    self.state_dim()
                ),
            });
        }
        let report = stationary::is_stable(&self.closed_loop(policy))?;
        if !report.is_stable {
            return Err(Error::UnstablePolicy { abscissa: report.spectral_abscissa, block: None });
        }
        Ok(())
    }

    /// Stabilizing Riccati solution together with the optimal cost
    /// `J(K*) = <P*, D D^T>`.
    pub fn optimal(&self) -> Result<(CareSolution, f64)> {
        let care = stationary::solve_care(&self.a, &self.b, &self.q, &self.r)?;
        let j_star = frobenius_inner(&care.p_star, &self.noise_cov);
        Ok((care, j_star))
    }
}

/// Linear state-feedback policy `u = -K x`.
#[derive(Debug, Clone)]
pub struct GainPolicy {
    pub k: DMatrix<f64>,
}

impl GainPolicy {
    pub fn new(k: DMatrix<f64>) -> Self {
        Self { k }
    }

    pub fn zero(model: &LqModel) -> Self {
        Self { k: DMatrix::zeros(model.input_dim(), model.state_dim()) }
    }
}

/// Stationary quantities of a stabilizing gain.
#[derive(Debug, Clone)]
pub struct LqrStationary {
    /// Invariant covariance of the closed loop.
    pub sigma_k: DMatrix<f64>,
    /// Value matrix of the quadratic relative value function.
    pub p_k: DMatrix<f64>,
    /// Gradient core `E_K = R K - B^T P_K`.
    pub e_k: DMatrix<f64>,
    /// Ergodic cost `J(K)`.
    pub cost: f64,
    /// Constant of the relative value function, fixed so the value
    /// function averages to zero under the invariant law.
    pub c_k: f64,
}

/// Solves both stationary equations for a stabilizing gain and checks
/// that the two cost formulas agree.
pub fn stationary_quantities(model: &LqModel, policy: &GainPolicy) -> Result<LqrStationary> {
    model.require_stabilizing(policy)?;
    let closed = model.closed_loop(policy);
    let sigma_k = solve_lyapunov(&closed, model.noise_cov())?;
    let state_cost = model.q() + policy.k.transpose() * model.r() * &policy.k;
    let p_k = solve_lyapunov(&closed.transpose(), &state_cost)?;

    let cost = frobenius_inner(&p_k, model.noise_cov());
    let cost_via_sigma = frobenius_inner(&state_cost, &sigma_k);
    let disagreement = (cost - cost_via_sigma).abs();
    if disagreement > 1e-9 * cost.abs().max(1.0) {
        return Err(Error::InternalInconsistency {
            what: format!(
                "cost formulas disagree: <P,DD^T> = {cost:.12e}, <Q+K^T R K,Sigma> = {cost_via_sigma:.12e}"
            ),
        });
    }
    let e_k = model.r() * &policy.k - model.b().transpose() * &p_k;
    let c_k = -frobenius_inner(&p_k, &sigma_k);
    Ok(LqrStationary { sigma_k, p_k, e_k, cost, c_k })
}

/// Invariant covariance `Sigma_K` of the stable closed loop.
pub fn stationary_covariance(model: &LqModel, policy: &GainPolicy) -> Result<DMatrix<f64>> {
    model.require_stabilizing(policy)?;
    solve_lyapunov(&model.closed_loop(policy), model.noise_cov())
}

/// Value matrix `P_K` of the relative value function.
pub fn value_matrix(model: &LqModel, policy: &GainPolicy) -> Result<DMatrix<f64>> {
    model.require_stabilizing(policy)?;
    let state_cost = model.q() + policy.k.transpose() * model.r() * &policy.k;
    solve_lyapunov(&model.closed_loop(policy).transpose(), &state_cost)
}

/// Ergodic cost `J(K) = <P_K, D D^T>`, cross-checked against
/// `<Q + K^T R K, Sigma_K>`.
pub fn ergodic_cost(model: &LqModel, policy: &GainPolicy) -> Result<f64> {
    Ok(stationary_quantities(model, policy)?.cost)
}

/// Relative value `V_K(x) = x^T P_K x + C_K`, with `C_K` chosen so that
/// the invariant-law average of `V_K` is zero.
pub fn relative_value(model: &LqModel, policy: &GainPolicy, x: &DVector<f64>) -> Result<f64> {
    if x.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            what: format!("state has length {}, expected {}", x.len(), model.state_dim()),
        });
    }
    let st = stationary_quantities(model, policy)?;
    Ok((x.transpose() * &st.p_k * x)[(0, 0)] + st.c_k)
}

/// Residual of the stationary HJB equation at `x` for the quadratic
/// value ansatz; identically zero up to roundoff for consistent
/// `(P_K, J(K))`.
pub fn hjb_residual(model: &LqModel, policy: &GainPolicy, x: &DVector<f64>) -> Result<f64> {
    if x.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            what: format!("state has length {}, expected {}", x.len(), model.state_dim()),
        });
    }
    let st = stationary_quantities(model, policy)?;
    let u = -&policy.k * x;
    let running = (x.transpose() * model.q() * x)[(0, 0)] + (u.transpose() * model.r() * &u)[(0, 0)];
    let drift = model.closed_loop(policy) * x;
    let grad_v = (&st.p_k * x).scale(2.0);
    let diffusion = frobenius_inner(&st.p_k, model.noise_cov());
    Ok(running - st.cost + drift.dot(&grad_v) + diffusion)
}

/// Exact policy gradient `2 E_K Sigma_K` with `E_K = R K - B^T P_K`.
pub fn policy_gradient(model: &LqModel, policy: &GainPolicy) -> Result<DMatrix<f64>> {
    let st = stationary_quantities(model, policy)?;
    Ok((&st.e_k * &st.sigma_k).scale(2.0))
}

/// Largest stepsize with a one-step contraction guarantee at `K`:
/// the minimum of
/// `3 sigma_min(Q) / (8 J(K) ||R||)` and
/// `(1/16) (sigma_min(Q) sigma_min(DD^T) / J(K))^2 / (||B|| ||grad J||)`.
///
/// The second bound is dropped when the gradient vanishes.
pub fn safe_stepsize(model: &LqModel, policy: &GainPolicy) -> Result<f64> {
    let st = stationary_quantities(model, policy)?;
    let grad_norm = spectral_norm(&(&st.e_k * &st.sigma_k).scale(2.0));
    let sigma_min_q = min_symmetric_eigenvalue(model.q());
    let sigma_min_noise = min_symmetric_eigenvalue(model.noise_cov());
    let bound1 = 3.0 * sigma_min_q / (8.0 * st.cost * spectral_norm(model.r()));
    if grad_norm == 0.0 {
        return Ok(bound1);
    }
    let ratio = sigma_min_q * sigma_min_noise / st.cost;
    let bound2 = ratio * ratio / (16.0 * spectral_norm(model.b()) * grad_norm);
    Ok(bound1.min(bound2))
}

/// Iteration count sufficient for gradient descent to close the cost
/// gap below `eps`:
/// `ceil( ||Sigma_K*|| / (eta sigma_min^2(DD^T) sigma_min(R)) * ln(gap0 / eps) )`,
/// or zero when the initial gap is already below `eps`.
pub fn gd_iteration_count(model: &LqModel, k0: &GainPolicy, eta: f64, eps: f64) -> Result<usize> {
    if eta.is_nan() || eta <= 0.0 || eps.is_nan() || eps <= 0.0 {
        return Err(Error::DimensionMismatch {
            what: format!("eta and eps must be positive, got eta={eta}, eps={eps}"),
        });
    }
    let (care, j_star) = model.optimal()?;
    let gap0 = ergodic_cost(model, k0)? - j_star;
    if gap0 <= eps {
        return Ok(0);
    }
    let sigma_star = stationary_covariance(model, &GainPolicy::new(care.k_star))?;
    let sigma_min_noise = min_symmetric_eigenvalue(model.noise_cov());
    let sigma_min_r = min_symmetric_eigenvalue(model.r());
    let rate = spectral_norm(&sigma_star) / (eta * sigma_min_noise * sigma_min_noise * sigma_min_r);
    Ok((rate * (gap0 / eps).ln()).ceil() as usize)
}

/// One row of a convergence trace.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iter: usize,
    pub cost: f64,
    /// Gap to the optimal cost of the same objective.
    pub gap: f64,
    /// Frobenius norm of the gradient at this iterate.
    pub grad_norm: f64,
    /// Stepsize used to reach this iterate (zero for the initial row).
    pub stepsize: f64,
}

/// Record of an iterative policy-gradient run.
#[derive(Debug, Clone)]
pub struct ConvergenceTrace<P> {
    pub records: Vec<TraceRecord>,
    /// Whether the final gap closed below the run's gap tolerance.
    pub converged: bool,
    pub final_policy: P,
}

/// Options for the gradient-descent drivers.
#[derive(Debug, Clone)]
pub struct GdOptions {
    pub eta: f64,
    pub n_iters: usize,
    /// Gap threshold below which the run reports convergence.
    pub gap_tol: f64,
    /// Halve the step until the iterate is stable and the cost
    /// decreases, instead of aborting on a destabilizing update.
    pub backtracking: bool,
}

impl GdOptions {
    pub fn new(eta: f64, n_iters: usize) -> Self {
        Self { eta, n_iters, gap_tol: 1e-6, backtracking: false }
    }
}

/// Gradient descent `K <- K - 2 eta grad J(K)` for `n_iters` updates.
///
/// Destabilizing updates abort the run unless backtracking is enabled.
/// The trace holds `n_iters + 1` records; record 0 is the initial gain.
pub fn run_policy_gradient(
    model: &LqModel,
    k0: &GainPolicy,
    eta: f64,
    n_iters: usize,
) -> Result<ConvergenceTrace<GainPolicy>> {
    run_policy_gradient_with(model, k0, &GdOptions::new(eta, n_iters))
}

pub fn run_policy_gradient_with(
    model: &LqModel,
    k0: &GainPolicy,
    opts: &GdOptions,
) -> Result<ConvergenceTrace<GainPolicy>> {
    let (_, j_star) = model.optimal()?;
    descend(model, k0, opts, j_star, None)
}

/// Shared descent loop. `block` labels the failing block in errors when
/// the model is one block of a larger problem.
pub(crate) fn descend(
    model: &LqModel,
    k0: &GainPolicy,
    opts: &GdOptions,
    j_star: f64,
    block: Option<&'static str>,
) -> Result<ConvergenceTrace<GainPolicy>> {
    let mut policy = k0.clone();
    let mut st = stationary_quantities(model, &policy)?;
    let mut records = Vec::with_capacity(opts.n_iters + 1);
    records.push(TraceRecord {
        iter: 0,
        cost: st.cost,
        gap: st.cost - j_star,
        grad_norm: (&st.e_k * &st.sigma_k).scale(2.0).norm(),
        stepsize: 0.0,
    });

    for iter in 1..=opts.n_iters {
        let grad = (&st.e_k * &st.sigma_k).scale(2.0);
        let mut step = opts.eta;
        let (next_policy, next_st) = loop {
            let candidate = GainPolicy::new(&policy.k - grad.scale(2.0 * step));
            match stationary_quantities(model, &candidate) {
                Ok(next_st) => {
                    if !opts.backtracking || next_st.cost <= st.cost {
                        break (candidate, next_st);
                    }
                }
                Err(Error::UnstablePolicy { .. }) if !opts.backtracking => {
                    return Err(Error::DestabilizedIterate { iter, block });
                }
                Err(Error::UnstablePolicy { .. }) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
            if step < opts.eta * 2f64.powi(-60) {
                return Err(Error::DestabilizedIterate { iter, block });
            }
        };
        policy = next_policy;
        st = next_st;
        if !st.cost.is_finite() {
            return Err(Error::NonFiniteCost { iter });
        }
        records.push(TraceRecord {
            iter,
            cost: st.cost,
            gap: st.cost - j_star,
            grad_norm: (&st.e_k * &st.sigma_k).scale(2.0).norm(),
            stepsize: step,
        });
    }
    let converged = records.last().map(|r| r.gap <= opts.gap_tol).unwrap_or(false);
    Ok(ConvergenceTrace { records, converged, final_policy: policy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn scalar_model() -> LqModel {
        LqModel::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![1.0]).unwrap()
    }

    #[test]
    fn model_rejects_indefinite_noise() {
        let err = LqModel::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![0.0], dmatrix![1.0], dmatrix![1.0]);
        assert!(matches!(err, Err(Error::NotPositiveDefinite { what: "D D^T", .. })));
    }

    #[test]
    fn covariance_scalar() {
        let model = scalar_model();
        let sigma = stationary_covariance(&model, &GainPolicy::zero(&model)).unwrap();
        assert!((sigma[(0, 0)] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn covariance_diagonal() {
        let model = LqModel::new(
            DMatrix::from_diagonal_element(3, 3, -1.0),
            DMatrix::zeros(3, 1),
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
            dmatrix![1.0],
        )
        .unwrap();
        let sigma = stationary_covariance(&model, &GainPolicy::new(DMatrix::zeros(1, 3))).unwrap();
        assert!((sigma - DMatrix::from_diagonal_element(3, 3, 0.5)).norm() < 1e-13);
    }

    #[test]
    fn covariance_rejects_unstable_policy() {
        let model = scalar_model();
        let err = stationary_covariance(&model, &GainPolicy::new(dmatrix![-2.0]));
        assert!(matches!(err, Err(Error::UnstablePolicy { .. })));
    }

    #[test]
    fn value_matrix_scalar_cases() {
        let model = scalar_model();
        let p0 = value_matrix(&model, &GainPolicy::zero(&model)).unwrap();
        assert!((p0[(0, 0)] - 0.5).abs() < 1e-13);
        // at the optimal gain the value matrix matches the Riccati solution
        let k_star = 2.0_f64.sqrt() - 1.0;
        let p = value_matrix(&model, &GainPolicy::new(dmatrix![k_star])).unwrap();
        assert!((p[(0, 0)] - k_star).abs() < 1e-12);
    }

    #[test]
    fn value_matrix_diagonal() {
        // A-BK = -I, Q + K^T R K = 2I gives P = I.
        let model = LqModel::new(
            DMatrix::from_diagonal_element(3, 3, -1.0),
            DMatrix::zeros(3, 1),
            DMatrix::identity(3, 3),
            DMatrix::from_diagonal_element(3, 3, 2.0),
            dmatrix![1.0],
        )
        .unwrap();
        let p = value_matrix(&model, &GainPolicy::new(DMatrix::zeros(1, 3))).unwrap();
        assert!((p - DMatrix::identity(3, 3)).norm() < 1e-13);
    }

    #[test]
    fn ergodic_cost_scalar() {
        let model = scalar_model();
        assert!((ergodic_cost(&model, &GainPolicy::zero(&model)).unwrap() - 0.5).abs() < 1e-13);
        let k_star = 2.0_f64.sqrt() - 1.0;
        let j = ergodic_cost(&model, &GainPolicy::new(dmatrix![k_star])).unwrap();
        assert!((j - k_star).abs() < 1e-12);
    }

    #[test]
    fn ergodic_cost_scales_with_state_weight() {
        // A-BK = -I, D = I, Q + K^T R K = 2c I gives J = 3c.
        for c in [0.5, 1.0, 4.0] {
            let model = LqModel::new(
                DMatrix::from_diagonal_element(3, 3, -1.0),
                DMatrix::zeros(3, 1),
                DMatrix::identity(3, 3),
                DMatrix::from_diagonal_element(3, 3, 2.0 * c),
                dmatrix![1.0],
            )
            .unwrap();
            let j = ergodic_cost(&model, &GainPolicy::new(DMatrix::zeros(1, 3))).unwrap();
            assert!((j - 3.0 * c).abs() < 1e-12);
        }
    }

    #[test]
    fn relative_value_scalar() {
        let model = scalar_model();
        let policy = GainPolicy::zero(&model);
        // P = Sigma = 0.5, so V(1) = 0.5 - 0.25 = 0.25 and V(0) = -<P, Sigma>.
        let v1 = relative_value(&model, &policy, &dvector![1.0]).unwrap();
        assert!((v1 - 0.25).abs() < 1e-13);
        let v0 = relative_value(&model, &policy, &dvector![0.0]).unwrap();
        assert!((v0 + 0.25).abs() < 1e-13);
    }

    #[test]
    fn hjb_residual_vanishes() {
        let model = scalar_model();
        let policy = GainPolicy::zero(&model);
        for x in [0.0, 0.7, 2.0, -3.0] {
            let r = hjb_residual(&model, &policy, &dvector![x]).unwrap();
            assert!(r.abs() < 1e-12, "residual {r} at x={x}");
        }
    }

    #[test]
    fn gradient_scalar() {
        let model = scalar_model();
        let g = policy_gradient(&model, &GainPolicy::zero(&model)).unwrap();
        assert!((g[(0, 0)] + 0.5).abs() < 1e-13);
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let model = scalar_model();
        let (care, _) = model.optimal().unwrap();
        let g = policy_gradient(&model, &GainPolicy::new(care.k_star.clone())).unwrap();
        assert!(g.norm() <= 1e-8 * (model.b().transpose() * &care.p_star).norm());
    }

    #[test]
    fn safe_stepsize_scalar() {
        let model = scalar_model();
        let eta = safe_stepsize(&model, &GainPolicy::zero(&model)).unwrap();
        assert!((eta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn safe_stepsize_at_optimum_uses_first_bound() {
        let model = scalar_model();
        let (care, j_star) = model.optimal().unwrap();
        let eta = safe_stepsize(&model, &GainPolicy::new(care.k_star)).unwrap();
        // gradient is ~0, so the second bound is huge and the first binds
        let bound1 = 3.0 / (8.0 * j_star);
        assert!((eta - bound1).abs() < 1e-6);
    }

    #[test]
    fn iteration_count_scalar() {
        let model = scalar_model();
        let n = gd_iteration_count(&model, &GainPolicy::zero(&model), 0.1, 1e-3).unwrap();
        assert_eq!(n, 16);
    }

    #[test]
    fn iteration_count_zero_at_optimum() {
        let model = scalar_model();
        let (care, _) = model.optimal().unwrap();
        let n = gd_iteration_count(&model, &GainPolicy::new(care.k_star), 0.1, 1e-3).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn iteration_count_monotone_in_eps() {
        let model = scalar_model();
        let k0 = GainPolicy::zero(&model);
        let mut prev = usize::MAX;
        for eps in [1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3] {
            let n = gd_iteration_count(&model, &k0, 0.1, eps).unwrap();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn descent_scalar_converges() {
        let model = scalar_model();
        let trace = run_policy_gradient(&model, &GainPolicy::zero(&model), 0.3, 50).unwrap();
        let k_star = 2.0_f64.sqrt() - 1.0;
        assert!((trace.final_policy.k[(0, 0)] - k_star).abs() <= 1e-6);
        assert!(trace.converged);
        assert_eq!(trace.records.len(), 51);
        assert!(trace.records.iter().all(|r| r.gap >= -1e-12));
        assert!(trace.records.windows(2).all(|w| w[1].iter > w[0].iter));
    }

    #[test]
    fn descent_stationary_at_optimum() {
        let model = scalar_model();
        let (care, _) = model.optimal().unwrap();
        let trace = run_policy_gradient(&model, &GainPolicy::new(care.k_star), 0.3, 10).unwrap();
        assert!(trace.records.iter().all(|r| r.gap.abs() <= 1e-12));
    }

    #[test]
    fn descent_aborts_on_destabilizing_step() {
        let model = scalar_model();
        let err = run_policy_gradient(&model, &GainPolicy::zero(&model), 50.0, 10);
        assert!(matches!(err, Err(Error::DestabilizedIterate { .. })));
    }

    #[test]
    fn backtracking_recovers_from_large_step() {
        let model = scalar_model();
        let mut opts = GdOptions::new(50.0, 30);
        opts.backtracking = true;
        let trace = run_policy_gradient_with(&model, &GainPolicy::zero(&model), &opts).unwrap();
        let k_star = 2.0_f64.sqrt() - 1.0;
        assert!((trace.final_policy.k[(0, 0)] - k_star).abs() < 1e-3);
    }
}
