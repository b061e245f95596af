//! Mean-field game solver.
//!
//! Freezing the mean-field state/action pair `mu = (mu_x, mu_u)` turns
//! the game into a drifted LQR with intercept
//! `a_mu = Abar mu_x + Bbar mu_u`, noise loading `[D, Dbar]` and an
//! additive constant `mu_x^T Qbar mu_x + mu_u^T Rbar mu_u` that no
//! policy can influence. Two maps drive the solver:
//!
//! - best response `lambda1(mu)`: the optimal affine policy of the
//!   lifted problem; its gain is the mu-independent Riccati gain `K*`,
//!   its intercept is linear in `mu`;
//! - mean update `lambda2(mu, pi)`: the stationary mean state/action
//!   when everyone plays `pi` while believing `mu`.
//!
//! A Nash equilibrium is a fixed point of `mu -> lambda2(mu, lambda1(mu))`;
//! that composition contracts with modulus `L0 = L1 L3 + L2 < 1` under
//! the checkable conditions reported by [`check_assumptions`].
//! [`solve_mfg`] alternates inner policy-gradient steps on the lifted
//! problem with one mean update per outer round; the inner budget is
//! either a fixed count or derived from the accuracy schedule
//! [`eps_schedule`].

use nalgebra::{DMatrix, DVector};

use crate::drifted::{self, DriftedModel, InterceptPolicy};
use crate::error::{Error, Result};
use crate::lqr::{self, GainPolicy, LqModel};
use crate::mfc::MeanFieldModel;
use crate::stationary::{
    self, frobenius_inner, min_symmetric_eigenvalue, spectral_norm, CareSolution,
};

/// Mean state and mean action pair.
#[derive(Debug, Clone)]
pub struct MeanFieldState {
    pub mean_x: DVector<f64>,
    pub mean_u: DVector<f64>,
}

impl MeanFieldState {
    pub fn new(mean_x: DVector<f64>, mean_u: DVector<f64>) -> Self {
        Self { mean_x, mean_u }
    }

    pub fn zeros(state_dim: usize, input_dim: usize) -> Self {
        Self { mean_x: DVector::zeros(state_dim), mean_u: DVector::zeros(input_dim) }
    }

    /// Concatenated `(mean_x; mean_u)`.
    pub fn stacked(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.mean_x.len() + self.mean_u.len());
        v.rows_mut(0, self.mean_x.len()).copy_from(&self.mean_x);
        v.rows_mut(self.mean_x.len(), self.mean_u.len()).copy_from(&self.mean_u);
        v
    }

    /// Euclidean norm of the stacked pair; the metric used for all
    /// contraction statements.
    pub fn norm(&self) -> f64 {
        self.stacked().norm()
    }

    pub fn distance(&self, other: &MeanFieldState) -> f64 {
        (self.stacked() - other.stacked()).norm()
    }

    /// Sum of the blockwise Euclidean distances,
    /// `||dx|| + ||du||`. This is the metric in which the contraction
    /// moduli of [`lipschitz_constants`] are derived; the stacked
    /// Euclidean ratio can exceed `l0` even when the map contracts.
    pub fn block_distance(&self, other: &MeanFieldState) -> f64 {
        (&self.mean_x - &other.mean_x).norm() + (&self.mean_u - &other.mean_u).norm()
    }
}

/// Drift intercept `Abar mu_x + Bbar mu_u` of the lifted problem.
pub fn drift_intercept(model: &MeanFieldModel, mu: &MeanFieldState) -> DVector<f64> {
    model.a_bar() * &mu.mean_x + model.b_bar() * &mu.mean_u
}

/// Lifts the game at a frozen `mu` into a drifted LQR plus the additive
/// cost constant. The lifted noise loading is `[D, Dbar]`, so its
/// covariance is `D D^T + Dbar Dbar^T`.
pub fn lift(model: &MeanFieldModel, mu: &MeanFieldState) -> Result<(DriftedModel, f64)> {
    if mu.mean_x.len() != model.base.state_dim() || mu.mean_u.len() != model.base.input_dim() {
        return Err(Error::DimensionMismatch {
            what: format!(
                "mean-field state has dims ({}, {}), expected ({}, {})",
                mu.mean_x.len(),
                mu.mean_u.len(),
                model.base.state_dim(),
                model.base.input_dim()
            ),
        });
    }
    let d = model.base.state_dim();
    let m1 = model.base.d().ncols();
    let m2 = model.d_bar().ncols();
    let mut stacked_noise = DMatrix::zeros(d, m1 + m2);
    stacked_noise.columns_mut(0, m1).copy_from(model.base.d());
    stacked_noise.columns_mut(m1, m2).copy_from(model.d_bar());

    let base = LqModel::new(
        model.base.a().clone(),
        model.base.b().clone(),
        stacked_noise,
        model.base.q().clone(),
        model.base.r().clone(),
    )?;
    let drifted = DriftedModel::new(base, drift_intercept(model, mu))?;
    let constant = (mu.mean_x.transpose() * model.q_bar() * &mu.mean_x)[(0, 0)]
        + (mu.mean_u.transpose() * model.r_bar() * &mu.mean_u)[(0, 0)];
    Ok((drifted, constant))
}

/// Best response to a frozen mean field: gain `K*` (independent of
/// `mu`) with the closed-form intercept of the lifted drifted problem.
pub fn lambda1(model: &MeanFieldModel, mu: &MeanFieldState) -> Result<InterceptPolicy> {
    let care = stationary::solve_care(model.base.a(), model.base.b(), model.base.q(), model.base.r())?;
    lambda1_with_care(model, mu, &care)
}

fn lambda1_with_care(
    model: &MeanFieldModel,
    mu: &MeanFieldState,
    care: &CareSolution,
) -> Result<InterceptPolicy> {
    let (lifted, _) = lift(model, mu)?;
    let b = drifted::optimal_intercept(&lifted, &GainPolicy::new(care.k_star.clone()))?;
    Ok(InterceptPolicy::new(care.k_star.clone(), b))
}

/// Mean state/action generated as `t -> infinity` when every agent
/// plays `pi` under the frozen belief `mu`:
/// `mu'_x = -(A - B K)^-1 (B b + a_mu)`, `mu'_u = -K mu'_x + b`.
pub fn lambda2(
    model: &MeanFieldModel,
    mu: &MeanFieldState,
    pi: &InterceptPolicy,
) -> Result<MeanFieldState> {
    model.base.require_stabilizing(&pi.gain())?;
    let closed = model.base.a() - model.base.b() * &pi.k;
    let forcing = model.base.b() * &pi.b + drift_intercept(model, mu);
    let solved = closed.lu().solve(&forcing).ok_or(Error::SingularClosedLoop)?;
    let mean_x = -solved.clone();
    let mean_u = &pi.b + &pi.k * solved;
    Ok(MeanFieldState::new(mean_x, mean_u))
}

/// Composed map `mu -> lambda2(mu, lambda1(mu))`.
pub fn composed_map(model: &MeanFieldModel, mu: &MeanFieldState) -> Result<MeanFieldState> {
    lambda2(model, mu, &lambda1(model, mu)?)
}

/// Constants controlling the contraction of the composed map, with the
/// per-state constants `c_b`, `c_k` filled in when `mu` is supplied.
#[derive(Debug, Clone)]
pub struct LipschitzConstants {
    /// `A Q^-1 A^T + B R^-1 B^T`.
    pub gamma: DMatrix<f64>,
    /// `(A - B K*)^-1 Abar`.
    pub delta_a: DMatrix<f64>,
    /// `(A - B K*)^-1 Bbar`.
    pub delta_b: DMatrix<f64>,
    /// Lipschitz modulus of the best-response intercept in `mu`.
    pub l1: f64,
    /// Lipschitz modulus of the mean update in `mu` at fixed policy.
    pub l2: f64,
    /// Lipschitz modulus of the mean update in the intercept.
    pub l3: f64,
    /// `l1 * l3 + l2`; the composed map contracts when below one.
    pub l0: f64,
    /// `|| Q^-1 A^T gamma^-1 a_mu ||` for the supplied state.
    pub c_b: Option<f64>,
    /// Sensitivity constant of the mean update to gain error, for the
    /// supplied state.
    pub c_k: Option<f64>,
}

/// Computes the contraction constants of the composed map.
pub fn lipschitz_constants(
    model: &MeanFieldModel,
    mu: Option<&MeanFieldState>,
) -> Result<LipschitzConstants> {
    let care = stationary::solve_care(model.base.a(), model.base.b(), model.base.q(), model.base.r())?;
    lipschitz_constants_with_care(model, mu, &care)
}

fn lipschitz_constants_with_care(
    model: &MeanFieldModel,
    mu: Option<&MeanFieldState>,
    care: &CareSolution,
) -> Result<LipschitzConstants> {
    let a = model.base.a();
    let b = model.base.b();
    let k_star = &care.k_star;

    let closed = a - b * k_star;
    let closed_lu = closed.clone().lu();
    let closed_inv = closed_lu
        .try_inverse()
        .ok_or(Error::SingularClosedLoop)?;

    let gamma = drifted::gram_matrix(&model.base)?;
    let gamma_lu = gamma.clone().lu();
    let gamma_inv_abar = gamma_lu
        .solve(model.a_bar())
        .ok_or(Error::SingularGamma { cond: f64::INFINITY })?;
    let gamma_inv_bbar = gamma_lu
        .solve(model.b_bar())
        .ok_or(Error::SingularGamma { cond: f64::INFINITY })?;

    let q_inv_at = model
        .base
        .q()
        .clone()
        .lu()
        .solve(&a.transpose())
        .ok_or_else(|| Error::Numerical { what: "Q is numerically singular".into() })?;
    let r_inv_bt = model
        .base
        .r()
        .clone()
        .lu()
        .solve(&b.transpose())
        .ok_or_else(|| Error::Numerical { what: "R is numerically singular".into() })?;

    let best_response_sens = spectral_norm(&(k_star * &q_inv_at + &r_inv_bt));
    let l1 = best_response_sens * spectral_norm(&gamma_inv_abar).max(spectral_norm(&gamma_inv_bbar));

    let delta_a = &closed_inv * model.a_bar();
    let delta_b = &closed_inv * model.b_bar();
    let l2 = (spectral_norm(&delta_a) + spectral_norm(&(k_star * &delta_a)))
        .max(spectral_norm(&delta_b) + spectral_norm(&(k_star * &delta_b)));

    let closed_inv_b = &closed_inv * b;
    let eye = DMatrix::<f64>::identity(k_star.nrows(), k_star.nrows());
    let l3 = spectral_norm(&closed_inv_b) + spectral_norm(&(eye + k_star * &closed_inv_b));

    let (c_b, c_k) = match mu {
        None => (None, None),
        Some(mu) => {
            let a_mu = drift_intercept(model, mu);
            let gamma_inv_amu = gamma_lu
                .solve(&a_mu)
                .ok_or(Error::SingularGamma { cond: f64::INFINITY })?;
            let c_b = (&q_inv_at * gamma_inv_amu).norm();

            let closed_inv_norm = spectral_norm(&closed_inv);
            let c_k = (a_mu.norm() + (1.0 + l1 * mu.norm()) * spectral_norm(b))
                * (closed_inv_norm
                    + (1.0 + spectral_norm(k_star)) * closed_inv_norm * closed_inv_norm * spectral_norm(b));
            (Some(c_b), Some(c_k))
        }
    };

    Ok(LipschitzConstants {
        gamma,
        delta_a,
        delta_b,
        l1,
        l2,
        l3,
        l0: l1 * l3 + l2,
        c_b,
        c_k,
    })
}

/// Outcome of checking the solvability and contraction conditions.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Riccati equation admits a stabilizing solution.
    pub care_solvable: bool,
    /// Its solution is symmetric positive definite.
    pub p_star_positive_definite: bool,
    pub p_star_min_eigenvalue: Option<f64>,
    pub l0: Option<f64>,
    /// `L0 < 1`: the composed map is a contraction and the equilibrium
    /// exists and is unique.
    pub contractive: bool,
    /// Human-readable failure description, when any check fails.
    pub failure: Option<String>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.care_solvable && self.p_star_positive_definite && self.contractive
    }
}

/// Checks CARE solvability, positive definiteness of its solution and
/// the contraction condition. Failures land in the report, never in an
/// error.
pub fn check_assumptions(model: &MeanFieldModel) -> AssumptionReport {
    let care = match stationary::solve_care(model.base.a(), model.base.b(), model.base.q(), model.base.r()) {
        Ok(c) => c,
        Err(e) => {
            return AssumptionReport {
                care_solvable: false,
                p_star_positive_definite: false,
                p_star_min_eigenvalue: None,
                l0: None,
                contractive: false,
                failure: Some(format!("Riccati solve failed: {e}")),
            }
        }
    };
    let min_eig = min_symmetric_eigenvalue(&care.p_star);
    let p_spd = min_eig > 0.0;
    match lipschitz_constants_with_care(model, None, &care) {
        Ok(consts) => AssumptionReport {
            care_solvable: true,
            p_star_positive_definite: p_spd,
            p_star_min_eigenvalue: Some(min_eig),
            l0: Some(consts.l0),
            contractive: consts.l0 < 1.0,
            failure: if p_spd && consts.l0 < 1.0 {
                None
            } else if !p_spd {
                Some(format!("P* has nonpositive eigenvalue {min_eig:.3e}"))
            } else {
                Some(format!("L0 = {:.6} >= 1: composed map may not contract", consts.l0))
            },
        },
        Err(e) => AssumptionReport {
            care_solvable: true,
            p_star_positive_definite: p_spd,
            p_star_min_eigenvalue: Some(min_eig),
            l0: None,
            contractive: false,
            failure: Some(format!("constants failed: {e}")),
        },
    }
}

/// Inner-accuracy schedule for outer round `s` at target accuracy
/// `eps`:
///
/// `eps_s = min{ 1/4 ||B||^-2 ||(A-BK*)^-1||^-2, C_b^-2 eps^2,
///               2^(-2s-4) (L3 C_b + 2 C_K)^-2 eps^2, eps^2 }
///          * sigma_min(R) sigma_min(noise)`
///
/// where the noise covariance is the lifted `D D^T + Dbar Dbar^T`.
/// When `C_b(mu_s) = 0` both terms containing it are dropped from the
/// minimum.
pub fn eps_schedule(model: &MeanFieldModel, mu_s: &MeanFieldState, s: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::DimensionMismatch {
            what: format!("eps must lie in (0, 1), got {eps}"),
        });
    }
    let care = stationary::solve_care(model.base.a(), model.base.b(), model.base.q(), model.base.r())?;
    eps_schedule_with_care(model, mu_s, s, eps, &care)
}

fn eps_schedule_with_care(
    model: &MeanFieldModel,
    mu_s: &MeanFieldState,
    s: usize,
    eps: f64,
    care: &CareSolution,
) -> Result<f64> {
    let consts = lipschitz_constants_with_care(model, Some(mu_s), care)?;
    let c_b = consts.c_b.expect("c_b computed for supplied state");
    let c_k = consts.c_k.expect("c_k computed for supplied state");

    let closed = model.base.a() - model.base.b() * &care.k_star;
    let closed_inv = closed.lu().try_inverse().ok_or(Error::SingularClosedLoop)?;
    let b_norm = spectral_norm(model.base.b());
    let closed_inv_norm = spectral_norm(&closed_inv);

    let mut best = (eps * eps).min(0.25 / (b_norm * b_norm * closed_inv_norm * closed_inv_norm));
    if c_b > 0.0 {
        best = best.min(eps * eps / (c_b * c_b));
        let damped = 2f64.powi(-(2 * s as i32) - 4);
        let denom = consts.l3 * c_b + 2.0 * c_k;
        best = best.min(damped * eps * eps / (denom * denom));
    }

    let sigma_min_r = min_symmetric_eigenvalue(model.base.r());
    let lifted_noise = model.base.noise_cov() + model.d_bar() * model.d_bar().transpose();
    let sigma_min_noise = min_symmetric_eigenvalue(&lifted_noise);
    Ok(best * sigma_min_r * sigma_min_noise)
}

/// Inner-iteration budget policy for [`solve_mfg`].
#[derive(Debug, Clone, Copy)]
pub enum InnerSchedule {
    /// The same fixed number of gradient steps every outer round.
    FixedCount(usize),
    /// Derive each round's step count from [`eps_schedule`] at this
    /// target accuracy.
    Accuracy { eps: f64 },
}

/// Options for [`solve_mfg`].
#[derive(Debug, Clone)]
pub struct MfgOptions {
    pub eta: f64,
    pub outer_iters: usize,
    pub schedule: InnerSchedule,
    /// Add the mean-field cost constant to the recorded per-round cost.
    pub include_cost_constant: bool,
}

impl MfgOptions {
    pub fn fixed(eta: f64, outer_iters: usize, inner_iters: usize) -> Self {
        Self { eta, outer_iters, schedule: InnerSchedule::FixedCount(inner_iters), include_cost_constant: false }
    }

    pub fn scheduled(eta: f64, outer_iters: usize, eps: f64) -> Self {
        Self { eta, outer_iters, schedule: InnerSchedule::Accuracy { eps }, include_cost_constant: false }
    }
}

/// One outer round of the fixed-point trace.
#[derive(Debug, Clone)]
pub struct OuterRecord {
    /// Outer round index; round 0 is the initial pair.
    pub s: usize,
    pub mu: MeanFieldState,
    /// Inner accuracy target consumed by the round that produced this
    /// record (None for round 0 and for fixed-count schedules).
    pub eps_s: Option<f64>,
    /// Inner gradient steps consumed by the round that produced this
    /// record.
    pub inner_iters: usize,
    /// Cost of the recorded policy in the lifted problem at the
    /// recorded state (without the cost constant unless requested).
    pub cost: f64,
    /// `|| lambda2(mu, lambda1(mu)) - mu ||`.
    pub nash_residual_mu: f64,
    /// Distance of the recorded policy from the best response:
    /// `||K - K*|| + ||b - b*_mu||`.
    pub nash_residual_policy: f64,
}

/// Full record of a fixed-point run.
#[derive(Debug, Clone)]
pub struct MfgTrace {
    pub outer_records: Vec<OuterRecord>,
    pub final_policy: InterceptPolicy,
    pub final_mu: MeanFieldState,
    /// Contraction modulus bound of the composed map.
    pub l0: f64,
    /// Whether `l0 < 1`; the solver warns and proceeds when not.
    pub contractive: bool,
}

/// Fixed-point iteration alternating best-response policy gradient
/// with mean updates.
///
/// Each outer round `s`: freeze `mu_s`, run inner gradient steps
/// `K <- K - 2 eta grad J1(K)` on the lifted problem, set the intercept
/// in closed form, then move the mean through [`lambda2`]. Record `s+1`
/// holds the new pair; record 0 the initial one.
pub fn solve_mfg(
    model: &MeanFieldModel,
    mu0: &MeanFieldState,
    pi0: &InterceptPolicy,
    opts: &MfgOptions,
) -> Result<MfgTrace> {
    let care = stationary::solve_care(model.base.a(), model.base.b(), model.base.q(), model.base.r())?;
    let consts = lipschitz_constants_with_care(model, None, &care)?;
    let contractive = consts.l0 < 1.0;

    let mut mu = mu0.clone();
    let mut policy = pi0.clone();
    model.base.require_stabilizing(&policy.gain())?;

    let record = |mu: &MeanFieldState,
                  policy: &InterceptPolicy,
                  s: usize,
                  eps_s: Option<f64>,
                  inner_iters: usize|
     -> Result<OuterRecord> {
        let (lifted, constant) = lift(model, mu)?;
        let st = drifted::cost_decomposition(&lifted, policy)?;
        let cost = st.total + if opts.include_cost_constant { constant } else { 0.0 };
        let best = lambda1_with_care(model, mu, &care)?;
        let next = lambda2(model, mu, &best)?;
        let nash_residual_mu = next.distance(mu);
        let nash_residual_policy =
            spectral_norm(&(&policy.k - &best.k)) + (&policy.b - &best.b).norm();
        Ok(OuterRecord { s, mu: mu.clone(), eps_s, inner_iters, cost, nash_residual_mu, nash_residual_policy })
    };

    let mut records = Vec::with_capacity(opts.outer_iters + 1);
    records.push(record(&mu, &policy, 0, None, 0)?);

    // Quantities reused by the accuracy schedule.
    let lifted_noise = model.base.noise_cov() + model.d_bar() * model.d_bar().transpose();
    let sigma_min_noise = min_symmetric_eigenvalue(&lifted_noise);
    let sigma_min_r = min_symmetric_eigenvalue(model.base.r());

    let mut total_inner = 0usize;
    for s in 0..opts.outer_iters {
        let (lifted, _) = lift(model, &mu)?;
        let (j1_star, sigma_star_norm) = {
            let j1_star = frobenius_inner(&care.p_star, lifted.base.noise_cov());
            let sigma_star =
                lqr::stationary_covariance(&lifted.base, &GainPolicy::new(care.k_star.clone()))?;
            (j1_star, spectral_norm(&sigma_star))
        };

        let (inner_iters, eps_s) = match opts.schedule {
            InnerSchedule::FixedCount(n) => (n, None),
            InnerSchedule::Accuracy { eps } => {
                let eps_s = eps_schedule_with_care(model, &mu, s, eps, &care)?;
                let gap = lqr::ergodic_cost(&lifted.base, &policy.gain())? - j1_star;
                let n = if gap <= eps_s {
                    0
                } else {
                    let rate = sigma_star_norm / (opts.eta * sigma_min_noise * sigma_min_noise * sigma_min_r);
                    (rate * (gap / eps_s).ln()).ceil() as usize
                };
                (n, Some(eps_s))
            }
        };

        // Inner policy update on the gain; the intercept does not
        // change the gradient.
        let mut gain = policy.gain();
        for _ in 0..inner_iters {
            let grad = lqr::policy_gradient(&lifted.base, &gain).map_err(|e| match e {
                Error::UnstablePolicy { .. } => {
                    Error::DestabilizedIterate { iter: total_inner, block: Some("inner policy update") }
                }
                other => other,
            })?;
            gain = GainPolicy::new(&gain.k - grad.scale(2.0 * opts.eta));
            total_inner += 1;
        }
        model.base.require_stabilizing(&gain).map_err(|_| Error::DestabilizedIterate {
            iter: total_inner,
            block: Some("inner policy update"),
        })?;

        let intercept = drifted::optimal_intercept(&lifted, &gain)?;
        policy = InterceptPolicy::new(gain.k, intercept);
        mu = lambda2(model, &mu, &policy)?;

        records.push(record(&mu, &policy, s + 1, eps_s, inner_iters)?);
    }

    Ok(MfgTrace {
        outer_records: records,
        final_policy: policy,
        final_mu: mu,
        l0: consts.l0,
        contractive,
    })
}

/// Residuals of a candidate equilibrium pair: the mean-map residual
/// `|| lambda2(mu, lambda1(mu)) - mu ||` and the policy distance
/// `||K - K*|| + ||b - b*_mu||` to the best response.
pub fn nash_residual(
    model: &MeanFieldModel,
    mu: &MeanFieldState,
    pi: &InterceptPolicy,
) -> Result<(f64, f64)> {
    model.base.require_stabilizing(&pi.gain())?;
    let best = lambda1(model, mu)?;
    let mu_residual = composed_map(model, mu)?.distance(mu);
    let policy_residual = spectral_norm(&(&pi.k - &best.k)) + (&pi.b - &best.b).norm();
    Ok((mu_residual, policy_residual))
}

/// Nash mean-field state by direct solution of the affine fixed-point
/// system `(I - M) mu = c`, where `M` and `c` are read off the composed
/// map column by column. Serves as the independent reference for the
/// iterative solver.
pub fn nash_fixed_point(model: &MeanFieldModel) -> Result<MeanFieldState> {
    let d = model.base.state_dim();
    let k = model.base.input_dim();
    let n = d + k;
    let origin = MeanFieldState::zeros(d, k);
    let offset = composed_map(model, &origin)?.stacked();

    let mut coeff = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut basis = DVector::zeros(n);
        basis[j] = 1.0;
        let mu = MeanFieldState::new(basis.rows(0, d).into_owned(), basis.rows(d, k).into_owned());
        let image = composed_map(model, &mu)?.stacked() - &offset;
        coeff.column_mut(j).copy_from(&image);
    }
    let system = DMatrix::identity(n, n) - coeff;
    let solution = system
        .lu()
        .solve(&offset)
        .ok_or_else(|| Error::Numerical { what: "fixed-point system is singular".into() })?;
    Ok(MeanFieldState::new(solution.rows(0, d).into_owned(), solution.rows(d, k).into_owned()))
}
