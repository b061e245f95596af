//! Euler-Maruyama Monte Carlo oracle.
//!
//! Simulates the controlled SDEs on a uniform grid to confirm the
//! analytic ergodic costs and stationary moments empirically. Additive
//! noise makes Euler-Maruyama exact in the diffusion term; the drift
//! discretization error is O(dt), small against the Monte Carlo band
//! used by the validation checks.
//!
//! Randomness comes from ChaCha20, a counter-based stream cipher RNG:
//! results are bit-reproducible across platforms for a fixed seed, and
//! every path draws from its own stream derived from (seed, path index)
//! so path order cannot change outcomes. Standard errors come from
//! batch means ([`NUM_BATCHES`] batches per path), which absorbs the
//! autocorrelation of the time averages.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::drifted::{DriftedModel, InterceptPolicy};
use crate::error::{Error, Result};
use crate::lqr::{self, GainPolicy, LqModel};
use crate::mfc::{self, MeanFieldModel, MfcPolicy};
use crate::stationary;

/// Batches per path for batch-mean standard errors. Post-burn-in
/// spans in the bundled configurations are thousands of autocorrelation
/// times, so 32 batches keep batches long and nearly independent.
pub const NUM_BATCHES: usize = 32;

/// Euler drift-bias allowance coefficient per unit `dt` for plain and
/// drifted LQR validation.
pub const BIAS_COEFF_LQR: f64 = 1.0;

/// Same for the mean-field pair simulation, which accumulates the bias
/// of two coupled blocks.
pub const BIAS_COEFF_MFC: f64 = 2.0;

/// Identifier of the random number generator driving the increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RngAlgorithm {
    /// ChaCha20 counter-based stream RNG.
    #[default]
    ChaCha20,
}

/// Initial state law.
#[derive(Debug, Clone)]
pub enum InitialLaw {
    /// Deterministic start.
    PointMass(DVector<f64>),
    /// Gaussian start with the given mean and covariance.
    Gaussian { mean: DVector<f64>, cov: DMatrix<f64> },
}

/// Discretization and sampling parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon_t: f64,
    pub burn_in_t: f64,
    pub seed: u64,
    pub n_paths: usize,
    /// Initial law; `None` starts every path at the origin.
    pub initial: Option<InitialLaw>,
    pub rng: RngAlgorithm,
}

impl SimConfig {
    pub fn new(dt: f64, horizon_t: f64, burn_in_t: f64, seed: u64, n_paths: usize) -> Self {
        Self { dt, horizon_t, burn_in_t, seed, n_paths, initial: None, rng: RngAlgorithm::ChaCha20 }
    }

    fn validate(&self) -> Result<()> {
        if self.dt.is_nan() || self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::DimensionMismatch { what: format!("dt must be positive, got {}", self.dt) });
        }
        if self.horizon_t.is_nan() || self.burn_in_t.is_nan() || self.horizon_t <= self.burn_in_t || self.burn_in_t < 0.0 {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "need 0 <= burn_in_t < horizon_t, got burn_in_t = {}, horizon_t = {}",
                    self.burn_in_t, self.horizon_t
                ),
            });
        }
        if self.n_paths == 0 {
            return Err(Error::DimensionMismatch { what: "n_paths must be at least 1".into() });
        }
        Ok(())
    }

    /// Explicit-scheme stability cap: `dt < 2 / |spectral abscissa|`
    /// of the closed loop.
    fn check_step(&self, closed_loop: &DMatrix<f64>) -> Result<()> {
        let report = stationary::is_stable(closed_loop)?;
        let cap = 2.0 / report.spectral_abscissa.abs().max(f64::MIN_POSITIVE);
        if self.dt >= cap {
            return Err(Error::StepTooLarge { dt: self.dt, cap });
        }
        Ok(())
    }
}

/// Moments and uncertainty of one simulation run.
#[derive(Debug, Clone)]
pub struct SimResult {
    /// Time average of the running cost after burn-in, averaged over
    /// paths.
    pub time_avg_cost: f64,
    /// Batch-mean standard error of the cost average.
    pub std_error: f64,
    /// Sample mean of the state after burn-in.
    pub sample_mean: DVector<f64>,
    /// Sample covariance of the state after burn-in.
    pub sample_cov: DMatrix<f64>,
    /// Batch-mean standard error per state-mean component.
    pub mean_std_error: DVector<f64>,
}

/// [`SimResult`] extended with the cross moments of the deviation and
/// mean processes.
#[derive(Debug, Clone)]
pub struct MfcSimResult {
    pub base: SimResult,
    /// Sample covariance between deviation and mean components.
    pub cross_cov: DMatrix<f64>,
    /// Batch-mean standard error per cross-covariance entry.
    pub cross_cov_se: DMatrix<f64>,
}

/// Outcome of one analytic-versus-empirical comparison.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub analytic_cost: f64,
    pub empirical_cost: f64,
    pub std_error: f64,
    /// Euler bias allowance `c_bias * dt`.
    pub bias_allowance: f64,
    pub pass: bool,
}

impl ValidationReport {
    fn evaluate(analytic: f64, result: &SimResult, bias_coeff: f64, dt: f64) -> Self {
        let bias_allowance = bias_coeff * dt;
        let pass = (result.time_avg_cost - analytic).abs() <= 3.0 * result.std_error + bias_allowance;
        Self {
            analytic_cost: analytic,
            empirical_cost: result.time_avg_cost,
            std_error: result.std_error,
            bias_allowance,
            pass,
        }
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_initial(law: &Option<InitialLaw>, dim: usize, rng: &mut ChaCha20Rng) -> Result<DVector<f64>> {
    match law {
        None => Ok(DVector::zeros(dim)),
        Some(InitialLaw::PointMass(x0)) => {
            if x0.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: format!("initial point has length {}, expected {dim}", x0.len()),
                });
            }
            Ok(x0.clone())
        }
        Some(InitialLaw::Gaussian { mean, cov }) => {
            if mean.len() != dim || cov.nrows() != dim || cov.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    what: format!("initial law dimensions do not match state dimension {dim}"),
                });
            }
            let chol = Cholesky::new(cov.clone()).ok_or(Error::NotPositiveDefinite {
                what: "initial covariance",
                min_eig: stationary::min_symmetric_eigenvalue(cov),
            })?;
            let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
            Ok(mean + chol.l() * z)
        }
    }
}

/// Streaming accumulator for one scalar time-average with batch-mean
/// error bars.
struct BatchAccumulator {
    batch_sums: Vec<f64>,
    batch_len: usize,
    index: usize,
}

impl BatchAccumulator {
    fn new(samples_per_path: usize, n_paths: usize) -> Self {
        let batch_len = (samples_per_path / NUM_BATCHES).max(1);
        Self { batch_sums: Vec::with_capacity(NUM_BATCHES * n_paths), batch_len, index: 0 }
    }

    fn push(&mut self, value: f64) {
        if self.index.is_multiple_of(self.batch_len) {
            self.batch_sums.push(0.0);
        }
        *self.batch_sums.last_mut().expect("batch started") += value;
        self.index += 1;
    }

    fn finish_path(&mut self) {
        self.index = 0;
    }

    /// Standard error of the overall mean from the spread of per-batch
    /// means.
    fn std_error(&self, samples_per_path: usize) -> f64 {
        let batches_per_path = samples_per_path.div_ceil(self.batch_len);
        let mut means = Vec::with_capacity(self.batch_sums.len());
        let mut remaining_in_path = samples_per_path;
        for (i, sum) in self.batch_sums.iter().enumerate() {
            if i % batches_per_path == 0 {
                remaining_in_path = samples_per_path;
            }
            let len = self.batch_len.min(remaining_in_path);
            remaining_in_path -= len;
            if len > 0 {
                means.push(sum / len as f64);
            }
        }
        let n = means.len() as f64;
        if n < 2.0 {
            return f64::INFINITY;
        }
        let grand = means.iter().sum::<f64>() / n;
        let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Shared driver: simulates `dX = (W X + c) dt + D dW` and accumulates
/// the running cost `x^T Q x + u^T R u` with `u = -K x + b`.
struct AffineSim<'a> {
    closed_loop: &'a DMatrix<f64>,
    forcing: &'a DVector<f64>,
    noise: &'a DMatrix<f64>,
    q: &'a DMatrix<f64>,
    r: &'a DMatrix<f64>,
    gain: &'a DMatrix<f64>,
    intercept: &'a DVector<f64>,
}

impl AffineSim<'_> {
    /// Advances the state in place by one Euler step and returns it.
    fn step(&self, x: &mut DVector<f64>, dt: f64, sqrt_dt: f64, rng: &mut ChaCha20Rng, scratch: &mut Scratch) {
        // drift
        scratch.drift.gemv(1.0, self.closed_loop, x, 0.0);
        scratch.drift += self.forcing;
        // diffusion
        for z in scratch.normals.iter_mut() {
            *z = StandardNormal.sample(rng);
        }
        scratch.kick.gemv(sqrt_dt, self.noise, &scratch.normals, 0.0);
        x.axpy(dt, &scratch.drift, 1.0);
        *x += &scratch.kick;
    }

    fn running_cost(&self, x: &DVector<f64>, scratch: &mut Scratch) -> f64 {
        scratch.qx.gemv(1.0, self.q, x, 0.0);
        let state_cost = x.dot(&scratch.qx);
        scratch.u.gemv(-1.0, self.gain, x, 0.0);
        scratch.u += self.intercept;
        scratch.ru.gemv(1.0, self.r, &scratch.u, 0.0);
        state_cost + scratch.u.dot(&scratch.ru)
    }
}

struct Scratch {
    drift: DVector<f64>,
    kick: DVector<f64>,
    normals: DVector<f64>,
    qx: DVector<f64>,
    u: DVector<f64>,
    ru: DVector<f64>,
}

impl Scratch {
    fn new(dim: usize, noise_dim: usize, input_dim: usize) -> Self {
        Self {
            drift: DVector::zeros(dim),
            kick: DVector::zeros(dim),
            normals: DVector::zeros(noise_dim),
            qx: DVector::zeros(dim),
            u: DVector::zeros(input_dim),
            ru: DVector::zeros(input_dim),
        }
    }
}

/// Simulates a (possibly drifted) LQR under an affine policy.
pub fn simulate_drifted(
    model: &DriftedModel,
    policy: &InterceptPolicy,
    cfg: &SimConfig,
) -> Result<SimResult> {
    cfg.validate()?;
    model.base.require_stabilizing(&policy.gain())?;
    let closed = model.base.closed_loop(&policy.gain());
    cfg.check_step(&closed)?;

    let dim = model.base.state_dim();
    let forcing = model.drift() + model.base.b() * &policy.b;

    let n_steps = (cfg.horizon_t / cfg.dt).round() as usize;
    let burn_steps = (cfg.burn_in_t / cfg.dt).round() as usize;
    let post = n_steps - burn_steps;
    let sqrt_dt = cfg.dt.sqrt();

    let sim = AffineSim {
        closed_loop: &closed,
        forcing: &forcing,
        noise: model.base.d(),
        q: model.base.q(),
        r: model.base.r(),
        gain: &policy.k,
        intercept: &policy.b,
    };

    let mut cost_acc = BatchAccumulator::new(post, cfg.n_paths);
    let mut mean_accs: Vec<BatchAccumulator> =
        (0..dim).map(|_| BatchAccumulator::new(post, cfg.n_paths)).collect();
    let mut sum_x = DVector::<f64>::zeros(dim);
    let mut sum_xx = DMatrix::<f64>::zeros(dim, dim);
    let mut scratch = Scratch::new(dim, model.base.d().ncols(), model.base.input_dim());

    for path in 0..cfg.n_paths {
        let mut rng = path_rng(cfg.seed, path as u64);
        let mut x = draw_initial(&cfg.initial, dim, &mut rng)?;
        for step in 0..n_steps {
            sim.step(&mut x, cfg.dt, sqrt_dt, &mut rng, &mut scratch);
            if step >= burn_steps {
                cost_acc.push(sim.running_cost(&x, &mut scratch));
                for i in 0..dim {
                    mean_accs[i].push(x[i]);
                }
                sum_x += &x;
                sum_xx.syger(1.0, &x, &x, 1.0);
            }
        }
        cost_acc.finish_path();
        for acc in &mut mean_accs {
            acc.finish_path();
        }
    }

    let total = (post * cfg.n_paths) as f64;
    let sample_mean = &sum_x / total;
    let mut sample_cov = &sum_xx / total - &sample_mean * sample_mean.transpose();
    sample_cov = stationary::symmetrize(&sample_cov);

    Ok(SimResult {
        time_avg_cost: cost_acc.batch_sums.iter().sum::<f64>() / total,
        std_error: cost_acc.std_error(post),
        sample_mean,
        sample_cov,
        mean_std_error: DVector::from_iterator(
            dim,
            mean_accs.iter().map(|a| a.std_error(post)),
        ),
    })
}

/// Simulates plain LQR (zero drift, zero intercept).
pub fn simulate_lqr(model: &LqModel, policy: &GainPolicy, cfg: &SimConfig) -> Result<SimResult> {
    let drifted = DriftedModel::new(model.clone(), DVector::zeros(model.state_dim()))?;
    let affine = InterceptPolicy::new(policy.k.clone(), DVector::zeros(model.input_dim()));
    simulate_drifted(&drifted, &affine, cfg)
}

/// Simulates the mean-field pair: the deviation process under gain `K`
/// driven by the idiosyncratic noise and the conditional-mean process
/// under gain `L` driven by the common noise, independently. The
/// reported state moments are those of `X = Y1 + Y2`; the cost follows
/// the mean-field running cost.
pub fn simulate_mfc(model: &MeanFieldModel, policy: &MfcPolicy, cfg: &SimConfig) -> Result<MfcSimResult> {
    cfg.validate()?;
    mfc::require_stabilizing(model, policy)?;

    let dim = model.base.state_dim();
    let closed_dev = model.base.a() - model.base.b() * &policy.k;
    let closed_mean = (model.base.a() + model.a_bar()) - (model.base.b() + model.b_bar()) * &policy.l;
    cfg.check_step(&closed_dev)?;
    cfg.check_step(&closed_mean)?;

    let n_steps = (cfg.horizon_t / cfg.dt).round() as usize;
    let burn_steps = (cfg.burn_in_t / cfg.dt).round() as usize;
    let post = n_steps - burn_steps;
    let sqrt_dt = cfg.dt.sqrt();

    let zero_forcing = DVector::zeros(dim);
    let sim_dev = AffineSim {
        closed_loop: &closed_dev,
        forcing: &zero_forcing,
        noise: model.base.d(),
        q: model.base.q(),
        r: model.base.r(),
        gain: &policy.k,
        intercept: &zero_forcing,
    };
    let sim_mean = AffineSim {
        closed_loop: &closed_mean,
        forcing: &zero_forcing,
        noise: model.d_bar(),
        q: model.base.q(),
        r: model.base.r(),
        gain: &policy.l,
        intercept: &zero_forcing,
    };

    let mut cost_acc = BatchAccumulator::new(post, cfg.n_paths);
    let mut mean_accs: Vec<BatchAccumulator> =
        (0..dim).map(|_| BatchAccumulator::new(post, cfg.n_paths)).collect();
    let mut cross_accs: Vec<BatchAccumulator> =
        (0..dim * dim).map(|_| BatchAccumulator::new(post, cfg.n_paths)).collect();
    let mut sum_x = DVector::<f64>::zeros(dim);
    let mut sum_xx = DMatrix::<f64>::zeros(dim, dim);
    let mut sum_y1 = DVector::<f64>::zeros(dim);
    let mut sum_y2 = DVector::<f64>::zeros(dim);

    let mut scratch1 = Scratch::new(dim, model.base.d().ncols(), model.base.input_dim());
    let mut scratch2 = Scratch::new(dim, model.d_bar().ncols(), model.base.input_dim());
    let mut x = DVector::<f64>::zeros(dim);
    let mut u = DVector::<f64>::zeros(model.base.input_dim());
    let mut u_mean = DVector::<f64>::zeros(model.base.input_dim());
    let mut work = DVector::<f64>::zeros(model.base.input_dim());

    for path in 0..cfg.n_paths {
        // independent streams for the idiosyncratic and common noise
        let mut rng1 = path_rng(cfg.seed, 2 * path as u64);
        let mut rng2 = path_rng(cfg.seed, 2 * path as u64 + 1);
        let mut y1 = draw_initial(&cfg.initial, dim, &mut rng1)?;
        let mut y2 = DVector::<f64>::zeros(dim);
        for step in 0..n_steps {
            sim_dev.step(&mut y1, cfg.dt, sqrt_dt, &mut rng1, &mut scratch1);
            sim_mean.step(&mut y2, cfg.dt, sqrt_dt, &mut rng2, &mut scratch2);
            if step >= burn_steps {
                x.copy_from(&y1);
                x += &y2;
                // running cost: x'Qx + y2'Qbar y2 + u'Ru + ubar'Rbar ubar
                scratch1.qx.gemv(1.0, model.base.q(), &x, 0.0);
                let mut c = x.dot(&scratch1.qx);
                scratch1.qx.gemv(1.0, model.q_bar(), &y2, 0.0);
                c += y2.dot(&scratch1.qx);
                u.gemv(-1.0, &policy.k, &y1, 0.0);
                u_mean.gemv(-1.0, &policy.l, &y2, 0.0);
                u += &u_mean;
                work.gemv(1.0, model.base.r(), &u, 0.0);
                c += u.dot(&work);
                work.gemv(1.0, model.r_bar(), &u_mean, 0.0);
                c += u_mean.dot(&work);
                cost_acc.push(c);

                for i in 0..dim {
                    mean_accs[i].push(x[i]);
                    for j in 0..dim {
                        cross_accs[i * dim + j].push(y1[i] * y2[j]);
                    }
                }
                sum_x += &x;
                sum_xx.syger(1.0, &x, &x, 1.0);
                sum_y1 += &y1;
                sum_y2 += &y2;
            }
        }
        cost_acc.finish_path();
        for acc in mean_accs.iter_mut().chain(cross_accs.iter_mut()) {
            acc.finish_path();
        }
    }

    let total = (post * cfg.n_paths) as f64;
    let sample_mean = &sum_x / total;
    let sample_cov = stationary::symmetrize(&(&sum_xx / total - &sample_mean * sample_mean.transpose()));
    let m1 = &sum_y1 / total;
    let m2 = &sum_y2 / total;

    let mut cross_cov = DMatrix::<f64>::zeros(dim, dim);
    let mut cross_cov_se = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let acc = &cross_accs[i * dim + j];
            cross_cov[(i, j)] = acc.batch_sums.iter().sum::<f64>() / total - m1[i] * m2[j];
            cross_cov_se[(i, j)] = acc.std_error(post);
        }
    }

    Ok(MfcSimResult {
        base: SimResult {
            time_avg_cost: cost_acc.batch_sums.iter().sum::<f64>() / total,
            std_error: cost_acc.std_error(post),
            sample_mean,
            sample_cov,
            mean_std_error: DVector::from_iterator(
                dim,
                mean_accs.iter().map(|a| a.std_error(post)),
            ),
        },
        cross_cov,
        cross_cov_se,
    })
}

/// Compares the simulated plain-LQR cost against the analytic value.
pub fn empirical_vs_analytic_lqr(
    model: &LqModel,
    policy: &GainPolicy,
    cfg: &SimConfig,
) -> Result<ValidationReport> {
    let analytic = lqr::ergodic_cost(model, policy)?;
    let result = simulate_lqr(model, policy, cfg)?;
    Ok(ValidationReport::evaluate(analytic, &result, BIAS_COEFF_LQR, cfg.dt))
}

/// Compares the simulated drifted-LQR cost against the analytic
/// decomposition.
pub fn empirical_vs_analytic_drifted(
    model: &DriftedModel,
    policy: &InterceptPolicy,
    cfg: &SimConfig,
) -> Result<ValidationReport> {
    let analytic = crate::drifted::cost_decomposition(model, policy)?.total;
    let result = simulate_drifted(model, policy, cfg)?;
    Ok(ValidationReport::evaluate(analytic, &result, BIAS_COEFF_LQR, cfg.dt))
}

/// Compares the simulated mean-field cost against the decoupled
/// analytic value.
pub fn empirical_vs_analytic_mfc(
    model: &MeanFieldModel,
    policy: &MfcPolicy,
    cfg: &SimConfig,
) -> Result<ValidationReport> {
    let analytic = mfc::mfc_cost(model, policy)?;
    let result = simulate_mfc(model, policy, cfg)?;
    Ok(ValidationReport::evaluate(analytic, &result.base, BIAS_COEFF_MFC, cfg.dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn scalar_model() -> LqModel {
        LqModel::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![1.0]).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let model = scalar_model();
        let cfg = SimConfig::new(1e-3, 50.0, 5.0, 42, 2);
        let a = simulate_lqr(&model, &GainPolicy::zero(&model), &cfg).unwrap();
        let b = simulate_lqr(&model, &GainPolicy::zero(&model), &cfg).unwrap();
        assert_eq!(a.time_avg_cost.to_bits(), b.time_avg_cost.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert_eq!(a.sample_cov[(0, 0)].to_bits(), b.sample_cov[(0, 0)].to_bits());
    }

    #[test]
    fn different_seeds_differ() {
        let model = scalar_model();
        let a = simulate_lqr(&model, &GainPolicy::zero(&model), &SimConfig::new(1e-3, 50.0, 5.0, 1, 1)).unwrap();
        let b = simulate_lqr(&model, &GainPolicy::zero(&model), &SimConfig::new(1e-3, 50.0, 5.0, 2, 1)).unwrap();
        assert_ne!(a.time_avg_cost.to_bits(), b.time_avg_cost.to_bits());
    }

    #[test]
    fn step_cap_enforced() {
        let model = scalar_model();
        let cfg = SimConfig::new(2.5, 100.0, 0.0, 0, 1);
        assert!(matches!(
            simulate_lqr(&model, &GainPolicy::zero(&model), &cfg),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn unstable_policy_rejected() {
        let model = scalar_model();
        let cfg = SimConfig::new(1e-3, 10.0, 1.0, 0, 1);
        assert!(matches!(
            simulate_lqr(&model, &GainPolicy::new(dmatrix![-3.0]), &cfg),
            Err(Error::UnstablePolicy { .. })
        ));
    }

    #[test]
    fn noiseless_equilibrium_stays_at_zero() {
        // D ~ 0: with X0 = 0, a = 0, b = 0 every state stays at 0.
        let model = LqModel::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1e-5], dmatrix![1.0], dmatrix![1.0])
            .unwrap();
        let drifted = DriftedModel::new(model, nalgebra::dvector![0.0]).unwrap();
        let policy = InterceptPolicy::new(dmatrix![0.0], nalgebra::dvector![0.0]);
        let cfg = SimConfig::new(1e-2, 10.0, 1.0, 7, 1);
        let result = simulate_drifted(&drifted, &policy, &cfg).unwrap();
        // cost scale is D^2 = 1e-10
        assert!(result.time_avg_cost < 1e-8);
        assert!(result.sample_mean.norm() < 1e-4);
    }

    #[test]
    fn scalar_cost_within_band() {
        let model = scalar_model();
        let cfg = SimConfig::new(1e-3, 500.0, 20.0, 11, 2);
        let result = simulate_lqr(&model, &GainPolicy::zero(&model), &cfg).unwrap();
        assert!(result.std_error > 0.0);
        assert!(
            (result.time_avg_cost - 0.5).abs() <= 3.0 * result.std_error + 1e-3,
            "cost {} se {}",
            result.time_avg_cost,
            result.std_error
        );
    }

    #[test]
    fn drifted_mean_matches_analytic() {
        let base = scalar_model();
        let model = DriftedModel::new(base, nalgebra::dvector![1.0]).unwrap();
        let policy = InterceptPolicy::new(dmatrix![0.0], nalgebra::dvector![-0.5]);
        let cfg = SimConfig::new(1e-3, 500.0, 20.0, 3, 2);
        let result = simulate_drifted(&model, &policy, &cfg).unwrap();
        // stationary mean is 0.5
        assert!(
            (result.sample_mean[0] - 0.5).abs() <= 3.0 * result.mean_std_error[0] + 1e-3,
            "mean {} se {}",
            result.sample_mean[0],
            result.mean_std_error[0]
        );
    }

    #[test]
    fn validation_detects_wrong_analytic_value() {
        let model = scalar_model();
        let cfg = SimConfig::new(1e-3, 500.0, 20.0, 11, 2);
        let result = simulate_lqr(&model, &GainPolicy::zero(&model), &cfg).unwrap();
        let report = ValidationReport::evaluate(0.6, &result, BIAS_COEFF_LQR, cfg.dt);
        assert!(!report.pass, "deliberately wrong value must fail");
        let honest = ValidationReport::evaluate(0.5, &result, BIAS_COEFF_LQR, cfg.dt);
        assert!(honest.pass);
    }
}
