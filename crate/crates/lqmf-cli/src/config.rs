//! Config parsing and validation.
//!
//! Experiments are described by a single JSON document with a version
//! field, a mode, the model matrices (row-major nested arrays), the
//! initial policy/state, stepping parameters and an output directory.
//! Validation reports the offending field by path before any
//! computation starts.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use lqmf::drifted::DriftedModel;
use lqmf::lqr::LqModel;
use lqmf::mfc::MeanFieldModel;
use lqmf::sim::SimConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("dimension error at `{field}`: {reason}")]
    Dimension { field: String, reason: String },
    #[error("invalid model: {field}: {source}")]
    Model { field: String, source: lqmf::Error },
}

fn schema_err(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Schema { field: field.into(), reason: reason.into() }
}

fn dim_err(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Dimension { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lqr,
    Drifted,
    Mfc,
    Mfg,
    Validate,
    Check,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Mode::Lqr => "lqr",
            Mode::Drifted => "drifted",
            Mode::Mfc => "mfc",
            Mode::Mfg => "mfg",
            Mode::Validate => "validate",
            Mode::Check => "check",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    mode: Mode,
    model: RawModel,
    #[serde(default)]
    init: RawInit,
    #[serde(default)]
    eta: Option<f64>,
    #[serde(default)]
    iters: Option<RawIters>,
    #[serde(default)]
    eps: Option<f64>,
    #[serde(default)]
    sim: Option<RawSim>,
    #[serde(default)]
    output_path: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    #[serde(default)]
    drift: Option<Vec<f64>>,
    #[serde(default)]
    a_bar: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    b_bar: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    d_bar: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    q_bar: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    r_bar: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    #[serde(default)]
    k: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    l: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    b: Option<Vec<f64>>,
    #[serde(default)]
    mu_x: Option<Vec<f64>>,
    #[serde(default)]
    mu_u: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIters {
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    outer: Option<usize>,
    #[serde(default)]
    inner: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: f64,
    horizon_t: f64,
    burn_in_t: f64,
    seed: u64,
    n_paths: usize,
}

/// Model payload by problem family.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Plain(LqModel),
    Drifted(DriftedModel),
    MeanField(MeanFieldModel),
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub model: ModelSpec,
    pub init_gain: DMatrix<f64>,
    pub init_mean_gain: DMatrix<f64>,
    pub init_intercept: DVector<f64>,
    pub init_mu_x: DVector<f64>,
    pub init_mu_u: DVector<f64>,
    /// Whether the config supplied an explicit initial policy.
    pub has_init_policy: bool,
    pub eta: f64,
    pub n_iters: usize,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub eps: Option<f64>,
    pub sim: Option<SimConfig>,
    pub output_path: String,
}

fn matrix(field: &str, raw: &[Vec<f64>]) -> Result<DMatrix<f64>, ConfigError> {
    if raw.is_empty() {
        return Err(dim_err(field, "matrix has no rows"));
    }
    let cols = raw[0].len();
    if cols == 0 {
        return Err(dim_err(field, "matrix has no columns"));
    }
    for (i, row) in raw.iter().enumerate() {
        if row.len() != cols {
            return Err(dim_err(field, format!("row {i} has {} entries, expected {cols}", row.len())));
        }
    }
    let flat: Vec<f64> = raw.iter().flatten().copied().collect();
    if !flat.iter().all(|x| x.is_finite()) {
        return Err(schema_err(field, "matrix contains non-finite entries"));
    }
    Ok(DMatrix::from_row_slice(raw.len(), cols, &flat))
}

fn vector(field: &str, raw: &[f64]) -> Result<DVector<f64>, ConfigError> {
    if raw.is_empty() {
        return Err(dim_err(field, "vector is empty"));
    }
    if !raw.iter().all(|x| x.is_finite()) {
        return Err(schema_err(field, "vector contains non-finite entries"));
    }
    Ok(DVector::from_column_slice(raw))
}

fn expect_shape(field: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<(), ConfigError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(dim_err(
            field,
            format!("has shape {}x{}, expected {rows}x{cols}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn map_model_err(field: &'static str) -> impl Fn(lqmf::Error) -> ConfigError {
    move |source| match &source {
        lqmf::Error::NotPositiveDefinite { what, .. } => ConfigError::Model {
            field: format!("{field}.{}", what.to_lowercase().replace(' ', "_").replace("^", "")),
            source,
        },
        _ => ConfigError::Model { field: field.into(), source },
    }
}

/// Loads and fully validates a config file.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let raw: RawConfig = serde_json::from_str(&text)?;
    if raw.schema != SCHEMA_VERSION {
        return Err(schema_err("schema", format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema)));
    }

    let a = matrix("model.a", &raw.model.a)?;
    let dim = a.nrows();
    if !a.is_square() {
        return Err(dim_err("model.a", format!("must be square, got {}x{}", a.nrows(), a.ncols())));
    }
    let b = matrix("model.b", &raw.model.b)?;
    if b.nrows() != dim {
        return Err(dim_err("model.b", format!("has {} rows, expected {dim}", b.nrows())));
    }
    let input_dim = b.ncols();
    let d = matrix("model.d", &raw.model.d)?;
    if d.nrows() != dim {
        return Err(dim_err("model.d", format!("has {} rows, expected {dim}", d.nrows())));
    }
    let q = matrix("model.q", &raw.model.q)?;
    expect_shape("model.q", &q, dim, dim)?;
    let r = matrix("model.r", &raw.model.r)?;
    expect_shape("model.r", &r, input_dim, input_dim)?;

    let base = LqModel::new(a, b, d, q, r).map_err(map_model_err("model"))?;

    let bar_fields = [
        raw.model.a_bar.is_some(),
        raw.model.b_bar.is_some(),
        raw.model.d_bar.is_some(),
        raw.model.q_bar.is_some(),
        raw.model.r_bar.is_some(),
    ];
    let any_bar = bar_fields.iter().any(|&x| x);
    let all_bar = bar_fields.iter().all(|&x| x);
    if any_bar && !all_bar {
        return Err(schema_err(
            "model",
            "mean-field models need all of a_bar, b_bar, d_bar, q_bar, r_bar",
        ));
    }

    let model = if all_bar {
        if raw.model.drift.is_some() {
            return Err(schema_err("model.drift", "drift is not supported together with mean-field matrices"));
        }
        let a_bar = matrix("model.a_bar", raw.model.a_bar.as_ref().unwrap())?;
        expect_shape("model.a_bar", &a_bar, dim, dim)?;
        let b_bar = matrix("model.b_bar", raw.model.b_bar.as_ref().unwrap())?;
        expect_shape("model.b_bar", &b_bar, dim, input_dim)?;
        let d_bar = matrix("model.d_bar", raw.model.d_bar.as_ref().unwrap())?;
        if d_bar.nrows() != dim {
            return Err(dim_err("model.d_bar", format!("has {} rows, expected {dim}", d_bar.nrows())));
        }
        let q_bar = matrix("model.q_bar", raw.model.q_bar.as_ref().unwrap())?;
        expect_shape("model.q_bar", &q_bar, dim, dim)?;
        let r_bar = matrix("model.r_bar", raw.model.r_bar.as_ref().unwrap())?;
        expect_shape("model.r_bar", &r_bar, input_dim, input_dim)?;
        ModelSpec::MeanField(
            MeanFieldModel::new(base, a_bar, b_bar, d_bar, q_bar, r_bar).map_err(map_model_err("model"))?,
        )
    } else if let Some(drift) = &raw.model.drift {
        let drift = vector("model.drift", drift)?;
        if drift.len() != dim {
            return Err(dim_err("model.drift", format!("has length {}, expected {dim}", drift.len())));
        }
        ModelSpec::Drifted(DriftedModel::new(base, drift).map_err(map_model_err("model"))?)
    } else {
        ModelSpec::Plain(base)
    };

    match (raw.mode, &model) {
        (Mode::Lqr, ModelSpec::Plain(_))
        | (Mode::Drifted, ModelSpec::Drifted(_))
        | (Mode::Mfc | Mode::Mfg | Mode::Check, ModelSpec::MeanField(_))
        | (Mode::Validate, _) => {}
        (mode, _) => {
            return Err(schema_err(
                "mode",
                format!("mode `{mode}` does not match the model family in `model`"),
            ));
        }
    }

    let has_init_policy = raw.init.k.is_some() || raw.init.l.is_some() || raw.init.b.is_some();
    let init_gain = match &raw.init.k {
        Some(k) => {
            let k = matrix("init.k", k)?;
            expect_shape("init.k", &k, input_dim, dim)?;
            k
        }
        None => DMatrix::zeros(input_dim, dim),
    };
    let init_mean_gain = match &raw.init.l {
        Some(l) => {
            let l = matrix("init.l", l)?;
            expect_shape("init.l", &l, input_dim, dim)?;
            l
        }
        None => DMatrix::zeros(input_dim, dim),
    };
    let init_intercept = match &raw.init.b {
        Some(b) => {
            let b = vector("init.b", b)?;
            if b.len() != input_dim {
                return Err(dim_err("init.b", format!("has length {}, expected {input_dim}", b.len())));
            }
            b
        }
        None => DVector::zeros(input_dim),
    };
    let init_mu_x = match &raw.init.mu_x {
        Some(v) => {
            let v = vector("init.mu_x", v)?;
            if v.len() != dim {
                return Err(dim_err("init.mu_x", format!("has length {}, expected {dim}", v.len())));
            }
            v
        }
        None => DVector::zeros(dim),
    };
    let init_mu_u = match &raw.init.mu_u {
        Some(v) => {
            let v = vector("init.mu_u", v)?;
            if v.len() != input_dim {
                return Err(dim_err("init.mu_u", format!("has length {}, expected {input_dim}", v.len())));
            }
            v
        }
        None => DVector::zeros(input_dim),
    };

    let needs_iters = matches!(raw.mode, Mode::Lqr | Mode::Drifted | Mode::Mfc | Mode::Mfg);
    let (n_iters, outer_iters, inner_iters) = match (&raw.iters, raw.mode) {
        (Some(it), Mode::Mfg) => {
            let outer = it.outer.ok_or_else(|| schema_err("iters.outer", "mfg mode needs `outer`"))?;
            let inner = it.inner.ok_or_else(|| schema_err("iters.inner", "mfg mode needs `inner`"))?;
            (0, outer, inner)
        }
        (Some(it), Mode::Lqr | Mode::Drifted | Mode::Mfc) => {
            let n = it.n.ok_or_else(|| schema_err("iters.n", "this mode needs `n`"))?;
            (n, 0, 0)
        }
        (None, _) if needs_iters => return Err(schema_err("iters", "this mode needs an `iters` object")),
        _ => (0, 0, 0),
    };

    let eta = match raw.eta {
        Some(eta) if eta > 0.0 && eta.is_finite() => eta,
        Some(eta) => return Err(schema_err("eta", format!("must be positive and finite, got {eta}"))),
        None if needs_iters => return Err(schema_err("eta", "this mode needs a stepsize")),
        None => 0.0,
    };

    if let Some(eps) = raw.eps {
        if eps.is_nan() || eps <= 0.0 || !eps.is_finite() {
            return Err(schema_err("eps", format!("must be positive and finite, got {eps}")));
        }
    }

    let sim = raw.sim.as_ref().map(|s| SimConfig::new(s.dt, s.horizon_t, s.burn_in_t, s.seed, s.n_paths));
    if raw.mode == Mode::Validate && sim.is_none() {
        return Err(schema_err("sim", "validate mode needs a `sim` block"));
    }

    Ok(ExperimentConfig {
        mode: raw.mode,
        model,
        init_gain,
        init_mean_gain,
        init_intercept,
        init_mu_x,
        init_mu_u,
        has_init_policy,
        eta,
        n_iters,
        outer_iters,
        inner_iters,
        eps: raw.eps,
        sim,
        output_path: raw.output_path.unwrap_or_else(|| "out".into()),
    })
}
