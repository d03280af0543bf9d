//! Scenario files.
//!
//! A scenario is a flat list of `key = value` lines. Keys may be dotted
//! (`adaptive.window_width = 15`) to address a section; a `[section]`
//! header followed by bare keys is equivalent. Values are numbers, booleans,
//! double-quoted strings, or bracketed lists. `#` starts a comment. The
//! format is a subset of TOML and is parsed as such.
//!
//! Covariances accept either a list (the diagonal) or a list of rows (the
//! full matrix):
//!
//! ```text
//! truth.q = [2.0, 2.0, 2.0, 2.0]
//! truth.r = [[100.0, 0.0], [0.0, 3e-3]]
//! ```
//!
//! See `scenarios/mismatch.toml` for every key.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use wrw_core::{
    AdaptiveConfig, FnModel, GaussState, LyapunovParams, Matrix, NoiseSpec, SpdMatrix, StateSpaceModel, TrackingModel,
    TrackingModelParams,
};

use crate::error::{BenchError, Result};

pub const STATE_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Cubature filter with fixed noise, then the RTS pass.
    Cks,
    /// Moving-window adaptive filter, then the RTS pass.
    Acks,
    /// Random-weighted adaptive filter, then the RTS pass.
    Wrwacrts,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Cks, Algorithm::Acks, Algorithm::Wrwacrts];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Cks => "cks",
            Algorithm::Acks => "acks",
            Algorithm::Wrwacrts => "wrwacrts",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected cks, acks or wrwacrts)"))
    }
}

/// A diagonal (plain list) or full (list of rows) covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovarianceSpec {
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl CovarianceSpec {
    pub fn to_matrix(&self) -> Result<Matrix<f64>> {
        match self {
            CovarianceSpec::Diagonal(d) => Ok(Matrix::from_diagonal(d)),
            CovarianceSpec::Full(rows) => rows_to_matrix(rows),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            CovarianceSpec::Diagonal(d) => CovarianceSpec::Diagonal(d.iter().map(|v| v * factor).collect()),
            CovarianceSpec::Full(rows) => {
                CovarianceSpec::Full(rows.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect())
            }
        }
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || rows.iter().any(|r| r.len() != cols) {
        return Err(BenchError::Config(
            "matrix rows must be nonempty and equally long".into(),
        ));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Matrix::from_row_slice(rows.len(), cols, &flat).map_err(config_err)
}

fn config_err(e: wrw_core::Error) -> BenchError {
    BenchError::Config(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub ts: f64,
    pub g: f64,
    #[serde(default)]
    pub kx: f64,
    #[serde(default)]
    pub ky: f64,
}

impl ModelSection {
    pub fn params(&self) -> TrackingModelParams<f64> {
        TrackingModelParams {
            ts: self.ts,
            g: self.g,
            kx: self.kx,
            ky: self.ky,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    /// Range and bearing of `(x1, x3)`.
    #[default]
    RangeBearing,
    /// `z = C x + c`.
    Linear,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(default)]
    pub kind: MeasurementKind,
    /// Rows of `C`, linear measurements only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// `c`, defaults to zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub x0: Vec<f64>,
    pub q: CovarianceSpec,
    pub r: CovarianceSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Initial mean drawn from `N(x0, P0)` for every run.
    #[default]
    Sampled,
    /// Initial mean equal to `x0`.
    Truth,
    /// Initial mean given by `filter.x0`, the same for every run.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    /// Process noise the filters assume (the adaptive ones start from it).
    pub q: CovarianceSpec,
    pub r: CovarianceSpec,
    pub p0: CovarianceSpec,
    #[serde(default)]
    pub init: InitMode,
    /// Initial mean for `init = "fixed"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptiveSection {
    pub window_width: usize,
    pub s_factor: f64,
    pub adapt_q: bool,
    pub adapt_r: bool,
    pub epsilon_div: f64,
}

impl Default for AdaptiveSection {
    fn default() -> Self {
        let d = AdaptiveConfig::<f64>::default();
        Self {
            window_width: d.window_width,
            s_factor: d.s_factor,
            adapt_q: d.adapt_q,
            adapt_r: d.adapt_r,
            epsilon_div: d.epsilon_div,
        }
    }
}

impl AdaptiveSection {
    pub fn config(&self) -> AdaptiveConfig<f64> {
        AdaptiveConfig {
            window_width: self.window_width,
            s_factor: self.s_factor,
            adapt_q: self.adapt_q,
            adapt_r: self.adapt_r,
            epsilon_div: self.epsilon_div,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovSection {
    pub enabled: bool,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<f64>>,
    pub fd_step: f64,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        let d = LyapunovParams::<f64>::default();
        Self {
            enabled: false,
            alpha: d.alpha,
            zeta: d.zeta,
            fd_step: d.fd_step,
        }
    }
}

impl LyapunovSection {
    pub fn params(&self) -> LyapunovParams<f64> {
        LyapunovParams {
            alpha: self.alpha,
            zeta: self.zeta.clone(),
            fd_step: self.fd_step,
        }
    }
}

/// Full description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Filtered epochs per run; the initial state itself is not measured.
    pub steps: usize,
    pub runs: usize,
    /// Run `r` uses seed `base_seed + r`.
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    pub model: ModelSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    pub truth: TruthSection,
    pub filter: FilterSection,
    #[serde(default)]
    pub adaptive: AdaptiveSection,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
}

impl FromStr for ScenarioConfig {
    type Err = BenchError;

    fn from_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        // an unreadable scenario is a configuration problem, not an output failure
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        text.parse().map_err(|e| match e {
            BenchError::Config(msg) => BenchError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every invariant and that all model pieces can be built.
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(BenchError::Config("runs must be at least 1".into()));
        }
        if self.steps < 2 {
            return Err(BenchError::Config("steps must be at least 2".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("at least one algorithm is required".into()));
        }
        let mut algos = self.algorithms.clone();
        algos.sort();
        algos.dedup();
        if algos.len() != self.algorithms.len() {
            return Err(BenchError::Config("algorithms are listed more than once".into()));
        }
        if self.base_seed.checked_add(self.runs as u64).is_none() {
            return Err(BenchError::Config("base_seed + runs overflows".into()));
        }
        if self.truth.x0.len() != STATE_DIM {
            return Err(BenchError::Config(format!("truth.x0 needs {STATE_DIM} entries")));
        }
        if self.truth.x0.iter().any(|v| !v.is_finite()) {
            return Err(BenchError::Config("truth.x0 must be finite".into()));
        }
        match (self.filter.init, &self.filter.x0) {
            (InitMode::Fixed, Some(x0)) if x0.len() == STATE_DIM && x0.iter().all(|v| v.is_finite()) => {}
            (InitMode::Fixed, _) => {
                return Err(BenchError::Config(format!(
                    "init = \"fixed\" needs a finite filter.x0 with {STATE_DIM} entries"
                )))
            }
            (_, Some(_)) => return Err(BenchError::Config("filter.x0 only applies to init = \"fixed\"".into())),
            (_, None) => {}
        }
        let model = self.model()?;
        let m = model.meas_dim();
        for (name, noise) in [("truth", self.truth_noise()?), ("filter", self.filter_noise()?)] {
            if noise.q.rows() != STATE_DIM || noise.r.rows() != m {
                return Err(BenchError::Config(format!(
                    "{name} noise must be {STATE_DIM}x{STATE_DIM} (q) and {m}x{m} (r)"
                )));
            }
        }
        let filter_noise = self.filter_noise()?;
        filter_noise
            .q_spd()
            .map_err(|e| BenchError::Config(format!("filter.q: {e}")))?;
        filter_noise
            .r_spd()
            .map_err(|e| BenchError::Config(format!("filter.r: {e}")))?;
        self.p0()?;
        self.adaptive.config().validate().map_err(config_err)?;
        let lp = self.lyapunov.params();
        lp.validate().map_err(config_err)?;
        if lp.zeta.as_ref().is_some_and(|z| z.len() != STATE_DIM) {
            return Err(BenchError::Config(format!("lyapunov.zeta needs {STATE_DIM} entries")));
        }
        Ok(())
    }

    /// The measurement model the truth is simulated with and the filters use.
    pub fn model(&self) -> Result<Box<dyn StateSpaceModel<f64>>> {
        let params = self.model.params();
        params.validate().map_err(config_err)?;
        match self.measurement.kind {
            MeasurementKind::RangeBearing => {
                if self.measurement.matrix.is_some() || self.measurement.offset.is_some() {
                    return Err(BenchError::Config(
                        "measurement.matrix/offset only apply to linear measurements".into(),
                    ));
                }
                Ok(Box::new(TrackingModel::new(params).map_err(config_err)?))
            }
            MeasurementKind::Linear => {
                let (c, offset) = self.linear_observation()?;
                let model = FnModel::new(
                    STATE_DIM,
                    c.rows(),
                    move |x: &[f64], _| wrw_core::ssmodel::tracking_process(x, &params),
                    move |x: &[f64]| Ok(c.mul_vec(x).iter().zip(&offset).map(|(a, b)| a + b).collect()),
                );
                Ok(Box::new(model))
            }
        }
    }

    /// `(C, c)` of a linear measurement.
    pub fn linear_observation(&self) -> Result<(Matrix<f64>, Vec<f64>)> {
        if self.measurement.kind != MeasurementKind::Linear {
            return Err(BenchError::Config("measurement is not linear".into()));
        }
        let rows = self
            .measurement
            .matrix
            .as_ref()
            .ok_or_else(|| BenchError::Config("linear measurement needs measurement.matrix".into()))?;
        let c = rows_to_matrix(rows)?;
        if c.cols() != STATE_DIM {
            return Err(BenchError::Config(format!(
                "measurement.matrix needs {STATE_DIM} columns"
            )));
        }
        let offset = self.measurement.offset.clone().unwrap_or_else(|| vec![0.0; c.rows()]);
        if offset.len() != c.rows() {
            return Err(BenchError::Config(
                "measurement.offset length must match the matrix rows".into(),
            ));
        }
        Ok((c, offset))
    }

    pub fn truth_noise(&self) -> Result<NoiseSpec<f64>> {
        NoiseSpec::new(self.truth.q.to_matrix()?, self.truth.r.to_matrix()?)
            .map_err(|e| BenchError::Config(format!("truth noise: {e}")))
    }

    pub fn filter_noise(&self) -> Result<NoiseSpec<f64>> {
        NoiseSpec::new(self.filter.q.to_matrix()?, self.filter.r.to_matrix()?)
            .map_err(|e| BenchError::Config(format!("filter noise: {e}")))
    }

    pub fn p0(&self) -> Result<SpdMatrix<f64>> {
        let p0 = self.filter.p0.to_matrix()?;
        if p0.rows() != STATE_DIM {
            return Err(BenchError::Config(format!("filter.p0 must be {STATE_DIM}x{STATE_DIM}")));
        }
        SpdMatrix::new(p0).map_err(|e| BenchError::Config(format!("filter.p0: {e}")))
    }

    /// Initial belief with the configured mean.
    pub fn initial_state(&self, mean: Vec<f64>) -> Result<GaussState<f64>> {
        GaussState::new(mean, self.p0()?).map_err(config_err)
    }

    pub fn seed_for_run(&self, run: usize) -> u64 {
        self.base_seed + run as u64
    }
}
