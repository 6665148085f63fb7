//! JSON experiment configurations.
//!
//! Every document carries `"version": 1` and rejects unknown keys. The
//! resolved document (after command line overrides) is echoed into the
//! output directory as `config.json`.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pvlab_core::gauss::GaussianSource;
use pvlab_core::markov::ChainKind;
use pvlab_core::{linear_beta_schedule, Context, NoiseSchedule};

use crate::error::RunError;

pub const CONFIG_VERSION: u32 = 1;

/// Common surface of all command configurations.
pub trait Config: Serialize + DeserializeOwned + Default {
    fn version(&self) -> u32;
    fn seed_mut(&mut self) -> &mut u64;
    fn validate(&self) -> Result<(), RunError> {
        Ok(())
    }
}

/// Parses `text`, checks the version and applies the seed override.
pub fn parse<C: Config>(text: &str, seed: Option<u64>) -> Result<C, RunError> {
    let mut cfg: C = serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
    if cfg.version() != CONFIG_VERSION {
        return Err(RunError::Config(format!("config version {} is not supported (expected {CONFIG_VERSION})", cfg.version())));
    }
    resolve(&mut cfg, seed)?;
    Ok(cfg)
}

pub fn resolve<C: Config>(cfg: &mut C, seed: Option<u64>) -> Result<(), RunError> {
    if let Some(s) = seed {
        *cfg.seed_mut() = s;
    }
    cfg.validate()
}

pub fn to_json<C: Config>(cfg: &C) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("configs serialize");
    s.push('\n');
    s
}

fn version() -> u32 {
    CONFIG_VERSION
}

macro_rules! config_impl {
    ($t:ty) => {
        impl Config for $t {
            fn version(&self) -> u32 {
                self.version
            }
            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
            fn validate(&self) -> Result<(), RunError> {
                self.check()
            }
        }
    };
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, RunError> {
    Err(RunError::Config(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainOrder {
    FirstOrder,
    HighOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Betas(Vec<f64>),
    Linear { n_frames: usize, beta_start: f64, beta_end: f64 },
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<NoiseSchedule, RunError> {
        Ok(match self {
            ScheduleConfig::Betas(b) => NoiseSchedule::new(b.clone())?,
            ScheduleConfig::Linear { n_frames, beta_start, beta_end } => linear_beta_schedule(*n_frames, *beta_start, *beta_end)?,
        })
    }
}

/// A Gaussian source pushed through a noising chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianChainConfig {
    pub kind: ChainOrder,
    pub schedule: ScheduleConfig,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "one_f")]
    pub variance: f64,
    /// Full source covariance; overrides `dim` and `variance` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl GaussianChainConfig {
    pub fn pinned(kind: ChainOrder) -> Self {
        Self { kind, schedule: ScheduleConfig::Betas(vec![0.5, 0.5]), dim: 1, variance: 1.0, covariance: None }
    }

    pub fn source(&self) -> Result<GaussianSource, RunError> {
        Ok(match &self.covariance {
            None => GaussianSource::isotropic(self.dim, self.variance)?,
            Some(rows) => {
                let d = rows.len();
                if d == 0 || rows.iter().any(|r| r.len() != d) {
                    return config_err("covariance must be a non-empty square matrix");
                }
                let cov = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                GaussianSource::new(DVector::zeros(d), cov)?
            }
        })
    }

    pub fn kind(&self) -> Result<ChainKind, RunError> {
        let s = self.schedule.build()?;
        Ok(match self.kind {
            ChainOrder::FirstOrder => ChainKind::FirstOrder(s),
            ChainOrder::HighOrder => ChainKind::HighOrder(s),
        })
    }

    pub fn chain(&self) -> Result<pvlab_core::predictor::GaussianChain, RunError> {
        Ok(pvlab_core::predictor::GaussianChain::new(self.source()?, self.kind()?))
    }
}

// ---------------------------------------------------------------- augment

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Augmentation {
    Blur {
        n_frames: usize,
        #[serde(default = "default_kernel")]
        kernel_size: usize,
        #[serde(default = "one_f")]
        sigma0: f64,
        #[serde(default = "default_rate")]
        rate: f64,
    },
    Heat {
        times: Vec<f64>,
        #[serde(default)]
        sigma_h: f64,
    },
    NoiseFirstOrder {
        n_frames: usize,
        #[serde(default = "default_beta_start")]
        beta_start: f64,
        #[serde(default = "default_beta_end")]
        beta_end: f64,
    },
    NoiseHighOrder {
        n_frames: usize,
        #[serde(default = "default_beta_start")]
        beta_start: f64,
        #[serde(default = "default_beta_end")]
        beta_end: f64,
    },
}

fn default_kernel() -> usize {
    11
}

fn default_rate() -> f64 {
    0.05
}

fn default_beta_start() -> f64 {
    0.0001
}

fn default_beta_end() -> f64 {
    0.05
}

impl Augmentation {
    pub fn family(&self) -> &'static str {
        match self {
            Augmentation::Blur { .. } => "blur",
            Augmentation::Heat { .. } => "heat",
            Augmentation::NoiseFirstOrder { .. } => "noise-first-order",
            Augmentation::NoiseHighOrder { .. } => "noise-high-order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub input_dir: PathBuf,
    pub augmentation: Augmentation,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            input_dir: PathBuf::from("images"),
            augmentation: Augmentation::Blur { n_frames: 8, kernel_size: 11, sigma0: 1.0, rate: 0.05 },
        }
    }
}

impl AugmentConfig {
    fn check(&self) -> Result<(), RunError> {
        Ok(())
    }
}

config_impl!(AugmentConfig);

// ---------------------------------------------------------------- oracle

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleChain {
    Gaussian(GaussianChainConfig),
    /// Binary chain flipping the symbol with probability `flip` each step.
    DiscreteFlip { n_frames: usize, flip: f64 },
    /// Random kernels of the given per-step orders.
    DiscreteRandom { alphabet: usize, orders: Vec<usize> },
    /// Sign of a first-order Gaussian chain.
    DiscreteSignQuantized { variance: f64, betas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleRun {
    pub chain: OracleChain,
    /// Nested context sets as lists of lags; defaults to
    /// `{T-1} ⊂ {T-1,T-2} ⊂ … ⊂ {T-1..1}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contexts: Option<Vec<Vec<usize>>>,
}

impl OracleRun {
    pub fn contexts(&self, n_frames: usize) -> Result<Vec<Context>, RunError> {
        match &self.contexts {
            Some(sets) => sets.iter().map(|s| Ok(Context::new(s.clone())?)).collect(),
            None => (1..n_frames).map(|k| Ok(Context::recent(k)?)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub runs: Vec<OracleRun>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let run = |chain| OracleRun { chain, contexts: None };
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            runs: vec![
                run(OracleChain::Gaussian(GaussianChainConfig::pinned(ChainOrder::FirstOrder))),
                run(OracleChain::Gaussian(GaussianChainConfig::pinned(ChainOrder::HighOrder))),
                run(OracleChain::DiscreteFlip { n_frames: 3, flip: 0.1 }),
                run(OracleChain::DiscreteRandom { alphabet: 2, orders: vec![1, 2, 2] }),
            ],
        }
    }
}

impl OracleConfig {
    fn check(&self) -> Result<(), RunError> {
        if self.runs.is_empty() {
            return config_err("oracle config lists no runs");
        }
        Ok(())
    }
}

config_impl!(OracleConfig);

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Linear,
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default = "default_step")]
        step_size: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
        #[serde(default = "default_batch")]
        batch_size: usize,
    },
}

fn default_hidden() -> usize {
    64
}

fn default_step() -> f64 {
    0.05
}

fn default_epochs() -> usize {
    20
}

fn default_batch() -> usize {
    32
}

fn default_model() -> ModelConfig {
    ModelConfig::Linear
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitExperiment {
    pub chain: GaussianChainConfig,
    pub context_sizes: Vec<usize>,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default)]
    pub ridge: f64,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub experiments: Vec<FitExperiment>,
}

impl Default for FitConfig {
    fn default() -> Self {
        let exp = |kind| FitExperiment {
            chain: GaussianChainConfig::pinned(kind),
            context_sizes: vec![1, 2],
            n_train: 100_000,
            n_test: 100_000,
            ridge: 0.0,
            model: ModelConfig::Linear,
        };
        Self { version: CONFIG_VERSION, seed: 0, experiments: vec![exp(ChainOrder::FirstOrder), exp(ChainOrder::HighOrder)] }
    }
}

impl FitConfig {
    fn check(&self) -> Result<(), RunError> {
        if self.experiments.is_empty() {
            return config_err("fit config lists no experiments");
        }
        for (i, e) in self.experiments.iter().enumerate() {
            let t = e.chain.kind()?.n_frames();
            let d = e.chain.source()?.dim();
            if e.context_sizes.is_empty() {
                return config_err(format!("experiment {i}: no context sizes"));
            }
            for &k in &e.context_sizes {
                if k == 0 || k >= t {
                    return config_err(format!("experiment {i}: context size {k} outside 1..{t}"));
                }
                let minimum = k * d + 1;
                if e.n_train < minimum {
                    return config_err(format!("experiment {i}: n_train {} below the minimum {minimum} for k = {k}", e.n_train));
                }
            }
            if e.n_test == 0 {
                return config_err(format!("experiment {i}: n_test must be positive"));
            }
            if !(e.ridge >= 0.0 && e.ridge.is_finite()) {
                return config_err(format!("experiment {i}: ridge must be nonnegative"));
            }
        }
        Ok(())
    }
}

config_impl!(FitConfig);

// ---------------------------------------------------------------- generate

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenPredictor {
    /// Exact conditional means from the chain's joint distribution.
    Oracle,
    /// One least-squares predictor per frame position.
    Linear,
    /// One least-squares predictor shared by all positions.
    LinearShared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub chain: GaussianChainConfig,
    pub context_window: usize,
    pub predictor: GenPredictor,
    pub teacher_forced: bool,
    pub n_videos: usize,
    /// Training chains for fitted predictors.
    #[serde(default)]
    pub n_train: usize,
    #[serde(default)]
    pub ridge: f64,
    /// Fixed residual noise scale; per-step estimates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_std: Option<f64>,
    /// How many generated videos to write as `.pvid` files.
    #[serde(default = "default_saved")]
    pub save_videos: usize,
}

fn default_saved() -> usize {
    8
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            chain: GaussianChainConfig::pinned(ChainOrder::HighOrder),
            context_window: 2,
            predictor: GenPredictor::Oracle,
            teacher_forced: true,
            n_videos: 10_000,
            n_train: 0,
            ridge: 0.0,
            residual_std: None,
            save_videos: 8,
        }
    }
}

impl GenerateConfig {
    fn check(&self) -> Result<(), RunError> {
        let t = self.chain.kind()?.n_frames();
        let d = self.chain.source()?.dim();
        let c = self.context_window;
        if c == 0 || c >= t {
            return config_err(format!("context window {c} outside 1..{t}"));
        }
        if self.n_videos == 0 {
            return config_err("n_videos must be positive");
        }
        if self.predictor != GenPredictor::Oracle && self.n_train < c * d + 2 {
            return config_err(format!("n_train {} below the minimum {} for a fitted predictor", self.n_train, c * d + 2));
        }
        if let Some(s) = self.residual_std {
            if !(s >= 0.0 && s.is_finite()) {
                return config_err("residual_std must be nonnegative");
            }
        }
        Ok(())
    }
}

config_impl!(GenerateConfig);

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Randomized Gaussian configurations in the monotonicity sweep.
    pub monotone_configs: usize,
    pub max_dim: usize,
    pub max_frames: usize,
    /// Randomized first-order chains (Gaussian and discrete each).
    pub equality_configs: usize,
    /// Randomized high-order chains in the strict-gap sweep.
    pub strict_configs: usize,
    pub monte_carlo_samples: usize,
    /// Randomized order-2 discrete chains and how many must show a strict gap.
    pub discrete_specs: usize,
    pub discrete_min_strict: usize,
    pub empirical_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            monotone_configs: 100,
            max_dim: 4,
            max_frames: 6,
            equality_configs: 50,
            strict_configs: 50,
            monte_carlo_samples: 1_000_000,
            discrete_specs: 50,
            discrete_min_strict: 45,
            empirical_samples: 100_000,
        }
    }
}

impl VerifyConfig {
    fn check(&self) -> Result<(), RunError> {
        if self.max_dim == 0 || self.max_frames < 3 {
            return config_err("verify needs max_dim >= 1 and max_frames >= 3");
        }
        if self.discrete_min_strict > self.discrete_specs {
            return config_err("discrete_min_strict exceeds discrete_specs");
        }
        if self.monte_carlo_samples < 2 || self.empirical_samples < 8 {
            return config_err("sample counts too small");
        }
        Ok(())
    }
}

config_impl!(VerifyConfig);
