//! Experiment configuration files.
//!
//! A config is TOML: top-level `key = value` lines followed by `[channel]`,
//! `[channel.geometry]`, `[channel.path_loss]`, `[channel.fading]`,
//! `[mobility]`, `[optimizer]` and `[qml]` sections. Every key is optional
//! except `experiment`; unknown keys are rejected. Resolution fills every
//! default, so the resolved file is a complete, self-contained config.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, MobilityConfig};
use crate::optim::{Algorithm, OptimizerConfig, SweepArchitecture, ThetaInit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PowerComparison,
    BeamformingBench,
    QmlBeam,
}

impl ExperimentKind {
    /// Label used for per-trial seed derivation.
    pub fn name(self) -> &'static str {
        match self {
            Self::PowerComparison => "power-comparison",
            Self::BeamformingBench => "beamforming-bench",
            Self::QmlBeam => "qml-beam",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Self::PowerComparison => 200,
            Self::BeamformingBench => 50,
            Self::QmlBeam => 1,
        }
    }

    pub fn default_element_counts(self) -> Vec<usize> {
        match self {
            Self::PowerComparison => vec![8, 16, 32, 64],
            Self::BeamformingBench => vec![16, 32, 64, 128],
            Self::QmlBeam => Vec::new(),
        }
    }

    fn uses_elements(self) -> bool {
        self != Self::QmlBeam
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Surface configuration compared in the power experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RisType {
    /// Conventional RIS with the phase-aligned single-tag optimum.
    Diagonal,
    /// BD-RIS with the Cauchy–Schwarz single-tag optimum.
    FullyConnected,
    /// Uniformly random phases.
    RandomDiagonal,
    /// Haar-random unitary.
    RandomFullyConnected,
}

impl RisType {
    pub fn name(self) -> &'static str {
        match self {
            Self::Diagonal => "diagonal",
            Self::FullyConnected => "fully-connected",
            Self::RandomDiagonal => "random-diagonal",
            Self::RandomFullyConnected => "random-fully-connected",
        }
    }
}

impl fmt::Display for RisType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    Haar,
    Identity,
}

/// The numeric optimizer settings plus the starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub max_iterations: usize,
    pub objective_tolerance: f64,
    pub gradient_tolerance: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    pub lbfgs_memory: usize,
    pub fp_inner_theta_steps: usize,
    pub init: InitKind,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            max_iterations: d.max_iterations,
            objective_tolerance: d.objective_tolerance,
            gradient_tolerance: d.gradient_tolerance,
            armijo_c: d.armijo_c,
            backtrack_factor: d.backtrack_factor,
            initial_step: d.initial_step,
            max_backtracks: d.max_backtracks,
            lbfgs_memory: d.lbfgs_memory,
            fp_inner_theta_steps: d.fp_inner_theta_steps,
            init: InitKind::Haar,
        }
    }
}

impl OptimizerSection {
    /// Seeds are assigned per trial by the benchmark.
    pub fn to_optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_iterations: self.max_iterations,
            objective_tolerance: self.objective_tolerance,
            gradient_tolerance: self.gradient_tolerance,
            armijo_c: self.armijo_c,
            backtrack_factor: self.backtrack_factor,
            initial_step: self.initial_step,
            max_backtracks: self.max_backtracks,
            lbfgs_memory: self.lbfgs_memory,
            fp_inner_theta_steps: self.fp_inner_theta_steps,
            seed: 0,
            init: match self.init {
                InitKind::Haar => ThetaInit::Haar,
                InitKind::Identity => ThetaInit::Identity,
            },
        }
    }
}

/// Synthetic dataset, circuit and training settings of `qml-beam`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QmlSection {
    pub num_qubits: usize,
    pub num_layers: usize,
    pub num_beams: usize,
    pub num_samples: usize,
    pub noise_sigma: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
}

impl Default for QmlSection {
    fn default() -> Self {
        Self {
            num_qubits: 4,
            num_layers: 2,
            num_beams: 4,
            num_samples: 500,
            noise_sigma: 0.01,
            epochs: 200,
            learning_rate: 0.5,
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: u64,
    /// Defaults per experiment: 200 power trials, 50 benchmark trials, one
    /// QML run.
    pub trials: Option<usize>,
    pub element_counts: Option<Vec<usize>>,
    pub algorithms: Vec<Algorithm>,
    pub architecture: SweepArchitecture,
    pub num_devices: usize,
    pub ris_types: Vec<RisType>,
    pub output_dir: PathBuf,
    pub channel: ChannelConfig,
    pub mobility: MobilityConfig,
    pub optimizer: OptimizerSection,
    pub qml: QmlSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            trials: None,
            element_counts: None,
            algorithms: Algorithm::ALL.to_vec(),
            architecture: SweepArchitecture::FullyConnected,
            num_devices: 4,
            ris_types: vec![RisType::Diagonal, RisType::FullyConnected],
            output_dir: PathBuf::from("results"),
            channel: ChannelConfig::default(),
            mobility: MobilityConfig::default(),
            optimizer: OptimizerSection::default(),
            qml: QmlSection::default(),
        }
    }
}

/// A config fault. `Display` is a single line:
/// `error[config] <origin>[:<line>:<col>]: <message>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: String,
    /// 1-based line and column of the offending text, when known.
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl ConfigError {
    fn new(origin: &str, message: impl Into<String>) -> Self {
        Self { origin: origin.to_owned(), location: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[config] {}", self.origin)?;
        if let Some((line, col)) = self.location {
            write!(f, ":{line}:{col}")?;
        }
        // Keep the report on one line whatever the parser produced.
        write!(f, ": {}", self.message.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line and column of byte `offset`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, col)
}

impl ExperimentConfig {
    /// Parses without resolving or validating. `origin` names the source in
    /// error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e: toml::de::Error| ConfigError {
            origin: origin.to_owned(),
            location: e.span().map(|s| line_col(text, s.start)),
            message: e.message().to_owned(),
        })
    }

    pub fn trials(&self) -> usize {
        self.trials.or_else(|| self.experiment.map(ExperimentKind::default_trials)).unwrap_or(1)
    }

    pub fn element_counts(&self) -> Vec<usize> {
        self.element_counts
            .clone()
            .or_else(|| self.experiment.map(ExperimentKind::default_element_counts))
            .unwrap_or_default()
    }

    /// Makes every experiment-dependent default explicit and checks the
    /// result, returning every fault found.
    pub fn resolve(mut self, origin: &str) -> Result<Self, Vec<ConfigError>> {
        let Some(kind) = self.experiment else {
            return Err(vec![ConfigError::new(origin, "experiment missing")]);
        };
        self.trials = Some(self.trials());
        self.element_counts = Some(self.element_counts());
        let errors: Vec<ConfigError> =
            self.problems(kind).into_iter().map(|m| ConfigError::new(origin, m)).collect();
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(errors)
        }
    }

    fn problems(&self, kind: ExperimentKind) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                out.push(msg);
            }
        };
        check(self.seed <= i64::MAX as u64, format!("seed {} exceeds {}", self.seed, i64::MAX));
        check(self.trials() >= 1, "trials must be at least 1".into());
        let counts = self.element_counts();
        if kind.uses_elements() {
            check(!counts.is_empty(), "element_counts must be non-empty".into());
            check(!counts.contains(&0), "element_counts must be positive".into());
        }
        if let Err(e) = self.channel.validate() {
            check(false, format!("channel: {e}"));
        }
        match kind {
            ExperimentKind::PowerComparison => {
                check(!self.ris_types.is_empty(), "ris_types must be non-empty".into());
            }
            ExperimentKind::BeamformingBench => {
                check(!self.algorithms.is_empty(), "algorithms must be non-empty".into());
                check(self.num_devices >= 1, "num_devices must be at least 1".into());
                check(self.mobility.snapshots >= 1, "mobility.snapshots must be at least 1".into());
                check(
                    self.mobility.dt_s > 0.0 && self.mobility.speeds.is_valid(),
                    "mobility needs a positive dt_s and 0 <= min_mps <= max_mps".into(),
                );
                if let Err(e) = self.optimizer.to_optimizer_config().validate() {
                    check(false, format!("optimizer: {e}"));
                }
                for &n in counts.iter().filter(|&&n| n > 0) {
                    if let Err(e) = self.architecture.for_elements(n) {
                        check(false, format!("architecture: {e}"));
                    }
                }
            }
            ExperimentKind::QmlBeam => {
                let q = &self.qml;
                check(
                    (1..=crate::qml::MAX_QUBITS).contains(&q.num_qubits),
                    format!("qml.num_qubits must lie in 1..={}", crate::qml::MAX_QUBITS),
                );
                check(q.num_layers >= 1, "qml.num_layers must be at least 1".into());
                check(q.num_beams >= 1, "qml.num_beams must be at least 1".into());
                check(q.num_samples >= 2, "qml.num_samples must be at least 2".into());
                check(q.noise_sigma >= 0.0 && q.noise_sigma.is_finite(), "qml.noise_sigma must be >= 0".into());
                check(q.epochs >= 1, "qml.epochs must be at least 1".into());
                check(
                    q.learning_rate > 0.0 && q.learning_rate.is_finite(),
                    "qml.learning_rate must be positive".into(),
                );
                check(
                    (0.0..1.0).contains(&q.validation_fraction),
                    "qml.validation_fraction must lie in [0, 1)".into(),
                );
            }
        }
        out
    }

    /// TOML text of the config, suitable for reparsing.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}

/// Reads, parses, resolves and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| vec![ConfigError::new(&origin, e.to_string())])?;
    ExperimentConfig::parse(&text, &origin).map_err(|e| vec![e])?.resolve(&origin)
}
