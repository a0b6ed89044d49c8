//! Scattering-matrix design for a BD-RIS assisted multi-user MISO link.
//!
//! Four algorithms share one feasibility model (unitary or block-unitary
//! `Θ`):
//!
//! | algorithm | objective | method |
//! |-----------|-----------|--------|
//! | [`rzf_one_shot`] | cross term `Re tr(Θ†M)` | one Procrustes solve |
//! | [`ao_manifold`] | channel gain | Riemannian gradient ascent, Armijo, polar retraction |
//! | [`qnm_manifold`] | channel gain | Riemannian L-BFGS, projection transport |
//! | [`fp_sum_rate`] | sum rate | quadratic-transform alternation |
//!
//! Every design is scored afterwards with [`sum_rate`] under an RZF
//! precoder, which is what [`benchmark`] reports.

mod ao;
mod bench;
mod feasible;
mod fp;
mod problem;
mod qnm;
mod rate;
mod rzf;

use std::fmt;
use std::str::FromStr;

pub use ao::{ao_manifold, ao_manifold_observed};
pub use bench::{benchmark, BenchmarkRow, BenchmarkSpec, BenchmarkSummary, BenchmarkTable, SweepArchitecture, EXPERIMENT as BENCH_EXPERIMENT};
pub use feasible::FeasibleSet;
pub use fp::{fp_sum_rate, fp_sum_rate_observed};
pub use problem::{euclidean_gradient, GainProblem};
pub use qnm::{qnm_manifold, qnm_manifold_observed};
pub use rate::{rzf_precoder, sinr, sum_rate};
pub use rzf::rzf_one_shot;

use serde::{Deserialize, Serialize};

use crate::bdris::BdRisArchitecture;
use crate::channel::ChannelRealization;
use crate::linalg::CMatrix;
use crate::manifold::UnitaryMatrix;
use crate::{Error, Result};

/// Starting point of the iterative designs.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ThetaInit {
    /// Haar-random (block-wise for group structures), seeded by `seed`.
    #[default]
    Haar,
    Identity,
    /// A given feasible matrix; projected onto the architecture first.
    Fixed(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop when the relative objective gain falls below this (on two
    /// consecutive iterations for the manifold ascents).
    pub objective_tolerance: f64,
    /// Stop when `‖grad‖ ≤ gradient_tolerance·(1 + φ)` for the normalised
    /// objective `φ`.
    pub gradient_tolerance: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Frobenius length of the first trial step.
    pub initial_step: f64,
    /// Consecutive failed backtracks before a run is declared stalled.
    pub max_backtracks: usize,
    pub lbfgs_memory: usize,
    pub fp_inner_theta_steps: usize,
    pub seed: u64,
    pub init: ThetaInit,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            objective_tolerance: 1e-6,
            gradient_tolerance: 1e-4,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            initial_step: 1.0,
            max_backtracks: 50,
            lbfgs_memory: 10,
            fp_inner_theta_steps: 20,
            seed: 0,
            init: ThetaInit::Haar,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.max_iterations > 0
            && self.objective_tolerance > 0.0
            && self.gradient_tolerance > 0.0
            && self.armijo_c > 0.0
            && self.initial_step > 0.0
            && self.max_backtracks > 0
            && self.lbfgs_memory > 0
            && self.fp_inner_theta_steps > 0;
        if !positive {
            return Err(Error::InvalidInput("optimizer parameters must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidInput("backtrack_factor must lie in (0, 1)".into()));
        }
        if self.armijo_c >= 1.0 {
            return Err(Error::InvalidInput("armijo_c must be below 1".into()));
        }
        Ok(())
    }
}

/// What an algorithm's `objective_trace` measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `Σ‖a† + b†ΘC‖²`
    ChannelGain,
    /// Mean sum rate per snapshot in bits/s/Hz under the tracked precoder.
    SumRate,
    /// `Re tr(Θ†M)` with `M = Σ b a† C†`.
    CrossTerm,
}

impl ObjectiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ChannelGain => "channel_gain",
            Self::SumRate => "sum_rate",
            Self::CrossTerm => "cross_term",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Note {
    /// The cross-term matrix carried no information; a Haar draw was used.
    RankDeficientFallback,
    /// Armijo backtracking failed; the step was declared zero.
    LineSearchStall,
    /// Hit `max_iterations`.
    IterationLimit,
    /// Progress stalled before the gradient test was met.
    SlowProgress,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerResult {
    pub theta: UnitaryMatrix,
    pub objective_trace: Vec<f64>,
    pub objective: ObjectiveKind,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Riemannian gradient norm of the normalised objective at the last
    /// iterate (zero for the one-shot design).
    pub final_gradient_norm: f64,
    pub notes: Vec<Note>,
}

impl OptimizerResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    Rzf,
    Fp,
    Ao,
    Qnm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Rzf, Algorithm::Fp, Algorithm::Ao, Algorithm::Qnm];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rzf => "rzf",
            Self::Fp => "fp",
            Self::Ao => "ao",
            Self::Qnm => "qnm",
        }
    }

    pub fn run(
        self,
        realizations: &[ChannelRealization],
        arch: &BdRisArchitecture,
        cfg: &OptimizerConfig,
    ) -> Result<OptimizerResult> {
        match self {
            Self::Rzf => rzf_one_shot(realizations, arch, cfg),
            Self::Fp => fp_sum_rate(realizations, arch, cfg),
            Self::Ao => ao_manifold(realizations, arch, cfg),
            Self::Qnm => qnm_manifold(realizations, arch, cfg),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.as_str().to_owned()
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rzf" => Ok(Self::Rzf),
            "fp" => Ok(Self::Fp),
            "ao" => Ok(Self::Ao),
            "qnm" => Ok(Self::Qnm),
            other => Err(Error::InvalidInput(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Shape checks shared by every algorithm: returns `(N, M)`.
pub(crate) fn check_realizations(realizations: &[ChannelRealization]) -> Result<(usize, usize)> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one realization is required".into()))?;
    let shape = first.bs_ris.shape();
    for r in realizations {
        r.validate()?;
        if r.bs_ris.shape() != shape {
            return Err(Error::DimensionMismatch(format!(
                "realizations mix C shapes {:?} and {:?}",
                shape,
                r.bs_ris.shape()
            )));
        }
    }
    Ok(shape)
}
