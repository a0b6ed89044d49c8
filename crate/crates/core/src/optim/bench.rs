use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bdris::BdRisArchitecture;
use crate::channel::{generate_realization, sample_trajectory, ChannelConfig, ChannelRealization, MobilityConfig};
use crate::exec::{map_indexed, Execution};
use crate::manifold::BlockStructure;
use crate::seed::{child_rng, child_seed};
use crate::{Error, Result};

use super::{sum_rate, Algorithm, ObjectiveKind, OptimizerConfig};

/// Experiment label used to derive per-trial seeds.
pub const EXPERIMENT: &str = "beamforming-bench";

/// Architecture of a sweep, instantiated for each element count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SweepArchitecture {
    Diagonal,
    #[default]
    FullyConnected,
    /// Consecutive groups of this many elements; `N` must be a multiple.
    GroupSize(usize),
}

impl SweepArchitecture {
    pub fn for_elements(self, n: usize) -> Result<BdRisArchitecture> {
        Ok(match self {
            Self::Diagonal => BdRisArchitecture::Diagonal,
            Self::FullyConnected => BdRisArchitecture::FullyConnected,
            Self::GroupSize(k) => {
                if k == 0 || !n.is_multiple_of(k) {
                    return Err(Error::InvalidInput(format!("group size {k} does not divide N = {n}")));
                }
                BdRisArchitecture::GroupConnected(BlockStructure::new(vec![k; n / k], None)?)
            }
        })
    }
}

impl fmt::Display for SweepArchitecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Diagonal => f.write_str("diagonal"),
            Self::FullyConnected => f.write_str("fully-connected"),
            Self::GroupSize(k) => write!(f, "group-{k}"),
        }
    }
}

impl TryFrom<String> for SweepArchitecture {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SweepArchitecture> for String {
    fn from(a: SweepArchitecture) -> String {
        a.to_string()
    }
}

impl FromStr for SweepArchitecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(Self::Diagonal),
            "fully-connected" => Ok(Self::FullyConnected),
            other => other
                .strip_prefix("group-")
                .and_then(|k| k.parse().ok())
                .filter(|&k: &usize| k > 0)
                .map(Self::GroupSize)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "unknown architecture {other:?} (expected diagonal, fully-connected or group-K)"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub algorithms: Vec<Algorithm>,
    pub element_counts: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub num_devices: usize,
    pub channel: ChannelConfig,
    pub mobility: MobilityConfig,
    pub optimizer: OptimizerConfig,
    pub architecture: SweepArchitecture,
    /// Trial scheduling. Timing comparisons need [`Execution::Sequential`].
    pub execution: Execution,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            element_counts: vec![16, 32, 64, 128],
            trials: 50,
            master_seed: 0,
            num_devices: 4,
            channel: ChannelConfig::default(),
            mobility: MobilityConfig::default(),
            optimizer: OptimizerConfig::default(),
            architecture: SweepArchitecture::FullyConnected,
            execution: Execution::Sequential,
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() || self.element_counts.is_empty() {
            return Err(Error::InvalidInput("algorithms and element_counts must be non-empty".into()));
        }
        if self.element_counts.contains(&0) || self.num_devices == 0 || self.mobility.snapshots == 0 {
            return Err(Error::InvalidInput("N, devices and snapshots must be positive".into()));
        }
        for &n in &self.element_counts {
            self.architecture.for_elements(n)?;
        }
        self.channel.validate()?;
        self.optimizer.validate()
    }

    /// Seed of trial `t`, shared by every element count and algorithm.
    pub fn trial_seed(&self, t: usize) -> u64 {
        child_seed(self.master_seed, EXPERIMENT, t as u64)
    }

    /// The channel snapshots of trial `t` at `n` elements. Device trajectories
    /// depend only on the trial, so every `N` sees the same motion.
    pub fn realizations(&self, t: usize, n: usize) -> Result<Vec<ChannelRealization>> {
        let seed = self.trial_seed(t);
        let area = self.channel.geometry.device_area;
        let trajectory = sample_trajectory(&area, self.num_devices, &self.mobility, &mut child_rng(seed, "mobility", 0));
        let mut rng = child_rng(seed, "channel", n as u64);
        trajectory.iter().map(|devices| generate_realization(&self.channel, devices, n, &mut rng)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub trial: usize,
    /// Mean over snapshots of the RZF-precoded sum rate.
    pub sum_rate_bps_hz: f64,
    pub per_device_rate_bps_hz: f64,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The optimiser's own final objective value, of kind `objective`.
    pub final_objective: f64,
    pub objective: ObjectiveKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSummary {
    pub algorithm: Algorithm,
    pub n: usize,
    pub trials: usize,
    pub mean_sum_rate_bps_hz: f64,
    pub std_sum_rate_bps_hz: f64,
    pub mean_wall_time_s: f64,
    pub median_wall_time_s: f64,
    pub std_wall_time_s: f64,
    pub mean_iterations: f64,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkTable {
    /// Sorted by algorithm (in request order), then `N`, then trial.
    pub rows: Vec<BenchmarkRow>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for a single value.
fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

impl BenchmarkTable {
    /// One entry per `(algorithm, N)` in row order.
    pub fn summary(&self) -> Vec<BenchmarkSummary> {
        let mut keys: Vec<(Algorithm, usize)> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.algorithm, r.n)) {
                keys.push((r.algorithm, r.n));
            }
        }
        keys.into_iter()
            .map(|(algorithm, n)| {
                let rows: Vec<&BenchmarkRow> =
                    self.rows.iter().filter(|r| r.algorithm == algorithm && r.n == n).collect();
                let rates: Vec<f64> = rows.iter().map(|r| r.sum_rate_bps_hz).collect();
                let times: Vec<f64> = rows.iter().map(|r| r.wall_time_s).collect();
                let iters: Vec<f64> = rows.iter().map(|r| r.iterations as f64).collect();
                BenchmarkSummary {
                    algorithm,
                    n,
                    trials: rows.len(),
                    mean_sum_rate_bps_hz: mean(&rates),
                    std_sum_rate_bps_hz: std_dev(&rates),
                    mean_wall_time_s: mean(&times),
                    median_wall_time_s: median(&times),
                    std_wall_time_s: std_dev(&times),
                    mean_iterations: mean(&iters),
                    converged_fraction: rows.iter().filter(|r| r.converged).count() as f64 / rows.len() as f64,
                }
            })
            .collect()
    }

    pub fn get(&self, algorithm: Algorithm, n: usize) -> Option<BenchmarkSummary> {
        self.summary().into_iter().find(|s| s.algorithm == algorithm && s.n == n)
    }
}

fn run_trial(spec: &BenchmarkSpec, t: usize) -> Result<Vec<BenchmarkRow>> {
    let seed = spec.trial_seed(t);
    let mut rows = Vec::with_capacity(spec.element_counts.len() * spec.algorithms.len());
    for &n in &spec.element_counts {
        let realizations = spec.realizations(t, n)?;
        let arch = spec.architecture.for_elements(n)?;
        let cfg = OptimizerConfig { seed: child_seed(seed, "init", n as u64), ..spec.optimizer.clone() };
        for &algorithm in &spec.algorithms {
            let res = algorithm.run(&realizations, &arch, &cfg)?;
            let rates = realizations
                .iter()
                .map(|r| sum_rate(res.theta.matrix(), r))
                .collect::<Result<Vec<f64>>>()?;
            let rate = mean(&rates);
            log::debug!("trial {t} N={n} {algorithm}: {rate:.6e} bps/Hz in {:.3}s", res.wall_time_s);
            rows.push(BenchmarkRow {
                algorithm,
                n,
                trial: t,
                sum_rate_bps_hz: rate,
                per_device_rate_bps_hz: rate / spec.num_devices as f64,
                wall_time_s: res.wall_time_s,
                iterations: res.iterations,
                converged: res.converged,
                final_objective: res.final_objective(),
                objective: res.objective,
            });
        }
    }
    Ok(rows)
}

/// Runs every algorithm on every trial and element count.
///
/// Results depend only on `spec` (including `master_seed`), never on the
/// execution mode; only `wall_time_s` varies between runs.
pub fn benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkTable> {
    spec.validate()?;
    let per_trial = map_indexed(spec.execution, spec.trials, |t| run_trial(spec, t));
    let mut rows = Vec::with_capacity(spec.trials * spec.algorithms.len() * spec.element_counts.len());
    for trial in per_trial {
        rows.extend(trial?);
    }
    let order = |a: Algorithm| spec.algorithms.iter().position(|&x| x == a);
    let position = |n: usize| spec.element_counts.iter().position(|&x| x == n);
    rows.sort_by_key(|r| (order(r.algorithm), position(r.n), r.trial));
    Ok(BenchmarkTable { rows })
}
