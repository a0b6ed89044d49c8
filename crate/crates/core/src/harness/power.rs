//! Received power of a single tag behind a conventional RIS versus a
//! fully-connected BD-RIS.
//!
//! A trial draws one tag position and one set of source–RIS and RIS–tag
//! channels at the largest `N`; smaller surfaces use the leading elements of
//! the same draw, so the sweep over `N` compares like with like. The direct
//! source–tag path is omitted.

use crate::bdris::{optimal_diagonal_single_tag, optimal_fully_connected_single_tag, BdRisArchitecture};
use crate::channel::{linear_to_db, ChannelConfig};
use crate::exec::{map_indexed, Execution};
use crate::linalg::{CMatrix, CVector};
use crate::seed::{child_rng, child_seed, rng_from_seed};
use crate::{Error, Result};

use super::config::RisType;

pub const POWER_EXPERIMENT: &str = "power-comparison";

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpec {
    pub element_counts: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub channel: ChannelConfig,
    pub ris_types: Vec<RisType>,
    pub execution: Execution,
}

impl Default for PowerSpec {
    fn default() -> Self {
        Self {
            element_counts: vec![8, 16, 32, 64],
            trials: 200,
            master_seed: 0,
            channel: ChannelConfig::default(),
            ris_types: vec![RisType::Diagonal, RisType::FullyConnected],
            execution: Execution::Sequential,
        }
    }
}

impl PowerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.element_counts.is_empty() || self.ris_types.is_empty() {
            return Err(Error::InvalidInput("trials, element_counts and ris_types must be non-empty".into()));
        }
        if self.element_counts.contains(&0) {
            return Err(Error::InvalidInput("element counts must be positive".into()));
        }
        self.channel.validate()
    }

    pub fn trial_seed(&self, t: usize) -> u64 {
        child_seed(self.master_seed, POWER_EXPERIMENT, t as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRow {
    pub n: usize,
    pub ris_type: RisType,
    pub trial: usize,
    pub received_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSummary {
    pub n: usize,
    pub ris_type: RisType,
    pub trials: usize,
    /// Average received power (linear mean) in dBm.
    pub mean_received_power_dbm: f64,
    /// Mean per-trial dB difference to the diagonal RIS; NaN without one.
    pub mean_gap_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerTable {
    /// Sorted by `N`, then RIS type in request order, then trial.
    pub rows: Vec<PowerRow>,
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

impl PowerTable {
    fn column(&self, n: usize, ris_type: RisType) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.ris_type == ris_type)
            .map(|r| r.received_power_dbm)
            .collect()
    }

    pub fn element_counts(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = Vec::new();
        for r in &self.rows {
            if !ns.contains(&r.n) {
                ns.push(r.n);
            }
        }
        ns
    }

    /// Mean over trials of `P_hi − P_lo` in dB.
    pub fn mean_gap_db(&self, n: usize, hi: RisType, lo: RisType) -> Option<f64> {
        let (a, b) = (self.column(n, hi), self.column(n, lo));
        if a.is_empty() || a.len() != b.len() {
            return None;
        }
        Some(a.iter().zip(&b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64)
    }

    /// Ratio of the linear mean powers, `E[P_hi] / E[P_lo]`.
    pub fn mean_power_ratio(&self, n: usize, hi: RisType, lo: RisType) -> Option<f64> {
        let mean = |v: Vec<f64>| {
            let k = v.len();
            (k > 0).then(|| v.into_iter().map(dbm_to_mw).sum::<f64>() / k as f64)
        };
        Some(mean(self.column(n, hi))? / mean(self.column(n, lo))?)
    }

    /// Trials at `n` where `hi` received strictly less power than `lo`.
    pub fn dominance_violations(&self, n: usize, hi: RisType, lo: RisType) -> usize {
        let (a, b) = (self.column(n, hi), self.column(n, lo));
        a.iter().zip(&b).filter(|(x, y)| x < y).count()
    }

    /// One entry per `(N, RIS type)` in row order.
    pub fn summary(&self) -> Vec<PowerSummary> {
        let mut keys: Vec<(usize, RisType)> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.n, r.ris_type)) {
                keys.push((r.n, r.ris_type));
            }
        }
        keys.into_iter()
            .map(|(n, ris_type)| {
                let p = self.column(n, ris_type);
                let mean_mw = p.iter().copied().map(dbm_to_mw).sum::<f64>() / p.len() as f64;
                PowerSummary {
                    n,
                    ris_type,
                    trials: p.len(),
                    mean_received_power_dbm: linear_to_db(mean_mw),
                    mean_gap_db: self.mean_gap_db(n, ris_type, RisType::Diagonal).unwrap_or(f64::NAN),
                }
            })
            .collect()
    }
}

fn amplitude(ris_type: RisType, b: &CVector, c: &CVector, seed: u64, n: usize) -> Result<f64> {
    let random = |arch: BdRisArchitecture| -> Result<f64> {
        let theta = arch.random_feasible(n, &mut child_rng(seed, ris_type.name(), n as u64))?;
        Ok((b.adjoint() * theta * c)[(0, 0)].norm())
    };
    match ris_type {
        RisType::Diagonal => Ok(optimal_diagonal_single_tag(b, c)?.amplitude),
        RisType::FullyConnected => Ok(optimal_fully_connected_single_tag(b, c)?.amplitude),
        RisType::RandomDiagonal => random(BdRisArchitecture::Diagonal),
        RisType::RandomFullyConnected => random(BdRisArchitecture::FullyConnected),
    }
}

/// Rows of one trial, ordered by `N` then RIS type.
fn run_trial(spec: &PowerSpec, t: usize) -> Result<Vec<PowerRow>> {
    let seed = spec.trial_seed(t);
    let n_max = *spec.element_counts.iter().max().expect("validated");
    let mut rng = rng_from_seed(seed);
    let position = spec.channel.geometry.device_area.sample(&mut rng);
    let b_full = spec.channel.ris_device_link(position, n_max, &mut rng)?;
    let c_full: CMatrix = spec.channel.bs_ris_link(n_max, 1, &mut rng)?;
    let tx = spec.channel.tx_power_dbm();
    let mut rows = Vec::with_capacity(spec.element_counts.len() * spec.ris_types.len());
    for &n in &spec.element_counts {
        let b = b_full.rows(0, n).into_owned();
        let c = c_full.view((0, 0), (n, 1)).column(0).into_owned();
        for &ris_type in &spec.ris_types {
            let amp = amplitude(ris_type, &b, &c, seed, n)?;
            rows.push(PowerRow { n, ris_type, trial: t, received_power_dbm: tx + 20.0 * amp.log10() });
        }
    }
    Ok(rows)
}

/// Runs every trial; the result depends only on `spec`, not on the
/// execution mode.
pub fn power_comparison(spec: &PowerSpec) -> Result<PowerTable> {
    spec.validate()?;
    let per_trial = map_indexed(spec.execution, spec.trials, |t| run_trial(spec, t));
    let mut rows = Vec::with_capacity(spec.trials * spec.element_counts.len() * spec.ris_types.len());
    for trial in per_trial {
        rows.extend(trial?);
    }
    let n_pos = |n: usize| spec.element_counts.iter().position(|&x| x == n);
    let t_pos = |r: RisType| spec.ris_types.iter().position(|&x| x == r);
    rows.sort_by_key(|r| (n_pos(r.n), t_pos(r.ris_type), r.trial));
    Ok(PowerTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PowerSpec {
        PowerSpec {
            trials: 20,
            master_seed: 5,
            ris_types: vec![
                RisType::Diagonal,
                RisType::FullyConnected,
                RisType::RandomDiagonal,
                RisType::RandomFullyConnected,
            ],
            ..PowerSpec::default()
        }
    }

    #[test]
    fn optimized_surfaces_dominate_random_ones() {
        let table = power_comparison(&small()).unwrap();
        assert_eq!(table.rows.len(), 4 * 4 * 20);
        for n in table.element_counts() {
            assert_eq!(table.dominance_violations(n, RisType::FullyConnected, RisType::Diagonal), 0);
            assert_eq!(table.dominance_violations(n, RisType::Diagonal, RisType::RandomDiagonal), 0);
            assert_eq!(table.dominance_violations(n, RisType::FullyConnected, RisType::RandomFullyConnected), 0);
        }
    }

    #[test]
    fn schedule_does_not_change_results() {
        let a = power_comparison(&small()).unwrap();
        let b = power_comparison(&PowerSpec { execution: Execution::Parallel, ..small() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_element_surfaces_coincide() {
        let spec = PowerSpec { element_counts: vec![1, 4], trials: 10, ..PowerSpec::default() };
        let table = power_comparison(&spec).unwrap();
        let gap = table.mean_gap_db(1, RisType::FullyConnected, RisType::Diagonal).unwrap();
        assert!(gap.abs() <= 1e-12, "{gap}");
    }

    #[test]
    fn smaller_surfaces_reuse_leading_elements() {
        // Power grows with N for the fully-connected optimum on every trial,
        // because ‖b_N‖‖c_N‖ grows with the prefix length.
        let table = power_comparison(&PowerSpec { trials: 10, ..PowerSpec::default() }).unwrap();
        for t in 0..10 {
            let p: Vec<f64> = table
                .rows
                .iter()
                .filter(|r| r.trial == t && r.ris_type == RisType::FullyConnected)
                .map(|r| r.received_power_dbm)
                .collect();
            assert!(p.windows(2).all(|w| w[0] <= w[1]), "{p:?}");
        }
    }

    #[test]
    fn summary_reports_linear_mean_in_dbm() {
        let table = PowerTable {
            rows: vec![
                PowerRow { n: 2, ris_type: RisType::Diagonal, trial: 0, received_power_dbm: 0.0 },
                PowerRow { n: 2, ris_type: RisType::Diagonal, trial: 1, received_power_dbm: 10.0 },
            ],
        };
        let s = table.summary();
        assert!((s[0].mean_received_power_dbm - linear_to_db(5.5)).abs() <= 1e-12);
        assert_eq!(s[0].mean_gap_db, 0.0);
    }
}
