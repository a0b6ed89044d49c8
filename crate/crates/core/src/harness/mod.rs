//! Config-driven experiment runner.
//!
//! [`run`] executes one of three experiments and writes, into the output
//! directory:
//!
//! * `results.csv`: one row per trial-level measurement;
//! * `schema.txt`: the `results.csv` columns with types and meanings;
//! * `summary.csv` and `checks.csv`: aggregates and ordinal pass/fail checks;
//! * `config.resolved`: the config with every default made explicit;
//! * `manifest.txt`: tool version, master seed and every trial seed;
//! * `plotspec.csv`: which columns reproduce each figure.
//!
//! Trial `t` of experiment `name` is seeded with
//! `child_seed(seed, name, t)` (see [`crate::seed`]). All outputs except
//! wall-time columns are a pure function of the resolved config.

mod config;
mod output;
mod power;

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

pub use config::{
    load_config, ConfigError, ExperimentConfig, ExperimentKind, InitKind, OptimizerSection, QmlSection, RisType,
};
pub use output::{
    schema_names, write_checks, write_plotspec, write_schema, Check, Column, PlotSpec, Table, BENCH_COLUMNS,
    PLOTSPEC_HEADER, POWER_COLUMNS, QML_COLUMNS,
};
pub use power::{power_comparison, PowerRow, PowerSpec, PowerSummary, PowerTable, POWER_EXPERIMENT};

use crate::csvio::format_f64;
use crate::exec::{with_threads, Execution};
use crate::optim::{benchmark, Algorithm, BenchmarkSpec, BenchmarkTable};
use crate::qml::{
    confusion_matrix, generate_synthetic_dataset, train_hybrid, write_confusion_csv, HybridModel, TrainConfig,
    TrainingOutcome,
};
use crate::seed::{child_rng, child_seed};
use output::write_file;

pub const TOOL_NAME: &str = "bdris";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads for trial-level parallelism; 1 runs sequentially.
    pub threads: usize,
    /// Omit wall-time columns so reruns are byte-identical.
    pub no_timing: bool,
    /// Treat optimizer non-convergence as a runtime fault.
    pub strict: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: None, out_dir: None, threads: 1, no_timing: false, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    /// Bad config or options; exit status 1.
    Config(Vec<ConfigError>),
    /// Failure while running or writing; exit status 2.
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for HarnessError {
    /// Always a single line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(errors) => {
                let lines: Vec<String> = errors.iter().map(ToString::to_string).collect();
                f.write_str(&lines.join("; "))
            }
            Self::Runtime(msg) => write!(f, "error[runtime] {}", msg.replace('\n', " ")),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<crate::Error> for HarnessError {
    fn from(e: crate::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Runtime(format!("{}: {e}", path.display()))
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    pub out_dir: PathBuf,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

/// Applies the overrides in `opts` and resolves the result.
pub fn apply_overrides(mut config: ExperimentConfig, opts: &RunOptions, origin: &str) -> Result<ExperimentConfig, HarnessError> {
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(dir) = &opts.out_dir {
        config.output_dir = dir.clone();
    }
    let config = config.resolve(origin).map_err(HarnessError::Config)?;
    if opts.threads == 0 {
        let err = ConfigError { origin: origin.to_owned(), location: None, message: "--threads must be at least 1".into() };
        return Err(HarnessError::Config(vec![err]));
    }
    Ok(config)
}

/// Runs the experiment described by `config` after applying `opts`.
///
/// Under `strict`, non-converged optimizer runs make this return
/// [`HarnessError::Runtime`] after all files are written.
pub fn run(config: ExperimentConfig, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    let config = apply_overrides(config, opts, "<config>")?;
    let kind = config.experiment.expect("resolved");
    let out_dir = config.output_dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(io_error(&out_dir))?;
    let execution = if opts.threads > 1 { Execution::Parallel } else { Execution::Sequential };

    let mut warnings = Vec::new();
    if kind == ExperimentKind::BeamformingBench && !opts.no_timing && opts.threads > 1 {
        let w = format!(
            "timing columns are produced with {} threads; wall times are not comparable (use --threads 1)",
            opts.threads
        );
        log::warn!("{w}");
        warnings.push(w);
    }

    let outputs = with_threads(opts.threads, || match kind {
        ExperimentKind::PowerComparison => power_outputs(&config, execution),
        ExperimentKind::BeamformingBench => bench_outputs(&config, execution, opts.no_timing),
        ExperimentKind::QmlBeam => qml_outputs(&config, execution),
    })?;

    let mut files = Vec::new();
    let mut write = |name: &str, f: &dyn Fn(&mut dyn io::Write) -> io::Result<()>| -> Result<(), HarnessError> {
        let path = out_dir.join(name);
        write_file(&path, |w| f(w)).map_err(io_error(&path))?;
        files.push(path);
        Ok(())
    };
    write("results.csv", &|w| outputs.results.write(w))?;
    write("schema.txt", &|w| write_schema(&outputs.columns, w))?;
    write("summary.csv", &|w| outputs.summary.write(w))?;
    write("checks.csv", &|w| write_checks(&outputs.checks, w))?;
    for (name, table) in &outputs.extra {
        write(name, &|w| table.write(w))?;
    }
    write("plotspec.csv", &|w| write_plotspec(&outputs.plots, w))?;
    write("config.resolved", &|w| w.write_all(config.to_toml().as_bytes()))?;
    write("manifest.txt", &|w| write_manifest(&config, opts, w))?;

    for c in &outputs.checks {
        log::info!("check {}: {} ({})", c.name, c.status(), c.detail);
    }
    if opts.strict && outputs.non_converged > 0 {
        return Err(HarnessError::Runtime(format!(
            "{} optimizer runs did not converge (strict mode)",
            outputs.non_converged
        )));
    }
    Ok(RunReport { experiment: kind, out_dir, files, checks: outputs.checks, warnings })
}

/// Trial seeds listed in the manifest.
pub fn trial_seeds(config: &ExperimentConfig) -> Vec<u64> {
    let name = config.experiment.map_or("", ExperimentKind::name);
    (0..config.trials()).map(|t| child_seed(config.seed, name, t as u64)).collect()
}

fn write_manifest(config: &ExperimentConfig, opts: &RunOptions, w: &mut dyn io::Write) -> io::Result<()> {
    let name = config.experiment.map_or("", ExperimentKind::name);
    writeln!(w, "tool = \"{TOOL_NAME} {TOOL_VERSION}\"")?;
    writeln!(w, "experiment = \"{name}\"")?;
    writeln!(w, "seed = {}", config.seed)?;
    writeln!(w, "trials = {}", config.trials())?;
    writeln!(w, "threads = {}", opts.threads)?;
    writeln!(w, "timing = {}", !opts.no_timing)?;
    writeln!(w, "seed_rule = \"child_seed(seed, experiment, t) = mix64(mix64(seed ^ fnv1a64(experiment)) + t)\"")?;
    writeln!(w)?;
    writeln!(w, "[trial_seeds]")?;
    for (t, s) in trial_seeds(config).iter().enumerate() {
        writeln!(w, "{t} = {s}")?;
    }
    Ok(())
}

struct Outputs {
    columns: Vec<Column>,
    results: Table,
    summary: Table,
    checks: Vec<Check>,
    /// Additional named CSV files.
    extra: Vec<(String, Table)>,
    plots: Vec<PlotSpec>,
    non_converged: usize,
}

fn non_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] <= w[1])
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn power_outputs(config: &ExperimentConfig, execution: Execution) -> Result<Outputs, HarnessError> {
    let spec = PowerSpec {
        element_counts: config.element_counts(),
        trials: config.trials(),
        master_seed: config.seed,
        channel: config.channel,
        ris_types: config.ris_types.clone(),
        execution,
    };
    let table = power_comparison(&spec)?;
    Ok(power_report(&table))
}

/// Results, summary and checks of a power comparison.
fn power_report(table: &PowerTable) -> Outputs {
    let mut results = Table::new(&POWER_COLUMNS.map(|c| c.name));
    for r in &table.rows {
        results.push(vec![r.n.to_string(), r.ris_type.to_string(), r.trial.to_string(), format_f64(r.received_power_dbm)]);
    }
    let mut summary = Table::new(&["n", "ris_type", "trials", "mean_received_power_dbm", "mean_gap_db"]);
    for s in table.summary() {
        summary.push(vec![
            s.n.to_string(),
            s.ris_type.to_string(),
            s.trials.to_string(),
            format_f64(s.mean_received_power_dbm),
            format_f64(s.mean_gap_db),
        ]);
    }
    let (hi, lo) = (RisType::FullyConnected, RisType::Diagonal);
    let ns = table.element_counts();
    let mut checks = Vec::new();
    let gaps: Option<Vec<f64>> = ns.iter().map(|&n| table.mean_gap_db(n, hi, lo)).collect();
    if let Some(gaps) = gaps {
        for &n in &ns {
            let v = table.dominance_violations(n, hi, lo);
            checks.push(Check::new(format!("bd-ris-dominates-n{n}"), v == 0, format!("{v} trials below diagonal")));
        }
        checks.push(Check::new("gap-non-decreasing", non_decreasing(&gaps), format!("mean gaps {} dB", join(&gaps))));
    } else {
        checks.push(Check::skipped("gap-non-decreasing", "needs both diagonal and fully-connected"));
    }
    let plots = vec![
        PlotSpec {
            plot: "received-power",
            file: "summary.csv",
            x: "n",
            y: "mean_received_power_dbm",
            series: "ris_type",
            aggregate: "none",
        },
        PlotSpec { plot: "power-gap", file: "summary.csv", x: "n", y: "mean_gap_db", series: "ris_type", aggregate: "none" },
    ];
    Outputs { columns: POWER_COLUMNS.to_vec(), results, summary, checks, extra: Vec::new(), plots, non_converged: 0 }
}

fn bench_outputs(config: &ExperimentConfig, execution: Execution, no_timing: bool) -> Result<Outputs, HarnessError> {
    let spec = BenchmarkSpec {
        algorithms: config.algorithms.clone(),
        element_counts: config.element_counts(),
        trials: config.trials(),
        master_seed: config.seed,
        num_devices: config.num_devices,
        channel: config.channel,
        mobility: config.mobility,
        optimizer: config.optimizer.to_optimizer_config(),
        architecture: config.architecture,
        execution,
    };
    let table = benchmark(&spec)?;
    Ok(bench_report(&table, no_timing))
}

/// Ordinal timing checks on a benchmark: RZF cheapest at every `N`, QNM
/// costliest at the largest `N`, and AO below QNM there.
pub fn bench_checks(table: &BenchmarkTable, timing: bool) -> Vec<Check> {
    let summary = table.summary();
    let mut ns: Vec<usize> = Vec::new();
    let mut algos: Vec<Algorithm> = Vec::new();
    for s in &summary {
        if !ns.contains(&s.n) {
            ns.push(s.n);
        }
        if !algos.contains(&s.algorithm) {
            algos.push(s.algorithm);
        }
    }
    let time = |a: Algorithm, n: usize| summary.iter().find(|s| s.algorithm == a && s.n == n).map(|s| s.mean_wall_time_s);
    let rate = |a: Algorithm, n: usize| summary.iter().find(|s| s.algorithm == a && s.n == n).map(|s| s.mean_sum_rate_bps_hz);
    let mut checks = Vec::new();

    for &a in &algos {
        let rates: Vec<f64> = ns.iter().filter_map(|&n| rate(a, n)).collect();
        checks.push(Check::new(
            format!("{a}-rate-non-decreasing"),
            non_decreasing(&rates),
            format!("mean sum rates {}", rates.iter().map(|r| format!("{r:.6e}")).collect::<Vec<_>>().join(" ")),
        ));
    }

    let n_max = ns.iter().copied().max();
    let timing_checks: [(&str, bool); 3] = [
        ("rzf-cheapest", algos.contains(&Algorithm::Rzf) && algos.len() > 1),
        ("qnm-costliest-at-max-n", algos.contains(&Algorithm::Qnm) && algos.len() > 1),
        ("ao-below-qnm-at-max-n", algos.contains(&Algorithm::Ao) && algos.contains(&Algorithm::Qnm)),
    ];
    for (name, applicable) in timing_checks {
        if !timing {
            checks.push(Check::skipped(name, "timing disabled"));
            continue;
        }
        if !applicable {
            checks.push(Check::skipped(name, "algorithms not all present"));
            continue;
        }
        let n_max = n_max.expect("non-empty");
        let check = match name {
            "rzf-cheapest" => {
                let bad: Vec<usize> = ns
                    .iter()
                    .copied()
                    .filter(|&n| {
                        let t = time(Algorithm::Rzf, n).unwrap_or(f64::INFINITY);
                        algos.iter().any(|&a| a != Algorithm::Rzf && time(a, n).is_some_and(|x| x <= t))
                    })
                    .collect();
                Check::new(name, bad.is_empty(), format!("violations at N = {bad:?}"))
            }
            "qnm-costliest-at-max-n" => {
                let t = time(Algorithm::Qnm, n_max).unwrap_or(f64::NEG_INFINITY);
                let ok = algos.iter().all(|&a| a == Algorithm::Qnm || time(a, n_max).is_some_and(|x| x < t));
                let times: Vec<String> =
                    algos.iter().map(|&a| format!("{a} {:.4e}s", time(a, n_max).unwrap_or(f64::NAN))).collect();
                Check::new(name, ok, format!("N = {n_max}: {}", times.join(" ")))
            }
            _ => {
                let (ao, qnm) = (time(Algorithm::Ao, n_max), time(Algorithm::Qnm, n_max));
                let ok = matches!((ao, qnm), (Some(a), Some(q)) if a < q);
                let (ao, qnm) = (ao.unwrap_or(f64::NAN), qnm.unwrap_or(f64::NAN));
                Check::new(name, ok, format!("N = {n_max}: ao {ao:.4e}s qnm {qnm:.4e}s"))
            }
        };
        checks.push(check);
    }
    checks
}

fn bench_report(table: &BenchmarkTable, no_timing: bool) -> Outputs {
    let mut results = Table::new(&BENCH_COLUMNS.map(|c| c.name));
    for r in &table.rows {
        results.push(vec![
            r.algorithm.to_string(),
            r.n.to_string(),
            r.trial.to_string(),
            format_f64(r.sum_rate_bps_hz),
            format_f64(r.per_device_rate_bps_hz),
            format_f64(r.wall_time_s),
            r.iterations.to_string(),
            r.converged.to_string(),
            format_f64(r.final_objective),
            r.objective.as_str().to_owned(),
        ]);
    }
    let mut summary = Table::new(&[
        "algorithm",
        "n",
        "trials",
        "mean_sum_rate_bps_hz",
        "std_sum_rate_bps_hz",
        "mean_wall_time_s",
        "median_wall_time_s",
        "std_wall_time_s",
        "mean_iterations",
        "converged_fraction",
    ]);
    for s in table.summary() {
        summary.push(vec![
            s.algorithm.to_string(),
            s.n.to_string(),
            s.trials.to_string(),
            format_f64(s.mean_sum_rate_bps_hz),
            format_f64(s.std_sum_rate_bps_hz),
            format_f64(s.mean_wall_time_s),
            format_f64(s.median_wall_time_s),
            format_f64(s.std_wall_time_s),
            format_f64(s.mean_iterations),
            format_f64(s.converged_fraction),
        ]);
    }
    let mut columns = BENCH_COLUMNS.to_vec();
    let mut plots = vec![PlotSpec {
        plot: "sum-rate",
        file: "summary.csv",
        x: "n",
        y: "mean_sum_rate_bps_hz",
        series: "algorithm",
        aggregate: "none",
    }];
    if no_timing {
        results = results.without("wall_time_s");
        summary = summary.without("mean_wall_time_s").without("median_wall_time_s").without("std_wall_time_s");
        columns.retain(|c| c.name != "wall_time_s");
    } else {
        plots.push(PlotSpec {
            plot: "computation-time",
            file: "summary.csv",
            x: "n",
            y: "mean_wall_time_s",
            series: "algorithm",
            aggregate: "none",
        });
    }
    let non_converged = table.rows.iter().filter(|r| !r.converged).count();
    let checks = bench_checks(table, !no_timing);
    Outputs { columns, results, summary, checks, extra: Vec::new(), plots, non_converged }
}

/// One seeded training run of the hybrid beam classifier.
pub fn qml_trial(config: &ExperimentConfig, trial: usize, execution: Execution) -> crate::Result<(crate::qml::SyntheticBeamDataset, TrainingOutcome)> {
    let q = &config.qml;
    let seed = child_seed(config.seed, ExperimentKind::QmlBeam.name(), trial as u64);
    let dataset = generate_synthetic_dataset(q.num_samples, q.num_beams, q.noise_sigma, &mut child_rng(seed, "dataset", 0))?;
    let model = HybridModel::init(
        q.num_qubits,
        q.num_layers,
        q.num_beams,
        dataset.num_features(),
        &mut child_rng(seed, "model", 0),
    )?;
    let cfg = TrainConfig {
        epochs: q.epochs,
        learning_rate: q.learning_rate,
        seed: child_seed(seed, "split", 0),
        validation_fraction: q.validation_fraction,
        execution,
    };
    let outcome = train_hybrid(&dataset, model, &cfg)?;
    Ok((dataset, outcome))
}

fn qml_outputs(config: &ExperimentConfig, execution: Execution) -> Result<Outputs, HarnessError> {
    let num_beams = config.qml.num_beams;
    let mut results = Table::new(&QML_COLUMNS.map(|c| c.name));
    let mut summary = Table::new(&QML_COLUMNS.map(|c| c.name));
    let mut confusion_header = vec!["trial".to_owned(), "split".to_owned(), "true_beam".to_owned()];
    confusion_header.extend((0..num_beams).map(|j| format!("pred_{j}")));
    let mut confusion = Table::new(&confusion_header);
    let mut extra = Vec::new();
    let mut checks = Vec::new();

    for trial in 0..config.trials() {
        let (dataset, outcome) = qml_trial(config, trial, execution)?;
        let metric_row = |epoch: usize, split: &str, m: &crate::qml::SplitMetrics| {
            let mut row = vec![trial.to_string(), epoch.to_string(), split.to_owned(), format_f64(m.cross_entropy)];
            row.extend(m.accuracy.iter().map(|&a| format_f64(a)));
            row
        };
        for e in &outcome.trace {
            results.push(metric_row(e.epoch, "train", &e.train));
            results.push(metric_row(e.epoch, "validation", &e.validation));
        }
        let (first, last) = (outcome.trace.first().expect("epochs >= 1"), outcome.trace.last().expect("epochs >= 1"));
        summary.push(metric_row(last.epoch, "train", &last.train));
        summary.push(metric_row(last.epoch, "validation", &last.validation));
        checks.push(Check::new(
            format!("trial{trial}-train-loss-decreased"),
            last.train.cross_entropy < first.train.cross_entropy,
            format!("{:.6} -> {:.6}", first.train.cross_entropy, last.train.cross_entropy),
        ));

        for (split, idx) in [("train", &outcome.train_indices), ("validation", &outcome.validation_indices)] {
            let samples: Vec<_> = idx.iter().map(|&i| &dataset.samples()[i]).collect();
            let predictions = samples.iter().map(|s| outcome.model.predict(&s.features)).collect::<crate::Result<Vec<_>>>()?;
            let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
            let m = confusion_matrix(&predictions, &labels, num_beams)?;
            let mut buf = Vec::new();
            write_confusion_csv(&m, &mut buf).map_err(|e| HarnessError::Runtime(e.to_string()))?;
            for line in String::from_utf8(buf).expect("ascii").lines().skip(1) {
                let mut row = vec![trial.to_string(), split.to_owned()];
                row.extend(line.split(',').map(str::to_owned));
                confusion.push(row);
            }
        }

        let mut data = Vec::new();
        dataset.write_csv(&mut data).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        let text = String::from_utf8(data).expect("ascii");
        let mut lines = text.lines();
        let mut table = Table::new(&lines.next().unwrap_or_default().split(',').collect::<Vec<_>>());
        for line in lines {
            table.push(line.split(',').map(str::to_owned).collect());
        }
        extra.push((format!("dataset_trial{trial}.csv"), table));
    }
    extra.insert(0, ("confusion.csv".to_owned(), confusion));

    let plots = ["cross_entropy", "acc_delta0", "acc_delta1", "acc_delta2"]
        .map(|y| PlotSpec { plot: y, file: "results.csv", x: "epoch", y, series: "split", aggregate: "mean-over-trials" })
        .to_vec();
    Ok(Outputs { columns: QML_COLUMNS.to_vec(), results, summary, checks, extra, plots, non_converged: 0 })
}
