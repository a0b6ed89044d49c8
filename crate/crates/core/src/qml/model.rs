use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::exec::{map_slice, Execution};
use crate::seed::rng_from_seed;
use crate::{Error, Result};

use super::data::{distance_accuracy, Sample, SyntheticBeamDataset};
use super::state::{amplitude_embed, apply_layer, measure_z, MAX_QUBITS};

/// Trainable RY angles, one row per layer and one column per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitParams {
    angles: DMatrix<f64>,
}

impl CircuitParams {
    pub fn new(angles: DMatrix<f64>) -> Result<Self> {
        if angles.nrows() == 0 || angles.ncols() == 0 || angles.ncols() > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "circuit needs at least one layer and 1..={MAX_QUBITS} qubits, got {}x{}",
                angles.nrows(),
                angles.ncols()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("circuit angles must be finite".into()));
        }
        Ok(Self { angles })
    }

    pub fn zeros(num_layers: usize, num_qubits: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(num_layers, num_qubits))
    }

    /// Angles uniform in `[−π, π)`.
    pub fn random<R: Rng + ?Sized>(num_layers: usize, num_qubits: usize, rng: &mut R) -> Result<Self> {
        Self::new(DMatrix::from_fn(num_layers, num_qubits, |_, _| rng.random_range(-PI..PI)))
    }

    pub fn num_layers(&self) -> usize {
        self.angles.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.angles.ncols()
    }

    pub fn angles(&self) -> &DMatrix<f64> {
        &self.angles
    }

    /// Embeds `x`, applies every layer and returns `⟨Z_k⟩` per qubit.
    pub fn expectations(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut state = amplitude_embed(x, self.num_qubits())?;
        for layer in self.angles.row_iter() {
            let row: Vec<f64> = layer.iter().copied().collect();
            apply_layer(&mut state, &row)?;
        }
        Ok(measure_z(&state))
    }

    fn shifted(&self, layer: usize, qubit: usize, delta: f64) -> Self {
        let mut angles = self.angles.clone();
        angles[(layer, qubit)] += delta;
        Self { angles }
    }
}

/// `Σ_k upstream_k·∂⟨Z_k⟩/∂θ` for every angle by the parameter-shift rule
/// `∂⟨Z⟩/∂θ = [⟨Z⟩(θ+π/2) − ⟨Z⟩(θ−π/2)]/2`, exact for RY generators.
pub fn parameter_shift_grad(params: &CircuitParams, x: &[f64], upstream: &[f64]) -> Result<DMatrix<f64>> {
    if upstream.len() != params.num_qubits() {
        return Err(Error::LengthMismatch { left: upstream.len(), right: params.num_qubits() });
    }
    let mut grad = DMatrix::zeros(params.num_layers(), params.num_qubits());
    for layer in 0..params.num_layers() {
        for qubit in 0..params.num_qubits() {
            let plus = params.shifted(layer, qubit, FRAC_PI_2).expectations(x)?;
            let minus = params.shifted(layer, qubit, -FRAC_PI_2).expectations(x)?;
            grad[(layer, qubit)] =
                upstream.iter().zip(plus.iter().zip(&minus)).map(|(u, (p, m))| u * 0.5 * (p - m)).sum();
        }
    }
    Ok(grad)
}

/// `−log softmax(z)_label`, computed stably; exactly `ln B` for equal logits.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    (max - logits[label]) + sum.ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Circuit outputs concatenated with the classical features, followed by a
/// linear head: `logits = W·[⟨Z⟩; features] + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub circuit: CircuitParams,
    /// `B × (q + d_c)`
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Gradient of the mean loss with respect to every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient {
    pub circuit: DMatrix<f64>,
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl HybridModel {
    pub fn new(circuit: CircuitParams, weights: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if weights.nrows() == 0 || weights.nrows() != bias.len() || weights.ncols() < circuit.num_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "head {}x{} with bias {} for {} qubits",
                weights.nrows(),
                weights.ncols(),
                bias.len(),
                circuit.num_qubits()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("head parameters must be finite".into()));
        }
        Ok(Self { circuit, weights, bias })
    }

    /// Random angles and a head with `N(0, 0.1²)` weights and zero bias.
    pub fn init<R: Rng + ?Sized>(
        num_qubits: usize,
        num_layers: usize,
        num_beams: usize,
        num_features: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let circuit = CircuitParams::random(num_layers, num_qubits, rng)?;
        let weights = DMatrix::from_fn(num_beams, num_qubits + num_features, |_, _| {
            0.1 * rng.sample::<f64, _>(StandardNormal)
        });
        Self::new(circuit, weights, DVector::zeros(num_beams))
    }

    pub fn num_beams(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.weights.ncols() - self.circuit.num_qubits()
    }

    fn check_features(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_features() {
            return Err(Error::LengthMismatch { left: x.len(), right: self.num_features() });
        }
        Ok(())
    }

    fn head_input(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_features(x)?;
        let z = self.circuit.expectations(x)?;
        Ok(DVector::from_iterator(z.len() + x.len(), z.into_iter().chain(x.iter().copied())))
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let input = self.head_input(x)?;
        Ok((&self.weights * input + &self.bias).iter().copied().collect())
    }

    /// Index of the largest logit (lowest index on ties).
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let logits = self.logits(x)?;
        Ok(argmax(&logits))
    }

    /// Cross-entropy of one sample and its gradient.
    pub fn loss_and_gradient(&self, sample: &Sample) -> Result<(f64, ModelGradient)> {
        if sample.label >= self.num_beams() {
            return Err(Error::InvalidInput(format!("label {} with {} beams", sample.label, self.num_beams())));
        }
        let input = self.head_input(&sample.features)?;
        let logits: Vec<f64> = (&self.weights * &input + &self.bias).iter().copied().collect();
        let loss = cross_entropy(&logits, sample.label);
        let mut delta = DVector::from_vec(softmax(&logits));
        delta[sample.label] -= 1.0;
        let weights = &delta * input.transpose();
        let q = self.circuit.num_qubits();
        let upstream: Vec<f64> = (0..q).map(|k| self.weights.column(k).dot(&delta)).collect();
        let circuit = parameter_shift_grad(&self.circuit, &sample.features, &upstream)?;
        Ok((loss, ModelGradient { circuit, weights, bias: delta }))
    }

    fn step(&mut self, g: &ModelGradient, lr: f64) -> Result<()> {
        let angles = self.circuit.angles() - g.circuit.scale(lr);
        self.circuit = CircuitParams::new(angles)?;
        self.weights -= g.weights.scale(lr);
        self.bias -= g.bias.scale(lr);
        if self.weights.iter().chain(self.bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("training diverged to non-finite parameters".into()));
        }
        Ok(())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Seeds the train/validation split.
    pub seed: u64,
    pub validation_fraction: f64,
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 200, learning_rate: 0.5, seed: 0, validation_fraction: 0.2, execution: Execution::Sequential }
    }
}

/// Cross-entropy and distance accuracies at `Δ = 0, 1, 2` on one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitMetrics {
    pub cross_entropy: f64,
    pub accuracy: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train: SplitMetrics,
    pub validation: SplitMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub model: HybridModel,
    /// Metrics after each epoch's update.
    pub trace: Vec<EpochMetrics>,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

/// Seeded shuffle of the sample indices, the first `1 − fraction` of which
/// train.
pub fn split_indices(n: usize, validation_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let n_val = (validation_fraction * n as f64).round() as usize;
    let validation = idx.split_off(n - n_val.min(n));
    (idx, validation)
}

pub fn evaluate(model: &HybridModel, samples: &[&Sample], exec: Execution) -> Result<SplitMetrics> {
    if samples.is_empty() {
        return Ok(SplitMetrics { cross_entropy: f64::NAN, accuracy: [f64::NAN; 3] });
    }
    let out = map_slice(exec, samples, |s| model.logits(&s.features).map(|l| (cross_entropy(&l, s.label), argmax(&l))));
    let out = out.into_iter().collect::<Result<Vec<_>>>()?;
    let loss = out.iter().map(|(l, _)| l).sum::<f64>() / samples.len() as f64;
    let predictions: Vec<usize> = out.iter().map(|(_, p)| *p).collect();
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let mut accuracy = [0.0; 3];
    for (delta, acc) in accuracy.iter_mut().enumerate() {
        *acc = distance_accuracy(&predictions, &labels, delta)?;
    }
    Ok(SplitMetrics { cross_entropy: loss, accuracy })
}

/// Full-batch gradient descent on the mean training cross-entropy.
///
/// Per-sample gradients may be computed concurrently; they are summed in
/// sample order, so the trace does not depend on the execution mode.
pub fn train_hybrid(dataset: &SyntheticBeamDataset, model: HybridModel, cfg: &TrainConfig) -> Result<TrainingOutcome> {
    if !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(Error::InvalidInput(format!("validation fraction {} is outside [0, 1)", cfg.validation_fraction)));
    }
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidInput(format!("learning rate {} must be finite and non-negative", cfg.learning_rate)));
    }
    if dataset.num_beams() != model.num_beams() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} beams, model {}",
            dataset.num_beams(),
            model.num_beams()
        )));
    }
    let (train_indices, validation_indices) = split_indices(dataset.len(), cfg.validation_fraction, cfg.seed);
    if train_indices.is_empty() {
        return Err(Error::InvalidInput("training split is empty".into()));
    }
    let train: Vec<&Sample> = train_indices.iter().map(|&i| &dataset.samples()[i]).collect();
    let validation: Vec<&Sample> = validation_indices.iter().map(|&i| &dataset.samples()[i]).collect();

    let mut model = model;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let grads = map_slice(cfg.execution, &train, |s| model.loss_and_gradient(s).map(|(_, g)| g));
        let mut total: Option<ModelGradient> = None;
        for g in grads {
            let g = g?;
            total = Some(match total {
                None => g,
                Some(mut t) => {
                    t.circuit += g.circuit;
                    t.weights += g.weights;
                    t.bias += g.bias;
                    t
                }
            });
        }
        let total = total.expect("training split is not empty");
        let inv = 1.0 / train.len() as f64;
        let mean = ModelGradient {
            circuit: total.circuit.scale(inv),
            weights: total.weights.scale(inv),
            bias: total.bias.scale(inv),
        };
        model.step(&mean, cfg.learning_rate)?;
        trace.push(EpochMetrics {
            epoch: epoch + 1,
            train: evaluate(&model, &train, cfg.execution)?,
            validation: evaluate(&model, &validation, cfg.execution)?,
        });
    }
    Ok(TrainingOutcome { model, trace, train_indices, validation_indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qml::data::generate_synthetic_dataset;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn single_qubit_shift_gradient_is_minus_sine() {
        let p = CircuitParams::new(DMatrix::from_element(1, 1, FRAC_PI_2)).unwrap();
        let g = parameter_shift_grad(&p, &[1.0], &[1.0]).unwrap();
        assert!((g[(0, 0)] + 1.0).abs() <= 1e-15);
        let zero = CircuitParams::zeros(1, 1).unwrap();
        assert!(parameter_shift_grad(&zero, &[1.0], &[1.0]).unwrap()[(0, 0)].abs() <= 1e-15);
    }

    #[test]
    fn shift_matches_finite_differences() {
        let mut rng = rng_from_seed(5);
        for trial in 0..10 {
            let q = 1 + trial % 4;
            let layers = 1 + trial % 3;
            let p = CircuitParams::random(layers, q, &mut rng).unwrap();
            let x: Vec<f64> = (0..(1 << q)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let upstream: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = parameter_shift_grad(&p, &x, &upstream).unwrap();
            let f = |p: &CircuitParams| -> f64 {
                p.expectations(&x).unwrap().iter().zip(&upstream).map(|(z, u)| z * u).sum()
            };
            let h = 1e-5;
            for l in 0..layers {
                for k in 0..q {
                    let fd = (f(&p.shifted(l, k, h)) - f(&p.shifted(l, k, -h))) / (2.0 * h);
                    assert!((fd - g[(l, k)]).abs() <= 1e-6 * fd.abs().max(1.0), "{fd} vs {}", g[(l, k)]);
                }
            }
        }
    }

    #[test]
    fn uniform_logits_cost_log_b() {
        for b in [2usize, 3, 4, 16] {
            assert_eq!(cross_entropy(&vec![0.0; b], 0), (b as f64).ln());
        }
        let model = HybridModel::new(CircuitParams::zeros(1, 2).unwrap(), DMatrix::zeros(4, 4), DVector::zeros(4)).unwrap();
        let logits = model.logits(&[0.3, 0.4]).unwrap();
        assert_eq!(cross_entropy(&logits, 2), 4f64.ln());
    }

    #[test]
    fn head_gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(6);
        let model = HybridModel::init(2, 2, 3, 2, &mut rng).unwrap();
        let sample = Sample { features: vec![0.2, 0.7], label: 1 };
        let (_, g) = model.loss_and_gradient(&sample).unwrap();
        let loss = |m: &HybridModel| m.loss_and_gradient(&sample).unwrap().0;
        let h = 1e-6;
        for i in 0..3 {
            for j in 0..4 {
                let mut plus = model.clone();
                let mut minus = model.clone();
                plus.weights[(i, j)] += h;
                minus.weights[(i, j)] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!((fd - g.weights[(i, j)]).abs() <= 1e-6 * fd.abs().max(1.0));
            }
        }
        for l in 0..2 {
            for k in 0..2 {
                let mut plus = model.clone();
                let mut minus = model.clone();
                plus.circuit = model.circuit.shifted(l, k, h);
                minus.circuit = model.circuit.shifted(l, k, -h);
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!((fd - g.circuit[(l, k)]).abs() <= 1e-6 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_learning_rate_keeps_traces_constant() {
        let mut rng = rng_from_seed(7);
        let data = generate_synthetic_dataset(60, 4, 0.01, &mut rng).unwrap();
        let model = HybridModel::init(2, 1, 4, 2, &mut rng).unwrap();
        let cfg = TrainConfig { epochs: 5, learning_rate: 0.0, ..TrainConfig::default() };
        let out = train_hybrid(&data, model.clone(), &cfg).unwrap();
        assert_eq!(out.trace.len(), 5);
        assert!(out.trace.windows(2).all(|w| w[0].train == w[1].train && w[0].validation == w[1].validation));
        assert_eq!(out.model, model);
    }

    #[test]
    fn split_is_eighty_twenty_and_seeded() {
        let (t, v) = split_indices(100, 0.2, 3);
        assert_eq!((t.len(), v.len()), (80, 20));
        let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split_indices(100, 0.2, 3), (t, v));
    }

    #[test]
    fn training_is_deterministic_across_execution_modes() {
        let mut rng = rng_from_seed(8);
        let data = generate_synthetic_dataset(50, 4, 0.01, &mut rng).unwrap();
        let model = HybridModel::init(2, 1, 4, 2, &mut rng).unwrap();
        let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
        let a = train_hybrid(&data, model.clone(), &cfg).unwrap();
        let b = train_hybrid(&data, model, &TrainConfig { execution: Execution::Parallel, ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn separable_sectors_are_learned() {
        let mut rng = rng_from_seed(9);
        let data = generate_synthetic_dataset(400, 4, 0.01, &mut rng).unwrap();
        let model = HybridModel::init(4, 2, 4, 2, &mut rng).unwrap();
        let out = train_hybrid(&data, model, &TrainConfig { execution: Execution::Parallel, ..TrainConfig::default() }).unwrap();
        assert_eq!(out.trace.len(), 200);
        let last = out.trace.last().unwrap().train.accuracy[0];
        assert!(last >= 0.90, "{last}");
    }

    proptest! {
        #[test]
        fn loss_is_nonnegative(logits in proptest::collection::vec(-50.0f64..50.0, 1..10), pick in 0usize..10) {
            let label = pick % logits.len();
            prop_assert!(cross_entropy(&logits, label) >= 0.0);
            let p = softmax(&logits);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
