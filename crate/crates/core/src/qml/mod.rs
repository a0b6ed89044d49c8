//! Hybrid quantum-classical beam prediction on a dense statevector
//! simulator.
//!
//! A sample's features are amplitude-embedded into `q` qubits, passed
//! through trainable entangling layers (RY rotations and a ring of CNOTs)
//! and read out as Pauli-Z expectations. Those expectations, concatenated
//! with the raw features, feed a linear softmax head over `B` beams. Circuit
//! angles are trained with the parameter-shift rule, the head by ordinary
//! backpropagation, both by full-batch gradient descent.

mod data;
mod model;
mod state;

pub use data::{
    beam_sector, confusion_matrix, distance_accuracy, generate_synthetic_dataset, write_confusion_csv,
    write_trace_csv, Sample, SyntheticBeamDataset, TRACE_HEADER,
};
pub use model::{
    cross_entropy, evaluate, parameter_shift_grad, softmax, split_indices, train_hybrid, CircuitParams, EpochMetrics,
    HybridModel, ModelGradient, SplitMetrics, TrainConfig, TrainingOutcome,
};
pub use state::{amplitude_embed, entangling_layer, layer_matrix, measure_z, StateVector, MAX_QUBITS, NORM_TOLERANCE};
