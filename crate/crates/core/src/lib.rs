//! Beamforming design and simulation for beyond-diagonal reconfigurable
//! intelligent surfaces (BD-RIS) serving ambient-backscatter IoT devices.
//!
//! The crate is organised bottom-up:
//!
//! * [`manifold`]: polar projection, tangent spaces, retractions and Haar
//!   sampling on the unitary group and its block-diagonal subgroups.
//! * [`channel`]: path loss, Rician/Rayleigh fading and random-waypoint
//!   mobility producing multi-user channel realizations.
//! * [`bdris`]: architecture taxonomy, constraint validation, effective
//!   channels and the closed-form single-tag optima.
//! * [`optim`]: the RZF, FP, AO and QNM scattering-matrix designs, the
//!   sum-rate evaluator and the benchmark sweep.
//! * [`qml`]: a small statevector simulator and hybrid quantum-classical
//!   beam classifier.
//! * [`harness`]: config-driven experiment runner writing CSV results.
//!
//! Trial-level Monte-Carlo loops go through [`exec`], which uses rayon when
//! the `parallel` feature is enabled and plain iterators otherwise.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bdris;
pub mod channel;
pub mod csvio;
mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod manifold;
pub mod optim;
pub mod qml;
pub mod seed;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
