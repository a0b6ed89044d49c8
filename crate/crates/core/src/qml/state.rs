use num_complex::Complex64;

use crate::linalg::{CMatrix, CVector, ZERO};
use crate::{Error, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 12;

/// Tolerance on `‖ψ‖₂ − 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Dense state of `q` qubits. Qubit `k` is bit `k` of the basis index, so
/// `|q_{q−1} … q_1 q_0⟩` has index `Σ q_k 2^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
    num_qubits: usize,
}

fn check_qubits(q: usize) -> Result<()> {
    if q == 0 || q > MAX_QUBITS {
        return Err(Error::InvalidInput(format!("qubit count {q} is outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

impl StateVector {
    /// Checks the length (`2^q`, `q ≤ 12`) and the unit norm.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!("{len} amplitudes is not a power of two")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_qubits(num_qubits)?;
        let norm = amplitudes.norm();
        if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(Error::InvalidInput(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, num_qubits })
    }

    /// `|0…0⟩`
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let mut amplitudes = CVector::zeros(1 << num_qubits);
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, num_qubits })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Probability of each basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `RY(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]` on qubit `k`.
    pub fn apply_ry(&mut self, k: usize, theta: f64) {
        assert!(k < self.num_qubits, "qubit {k} out of range");
        let (s, c) = (0.5 * theta).sin_cos();
        let bit = 1 << k;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | bit];
                self.amplitudes[i] = a0 * c - a1 * s;
                self.amplitudes[i | bit] = a0 * s + a1 * c;
            }
        }
    }

    /// Flips `target` on the basis states where `control` is set.
    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        assert!(control < self.num_qubits && target < self.num_qubits && control != target);
        let (cb, tb) = (1 << control, 1 << target);
        for i in 0..self.amplitudes.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amplitudes.swap_rows(i, i | tb);
            }
        }
    }
}

/// Zero-pads `x` to `2^q` entries and normalises it.
pub fn amplitude_embed(x: &[f64], num_qubits: usize) -> Result<StateVector> {
    check_qubits(num_qubits)?;
    let capacity = 1 << num_qubits;
    if x.is_empty() || x.len() > capacity {
        return Err(Error::TooLong { len: x.len(), capacity });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("embedded values must be finite".into()));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut amplitudes = CVector::from_element(capacity, ZERO);
    for (a, v) in amplitudes.iter_mut().zip(x) {
        *a = Complex64::new(v / norm, 0.0);
    }
    Ok(StateVector { amplitudes, num_qubits })
}

/// `RY(θ_k)` on every qubit, then CNOTs `k → (k+1) mod q` for `k = 0…q−1`
/// (none for a single qubit).
pub fn entangling_layer(state: &StateVector, layer_angles: &[f64]) -> Result<StateVector> {
    let mut out = state.clone();
    apply_layer(&mut out, layer_angles)?;
    Ok(out)
}

pub(crate) fn apply_layer(state: &mut StateVector, layer_angles: &[f64]) -> Result<()> {
    let q = state.num_qubits;
    if layer_angles.len() != q {
        return Err(Error::DimensionMismatch(format!("{} angles for {q} qubits", layer_angles.len())));
    }
    for (k, &theta) in layer_angles.iter().enumerate() {
        state.apply_ry(k, theta);
    }
    if q > 1 {
        for k in 0..q {
            state.apply_cnot(k, (k + 1) % q);
        }
    }
    Ok(())
}

/// The layer as a dense `2^q × 2^q` matrix, column `j` being its action on
/// basis state `j`.
pub fn layer_matrix(num_qubits: usize, layer_angles: &[f64]) -> Result<CMatrix> {
    check_qubits(num_qubits)?;
    let dim = 1 << num_qubits;
    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[j] = Complex64::new(1.0, 0.0);
        let mut basis = StateVector { amplitudes, num_qubits };
        apply_layer(&mut basis, layer_angles)?;
        m.set_column(j, &basis.amplitudes);
    }
    Ok(m)
}

/// `⟨Z_k⟩` for every qubit, exactly from the amplitudes.
pub fn measure_z(state: &StateVector) -> Vec<f64> {
    let mut z = vec![0.0; state.num_qubits];
    for (i, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        for (k, zk) in z.iter_mut().enumerate() {
            if i & (1 << k) == 0 {
                *zk += p;
            } else {
                *zk -= p;
            }
        }
    }
    // Rounding can push a sum of probabilities an ulp past ±1.
    z.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    z
}
