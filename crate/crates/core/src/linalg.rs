//! Small helpers over nalgebra's dynamically sized complex matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖Θ†Θ − I‖_max`.
pub fn unitarity_error(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Real inner product `Re tr(X† Y)`, the metric used on tangent spaces.
pub fn real_inner(x: &CMatrix, y: &CMatrix) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// `(X − X†) / 2`
pub fn skew(x: &CMatrix) -> CMatrix {
    (x - x.adjoint()).unscale(2.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}
