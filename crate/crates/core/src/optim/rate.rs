use nalgebra::Cholesky;

use crate::channel::ChannelRealization;
use crate::linalg::CMatrix;
use crate::{Error, Result};

/// `H = [h_1 … h_L]` (`M × L`) with `h_ℓ = a_ℓ + C†Θ†b_ℓ`.
pub(crate) fn effective_matrix(theta: &CMatrix, r: &ChannelRealization) -> CMatrix {
    let b = CMatrix::from_columns(&r.ris_device);
    let a = CMatrix::from_columns(&r.direct);
    a + r.bs_ris.adjoint() * (theta.adjoint() * b)
}

/// Regularised zero-forcing precoder `W = H(H†H + (L/ρ)I)⁻¹`, scaled to
/// unit Frobenius norm. A zero channel yields a zero precoder; `ρ = 0`
/// degenerates to the matched filter.
pub fn rzf_precoder(h: &CMatrix, rho: f64) -> Result<CMatrix> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::InvalidInput(format!("SNR {rho} must be finite and non-negative")));
    }
    let l = h.ncols();
    let w = if rho == 0.0 {
        h.clone()
    } else {
        let mut gram = h.adjoint() * h;
        let reg = l as f64 / rho;
        for i in 0..l {
            gram[(i, i)] += reg;
        }
        let chol = Cholesky::new(gram)
            .ok_or_else(|| Error::InvalidInput("regularised Gram matrix is not positive definite".into()))?;
        h * chol.inverse()
    };
    let norm = w.norm();
    Ok(if norm > 0.0 { w.unscale(norm) } else { w })
}

/// `SINR_ℓ = ρ|h_ℓ†w_ℓ|² / (ρ Σ_{j≠ℓ} |h_ℓ†w_j|² + 1)`.
pub fn sinr(h: &CMatrix, w: &CMatrix, rho: f64) -> Result<Vec<f64>> {
    if h.shape() != w.shape() {
        return Err(Error::DimensionMismatch(format!("H is {:?}, W is {:?}", h.shape(), w.shape())));
    }
    Ok(sinr_unchecked(&(h.adjoint() * w), rho))
}

/// SINRs from the gain matrix `U = H†W`.
pub(crate) fn sinr_unchecked(u: &CMatrix, rho: f64) -> Vec<f64> {
    (0..u.nrows())
        .map(|l| {
            let total: f64 = u.row(l).iter().map(|z| z.norm_sqr()).sum();
            let signal = u[(l, l)].norm_sqr();
            rho * signal / (rho * (total - signal).max(0.0) + 1.0)
        })
        .collect()
}

/// `Σ_ℓ ln(1 + SINR_ℓ)` for a given precoder.
pub(crate) fn rate_nats(h: &CMatrix, w: &CMatrix, rho: f64) -> f64 {
    sinr_unchecked(&(h.adjoint() * w), rho).into_iter().map(f64::ln_1p).sum()
}

/// Sum rate in bits/s/Hz of one snapshot with `Θ` fixed and an RZF precoder.
pub fn sum_rate(theta: &CMatrix, r: &ChannelRealization) -> Result<f64> {
    r.validate()?;
    let n = r.num_elements();
    if theta.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("Θ is {:?}, the RIS has {n} elements", theta.shape())));
    }
    let rho = r.snr_linear();
    if rho == 0.0 {
        return Ok(0.0);
    }
    let h = effective_matrix(theta, r);
    let w = rzf_precoder(&h, rho)?;
    Ok(rate_nats(&h, &w, rho) / std::f64::consts::LN_2)
}
