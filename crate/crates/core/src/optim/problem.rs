use crate::channel::ChannelRealization;
use crate::linalg::{CMatrix, ZERO};
use crate::{Error, Result};

/// Stacked snapshot channels for the gain objective
/// `f(Θ) = Σ_p ‖A_p† + B_p†ΘC_p‖²_F`, with `A_p` (`M × L`) and `B_p`
/// (`N × L`) holding the per-device links as columns.
#[derive(Debug, Clone)]
pub struct GainProblem {
    snapshots: Vec<Snapshot>,
    scale: f64,
    n: usize,
}

#[derive(Debug, Clone)]
struct Snapshot {
    a_adj: CMatrix,
    b: CMatrix,
    b_adj: CMatrix,
    c: CMatrix,
    c_adj: CMatrix,
}

fn stack(columns: &[crate::linalg::CVector]) -> CMatrix {
    CMatrix::from_columns(columns)
}

impl GainProblem {
    pub fn new(realizations: &[ChannelRealization]) -> Result<Self> {
        let (n, _) = super::check_realizations(realizations)?;
        let mut scale = 0.0;
        let snapshots = realizations
            .iter()
            .map(|r| {
                let c_norm = r.bs_ris.norm();
                for (a, b) in r.direct.iter().zip(&r.ris_device) {
                    scale += (a.norm() + b.norm() * c_norm).powi(2);
                }
                let a = stack(&r.direct);
                let b = stack(&r.ris_device);
                Snapshot {
                    a_adj: a.adjoint(),
                    b_adj: b.adjoint(),
                    b,
                    c_adj: r.bs_ris.adjoint(),
                    c: r.bs_ris.clone(),
                }
            })
            .collect();
        if !(scale > 0.0) {
            return Err(Error::ZeroChannel);
        }
        Ok(Self { snapshots, scale, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Upper bound `Σ (‖a‖ + ‖b‖‖C‖_F)²` of the objective over all unitary
    /// `Θ`; the iterative designs work with `f / scale` so that tolerances
    /// do not depend on the path-loss level.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn residual(&self, s: &Snapshot, theta: &CMatrix) -> CMatrix {
        &s.a_adj + &s.b_adj * (theta * &s.c)
    }

    pub fn value(&self, theta: &CMatrix) -> f64 {
        self.snapshots.iter().map(|s| self.residual(s, theta).norm_squared()).sum()
    }

    /// Objective together with the conjugate Wirtinger gradient
    /// `G = ∂f/∂Θ* = Σ_p B_p E_p C_p†`, `E_p = A_p† + B_p†ΘC_p`.
    ///
    /// With the real inner product `Re tr(X†Y)` the Euclidean gradient is
    /// `2G`.
    pub fn value_and_gradient(&self, theta: &CMatrix) -> (f64, CMatrix) {
        let mut value = 0.0;
        let mut grad = CMatrix::from_element(self.n, self.n, ZERO);
        for s in &self.snapshots {
            let e = self.residual(s, theta);
            value += e.norm_squared();
            grad += &s.b * (e * &s.c_adj);
        }
        (value, grad)
    }
}

/// `∂f/∂Θ* = Σ_p Σ_ℓ b_ℓ h_ℓ† C_p†` for the channel-gain objective.
pub fn euclidean_gradient(theta: &CMatrix, realizations: &[ChannelRealization]) -> Result<CMatrix> {
    let problem = GainProblem::new(realizations)?;
    if theta.shape() != (problem.n, problem.n) {
        return Err(Error::DimensionMismatch(format!(
            "Θ is {:?}, the RIS has {} elements",
            theta.shape(),
            problem.n
        )));
    }
    Ok(problem.value_and_gradient(theta).1)
}
