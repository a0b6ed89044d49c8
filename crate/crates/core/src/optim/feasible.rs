use crate::bdris::BdRisArchitecture;
use crate::linalg::{self, CMatrix};
use crate::manifold::{block_project, random_block_unitary, BlockStructure, UnitaryMatrix};
use crate::seed::rng_from_seed;
use crate::{Error, Result};

use super::ThetaInit;

/// The product of unitary groups `U(n_1) × … × U(n_G)` a unitary-constrained
/// architecture places on `Θ`, with its tangent projection and retraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleSet {
    structure: BlockStructure,
}

impl FeasibleSet {
    pub fn new(arch: &BdRisArchitecture, n: usize) -> Result<Self> {
        let structure = arch
            .block_structure(n)
            .ok_or_else(|| Error::UnsupportedArchitecture(arch.to_string()))?;
        if structure.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "architecture covers {} elements, the RIS has {n}",
                structure.dim()
            )));
        }
        Ok(Self { structure })
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    /// Nearest feasible point.
    pub fn project(&self, m: &CMatrix) -> Result<UnitaryMatrix> {
        block_project(m, &self.structure)
    }

    /// Projection of an ambient direction onto the tangent space at `theta`:
    /// `Θ·skew(Θ†·mask(V))`.
    pub fn tangent(&self, theta: &UnitaryMatrix, v: &CMatrix) -> CMatrix {
        let masked = if self.structure.is_fully_connected() { v.clone() } else { self.structure.mask(v) };
        let t = theta.matrix();
        t * linalg::skew(&(t.adjoint() * masked))
    }

    /// `P(Θ + step·D)`. A zero step returns `Θ` unchanged.
    pub fn retract(&self, theta: &UnitaryMatrix, dir: &CMatrix, step: f64) -> Result<UnitaryMatrix> {
        if step == 0.0 {
            return Ok(theta.clone());
        }
        self.project(&(theta.matrix() + dir.scale(step)))
    }

    pub fn initial_point(&self, init: &ThetaInit, seed: u64) -> Result<UnitaryMatrix> {
        match init {
            ThetaInit::Haar => random_block_unitary(&self.structure, &mut rng_from_seed(seed)),
            ThetaInit::Identity => Ok(UnitaryMatrix::identity(self.dim())),
            ThetaInit::Fixed(m) => {
                if m.shape() != (self.dim(), self.dim()) {
                    return Err(Error::DimensionMismatch(format!(
                        "initial Θ is {:?}, expected {n}x{n}",
                        m.shape(),
                        n = self.dim()
                    )));
                }
                self.project(m)
            }
        }
    }
}
