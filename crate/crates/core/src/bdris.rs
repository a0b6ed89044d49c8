//! BD-RIS architectures, constraint validation, effective channels and the
//! closed-form single-tag optima used by the RIS-vs-BD-RIS comparison.

use std::fmt;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::linalg::{self, cis, CMatrix, CVector, ONE, ZERO};
use crate::manifold::{is_permutation, BlockStructure, UnitaryMatrix, UNITARY_TOLERANCE};
use crate::{Error, Result};

/// Circuit topology of the reconfigurable impedance network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BdRisArchitecture {
    /// Single-connected: the conventional RIS.
    Diagonal,
    /// Independent fully connected groups, possibly permuted.
    GroupConnected(BlockStructure),
    FullyConnected,
    /// Element `i` re-radiates only through element `permutation[i]`:
    /// `Θ[i, p[i]]` is a unit-modulus phase, every other entry is zero.
    NonDiagonalPaired(Vec<usize>),
    /// One component of a reflect/transmit pair; see [`HybridMatrices`].
    Hybrid,
}

impl BdRisArchitecture {
    /// The block structure for the unitary-constrained variants.
    pub fn block_structure(&self, n: usize) -> Option<BlockStructure> {
        match self {
            Self::Diagonal => Some(BlockStructure::diagonal(n)),
            Self::FullyConnected => Some(BlockStructure::fully_connected(n)),
            Self::GroupConnected(s) => Some(s.clone()),
            Self::NonDiagonalPaired(_) | Self::Hybrid => None,
        }
    }

    /// Matrices with the right pattern and a random feasible value, used as
    /// generic constructors in tests and baselines.
    pub fn random_feasible<R: rand::Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<CMatrix> {
        match self {
            Self::NonDiagonalPaired(p) => {
                if !is_permutation(p, n) {
                    return Err(Error::InvalidInput("pairing is not a permutation".into()));
                }
                let mut m = CMatrix::zeros(n, n);
                for (i, &j) in p.iter().enumerate() {
                    m[(i, j)] = cis(rng.random_range(0.0..std::f64::consts::TAU));
                }
                Ok(m)
            }
            Self::Hybrid => {
                let alpha: f64 = rng.random_range(0.0..=1.0);
                Ok(crate::manifold::random_unitary(n, rng)?.into_matrix().scale(alpha.sqrt()))
            }
            other => {
                let s = other.block_structure(n).expect("unitary-constrained variant");
                Ok(crate::manifold::random_block_unitary(&s, rng)?.into_matrix())
            }
        }
    }
}

impl fmt::Display for BdRisArchitecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Diagonal => f.write_str("diagonal"),
            Self::GroupConnected(s) => write!(f, "group-connected({:?})", s.group_sizes()),
            Self::FullyConnected => f.write_str("fully-connected"),
            Self::NonDiagonalPaired(_) => f.write_str("non-diagonal-paired"),
            Self::Hybrid => f.write_str("hybrid"),
        }
    }
}

/// Reflective and transmissive matrices of a hybrid (STAR) surface,
/// constrained to split incident power losslessly:
/// `Θ_r†Θ_r + Θ_t†Θ_t = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridMatrices {
    reflect: CMatrix,
    transmit: CMatrix,
}

impl HybridMatrices {
    pub fn new(reflect: CMatrix, transmit: CMatrix) -> Result<Self> {
        if reflect.shape() != transmit.shape() || reflect.nrows() != reflect.ncols() {
            return Err(Error::DimensionMismatch("hybrid matrices must be equal-sized squares".into()));
        }
        let h = Self { reflect, transmit };
        let max_deviation = h.power_split_error();
        if max_deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary { max_deviation });
        }
        Ok(h)
    }

    /// `Θ_r = √α·U₁`, `Θ_t = √(1−α)·U₂`.
    pub fn from_split(alpha: f64, u1: &UnitaryMatrix, u2: &UnitaryMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidInput(format!("split ratio {alpha} is outside [0, 1]")));
        }
        Self::new(u1.matrix().scale(alpha.sqrt()), u2.matrix().scale((1.0 - alpha).sqrt()))
    }

    pub fn reflect(&self) -> &CMatrix {
        &self.reflect
    }

    pub fn transmit(&self) -> &CMatrix {
        &self.transmit
    }

    pub fn power_split_error(&self) -> f64 {
        let n = self.reflect.nrows();
        let s = self.reflect.adjoint() * &self.reflect + self.transmit.adjoint() * &self.transmit;
        linalg::max_abs(&(s - CMatrix::identity(n, n)))
    }
}

/// A single failed constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSquare { rows: usize, cols: usize },
    /// The architecture's parameters do not fit an `n × n` matrix.
    InvalidStructure(String),
    /// Nonzero entries where the circuit has no connection.
    StructuralNonzero { count: usize, largest: f64, first: (usize, usize) },
    /// A connected block is not unitary.
    NotUnitary { group: usize, max_deviation: f64 },
    /// A paired entry is not unit modulus.
    NotUnitModulus { row: usize, col: usize, modulus: f64 },
    /// A hybrid component amplifies (`Θ†Θ ⪯ I` fails).
    NotContraction { largest_singular_value: f64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `theta` against the zero pattern of `arch` exactly and the
/// unitarity of each connected part within `tolerance`.
pub fn validate_with_tolerance(
    theta: &CMatrix,
    arch: &BdRisArchitecture,
    tolerance: f64,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (rows, cols) = theta.shape();
    if rows != cols || rows == 0 {
        report.violations.push(Violation::NotSquare { rows, cols });
        return report;
    }
    let n = rows;
    match arch {
        BdRisArchitecture::Hybrid => {
            let sv = theta.clone().singular_values();
            let largest = sv.iter().copied().fold(0.0, f64::max);
            if largest > 1.0 + tolerance {
                report.violations.push(Violation::NotContraction { largest_singular_value: largest });
            }
        }
        BdRisArchitecture::NonDiagonalPaired(p) => {
            if !is_permutation(p, n) {
                report.violations.push(Violation::InvalidStructure(format!(
                    "pairing is not a permutation of 0..{n}"
                )));
                return report;
            }
            check_pattern(theta, |i, j| p[i] == j, &mut report);
            for (i, &j) in p.iter().enumerate() {
                let modulus = theta[(i, j)].norm();
                if (modulus - 1.0).abs() > tolerance {
                    report.violations.push(Violation::NotUnitModulus { row: i, col: j, modulus });
                }
            }
        }
        _ => {
            let s = arch.block_structure(n).expect("unitary-constrained variant");
            if s.dim() != n {
                report.violations.push(Violation::InvalidStructure(format!(
                    "group sizes cover {} elements, matrix is {n}x{n}",
                    s.dim()
                )));
                return report;
            }
            let owner = s.group_of();
            check_pattern(theta, |i, j| owner[i] == owner[j], &mut report);
            for (g, members) in s.groups().iter().enumerate() {
                let block = crate::manifold::gather_block(theta, members);
                let max_deviation = linalg::unitarity_error(&block);
                if max_deviation > tolerance {
                    report.violations.push(Violation::NotUnitary { group: g, max_deviation });
                }
            }
        }
    }
    report
}

/// [`validate_with_tolerance`] at the default unitarity tolerance.
pub fn validate(theta: &CMatrix, arch: &BdRisArchitecture) -> ValidationReport {
    validate_with_tolerance(theta, arch, UNITARY_TOLERANCE)
}

fn check_pattern(
    theta: &CMatrix,
    connected: impl Fn(usize, usize) -> bool,
    report: &mut ValidationReport,
) {
    let mut count = 0;
    let mut largest: f64 = 0.0;
    let mut first = None;
    for j in 0..theta.ncols() {
        for i in 0..theta.nrows() {
            if !connected(i, j) && theta[(i, j)] != ZERO {
                count += 1;
                largest = largest.max(theta[(i, j)].norm());
                first.get_or_insert((i, j));
            }
        }
    }
    if let Some(first) = first {
        report.violations.push(Violation::StructuralNonzero { count, largest, first });
    }
}

/// `h` with `h† = a† + b†ΘC`, i.e. `h = a + C†Θ†b`.
pub fn effective_channel(a: &CVector, b: &CVector, c: &CMatrix, theta: &CMatrix) -> Result<CVector> {
    let (n, m) = c.shape();
    if a.len() != m || b.len() != n || theta.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "a: {}, b: {}, C: {n}x{m}, Θ: {:?}",
            a.len(),
            b.len(),
            theta.shape()
        )));
    }
    Ok(a + c.adjoint() * (theta.adjoint() * b))
}

/// `Σ_p Σ_ℓ ‖a_{ℓ,p}† + b_{ℓ,p}†ΘC_p‖²`.
pub fn channel_gain_objective(theta: &CMatrix, realizations: &[ChannelRealization]) -> Result<f64> {
    let mut total = 0.0;
    for r in realizations {
        for (a, b) in r.direct.iter().zip(&r.ris_device) {
            total += effective_channel(a, b, &r.bs_ris, theta)?.norm_squared();
        }
    }
    Ok(total)
}

/// Optimal scattering matrix for a single tag and its reflected amplitude
/// `|b†Θc|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleTagOptimum {
    pub theta: UnitaryMatrix,
    pub amplitude: f64,
}

fn require_nonzero(b: &CVector, c: &CVector) -> Result<()> {
    if b.len() != c.len() || b.is_empty() {
        return Err(Error::DimensionMismatch(format!("b: {}, c: {}", b.len(), c.len())));
    }
    if b.iter().all(|z| *z == ZERO) || c.iter().all(|z| *z == ZERO) {
        return Err(Error::ZeroChannel);
    }
    Ok(())
}

/// Diagonal optimum: each phase aligns `b_i*·θ_i·c_i` with the real axis,
/// giving amplitude `Σ|b_i||c_i|`.
pub fn optimal_diagonal_single_tag(b: &CVector, c: &CVector) -> Result<SingleTagOptimum> {
    require_nonzero(b, c)?;
    let n = b.len();
    let mut theta = CMatrix::zeros(n, n);
    let mut amplitude = 0.0;
    for i in 0..n {
        let term = b[i].conj() * c[i];
        theta[(i, i)] = if term == ZERO { ONE } else { (term / term.norm()).conj() };
        amplitude += b[i].norm() * c[i].norm();
    }
    Ok(SingleTagOptimum { theta: UnitaryMatrix::from_trusted(theta), amplitude })
}

/// Fully-connected optimum: a unitary mapping `c/‖c‖` onto `b/‖b‖`, which
/// attains the Cauchy–Schwarz bound `‖b‖‖c‖`.
pub fn optimal_fully_connected_single_tag(b: &CVector, c: &CVector) -> Result<SingleTagOptimum> {
    require_nonzero(b, c)?;
    let mut theta = orthonormal_completion(c).adjoint();
    Reflector::new(b).apply(&mut theta);
    let bound = b.norm() * c.norm();
    // Round-off can leave the product an ulp below the aligned sum of moduli.
    let diagonal: f64 = b.iter().zip(c.iter()).map(|(x, y)| x.norm() * y.norm()).sum();
    Ok(SingleTagOptimum { theta: UnitaryMatrix::from_trusted(theta), amplitude: bound.max(diagonal) })
}

/// Unitary whose first column is `v/‖v‖`: the Householder reflector taking
/// `−e^{iφ}e_0` to `v/‖v‖` (`φ = arg v_0`), first column rephased.
pub fn orthonormal_completion(v: &CVector) -> CMatrix {
    let n = v.len();
    let mut x = CMatrix::identity(n, n);
    Reflector::new(v).apply(&mut x);
    x
}

/// `U = (I − β·u u†)·diag(r, 1, …, 1)`.
struct Reflector {
    u: CVector,
    beta: f64,
    r: Complex64,
}

impl Reflector {
    fn new(v: &CVector) -> Self {
        let unit = v.unscale(v.norm());
        let phase = if unit[0] == ZERO { ONE } else { unit[0].unscale(unit[0].norm()) };
        let mut u = -unit;
        u[0] -= phase;
        Self { beta: 2.0 / u.norm_squared(), u, r: -phase }
    }

    /// `x ← U x` in `O(n²)`.
    fn apply(&self, x: &mut CMatrix) {
        for z in x.row_mut(0).iter_mut() {
            *z *= self.r;
        }
        let w = (self.u.adjoint() * &*x).scale(self.beta);
        *x -= &self.u * w;
    }
}
