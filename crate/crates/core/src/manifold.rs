//! Unitary and block-unitary matrix machinery.
//!
//! Points are unitary matrices `Θ` (`Θ†Θ = I`). The tangent space at `Θ` is
//! `{ Θ·S : S skew-Hermitian }`, projection onto it is `Θ·skew(Θ†G)`, and
//! the retraction is the polar factor of `Θ + t·T`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMatrix, ZERO};
use crate::{Error, Result};

/// Default tolerance on `‖Θ†Θ − I‖_max`.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Singular values at or below this make the polar factor non-unique.
pub const RANK_THRESHOLD: f64 = 1e-12;

/// A square complex matrix certified unitary to within `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: CMatrix,
    tolerance: f64,
}

impl UnitaryMatrix {
    /// Checks unitarity against [`UNITARY_TOLERANCE`].
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, UNITARY_TOLERANCE)
    }

    pub fn with_tolerance(entries: CMatrix, tolerance: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "unitary matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let max_deviation = linalg::unitarity_error(&entries);
        if max_deviation > tolerance {
            return Err(Error::NotUnitary { max_deviation });
        }
        Ok(Self { entries, tolerance })
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: CMatrix::identity(n, n), tolerance: UNITARY_TOLERANCE }
    }

    // Callers guarantee unitarity by construction (polar factors, QR).
    pub(crate) fn from_trusted(entries: CMatrix) -> Self {
        debug_assert!(linalg::unitarity_error(&entries) <= 1e-8);
        Self { entries, tolerance: UNITARY_TOLERANCE }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn unitarity_error(&self) -> f64 {
        linalg::unitarity_error(&self.entries)
    }
}

/// A direction tangent to the unitary group at some base point.
///
/// The base point is not stored; [`TangentDirection::is_tangent_at`] checks
/// the skew-Hermitian condition against a given point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDirection {
    entries: CMatrix,
}

impl TangentDirection {
    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// `‖Θ†T + (Θ†T)†‖_max`
    pub fn skew_defect(&self, at: &UnitaryMatrix) -> f64 {
        let x = at.matrix().adjoint() * &self.entries;
        linalg::max_abs(&(&x + x.adjoint()))
    }

    pub fn is_tangent_at(&self, at: &UnitaryMatrix, tol: f64) -> bool {
        self.entries.shape() == at.matrix().shape() && self.skew_defect(at) <= tol
    }
}

/// Partition of `N` elements into fully connected groups, optionally
/// permuted (dynamic grouping).
///
/// With a permutation `p`, group `g` holds the elements
/// `p[o_g], …, p[o_g + size_g − 1]` where `o_g` is the running offset.
/// Without one, groups are contiguous. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    group_sizes: Vec<usize>,
    permutation: Option<Vec<usize>>,
}

impl BlockStructure {
    pub fn new(group_sizes: Vec<usize>, permutation: Option<Vec<usize>>) -> Result<Self> {
        if group_sizes.is_empty() || group_sizes.contains(&0) {
            return Err(Error::InvalidInput("group sizes must be positive".into()));
        }
        let n: usize = group_sizes.iter().sum();
        if let Some(p) = &permutation {
            if !is_permutation(p, n) {
                return Err(Error::InvalidInput(format!(
                    "permutation is not a bijection of 0..{n}"
                )));
            }
        }
        Ok(Self { group_sizes, permutation })
    }

    /// `n` single-element groups: the conventional diagonal RIS.
    pub fn diagonal(n: usize) -> Self {
        Self { group_sizes: vec![1; n], permutation: None }
    }

    pub fn fully_connected(n: usize) -> Self {
        Self { group_sizes: vec![n], permutation: None }
    }

    /// `k` equal groups; `n` must be divisible by `k`.
    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        if k == 0 || !n.is_multiple_of(k) {
            return Err(Error::InvalidInput(format!("{n} elements cannot form {k} equal groups")));
        }
        Self::new(vec![n / k; k], None)
    }

    pub fn dim(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn is_fully_connected(&self) -> bool {
        self.group_sizes.len() == 1
    }

    /// Element indices of every group.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut offset = 0;
        self.group_sizes
            .iter()
            .map(|&size| {
                let members = (offset..offset + size)
                    .map(|slot| self.permutation.as_ref().map_or(slot, |p| p[slot]))
                    .collect();
                offset += size;
                members
            })
            .collect()
    }

    /// Group index of every element.
    pub fn group_of(&self) -> Vec<usize> {
        let mut owner = vec![0; self.dim()];
        for (g, members) in self.groups().iter().enumerate() {
            for &i in members {
                owner[i] = g;
            }
        }
        owner
    }

    /// Zeroes every entry linking elements of different groups.
    pub fn mask(&self, m: &CMatrix) -> CMatrix {
        if self.is_fully_connected() {
            return m.clone();
        }
        let owner = self.group_of();
        CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            if owner[i] == owner[j] {
                m[(i, j)]
            } else {
                ZERO
            }
        })
    }
}

pub(crate) fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in p {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `U·V†` for `M = U·Σ·V†`, together with the smallest singular value.
pub(crate) fn polar_factor(m: &CMatrix) -> (CMatrix, f64) {
    let svd = m.clone().svd(true, true);
    let min_sv = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    (u * v_t, min_sv)
}

/// Nearest unitary matrix in Frobenius norm (the polar factor).
pub fn project_to_unitary(m: &CMatrix) -> Result<UnitaryMatrix> {
    require_square(m)?;
    let (q, min_singular_value) = polar_factor(m);
    if !(min_singular_value > RANK_THRESHOLD) {
        return Err(Error::RankDeficient { min_singular_value });
    }
    Ok(UnitaryMatrix::from_trusted(q))
}

/// Projects `g` onto the tangent space at `at`: `Θ·skew(Θ†G)`.
pub fn tangent_project(g: &CMatrix, at: &UnitaryMatrix) -> Result<TangentDirection> {
    if g.shape() != at.matrix().shape() {
        return Err(Error::DimensionMismatch(format!(
            "direction is {:?}, base point is {:?}",
            g.shape(),
            at.matrix().shape()
        )));
    }
    let theta = at.matrix();
    let s = linalg::skew(&(theta.adjoint() * g));
    Ok(TangentDirection { entries: theta * s })
}

/// Polar retraction `polar(Θ + step·T)`. A zero step returns `Θ` unchanged.
pub fn retract(at: &UnitaryMatrix, dir: &TangentDirection, step: f64) -> Result<UnitaryMatrix> {
    if dir.matrix().shape() != at.matrix().shape() {
        return Err(Error::DimensionMismatch("direction and base point differ in shape".into()));
    }
    if !step.is_finite() {
        return Err(Error::InvalidInput(format!("retraction step {step} is not finite")));
    }
    if step == 0.0 {
        return Ok(at.clone());
    }
    project_to_unitary(&(at.matrix() + dir.matrix().scale(step)))
}

/// Standard complex Gaussian `CN(0, 1)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let z = DMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(UnitaryMatrix::from_trusted(q))
}

/// Block-diagonal unitary with independent Haar blocks.
pub fn random_block_unitary<R: Rng + ?Sized>(
    structure: &BlockStructure,
    rng: &mut R,
) -> Result<UnitaryMatrix> {
    let n = structure.dim();
    let mut out = CMatrix::zeros(n, n);
    for members in structure.groups() {
        let block = random_unitary(members.len(), rng)?;
        scatter_block(&mut out, &members, block.matrix());
    }
    Ok(UnitaryMatrix::from_trusted(out))
}

pub(crate) fn gather_block(m: &CMatrix, members: &[usize]) -> CMatrix {
    CMatrix::from_fn(members.len(), members.len(), |i, j| m[(members[i], members[j])])
}

pub(crate) fn scatter_block(out: &mut CMatrix, members: &[usize], block: &CMatrix) {
    for (bi, &i) in members.iter().enumerate() {
        for (bj, &j) in members.iter().enumerate() {
            out[(i, j)] = block[(bi, bj)];
        }
    }
}

/// Keeps only the (permuted) diagonal blocks of `m` and replaces each by
/// its polar factor.
pub fn block_project(m: &CMatrix, structure: &BlockStructure) -> Result<UnitaryMatrix> {
    let n = require_square(m)?;
    if structure.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "block structure covers {} elements, matrix is {n}x{n}",
            structure.dim()
        )));
    }
    if structure.is_fully_connected() && structure.permutation().is_none() {
        return project_to_unitary(m);
    }
    let mut out = CMatrix::zeros(n, n);
    for members in structure.groups() {
        let block = gather_block(m, &members);
        let projected = if members.len() == 1 {
            let z = block[(0, 0)];
            if !(z.norm() > RANK_THRESHOLD) {
                return Err(Error::RankDeficient { min_singular_value: z.norm() });
            }
            CMatrix::from_element(1, 1, z / z.norm())
        } else {
            project_to_unitary(&block)?.into_matrix()
        };
        scatter_block(&mut out, &members, &projected);
    }
    Ok(UnitaryMatrix::from_trusted(out))
}
