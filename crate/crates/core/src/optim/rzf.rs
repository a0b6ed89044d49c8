use std::time::Instant;

use crate::bdris::BdRisArchitecture;
use crate::channel::ChannelRealization;
use crate::linalg::{real_inner, CMatrix, ONE};
use crate::manifold::{gather_block, polar_factor, random_block_unitary, scatter_block, UnitaryMatrix};
use crate::seed::rng_from_seed;
use crate::Result;

use super::{check_realizations, FeasibleSet, Note, ObjectiveKind, OptimizerConfig, OptimizerResult};

/// Relative size below which the cross-term matrix is treated as zero.
const CROSS_TERM_THRESHOLD: f64 = 1e-12;

/// `M = Σ_{ℓ,p} b_{ℓ,p} a_{ℓ,p}† C_p†`.
pub(crate) fn cross_term_matrix(realizations: &[ChannelRealization]) -> (CMatrix, f64) {
    let n = realizations[0].num_elements();
    let mut m = CMatrix::zeros(n, n);
    let mut reference = 0.0;
    for r in realizations {
        let c_adj = r.bs_ris.adjoint();
        for (a, b) in r.direct.iter().zip(&r.ris_device) {
            m += b * (a.adjoint() * &c_adj);
            reference += b.norm() * (&r.bs_ris * a).norm();
        }
    }
    (m, reference)
}

/// Maximiser of `Re tr(Θ†M)` over the feasible set: the polar factor of each
/// (masked) block of `M`. Rank-deficient blocks still get a unitary completion.
fn procrustes(m: &CMatrix, set: &FeasibleSet) -> UnitaryMatrix {
    let s = set.structure();
    if s.is_fully_connected() && s.permutation().is_none() {
        return UnitaryMatrix::from_trusted(polar_factor(m).0);
    }
    let n = set.dim();
    let mut out = CMatrix::zeros(n, n);
    for members in s.groups() {
        let block = gather_block(m, &members);
        let q = if members.len() == 1 {
            let z = block[(0, 0)];
            CMatrix::from_element(1, 1, if z.norm() > 0.0 { z / z.norm() } else { ONE })
        } else {
            polar_factor(&block).0
        };
        scatter_block(&mut out, &members, &q);
    }
    UnitaryMatrix::from_trusted(out)
}

/// One-shot design maximising the direct/reflected cross term
/// `Re Σ b†ΘCa = Re tr(Θ†M)`.
///
/// When the masked `M` vanishes (for instance with no direct links) the
/// cross term is constant; a Haar draw seeded by `cfg.seed` is returned and
/// the result carries [`Note::RankDeficientFallback`].
pub fn rzf_one_shot(
    realizations: &[ChannelRealization],
    arch: &BdRisArchitecture,
    cfg: &OptimizerConfig,
) -> Result<OptimizerResult> {
    let start = Instant::now();
    let (n, _) = check_realizations(realizations)?;
    let set = FeasibleSet::new(arch, n)?;
    let (m, reference) = cross_term_matrix(realizations);
    let masked = set.structure().mask(&m);
    let mut notes = Vec::new();
    let theta = if masked.norm() <= CROSS_TERM_THRESHOLD * reference || reference == 0.0 {
        log::warn!("cross-term matrix is rank deficient; falling back to a random unitary");
        notes.push(Note::RankDeficientFallback);
        random_block_unitary(set.structure(), &mut rng_from_seed(cfg.seed))?
    } else {
        procrustes(&masked, &set)
    };
    let value = real_inner(theta.matrix(), &m);
    Ok(OptimizerResult {
        theta,
        objective_trace: vec![value],
        objective: ObjectiveKind::CrossTerm,
        wall_time_s: start.elapsed().as_secs_f64(),
        iterations: 1,
        converged: true,
        final_gradient_norm: 0.0,
        notes,
    })
}
