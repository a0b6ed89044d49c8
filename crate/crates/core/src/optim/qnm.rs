use std::collections::VecDeque;
use std::time::Instant;

use crate::bdris::BdRisArchitecture;
use crate::channel::ChannelRealization;
use crate::linalg::{real_inner, CMatrix};
use crate::manifold::UnitaryMatrix;
use crate::Result;

use super::ao::{relative_gain, GainAscent, ProgressMonitor};
use super::{Note, OptimizerConfig, OptimizerResult};

/// Curvature pair of the minimised function `-φ`.
struct Pair {
    s: CMatrix,
    y: CMatrix,
    rho: f64,
}

fn curvature(s: &CMatrix, y: &CMatrix) -> Option<f64> {
    let sy = real_inner(s, y);
    (sy > 1e-12 * s.norm() * y.norm()).then(|| 1.0 / sy)
}

/// `H·g` by the two-loop recursion, with the initial scaling `⟨s,y⟩/⟨y,y⟩`
/// of the newest pair.
fn two_loop(memory: &VecDeque<Pair>, g: &CMatrix) -> CMatrix {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(memory.len());
    for p in memory.iter().rev() {
        let a = p.rho * real_inner(&p.s, &q);
        q -= p.y.scale(a);
        alphas.push(a);
    }
    let last = memory.back().expect("memory is not empty");
    let gamma = 1.0 / (last.rho * last.y.norm_squared());
    let mut r = q.scale(gamma);
    for (p, a) in memory.iter().zip(alphas.iter().rev()) {
        let b = p.rho * real_inner(&p.y, &r);
        r += p.s.scale(a - b);
    }
    r
}

/// Riemannian L-BFGS on the channel gain. Stored pairs are moved to each new
/// iterate by tangent projection; a non-ascent quasi-Newton direction, or one
/// whose line search fails, resets the memory and falls back to steepest
/// ascent.
pub fn qnm_manifold(
    realizations: &[ChannelRealization],
    arch: &BdRisArchitecture,
    cfg: &OptimizerConfig,
) -> Result<OptimizerResult> {
    qnm_manifold_observed(realizations, arch, cfg, |_| {})
}

/// [`qnm_manifold`] calling `observe` on the initial point and every accepted
/// iterate.
pub fn qnm_manifold_observed(
    realizations: &[ChannelRealization],
    arch: &BdRisArchitecture,
    cfg: &OptimizerConfig,
    mut observe: impl FnMut(&UnitaryMatrix),
) -> Result<OptimizerResult> {
    let start = Instant::now();
    cfg.validate()?;
    let ctx = GainAscent::new(realizations, arch)?;
    let theta = ctx.set.initial_point(&cfg.init, cfg.seed)?;
    observe(&theta);
    let scale = ctx.problem.scale();
    let mut st = ctx.state(theta);
    let mut trace = vec![st.phi * scale];
    let mut notes = Vec::new();
    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(cfg.lbfgs_memory + 1);
    let mut displacement = cfg.initial_step;
    let mut iterations = 0;
    let mut progress = ProgressMonitor::default();
    let converged = loop {
        if ctx.is_stationary(&st, cfg) {
            break true;
        }
        if iterations == cfg.max_iterations {
            notes.push(Note::IterationLimit);
            break false;
        }
        let mut attempt = None;
        if !memory.is_empty() {
            let dir = ctx.set.tangent(&st.theta, &two_loop(&memory, &st.grad));
            let slope = real_inner(&st.grad, &dir);
            if slope > 0.0 {
                attempt = ctx.armijo(&st, &dir, slope, 1.0, cfg).map(|acc| (acc, dir));
            }
            if attempt.is_none() {
                memory.clear();
            }
        }
        if attempt.is_none() {
            let slope = st.grad_norm * st.grad_norm;
            attempt = ctx
                .armijo(&st, &st.grad, slope, displacement / st.grad_norm, cfg)
                .map(|acc| (acc, st.grad.clone()));
        }
        let Some((acc, dir)) = attempt else {
            notes.push(Note::LineSearchStall);
            break true;
        };
        let step = dir.scale(acc.step);
        displacement = (2.0 * step.norm()).min(cfg.initial_step);
        iterations += 1;
        observe(&acc.theta);
        let gain = relative_gain(acc.phi, st.phi);
        let next = ctx.state(acc.theta);

        // Transport everything to the new tangent space.
        let s = ctx.set.tangent(&next.theta, &step);
        let y = ctx.set.tangent(&next.theta, &st.grad) - &next.grad;
        let mut moved = VecDeque::with_capacity(memory.len() + 1);
        for p in memory.drain(..) {
            let ps = ctx.set.tangent(&next.theta, &p.s);
            let py = ctx.set.tangent(&next.theta, &p.y);
            if let Some(rho) = curvature(&ps, &py) {
                moved.push_back(Pair { s: ps, y: py, rho });
            }
        }
        memory = moved;
        if let Some(rho) = curvature(&s, &y) {
            memory.push_back(Pair { s, y, rho });
            if memory.len() > cfg.lbfgs_memory {
                memory.pop_front();
            }
        }

        st = next;
        trace.push(st.phi * scale);
        if progress.stalled(gain, cfg.objective_tolerance) {
            break ctx.slow_progress(&st, cfg, &mut notes);
        }
    };
    Ok(ctx.finish(st, trace, start, iterations, converged, notes))
}
