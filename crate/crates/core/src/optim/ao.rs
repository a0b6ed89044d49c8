use std::time::Instant;

use crate::bdris::BdRisArchitecture;
use crate::channel::ChannelRealization;
use crate::linalg::{real_inner, CMatrix};
use crate::manifold::UnitaryMatrix;
use crate::Result;

use super::{check_realizations, FeasibleSet, GainProblem, Note, ObjectiveKind, OptimizerConfig, OptimizerResult};

/// Iterate of a gain ascent: the normalised objective `φ = f/scale` and its
/// Riemannian gradient.
pub(super) struct GainState {
    pub theta: UnitaryMatrix,
    pub phi: f64,
    pub grad: CMatrix,
    pub grad_norm: f64,
}

pub(super) struct GainAscent {
    pub problem: GainProblem,
    pub set: FeasibleSet,
}

pub(super) struct Accepted {
    pub theta: UnitaryMatrix,
    pub phi: f64,
    pub step: f64,
}

impl GainAscent {
    pub fn new(realizations: &[ChannelRealization], arch: &BdRisArchitecture) -> Result<Self> {
        let (n, _) = check_realizations(realizations)?;
        let set = FeasibleSet::new(arch, n)?;
        Ok(Self { problem: GainProblem::new(realizations)?, set })
    }

    pub fn state(&self, theta: UnitaryMatrix) -> GainState {
        let (f, g) = self.problem.value_and_gradient(theta.matrix());
        let scale = self.problem.scale();
        let grad = self.set.tangent(&theta, &g.scale(2.0 / scale));
        GainState { phi: f / scale, grad_norm: grad.norm(), grad, theta }
    }

    pub fn phi(&self, theta: &UnitaryMatrix) -> f64 {
        self.problem.value(theta.matrix()) / self.problem.scale()
    }

    pub fn is_stationary(&self, st: &GainState, cfg: &OptimizerConfig) -> bool {
        st.grad_norm <= cfg.gradient_tolerance * (1.0 + st.phi.abs())
    }

    /// Backtracking from `step` along `dir` until
    /// `φ(R(Θ, t·dir)) ≥ φ + c·t·slope`.
    pub fn armijo(
        &self,
        st: &GainState,
        dir: &CMatrix,
        slope: f64,
        mut step: f64,
        cfg: &OptimizerConfig,
    ) -> Option<Accepted> {
        for _ in 0..cfg.max_backtracks {
            if let Ok(theta) = self.set.retract(&st.theta, dir, step) {
                let phi = self.phi(&theta);
                if phi >= st.phi + cfg.armijo_c * step * slope {
                    return Some(Accepted { theta, phi, step });
                }
            }
            step *= cfg.backtrack_factor;
        }
        None
    }

    /// Outcome of a run stopped by the objective test: converged only if the
    /// gradient test also holds.
    pub fn slow_progress(&self, st: &GainState, cfg: &OptimizerConfig, notes: &mut Vec<Note>) -> bool {
        let stationary = self.is_stationary(st, cfg);
        if !stationary {
            notes.push(Note::SlowProgress);
        }
        stationary
    }

    pub fn finish(
        &self,
        st: GainState,
        trace: Vec<f64>,
        start: Instant,
        iterations: usize,
        converged: bool,
        notes: Vec<Note>,
    ) -> OptimizerResult {
        OptimizerResult {
            theta: st.theta,
            objective_trace: trace,
            objective: ObjectiveKind::ChannelGain,
            wall_time_s: start.elapsed().as_secs_f64(),
            iterations,
            converged,
            final_gradient_norm: st.grad_norm,
            notes,
        }
    }
}

/// Barzilai–Borwein trial step `⟨s,s⟩/|⟨s,y⟩|` from the iterate difference
/// `s` and gradient difference `y` (taken in the ambient space), limited to
/// a displacement of `initial_step` along `grad`.
pub(super) fn barzilai_borwein(s: &CMatrix, y: &CMatrix, grad: &CMatrix, cfg: &OptimizerConfig) -> f64 {
    let sy = real_inner(s, y).abs();
    let cap = cfg.initial_step / grad.norm().max(f64::MIN_POSITIVE);
    if sy > 0.0 {
        (s.norm_squared() / sy).min(cap)
    } else {
        cap
    }
}

pub(super) fn relative_gain(new: f64, old: f64) -> f64 {
    (new - old) / old.abs().max(f64::MIN_POSITIVE)
}

/// Consecutive small gains after which a non-stationary run is abandoned.
const STALL_PATIENCE: usize = 10;

/// Counts consecutive iterations whose relative gain is below tolerance.
#[derive(Default)]
pub(super) struct ProgressMonitor {
    small: usize,
}

impl ProgressMonitor {
    /// True once [`STALL_PATIENCE`] consecutive gains fall below `tol`.
    pub fn stalled(&mut self, gain: f64, tol: f64) -> bool {
        self.small = if gain < tol { self.small + 1 } else { 0 };
        self.small >= STALL_PATIENCE
    }
}

/// Riemannian gradient ascent on the channel gain with Armijo backtracking
/// and polar retraction (block-wise for group-connected surfaces). Trial
/// steps follow the Barzilai–Borwein rule; every accepted step satisfies the
/// Armijo condition, so the trace never decreases.
pub fn ao_manifold(
    realizations: &[ChannelRealization],
    arch: &BdRisArchitecture,
    cfg: &OptimizerConfig,
) -> Result<OptimizerResult> {
    ao_manifold_observed(realizations, arch, cfg, |_| {})
}

/// [`ao_manifold`] calling `observe` on the initial point and every accepted
/// iterate.
pub fn ao_manifold_observed(
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
    let mut trial = cfg.initial_step / st.grad_norm.max(f64::MIN_POSITIVE);
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
        let slope = st.grad_norm * st.grad_norm;
        let Some(acc) = ctx.armijo(&st, &st.grad, slope, trial, cfg) else {
            notes.push(Note::LineSearchStall);
            break true;
        };
        iterations += 1;
        observe(&acc.theta);
        let gain = relative_gain(acc.phi, st.phi);
        let next = ctx.state(acc.theta);
        let s = ctx.set.tangent(&next.theta, &(next.theta.matrix() - st.theta.matrix()));
        let y = &next.grad - ctx.set.tangent(&next.theta, &st.grad);
        trial = barzilai_borwein(&s, &y, &next.grad, cfg);
        st = next;
        trace.push(st.phi * scale);
        if progress.stalled(gain, cfg.objective_tolerance) {
            break ctx.slow_progress(&st, cfg, &mut notes);
        }
    };
    Ok(ctx.finish(st, trace, start, iterations, converged, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdris::{optimal_fully_connected_single_tag, validate};
    use crate::optim::testutil::{rayleigh_realization, single_tag};
    use crate::optim::ThetaInit;
    use crate::seed::rng_from_seed;

    #[test]
    fn reaches_single_tag_optimum() {
        for seed in 0..5 {
            let mut rng = rng_from_seed(seed);
            let (r, b, c) = single_tag(8, &mut rng);
            let cfg = OptimizerConfig { seed, ..OptimizerConfig::default() };
            let res = ao_manifold(&[r], &BdRisArchitecture::FullyConnected, &cfg).unwrap();
            let bound = b.norm_squared() * c.norm_squared();
            assert!(res.final_objective() >= 0.99 * bound, "{} vs {bound}", res.final_objective());
            assert!(res.final_objective() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn closed_form_start_is_stationary() {
        let mut rng = rng_from_seed(9);
        let (r, b, c) = single_tag(6, &mut rng);
        let opt = optimal_fully_connected_single_tag(&b, &c).unwrap();
        let cfg = OptimizerConfig { init: ThetaInit::Fixed(opt.theta.into_matrix()), ..OptimizerConfig::default() };
        let res = ao_manifold(&[r], &BdRisArchitecture::FullyConnected, &cfg).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 1);
    }

    #[test]
    fn trace_is_monotone_and_iterates_feasible() {
        let mut rng = rng_from_seed(11);
        let rs: Vec<_> = (0..3).map(|_| rayleigh_realization(3, 8, 2, &mut rng)).collect();
        for arch in [BdRisArchitecture::FullyConnected, BdRisArchitecture::Diagonal] {
            let mut worst: f64 = 0.0;
            let res = ao_manifold_observed(&rs, &arch, &OptimizerConfig::default(), |t| {
                worst = worst.max(validate(t.matrix(), &arch).violations.len() as f64);
                worst = worst.max(t.unitarity_error() * 1e8);
            })
            .unwrap();
            assert!(worst <= 1.0);
            assert!(res.objective_trace.windows(2).all(|w| w[1] >= w[0]));
            assert!(res.converged);
        }
    }

    #[test]
    fn stationary_at_convergence() {
        let mut converged = 0;
        for seed in 0..10 {
            let mut rng = rng_from_seed(12 + seed);
            let rs: Vec<_> = (0..2).map(|_| rayleigh_realization(2, 6, 2, &mut rng)).collect();
            let res = ao_manifold(&rs, &BdRisArchitecture::FullyConnected, &OptimizerConfig::default()).unwrap();
            let phi = res.final_objective() / GainProblem::new(&rs).unwrap().scale();
            let stationary = res.final_gradient_norm <= 1e-4 * (1.0 + phi);
            assert_eq!(res.converged, stationary, "{}", res.final_gradient_norm);
            assert_eq!(res.notes.contains(&Note::SlowProgress), !stationary);
            converged += usize::from(res.converged);
        }
        assert!(converged >= 8);
    }

    #[test]
    fn deterministic_traces() {
        let mut rng = rng_from_seed(13);
        let rs: Vec<_> = (0..2).map(|_| rayleigh_realization(2, 5, 2, &mut rng)).collect();
        let cfg = OptimizerConfig { seed: 77, ..OptimizerConfig::default() };
        let a = ao_manifold(&rs, &BdRisArchitecture::FullyConnected, &cfg).unwrap();
        let b = ao_manifold(&rs, &BdRisArchitecture::FullyConnected, &cfg).unwrap();
        assert_eq!(a.objective_trace, b.objective_trace);
        assert_eq!(a.theta, b.theta);
    }
}
