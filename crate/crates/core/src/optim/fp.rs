use std::f64::consts::LN_2;
use std::time::Instant;

use crate::bdris::BdRisArchitecture;
use crate::channel::ChannelRealization;
use num_complex::Complex64;

use crate::linalg::CMatrix;
use crate::manifold::UnitaryMatrix;
use crate::{Error, Result};

use super::ao::{relative_gain, ProgressMonitor};
use super::rate::{rate_nats, rzf_precoder, sinr_unchecked};
use super::{check_realizations, FeasibleSet, Note, ObjectiveKind, OptimizerConfig, OptimizerResult};

struct Snapshot {
    a: CMatrix,
    b: CMatrix,
    c: CMatrix,
    c_adj: CMatrix,
    rho: f64,
}

impl Snapshot {
    fn effective(&self, theta: &CMatrix) -> CMatrix {
        &self.a + &self.c_adj * (theta.adjoint() * &self.b)
    }
}

/// Quadratic-transform auxiliaries of one snapshot for a fixed precoder.
///
/// With `u_ℓj = h_ℓ†w_j` and `I_ℓ = ρΣ_{j≠ℓ}|u_ℓj|² + 1`, each rate term
/// `ln(1 + ρ|u_ℓℓ|²/I_ℓ)` is bounded below by `ln(1 + q_ℓ)` with
/// `q_ℓ = 2√ρ Re(y_ℓ* u_ℓℓ) − |y_ℓ|² I_ℓ`, which is concave in `Θ` and equal
/// to the rate term at `y_ℓ = √ρ u_ℓℓ / I_ℓ`.
struct Auxiliary {
    w: CMatrix,
    /// `C W`
    cw: CMatrix,
    y: Vec<Complex64>,
    /// SINR at the point the auxiliaries were fitted to.
    gamma: Vec<f64>,
}

impl Auxiliary {
    fn new(s: &Snapshot, theta: &CMatrix, w: CMatrix) -> Self {
        let u = s.effective(theta).adjoint() * &w;
        let gamma = sinr_unchecked(&u, s.rho);
        let y = (0..u.nrows()).map(|l| u[(l, l)] * (s.rho.sqrt() / interference(&u, l, s.rho))).collect();
        Self { cw: &s.c * &w, w, y, gamma }
    }

    fn q(&self, u: &CMatrix, l: usize, rho: f64) -> f64 {
        let y = self.y[l];
        2.0 * rho.sqrt() * (y.conj() * u[(l, l)]).re - y.norm_sqr() * interference(u, l, rho)
    }

    /// Surrogate `Σ_ℓ ln(1 + q_ℓ)`; `-∞` outside its domain.
    fn value(&self, s: &Snapshot, theta: &CMatrix) -> f64 {
        let u = s.effective(theta).adjoint() * &self.w;
        (0..u.nrows())
            .map(|l| {
                let q = self.q(&u, l, s.rho);
                if q > -1.0 { q.ln_1p() } else { f64::NEG_INFINITY }
            })
            .sum()
    }

    /// Row `ℓ` of `K`, where `∂q_ℓ/∂Θ* = b_ℓ k_ℓ (CW)†`.
    fn k_row(&self, u: &CMatrix, l: usize, rho: f64) -> Vec<Complex64> {
        let y = self.y[l];
        (0..u.ncols())
            .map(|j| if j == l { y * rho.sqrt() } else { -u[(l, j)] * (y.norm_sqr() * rho) })
            .collect()
    }

    /// Curvature estimate of the surrogate at the fitted point: the bound
    /// `2ρ|y_ℓ|²‖b_ℓ‖²‖CW‖²_F` on the Hessian of `q_ℓ` over `1+γ_ℓ`, plus
    /// `‖∇q_ℓ‖²/(1+γ_ℓ)²` from the logarithm.
    fn curvature(&self, s: &Snapshot, theta: &CMatrix) -> f64 {
        let u = s.effective(theta).adjoint() * &self.w;
        let cw = self.cw.norm_squared();
        let mut total = 0.0;
        for (l, b) in s.b.column_iter().enumerate() {
            let b2 = b.norm_squared();
            let k = CMatrix::from_row_slice(1, u.ncols(), &self.k_row(&u, l, s.rho));
            let grad = 4.0 * b2 * (k * self.cw.adjoint()).norm_squared();
            let scale = 1.0 + self.gamma[l];
            total += 2.0 * s.rho * self.y[l].norm_sqr() * b2 * cw / scale + grad / (scale * scale);
        }
        total
    }

    /// `∂/∂Θ* = B K (CW)†` with row `ℓ` of `K` weighted by `1/(1+q_ℓ)`.
    fn gradient(&self, s: &Snapshot, theta: &CMatrix) -> CMatrix {
        let u = s.effective(theta).adjoint() * &self.w;
        let l = u.nrows();
        let mut k = CMatrix::zeros(l, l);
        for i in 0..l {
            let weight = 1.0 / (1.0 + self.q(&u, i, s.rho));
            for (j, v) in self.k_row(&u, i, s.rho).into_iter().enumerate() {
                k[(i, j)] = v * weight;
            }
        }
        &s.b * k * self.cw.adjoint()
    }
}

/// `ρΣ_{j≠ℓ}|u_ℓj|² + 1`
fn interference(u: &CMatrix, l: usize, rho: f64) -> f64 {
    let power: f64 = u.row(l).iter().enumerate().filter(|&(j, _)| j != l).map(|(_, z)| z.norm_sqr()).sum();
    rho * power + 1.0
}

struct Problem {
    snapshots: Vec<Snapshot>,
    set: FeasibleSet,
}

impl Problem {
    /// Mean sum rate per snapshot in bits/s/Hz.
    fn rate(&self, theta: &CMatrix, ws: &[CMatrix]) -> f64 {
        let total: f64 = self.snapshots.iter().zip(ws).map(|(s, w)| rate_nats(&s.effective(theta), w, s.rho)).sum();
        total / LN_2 / self.snapshots.len() as f64
    }

    fn surrogate(&self, aux: &[Auxiliary], theta: &CMatrix) -> f64 {
        self.snapshots.iter().zip(aux).map(|(s, a)| a.value(s, theta)).sum()
    }

    /// Euclidean gradient `2·∂f/∂Θ*` of the surrogate, restricted to the
    /// architecture's pattern.
    fn ambient_gradient(&self, aux: &[Auxiliary], theta: &CMatrix) -> CMatrix {
        let n = self.set.dim();
        let mut g = CMatrix::zeros(n, n);
        for (s, a) in self.snapshots.iter().zip(aux) {
            g += a.gradient(s, theta);
        }
        self.set.structure().mask(&g.scale(2.0))
    }
}

/// Sum-rate maximisation by quadratic-transform alternation.
///
/// Each outer iteration fixes the SINR auxiliaries `γ` and the
/// quadratic-transform auxiliaries `y` at their closed forms for the current
/// `(Θ, W)`, takes up to `fp_inner_theta_steps` projected-gradient steps
/// `Θ ← P(Θ + k∇f/L)` on the resulting concave surrogate `f`, then refreshes
/// the RZF precoder. `L` is a curvature estimate of `f` at the fitted point
/// and the multiplier `k` adapts between steps; a step is kept only if `f`
/// does not drop, so the surrogate never decreases. The inner loop ends
/// early once a step gains less than the tolerance. A precoder refresh that
/// would lower the rate is skipped, so the recorded rate never decreases
/// either. The run stops once the rate gradient with the precoder held fixed
/// passes the gradient test, or after repeated small gains.
pub fn fp_sum_rate(
    realizations: &[ChannelRealization],
    arch: &BdRisArchitecture,
    cfg: &OptimizerConfig,
) -> Result<OptimizerResult> {
    fp_sum_rate_observed(realizations, arch, cfg, |_| {})
}

/// [`fp_sum_rate`] calling `observe` on the initial point and every accepted
/// inner iterate.
pub fn fp_sum_rate_observed(
    realizations: &[ChannelRealization],
    arch: &BdRisArchitecture,
    cfg: &OptimizerConfig,
    mut observe: impl FnMut(&UnitaryMatrix),
) -> Result<OptimizerResult> {
    let start = Instant::now();
    cfg.validate()?;
    let (n, _) = check_realizations(realizations)?;
    let set = FeasibleSet::new(arch, n)?;
    let snapshots: Vec<Snapshot> = realizations
        .iter()
        .map(|r| Snapshot {
            a: CMatrix::from_columns(&r.direct),
            b: CMatrix::from_columns(&r.ris_device),
            c_adj: r.bs_ris.adjoint(),
            c: r.bs_ris.clone(),
            rho: r.snr_linear(),
        })
        .collect();
    if snapshots.iter().any(|s| !s.rho.is_finite()) {
        return Err(Error::InvalidInput("transmit SNR must be finite".into()));
    }
    let problem = Problem { snapshots, set };

    let mut theta = problem.set.initial_point(&cfg.init, cfg.seed)?;
    observe(&theta);
    let mut ws = problem
        .snapshots
        .iter()
        .map(|s| rzf_precoder(&s.effective(theta.matrix()), s.rho))
        .collect::<Result<Vec<_>>>()?;
    let mut rate = problem.rate(theta.matrix(), &ws);
    let mut trace = vec![rate];
    let mut notes = Vec::new();
    let mut iterations = 0;
    let mut stretch = 1.0;
    let mut progress = ProgressMonitor::default();
    let fit = |theta: &UnitaryMatrix, ws: &[CMatrix]| -> Vec<Auxiliary> {
        problem.snapshots.iter().zip(ws).map(|(s, w)| Auxiliary::new(s, theta.matrix(), w.clone())).collect()
    };
    let mut aux = fit(&theta, &ws);
    let mut grad_norm = problem.set.tangent(&theta, &problem.ambient_gradient(&aux, theta.matrix())).norm();
    // The surrogate is tight at the fitted point, so this is the partial
    // gradient of the rate in nats with the precoder held fixed. Rates span
    // many decades with path loss, so the test is relative.
    let stationary = |g: f64, rate: f64| g <= cfg.gradient_tolerance * rate * LN_2;

    let converged = loop {
        if stationary(grad_norm, rate) {
            break true;
        }
        if iterations == cfg.max_iterations {
            notes.push(Note::IterationLimit);
            break false;
        }
        let lipschitz: f64 = problem.snapshots.iter().zip(&aux).map(|(s, a)| a.curvature(s, theta.matrix())).sum();
        let mut inner = theta.clone();
        let mut value = problem.surrogate(&aux, inner.matrix());
        for _ in 0..cfg.fp_inner_theta_steps {
            let ascent = problem.ambient_gradient(&aux, inner.matrix());
            if !(lipschitz > 0.0) || ascent.norm() == 0.0 {
                break;
            }
            let Some((cand, v)) = mm_step(&problem, &aux, &inner, &ascent, lipschitz, value, &mut stretch, cfg.max_backtracks) else {
                break;
            };
            observe(&cand);
            let inner_gain = relative_gain(v, value);
            inner = cand;
            value = v;
            if inner_gain < cfg.objective_tolerance {
                break;
            }
        }

        let mut next_ws = Vec::with_capacity(ws.len());
        for (s, w) in problem.snapshots.iter().zip(&ws) {
            let h = s.effective(inner.matrix());
            let fresh = rzf_precoder(&h, s.rho)?;
            next_ws.push(if rate_nats(&h, &fresh, s.rho) >= rate_nats(&h, w, s.rho) { fresh } else { w.clone() });
        }
        let next_rate = problem.rate(inner.matrix(), &next_ws);
        iterations += 1;
        if next_rate < rate {
            // Only reachable through round-off once the surrogate is flat.
            notes.push(Note::LineSearchStall);
            break stationary(grad_norm, rate);
        }
        let gain = relative_gain(next_rate, rate);
        theta = inner;
        ws = next_ws;
        rate = next_rate;
        trace.push(rate);
        aux = fit(&theta, &ws);
        grad_norm = problem.set.tangent(&theta, &problem.ambient_gradient(&aux, theta.matrix())).norm();
        if progress.stalled(gain, cfg.objective_tolerance) {
            let done = stationary(grad_norm, rate);
            if !done {
                notes.push(Note::SlowProgress);
            }
            break done;
        }
    };

    Ok(OptimizerResult {
        theta,
        objective_trace: trace,
        objective: ObjectiveKind::SumRate,
        wall_time_s: start.elapsed().as_secs_f64(),
        iterations,
        converged,
        final_gradient_norm: grad_norm,
        notes,
    })
}

/// One projected step `P(Θ + k·D/L)` kept only if the surrogate does not
/// drop. The multiplier `k` starts at `stretch` and halves on rejection, at
/// most `max_backtracks` times; an accepted step doubles `stretch` for the
/// next call.
#[allow(clippy::too_many_arguments)]
fn mm_step(
    problem: &Problem,
    aux: &[Auxiliary],
    theta: &UnitaryMatrix,
    ascent: &CMatrix,
    lipschitz: f64,
    value: f64,
    stretch: &mut f64,
    max_backtracks: usize,
) -> Option<(UnitaryMatrix, f64)> {
    let mut k = *stretch;
    for _ in 0..=max_backtracks {
        if let Ok(cand) = problem.set.project(&(theta.matrix() + ascent.scale(k / lipschitz))) {
            let v = problem.surrogate(aux, cand.matrix());
            if v >= value {
                *stretch = 2.0 * k;
                return Some((cand, v));
            }
        }
        k *= 0.5;
    }
    *stretch = 1.0;
    None
}
