//! The preconditioned primal–dual iteration and the raw best-response
//! dynamics.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, LocalCost, Snapshot};
use crate::linalg::{norm2, spectral_norm_lanczos};
use crate::metrics::{consensus_residual, RunTrace, TraceRow};
use crate::precondition::{
    check_bounds_with, params_with_gamma, suggest_params_with, BoundNorms, PreconditionerOps, LANCZOS_MAX_STEPS,
    SolverParams,
};
use crate::prox::{prox_local, subgradient_violation};
use crate::schedule::Schedule;

/// Residual windows needed before a run counts as converged.
pub const STOP_STREAK: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Tilde {
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub sigma: Vec<f64>,
    pub k: usize,
    pub last_tilde: Option<Tilde>,
}

impl IterateState {
    pub fn new(x: Vec<f64>, sigma: Vec<f64>) -> Self {
        Self {
            x,
            sigma,
            k: 0,
            last_tilde: None,
        }
    }

    /// Starts from `x0` with a zero multiplier.
    pub fn primal(game: &GameSpec, x0: Vec<f64>) -> Result<Self> {
        let s = Self::new(x0, vec![0.0; game.rows()]);
        s.check(game)?;
        Ok(s)
    }

    fn check(&self, game: &GameSpec) -> Result<()> {
        if self.x.len() != game.size() || self.sigma.len() != game.rows() {
            return Err(Error::Shape(format!(
                "state has lengths {}/{}, game needs {}/{}",
                self.x.len(),
                self.sigma.len(),
                game.size(),
                game.rows()
            )));
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.sigma).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// `‖col(x, σ) − col(x̃, σ̃)‖`
    pub fixed_point_residual: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub elapsed: Duration,
}

fn check_sizes(state: &IterateState, game: &GameSpec, snap: &Snapshot, params: &SolverParams) -> Result<()> {
    state.check(game)?;
    if params.delta.len() != game.agents || snap.agents() != game.agents {
        return Err(Error::Shape(format!(
            "parameters for {} agents, snapshot for {}, game has {}",
            params.delta.len(),
            snap.agents(),
            game.agents
        )));
    }
    Ok(())
}

/// The resolvent image `(x̃, σ̃)`, evaluating agents in `order`. Only the
/// old state is read, so the order cannot change the result.
pub(crate) fn resolvent_in_order(
    state: &IterateState,
    game: &GameSpec,
    snap: &Snapshot,
    params: &SolverParams,
    order: &[usize],
) -> Result<Tilde> {
    let n = game.dim;
    let ax = snap.mix(&state.x, n);
    let cts = snap.coupling_apply_transpose(&state.sigma);
    let mut blocks: Vec<Option<Vec<f64>>> = vec![None; game.agents];
    for &i in order {
        let d = params.delta[i];
        let lam = d / (d + 1.0);
        let v: Vec<f64> = (i * n..(i + 1) * n)
            .map(|c| lam * (state.x[c] / d + ax[c] - params.alpha[i] * cts[c]))
            .collect();
        blocks[i] = Some(prox_local(lam, &v, &game.costs[i], &game.boxes[i])?);
    }
    let mut x = Vec::with_capacity(game.size());
    for (i, b) in blocks.into_iter().enumerate() {
        x.extend(b.ok_or_else(|| Error::Shape(format!("agent {i} missing from evaluation order")))?);
    }
    let cx = snap.coupling_apply(&state.x);
    let sigma = state
        .sigma
        .iter()
        .zip(cx.iter().zip(snap.rhs.iter()))
        .map(|(s, (a, c))| (s + (a - c) / params.beta).max(0.0))
        .collect();
    Ok(Tilde { x, sigma })
}

pub fn resolvent(state: &IterateState, game: &GameSpec, snap: &Snapshot, params: &SolverParams) -> Result<Tilde> {
    check_sizes(state, game, snap, params)?;
    let order: Vec<usize> = (0..game.agents).collect();
    resolvent_in_order(state, game, snap, params, &order)
}

/// Relaxed, `Q̄Φ`-weighted move toward the resolvent image.
fn advance(
    state: &IterateState,
    tilde: &Tilde,
    game: &GameSpec,
    snap: &Snapshot,
    params: &SolverParams,
) -> (Vec<f64>, Vec<f64>) {
    let n = game.dim;
    let g = params.gamma;
    let dx: Vec<f64> = tilde.x.iter().zip(&state.x).map(|(a, b)| a - b).collect();
    let ds: Vec<f64> = tilde.sigma.iter().zip(&state.sigma).map(|(a, b)| a - b).collect();
    let adx = snap.mix(&dx, n);
    let ctds = snap.coupling_apply_transpose(&ds);
    let cdx = snap.coupling_apply(&dx);
    let x = (0..game.size())
        .map(|c| {
            let i = c / n;
            let dir = dx[c] / params.delta[i] + adx[c] - params.alpha[i] * ctds[c];
            state.x[c] + g * params.q[i] * dir
        })
        .collect();
    let sigma = (0..ds.len())
        .map(|r| state.sigma[r] + g * (params.beta * ds[r] + cdx[r]))
        .collect();
    (x, sigma)
}

fn residuals(state: &IterateState, tilde: &Tilde) -> (f64, f64) {
    let p: Vec<f64> = state.x.iter().zip(&tilde.x).map(|(a, b)| a - b).collect();
    let d: Vec<f64> = state.sigma.iter().zip(&tilde.sigma).map(|(a, b)| a - b).collect();
    (norm2(&p), norm2(&d))
}

/// One iteration from `state` at time `state.k`.
pub fn tv_prox_gnwe_step(
    state: &IterateState,
    game: &GameSpec,
    snap: &Snapshot,
    params: &SolverParams,
) -> Result<(IterateState, StepReport)> {
    let start = Instant::now();
    let tilde = resolvent(state, game, snap, params)?;
    let (x, sigma) = advance(state, &tilde, game, snap, params);
    let (p, d) = residuals(state, &tilde);
    let next = IterateState {
        x,
        sigma,
        k: state.k + 1,
        last_tilde: Some(tilde),
    };
    if !next.is_finite() {
        return Err(Error::Divergence { k: state.k + 1 });
    }
    Ok((
        next,
        StepReport {
            fixed_point_residual: p.hypot(d),
            primal_residual: p,
            dual_residual: d,
            elapsed: start.elapsed(),
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionReport {
    pub ok: bool,
    pub primal_violation: f64,
    pub dual_violation: f64,
}

/// Checks `0 ∈ Φ(ϖ̃ − ϖ) + 𝒜ϖ̃` row block by row block for the state the
/// tilde pair was computed from (`state.x`, `state.sigma`).
pub fn inclusion_check(
    state: &IterateState,
    tilde: &Tilde,
    game: &GameSpec,
    snap: &Snapshot,
    params: &SolverParams,
    tol: f64,
) -> Result<InclusionReport> {
    check_sizes(state, game, snap, params)?;
    let n = game.dim;
    let dx: Vec<f64> = tilde.x.iter().zip(&state.x).map(|(a, b)| a - b).collect();
    let ds: Vec<f64> = tilde.sigma.iter().zip(&state.sigma).map(|(a, b)| a - b).collect();
    let adx = snap.mix(&dx, n);
    let ax_t = snap.mix(&tilde.x, n);
    let ct_ds = snap.coupling_apply_transpose(&ds);
    let ct_st = snap.coupling_apply_transpose(&tilde.sigma);
    // −[(δ⁻¹ + A)(x̃ − x) − ΛCᵀ(σ̃ − σ) + x̃ − Ax̃ + ΛCᵀσ̃] ∈ ∂f̄(x̃)
    let g: Vec<f64> = (0..game.size())
        .map(|c| {
            let i = c / n;
            let a = params.alpha[i];
            -(dx[c] / params.delta[i] + adx[c] - a * ct_ds[c] + tilde.x[c] - ax_t[c] + a * ct_st[c])
        })
        .collect();
    let mut primal = 0.0_f64;
    for i in 0..game.agents {
        let r = i * n..(i + 1) * n;
        primal = primal.max(subgradient_violation(
            &tilde.x[r.clone()],
            &g[r],
            &game.costs[i],
            &game.boxes[i],
        ));
    }
    // (Cx − c) − β(σ̃ − σ) ∈ N_{≥0}(σ̃)
    let cx = snap.coupling_apply(&state.x);
    let mut dual = 0.0_f64;
    for r in 0..ds.len() {
        let w = cx[r] - snap.rhs[r] - params.beta * ds[r];
        let s = tilde.sigma[r];
        dual = dual.max((-s).max(0.0)).max(w.max(0.0)).max(s.min(-w).abs());
    }
    Ok(InclusionReport {
        ok: primal <= tol && dual <= tol,
        primal_violation: primal,
        dual_violation: dual,
    })
}

/// Closed-form best response for games where it is available: scalar
/// strategies (the coupling restricts each agent to an interval) or no
/// coupling at all (everything separates per coordinate).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosedFormBr {
    _private: (),
}

impl ClosedFormBr {
    pub fn for_game(game: &GameSpec) -> Result<Self> {
        if game.dim == 1 || game.rows() == 0 {
            Ok(Self { _private: () })
        } else {
            Err(Error::Unsupported(format!(
                "no closed-form best response with {} coupling rows in dimension {}",
                game.rows(),
                game.dim
            )))
        }
    }
}

/// Simultaneous myopic best responses at time `state.k`.
pub fn best_response_step(state: &IterateState, game: &GameSpec, _br: &ClosedFormBr) -> Result<IterateState> {
    if state.x.len() != game.size() {
        return Err(Error::Shape(format!(
            "profile has length {}, expected {}",
            state.x.len(),
            game.size()
        )));
    }
    let n = game.dim;
    let k = state.k;
    let a = game.network.at(k)?;
    let z = crate::game::lifted_apply(&a, &state.x, n);
    let mut x = Vec::with_capacity(game.size());
    for i in 0..game.agents {
        let (mut lo, mut hi) = (game.boxes[i].lo.clone(), game.boxes[i].hi.clone());
        if game.rows() > 0 {
            let others: Vec<f64> = (0..game.agents)
                .filter(|&j| j != i)
                .flat_map(|j| game.block(&state.x, j).to_vec())
                .collect();
            let h = game.local_feasible_set(i, &others, k)?;
            for r in 0..h.rhs.len() {
                let (coef, b) = (h.matrix[(r, 0)], h.rhs[r]);
                if coef > 0.0 {
                    hi[0] = hi[0].min(b / coef);
                } else if coef < 0.0 {
                    lo[0] = lo[0].max(b / coef);
                } else if b < 0.0 {
                    lo[0] = f64::INFINITY;
                }
            }
        }
        for d in 0..n {
            if lo[d] > hi[d] {
                return Err(Error::InvalidGame(format!(
                    "agent {i} has an empty feasible set at k = {k}"
                )));
            }
            let zc = z[i * n + d];
            let u = match &game.costs[i] {
                LocalCost::Zero => zc,
                LocalCost::Quadratic { target, weight } => (weight * target[d] + zc) / (weight + 1.0),
            };
            x.push(u.clamp(lo[d], hi[d]));
        }
    }
    Ok(IterateState {
        x,
        sigma: state.sigma.clone(),
        k: k + 1,
        last_tilde: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitParams {
    pub delta: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
    /// Overrides `gamma` with `γ(k)` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_schedule: Option<Schedule>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    /// Per-step suggestions with one run-wide step size (their minimum).
    Auto { margin: f64 },
    Explicit(ExplicitParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub max_iters: usize,
    pub residual_tol: f64,
    pub params: ParamSource,
    /// Fail on the first bound violation instead of recording it.
    pub strict: bool,
    /// Check the inclusion after every step and record the `W_Φ` residual.
    pub monitor: bool,
    pub inclusion_tol: f64,
    /// Keep every `(x, σ)` in the trace.
    pub record_states: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            residual_tol: 1e-12,
            params: ParamSource::Auto { margin: 0.1 },
            strict: false,
            monitor: false,
            inclusion_tol: 1e-8,
            record_states: false,
        }
    }
}

/// Everything the iteration needs at one time index.
#[derive(Debug, Clone)]
pub struct StepPlan {
    pub snapshot: Snapshot,
    pub params: SolverParams,
    pub bounds_ok: bool,
}

/// Snapshots and parameters for `k = 0..=horizon`.
pub fn plan_params(game: &GameSpec, source: &ParamSource, horizon: usize, strict: bool) -> Result<Vec<StepPlan>> {
    let mut snaps = Vec::with_capacity(horizon + 1);
    let mut norms = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let s = game.snapshot(k)?;
        norms.push(BoundNorms::compute(game, &s)?);
        snaps.push(s);
    }
    let params: Vec<SolverParams> = match source {
        ParamSource::Auto { margin } => {
            let mut gamma = f64::INFINITY;
            for (s, nm) in snaps.iter().zip(&norms) {
                gamma = gamma.min(suggest_params_with(s, nm, *margin)?.gamma);
            }
            snaps
                .iter()
                .zip(&norms)
                .map(|(s, nm)| params_with_gamma(s, nm, *margin, gamma))
                .collect::<Result<_>>()?
        }
        ParamSource::Explicit(e) => snaps
            .iter()
            .map(|s| {
                let g = e.gamma_schedule.as_ref().map_or(e.gamma, |sch| sch.value(s.k));
                SolverParams::new(s, e.delta.clone(), e.beta, g)
            })
            .collect::<Result<_>>()?,
    };
    let mut plan = Vec::with_capacity(horizon + 1);
    for ((snapshot, params), nm) in snaps.into_iter().zip(params).zip(&norms) {
        let report = check_bounds_with(&snapshot, &params, nm);
        if strict && !report.all_pass() {
            return Err(Error::BoundsViolated {
                k: snapshot.k,
                failed: report.failed().join(", "),
            });
        }
        plan.push(StepPlan {
            bounds_ok: report.all_pass(),
            snapshot,
            params,
        });
    }
    Ok(plan)
}

/// Iterates from `x0` (and `σ0`, zero by default) until `max_iters` or
/// until the fixed-point residual stays below `residual_tol` for
/// [`STOP_STREAK`] consecutive steps. Row `k` of the trace describes the
/// state at time `k`. Nonfinite iterates end the run early with
/// `diverged_at` set.
pub fn run(game: &GameSpec, x0: &[f64], sigma0: Option<&[f64]>, opts: &RunOptions) -> Result<RunTrace> {
    let sigma = sigma0.map_or_else(|| vec![0.0; game.rows()], <[f64]>::to_vec);
    let mut state = IterateState::new(x0.to_vec(), sigma);
    state.check(game)?;
    let plan = plan_params(game, &opts.params, opts.max_iters, opts.strict)?;
    let laplacian = game.multiplier_laplacian()?;
    let mut trace = RunTrace::default();
    let mut streak = 0;
    let mut warm = Vec::new();
    for step in &plan {
        let k = state.k;
        let (snap, params) = (&step.snapshot, &step.params);
        let tilde = resolvent(&state, game, snap, params)?;
        let (p, d) = residuals(&state, &tilde);
        let fp = p.hypot(d);
        if opts.monitor {
            let inc = inclusion_check(&state, &tilde, game, snap, params, opts.inclusion_tol)?;
            trace.max_inclusion_violation = trace
                .max_inclusion_violation
                .max(inc.primal_violation)
                .max(inc.dual_violation);
        }
        trace.rows.push(TraceRow {
            k,
            fp_residual: fp,
            consensus_residual: consensus_residual(&state.x, &laplacian, game.dim)?,
            max_violation: game.collective_feasible_check(&state.x, k, 0.0)?.max_violation,
            sigma_norm: norm2(&state.sigma),
            gamma: params.gamma,
            bounds_ok: step.bounds_ok,
        });
        if opts.record_states {
            trace.states.push((state.x.clone(), state.sigma.clone()));
        }
        streak = if fp <= opts.residual_tol { streak + 1 } else { 0 };
        if k == opts.max_iters || streak >= STOP_STREAK {
            trace.converged = streak >= STOP_STREAK;
            break;
        }
        let (x, sigma) = advance(&state, &tilde, game, snap, params);
        if opts.monitor {
            let ops = PreconditionerOps::new(snap, params, game.dim);
            let k_norm = spectral_norm_lanczos(&ops.k(), &mut warm, 1e-10, LANCZOS_MAX_STEPS)?;
            let moved: Vec<f64> = x
                .iter()
                .chain(&sigma)
                .zip(state.x.iter().chain(&state.sigma))
                .map(|(a, b)| a - b)
                .collect();
            trace.k_norms.push(k_norm);
            trace.w_residuals.push(norm2(&moved) / (2.0 * params.gamma * k_norm));
        }
        state = IterateState {
            x,
            sigma,
            k: k + 1,
            last_tilde: Some(tilde),
        };
        if !state.is_finite() {
            trace.diverged_at = Some(state.k);
            break;
        }
    }
    trace.iters_used = state.k;
    trace.final_state = state;
    Ok(trace)
}

/// Best-response dynamics traced like [`run`]; `fp_residual` is the length
/// of the next move and `gamma` is recorded as 0.
pub fn run_best_response(
    game: &GameSpec,
    br: &ClosedFormBr,
    x0: &[f64],
    max_iters: usize,
    residual_tol: f64,
) -> Result<RunTrace> {
    let mut state = IterateState::primal(game, x0.to_vec())?;
    let laplacian = game.multiplier_laplacian()?;
    let mut trace = RunTrace::default();
    let mut streak = 0;
    loop {
        let k = state.k;
        let next = best_response_step(&state, game, br)?;
        let moved: Vec<f64> = next.x.iter().zip(&state.x).map(|(a, b)| a - b).collect();
        let fp = norm2(&moved);
        trace.rows.push(TraceRow {
            k,
            fp_residual: fp,
            consensus_residual: consensus_residual(&state.x, &laplacian, game.dim)?,
            max_violation: game.collective_feasible_check(&state.x, k, 0.0)?.max_violation,
            sigma_norm: 0.0,
            gamma: 0.0,
            bounds_ok: false,
        });
        streak = if fp <= residual_tol { streak + 1 } else { 0 };
        if k == max_iters || streak >= STOP_STREAK {
            trace.converged = streak >= STOP_STREAK;
            break;
        }
        if !next.is_finite() {
            trace.diverged_at = Some(k + 1);
            state = next;
            break;
        }
        state = next;
    }
    trace.iters_used = state.k;
    trace.final_state = state;
    Ok(trace)
}
