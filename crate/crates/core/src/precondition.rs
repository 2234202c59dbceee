//! Step-size and preconditioner machinery.
//!
//! The preconditioner is
//!
//! ```text
//! Φ = [ δ⁻¹ + A⊗I   −Λ Cᵀ ]
//!     [ C            β I   ]
//! ```
//!
//! with symmetric part `U`, skew part `S` and metric `K = Q̄ U`,
//! `Q̄ = diag(Q, I)`. The four sufficient inequalities on `(δ, β, γ)` are
//! evaluated by [`check_bounds`]; [`suggest_params`] picks values that
//! satisfy them.
//!
//! Every lifted matrix here has the form `B ⊗ I_n` (possibly times a
//! diagonal that is constant per agent block), and `‖B ⊗ I_n‖ = ‖B‖`, so
//! adjacency norms are taken on the `N × N` factor. Norms involving `C` go
//! through the cached Gram matrix `CᵀC`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameSpec, Snapshot};
use crate::graph::triangular_parts;
use crate::linalg::{
    dense_norm2, kron_identity, kron_identity_factor, lanczos_extreme, max_eigenvalue_sym, spectral_norm_lanczos, Extreme,
    LinearOperator,
};

pub const NORM_TOL: f64 = 1e-12;
pub const LANCZOS_MAX_STEPS: usize = 500;
/// Slack on the non-strict inequalities.
pub const BOUND_SLACK: f64 = 1e-12;

/// Step parameters at one time index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverParams {
    pub delta: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
    /// Dual-burden split `α_i`; equals `q` under the PF rule.
    pub alpha: Vec<f64>,
    /// Left Perron–Frobenius vector of `A(k)`.
    pub q: Vec<f64>,
}

impl SolverParams {
    pub fn new(snapshot: &Snapshot, delta: Vec<f64>, beta: f64, gamma: f64) -> Result<Self> {
        let n = snapshot.agents();
        if delta.len() != n {
            return Err(Error::Shape(format!("{} deltas for {n} agents", delta.len())));
        }
        if delta.iter().any(|&d| !(d > 0.0 && d.is_finite())) || !(beta > 0.0) || !(gamma > 0.0) {
            return Err(Error::ParameterInfeasible(format!(
                "delta, beta and gamma must be positive (beta {beta}, gamma {gamma})"
            )));
        }
        Ok(Self {
            delta,
            beta,
            gamma,
            alpha: snapshot.alpha.iter().copied().collect(),
            q: snapshot.q().iter().copied().collect(),
        })
    }

    fn inv_delta(&self) -> impl Iterator<Item = f64> + '_ {
        self.delta.iter().map(|d| 1.0 / d)
    }
}

/// The game-dependent norms entering the four inequalities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundNorms {
    /// `‖A − A_d‖`
    pub adjacency_offdiag: f64,
    /// `‖Cᵀ − ΛCᵀ‖`, which equals `‖C − CΛ‖` (one is the transpose of the other)
    pub coupling: f64,
    /// `‖Q(Cᵀ − ΛCᵀ)‖`
    pub weighted_coupling: f64,
    /// `‖Q A_ut + (A Q)_lt‖`
    pub triangular: f64,
    /// `‖Q A_ut + Q A_lt‖`, the alternative reading of the triangular term
    pub triangular_alt: f64,
    pub min_self_weight: f64,
}

impl BoundNorms {
    pub fn compute(game: &GameSpec, snapshot: &Snapshot) -> Result<Self> {
        let a = &snapshot.adjacency;
        let n = game.dim;
        let q = snapshot.q();
        let (upper, diag, lower) = triangular_parts(a);
        let offdiag = a - &diag;
        let qm = DMatrix::from_diagonal(q);
        let tri = &qm * &upper + &lower * &qm;
        let tri_alt = &qm * (&upper + &lower);
        let adjacency_offdiag = dense_norm2(&offdiag);
        let triangular = dense_norm2(&tri);
        let triangular_alt = dense_norm2(&tri_alt);

        let (coupling, weighted_coupling) = if game.rows() == 0 {
            (0.0, 0.0)
        } else {
            let full = game.constraints.gram_at(snapshot.k)?;
            // both scalings are constant on agent blocks, so a Gram matrix of
            // the form G ⊗ I_n reduces to G
            let (gram, block) = match kron_identity_factor(&full, n) {
                Some(g) => (g, 1),
                None => ((*full).clone(), n),
            };
            let one_minus = DVector::from_fn(gram.nrows(), |c, _| 1.0 - snapshot.alpha[c / block]);
            let weighted = DVector::from_fn(gram.nrows(), |c, _| q[c / block] * one_minus[c]);
            // ‖C D‖² is the top eigenvalue of D G D
            let c1 = max_eigenvalue_sym(gram.map_with_location(|i, j, g| one_minus[i] * g * one_minus[j]));
            let c2 = max_eigenvalue_sym(gram.map_with_location(|i, j, g| weighted[i] * g * weighted[j]));
            (c1.max(0.0).sqrt(), c2.max(0.0).sqrt())
        };
        Ok(Self {
            adjacency_offdiag,
            coupling,
            weighted_coupling,
            triangular,
            triangular_alt,
            min_self_weight: a.diagonal().min(),
        })
    }

    /// `R` of the second inequality under the literal reading.
    pub fn r(&self) -> f64 {
        2.0 * self.triangular + self.weighted_coupling
    }

    pub fn r_alt(&self) -> f64 {
        2.0 * self.triangular_alt + self.weighted_coupling
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub name: &'static str,
    pub relation: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub k: usize,
    pub rows: [BoundRow; 4],
    /// Right-hand side of the second inequality with `R` read as
    /// `2‖Q A_ut + Q A_lt‖ + ‖Q(Cᵀ − ΛCᵀ)‖`.
    pub rhs_b_alt: f64,
    pub norms: BoundNorms,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.pass).map(|r| r.name).collect()
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "parameter bounds at k = {}", self.k)?;
        for r in &self.rows {
            writeln!(
                f,
                "  {:<8} {:>24.16e} {:^3} {:<24.16e} {}",
                r.name,
                r.lhs,
                r.relation,
                r.rhs,
                if r.pass { "ok" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "  (alternative R reading gives rhs {:.16e} for {})",
            self.rhs_b_alt, self.rows[1].name
        )
    }
}

/// Evaluates the four inequalities exactly as stated; norms are spectral.
pub fn check_bounds_with(
    snapshot: &Snapshot,
    params: &SolverParams,
    norms: &BoundNorms,
) -> BoundReport {
    let a = &snapshot.adjacency;
    let min_lhs = params
        .inv_delta()
        .enumerate()
        .map(|(i, d)| d + a[(i, i)])
        .fold(f64::INFINITY, f64::min);
    let max_lhs = params
        .inv_delta()
        .enumerate()
        .map(|(i, d)| 2.0 * params.q[i] * (d + a[(i, i)]))
        .fold(f64::NEG_INFINITY, f64::max);
    let inv_gamma = 1.0 / params.gamma;
    let rhs_a = norms.adjacency_offdiag + norms.coupling;
    let rhs_b = norms.r() + inv_gamma;
    let rhs_c = 0.5 * norms.coupling;
    let rhs_d = 0.5 * (inv_gamma - norms.coupling);
    BoundReport {
        k: snapshot.k,
        rows: [
            BoundRow {
                name: "(a)",
                relation: ">=",
                lhs: min_lhs,
                rhs: rhs_a,
                pass: min_lhs >= rhs_a - BOUND_SLACK,
            },
            BoundRow {
                name: "(b)",
                relation: "<",
                lhs: max_lhs,
                rhs: rhs_b,
                pass: max_lhs < rhs_b,
            },
            BoundRow {
                name: "(c)",
                relation: ">=",
                lhs: params.beta,
                rhs: rhs_c,
                pass: params.beta >= rhs_c - BOUND_SLACK,
            },
            BoundRow {
                name: "(d)",
                relation: "<",
                lhs: params.beta,
                rhs: rhs_d,
                pass: params.beta < rhs_d,
            },
        ],
        rhs_b_alt: norms.r_alt() + inv_gamma,
        norms: norms.clone(),
    }
}

pub fn check_bounds(game: &GameSpec, snapshot: &Snapshot, params: &SolverParams) -> Result<BoundReport> {
    let norms = BoundNorms::compute(game, snapshot)?;
    Ok(check_bounds_with(snapshot, params, &norms))
}

/// Largest singular value of a 2×2 matrix.
fn norm2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    (0.5 * (s + (s * s - 4.0 * det * det).max(0.0).sqrt())).sqrt()
}

/// Uniform `δ⁻¹` meeting the first inequality with relative slack `margin`,
/// never below `margin` itself.
fn suggested_inv_delta(norms: &BoundNorms, margin: f64) -> f64 {
    let rhs = norms.adjacency_offdiag + norms.coupling;
    ((rhs - norms.min_self_weight).max(0.0) * (1.0 + margin)).max(margin)
}

/// Upper bound on `‖K‖` from the norms of its four blocks.
fn metric_block_norms(snapshot: &Snapshot, inv_delta: &[f64], norms: &BoundNorms) -> (f64, f64, f64) {
    let a = &snapshot.adjacency;
    let q = snapshot.q();
    let n = a.nrows();
    let sym = (a + a.transpose()) * 0.5;
    let primal = DMatrix::from_fn(n, n, |i, j| {
        q[i] * (sym[(i, j)] + if i == j { inv_delta[i] } else { 0.0 })
    });
    let kp = dense_norm2(&primal);
    (kp, 0.5 * norms.weighted_coupling, 0.5 * norms.coupling)
}

fn params_for_gamma(
    snapshot: &Snapshot,
    norms: &BoundNorms,
    inv_delta: f64,
    gamma: f64,
) -> Result<SolverParams> {
    let lo = 0.5 * norms.coupling;
    let hi = 0.5 * (1.0 / gamma - norms.coupling);
    if !(lo < hi) {
        return Err(Error::ParameterInfeasible(format!(
            "(c)-(d) interval [{lo:e}, {hi:e}) is empty for gamma {gamma:e}"
        )));
    }
    let beta = 0.5 * (lo + hi);
    let n = snapshot.agents();
    SolverParams::new(snapshot, vec![1.0 / inv_delta; n], beta, gamma)
}

/// Picks `(δ, β, γ)` satisfying all four inequalities.
///
/// `δ` is uniform; `γ` is the smallest of `(1−margin)·½‖C − CΛ‖⁻¹`, the cap
/// implied by the second inequality, and the step for which the block bound
/// on `γ‖K‖` stays below `1 − ¾·margin`; `β` is the midpoint of the interval
/// left by the last two inequalities.
pub fn suggest_params_with(snapshot: &Snapshot, norms: &BoundNorms, margin: f64) -> Result<SolverParams> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::ParameterInfeasible(format!("margin {margin} outside (0, 1)")));
    }
    let n = snapshot.agents();
    let a = &snapshot.adjacency;
    let q = snapshot.q();
    let inv_delta = suggested_inv_delta(norms, margin);

    let gamma_d = if norms.coupling > 0.0 {
        (1.0 - margin) * 0.5 / norms.coupling
    } else {
        f64::INFINITY
    };
    let lhs_b = (0..n)
        .map(|i| 2.0 * q[i] * (inv_delta + a[(i, i)]))
        .fold(f64::NEG_INFINITY, f64::max);
    let excess = lhs_b - norms.r();
    let gamma_b = if excess > 0.0 {
        (1.0 - margin) / excess
    } else {
        f64::INFINITY
    };
    // β is the interval midpoint, so γβ = 1/4 whenever the interval exists
    let (kp, ke, kf) = metric_block_norms(snapshot, &vec![inv_delta; n], norms);
    let target = 1.0 - 0.75 * margin;
    let bound = |g: f64| norm2x2(g * kp, g * ke, g * kf, 0.25);
    let mut hi = 1.0;
    while bound(hi) <= target && hi < 1e300 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = gamma_d.min(gamma_b).min(lo);
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::ParameterInfeasible(format!("no admissible step size (got {gamma})")));
    }
    let params = params_for_gamma(snapshot, norms, inv_delta, gamma)?;
    let report = check_bounds_with(snapshot, &params, norms);
    if !report.all_pass() {
        return Err(Error::ParameterInfeasible(format!(
            "suggested parameters violate {}",
            report.failed().join(", ")
        )));
    }
    Ok(params)
}

pub fn suggest_params(game: &GameSpec, snapshot: &Snapshot, margin: f64) -> Result<SolverParams> {
    let norms = BoundNorms::compute(game, snapshot)?;
    suggest_params_with(snapshot, &norms, margin)
}

/// Same `δ` rule as [`suggest_params_with`] but with a step size imposed
/// from outside (a run-wide constant); `β` is re-centred for it.
pub fn params_with_gamma(
    snapshot: &Snapshot,
    norms: &BoundNorms,
    margin: f64,
    gamma: f64,
) -> Result<SolverParams> {
    params_for_gamma(snapshot, norms, suggested_inv_delta(norms, margin), gamma)
}

/// Matrix-free `Φ`, `U`, `S` and `K` built from the snapshot.
pub struct PreconditionerOps<'a> {
    snapshot: &'a Snapshot,
    params: &'a SolverParams,
    dim: usize,
}

impl<'a> PreconditionerOps<'a> {
    pub fn new(snapshot: &'a Snapshot, params: &'a SolverParams, dim: usize) -> Self {
        Self {
            snapshot,
            params,
            dim,
        }
    }

    fn primal_len(&self) -> usize {
        self.snapshot.agents() * self.dim
    }

    pub fn len(&self) -> usize {
        self.primal_len() + self.snapshot.coupling.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn phi_parts(&self, v: &[f64], transpose: bool) -> Vec<f64> {
        let np = self.primal_len();
        let (x, s) = v.split_at(np);
        let snap = self.snapshot;
        let n = self.dim;
        let mut out = vec![0.0; self.len()];
        let ax = if transpose {
            crate::game::lifted_apply(&snap.adjacency.transpose(), x, n)
        } else {
            snap.mix(x, n)
        };
        // transpose swaps −ΛCᵀ (top right) with Cᵀ, and C (bottom left) with −CΛ
        let cts = snap.coupling_apply_transpose(s);
        for c in 0..np {
            let i = c / n;
            let d = x[c] / self.params.delta[i] + ax[c];
            out[c] = if transpose {
                d + cts[c]
            } else {
                d - self.params.alpha[i] * cts[c]
            };
        }
        let xin: Vec<f64> = if transpose {
            (0..np).map(|c| -self.params.alpha[c / n] * x[c]).collect()
        } else {
            x.to_vec()
        };
        let cx = snap.coupling_apply(&xin);
        for (r, v) in cx.iter().enumerate() {
            out[np + r] = v + self.params.beta * s[r];
        }
        out
    }

    pub fn phi(&self, v: &[f64]) -> Vec<f64> {
        self.phi_parts(v, false)
    }

    pub fn phi_t(&self, v: &[f64]) -> Vec<f64> {
        self.phi_parts(v, true)
    }

    /// `Q̄ v`
    pub fn q_bar(&self, v: &[f64]) -> Vec<f64> {
        let np = self.primal_len();
        v.iter()
            .enumerate()
            .map(|(c, &x)| if c < np { self.params.q[c / self.dim] * x } else { x })
            .collect()
    }

    pub fn u(&self) -> Part<'_, 'a> {
        Part { ops: self, kind: PartKind::Symmetric }
    }

    pub fn s(&self) -> Part<'_, 'a> {
        Part { ops: self, kind: PartKind::Skew }
    }

    pub fn k(&self) -> Part<'_, 'a> {
        Part { ops: self, kind: PartKind::Metric }
    }
}

#[derive(Clone, Copy)]
enum PartKind {
    Symmetric,
    Skew,
    Metric,
}

/// One of `U`, `S`, `K` as a [`LinearOperator`].
pub struct Part<'o, 'a> {
    ops: &'o PreconditionerOps<'a>,
    kind: PartKind,
}

impl Part<'_, '_> {
    fn combine(&self, v: &[f64], sign: f64) -> Vec<f64> {
        let a = self.ops.phi(v);
        let b = self.ops.phi_t(v);
        a.iter().zip(&b).map(|(x, y)| 0.5 * (x + sign * y)).collect()
    }
}

impl LinearOperator for Part<'_, '_> {
    fn nrows(&self) -> usize {
        self.ops.len()
    }

    fn ncols(&self) -> usize {
        self.ops.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = match self.kind {
            PartKind::Symmetric => self.combine(x, 1.0),
            PartKind::Skew => self.combine(x, -1.0),
            PartKind::Metric => self.ops.q_bar(&self.combine(x, 1.0)),
        };
        y.copy_from_slice(&r);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let r = match self.kind {
            PartKind::Symmetric => self.combine(x, 1.0),
            PartKind::Skew => self.combine(x, -1.0).iter().map(|v| -v).collect(),
            PartKind::Metric => self.combine(&self.ops.q_bar(x), 1.0),
        };
        y.copy_from_slice(&r);
    }
}

/// Spectral quantities used when monitoring the iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreconditionerDiagnostics {
    /// smallest eigenvalue of `U`
    pub m_k: f64,
    /// `‖U‖`
    pub big_m_k: f64,
    /// `‖S‖`, the Lipschitz constant of the skew part
    pub l_k: f64,
    pub rho: f64,
    pub q_m: f64,
    /// `‖K‖`
    pub k_norm: f64,
    /// `L_k > m_k`: the fixed-point/zero equivalence hypothesis does not hold
    pub skew_dominates: bool,
}

impl PreconditionerDiagnostics {
    pub fn compute(ops: &PreconditionerOps<'_>) -> Result<Self> {
        let u = ops.u();
        let top = lanczos_extreme(&u, Extreme::Largest, &mut Vec::new(), NORM_TOL, LANCZOS_MAX_STEPS)?;
        let m_k = lanczos_extreme(&u, Extreme::Smallest, &mut Vec::new(), NORM_TOL, LANCZOS_MAX_STEPS)?;
        let big_m_k = top.abs().max(m_k.abs());
        let l_k = spectral_norm_lanczos(&ops.s(), &mut Vec::new(), NORM_TOL, LANCZOS_MAX_STEPS)?;
        let k_norm = spectral_norm_lanczos(&ops.k(), &mut Vec::new(), NORM_TOL, LANCZOS_MAX_STEPS)?;
        let mut q_m = ops.params.q.iter().copied().fold(f64::INFINITY, f64::min);
        if ops.snapshot.coupling.rows() > 0 {
            q_m = q_m.min(1.0);
        }
        Ok(Self {
            m_k,
            big_m_k,
            l_k,
            rho: l_k / m_k,
            q_m,
            k_norm,
            skew_dominates: l_k > m_k,
        })
    }
}

/// Dense `Φ(k)` with its symmetric/skew split and metric.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    pub phi: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub diagnostics: PreconditionerDiagnostics,
}

pub fn assemble_phi(game: &GameSpec, snapshot: &Snapshot, params: &SolverParams) -> DMatrix<f64> {
    let n = game.dim;
    let np = game.size();
    let m = game.rows();
    let c = snapshot.coupling.to_dense();
    let mut phi = DMatrix::zeros(np + m, np + m);
    let lifted = kron_identity(&snapshot.adjacency, n);
    phi.view_mut((0, 0), (np, np)).copy_from(&lifted);
    for col in 0..np {
        phi[(col, col)] += 1.0 / params.delta[col / n];
    }
    let lambda = DMatrix::from_diagonal(&DVector::from_fn(np, |c, _| params.alpha[c / n]));
    phi.view_mut((0, np), (np, m)).copy_from(&(-(lambda * c.transpose())));
    phi.view_mut((np, 0), (m, np)).copy_from(&c);
    for r in 0..m {
        phi[(np + r, np + r)] = params.beta;
    }
    phi
}

pub fn build_preconditioner(
    game: &GameSpec,
    snapshot: &Snapshot,
    params: &SolverParams,
) -> Result<Preconditioner> {
    if params.delta.len() != game.agents {
        return Err(Error::Shape(format!(
            "{} deltas for {} agents",
            params.delta.len(),
            game.agents
        )));
    }
    let phi = assemble_phi(game, snapshot, params);
    let phit = phi.transpose();
    let u = (&phi + &phit) * 0.5;
    let s = (&phi - &phit) * 0.5;
    let np = game.size();
    let qbar = DVector::from_fn(phi.nrows(), |c, _| if c < np { params.q[c / game.dim] } else { 1.0 });
    let k = DMatrix::from_diagonal(&qbar) * &u;
    let ops = PreconditionerOps::new(snapshot, params, game.dim);
    let diagnostics = PreconditionerDiagnostics::compute(&ops)?;
    Ok(Preconditioner {
        phi,
        u,
        s,
        k,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{self, Example2Network};

    #[test]
    fn constraint_free_phi() {
        let g = scenarios::build_example2(Example2Network::A2).unwrap();
        let snap = g.snapshot(0).unwrap();
        let p = SolverParams::new(&snap, vec![2.0, 4.0], 1.0, 0.1).unwrap();
        let pc = build_preconditioner(&g, &snap, &p).unwrap();
        let a = &snap.adjacency;
        let expect = DMatrix::from_row_slice(2, 2, &[0.5 + a[(0, 0)], a[(0, 1)], a[(1, 0)], 0.25 + a[(1, 1)]]);
        assert_eq!(pc.phi, expect);
        assert_eq!(pc.s, (a - a.transpose()) * 0.5);
        // exact symmetry and skewness; the sum is only exact to rounding
        assert_eq!(pc.s.transpose(), -&pc.s);
        assert_eq!(pc.u.transpose(), pc.u);
        let diff = (&pc.u + &pc.s - &pc.phi).abs().max();
        assert!(diff <= f64::EPSILON);
    }

    #[test]
    fn symmetric_phi_has_no_skew() {
        let g = scenarios::build_example2(Example2Network::A1).unwrap();
        let snap = g.snapshot(0).unwrap();
        let p = SolverParams::new(&snap, vec![1.0, 1.0], 1.0, 0.5).unwrap();
        let pc = build_preconditioner(&g, &snap, &p).unwrap();
        assert!(pc.s.iter().all(|&v| v == 0.0));
        assert_eq!(pc.diagnostics.l_k, 0.0);
    }

    #[test]
    fn structured_ops_match_dense() {
        let g = scenarios::random_instance(&scenarios::RandomInstanceConfig { seed: 3, ..Default::default() }).unwrap();
        let snap = g.snapshot(2).unwrap();
        let p = suggest_params(&g, &snap, 0.1).unwrap();
        let pc = build_preconditioner(&g, &snap, &p).unwrap();
        let ops = PreconditionerOps::new(&snap, &p, g.dim);
        let v: Vec<f64> = (0..ops.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        for (dense, part) in [(&pc.u, ops.u()), (&pc.s, ops.s()), (&pc.k, ops.k())] {
            let mut y = vec![0.0; v.len()];
            let mut yt = vec![0.0; v.len()];
            part.apply(&v, &mut y);
            part.apply_transpose(&v, &mut yt);
            let d = dense * DVector::from_column_slice(&v);
            let dt = dense.transpose() * DVector::from_column_slice(&v);
            for i in 0..v.len() {
                assert!((y[i] - d[i]).abs() < 1e-12);
                assert!((yt[i] - dt[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_coupling_bounds_degenerate() {
        // C = 0 keeps (a) and (c) at their constraint-free form
        let g = scenarios::build_example2(Example2Network::A1).unwrap();
        let snap = g.snapshot(0).unwrap();
        let p = SolverParams::new(&snap, vec![1.0, 1.0], 1e-6, 0.01).unwrap();
        let r = check_bounds(&g, &snap, &p).unwrap();
        assert!(r.rows[0].pass && r.rows[2].pass);
        assert_eq!(r.rows[0].rhs, r.norms.adjacency_offdiag);
        assert_eq!(r.rows[2].rhs, 0.0);
    }

    #[test]
    fn gamma_at_coupling_cap_fails_d() {
        let g = scenarios::random_instance(&scenarios::RandomInstanceConfig { seed: 9, ..Default::default() }).unwrap();
        let snap = g.snapshot(0).unwrap();
        let mut p = suggest_params(&g, &snap, 0.1).unwrap();
        let norms = BoundNorms::compute(&g, &snap).unwrap();
        assert!(norms.coupling > 0.0);
        p.gamma = 1.0 / norms.coupling;
        let r = check_bounds_with(&snap, &p, &norms);
        assert!(!r.rows[3].pass);
    }

    #[test]
    fn margin_outside_unit_interval() {
        let g = scenarios::build_example2(Example2Network::A1).unwrap();
        let snap = g.snapshot(0).unwrap();
        assert!(suggest_params(&g, &snap, 0.0).is_err());
        assert!(suggest_params(&g, &snap, 1.0).is_err());
    }

    #[test]
    fn report_prints_four_rows() {
        let g = scenarios::build_example2(Example2Network::A1).unwrap();
        let snap = g.snapshot(0).unwrap();
        let p = suggest_params(&g, &snap, 0.1).unwrap();
        let text = check_bounds(&g, &snap, &p).unwrap().to_string();
        assert_eq!(text.lines().filter(|l| l.contains(" ok")).count(), 4);
    }
}
