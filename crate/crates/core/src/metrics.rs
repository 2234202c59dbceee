//! Residuals, traces and equilibrium certification.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{lifted_apply, GameSpec};
use crate::linalg::norm2;
use crate::prox::group_prox;
use crate::solver::IterateState;

pub const CSV_HEADER: &str = "k,fp_residual,consensus_residual,max_violation,sigma_norm,gamma,bounds_ok";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub fp_residual: f64,
    pub consensus_residual: f64,
    pub max_violation: f64,
    pub sigma_norm: f64,
    pub gamma: f64,
    pub bounds_ok: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub final_state: IterateState,
    /// Number of updates applied; the last row has this `k`.
    pub iters_used: usize,
    pub converged: bool,
    /// First time index with a nonfinite iterate.
    pub diverged_at: Option<usize>,
    /// `‖ϖ − W_Φϖ‖` per update, when monitoring.
    pub w_residuals: Vec<f64>,
    /// `‖K(k)‖` per update, when monitoring.
    pub k_norms: Vec<f64>,
    /// Worst inclusion violation seen, when monitoring.
    pub max_inclusion_violation: f64,
    /// `(x, σ)` per row, when requested.
    pub states: Vec<(Vec<f64>, Vec<f64>)>,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.k, r.fp_residual, r.consensus_residual, r.max_violation, r.sigma_norm, r.gamma, r.bounds_ok
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// `‖(L ⊗ I_n) x‖`.
pub fn consensus_residual(x: &[f64], laplacian: &DMatrix<f64>, dim: usize) -> Result<f64> {
    if laplacian.nrows() != laplacian.ncols() || laplacian.nrows() * dim != x.len() {
        return Err(Error::Shape(format!(
            "{}x{} Laplacian for a profile of length {} (dimension {dim})",
            laplacian.nrows(),
            laplacian.ncols(),
            x.len()
        )));
    }
    Ok(norm2(&lifted_apply(laplacian, x, dim)))
}

/// `max(0, max_row (C(k)x − c(k)))`.
pub fn constraint_violation(x: &[f64], k: usize, game: &GameSpec) -> Result<f64> {
    Ok(game.collective_feasible_check(x, k, 0.0)?.max_violation)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateEntry {
    pub k: usize,
    /// `‖x − prox(A(k)x − ΛCᵀσ)‖_∞`
    pub primal_gap: f64,
    /// `‖σ − max(σ + C(k)x − c(k), 0)‖_∞`
    pub dual_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub certified: bool,
    pub entries: Vec<CertificateEntry>,
}

impl Certificate {
    pub fn worst_gap(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.primal_gap.max(e.dual_gap))
            .fold(0.0, f64::max)
    }
}

fn inf_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Checks the fixed-point form of the persistent normalized equilibrium
/// conditions at each time index of `window`.
pub fn certify_pn_enwe(x: &[f64], sigma: &[f64], game: &GameSpec, window: &[usize], tol: f64) -> Result<Certificate> {
    if window.is_empty() {
        return Err(Error::InvalidGame("certification window is empty".into()));
    }
    if x.len() != game.size() || sigma.len() != game.rows() {
        return Err(Error::Shape(format!(
            "pair has lengths {}/{}, game needs {}/{}",
            x.len(),
            sigma.len(),
            game.size(),
            game.rows()
        )));
    }
    let n = game.dim;
    let ones = vec![1.0; game.agents];
    let mut entries = Vec::with_capacity(window.len());
    for &k in window {
        let snap = game.snapshot(k)?;
        let ax = snap.mix(x, n);
        let cts = snap.coupling_apply_transpose(sigma);
        let v: Vec<f64> = (0..game.size())
            .map(|c| ax[c] - snap.alpha[c / n] * cts[c])
            .collect();
        let px = group_prox(&v, &ones, game)?;
        let cx = snap.coupling_apply(x);
        let ps: Vec<f64> = (0..sigma.len())
            .map(|r| (sigma[r] + cx[r] - snap.rhs[r]).max(0.0))
            .collect();
        entries.push(CertificateEntry {
            k,
            primal_gap: inf_gap(x, &px),
            dual_gap: inf_gap(sigma, &ps),
        });
    }
    let certified = entries.iter().all(|e| e.primal_gap <= tol && e.dual_gap <= tol);
    Ok(Certificate { certified, entries })
}

/// Certification over the last `len` time indices up to and including `k`.
pub fn trailing_window(k: usize, len: usize) -> Vec<usize> {
    (k.saturating_sub(len.saturating_sub(1))..=k).collect()
}
