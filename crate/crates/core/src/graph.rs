//! Communication digraphs: validation, Perron–Frobenius weights, random
//! generators and the block-triangular split of the lifted adjacency.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::kron_identity;

/// Outcome of [`validate_adjacency`]. Every clause is reported separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacencyReport {
    pub square: bool,
    pub nonnegative: bool,
    pub max_row_sum_error: f64,
    pub rows_stochastic: bool,
    pub min_diagonal: f64,
    pub diagonal_floor: bool,
    pub components: usize,
    pub strongly_connected: bool,
}

impl AdjacencyReport {
    pub fn ok(&self) -> bool {
        self.square
            && self.nonnegative
            && self.rows_stochastic
            && self.diagonal_floor
            && self.strongly_connected
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.square {
            out.push("square");
        }
        if !self.nonnegative {
            out.push("nonnegativity");
        }
        if !self.rows_stochastic {
            out.push("row sums");
        }
        if !self.diagonal_floor {
            out.push("diagonal floor");
        }
        if !self.strongly_connected {
            out.push("strong connectivity");
        }
        out
    }
}

/// Number of strongly connected components of the nonzero pattern of `a`.
pub fn scc_count(a: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..a.ncols().min(n) {
            if i != j && a[(i, j)] != 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&g).len()
}

pub fn validate_adjacency(a: &DMatrix<f64>, a_min: f64, tol: f64) -> AdjacencyReport {
    let square = a.is_square();
    let nonnegative = a.iter().all(|&v| v >= 0.0 && v.is_finite());
    let max_row_sum_error = a
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let min_diagonal = if square {
        a.diagonal().iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    let components = if square { scc_count(a) } else { 0 };
    AdjacencyReport {
        square,
        nonnegative,
        max_row_sum_error,
        rows_stochastic: max_row_sum_error <= tol,
        min_diagonal,
        diagonal_floor: square && min_diagonal > 0.0 && min_diagonal >= a_min - tol,
        components,
        strongly_connected: square && components == 1,
    }
}

/// Left Perron–Frobenius eigenvector, normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PfVector {
    pub q: DVector<f64>,
    pub residual: f64,
}

impl PfVector {
    pub fn min(&self) -> f64 {
        self.q.min()
    }
}

/// `‖qᵀA − qᵀ‖_∞`
pub fn left_eigen_residual(a: &DMatrix<f64>, q: &DVector<f64>) -> f64 {
    let qa = a.tr_mul(q);
    (qa - q).amax()
}

/// Power iteration on `Aᵀ` with unit-sum normalization every sweep.
pub fn left_pf_eigenvector(a: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<PfVector> {
    let n = a.nrows();
    if !a.is_square() || n == 0 {
        return Err(Error::Shape(format!("adjacency is {}x{}", a.nrows(), a.ncols())));
    }
    let mut q = DVector::from_element(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = a.tr_mul(&q);
        let s = next.sum();
        next /= s;
        residual = left_eigen_residual(a, &next);
        q = next;
        if residual <= tol {
            return Ok(PfVector { q, residual });
        }
    }
    Err(Error::IterationLimit {
        what: "left Perron-Frobenius eigenvector",
        iters: max_iter,
        residual,
    })
}

pub const PF_TOL: f64 = 1e-13;
pub const PF_MAX_ITER: usize = 1_000_000;

/// Strict upper, diagonal and strict lower block parts of `A ⊗ I_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSplit {
    pub upper: DMatrix<f64>,
    pub diag: DMatrix<f64>,
    pub lower: DMatrix<f64>,
}

pub fn triangular_parts(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let upper = DMatrix::from_fn(n, n, |i, j| if j > i { a[(i, j)] } else { 0.0 });
    let diag = DMatrix::from_fn(n, n, |i, j| if j == i { a[(i, j)] } else { 0.0 });
    let lower = DMatrix::from_fn(n, n, |i, j| if j < i { a[(i, j)] } else { 0.0 });
    (upper, diag, lower)
}

pub fn decompose_lifted(a: &DMatrix<f64>, n: usize) -> LiftedSplit {
    let (u, d, l) = triangular_parts(a);
    LiftedSplit {
        upper: kron_identity(&u, n),
        diag: kron_identity(&d, n),
        lower: kron_identity(&l, n),
    }
}

/// Small-world generator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallWorld {
    pub agents: usize,
    /// half the ring-lattice out-degree
    pub neighbors: usize,
    pub rewire: f64,
    pub a_min: f64,
}

impl SmallWorld {
    fn check(&self) -> Result<()> {
        let SmallWorld {
            agents,
            neighbors,
            rewire,
            a_min,
        } = *self;
        if agents < 3 {
            return Err(Error::Generation(format!("need at least 3 agents, got {agents}")));
        }
        if neighbors < 1 || 2 * neighbors >= agents {
            return Err(Error::Generation(format!(
                "neighbor count {neighbors} must satisfy 1 <= m < N/2 (N = {agents})"
            )));
        }
        if !(0.0..=1.0).contains(&rewire) {
            return Err(Error::Generation(format!("rewiring probability {rewire} outside [0, 1]")));
        }
        if !(a_min > 0.0 && a_min < 1.0) {
            return Err(Error::Generation(format!("self-loop floor {a_min} outside (0, 1)")));
        }
        Ok(())
    }
}

pub const SMALL_WORLD_ATTEMPTS: usize = 10_000;

pub fn generate_small_world(
    agents: usize,
    neighbors: usize,
    rewire: f64,
    a_min: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    small_world_with_rng(
        &SmallWorld {
            agents,
            neighbors,
            rewire,
            a_min,
        },
        &mut rng,
    )
}

/// Ring lattice of out-degree `2m`, each edge rewired with probability `p`,
/// then row-stochastic weights with a self-loop of at least `a_min`. Draws
/// again from the same stream until the digraph is strongly connected.
pub fn small_world_with_rng<R: Rng>(cfg: &SmallWorld, rng: &mut R) -> Result<DMatrix<f64>> {
    cfg.check()?;
    let n = cfg.agents;
    for _ in 0..SMALL_WORLD_ATTEMPTS {
        let mut out: Vec<Vec<usize>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut targets: Vec<usize> = (1..=cfg.neighbors)
                .flat_map(|d| [(i + d) % n, (i + n - d) % n])
                .collect();
            for slot in 0..targets.len() {
                if rng.random::<f64>() < cfg.rewire {
                    let free: Vec<usize> = (0..n)
                        .filter(|&j| j != i && !targets.contains(&j))
                        .collect();
                    if let Some(&j) = free.choose(rng) {
                        targets[slot] = j;
                    }
                }
            }
            targets.sort_unstable();
            out.push(targets);
        }
        let mut a = DMatrix::zeros(n, n);
        for (i, targets) in out.iter().enumerate() {
            let deg = targets.len() as f64;
            let w_self = cfg.a_min.max(1.0 / (deg + 1.0));
            a[(i, i)] = w_self;
            for &j in targets {
                a[(i, j)] = (1.0 - w_self) / deg;
            }
            let s = a.row(i).sum();
            for j in 0..n {
                a[(i, j)] /= s;
            }
        }
        if scc_count(&a) == 1 {
            return Ok(a);
        }
    }
    Err(Error::Generation(format!(
        "no strongly connected draw after {SMALL_WORLD_ATTEMPTS} attempts"
    )))
}

/// Alternating row/column normalization.
pub fn sinkhorn(w: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<DMatrix<f64>> {
    let mut a = w.clone();
    let n = a.nrows();
    let mut err = f64::INFINITY;
    for _ in 0..max_iter {
        for j in 0..n {
            let s = a.column(j).sum();
            a.column_mut(j).iter_mut().for_each(|v| *v /= s);
        }
        for i in 0..n {
            let s = a.row(i).sum();
            a.row_mut(i).iter_mut().for_each(|v| *v /= s);
        }
        err = a
            .column_iter()
            .map(|c| (c.sum() - 1.0).abs())
            .fold(0.0, f64::max);
        if err <= tol {
            return Ok(a);
        }
    }
    Err(Error::IterationLimit {
        what: "Sinkhorn balancing",
        iters: max_iter,
        residual: err,
    })
}

/// Doubly stochastic, strongly connected, with diagonal at least `a_min`.
///
/// For `N >= 3` a small-world draw is symmetrized and Sinkhorn balanced;
/// two agents get `[[a, 1−a], [1−a, a]]` with `a` uniform in `[a_min, 1 − a_min]`.
pub fn doubly_stochastic_with_rng<R: Rng>(cfg: &SmallWorld, rng: &mut R) -> Result<DMatrix<f64>> {
    if cfg.agents == 2 {
        if !(cfg.a_min > 0.0 && cfg.a_min < 0.5) {
            return Err(Error::Generation(format!(
                "two-agent floor {} outside (0, 0.5)",
                cfg.a_min
            )));
        }
        let a = rng.random_range(cfg.a_min..=1.0 - cfg.a_min);
        return Ok(DMatrix::from_row_slice(2, 2, &[a, 1.0 - a, 1.0 - a, a]));
    }
    let base = small_world_with_rng(cfg, rng)?;
    let sym = (&base + base.transpose()) * 0.5;
    let mut a = sinkhorn(&sym, 1e-14, 100_000)?;
    let lift = (0..cfg.agents)
        .map(|i| {
            let d = a[(i, i)];
            if d < cfg.a_min {
                (cfg.a_min - d) / (1.0 - d)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    if lift > 0.0 {
        a *= 1.0 - lift;
        for i in 0..cfg.agents {
            a[(i, i)] += lift;
        }
    }
    Ok(a)
}

pub fn complete_laplacian(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { n as f64 - 1.0 } else { -1.0 })
}

/// Laplacian of the undirected graph with edges `pairs`.
pub fn laplacian_from_pairs(n: usize, pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for &(i, j) in pairs {
        if i == j || l[(i, j)] != 0.0 {
            continue;
        }
        l[(i, j)] = -1.0;
        l[(j, i)] = -1.0;
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
    }
    l
}
