//! Static description of a network game: local boxes and costs, the
//! time-varying coupling constraints `C(k) x ≤ c(k)` and the time-varying
//! communication digraph `A(k)`.
//!
//! Strategy profiles are stacked agent-major: `x = col(x_1, …, x_N)` with
//! each block of length `n`.

use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{
    complete_laplacian, doubly_stochastic_with_rng, laplacian_from_pairs, left_pf_eigenvector,
    small_world_with_rng, validate_adjacency, PfVector, SmallWorld, PF_MAX_ITER, PF_TOL,
};
use crate::linalg::{CsrMatrix, LinearOperator};
use crate::schedule::Schedule;

/// Tolerance on row sums and on `Σα = 1`.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Shape(format!(
                "box bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().chain(&hi).any(|v| v.is_nan()) {
            return Err(Error::InvalidGame("NaN box bound".into()));
        }
        if let Some(i) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
            return Err(Error::InvalidGame(format!(
                "box coordinate {i} has lo {} > hi {}",
                lo[i], hi[i]
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim]).expect("lo <= hi")
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::uniform(dim, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_compact(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol)
    }
}

/// Local cost `f_i`; the full local term adds the box indicator.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalCost {
    Zero,
    /// `(w/2)‖y − r‖²`
    Quadratic { target: Vec<f64>, weight: f64 },
}

impl LocalCost {
    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            LocalCost::Zero => 0.0,
            LocalCost::Quadratic { target, weight } => {
                0.5 * weight
                    * y.iter()
                        .zip(target)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
            }
        }
    }
}

pub type ConstraintFn = dyn Fn(usize) -> (CsrMatrix, DVector<f64>) + Send + Sync;

/// How `C(k)` and `c(k)` are produced.
#[derive(Clone)]
pub enum ConstraintMode {
    Static {
        matrix: Arc<CsrMatrix>,
        rhs: DVector<f64>,
    },
    /// Fixed matrix, `c(k) = offset + s(k)·direction`.
    Scheduled {
        matrix: Arc<CsrMatrix>,
        offset: DVector<f64>,
        direction: DVector<f64>,
        schedule: Schedule,
    },
    /// Arbitrary `k ↦ (C(k), c(k))`; in-process only.
    Custom(Arc<ConstraintFn>),
}

impl fmt::Debug for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintMode::Static { matrix, rhs } => f
                .debug_struct("Static")
                .field("rows", &matrix.rows())
                .field("rhs", rhs)
                .finish(),
            ConstraintMode::Scheduled { matrix, schedule, .. } => f
                .debug_struct("Scheduled")
                .field("rows", &matrix.rows())
                .field("schedule", schedule)
                .finish(),
            ConstraintMode::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintProvider {
    rows: usize,
    cols: usize,
    mode: ConstraintMode,
    gram: Arc<Mutex<Option<Arc<DMatrix<f64>>>>>,
}

impl ConstraintProvider {
    pub fn none(cols: usize) -> Self {
        Self::new_static(CsrMatrix::zeros(0, cols), DVector::zeros(0)).expect("empty system")
    }

    pub fn new_static(matrix: CsrMatrix, rhs: DVector<f64>) -> Result<Self> {
        if rhs.len() != matrix.rows() {
            return Err(Error::Shape(format!(
                "constraint rhs has length {}, matrix has {} rows",
                rhs.len(),
                matrix.rows()
            )));
        }
        Ok(Self {
            rows: matrix.rows(),
            cols: matrix.cols(),
            mode: ConstraintMode::Static {
                matrix: Arc::new(matrix),
                rhs,
            },
            gram: Default::default(),
        })
    }

    pub fn new_scheduled(
        matrix: CsrMatrix,
        offset: DVector<f64>,
        direction: DVector<f64>,
        schedule: Schedule,
    ) -> Result<Self> {
        if offset.len() != matrix.rows() || direction.len() != matrix.rows() {
            return Err(Error::Shape(format!(
                "offset/direction lengths {}/{} for {} rows",
                offset.len(),
                direction.len(),
                matrix.rows()
            )));
        }
        schedule.validate()?;
        Ok(Self {
            rows: matrix.rows(),
            cols: matrix.cols(),
            mode: ConstraintMode::Scheduled {
                matrix: Arc::new(matrix),
                offset,
                direction,
                schedule,
            },
            gram: Default::default(),
        })
    }

    pub fn new_custom(rows: usize, cols: usize, f: Arc<ConstraintFn>) -> Self {
        Self {
            rows,
            cols,
            mode: ConstraintMode::Custom(f),
            gram: Default::default(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mode(&self) -> &ConstraintMode {
        &self.mode
    }

    pub fn at(&self, k: usize) -> Result<(Arc<CsrMatrix>, DVector<f64>)> {
        let (m, c) = match &self.mode {
            ConstraintMode::Static { matrix, rhs } => (matrix.clone(), rhs.clone()),
            ConstraintMode::Scheduled {
                matrix,
                offset,
                direction,
                schedule,
            } => (matrix.clone(), offset + direction * schedule.value(k)),
            ConstraintMode::Custom(f) => {
                let (m, c) = f(k);
                (Arc::new(m), c)
            }
        };
        if m.rows() != self.rows || m.cols() != self.cols || c.len() != self.rows {
            return Err(Error::Shape(format!(
                "constraints at k = {k} are {}x{} with rhs {}, expected {}x{}",
                m.rows(),
                m.cols(),
                c.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((m, c))
    }

    /// `C(k)ᵀ C(k)`, cached when the matrix does not depend on `k`.
    pub fn gram_at(&self, k: usize) -> Result<Arc<DMatrix<f64>>> {
        if let ConstraintMode::Custom(_) = self.mode {
            return Ok(Arc::new(self.at(k)?.0.gram()));
        }
        let mut slot = self.gram.lock().expect("gram cache poisoned");
        if let Some(g) = slot.as_ref() {
            return Ok(g.clone());
        }
        let g = Arc::new(self.at(k)?.0.gram());
        *slot = Some(g.clone());
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkMode {
    Static(DMatrix<f64>),
    /// `A(k) = matrices[(k / period) mod len]`
    Cycle {
        matrices: Vec<DMatrix<f64>>,
        period: usize,
    },
    /// Fresh small-world digraph at every `k`, drawn from stream `k` of `seed`.
    RandomSmallWorld {
        seed: u64,
        rewire: f64,
        neighbors: usize,
        a_min: f64,
    },
    /// Like `RandomSmallWorld` but symmetrized and balanced to be doubly stochastic.
    RandomDoublyStochastic {
        seed: u64,
        rewire: f64,
        neighbors: usize,
        a_min: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkProvider {
    agents: usize,
    a_min: f64,
    mode: NetworkMode,
}

impl NetworkProvider {
    /// Validates every stored matrix (or the `k = 0` draw for random modes).
    pub fn new(agents: usize, a_min: f64, mode: NetworkMode) -> Result<Self> {
        let p = Self {
            agents,
            a_min,
            mode,
        };
        match &p.mode {
            NetworkMode::Static(a) => p.check(a, 0)?,
            NetworkMode::Cycle { matrices, period } => {
                if matrices.is_empty() || *period == 0 {
                    return Err(Error::InvalidGame(
                        "cycle needs at least one matrix and a positive period".into(),
                    ));
                }
                for (i, a) in matrices.iter().enumerate() {
                    p.check(a, i * period)?;
                }
            }
            NetworkMode::RandomSmallWorld { .. } | NetworkMode::RandomDoublyStochastic { .. } => {
                let a = p.at(0)?;
                p.check(&a, 0)?;
            }
        }
        Ok(p)
    }

    pub fn fixed(a: DMatrix<f64>, a_min: f64) -> Result<Self> {
        let n = a.nrows();
        Self::new(n, a_min, NetworkMode::Static(a))
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn a_min(&self) -> f64 {
        self.a_min
    }

    pub fn mode(&self) -> &NetworkMode {
        &self.mode
    }

    fn check(&self, a: &DMatrix<f64>, k: usize) -> Result<()> {
        if a.nrows() != self.agents || a.ncols() != self.agents {
            return Err(Error::InvalidAdjacency {
                k,
                reason: format!(
                    "{}x{} matrix for {} agents",
                    a.nrows(),
                    a.ncols(),
                    self.agents
                ),
            });
        }
        let r = validate_adjacency(a, self.a_min, STOCHASTIC_TOL);
        if !r.ok() {
            return Err(Error::InvalidAdjacency {
                k,
                reason: format!("failed {}", r.failures().join(", ")),
            });
        }
        Ok(())
    }

    pub fn at(&self, k: usize) -> Result<DMatrix<f64>> {
        match &self.mode {
            NetworkMode::Static(a) => Ok(a.clone()),
            NetworkMode::Cycle { matrices, period } => {
                Ok(matrices[(k / period) % matrices.len()].clone())
            }
            NetworkMode::RandomSmallWorld {
                seed,
                rewire,
                neighbors,
                a_min,
            } => {
                let mut rng = stream_rng(*seed, k);
                small_world_with_rng(
                    &SmallWorld {
                        agents: self.agents,
                        neighbors: *neighbors,
                        rewire: *rewire,
                        a_min: *a_min,
                    },
                    &mut rng,
                )
            }
            NetworkMode::RandomDoublyStochastic {
                seed,
                rewire,
                neighbors,
                a_min,
            } => {
                let mut rng = stream_rng(*seed, k);
                doubly_stochastic_with_rng(
                    &SmallWorld {
                        agents: self.agents,
                        neighbors: *neighbors,
                        rewire: *rewire,
                        a_min: *a_min,
                    },
                    &mut rng,
                )
            }
        }
    }
}

fn stream_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaRule {
    /// `α(k) = q(k)`, the left Perron–Frobenius vector of `A(k)`.
    PfEigenvector,
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct GameSpec {
    pub agents: usize,
    pub dim: usize,
    pub boxes: Vec<BoxSet>,
    pub costs: Vec<LocalCost>,
    pub constraints: ConstraintProvider,
    pub network: NetworkProvider,
    pub alpha_rule: AlphaRule,
}

/// Everything the iteration needs at one time index.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub k: usize,
    pub adjacency: DMatrix<f64>,
    pub pf: PfVector,
    pub alpha: DVector<f64>,
    pub coupling: Arc<CsrMatrix>,
    pub rhs: DVector<f64>,
}

impl Snapshot {
    pub fn agents(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.pf.q
    }

    /// `(A(k) ⊗ I_n) x`
    pub fn mix(&self, x: &[f64], dim: usize) -> Vec<f64> {
        lifted_apply(&self.adjacency, x, dim)
    }

    pub fn coupling_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.coupling.rows()];
        self.coupling.apply(x, &mut y);
        y
    }

    pub fn coupling_apply_transpose(&self, s: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.coupling.cols()];
        self.coupling.apply_transpose(s, &mut y);
        y
    }
}

/// `(B ⊗ I_n) x` without forming the Kronecker product.
pub fn lifted_apply(b: &DMatrix<f64>, x: &[f64], dim: usize) -> Vec<f64> {
    let n = b.nrows();
    let mut y = vec![0.0; b.nrows() * dim];
    for i in 0..n {
        let yi = &mut y[i * dim..(i + 1) * dim];
        for j in 0..b.ncols() {
            let w = b[(i, j)];
            if w == 0.0 {
                continue;
            }
            for (yv, xv) in yi.iter_mut().zip(&x[j * dim..(j + 1) * dim]) {
                *yv += w * xv;
            }
        }
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityCheck {
    pub in_box: bool,
    pub max_violation: f64,
}

/// Halfspace system `matrix · y ≤ rhs` in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspaces {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

impl GameSpec {
    pub fn new(
        boxes: Vec<BoxSet>,
        costs: Vec<LocalCost>,
        constraints: ConstraintProvider,
        network: NetworkProvider,
        alpha_rule: AlphaRule,
    ) -> Result<Self> {
        let agents = boxes.len();
        if agents == 0 {
            return Err(Error::InvalidGame("a game needs at least one agent".into()));
        }
        let dim = boxes[0].dim();
        if dim == 0 {
            return Err(Error::InvalidGame("strategy dimension must be positive".into()));
        }
        if let Some(i) = boxes.iter().position(|b| b.dim() != dim) {
            return Err(Error::Shape(format!("box {i} has dimension {}", boxes[i].dim())));
        }
        if costs.len() != agents {
            return Err(Error::Shape(format!("{} costs for {agents} agents", costs.len())));
        }
        for (i, c) in costs.iter().enumerate() {
            if let LocalCost::Quadratic { target, weight } = c {
                if target.len() != dim {
                    return Err(Error::Shape(format!("cost {i} target has length {}", target.len())));
                }
                if !(*weight >= 0.0 && weight.is_finite()) {
                    return Err(Error::InvalidGame(format!("cost {i} has weight {weight}")));
                }
            }
        }
        if constraints.cols() != agents * dim {
            return Err(Error::Shape(format!(
                "constraint matrix has {} columns, expected {}",
                constraints.cols(),
                agents * dim
            )));
        }
        if network.agents() != agents {
            return Err(Error::Shape(format!(
                "network has {} agents, game has {agents}",
                network.agents()
            )));
        }
        if let AlphaRule::Explicit(a) = &alpha_rule {
            if a.len() != agents {
                return Err(Error::Shape(format!("{} alpha weights for {agents} agents", a.len())));
            }
            if a.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::InvalidGame("explicit alpha weights must be positive".into()));
            }
            let s: f64 = a.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidGame(format!("explicit alpha weights sum to {s}")));
            }
        }
        Ok(Self {
            agents,
            dim,
            boxes,
            costs,
            constraints,
            network,
            alpha_rule,
        })
    }

    /// Strategy-profile length `N·n`.
    pub fn size(&self) -> usize {
        self.agents * self.dim
    }

    pub fn rows(&self) -> usize {
        self.constraints.rows()
    }

    pub fn is_compact(&self) -> bool {
        self.boxes.iter().all(BoxSet::is_compact)
    }

    pub fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[i * self.dim..(i + 1) * self.dim]
    }

    fn check_profile(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.size() {
            return Err(Error::Shape(format!(
                "profile has length {}, expected {}",
                x.len(),
                self.size()
            )));
        }
        Ok(())
    }

    pub fn snapshot(&self, k: usize) -> Result<Snapshot> {
        let adjacency = self.network.at(k)?;
        let pf = left_pf_eigenvector(&adjacency, PF_TOL, PF_MAX_ITER)?;
        let alpha = match &self.alpha_rule {
            AlphaRule::PfEigenvector => pf.q.clone(),
            AlphaRule::Uniform => DVector::from_element(self.agents, 1.0 / self.agents as f64),
            AlphaRule::Explicit(a) => DVector::from_column_slice(a),
        };
        let (coupling, rhs) = self.constraints.at(k)?;
        Ok(Snapshot {
            k,
            adjacency,
            pf,
            alpha,
            coupling,
            rhs,
        })
    }

    /// Box membership within `tol` and `max(0, max_row (C(k)x − c(k)))`.
    pub fn collective_feasible_check(&self, x: &[f64], k: usize, tol: f64) -> Result<FeasibilityCheck> {
        self.check_profile(x)?;
        let in_box = (0..self.agents).all(|i| self.boxes[i].contains(self.block(x, i), tol));
        let (c, rhs) = self.constraints.at(k)?;
        let mut cx = vec![0.0; c.rows()];
        c.apply(x, &mut cx);
        let max_violation = cx
            .iter()
            .zip(rhs.iter())
            .map(|(a, b)| a - b)
            .fold(0.0, f64::max);
        Ok(FeasibilityCheck {
            in_box,
            max_violation,
        })
    }

    /// Halfspaces describing `X_i(x_{−i}, k)`: `C_i(k) y ≤ c(k) − Σ_{j≠i} C_j(k) x_j`.
    /// `others` stacks the other agents' strategies in agent order.
    pub fn local_feasible_set(&self, i: usize, others: &[f64], k: usize) -> Result<Halfspaces> {
        if i >= self.agents {
            return Err(Error::Shape(format!("agent {i} out of range {}", self.agents)));
        }
        let n = self.dim;
        if others.len() != (self.agents - 1) * n {
            return Err(Error::Shape(format!(
                "others has length {}, expected {}",
                others.len(),
                (self.agents - 1) * n
            )));
        }
        let (c, rhs) = self.constraints.at(k)?;
        let mut matrix = DMatrix::zeros(c.rows(), n);
        let mut rhs = rhs;
        for r in 0..c.rows() {
            for (col, v) in c.row(r) {
                let j = col / n;
                let d = col % n;
                if j == i {
                    matrix[(r, d)] = v;
                } else {
                    let slot = if j < i { j } else { j - 1 };
                    rhs[r] -= v * others[slot * n + d];
                }
            }
        }
        Ok(Halfspaces { matrix, rhs })
    }

    /// Agent pairs sharing at least one coupling row of `C(0)`.
    pub fn multiplier_pairs(&self) -> Result<Vec<(usize, usize)>> {
        let (c, _) = self.constraints.at(0)?;
        let mut pairs = Vec::new();
        for r in 0..c.rows() {
            let mut agents: Vec<usize> = c.row(r).map(|(col, _)| col / self.dim).collect();
            agents.dedup();
            for a in 0..agents.len() {
                for b in a + 1..agents.len() {
                    let p = (agents[a].min(agents[b]), agents[a].max(agents[b]));
                    if !pairs.contains(&p) {
                        pairs.push(p);
                    }
                }
            }
        }
        Ok(pairs)
    }

    /// Laplacian of the multiplier graph; the complete graph when no two
    /// agents share a constraint row.
    pub fn multiplier_laplacian(&self) -> Result<DMatrix<f64>> {
        let pairs = self.multiplier_pairs()?;
        if pairs.is_empty() {
            Ok(complete_laplacian(self.agents))
        } else {
            Ok(laplacian_from_pairs(self.agents, &pairs))
        }
    }

    /// Euclidean projection of `x` onto the product of boxes.
    pub fn project_boxes(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for i in 0..self.agents {
            let b = &self.boxes[i];
            for d in 0..self.dim {
                let v = &mut out[i * self.dim + d];
                *v = v.clamp(b.lo[d], b.hi[d]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn example3_point_is_feasible() {
        let s = scenarios::build_example3(
            Schedule::Const { value: -0.25 },
            1,
        )
        .unwrap();
        let r = s.collective_feasible_check(&[1.0, 1.0], 3, 1e-12).unwrap();
        assert!(r.in_box);
        assert_eq!(r.max_violation, 0.0);
    }

    #[test]
    fn zero_constraints_box_corner() {
        let g = GameSpec::new(
            vec![BoxSet::uniform(2, -1.0, 1.0); 2],
            vec![LocalCost::Zero; 2],
            ConstraintProvider::new_static(CsrMatrix::zeros(3, 4), DVector::zeros(3)).unwrap(),
            NetworkProvider::fixed(DMatrix::from_element(2, 2, 0.5), 0.1).unwrap(),
            AlphaRule::PfEigenvector,
        )
        .unwrap();
        let r = g.collective_feasible_check(&[1.0, -1.0, -1.0, 1.0], 0, 0.0).unwrap();
        assert!(r.in_box);
        assert_eq!(r.max_violation, 0.0);
        assert!(g.collective_feasible_check(&[1.0], 0, 0.0).is_err());
    }

    #[test]
    fn example1_local_set_is_a_point() {
        let (g, _) = scenarios::build_example1().unwrap();
        let h = g.local_feasible_set(0, &[1.0], 0).unwrap();
        assert_eq!(h.matrix, DMatrix::from_row_slice(2, 1, &[1.0, -1.0]));
        assert_eq!(h.rhs, DVector::from_vec(vec![-1.0, 1.0]));
    }

    #[test]
    fn no_coupling_gives_empty_system() {
        let g = scenarios::build_example2(scenarios::Example2Network::A1).unwrap();
        let h = g.local_feasible_set(1, &[0.3], 0).unwrap();
        assert_eq!(h.matrix.nrows(), 0);
        assert_eq!(h.rhs.len(), 0);
    }

    #[test]
    fn explicit_alpha_must_sum_to_one() {
        let mk = |alpha: Vec<f64>| {
            GameSpec::new(
                vec![BoxSet::uniform(1, -1.0, 1.0); 2],
                vec![LocalCost::Zero; 2],
                ConstraintProvider::none(2),
                NetworkProvider::fixed(DMatrix::from_element(2, 2, 0.5), 0.1).unwrap(),
                AlphaRule::Explicit(alpha),
            )
        };
        assert!(mk(vec![0.5, 0.5]).is_ok());
        assert!(mk(vec![0.5, 0.6]).is_err());
        assert!(mk(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn inverted_box_rejected() {
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn bad_network_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.5, 0.5]);
        assert!(NetworkProvider::fixed(a, 0.1).is_err());
        assert!(NetworkProvider::fixed(DMatrix::identity(2, 2), 0.1).is_err());
    }

    #[test]
    fn static_constraints_are_bitwise_stable() {
        let g = scenarios::build_example1().unwrap().0;
        let (c0, r0) = g.constraints.at(0).unwrap();
        for k in [1usize, 17, 10_000] {
            let (c, r) = g.constraints.at(k).unwrap();
            assert_eq!(*c, *c0);
            assert_eq!(r, r0);
        }
    }

    #[test]
    fn random_network_is_pure_in_k() {
        let g = scenarios::build_constrained_consensus(&scenarios::ConsensusConfig::default()).unwrap();
        let a = g.network.at(42).unwrap();
        let _ = g.network.at(7).unwrap();
        assert_eq!(a, g.network.at(42).unwrap());
        assert_ne!(a, g.network.at(43).unwrap());
    }
}
