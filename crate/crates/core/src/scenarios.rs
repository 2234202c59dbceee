//! Builders for the shipped experiments plus random smoke instances.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{
    AlphaRule, BoxSet, ConstraintProvider, GameSpec, LocalCost, NetworkMode, NetworkProvider,
};
use crate::linalg::CsrMatrix;
use crate::schedule::Schedule;
use crate::solver::ClosedFormBr;

/// Self-loop floor used by every shipped network.
pub const DEFAULT_A_MIN: f64 = 0.1;
/// Horizon over which schedule ranges are validated.
pub const SCHEDULE_PROBE: usize = 10_000;

/// Two scalar agents whose coupling `x_1 + x_2 = 0` pins each best response
/// to the negative of the other's strategy.
pub fn build_example1() -> Result<(GameSpec, ClosedFormBr)> {
    let c = CsrMatrix::from_rows(&[vec![1.0, 1.0], vec![-1.0, -1.0]], 2)?;
    let game = GameSpec::new(
        vec![BoxSet::unbounded(1); 2],
        vec![LocalCost::Zero; 2],
        ConstraintProvider::new_static(c, DVector::zeros(2))?,
        NetworkProvider::fixed(DMatrix::from_element(2, 2, 0.5), DEFAULT_A_MIN)?,
        AlphaRule::PfEigenvector,
    )?;
    let br = ClosedFormBr::for_game(&game)?;
    Ok((game, br))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example2Network {
    A1,
    A2,
    /// `A_1` at even `k`, `A_2` at odd `k`
    Alternate,
}

impl FromStr for Example2Network {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A1" | "a1" => Ok(Self::A1),
            "A2" | "a2" => Ok(Self::A2),
            "alt" | "alternate" => Ok(Self::Alternate),
            other => Err(Error::UnknownScenario(format!("example2:{other}"))),
        }
    }
}

impl fmt::Display for Example2Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::A1 => "A1",
            Self::A2 => "A2",
            Self::Alternate => "alt",
        })
    }
}

pub fn example2_a1() -> DMatrix<f64> {
    DMatrix::from_element(2, 2, 0.5)
}

pub fn example2_a2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0])
}

/// Two unconstrained scalar agents with costs `½(x_i − i)²`.
pub fn build_example2(network: Example2Network) -> Result<GameSpec> {
    let mode = match network {
        Example2Network::A1 => NetworkMode::Static(example2_a1()),
        Example2Network::A2 => NetworkMode::Static(example2_a2()),
        Example2Network::Alternate => NetworkMode::Cycle {
            matrices: vec![example2_a1(), example2_a2()],
            period: 1,
        },
    };
    GameSpec::new(
        vec![BoxSet::unbounded(1); 2],
        (1..=2)
            .map(|i| LocalCost::Quadratic {
                target: vec![i as f64],
                weight: 1.0,
            })
            .collect(),
        ConstraintProvider::none(2),
        NetworkProvider::new(2, DEFAULT_A_MIN, mode)?,
        AlphaRule::PfEigenvector,
    )
}

pub fn example3_default_schedule() -> Schedule {
    Schedule::Piecewise {
        knots: vec![(0, -1.0), (50, -0.25)],
    }
}

/// Two agents on `[−1, 1]` with zero cost and `x_1 + x_2 ≥ m(k)` over a
/// random doubly stochastic network.
pub fn build_example3(m_schedule: Schedule, net_seed: u64) -> Result<GameSpec> {
    m_schedule.validate()?;
    let (lo, hi) = m_schedule.range(SCHEDULE_PROBE);
    if lo < -1.0 || hi > -0.25 {
        return Err(Error::Schedule(format!(
            "m(k) ranges over [{lo}, {hi}], outside [-1, -0.25]"
        )));
    }
    if m_schedule.value(SCHEDULE_PROBE) != -0.25 {
        return Err(Error::Schedule("m(k) never reaches -0.25".into()));
    }
    let c = CsrMatrix::from_rows(&[vec![-1.0, -1.0]], 2)?;
    GameSpec::new(
        vec![BoxSet::uniform(1, -1.0, 1.0); 2],
        vec![LocalCost::Zero; 2],
        ConstraintProvider::new_scheduled(
            c,
            DVector::zeros(1),
            DVector::from_element(1, -1.0),
            m_schedule,
        )?,
        NetworkProvider::new(
            2,
            DEFAULT_A_MIN,
            NetworkMode::RandomDoublyStochastic {
                seed: net_seed,
                rewire: 0.0,
                neighbors: 1,
                a_min: DEFAULT_A_MIN,
            },
        )?,
        AlphaRule::PfEigenvector,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusConfig {
    pub agents: usize,
    pub dim: usize,
    /// seed of the per-step network draws
    pub seed: u64,
    /// seed of the box bounds and the initial profile
    pub box_seed: u64,
    pub schedule: Schedule,
    pub neighbors: usize,
    pub rewire: f64,
    pub a_min: f64,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self {
            agents: 15,
            dim: 5,
            seed: 7,
            box_seed: 7,
            schedule: Schedule::Geometric {
                v0: 50.0,
                ratio: 0.995,
                floor: 0.05,
            },
            neighbors: 3,
            rewire: 0.3,
            a_min: DEFAULT_A_MIN,
        }
    }
}

fn box_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // network draws use streams 0, 1, 2, ...; keep the boxes out of their way
    rng.set_stream(u64::MAX);
    rng
}

/// Pairwise rows `x_i − x_j ≤ s(k)` then `x_j − x_i ≤ s(k)` for `i < j`,
/// one pair per coordinate, ordered by `(i, j, coordinate)`.
fn pairwise_rows(agents: usize, dim: usize) -> Result<CsrMatrix> {
    let mut rows = Vec::with_capacity(agents * (agents - 1) * dim);
    for i in 0..agents {
        for j in i + 1..agents {
            for d in 0..dim {
                rows.push(vec![(i * dim + d, 1.0), (j * dim + d, -1.0)]);
                rows.push(vec![(i * dim + d, -1.0), (j * dim + d, 1.0)]);
            }
        }
    }
    CsrMatrix::from_row_entries(agents * dim, &rows)
}

/// Boxes `[m_i, M_i]` with `m_i ~ U[−100, −5]`, `M_i ~ U[5, 100]` per agent.
pub fn consensus_boxes(cfg: &ConsensusConfig) -> Vec<BoxSet> {
    let mut rng = box_rng(cfg.box_seed);
    (0..cfg.agents)
        .map(|_| {
            let lo = rng.random_range(-100.0..=-5.0);
            let hi = rng.random_range(5.0..=100.0);
            BoxSet::uniform(cfg.dim, lo, hi)
        })
        .collect()
}

/// Uniform draw inside the boxes, independent of the bound draws.
pub fn consensus_initial_profile(cfg: &ConsensusConfig, boxes: &[BoxSet]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.box_seed);
    rng.set_stream(u64::MAX - 1);
    boxes
        .iter()
        .flat_map(|b| {
            b.lo.iter()
                .zip(&b.hi)
                .map(|(&l, &h)| rng.random_range(l..=h))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Constrained consensus: box-indicator costs, pairwise rows
/// `|x_i − x_j| ≤ s(k)·1` and a fresh small-world network at every step.
pub fn build_constrained_consensus(cfg: &ConsensusConfig) -> Result<GameSpec> {
    cfg.schedule.validate()?;
    if cfg.agents < 2 {
        return Err(Error::InvalidGame("consensus needs at least two agents".into()));
    }
    let c = pairwise_rows(cfg.agents, cfg.dim)?;
    let m = c.rows();
    GameSpec::new(
        consensus_boxes(cfg),
        vec![LocalCost::Zero; cfg.agents],
        ConstraintProvider::new_scheduled(
            c,
            DVector::zeros(m),
            DVector::from_element(m, 1.0),
            cfg.schedule.clone(),
        )?,
        NetworkProvider::new(
            cfg.agents,
            cfg.a_min,
            NetworkMode::RandomSmallWorld {
                seed: cfg.seed,
                rewire: cfg.rewire,
                neighbors: cfg.neighbors,
                a_min: cfg.a_min,
            },
        )?,
        AlphaRule::PfEigenvector,
    )
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RandomInstanceConfig {
    pub seed: u64,
    /// drawn from `3..=12` when unset
    pub agents: Option<usize>,
    /// drawn from `1..=4` when unset
    pub dim: Option<usize>,
    /// drawn from `0..=30` when unset
    pub rows: Option<usize>,
}

/// Random game with a strictly feasible box point, mixed zero/quadratic
/// costs, dense Gaussian-ish coupling rows and small-world networks.
pub fn random_instance(cfg: &RandomInstanceConfig) -> Result<GameSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let agents = cfg.agents.unwrap_or_else(|| rng.random_range(3..=12));
    let dim = cfg.dim.unwrap_or_else(|| rng.random_range(1..=4));
    let rows = cfg.rows.unwrap_or_else(|| rng.random_range(0..=30));
    let size = agents * dim;
    let mut boxes = Vec::with_capacity(agents);
    let mut costs = Vec::with_capacity(agents);
    for _ in 0..agents {
        let lo: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..-0.5)).collect();
        let hi: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..10.0)).collect();
        boxes.push(BoxSet::new(lo, hi)?);
        costs.push(if rng.random_bool(0.5) {
            LocalCost::Zero
        } else {
            LocalCost::Quadratic {
                target: (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect(),
                weight: rng.random_range(0.1..3.0),
            }
        });
    }
    let mut entries = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut row = Vec::new();
        for c in 0..size {
            if rng.random_bool(0.5) {
                row.push((c, rng.random_range(-3.0..3.0)));
            }
        }
        entries.push(row);
    }
    let c = CsrMatrix::from_row_entries(size, &entries)?;
    // 0 is inside every box, so a positive rhs gives a Slater point
    let rhs = DVector::from_fn(rows, |_, _| rng.random_range(0.1..5.0));
    let network_seed = rng.random::<u64>();
    GameSpec::new(
        boxes,
        costs,
        ConstraintProvider::new_static(c, rhs)?,
        NetworkProvider::new(
            agents,
            0.05,
            NetworkMode::RandomSmallWorld {
                seed: network_seed,
                rewire: 0.3,
                neighbors: 1,
                a_min: 0.05,
            },
        )?,
        AlphaRule::PfEigenvector,
    )
}

/// A named game plus its default starting profile.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub game: GameSpec,
    pub x0: Vec<f64>,
}

pub const SCENARIO_NAMES: [&str; 6] = [
    "example1",
    "example2:A1",
    "example2:A2",
    "example2:alt",
    "example3",
    "consensus15",
];

/// Resolves a scenario name; `seed` replaces the default network/box seed
/// where the scenario has one.
pub fn resolve(name: &str, seed: Option<u64>) -> Result<Scenario> {
    let (game, x0) = match name {
        "example1" => (build_example1()?.0, vec![1.0, 1.0]),
        "example3" => (
            build_example3(example3_default_schedule(), seed.unwrap_or(3))?,
            vec![0.5, -1.0],
        ),
        "consensus15" => {
            let mut cfg = ConsensusConfig::default();
            if let Some(s) = seed {
                cfg.seed = s;
                cfg.box_seed = s;
            }
            let game = build_constrained_consensus(&cfg)?;
            let x0 = consensus_initial_profile(&cfg, &game.boxes);
            (game, x0)
        }
        _ => match name.strip_prefix("example2:") {
            Some(net) => (build_example2(net.parse()?)?, vec![0.0, 0.0]),
            None => return Err(Error::UnknownScenario(name.to_string())),
        },
    };
    Ok(Scenario {
        name: name.to_string(),
        game,
        x0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{validate_adjacency, left_pf_eigenvector, left_eigen_residual};

    #[test]
    fn consensus_row_count() {
        let g = build_constrained_consensus(&ConsensusConfig::default()).unwrap();
        // 2 * C(15, 2) * 5
        assert_eq!(g.rows(), 2 * (15 * 14 / 2) * 5);
        assert_eq!(g.rows(), 1050);
        assert_eq!(g.size(), 75);
    }

    #[test]
    fn consensus_row_order() {
        let c = pairwise_rows(3, 2).unwrap();
        let rows = c.to_rows();
        assert_eq!(rows[0], vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rows[1], vec![-1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rows[2], vec![0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(rows[4], vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0]);
        assert_eq!(rows.len(), 12);
    }

    #[test]
    fn consensus_boxes_in_range_and_slater() {
        let cfg = ConsensusConfig::default();
        let g = build_constrained_consensus(&cfg).unwrap();
        for b in &g.boxes {
            assert!(b.lo.iter().all(|&v| (-100.0..=-5.0).contains(&v)));
            assert!(b.hi.iter().all(|&v| (5.0..=100.0).contains(&v)));
        }
        let zero = vec![0.0; g.size()];
        let (c, rhs) = g.constraints.at(0).unwrap();
        let mut cx = vec![0.0; c.rows()];
        crate::linalg::LinearOperator::apply(&*c, &zero, &mut cx);
        assert!(cx.iter().zip(rhs.iter()).all(|(a, b)| a < b));
        let x0 = consensus_initial_profile(&cfg, &g.boxes);
        assert!((0..g.agents).all(|i| g.boxes[i].contains(g.block(&x0, i), 0.0)));
    }

    #[test]
    fn loose_schedule_never_binds() {
        let cfg = ConsensusConfig {
            schedule: Schedule::Const { value: 1e6 },
            ..Default::default()
        };
        let g = build_constrained_consensus(&cfg).unwrap();
        let x0 = consensus_initial_profile(&cfg, &g.boxes);
        assert_eq!(g.collective_feasible_check(&x0, 100, 0.0).unwrap().max_violation, 0.0);
    }

    #[test]
    fn builders_satisfy_network_assumptions() {
        let games = [
            build_example1().unwrap().0,
            build_example2(Example2Network::Alternate).unwrap(),
            build_example3(example3_default_schedule(), 5).unwrap(),
            build_constrained_consensus(&ConsensusConfig::default()).unwrap(),
        ];
        for g in &games {
            for k in 0..1000 {
                let a = g.network.at(k).unwrap();
                let r = validate_adjacency(&a, g.network.a_min(), 1e-12);
                assert!(r.ok(), "k = {k}: {:?}", r.failures());
                let pf = left_pf_eigenvector(&a, 1e-13, 1_000_000).unwrap();
                assert!(left_eigen_residual(&a, &pf.q) <= 1e-10);
            }
        }
    }

    #[test]
    fn example3_networks_doubly_stochastic() {
        let g = build_example3(example3_default_schedule(), 1).unwrap();
        for k in 0..200 {
            let a = g.network.at(k).unwrap();
            for j in 0..2 {
                assert!((a.column(j).sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn example3_schedule_validation() {
        assert!(build_example3(Schedule::Const { value: -0.5 }, 0).is_err());
        assert!(build_example3(Schedule::Const { value: -2.0 }, 0).is_err());
        assert!(build_example3(Schedule::Const { value: -0.25 }, 0).is_ok());
    }

    #[test]
    fn names_resolve() {
        for n in SCENARIO_NAMES {
            let s = resolve(n, None).unwrap();
            assert_eq!(s.x0.len(), s.game.size());
        }
        assert!(matches!(resolve("nope", None), Err(Error::UnknownScenario(_))));
        assert!(matches!(resolve("example2:A3", None), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn random_instances_in_range() {
        for seed in 0..20 {
            let g = random_instance(&RandomInstanceConfig { seed, ..Default::default() }).unwrap();
            assert!((3..=12).contains(&g.agents));
            assert!((1..=4).contains(&g.dim));
            assert!(g.rows() <= 30);
        }
    }
}
