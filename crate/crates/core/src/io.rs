//! Scenario files: a JSON image of a [`GameSpec`] plus an optional
//! starting profile. Infinite box bounds are written as `null`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    AlphaRule, BoxSet, ConstraintMode, ConstraintProvider, GameSpec, LocalCost, NetworkMode,
    NetworkProvider,
};
use crate::linalg::CsrMatrix;
use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxFile {
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFile {
    Zero,
    Quadratic { target: Vec<f64>, weight: f64 },
}

/// Sparse matrix as per-row `[column, value]` lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFile {
    pub cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConstraintsFile {
    Static {
        matrix: SparseFile,
        rhs: Vec<f64>,
    },
    Schedule {
        matrix: SparseFile,
        offset: Vec<f64>,
        direction: Vec<f64>,
        schedule: Schedule,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NetworkFile {
    Static {
        matrix: Vec<Vec<f64>>,
    },
    Cycle {
        matrices: Vec<Vec<Vec<f64>>>,
        period: usize,
    },
    RandomSmallWorld {
        seed: u64,
        rewire: f64,
        neighbors: usize,
        a_min: f64,
    },
    RandomDoublyStochastic {
        seed: u64,
        rewire: f64,
        neighbors: usize,
        a_min: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaFile {
    Pf,
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub agents: usize,
    pub dim: usize,
    pub boxes: Vec<BoxFile>,
    pub costs: Vec<CostFile>,
    pub constraints: ConstraintsFile,
    pub network: NetworkFile,
    /// self-loop floor the adjacency matrices must respect
    pub a_min: f64,
    pub alpha: AlphaFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

fn dense_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn dense_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Shape("ragged adjacency matrix".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn sparse_file(c: &CsrMatrix) -> SparseFile {
    SparseFile {
        cols: c.cols(),
        rows: (0..c.rows()).map(|r| c.row(r).collect()).collect(),
    }
}

fn opt(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl ScenarioFile {
    pub fn from_game(game: &GameSpec, x0: Option<&[f64]>) -> Result<Self> {
        let constraints = match game.constraints.mode() {
            ConstraintMode::Static { matrix, rhs } => ConstraintsFile::Static {
                matrix: sparse_file(matrix),
                rhs: rhs.iter().copied().collect(),
            },
            ConstraintMode::Scheduled {
                matrix,
                offset,
                direction,
                schedule,
            } => ConstraintsFile::Schedule {
                matrix: sparse_file(matrix),
                offset: offset.iter().copied().collect(),
                direction: direction.iter().copied().collect(),
                schedule: schedule.clone(),
            },
            ConstraintMode::Custom(_) => {
                return Err(Error::Unsupported(
                    "custom constraint providers cannot be written to JSON".into(),
                ))
            }
        };
        let network = match game.network.mode() {
            NetworkMode::Static(a) => NetworkFile::Static { matrix: dense_rows(a) },
            NetworkMode::Cycle { matrices, period } => NetworkFile::Cycle {
                matrices: matrices.iter().map(dense_rows).collect(),
                period: *period,
            },
            &NetworkMode::RandomSmallWorld {
                seed,
                rewire,
                neighbors,
                a_min,
            } => NetworkFile::RandomSmallWorld {
                seed,
                rewire,
                neighbors,
                a_min,
            },
            &NetworkMode::RandomDoublyStochastic {
                seed,
                rewire,
                neighbors,
                a_min,
            } => NetworkFile::RandomDoublyStochastic {
                seed,
                rewire,
                neighbors,
                a_min,
            },
        };
        Ok(Self {
            agents: game.agents,
            dim: game.dim,
            boxes: game
                .boxes
                .iter()
                .map(|b| BoxFile {
                    lo: b.lo.iter().map(|&v| opt(v)).collect(),
                    hi: b.hi.iter().map(|&v| opt(v)).collect(),
                })
                .collect(),
            costs: game
                .costs
                .iter()
                .map(|c| match c {
                    LocalCost::Zero => CostFile::Zero,
                    LocalCost::Quadratic { target, weight } => CostFile::Quadratic {
                        target: target.clone(),
                        weight: *weight,
                    },
                })
                .collect(),
            constraints,
            network,
            a_min: game.network.a_min(),
            alpha: match &game.alpha_rule {
                AlphaRule::PfEigenvector => AlphaFile::Pf,
                AlphaRule::Uniform => AlphaFile::Uniform,
                AlphaRule::Explicit(a) => AlphaFile::Explicit(a.clone()),
            },
            x0: x0.map(<[f64]>::to_vec),
        })
    }

    /// Builds and validates the game.
    pub fn to_game(&self) -> Result<GameSpec> {
        if self.boxes.len() != self.agents || self.costs.len() != self.agents {
            return Err(Error::Shape(format!(
                "{} boxes and {} costs for {} agents",
                self.boxes.len(),
                self.costs.len(),
                self.agents
            )));
        }
        let boxes = self
            .boxes
            .iter()
            .map(|b| {
                BoxSet::new(
                    b.lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
                    b.hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        if boxes.iter().any(|b| b.dim() != self.dim) {
            return Err(Error::Shape(format!("box dimension differs from {}", self.dim)));
        }
        let costs = self
            .costs
            .iter()
            .map(|c| match c {
                CostFile::Zero => LocalCost::Zero,
                CostFile::Quadratic { target, weight } => LocalCost::Quadratic {
                    target: target.clone(),
                    weight: *weight,
                },
            })
            .collect();
        let constraints = match &self.constraints {
            ConstraintsFile::Static { matrix, rhs } => ConstraintProvider::new_static(
                CsrMatrix::from_row_entries(matrix.cols, &matrix.rows)?,
                DVector::from_column_slice(rhs),
            )?,
            ConstraintsFile::Schedule {
                matrix,
                offset,
                direction,
                schedule,
            } => ConstraintProvider::new_scheduled(
                CsrMatrix::from_row_entries(matrix.cols, &matrix.rows)?,
                DVector::from_column_slice(offset),
                DVector::from_column_slice(direction),
                schedule.clone(),
            )?,
        };
        let mode = match &self.network {
            NetworkFile::Static { matrix } => NetworkMode::Static(dense_from_rows(matrix)?),
            NetworkFile::Cycle { matrices, period } => NetworkMode::Cycle {
                matrices: matrices
                    .iter()
                    .map(|m| dense_from_rows(m))
                    .collect::<Result<_>>()?,
                period: *period,
            },
            &NetworkFile::RandomSmallWorld {
                seed,
                rewire,
                neighbors,
                a_min,
            } => NetworkMode::RandomSmallWorld {
                seed,
                rewire,
                neighbors,
                a_min,
            },
            &NetworkFile::RandomDoublyStochastic {
                seed,
                rewire,
                neighbors,
                a_min,
            } => NetworkMode::RandomDoublyStochastic {
                seed,
                rewire,
                neighbors,
                a_min,
            },
        };
        let network = NetworkProvider::new(self.agents, self.a_min, mode)?;
        let alpha_rule = match &self.alpha {
            AlphaFile::Pf => AlphaRule::PfEigenvector,
            AlphaFile::Uniform => AlphaRule::Uniform,
            AlphaFile::Explicit(a) => AlphaRule::Explicit(a.clone()),
        };
        let game = GameSpec::new(boxes, costs, constraints, network, alpha_rule)?;
        if let Some(x0) = &self.x0 {
            if x0.len() != game.size() {
                return Err(Error::Shape(format!(
                    "x0 has length {}, expected {}",
                    x0.len(),
                    game.size()
                )));
            }
        }
        Ok(game)
    }
}

pub fn scenario_to_json(game: &GameSpec, x0: Option<&[f64]>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ScenarioFile::from_game(game, x0)?)?)
}

/// Parses and validates; returns the game and the stored `x0`, if any.
pub fn scenario_from_json(text: &str) -> Result<(GameSpec, Option<Vec<f64>>)> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    let game = file.to_game()?;
    Ok((game, file.x0))
}

pub fn load_scenario(path: &Path) -> Result<(GameSpec, Option<Vec<f64>>)> {
    scenario_from_json(&fs::read_to_string(path)?)
}

pub fn dump_scenario(path: &Path, game: &GameSpec, x0: Option<&[f64]>) -> Result<()> {
    fs::write(path, scenario_to_json(game, x0)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{self, SCENARIO_NAMES};

    fn assert_same(a: &GameSpec, b: &GameSpec) {
        assert_eq!(a.boxes, b.boxes);
        assert_eq!(a.costs, b.costs);
        assert_eq!(a.network, b.network);
        assert_eq!(a.alpha_rule, b.alpha_rule);
        for k in [0, 1, 49, 50, 777] {
            let (ca, ra) = a.constraints.at(k).unwrap();
            let (cb, rb) = b.constraints.at(k).unwrap();
            assert_eq!(*ca, *cb);
            assert_eq!(ra.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                       rb.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn shipped_scenarios_round_trip() {
        for name in SCENARIO_NAMES {
            let s = scenarios::resolve(name, None).unwrap();
            let text = scenario_to_json(&s.game, Some(&s.x0)).unwrap();
            let (g, x0) = scenario_from_json(&text).unwrap();
            assert_same(&s.game, &g);
            let x0 = x0.unwrap();
            assert!(x0.iter().zip(&s.x0).all(|(a, b)| a.to_bits() == b.to_bits()));
            assert_eq!(scenario_to_json(&g, Some(&x0)).unwrap(), text);
        }
    }

    #[test]
    fn infinite_bounds_are_null() {
        let s = scenarios::resolve("example1", None).unwrap();
        let text = scenario_to_json(&s.game, None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["boxes"][0]["lo"][0].is_null());
        assert!(v.get("x0").is_none());
    }

    #[test]
    fn bad_row_sums_rejected() {
        let s = scenarios::resolve("example2:A1", None).unwrap();
        let mut f = ScenarioFile::from_game(&s.game, None).unwrap();
        f.network = NetworkFile::Static {
            matrix: vec![vec![0.5, 0.4], vec![0.5, 0.5]],
        };
        let text = serde_json::to_string(&f).unwrap();
        assert!(matches!(scenario_from_json(&text), Err(Error::InvalidAdjacency { .. })));
    }

    #[test]
    fn malformed_json_is_an_error() {
        assert!(matches!(scenario_from_json("{"), Err(Error::Json(_))));
    }
}
