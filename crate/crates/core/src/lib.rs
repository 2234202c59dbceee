//! Equilibrium seeking for multi-agent network games with time-varying
//! coupling constraints and time-varying directed communication graphs.
//!
//! The main entry points are [`solver::run`] (the preconditioned primal–dual
//! proximal iteration), [`solver::best_response_step`] (myopic best-response
//! dynamics), [`precondition::check_bounds`] / [`precondition::suggest_params`]
//! (step-size conditions) and the scenario builders in [`scenarios`].

pub mod error;
pub mod game;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod precondition;
pub mod prox;
pub mod scenarios;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use game::{
    AlphaRule, BoxSet, ConstraintProvider, GameSpec, LocalCost, NetworkMode, NetworkProvider,
    Snapshot,
};
pub use linalg::CsrMatrix;
pub use metrics::{certify_pn_enwe, consensus_residual, constraint_violation, RunTrace, TraceRow};
pub use precondition::{
    build_preconditioner, check_bounds, suggest_params, BoundReport, Preconditioner, SolverParams,
};
pub use scenarios::Scenario;
pub use schedule::Schedule;
pub use solver::{
    best_response_step, inclusion_check, run, run_best_response, tv_prox_gnwe_step, ClosedFormBr,
    IterateState, ParamSource, RunOptions,
};
