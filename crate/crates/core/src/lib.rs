//! Equilibrium engine for bilateral multi-issue bargaining with deadlines and
//! per-issue discount factors.
//!
//! Agents alternate offers over a bundle of divisible issues. Each pie shrinks
//! by its discount factor every period and is worth nothing after the deadline.
//! The crate computes equilibrium offers under complete information and under
//! uncertainty about the opponent's weights, and runs the package-deal,
//! simultaneous and sequential procedures.

pub mod cli;
pub mod complete;
pub mod error;
pub mod incomplete;
pub mod oracle;
pub mod procedures;
pub mod scenario;
pub mod tradeoff;

pub use complete::{backward_induction_ci, is_pareto_optimal, single_issue_equilibrium, CiEquilibrium, TurnOrder};
pub use error::{Error, Result};
pub use incomplete::{compute_eu_tables, BargainingGame, Beliefs, EuTables};
pub use scenario::{validate_scenario, Agent, BeliefState, Package, Partition, RawScenario, Scenario, Setting, TypeSpace};
pub use tradeoff::{solve_tradeoff, TradeoffProblem};
