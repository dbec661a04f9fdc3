//! Compositional solver for conflict-free electric vehicle routing.
//!
//! An instance is solved by iterating five sub-problems over a shared SMT
//! backend ([`cfevrp_smt`]): routing, vehicle assignment, capacity
//! verification, path changing and route re-verification. The crate also
//! ships an independent schedule validator, a brute-force oracle for tiny
//! instances and a seeded instance generator.
//!
//! ```
//! use cfevrp::{driver, Instance};
//!
//! let inst = Instance::parse(include_str!("../fixtures/counterexample.json")).unwrap();
//! let out = driver::comsat_solve(&inst, &driver::Limits::default());
//! let sched = out.schedule().unwrap();
//! assert!(cfevrp::validate::validate_schedule(sched, &inst).unwrap().ok);
//! ```

pub mod assign;
pub mod capacity;
pub mod cli;
pub mod driver;
pub mod generate;
pub mod graph;
pub mod instance;
pub mod oracle;
pub mod paths;
pub mod route;
pub mod router;
pub mod schedule;
pub mod validate;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;

pub use graph::{NodeId, Path, PlantGraph};
pub use instance::Instance;
pub use route::{Route, RouteSet};
pub use schedule::Schedule;

/// Failure of a sub-problem solve that is not a plain infeasibility verdict.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("backend error: {0}")]
    Backend(String),
    #[error("solver deadline reached")]
    Interrupted,
    #[error(transparent)]
    Extract(#[from] router::ExtractError),
    #[error("selected edges contain a cycle off the path: {0}")]
    DecodingCycle(String),
    #[error("route legs do not chain: {0}")]
    BrokenChain(String),
}

pub(crate) fn smt_err(e: cfevrp_smt::SmtError) -> SolveError {
    SolveError::Backend(e.to_string())
}
