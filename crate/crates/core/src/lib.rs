//! Generalized pattern search with an amplitude-amplified search step.
//!
//! The quantum part is simulated exactly on sparse state vectors; oracle
//! calls are tracked in an [`OracleLedger`](ledger::OracleLedger).

pub mod amplification;
pub mod error;
pub mod events;
pub mod fixedpoint;
pub mod ledger;
pub mod objectives;
pub mod pattern;
pub mod quantum;
pub mod runner;
pub mod search_step;
pub mod seeds;

pub use error::{Error, Result};
