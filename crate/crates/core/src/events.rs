//! Structured events emitted by the search loops.

use serde::Serialize;

use crate::ledger::OracleLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationPhase {
    Initial,
    /// Classical evaluation inside a classical search step.
    Search,
    /// Point loaded into the quantum oracle's superposition.
    QuantumSearch,
    /// Classical recheck of a measured candidate.
    Recheck,
    Poll,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    /// One QSearch round. `l == 0` is the initial measure-after-A.
    QSearchRound {
        l: u64,
        m: u64,
        j: u64,
        u: u64,
        measured: String,
        desired: bool,
    },
    Evaluation {
        iteration: u64,
        phase: EvaluationPhase,
        point: Vec<f64>,
    },
    SearchStep {
        iteration: u64,
        backend: String,
        points: usize,
        /// Number of improving points, counted by brute force outside the ledger.
        marked: usize,
        rounds: u64,
        found: bool,
        ledger_delta: OracleLedger,
    },
}

pub trait EventSink {
    fn emit(&mut self, event: Event);
}

/// Discards every event.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _event: Event) {}
}

impl EventSink for Vec<Event> {
    fn emit(&mut self, event: Event) {
        self.push(event);
    }
}
