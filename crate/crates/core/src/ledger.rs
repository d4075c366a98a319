use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Separated classical and quantum oracle-call counters.
///
/// A quantum call is one application of the lifted oracle `F`: one per
/// state preparation `A` and two per amplification operator `Q` (one in `A`,
/// one in `A^-1`), so `quantum_calls == a_preparations + 2 * q_applications`
/// holds at all times.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLedger {
    pub classical_calls: u64,
    pub quantum_calls: u64,
    pub a_preparations: u64,
    pub qsearch_rounds: u64,
    pub q_applications: u64,
}

impl OracleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_classical(&mut self) {
        self.classical_calls += 1;
    }

    pub fn record_preparation(&mut self) {
        self.a_preparations += 1;
        self.quantum_calls += 1;
    }

    pub fn record_q(&mut self) {
        self.q_applications += 1;
        self.quantum_calls += 2;
    }

    pub fn record_round(&mut self) {
        self.qsearch_rounds += 1;
    }

    /// Total calls of either kind.
    pub fn total_calls(&self) -> u64 {
        self.classical_calls + self.quantum_calls
    }

    pub fn is_consistent(&self) -> bool {
        self.quantum_calls == self.a_preparations + 2 * self.q_applications
    }
}

impl AddAssign for OracleLedger {
    fn add_assign(&mut self, rhs: Self) {
        self.classical_calls += rhs.classical_calls;
        self.quantum_calls += rhs.quantum_calls;
        self.a_preparations += rhs.a_preparations;
        self.qsearch_rounds += rhs.qsearch_rounds;
        self.q_applications += rhs.q_applications;
    }
}

impl Add for OracleLedger {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

/// Difference between two snapshots of the same monotone ledger.
impl Sub for OracleLedger {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self {
            classical_calls: self.classical_calls - rhs.classical_calls,
            quantum_calls: self.quantum_calls - rhs.quantum_calls,
            a_preparations: self.a_preparations - rhs.a_preparations,
            qsearch_rounds: self.qsearch_rounds - rhs.qsearch_rounds,
            q_applications: self.q_applications - rhs.q_applications,
        }
    }
}
