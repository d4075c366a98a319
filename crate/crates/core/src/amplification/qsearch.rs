use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_q, SearchProblem};
use crate::error::{Error, Result};
use crate::events::{Event, EventSink, NullSink};
use crate::fixedpoint::BitString;
use crate::ledger::OracleLedger;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QSearchParams {
    /// Growth rate of the `j` range, strictly between 1 and 2.
    pub c: f64,
    /// Tolerated probability of missing an existing desired state.
    pub tau: f64,
    pub rng_seed: u64,
    /// Round cap for the unmodified loop, which never halts when `t = 0`.
    pub max_total_rounds: u64,
}

impl Default for QSearchParams {
    fn default() -> Self {
        Self {
            c: 1.5,
            tau: 0.01,
            rng_seed: 0,
            max_total_rounds: 10_000,
        }
    }
}

impl QSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0 && self.c < 2.0) {
            return Err(Error::Config(format!("c must lie in (1, 2), got {}", self.c)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        Ok(())
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }

    /// `ln(tau) / ln(3/4)`: the loop runs while `u` is below this.
    pub fn u_threshold(&self) -> f64 {
        self.tau.ln() / 0.75f64.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchResult {
    Found(BitString),
    Failure,
}

impl SearchResult {
    pub fn found(&self) -> Option<&BitString> {
        match self {
            SearchResult::Found(b) => Some(b),
            SearchResult::Failure => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSearchOutcome {
    pub result: SearchResult,
    /// `l` at exit: number of while-loop rounds.
    pub rounds_executed: u64,
    /// `u` at exit.
    pub u_rounds: u64,
    pub q_applications: u64,
    pub ledger_delta: OracleLedger,
}

/// Upper bound on while-loop rounds of [`modified_qsearch`]:
/// `ceil(log_c sqrt(N)) + ceil(ln(tau)/ln(3/4)) + 1`.
pub fn modified_round_bound(n: usize, c: f64, tau: f64) -> u64 {
    let grow = ((n as f64).sqrt().ln() / c.ln()).ceil().max(0.0) as u64;
    let stop = (tau.ln() / 0.75f64.ln()).ceil() as u64;
    grow + stop + 1
}

/// Success probability after `j` Grover iterations: `sin^2((2j+1) theta)`
/// with `sin^2 theta = t/N`.
pub fn analytic_success_probability(n: u64, t: u64, j: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("N must be at least 1".into()));
    }
    if t > n {
        return Err(Error::Domain(format!("t = {t} exceeds N = {n}")));
    }
    if t == 0 {
        return Ok(0.0);
    }
    let theta = (t as f64 / n as f64).sqrt().asin();
    Ok(((2 * j + 1) as f64 * theta).sin().powi(2))
}

/// Unmodified QSearch. Fails with [`Error::SafetyCapReached`] after
/// `max_total_rounds` rounds, which is the only way it halts when `t = 0`.
pub fn qsearch(problem: &SearchProblem, params: &QSearchParams) -> Result<QSearchOutcome> {
    qsearch_with_events(problem, params, &mut NullSink)
}

pub fn qsearch_with_events(
    problem: &SearchProblem,
    params: &QSearchParams,
    sink: &mut dyn EventSink,
) -> Result<QSearchOutcome> {
    run(problem, params, false, sink)
}

/// QSearch with the `(3/4)^u` stopping rule; always terminates.
pub fn modified_qsearch(problem: &SearchProblem, params: &QSearchParams) -> Result<QSearchOutcome> {
    modified_qsearch_with_events(problem, params, &mut NullSink)
}

pub fn modified_qsearch_with_events(
    problem: &SearchProblem,
    params: &QSearchParams,
    sink: &mut dyn EventSink,
) -> Result<QSearchOutcome> {
    run(problem, params, true, sink)
}

fn run(
    problem: &SearchProblem,
    params: &QSearchParams,
    modified: bool,
    sink: &mut dyn EventSink,
) -> Result<QSearchOutcome> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut ledger = OracleLedger::new();
    let n = problem.len() as u128;
    let threshold = params.u_threshold();

    let state = problem.prepare(&mut ledger)?;
    let measured = state.measure(&mut rng)?;
    let desired = problem.is_desired(&measured);
    sink.emit(Event::QSearchRound {
        l: 0,
        m: 0,
        j: 0,
        u: 0,
        measured: measured.to_string(),
        desired,
    });
    let mut l = 0u64;
    let mut u = 0u64;
    let outcome = |result, l, u, ledger: OracleLedger| QSearchOutcome {
        result,
        rounds_executed: l,
        u_rounds: u,
        q_applications: ledger.q_applications,
        ledger_delta: ledger,
    };
    if desired {
        return Ok(outcome(SearchResult::Found(measured), l, u, ledger));
    }

    loop {
        if modified {
            if (u as f64) >= threshold {
                return Ok(outcome(SearchResult::Failure, l, u, ledger));
            }
        } else if l >= params.max_total_rounds {
            return Err(Error::SafetyCapReached { rounds: l, ledger });
        }

        l += 1;
        // saturating cast: c^l beyond u64 is unreachable in practice
        let m = params.c.powi(l.min(i32::MAX as u64) as i32).ceil() as u64;
        // M > sqrt(N), decided exactly in integers
        if modified && (m as u128) * (m as u128) > n {
            u += 1;
        }
        ledger.record_round();

        let mut state = problem.prepare(&mut ledger)?;
        let j = rng.gen_range(1..=m);
        for _ in 0..j {
            apply_q(&mut state, problem, &mut ledger)?;
        }
        let measured = state.measure(&mut rng)?;
        let desired = problem.is_desired(&measured);
        sink.emit(Event::QSearchRound {
            l,
            m,
            j,
            u,
            measured: measured.to_string(),
            desired,
        });
        if desired {
            return Ok(outcome(SearchResult::Found(measured), l, u, ledger));
        }
    }
}
