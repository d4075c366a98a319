use serde::{Deserialize, Serialize};

use super::mesh::{classical_search_step, poll_step, select_search_points, update_mesh, MeshState, PollOutcome};
use super::{ImprovedPoint, PatternBasis};
use crate::amplification::QSearchParams;
use crate::error::{Error, Result};
use crate::events::{EvaluationPhase, Event, EventSink, NullSink};
use crate::fixedpoint::{encode_point_exact, FixedPointFormat};
use crate::ledger::OracleLedger;
use crate::objectives::{evaluate_counted, Objective};
use crate::search_step::quantum_search_step;
use crate::seeds::{derive_rng, STREAM_SELECTION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpsConfig {
    pub initial_mesh_size: f64,
    /// Applied on success; a power of 2, at least 1.
    pub expansion_factor: f64,
    /// Applied at a mesh local optimizer; a power of 2 below 1.
    pub contraction_factor: f64,
    pub mesh_size_tolerance: f64,
    pub max_iterations: u64,
    /// `N`, a power of 2.
    pub search_points_count: usize,
    /// Largest entry of `z` when drawing search points.
    pub search_radius: u64,
    pub fixed_point_format: FixedPointFormat,
    pub rng_seed: u64,
    /// Stop once classical plus quantum calls reach this many.
    pub oracle_budget: Option<u64>,
}

impl Default for GpsConfig {
    fn default() -> Self {
        Self {
            initial_mesh_size: 1.0,
            expansion_factor: 1.0,
            contraction_factor: 0.5,
            mesh_size_tolerance: 1.0 / 64.0,
            max_iterations: 200,
            search_points_count: 16,
            search_radius: 8,
            fixed_point_format: FixedPointFormat::new(16, 8).expect("valid default format"),
            rng_seed: 0,
            oracle_budget: None,
        }
    }
}

fn is_power_of_two(v: f64) -> bool {
    v > 0.0 && v.is_finite() && v == v.log2().round().exp2()
}

impl GpsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_mesh_size > 0.0 && self.initial_mesh_size.is_finite()) {
            return Err(Error::Config("initial_mesh_size must be positive".into()));
        }
        if !(self.expansion_factor >= 1.0 && is_power_of_two(self.expansion_factor)) {
            return Err(Error::Config(format!(
                "expansion_factor must be a power of 2 and at least 1, got {}",
                self.expansion_factor
            )));
        }
        if !(self.contraction_factor < 1.0 && is_power_of_two(self.contraction_factor)) {
            return Err(Error::Config(format!(
                "contraction_factor must be a power of 2 below 1, got {}",
                self.contraction_factor
            )));
        }
        if self.mesh_size_tolerance.is_nan() || self.mesh_size_tolerance <= 0.0 {
            return Err(Error::Config("mesh_size_tolerance must be positive".into()));
        }
        if self.search_points_count == 0 || !self.search_points_count.is_power_of_two() {
            return Err(Error::Config(format!(
                "search_points_count must be a power of 2, got {}",
                self.search_points_count
            )));
        }
        if self.search_radius == 0 {
            return Err(Error::Config("search_radius must be at least 1".into()));
        }
        Ok(())
    }
}

/// Search-step implementation used by [`gps_run`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    Classical,
    Quantum(QSearchParams),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Classical => "classical",
            Backend::Quantum(_) => "quantum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IterationOutcome {
    SearchSuccess,
    PollSuccess,
    MeshLocalOptimizer,
}

/// State at the start of iteration `k` and how the iteration ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub iterate: Vec<f64>,
    pub value: f64,
    pub mesh_size: f64,
    pub outcome: IterationOutcome,
    /// Cumulative counters after the iteration.
    pub ledger_snapshot: OracleLedger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MeshConverged,
    IterationCap,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpsRun {
    pub records: Vec<IterationRecord>,
    pub final_state: MeshState,
    pub termination: Termination,
    pub ledger: OracleLedger,
}

pub fn gps_run(
    objective: &dyn Objective,
    basis: &PatternBasis,
    config: &GpsConfig,
    backend: &Backend,
    initial_point: &[f64],
) -> Result<GpsRun> {
    gps_run_with_events(objective, basis, config, backend, initial_point, &mut NullSink)
}

/// Search, then poll on failure, then update the mesh, until the mesh size
/// drops below tolerance, the iteration cap, or the oracle budget.
pub fn gps_run_with_events(
    objective: &dyn Objective,
    basis: &PatternBasis,
    config: &GpsConfig,
    backend: &Backend,
    initial_point: &[f64],
    sink: &mut dyn EventSink,
) -> Result<GpsRun> {
    config.validate()?;
    if let Backend::Quantum(params) = backend {
        params.validate()?;
    }
    if initial_point.len() != basis.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "initial point has dimension {}, basis {}",
            initial_point.len(),
            basis.dimension()
        )));
    }
    encode_point_exact(initial_point, &config.fixed_point_format)?;

    let mut ledger = OracleLedger::new();
    let value = evaluate_counted(objective, initial_point, &mut ledger)?;
    sink.emit(Event::Evaluation {
        iteration: 0,
        phase: EvaluationPhase::Initial,
        point: initial_point.to_vec(),
    });
    let mut state = MeshState {
        iterate: initial_point.to_vec(),
        mesh_size: config.initial_mesh_size,
        incumbent_value: value,
        iteration: 0,
    };
    let mut records = Vec::new();

    let termination = loop {
        if state.mesh_size < config.mesh_size_tolerance {
            break Termination::MeshConverged;
        }
        if state.iteration >= config.max_iterations {
            break Termination::IterationCap;
        }
        if config.oracle_budget.is_some_and(|b| ledger.total_calls() >= b) {
            break Termination::BudgetExhausted;
        }

        let searched = match backend {
            Backend::Classical => {
                let before = ledger;
                let mut rng = derive_rng(config.rng_seed, STREAM_SELECTION, state.iteration);
                let candidates = select_search_points(&state, basis, config, &mut rng)?;
                let out = classical_search_step(
                    &candidates,
                    objective,
                    state.incumbent_value,
                    &mut ledger,
                    state.iteration,
                    sink,
                )?;
                let marked = count_improving(&candidates, objective, state.incumbent_value);
                sink.emit(Event::SearchStep {
                    iteration: state.iteration,
                    backend: backend.name().into(),
                    points: candidates.len(),
                    marked,
                    rounds: 0,
                    found: out.improved().is_some(),
                    ledger_delta: ledger - before,
                });
                out
            }
            Backend::Quantum(params) => {
                quantum_search_step(&state, basis, config, params, objective, &mut ledger, sink)?
            }
        };

        let (outcome, improved): (IterationOutcome, Option<ImprovedPoint>) = match searched.improved() {
            Some(p) => (IterationOutcome::SearchSuccess, Some(p.clone())),
            None => match poll_step(&state, basis, objective, &mut ledger, sink)? {
                PollOutcome::Improved(p) => (IterationOutcome::PollSuccess, Some(p)),
                PollOutcome::MeshLocalOptimizer => (IterationOutcome::MeshLocalOptimizer, None),
            },
        };
        records.push(IterationRecord {
            iteration: state.iteration,
            iterate: state.iterate.clone(),
            value: state.incumbent_value,
            mesh_size: state.mesh_size,
            outcome,
            ledger_snapshot: ledger,
        });
        state = update_mesh(&state, improved.as_ref(), config);
    };

    Ok(GpsRun {
        records,
        final_state: state,
        termination,
        ledger,
    })
}

/// Brute-force count of strictly improving candidates; not an oracle call.
pub(crate) fn count_improving(
    candidates: &[super::SearchCandidate],
    objective: &dyn Objective,
    incumbent_value: f64,
) -> usize {
    candidates
        .iter()
        .filter(|c| objective.evaluate(&c.point) < incumbent_value)
        .count()
}
