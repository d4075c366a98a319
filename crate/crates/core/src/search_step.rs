//! The GPS search step run through modified QSearch, plus the side-by-side
//! comparison with the classical first-improvement search.

use rand::seq::index::sample;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::amplification::{modified_qsearch_with_events, QSearchParams, SearchProblem, SearchResult};
use crate::error::{Error, Result};
use crate::events::{EvaluationPhase, Event, EventSink, NullSink};
use crate::fixedpoint::{encode_point_exact, encode_scalar_saturating, FixedPointFormat};
use crate::ledger::OracleLedger;
use crate::objectives::{evaluate_checked, evaluate_counted, Objective};
use crate::pattern::{
    classical_search_step, select_search_points, GpsConfig, ImprovedPoint, MeshState, PatternBasis, SearchCandidate,
    SearchOutcome,
};
use crate::quantum::RegisterLayout;
use crate::seeds::{derive_rng, derive_seed, STREAM_PLANT, STREAM_QSEARCH, STREAM_SELECTION};

/// Selects `N` mesh points and searches them with modified QSearch.
///
/// The QSearch seed is derived from `params.rng_seed` and the iteration, so
/// every iteration draws from its own stream.
pub fn quantum_search_step(
    state: &MeshState,
    basis: &PatternBasis,
    config: &GpsConfig,
    params: &QSearchParams,
    objective: &dyn Objective,
    ledger: &mut OracleLedger,
    sink: &mut dyn EventSink,
) -> Result<SearchOutcome> {
    let mut rng = derive_rng(config.rng_seed, STREAM_SELECTION, state.iteration);
    let candidates = select_search_points(state, basis, config, &mut rng)?;
    let params = params.with_seed(derive_seed(params.rng_seed, STREAM_QSEARCH, state.iteration));
    quantum_search_over(
        &candidates,
        state,
        &config.fixed_point_format,
        &params,
        objective,
        ledger,
        sink,
    )
}

/// Modified QSearch over a fixed candidate set, with a classical recheck of
/// any measured point before it is accepted.
pub fn quantum_search_over(
    candidates: &[SearchCandidate],
    state: &MeshState,
    fmt: &FixedPointFormat,
    params: &QSearchParams,
    objective: &dyn Objective,
    ledger: &mut OracleLedger,
    sink: &mut dyn EventSink,
) -> Result<SearchOutcome> {
    let before = *ledger;
    let layout = RegisterLayout::for_search(state.iterate.len(), fmt.total_bits())?;
    // f(x_k) is cached on the mesh state: no oracle call here
    let incumbent = encode_scalar_saturating(state.incumbent_value, fmt)?.bits;

    let mut points = Vec::with_capacity(candidates.len());
    let mut values = Vec::with_capacity(candidates.len());
    let mut by_bits = FxHashMap::default();
    let mut marked = 0;
    for (i, c) in candidates.iter().enumerate() {
        // tabulating F is simulation work, counted as quantum calls per application
        let v = evaluate_checked(objective, &c.point)?;
        if v < state.incumbent_value {
            marked += 1;
        }
        points.push(c.bits);
        values.push(encode_scalar_saturating(v, fmt)?.bits);
        by_bits.insert(c.bits.bits(), i);
        sink.emit(Event::Evaluation {
            iteration: state.iteration,
            phase: EvaluationPhase::QuantumSearch,
            point: c.point.clone(),
        });
    }
    let problem = SearchProblem::from_values(layout, points, values, incumbent)?;
    let outcome = modified_qsearch_with_events(&problem, params, sink)?;
    *ledger += outcome.ledger_delta;

    let result = match outcome.result {
        SearchResult::Found(measured) => {
            let (point_bits, _, _) = layout.split(&measured);
            let idx = *by_bits
                .get(&point_bits.bits())
                .expect("measured point register lies in the search set");
            let point = candidates[idx].point.clone();
            let value = evaluate_counted(objective, &point, ledger)?;
            sink.emit(Event::Evaluation {
                iteration: state.iteration,
                phase: EvaluationPhase::Recheck,
                point: point.clone(),
            });
            if value < state.incumbent_value {
                SearchOutcome::Improved(ImprovedPoint { point, value })
            } else {
                SearchOutcome::Failure
            }
        }
        SearchResult::Failure => SearchOutcome::Failure,
    };
    sink.emit(Event::SearchStep {
        iteration: state.iteration,
        backend: "quantum".into(),
        points: candidates.len(),
        marked,
        rounds: outcome.rounds_executed,
        found: result.improved().is_some(),
        ledger_delta: *ledger - before,
    });
    Ok(result)
}

/// One seed of a backend comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub points: usize,
    /// Strictly improving points in the set, by brute force.
    pub marked: usize,
    pub classical_calls: u64,
    pub classical_found: bool,
    pub quantum_calls: u64,
    /// Classical rechecks made by the quantum step (0 or 1).
    pub quantum_rechecks: u64,
    pub quantum_rounds: u64,
    pub quantum_found: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub trials: usize,
    pub points: usize,
    pub tau: f64,
    pub c: f64,
    pub mean_marked: f64,
    pub mean_classical_calls: f64,
    pub mean_quantum_calls: f64,
    pub classical_success_rate: f64,
    pub quantum_success_rate: f64,
    /// Quantum failures among trials that had at least one improving point.
    pub quantum_miss_rate: f64,
    /// Mean of `quantum_calls / sqrt(N / t)` over trials with `t > 0`.
    pub quantum_calls_per_sqrt_n_over_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub summary: ComparisonSummary,
}

impl ComparisonReport {
    fn from_rows(rows: Vec<ComparisonRow>, params: &QSearchParams) -> Self {
        let trials = rows.len();
        let mean = |f: &dyn Fn(&ComparisonRow) -> f64| {
            if trials == 0 {
                0.0
            } else {
                rows.iter().map(f).sum::<f64>() / trials as f64
            }
        };
        let with_marked: Vec<&ComparisonRow> = rows.iter().filter(|r| r.marked > 0).collect();
        let miss_rate = if with_marked.is_empty() {
            0.0
        } else {
            with_marked.iter().filter(|r| !r.quantum_found).count() as f64 / with_marked.len() as f64
        };
        let fit = if with_marked.is_empty() {
            0.0
        } else {
            with_marked
                .iter()
                .map(|r| r.quantum_calls as f64 / (r.points as f64 / r.marked as f64).sqrt())
                .sum::<f64>()
                / with_marked.len() as f64
        };
        let summary = ComparisonSummary {
            trials,
            points: rows.first().map_or(0, |r| r.points),
            tau: params.tau,
            c: params.c,
            mean_marked: mean(&|r| r.marked as f64),
            mean_classical_calls: mean(&|r| r.classical_calls as f64),
            mean_quantum_calls: mean(&|r| r.quantum_calls as f64),
            classical_success_rate: mean(&|r| r.classical_found as u8 as f64),
            quantum_success_rate: mean(&|r| r.quantum_found as u8 as f64),
            quantum_miss_rate: miss_rate,
            quantum_calls_per_sqrt_n_over_t: fit,
        };
        Self { rows, summary }
    }
}

fn compare_on(
    seed: u64,
    candidates: &[SearchCandidate],
    state: &MeshState,
    fmt: &FixedPointFormat,
    params: &QSearchParams,
    objective: &dyn Objective,
) -> Result<ComparisonRow> {
    let marked = candidates
        .iter()
        .filter(|c| objective.evaluate(&c.point) < state.incumbent_value)
        .count();

    let mut classical = OracleLedger::new();
    let c_out = classical_search_step(
        candidates,
        objective,
        state.incumbent_value,
        &mut classical,
        state.iteration,
        &mut NullSink,
    )?;

    let mut quantum = OracleLedger::new();
    let qparams = params.with_seed(derive_seed(seed, STREAM_QSEARCH, 0));
    let q_out = quantum_search_over(candidates, state, fmt, &qparams, objective, &mut quantum, &mut NullSink)?;

    Ok(ComparisonRow {
        seed,
        points: candidates.len(),
        marked,
        classical_calls: classical.classical_calls,
        classical_found: c_out.improved().is_some(),
        quantum_calls: quantum.quantum_calls,
        quantum_rechecks: quantum.classical_calls,
        quantum_rounds: quantum.qsearch_rounds,
        quantum_found: q_out.improved().is_some(),
    })
}

/// Runs both search backends on the same selected point set for each seed.
///
/// The point set depends only on the seed's selection stream, so both
/// backends see identical candidates; QSearch draws from a separate stream.
/// Rows come back in seed order.
pub fn compare_backends(
    objective: &dyn Objective,
    basis: &PatternBasis,
    config: &GpsConfig,
    params: &QSearchParams,
    initial_point: &[f64],
    seeds: &[u64],
) -> Result<ComparisonReport> {
    config.validate()?;
    params.validate()?;
    encode_point_exact(initial_point, &config.fixed_point_format)?;
    let state = MeshState {
        iterate: initial_point.to_vec(),
        mesh_size: config.initial_mesh_size,
        incumbent_value: evaluate_checked(objective, initial_point)?,
        iteration: 0,
    };
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = derive_rng(seed, STREAM_SELECTION, 0);
            let candidates = select_search_points(&state, basis, config, &mut rng)?;
            compare_on(seed, &candidates, &state, &config.fixed_point_format, params, objective)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport::from_rows(rows, params))
}

/// Objective that is 0 on a planted set of points and 2 elsewhere; the
/// incumbent sits at value 1, so exactly the planted points improve.
#[derive(Debug, Clone)]
pub struct PlantedObjective {
    planted: FxHashSet<u64>,
}

impl PlantedObjective {
    pub fn new(planted: impl IntoIterator<Item = f64>) -> Self {
        Self {
            planted: planted.into_iter().map(f64::to_bits).collect(),
        }
    }
}

impl Objective for PlantedObjective {
    fn name(&self) -> &str {
        "planted"
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        match x {
            [] => 1.0,
            [v, ..] if self.planted.contains(&v.to_bits()) => 0.0,
            _ => 2.0,
        }
    }
}

/// Format used for planted experiments: integer coordinates, 16 bits.
pub fn planted_format() -> FixedPointFormat {
    FixedPointFormat::integer(16).expect("valid format")
}

/// The one-dimensional points `1..=N` as search candidates around `x_k = 0`.
pub fn planted_candidates(n_points: usize) -> Result<Vec<SearchCandidate>> {
    let fmt = planted_format();
    (1..=n_points)
        .map(|i| {
            let point = vec![i as f64];
            let bits = encode_point_exact(&point, &fmt)?;
            Ok(SearchCandidate {
                z: vec![i as u64],
                point,
                bits,
            })
        })
        .collect()
}

/// `SearchProblem` over the points `1..=N` with `t` planted improving points
/// chosen by `seed`. The incumbent value is 1, planted points have value 0 and
/// the rest 2.
pub fn planted_problem(n_points: usize, marked: usize, seed: u64) -> Result<SearchProblem> {
    check_planted(n_points, marked)?;
    let fmt = planted_format();
    let candidates = planted_candidates(n_points)?;
    let objective = plant(n_points, marked, seed);
    let layout = RegisterLayout::for_search(1, fmt.total_bits())?;
    let values = candidates
        .iter()
        .map(|c| Ok(encode_scalar_saturating(objective.evaluate(&c.point), &fmt)?.bits))
        .collect::<Result<Vec<_>>>()?;
    let incumbent = encode_scalar_saturating(1.0, &fmt)?.bits;
    SearchProblem::from_values(
        layout,
        candidates.into_iter().map(|c| c.bits).collect(),
        values,
        incumbent,
    )
}

fn check_planted(n_points: usize, marked: usize) -> Result<()> {
    let max = planted_format().max_value() as usize;
    if n_points == 0 || n_points > max || marked > n_points {
        return Err(Error::Domain(format!(
            "need 0 <= t <= N and 1 <= N <= {max}, got N = {n_points}, t = {marked}"
        )));
    }
    Ok(())
}

fn plant(n_points: usize, marked: usize, seed: u64) -> PlantedObjective {
    let mut rng = derive_rng(seed, STREAM_PLANT, 0);
    PlantedObjective::new(sample(&mut rng, n_points, marked).into_iter().map(|i| (i + 1) as f64))
}

/// Backend comparison on `N` points with exactly `t` improving points planted
/// uniformly at random per seed.
pub fn planted_comparison(
    n_points: usize,
    marked: usize,
    params: &QSearchParams,
    seeds: &[u64],
) -> Result<ComparisonReport> {
    params.validate()?;
    check_planted(n_points, marked)?;
    let candidates = planted_candidates(n_points)?;
    let state = MeshState {
        iterate: vec![0.0],
        mesh_size: 1.0,
        incumbent_value: 1.0,
        iteration: 0,
    };
    let fmt = planted_format();
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let objective = plant(n_points, marked, seed);
            compare_on(seed, &candidates, &state, &fmt, params, &objective)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport::from_rows(rows, params))
}
