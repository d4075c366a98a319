use nalgebra::DMatrix;
use rand::Rng;
use rustc_hash::FxHashSet;
use serde::Serialize;

use super::{positive_spanning_check, GpsConfig, PatternBasis};
use crate::error::{Error, Result};
use crate::events::{EvaluationPhase, Event, EventSink};
use crate::fixedpoint::{encode_point_exact, BitString};
use crate::ledger::OracleLedger;
use crate::objectives::{evaluate_counted, Objective};

/// Iterate `x_k`, mesh size `Delta_k`, and the cached value `f(x_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshState {
    pub iterate: Vec<f64>,
    pub mesh_size: f64,
    pub incumbent_value: f64,
    pub iteration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovedPoint {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PollOutcome {
    Improved(ImprovedPoint),
    MeshLocalOptimizer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Improved(ImprovedPoint),
    Failure,
}

impl SearchOutcome {
    pub fn improved(&self) -> Option<&ImprovedPoint> {
        match self {
            SearchOutcome::Improved(p) => Some(p),
            SearchOutcome::Failure => None,
        }
    }
}

/// A mesh point `x_k + Delta_k D z` together with its encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchCandidate {
    pub z: Vec<u64>,
    pub point: Vec<f64>,
    pub bits: BitString,
}

/// `x_k + Delta_k D z`.
pub fn mesh_point(state: &MeshState, basis: &PatternBasis, z: &[u64]) -> Result<Vec<f64>> {
    if z.len() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "z has length {}, basis has {} directions",
            z.len(),
            basis.len()
        )));
    }
    if state.iterate.len() != basis.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "iterate has dimension {}, basis {}",
            state.iterate.len(),
            basis.dimension()
        )));
    }
    let d = basis.directions();
    Ok(state
        .iterate
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let offset: f64 = z.iter().enumerate().map(|(j, &zj)| d[(i, j)] * zj as f64).sum();
            x + state.mesh_size * offset
        })
        .collect())
}

/// `{ x_k + Delta_k d : d in D_k }` in column order.
pub fn poll_set(state: &MeshState, directions: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    if directions.nrows() != state.iterate.len() {
        return Err(Error::DimensionMismatch(format!(
            "directions have {} rows, iterate has dimension {}",
            directions.nrows(),
            state.iterate.len()
        )));
    }
    if !positive_spanning_check(directions)? {
        return Err(Error::NotPositiveSpanning(directions.nrows()));
    }
    Ok(poll_points(state, directions))
}

fn poll_points(state: &MeshState, directions: &DMatrix<f64>) -> Vec<Vec<f64>> {
    directions
        .column_iter()
        .map(|col| {
            state
                .iterate
                .iter()
                .zip(col.iter())
                .map(|(x, d)| x + state.mesh_size * d)
                .collect()
        })
        .collect()
}

/// Opportunistic poll over all basis directions: the first point with a
/// strictly smaller value wins.
pub fn poll_step(
    state: &MeshState,
    basis: &PatternBasis,
    objective: &dyn Objective,
    ledger: &mut OracleLedger,
    sink: &mut dyn EventSink,
) -> Result<PollOutcome> {
    for point in poll_points(state, basis.directions()) {
        let value = evaluate_counted(objective, &point, ledger)?;
        sink.emit(Event::Evaluation {
            iteration: state.iteration,
            phase: EvaluationPhase::Poll,
            point: point.clone(),
        });
        if value < state.incumbent_value {
            return Ok(PollOutcome::Improved(ImprovedPoint { point, value }));
        }
    }
    Ok(PollOutcome::MeshLocalOptimizer)
}

/// Evaluates candidates in order, one classical call each, stopping at the
/// first strict improvement.
pub fn classical_search_step(
    candidates: &[SearchCandidate],
    objective: &dyn Objective,
    incumbent_value: f64,
    ledger: &mut OracleLedger,
    iteration: u64,
    sink: &mut dyn EventSink,
) -> Result<SearchOutcome> {
    for c in candidates {
        let value = evaluate_counted(objective, &c.point, ledger)?;
        sink.emit(Event::Evaluation {
            iteration,
            phase: EvaluationPhase::Search,
            point: c.point.clone(),
        });
        if value < incumbent_value {
            return Ok(SearchOutcome::Improved(ImprovedPoint {
                point: c.point.clone(),
                value,
            }));
        }
    }
    Ok(SearchOutcome::Failure)
}

/// Picks `N` distinct representable mesh points other than `x_k`.
///
/// `z` is drawn uniformly from `{0..z_max}^p \ {0}`; if random draws keep
/// colliding, the rest is filled by enumerating `z` in order of increasing
/// `sum(z)`. Points outside the format's range are skipped; a point inside
/// the range but off the grid is an error.
pub fn select_search_points<R: Rng + ?Sized>(
    state: &MeshState,
    basis: &PatternBasis,
    config: &GpsConfig,
    rng: &mut R,
) -> Result<Vec<SearchCandidate>> {
    let wanted = config.search_points_count;
    if wanted == 0 || !wanted.is_power_of_two() {
        return Err(Error::Config(format!(
            "search_points_count must be a power of 2, got {wanted}"
        )));
    }
    let fmt = &config.fixed_point_format;
    let p = basis.len();
    let z_max = config.search_radius;

    let mut seen = FxHashSet::default();
    seen.insert(encode_point_exact(&state.iterate, fmt)?.bits());
    let mut out = Vec::with_capacity(wanted);

    let mut consider = |z: Vec<u64>, out: &mut Vec<SearchCandidate>| -> Result<()> {
        let point = mesh_point(state, basis, &z)?;
        match encode_point_exact(&point, fmt) {
            Ok(bits) => {
                if seen.insert(bits.bits()) {
                    out.push(SearchCandidate { z, point, bits });
                }
                Ok(())
            }
            Err(Error::CoordinateEncoding { source, .. }) if matches!(*source, Error::Overflow { .. }) => Ok(()),
            Err(e) => Err(e),
        }
    };

    if z_max > 0 {
        for _ in 0..8 * wanted {
            if out.len() == wanted {
                break;
            }
            let z: Vec<u64> = (0..p).map(|_| rng.gen_range(0..=z_max)).collect();
            if z.iter().all(|&v| v == 0) {
                continue;
            }
            consider(z, &mut out)?;
        }
        let mut level = 1;
        while out.len() < wanted && level <= p as u64 * z_max {
            let mut z = vec![0u64; p];
            for_each_bounded_composition(&mut z, 0, level, z_max, &mut |z| {
                if out.len() < wanted {
                    consider(z.to_vec(), &mut out)?;
                }
                Ok(())
            })?;
            level += 1;
        }
    }

    if out.len() < wanted {
        return Err(Error::MeshExhausted {
            requested: wanted,
            available: out.len(),
        });
    }
    Ok(out)
}

/// Visits every `z` with `z[i] <= cap` and `sum(z[pos..]) == remaining`.
fn for_each_bounded_composition(
    z: &mut [u64],
    pos: usize,
    remaining: u64,
    cap: u64,
    visit: &mut dyn FnMut(&[u64]) -> Result<()>,
) -> Result<()> {
    if pos == z.len() - 1 {
        if remaining <= cap {
            z[pos] = remaining;
            visit(z)?;
            z[pos] = 0;
        }
        return Ok(());
    }
    for v in 0..=remaining.min(cap) {
        z[pos] = v;
        for_each_bounded_composition(z, pos + 1, remaining - v, cap, visit)?;
    }
    z[pos] = 0;
    Ok(())
}

/// Moves to an improved point and expands, or stays and contracts.
pub fn update_mesh(state: &MeshState, improved: Option<&ImprovedPoint>, config: &GpsConfig) -> MeshState {
    match improved {
        Some(p) => MeshState {
            iterate: p.point.clone(),
            mesh_size: state.mesh_size * config.expansion_factor,
            incumbent_value: p.value,
            iteration: state.iteration + 1,
        },
        None => MeshState {
            iterate: state.iterate.clone(),
            mesh_size: state.mesh_size * config.contraction_factor,
            incumbent_value: state.incumbent_value,
            iteration: state.iteration + 1,
        },
    }
}
