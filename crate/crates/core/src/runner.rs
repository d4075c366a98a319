//! Config-driven experiment runner behind the `qgps` binary.
//!
//! Traces and reports are line-delimited JSON. Every line carries a `record`
//! tag:
//!
//! * `iteration`: `seed`, `k`, `x`, `f`, `mesh_size`, `outcome`,
//!   `classical_calls`, `quantum_calls`, `qsearch_rounds` (cumulative).
//! * `summary`: `seed`, `final_point`, `final_value`, `final_mesh_size`,
//!   `iterations`, `termination`, `ledger`, and the resolved `config`.
//! * `comparison-row` / `comparison-summary` for `compare`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplification::{analytic_success_probability, apply_q, desired_probability, QSearchParams};
use crate::error::{Error, Result};
use crate::ledger::OracleLedger;
use crate::objectives::objective_by_name;
use crate::pattern::{gps_run, Backend, GpsConfig, GpsRun, IterationOutcome, PatternBasis, Termination};
use crate::search_step::{
    compare_backends, planted_comparison, planted_problem, ComparisonReport, ComparisonRow, ComparisonSummary,
};
use crate::seeds::{derive_rng, STREAM_DEMO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Classical,
    Quantum,
}

/// Planted single-register experiment for `compare`: `points` candidates of
/// which `marked` improve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSetup {
    pub points: usize,
    pub marked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub objective: String,
    pub dimension: usize,
    /// Defaults to 3 in every coordinate.
    pub initial_point: Option<Vec<f64>>,
    pub backend: BackendKind,
    /// Drives point selection and QSearch. Trial `i` uses `seed + i`.
    pub seed: u64,
    pub trials: usize,
    pub output: Option<String>,
    pub gps: GpsConfig,
    pub qsearch: QSearchParams,
    pub planted: Option<PlantedSetup>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            objective: "sphere".into(),
            dimension: 2,
            initial_point: None,
            backend: BackendKind::Quantum,
            seed: 0,
            trials: 1,
            output: None,
            gps: GpsConfig::default(),
            qsearch: QSearchParams::default(),
            planted: None,
        }
    }
}

impl RunConfig {
    /// Parses TOML; errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Fills defaults, pushes `seed` into the sections and validates.
    pub fn resolve(&self) -> Result<Self> {
        for (key, v) in [
            ("gps.rng_seed", self.gps.rng_seed),
            ("qsearch.rng_seed", self.qsearch.rng_seed),
        ] {
            if v != 0 && v != self.seed {
                return Err(Error::Config(format!(
                    "{key} = {v} conflicts with seed = {}; set the top-level `seed` only",
                    self.seed
                )));
            }
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.seed.checked_add(self.trials as u64 - 1).is_none() {
            return Err(Error::Config("seed + trials overflows".into()));
        }
        objective_by_name(&self.objective, self.dimension)?;
        let mut out = self.clone();
        out.gps.rng_seed = self.seed;
        out.qsearch.rng_seed = self.seed;
        let x0 = out.initial_point.get_or_insert_with(|| vec![3.0; self.dimension]);
        if x0.len() != self.dimension {
            return Err(Error::Config(format!(
                "initial_point has {} coordinates, dimension is {}",
                x0.len(),
                self.dimension
            )));
        }
        out.gps.validate()?;
        out.qsearch.validate()?;
        if let Some(p) = out.planted {
            if p.points == 0 || p.marked > p.points {
                return Err(Error::Config(format!(
                    "planted needs 0 <= marked <= points and points >= 1, got {} of {}",
                    p.marked, p.points
                )));
            }
        }
        Ok(out)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials as u64).map(|i| self.seed + i).collect()
    }

    fn for_seed(&self, seed: u64) -> (GpsConfig, Backend) {
        let gps = GpsConfig {
            rng_seed: seed,
            ..self.gps.clone()
        };
        let backend = match self.backend {
            BackendKind::Classical => Backend::Classical,
            BackendKind::Quantum => Backend::Quantum(self.qsearch.with_seed(seed)),
        };
        (gps, backend)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum TraceRecord {
    Iteration {
        seed: u64,
        k: u64,
        x: Vec<f64>,
        f: f64,
        mesh_size: f64,
        outcome: IterationOutcome,
        classical_calls: u64,
        quantum_calls: u64,
        qsearch_rounds: u64,
    },
    Summary {
        seed: u64,
        final_point: Vec<f64>,
        final_value: f64,
        final_mesh_size: f64,
        iterations: u64,
        termination: Termination,
        ledger: OracleLedger,
        config: Box<RunConfig>,
    },
}

/// Trace records for one finished run, summary last.
pub fn trace_records(seed: u64, run: &GpsRun, config: &RunConfig) -> Vec<TraceRecord> {
    let mut out: Vec<TraceRecord> = run
        .records
        .iter()
        .map(|r| TraceRecord::Iteration {
            seed,
            k: r.iteration,
            x: r.iterate.clone(),
            f: r.value,
            mesh_size: r.mesh_size,
            outcome: r.outcome,
            classical_calls: r.ledger_snapshot.classical_calls,
            quantum_calls: r.ledger_snapshot.quantum_calls,
            qsearch_rounds: r.ledger_snapshot.qsearch_rounds,
        })
        .collect();
    let resolved = RunConfig {
        seed,
        trials: 1,
        output: None,
        gps: GpsConfig {
            rng_seed: seed,
            ..config.gps.clone()
        },
        qsearch: config.qsearch.with_seed(seed),
        ..config.clone()
    };
    out.push(TraceRecord::Summary {
        seed,
        final_point: run.final_state.iterate.clone(),
        final_value: run.final_state.incumbent_value,
        final_mesh_size: run.final_state.mesh_size,
        iterations: run.final_state.iteration,
        termination: run.termination,
        ledger: run.ledger,
        config: Box::new(resolved),
    });
    out
}

/// Runs GPS once per seed and returns the runs in seed order.
pub fn run_trials(config: &RunConfig) -> Result<Vec<(u64, GpsRun)>> {
    let config = config.resolve()?;
    let basis = PatternBasis::standard(config.dimension)?;
    let x0 = config.initial_point.clone().expect("resolved");
    config
        .seeds()
        .into_par_iter()
        .map(|seed| {
            let objective = objective_by_name(&config.objective, config.dimension)?;
            let (gps, backend) = config.for_seed(seed);
            Ok((seed, gps_run(objective.as_ref(), &basis, &gps, &backend, &x0)?))
        })
        .collect()
}

/// `run` subcommand: writes the JSONL trace to `path`.
pub fn run(config: &RunConfig, path: &Path) -> Result<Vec<(u64, GpsRun)>> {
    let resolved = config.resolve()?;
    let runs = run_trials(&resolved)?;
    let records = runs.iter().flat_map(|(seed, run)| trace_records(*seed, run, &resolved));
    write_jsonl(path, records)?;
    Ok(runs)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in records {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::Config(e.to_string()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplifyRow {
    pub j: u64,
    pub analytic: f64,
    /// Desired probability read off the simulated state.
    pub simulated: f64,
    pub empirical: f64,
    pub abs_error: f64,
    /// Binomial standard error of `empirical` under `analytic`.
    pub sigma: f64,
}

/// Applies `Q` to `j = 0..=j_max` on a planted problem and measures
/// `trials` times at each `j`.
pub fn demo_amplify(n_points: u64, marked: u64, j_max: u64, trials: u64, seed: u64) -> Result<Vec<AmplifyRow>> {
    if !n_points.is_power_of_two() {
        return Err(Error::Domain(format!("N must be a power of 2, got {n_points}")));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let problem = planted_problem(n_points as usize, marked as usize, seed)?;
    let layout = *problem.layout();
    let mut ledger = OracleLedger::new();
    let mut state = problem.prepare(&mut ledger)?;
    let mut rows = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        if j > 0 {
            apply_q(&mut state, &problem, &mut ledger)?;
        }
        let analytic = analytic_success_probability(n_points, marked, j)?;
        let sampler = state.sampler()?;
        let mut rng = derive_rng(seed, STREAM_DEMO, j);
        let hits = (0..trials)
            .filter(|_| layout.comparison_negative(sampler.sample(&mut rng).bits()))
            .count();
        let empirical = hits as f64 / trials as f64;
        rows.push(AmplifyRow {
            j,
            analytic,
            simulated: desired_probability(&state, &layout),
            empirical,
            abs_error: (empirical - analytic).abs(),
            sigma: (analytic * (1.0 - analytic) / trials as f64).sqrt(),
        });
    }
    Ok(rows)
}

pub fn format_amplify_table(rows: &[AmplifyRow]) -> String {
    let mut s = format!(
        "{:>4}  {:>10}  {:>10}  {:>10}\n",
        "j", "analytic", "empirical", "abs_err"
    );
    for r in rows {
        s += &format!(
            "{:>4}  {:>10.6}  {:>10.6}  {:>10.2e}\n",
            r.j, r.analytic, r.empirical, r.abs_error
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum ReportRecord {
    ComparisonRow(ComparisonRow),
    ComparisonSummary {
        #[serde(flatten)]
        summary: ComparisonSummary,
        config: Box<RunConfig>,
    },
}

/// Runs both backends over the configured seeds. Uses the planted setup
/// when present, otherwise one search step of the configured objective at
/// the initial point.
pub fn compare(config: &RunConfig) -> Result<ComparisonReport> {
    let config = config.resolve()?;
    let seeds = config.seeds();
    match config.planted {
        Some(p) => planted_comparison(p.points, p.marked, &config.qsearch, &seeds),
        None => {
            let objective = objective_by_name(&config.objective, config.dimension)?;
            let basis = PatternBasis::standard(config.dimension)?;
            let x0 = config.initial_point.as_deref().expect("resolved");
            compare_backends(objective.as_ref(), &basis, &config.gps, &config.qsearch, x0, &seeds)
        }
    }
}

pub fn write_report(path: &Path, report: &ComparisonReport, config: &RunConfig) -> Result<()> {
    let resolved = RunConfig {
        output: None,
        ..config.resolve()?
    };
    let rows = report.rows.iter().cloned().map(ReportRecord::ComparisonRow);
    let summary = ReportRecord::ComparisonSummary {
        summary: report.summary.clone(),
        config: Box::new(resolved),
    };
    write_jsonl(path, rows.chain(std::iter::once(summary)))
}

pub fn format_summary(s: &ComparisonSummary) -> String {
    format!(
        "trials {}  N {}  mean marked {:.2}\n\
         classical: mean calls {:.2}, success {:.3}\n\
         quantum:   mean calls {:.2}, success {:.3}, miss rate {:.4} (tau {})\n\
         quantum calls / sqrt(N/t): {:.3}\n",
        s.trials,
        s.points,
        s.mean_marked,
        s.mean_classical_calls,
        s.classical_success_rate,
        s.mean_quantum_calls,
        s.quantum_success_rate,
        s.quantum_miss_rate,
        s.tau,
        s.quantum_calls_per_sqrt_n_over_t,
    )
}
