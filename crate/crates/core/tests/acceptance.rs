//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints a PASS/FAIL line; exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qgps::amplification::{apply_q, desired_probability, modified_qsearch, QSearchParams, SearchProblem};
use qgps::events::{EvaluationPhase, Event};
use qgps::fixedpoint::{decode_raw, encode_exact, negate_bits, BitString, FixedPointFormat};
use qgps::ledger::OracleLedger;
use qgps::objectives::{objective_by_name, objective_names};
use qgps::pattern::{gps_run_with_events, Backend, GpsConfig, GpsRun, PatternBasis};
use qgps::quantum::{Operator, RegisterLayout, SparseState};
use qgps::runner::{trace_records, RunConfig};
use qgps::search_step::{planted_comparison, planted_problem};

type Check = Result<String, String>;
type StateOp<'a> = Box<dyn Fn(&mut SparseState) + 'a>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn closed_form(n: u64, t: u64, j: u64) -> f64 {
    let theta = ((t as f64) / (n as f64)).sqrt().asin();
    ((2 * j + 1) as f64 * theta).sin().powi(2)
}

fn c1_grover_exactness() -> Check {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [4u64, 16, 64] {
        for t in [0, 1, n / 4, n / 2] {
            let problem = planted_problem(n as usize, t as usize, 11).map_err(|e| e.to_string())?;
            let mut ledger = OracleLedger::new();
            let mut state = problem.prepare(&mut ledger).map_err(|e| e.to_string())?;
            for j in 0..=10u64 {
                if j > 0 {
                    apply_q(&mut state, &problem, &mut ledger).map_err(|e| e.to_string())?;
                }
                let err = (desired_probability(&state, problem.layout()) - closed_form(n, t, j)).abs();
                worst = worst.max(err);
                cases += 1;
                ensure(err <= 1e-9, || format!("N={n} t={t} j={j}: error {err:e}"))?;
            }
        }
    }
    Ok(format!("{cases} cases, max error {worst:.1e}"))
}

fn c2_stopping_bound() -> Check {
    let trials = 10_000u64;
    let problem = planted_problem(64, 1, 5).map_err(|e| e.to_string())?;
    let failures = (0..trials)
        .into_par_iter()
        .map(|seed| {
            let out = modified_qsearch(&problem, &QSearchParams::default().with_seed(seed)).unwrap();
            out.result.found().is_none() as u64
        })
        .sum::<u64>();
    let frac = failures as f64 / trials as f64;
    let bound = 0.01 + 3.0 * (0.01f64 * 0.99 / trials as f64).sqrt();
    ensure(frac <= bound, || format!("failure fraction {frac} > {bound:.4}"))?;
    Ok(format!("failure fraction {frac:.4} <= {bound:.4}"))
}

fn c3_finite_termination() -> Check {
    let problem = planted_problem(64, 0, 0).map_err(|e| e.to_string())?;
    // ceil(log_1.5 8) = 6, ceil(ln 0.01 / ln 0.75) = 17
    let bound = (8f64.ln() / 1.5f64.ln()).ceil() as u64 + (0.01f64.ln() / 0.75f64.ln()).ceil() as u64 + 1;
    ensure(bound == 24, || format!("bound formula gave {bound}"))?;
    for seed in 0..100 {
        let out = modified_qsearch(&problem, &QSearchParams::default().with_seed(seed)).map_err(|e| e.to_string())?;
        ensure(out.result.found().is_none(), || format!("seed {seed} found a point"))?;
        ensure(out.rounds_executed == 22, || {
            format!("seed {seed}: {} rounds", out.rounds_executed)
        })?;
        ensure(out.rounds_executed <= bound, || "bound exceeded".into())?;
        ensure(out.u_rounds == 17, || format!("seed {seed}: u = {}", out.u_rounds))?;
    }
    Ok(format!("100 seeds, 22 rounds each (bound {bound})"))
}

/// Exact expected quantum calls of modified QSearch with a planted set:
/// sums over rounds the survival probability times the mean round cost.
fn expected_calls(n: u64, t: u64, c: f64, tau: f64) -> f64 {
    let threshold = tau.ln() / 0.75f64.ln();
    let mut alive = 1.0 - closed_form(n, t, 0);
    let mut cost = 1.0;
    let (mut l, mut u) = (0i32, 0u64);
    while (u as f64) < threshold {
        l += 1;
        let m = c.powi(l).ceil() as u64;
        if m * m > n {
            u += 1;
        }
        let round_cost: f64 = (1..=m).map(|j| (1 + 2 * j) as f64).sum::<f64>() / m as f64;
        let miss: f64 = (1..=m).map(|j| 1.0 - closed_form(n, t, j)).sum::<f64>() / m as f64;
        cost += alive * round_cost;
        alive *= miss;
    }
    cost
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn c4_scaling() -> Check {
    let seeds: Vec<u64> = (0..1000).collect();
    let params = QSearchParams::default();
    let mut means = Vec::new();
    for t in [1usize, 4] {
        let report = planted_comparison(256, t, &params, &seeds).map_err(|e| e.to_string())?;
        let calls: Vec<f64> = report.rows.iter().map(|r| r.quantum_calls as f64).collect();
        let (mean, se) = mean_and_se(&calls);
        let exact = expected_calls(256, t as u64, params.c, params.tau);
        ensure((mean - exact).abs() <= 4.0 * se, || {
            format!("t={t}: sample mean {mean:.2} vs exact {exact:.2} (se {se:.2})")
        })?;
        means.push((mean, exact));
    }
    let ratio = means[0].0 / means[1].0;
    let exact_ratio = means[0].1 / means[1].1;
    ensure((1.4..=2.6).contains(&ratio), || format!("ratio {ratio:.3}"))?;
    Ok(format!(
        "means {:.2} / {:.2}, ratio {ratio:.3} (exact expectation {exact_ratio:.3})",
        means[0].0, means[1].0
    ))
}

fn c5_advantage() -> Check {
    let seeds: Vec<u64> = (0..500).collect();
    let report = planted_comparison(1024, 1, &QSearchParams::default(), &seeds).map_err(|e| e.to_string())?;
    let under = report.rows.iter().filter(|r| r.quantum_calls < 1024).count();
    let frac = under as f64 / report.rows.len() as f64;
    let s = &report.summary;
    ensure(frac >= 0.9, || format!("only {frac:.3} of trials under 1024 calls"))?;
    ensure(s.mean_quantum_calls < s.mean_classical_calls, || {
        format!(
            "quantum {} >= classical {}",
            s.mean_quantum_calls, s.mean_classical_calls
        )
    })?;
    ensure((s.mean_classical_calls - 512.5).abs() < 40.0, || {
        format!("classical mean {} far from 512.5", s.mean_classical_calls)
    })?;
    Ok(format!(
        "{:.1}% under 1024; quantum mean {:.1} < classical mean {:.1}",
        100.0 * frac,
        s.mean_quantum_calls,
        s.mean_classical_calls
    ))
}

fn start_point(seed: u64) -> Vec<f64> {
    (0..2).map(|i| ((seed * 7 + i * 3) % 11) as f64 - 5.0).collect()
}

fn check_trace(run: &GpsRun, events: &[Event], label: &str) -> Result<(), String> {
    // (a) incumbent values never increase
    let mut values: Vec<f64> = run.records.iter().map(|r| r.value).collect();
    values.push(run.final_state.incumbent_value);
    ensure(values.windows(2).all(|w| w[1] <= w[0]), || {
        format!("{label}: value increased")
    })?;

    // (c) the quantum counter only moves inside search steps
    let mut search_quantum = vec![0u64; run.records.len()];
    for e in events {
        if let Event::SearchStep {
            iteration,
            ledger_delta,
            ..
        } = e
        {
            search_quantum[*iteration as usize] += ledger_delta.quantum_calls;
        }
    }
    let mut prev = 0;
    for (r, q) in run.records.iter().zip(&search_quantum) {
        let delta = r.ledger_snapshot.quantum_calls - prev;
        ensure(delta == *q, || {
            format!("{label}: iteration {} quantum delta {delta} vs search {q}", r.iteration)
        })?;
        prev = r.ledger_snapshot.quantum_calls;
    }

    // (d) every candidate is x_k + delta_k * z for an integer z
    for e in events {
        if let Event::Evaluation {
            iteration,
            phase,
            point,
        } = e
        {
            if matches!(phase, EvaluationPhase::Initial) {
                continue;
            }
            let r = &run.records[*iteration as usize];
            for (p, x) in point.iter().zip(&r.iterate) {
                let z = (p - x) / r.mesh_size;
                ensure(z == z.round(), || {
                    format!("{label}: {point:?} off mesh at iteration {iteration} ({phase:?})")
                })?;
            }
        }
    }
    Ok(())
}

fn c6_gps_suite() -> Check {
    let basis = PatternBasis::standard(2).map_err(|e| e.to_string())?;
    let mut jobs = Vec::new();
    for name in objective_names() {
        for quantum in [false, true] {
            for seed in 0..50u64 {
                jobs.push((name, quantum, seed));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(name, quantum, seed)| -> Result<(bool, bool), String> {
            let objective = objective_by_name(name, 2).map_err(|e| e.to_string())?;
            let config = GpsConfig {
                rng_seed: seed,
                ..GpsConfig::default()
            };
            let backend = if quantum {
                Backend::Quantum(QSearchParams::default().with_seed(seed))
            } else {
                Backend::Classical
            };
            let x0 = start_point(seed);
            let mut events = Vec::new();
            let run = gps_run_with_events(objective.as_ref(), &basis, &config, &backend, &x0, &mut events)
                .map_err(|e| format!("{name} seed {seed}: {e}"))?;
            let label = format!("{name}/{}/seed {seed}", backend.name());
            check_trace(&run, &events, &label)?;
            let is_sphere_quantum = name == "sphere" && quantum;
            let norm = run.final_state.iterate.iter().map(|v| v * v).sum::<f64>().sqrt();
            let converged = norm <= 10.0 * config.mesh_size_tolerance && run.final_state.iteration <= 200;
            Ok((is_sphere_quantum, converged))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let sphere: Vec<bool> = results.iter().filter(|(s, _)| *s).map(|(_, c)| *c).collect();
    let rate = sphere.iter().filter(|c| **c).count() as f64 / sphere.len() as f64;
    ensure(rate >= 0.95, || format!("sphere quantum convergence rate {rate}"))?;
    Ok(format!(
        "{} traces monotone, poll steps quantum-free, candidates on mesh; sphere convergence {:.0}%",
        results.len(),
        100.0 * rate
    ))
}

fn c7_fixed_point() -> Result<(), String> {
    for d in 2..=12u32 {
        for q in 0..d {
            let fmt = FixedPointFormat::new(d, q).unwrap();
            for raw in 0..(1u128 << d) {
                let b = BitString::new(raw, d).unwrap();
                let v = decode_raw(&b, &fmt).unwrap();
                let x = v as f64 * fmt.step();
                ensure(encode_exact(x, &fmt).unwrap() == b, || {
                    format!("roundtrip {b} in Q{d}.{q}")
                })?;
                let neg = decode_raw(&negate_bits(&b), &fmt).unwrap();
                let expected = if v == -(1i64 << (d - 1)) { v } else { -v };
                ensure(neg == expected, || format!("negation of {b} in Q{d}.{q}"))?;
            }
        }
    }
    Ok(())
}

fn small_problem() -> SearchProblem {
    // 4-bit registers: points 1..=4 with values 3, -2, 5, 0 against incumbent 1
    let layout = RegisterLayout::new(4, 4, 4).unwrap();
    let fmt = FixedPointFormat::integer(4).unwrap();
    let enc = |v: f64| encode_exact(v, &fmt).unwrap();
    let points = (1..=4).map(|p| enc(p as f64)).collect();
    let values = [3.0, -2.0, 5.0, 0.0].into_iter().map(enc).collect();
    SearchProblem::from_values(layout, points, values, enc(1.0)).unwrap()
}

fn c7_unitarity() -> Result<(), String> {
    let problem = small_problem();
    let a = problem.build_a();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut inputs: Vec<u128> = (0..64).map(|_| rng.gen_range(0..1u128 << 12)).collect();
    inputs.push(0);
    inputs.sort_unstable();
    inputs.dedup();
    let images = |f: &dyn Fn(&mut SparseState)| -> Vec<SparseState> {
        inputs
            .iter()
            .map(|&k| {
                let mut s = SparseState::basis(BitString::new(k, 12).unwrap()).unwrap();
                f(&mut s);
                s
            })
            .collect()
    };
    let ops: [(&str, StateOp); 2] = [
        ("A", Box::new(|s: &mut SparseState| a.apply(s).unwrap())),
        (
            "Q",
            Box::new(|s: &mut SparseState| apply_q(s, &problem, &mut OracleLedger::new()).unwrap()),
        ),
    ];
    for (name, op) in ops {
        let imgs = images(op.as_ref());
        for i in 0..imgs.len() {
            for j in i..imgs.len() {
                let ip = imgs[i].inner(&imgs[j]);
                let expected = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                ensure((ip - expected).norm() <= 1e-9, || {
                    format!("{name}: <{}|{}> = {ip}", inputs[i], inputs[j])
                })?;
            }
        }
    }
    Ok(())
}

fn c7_inverse() -> Result<(), String> {
    for (n, t) in [(4, 1), (16, 3), (64, 0), (64, 32)] {
        let problem = planted_problem(n, t, 2).unwrap();
        let a = problem.build_a();
        let mut ledger = OracleLedger::new();
        let mut state = problem.prepare(&mut ledger).unwrap();
        for j in 0..4 {
            if j > 0 {
                apply_q(&mut state, &problem, &mut ledger).unwrap();
            }
            let mut round = state.clone();
            a.apply_inverse(&mut round).unwrap();
            a.apply(&mut round).unwrap();
            let overlap = state.inner(&round).norm();
            ensure((overlap - 1.0).abs() <= 1e-9, || {
                format!("N={n} t={t} j={j}: overlap {overlap}")
            })?;
        }
        let mut zero = SparseState::zero(problem.layout().total_bits()).unwrap();
        a.apply(&mut zero).unwrap();
        a.apply_inverse(&mut zero).unwrap();
        ensure(
            (zero.amplitude(0) - 1.0).norm() <= 1e-9 && zero.support_len() == 1,
            || format!("N={n} t={t}: A^-1 A |0> != |0>"),
        )?;
    }
    Ok(())
}

fn c7_born_rule() -> Result<(), String> {
    let draws = 100_000u64;
    let problem = planted_problem(16, 3, 9).unwrap();
    let mut ledger = OracleLedger::new();
    let mut state = problem.prepare(&mut ledger).unwrap();
    apply_q(&mut state, &problem, &mut ledger).unwrap();
    let layout = *problem.layout();

    let sampler = state.sampler().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(sampler.sample(&mut rng).bits()).or_insert(0u64) += 1;
    }
    for (key, amp) in state.entries() {
        let p = amp.norm_sqr();
        let freq = *counts.get(&key).unwrap_or(&0) as f64 / draws as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        ensure((freq - p).abs() <= 3.0 * sigma.max(1e-12), || {
            format!("outcome {key:#x}: freq {freq} vs p {p}")
        })?;
    }
    let p = closed_form(16, 3, 1);
    let hits: u64 = counts
        .iter()
        .filter(|(k, _)| layout.comparison_negative(**k))
        .map(|(_, c)| c)
        .sum();
    let freq = hits as f64 / draws as f64;
    let sigma = (p * (1.0 - p) / draws as f64).sqrt();
    ensure((freq - p).abs() <= 3.0 * sigma, || {
        format!("desired freq {freq} vs {p}")
    })?;
    Ok(())
}

fn c7_reproducibility() -> Result<(), String> {
    let cfg = RunConfig {
        seed: 7,
        ..RunConfig::default()
    }
    .resolve()
    .unwrap();
    let basis = PatternBasis::standard(2).unwrap();
    let objective = objective_by_name("sphere", 2).unwrap();
    let once = || {
        let mut events = Vec::new();
        let run = gps_run_with_events(
            objective.as_ref(),
            &basis,
            &GpsConfig {
                rng_seed: 7,
                ..cfg.gps.clone()
            },
            &Backend::Quantum(cfg.qsearch.with_seed(7)),
            &[3.0, 3.0],
            &mut events,
        )
        .unwrap();
        let trace: Vec<String> = trace_records(7, &run, &cfg)
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect();
        let events: Vec<String> = events.iter().map(|e| serde_json::to_string(e).unwrap()).collect();
        (trace, events)
    };
    let (a, b) = (once(), once());
    ensure(a == b, || "traces differ between identical runs".into())?;
    Ok(())
}

fn c7_unit_properties() -> Check {
    c7_fixed_point()?;
    c7_unitarity()?;
    c7_inverse()?;
    c7_born_rule()?;
    c7_reproducibility()?;
    Ok("fixed point d<=12, unitarity, inverse, Born rule at 1e5 draws, reproducible traces".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("Grover rotation exactness", c1_grover_exactness),
        ("stopping bound N=64 t=1", c2_stopping_bound),
        ("finite termination at t=0", c3_finite_termination),
        ("sqrt(N/t) scaling at N=256", c4_scaling),
        ("quantum vs classical at N=1024", c5_advantage),
        ("GPS correctness suite", c6_gps_suite),
        ("unit and property suites", c7_unit_properties),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
