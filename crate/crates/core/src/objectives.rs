//! Named objective functions and counted evaluation.

use crate::error::{Error, Result};
use crate::ledger::OracleLedger;

pub trait Objective: Send + Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, x: &[f64]) -> f64;
}

/// Evaluates `objective` at `x` as one classical oracle call.
pub fn evaluate_counted(objective: &dyn Objective, x: &[f64], ledger: &mut OracleLedger) -> Result<f64> {
    ledger.record_classical();
    evaluate_checked(objective, x)
}

/// Evaluates without touching any ledger; rejects non-finite values.
pub(crate) fn evaluate_checked(objective: &dyn Objective, x: &[f64]) -> Result<f64> {
    let value = objective.evaluate(x);
    if !value.is_finite() {
        return Err(Error::NonFiniteObjective {
            value,
            point: x.to_vec(),
        });
    }
    Ok(value)
}

/// `sum x_i^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sphere;

impl Objective for Sphere {
    fn name(&self) -> &str {
        "sphere"
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
}

/// Diagonal quadratic `sum w_i x_i^2` with weights spread geometrically from
/// 1 to `condition`.
#[derive(Debug, Clone)]
pub struct IllConditionedQuadratic {
    weights: Vec<f64>,
}

impl IllConditionedQuadratic {
    pub fn new(dimension: usize, condition: f64) -> Self {
        let weights = (0..dimension)
            .map(|i| {
                if dimension == 1 {
                    1.0
                } else {
                    condition.powf(i as f64 / (dimension - 1) as f64)
                }
            })
            .collect();
        Self { weights }
    }
}

impl Objective for IllConditionedQuadratic {
    fn name(&self) -> &str {
        "quadratic-cond100"
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.weights).map(|(v, w)| w * v * v).sum()
    }
}

/// Two-dimensional Rosenbrock, minimum 0 at (1, 1).
#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

impl Objective for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }
}

/// `sum floor(|x_i|)`: flat on the unit box, so search steps there find nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plateau;

impl Objective for Plateau {
    fn name(&self) -> &str {
        "step"
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs().floor()).sum()
    }
}

/// Registry entries as `(name, description)`.
pub const REGISTRY: &[(&str, &str)] = &[
    ("sphere", "sum of squares, minimum 0 at the origin"),
    (
        "quadratic-cond100",
        "diagonal quadratic with condition number 100 (n >= 2)",
    ),
    ("rosenbrock", "Rosenbrock banana, n = 2, minimum 0 at (1, 1)"),
    ("step", "sum of floor(|x_i|), plateau on the unit box"),
];

pub fn objective_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn objective_by_name(name: &str, dimension: usize) -> Result<Box<dyn Objective>> {
    if dimension == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    match name {
        "sphere" => Ok(Box::new(Sphere)),
        "quadratic-cond100" => Ok(Box::new(IllConditionedQuadratic::new(dimension, 100.0))),
        "rosenbrock" if dimension == 2 => Ok(Box::new(Rosenbrock)),
        "rosenbrock" => Err(Error::Config(format!(
            "rosenbrock is defined for n = 2, got n = {dimension}"
        ))),
        "step" => Ok(Box::new(Plateau)),
        _ => Err(Error::UnknownObjective {
            name: name.to_string(),
            available: objective_names().join(", "),
        }),
    }
}
