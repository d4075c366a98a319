//! Generalized pattern search: mesh, poll, search-point selection, and the
//! outer iteration.

mod gps;
mod mesh;
mod spanning;

pub use gps::{
    gps_run, gps_run_with_events, Backend, GpsConfig, GpsRun, IterationOutcome, IterationRecord, Termination,
};
pub use mesh::{
    classical_search_step, mesh_point, poll_set, poll_step, select_search_points, update_mesh, ImprovedPoint,
    MeshState, PollOutcome, SearchCandidate, SearchOutcome,
};
pub use spanning::{cone_contains_enumerated, cone_contains_lp, positive_spanning_check};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Generating matrix `G`, integer pattern `Z`, and directions `D = G Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternBasis {
    generator: DMatrix<f64>,
    pattern: DMatrix<i64>,
    directions: DMatrix<f64>,
}

impl PatternBasis {
    pub fn new(generator: DMatrix<f64>, pattern: DMatrix<i64>) -> Result<Self> {
        let n = generator.nrows();
        if n == 0 || generator.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "generating matrix must be square, got {}x{}",
                generator.nrows(),
                generator.ncols()
            )));
        }
        if pattern.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "pattern has {} rows, expected {n}",
                pattern.nrows()
            )));
        }
        let det = generator.determinant();
        if det.is_nan() || det.abs() <= 1e-12 {
            return Err(Error::SingularGenerator(det.abs()));
        }
        let directions = &generator * pattern.map(|z| z as f64);
        if !positive_spanning_check(&directions)? {
            return Err(Error::NotPositiveSpanning(n));
        }
        Ok(Self {
            generator,
            pattern,
            directions,
        })
    }

    /// `G = I`, `Z = [I, -I]`.
    pub fn standard(dimension: usize) -> Result<Self> {
        let n = dimension;
        let pattern = DMatrix::from_fn(n, 2 * n, |i, j| {
            if j == i {
                1
            } else if j == n + i {
                -1
            } else {
                0
            }
        });
        Self::new(DMatrix::identity(n, n), pattern)
    }

    pub fn dimension(&self) -> usize {
        self.generator.nrows()
    }

    /// Number of directions `p`.
    pub fn len(&self) -> usize {
        self.directions.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.ncols() == 0
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn pattern(&self) -> &DMatrix<i64> {
        &self.pattern
    }

    pub fn directions(&self) -> &DMatrix<f64> {
        &self.directions
    }

    pub fn direction(&self, j: usize) -> Vec<f64> {
        self.directions.column(j).iter().copied().collect()
    }
}
