//! Positive spanning test for direction matrices.
//!
//! Columns of `D` positively span R^n iff every `±e_i` is a non-negative
//! combination of them: any `v` then follows by combining the coordinate
//! cones. Cone membership is decided by enumerating linearly independent
//! column subsets for `n <= 3` and by a phase-one simplex otherwise.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const FEASIBILITY_TOL: f64 = 1e-9;

pub fn positive_spanning_check(d: &DMatrix<f64>) -> Result<bool> {
    let (n, p) = d.shape();
    if n == 0 || p == 0 {
        return Err(Error::DimensionMismatch(format!("direction matrix is {n}x{p}")));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::DimensionMismatch(
            "direction matrix has non-finite entries".into(),
        ));
    }
    if p < n + 1 {
        return Ok(false);
    }
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut probe = DVector::zeros(n);
            probe[i] = sign;
            let inside = if n <= 3 {
                cone_contains_enumerated(d, &probe)
            } else {
                cone_contains_lp(d, &probe)
            };
            if !inside {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Carathéodory: `v` is in the cone of `D` iff it is in the cone of some
/// linearly independent subset of at most `n` columns.
pub fn cone_contains_enumerated(d: &DMatrix<f64>, v: &DVector<f64>) -> bool {
    let (n, p) = d.shape();
    if v.norm() == 0.0 {
        return true;
    }
    let scale = 1.0 + v.norm();
    let mut subset = Vec::with_capacity(n);
    for k in 1..=n.min(p) {
        if subsets(p, k, &mut subset, 0, &mut |cols| {
            let sub = d.select_columns(cols);
            let gram = sub.transpose() * &sub;
            let Some(chol) = gram.clone().cholesky() else {
                return false;
            };
            if gram.determinant().abs() < 1e-12 {
                return false;
            }
            let lambda = chol.solve(&(sub.transpose() * v));
            let residual = (&sub * &lambda - v).norm();
            residual <= FEASIBILITY_TOL * scale && lambda.iter().all(|&l| l >= -FEASIBILITY_TOL)
        }) {
            return true;
        }
    }
    false
}

fn subsets(
    p: usize,
    k: usize,
    current: &mut Vec<usize>,
    start: usize,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if current.len() == k {
        return visit(current);
    }
    for j in start..p {
        current.push(j);
        let hit = subsets(p, k, current, j + 1, visit);
        current.pop();
        if hit {
            return true;
        }
    }
    false
}

/// Phase-one simplex for `D lambda = v, lambda >= 0` with Bland's rule.
pub fn cone_contains_lp(d: &DMatrix<f64>, v: &DVector<f64>) -> bool {
    let (m, p) = d.shape();
    let cols = p + m + 1;
    let rhs = p + m;
    let mut t = DMatrix::<f64>::zeros(m + 1, cols);
    let mut basis: Vec<usize> = (p..p + m).collect();
    for i in 0..m {
        let sign = if v[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..p {
            t[(i, j)] = sign * d[(i, j)];
        }
        t[(i, p + i)] = 1.0;
        t[(i, rhs)] = sign * v[i];
    }
    // reduced costs of the artificial-sum objective
    for j in (0..p).chain(std::iter::once(rhs)) {
        t[(m, j)] = -(0..m).map(|i| t[(i, j)]).sum::<f64>();
    }

    let eps = 1e-12;
    while let Some(enter) = (0..p + m).find(|&j| t[(m, j)] < -eps) {
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[(i, enter)] > eps {
                let ratio = t[(i, rhs)] / t[(i, enter)];
                leave = match leave {
                    None => Some(i),
                    Some(r) => {
                        let best = t[(r, rhs)] / t[(r, enter)];
                        if ratio < best - eps || ((ratio - best).abs() <= eps && basis[i] < basis[r]) {
                            Some(i)
                        } else {
                            Some(r)
                        }
                    }
                };
            }
        }
        let Some(row) = leave else {
            break;
        };
        let pivot = t[(row, enter)];
        for j in 0..cols {
            t[(row, j)] /= pivot;
        }
        for i in 0..=m {
            if i != row {
                let factor = t[(i, enter)];
                if factor != 0.0 {
                    for j in 0..cols {
                        t[(i, j)] -= factor * t[(row, j)];
                    }
                }
            }
        }
        basis[row] = enter;
    }
    -t[(m, rhs)] <= FEASIBILITY_TOL * (1.0 + v.norm())
}
