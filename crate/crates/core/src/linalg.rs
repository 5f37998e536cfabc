//! Tridiagonal and cyclic tridiagonal solvers.

use crate::error::{FlowError, Result};

const PIVOT_TOL: f64 = 1e-14;

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` (Thomas algorithm).
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    check_pivot(0, denom, diag[0].abs() + upper[0].abs())?;
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        check_pivot(i, denom, diag[i].abs() + lower[i].abs() + upper[i].abs())?;
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

fn check_pivot(row: usize, pivot: f64, scale: f64) -> Result<()> {
    if !pivot.is_finite() || pivot.abs() <= PIVOT_TOL * scale.max(f64::MIN_POSITIVE) {
        Err(FlowError::SolverSingular { row, pivot })
    } else {
        Ok(())
    }
}

/// Cyclic system: as [`solve_tridiagonal`] plus the corner couplings
/// `lower[0]` (row 0, column n-1) and `upper[n-1]` (row n-1, column 0).
/// Sherman-Morrison on top of two Thomas solves.
pub fn solve_cyclic_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert!(n >= 3);
    let alpha = upper[n - 1]; // A[n-1][0]
    let beta = lower[0]; // A[0][n-1]
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(lower, &bb, upper, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(lower, &bb, upper, &u)?;
    let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
    check_pivot(n, denom, 1.0)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / denom;
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}
