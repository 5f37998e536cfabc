//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Dense `-Δ - diag(f)` on a circle of circumference `length`, assembled
/// entry by entry, and its full eigen-decomposition (ascending).
pub fn dense_circle_spectrum(f: &[f64], length: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = f.len();
    let h = length / n as f64;
    let inv = 1.0 / (h * h);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0 * inv - f[i];
        a[(i, (i + 1) % n)] -= inv;
        a[(i, (i + n - 1) % n)] -= inv;
    }
    sorted(SymmetricEigen::new(a))
}

/// Dense Dirichlet operator on the interior nodes of an interval of `n` points.
pub fn dense_interval_spectrum(f: &[f64], length: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = f.len();
    let h = length / (n - 1) as f64;
    let inv = 1.0 / (h * h);
    let m = n - 2;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = 2.0 * inv - f[i + 1];
        if i > 0 {
            a[(i, i - 1)] = -inv;
        }
        if i + 1 < m {
            a[(i, i + 1)] = -inv;
        }
    }
    sorted(SymmetricEigen::new(a))
}

fn sorted(eig: SymmetricEigen<f64, nalgebra::Dyn>) -> (Vec<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Least-squares slope of `ln v` against `t`, negated.
pub fn decay_rate(samples: &[(f64, f64)]) -> f64 {
    let m = samples.len() as f64;
    let tm = samples.iter().map(|s| s.0).sum::<f64>() / m;
    let ym = samples.iter().map(|s| s.1.ln()).sum::<f64>() / m;
    let sxy: f64 = samples.iter().map(|s| (s.0 - tm) * (s.1.ln() - ym)).sum();
    let sxx: f64 = samples.iter().map(|s| (s.0 - tm).powi(2)).sum();
    -sxy / sxx
}

/// `log2(coarse / fine)`.
pub fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
