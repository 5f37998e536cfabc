//! Spectral theory of the leafwise Schrödinger operator `𝓗 = -Δ - f`.
//!
//! The operator is discretized with the same three-point stencil as
//! [`crate::fiber::laplacian`]: periodic on a circle, homogeneous Dirichlet on
//! an interval (only interior nodes are unknowns). The lowest eigenpairs are
//! found by shifted block inverse iteration with Rayleigh-Ritz projection;
//! the shift `-max f - min(1, 1/h²)` lies strictly below the spectrum, so every shifted
//! solve is a diagonally dominant (cyclic) tridiagonal system.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FlowError, Result};
use crate::fiber::{ensure_same_grid, integrate, FiberGrid, ScalarField};
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};

const MAX_ITERATIONS: usize = 5000;
/// Seed of the start block used by [`ground_state`] and [`spectrum`].
pub const DEFAULT_SEED: u64 = 0x5eed_f01f;

/// Discrete `-Δ - diag(f)` acting on the unknown nodes of a fiber.
#[derive(Debug, Clone)]
pub struct SchrodingerOperator {
    grid: FiberGrid,
    potential: ScalarField,
    diag: Vec<f64>,
    off: f64,
}

pub fn assemble_operator(f: &ScalarField) -> SchrodingerOperator {
    let grid = *f.grid();
    let h2 = grid.spacing() * grid.spacing();
    let active: &[f64] = if grid.is_periodic() {
        f.values()
    } else {
        &f.values()[1..grid.n_points() - 1]
    };
    SchrodingerOperator {
        grid,
        potential: f.clone(),
        diag: active.iter().map(|v| 2.0 / h2 - v).collect(),
        off: -1.0 / h2,
    }
}

impl SchrodingerOperator {
    pub fn grid(&self) -> &FiberGrid {
        &self.grid
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    /// Number of unknowns.
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diagonal(&self) -> f64 {
        self.off
    }

    pub fn is_periodic(&self) -> bool {
        self.grid.is_periodic()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        debug_assert_eq!(n, self.dim());
        let periodic = self.is_periodic();
        (0..n)
            .map(|i| {
                let left = if i > 0 {
                    v[i - 1]
                } else if periodic {
                    v[n - 1]
                } else {
                    0.0
                };
                let right = if i + 1 < n {
                    v[i + 1]
                } else if periodic {
                    v[0]
                } else {
                    0.0
                };
                self.diag[i] * v[i] + self.off * (left + right)
            })
            .collect()
    }

    /// Row-major dense matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i > 0 {
                m[i][i - 1] = self.off;
            }
            if i + 1 < n {
                m[i][i + 1] = self.off;
            }
        }
        if self.is_periodic() {
            m[0][n - 1] += self.off;
            m[n - 1][0] += self.off;
        }
        m
    }

    /// `‖A‖∞`.
    pub fn norm_inf(&self) -> f64 {
        self.diag.iter().map(|d| d.abs()).fold(0.0, f64::max) + 2.0 * self.off.abs()
    }

    /// Solves `(A - σ I) x = rhs`.
    pub fn solve_shifted(&self, sigma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let lower = vec![self.off; n];
        let upper = vec![self.off; n];
        let diag: Vec<f64> = self.diag.iter().map(|d| d - sigma).collect();
        if self.is_periodic() {
            solve_cyclic_tridiagonal(&lower, &diag, &upper, rhs)
        } else {
            solve_tridiagonal(&lower, &diag, &upper, rhs)
        }
    }

    /// Field on the full grid from unknowns (zero Dirichlet ends on an interval).
    pub fn embed(&self, v: &[f64]) -> Result<ScalarField> {
        if self.is_periodic() {
            ScalarField::new(self.grid, v.to_vec())
        } else {
            let mut full = Vec::with_capacity(v.len() + 2);
            full.push(0.0);
            full.extend_from_slice(v);
            full.push(0.0);
            ScalarField::new(self.grid, full)
        }
    }

    pub fn restrict<'a>(&self, u: &'a ScalarField) -> &'a [f64] {
        if self.is_periodic() {
            u.values()
        } else {
            &u.values()[1..self.grid.n_points() - 1]
        }
    }

    /// `𝓗u` on the full grid (zero at Dirichlet ends).
    pub fn apply_field(&self, u: &ScalarField) -> Result<ScalarField> {
        ensure_same_grid(u.grid(), &self.grid)?;
        self.embed(&self.apply(self.restrict(u)))
    }

    /// Rayleigh quotient `(u, 𝓗u) / (u, u)`.
    pub fn rayleigh_quotient(&self, u: &ScalarField) -> Result<f64> {
        ensure_same_grid(u.grid(), &self.grid)?;
        let v = self.restrict(u);
        let av = self.apply(v);
        let num: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().map(|a| a * a).sum();
        if den == 0.0 {
            return Err(FlowError::InvalidInput("zero field has no Rayleigh quotient".into()));
        }
        Ok(num / den)
    }

    /// A shift strictly below the spectrum: `-max f - δ` with `δ = min(1, 1/h²)`,
    /// so that very coarse grids (tiny eigenvalue spacings) still separate.
    pub fn safe_shift(&self) -> f64 {
        let h = self.grid.spacing();
        -self.potential.max() - (1.0 / (h * h)).min(1.0)
    }
}

/// Smallest eigenpair and the next eigenvalue (counted with multiplicity).
#[derive(Debug, Clone)]
pub struct GroundState {
    pub lambda0: f64,
    /// Positive, unit discrete L² norm.
    pub e0: ScalarField,
    pub lambda1: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal in the discrete L² product.
    pub eigenfunctions: Vec<ScalarField>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

pub fn ground_state(f: &ScalarField) -> Result<GroundState> {
    ground_state_seeded(f, DEFAULT_SEED)
}

/// As [`ground_state`], with the random start block drawn from `seed`.
pub fn ground_state_seeded(f: &ScalarField, seed: u64) -> Result<GroundState> {
    let op = assemble_operator(f);
    if op.dim() < 2 {
        return Err(FlowError::InvalidGrid("need at least two unknowns".into()));
    }
    let (values, vectors) = lowest_eigenpairs(&op, 2, seed)?;
    let h = op.grid.spacing();
    let mut e0 = vectors[0].clone();
    if e0.iter().sum::<f64>() < 0.0 {
        e0.iter_mut().for_each(|v| *v = -*v);
    }
    let scale = 1.0 / h.sqrt();
    e0.iter_mut().for_each(|v| *v *= scale);
    let (index, min) = e0
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (j, v)| if v < acc.1 { (j, v) } else { acc });
    if min <= 0.0 {
        return Err(FlowError::NonPositiveField { min, index });
    }
    let e0 = op.embed(&e0)?;
    Ok(GroundState {
        lambda0: values[0],
        e0,
        lambda1: values[1],
        gap: values[1] - values[0],
    })
}

/// First `m` eigenpairs in ascending order.
pub fn spectrum(f: &ScalarField, m: usize) -> Result<SpectralDecomposition> {
    spectrum_seeded(f, m, DEFAULT_SEED)
}

pub fn spectrum_seeded(f: &ScalarField, m: usize, seed: u64) -> Result<SpectralDecomposition> {
    let op = assemble_operator(f);
    if m == 0 || m > op.dim() {
        return Err(FlowError::InvalidInput(format!(
            "requested {m} eigenpairs from an operator of dimension {}",
            op.dim()
        )));
    }
    let (values, vectors) = lowest_eigenpairs(&op, m, seed)?;
    let scale = 1.0 / op.grid.spacing().sqrt();
    let eigenfunctions = vectors
        .into_iter()
        .enumerate()
        .map(|(i, mut v)| {
            let flip = if i == 0 {
                v.iter().sum::<f64>() < 0.0
            } else {
                let lead = v
                    .iter()
                    .copied()
                    .fold(0.0f64, |acc, x| if x.abs() > acc.abs() * (1.0 + 1e-9) { x } else { acc });
                lead < 0.0
            };
            let s = if flip { -scale } else { scale };
            v.iter_mut().for_each(|x| *x *= s);
            op.embed(&v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralDecomposition {
        eigenvalues: values,
        eigenfunctions,
    })
}

/// Coefficients `c_n = (u, e_n)`.
pub fn expand(u: &ScalarField, dec: &SpectralDecomposition) -> Result<Vec<f64>> {
    dec.eigenfunctions.iter().map(|e| u.inner(e)).collect()
}

/// Partial sum `Σ_{n<m} c_n e_n`.
pub fn reconstruct(coefficients: &[f64], dec: &SpectralDecomposition) -> Result<ScalarField> {
    let first = dec
        .eigenfunctions
        .first()
        .ok_or_else(|| FlowError::InvalidInput("empty decomposition".into()))?;
    let mut acc = vec![0.0; first.len()];
    for (c, e) in coefficients.iter().zip(&dec.eigenfunctions) {
        for (a, v) in acc.iter_mut().zip(e.values()) {
            *a += c * v;
        }
    }
    ScalarField::new(*first.grid(), acc)
}

/// `#{λ_n ≤ lam}` among the resolved eigenvalues.
pub fn eigencount(dec: &SpectralDecomposition, lam: f64) -> usize {
    dec.eigenvalues.iter().filter(|&&l| l <= lam).count()
}

/// Weyl constant `θ` of `𝒩(λ) ≈ θ √λ` for a one-dimensional fiber:
/// `L/π` on a circle or an interval of length `L`.
pub fn weyl_constant(grid: &FiberGrid) -> f64 {
    grid.length() / std::f64::consts::PI
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram-Schmidt, applied twice.
fn orthonormalize(vectors: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..vectors.len() {
            let (done, rest) = vectors.split_at_mut(i);
            let v = &mut rest[0];
            for q in done.iter() {
                let c = dot(q, v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            let norm = dot(v, v).sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }
}

/// Block inverse iteration with Rayleigh-Ritz; returns Euclidean-orthonormal vectors.
fn lowest_eigenpairs(op: &SchrodingerOperator, m: usize, seed: u64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = op.dim();
    let block = (2 * m).max(m + 4).min(dim);
    let sigma = op.safe_shift();
    let floor = 16.0 * f64::EPSILON * op.norm_inf();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut basis);

    let mut ritz = vec![0.0; block];
    for iteration in 0..MAX_ITERATIONS {
        if block < dim {
            for v in basis.iter_mut() {
                *v = op.solve_shifted(sigma, v)?;
            }
            orthonormalize(&mut basis);
        }
        let images: Vec<Vec<f64>> = basis.iter().map(|v| op.apply(v)).collect();
        let mut projected = vec![vec![0.0; block]; block];
        for i in 0..block {
            for j in i..block {
                let s = dot(&basis[i], &images[j]);
                projected[i][j] = s;
                projected[j][i] = s;
            }
        }
        let (theta, y) = jacobi_eigen(projected);
        let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..block)
                .map(|k| {
                    let mut out = vec![0.0; dim];
                    for (i, v) in src.iter().enumerate() {
                        let c = y[i][k];
                        out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
                    }
                    out
                })
                .collect()
        };
        basis = rotate(&basis);
        let images = rotate(&images);
        ritz.clone_from(&theta);

        let converged = (0..m).all(|k| {
            let r: f64 = images[k]
                .iter()
                .zip(&basis[k])
                .map(|(a, v)| (a - theta[k] * v).powi(2))
                .sum::<f64>()
                .sqrt();
            r <= (1e-11 * (theta[k].abs() + 1.0)).max(floor)
        });
        if converged || block == dim {
            let _ = iteration;
            basis.truncate(m);
            return Ok((theta[..m].to_vec(), basis));
        }
    }
    Err(FlowError::ConvergenceFailure {
        iterations: MAX_ITERATIONS,
        ritz: ritz[..m.min(ritz.len())].to_vec(),
    })
}

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix.
/// Returns ascending eigenvalues and the eigenvector matrix (columns).
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n)
        .map(|r| order.iter().map(|&c| v[r][c]).collect())
        .collect();
    (values, vectors)
}

/// Discrete L² Gram matrix of the eigenfunctions.
pub fn gram_matrix(dec: &SpectralDecomposition) -> Result<Vec<Vec<f64>>> {
    dec.eigenfunctions
        .iter()
        .map(|a| dec.eigenfunctions.iter().map(|b| a.inner(b)).collect())
        .collect()
}

/// `‖𝓗e - λe‖` in the discrete L² norm.
pub fn eigen_residual(op: &SchrodingerOperator, lambda: f64, e: &ScalarField) -> Result<f64> {
    let he = op.apply_field(e)?;
    let r = he.zip_with(e, |a, b| a - lambda * b)?;
    Ok(r.l2_norm())
}

/// Mean of `u` over the fiber, for unit-mean comparisons.
pub fn fiber_mean(u: &ScalarField) -> f64 {
    integrate(u) / u.grid().length()
}
