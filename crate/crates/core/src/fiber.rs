//! Discrete fibers and leafwise calculus.
//!
//! A fiber is either a closed curve (`Circle`, periodic) or a segment
//! (`Interval`, with end nodes included). Fields are sampled on a uniform
//! arc-length grid; all operators below are second-order finite differences
//! unless the Fourier mode is requested explicitly.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{FlowError, Result};

/// Smallest admissible number of grid nodes.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Circle,
    Interval,
}

/// Uniform discretization of one fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberGrid {
    topology: Topology,
    length: f64,
    n_points: usize,
    spacing: f64,
}

impl FiberGrid {
    pub fn new(topology: Topology, length: f64, n_points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(FlowError::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(FlowError::InvalidGrid(format!(
                "n_points must be at least {MIN_POINTS}, got {n_points}"
            )));
        }
        let spacing = match topology {
            Topology::Circle => length / n_points as f64,
            Topology::Interval => length / (n_points - 1) as f64,
        };
        Ok(Self {
            topology,
            length,
            n_points,
            spacing,
        })
    }

    pub fn circle(length: f64, n_points: usize) -> Result<Self> {
        Self::new(Topology::Circle, length, n_points)
    }

    pub fn interval(length: f64, n_points: usize) -> Result<Self> {
        Self::new(Topology::Interval, length, n_points)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Circle
    }

    /// Arc-length coordinate of node `j` (the first node sits at 0).
    pub fn coordinate(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.coordinate(j)).collect()
    }

    /// Same topology and length with a different node count.
    pub fn with_points(&self, n_points: usize) -> Result<Self> {
        Self::new(self.topology, self.length, n_points)
    }
}

/// Samples of a real function on a fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: FiberGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: FiberGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(FlowError::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(FlowError::InvalidInput(format!(
                "non-finite sample {} at node {j}",
                values[j]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: FiberGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.coordinates().into_iter().map(f).collect())
    }

    pub fn constant(grid: FiberGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.n_points()])
    }

    pub fn zeros(grid: FiberGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_points()],
        }
    }

    /// Internal constructor for values produced by finite arithmetic on finite inputs.
    pub(crate) fn from_raw(grid: FiberGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn grid(&self) -> &FiberGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum value and the node where it is attained.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, v)| if v < acc.1 { (j, v) } else { acc })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    /// `max_j |self_j - other_j|`.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn mean(&self) -> f64 {
        integrate(self) / self.grid.length()
    }

    /// Discrete L² inner product using the same quadrature as [`integrate`].
    pub fn inner(&self, other: &Self) -> Result<f64> {
        let prod = self.zip_with(other, |a, b| a * b)?;
        Ok(integrate(&prod))
    }

    pub fn l2_norm(&self) -> f64 {
        let sq = Self::from_raw(self.grid, self.values.iter().map(|v| v * v).collect());
        integrate(&sq).sqrt()
    }

    /// Rescale so that `integrate(u) = length` (unit mean).
    pub fn normalized_mean(&self) -> Result<Self> {
        let m = self.mean();
        if m == 0.0 {
            return Err(FlowError::InvalidInput("field has zero mean".into()));
        }
        Ok(self.scaled(1.0 / m))
    }
}

/// The single tangential component of a vector field along a one-dimensional fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorAlongFiber(ScalarField);

impl VectorAlongFiber {
    pub fn new(grid: FiberGrid, values: Vec<f64>) -> Result<Self> {
        ScalarField::new(grid, values).map(Self)
    }

    pub fn zeros(grid: FiberGrid) -> Self {
        Self(ScalarField::zeros(grid))
    }

    pub fn from_component(component: ScalarField) -> Self {
        Self(component)
    }

    pub fn component(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_component(self) -> ScalarField {
        self.0
    }

    pub fn grid(&self) -> &FiberGrid {
        self.0.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.0.sup_distance(&other.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.scaled(factor))
    }

    /// `|H|²` pointwise.
    pub fn norm_sq(&self) -> ScalarField {
        ScalarField::from_raw(*self.grid(), self.values().iter().map(|v| v * v).collect())
    }
}

pub(crate) fn ensure_same_grid(a: &FiberGrid, b: &FiberGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(FlowError::GridMismatch)
    }
}

/// How leafwise first derivatives are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Differentiation {
    /// Second-order centered differences (one-sided second order at interval ends).
    #[default]
    FiniteDifference,
    /// Spectral differentiation; circles only.
    Fourier,
}

impl Differentiation {
    /// Spectral on a circle, finite differences on an interval.
    pub fn preferred(grid: &FiberGrid) -> Self {
        if grid.is_periodic() {
            Differentiation::Fourier
        } else {
            Differentiation::FiniteDifference
        }
    }
}

/// Second-order first derivative along the fiber.
pub fn derivative(field: &ScalarField) -> ScalarField {
    let grid = *field.grid();
    let u = field.values();
    let n = u.len();
    let h = grid.spacing();
    let mut out = vec![0.0; n];
    match grid.topology() {
        Topology::Circle => {
            for j in 0..n {
                let next = u[(j + 1) % n];
                let prev = u[(j + n - 1) % n];
                out[j] = (next - prev) / (2.0 * h);
            }
        }
        Topology::Interval => {
            for j in 1..n - 1 {
                out[j] = (u[j + 1] - u[j - 1]) / (2.0 * h);
            }
            out[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
            out[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
        }
    }
    ScalarField::from_raw(grid, out)
}

/// Three-point Laplacian. On an interval the end nodes use the one-sided
/// second-order stencil `(2u0 - 5u1 + 4u2 - u3)/h²`.
pub fn laplacian(field: &ScalarField) -> ScalarField {
    let grid = *field.grid();
    let u = field.values();
    let n = u.len();
    let h2 = grid.spacing() * grid.spacing();
    let mut out = vec![0.0; n];
    match grid.topology() {
        Topology::Circle => {
            for j in 0..n {
                let next = u[(j + 1) % n];
                let prev = u[(j + n - 1) % n];
                out[j] = (next - 2.0 * u[j] + prev) / h2;
            }
        }
        Topology::Interval => {
            for j in 1..n - 1 {
                out[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / h2;
            }
            out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
            out[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2;
        }
    }
    ScalarField::from_raw(grid, out)
}

/// Rectangle rule on a circle, trapezoid rule on an interval.
pub fn integrate(field: &ScalarField) -> f64 {
    let grid = field.grid();
    let u = field.values();
    let h = grid.spacing();
    match grid.topology() {
        Topology::Circle => u.iter().sum::<f64>() * h,
        Topology::Interval => {
            let n = u.len();
            let inner: f64 = u[1..n - 1].iter().sum();
            h * (inner + 0.5 * (u[0] + u[n - 1]))
        }
    }
}

/// Spectral derivative on a circle.
pub fn fourier_derivative(field: &ScalarField) -> Result<ScalarField> {
    let grid = *field.grid();
    if !grid.is_periodic() {
        return Err(FlowError::InvalidInput(
            "Fourier differentiation requires a circle".into(),
        ));
    }
    let spectral = SpectralDerivative::new(grid.n_points());
    Ok(ScalarField::from_raw(
        grid,
        spectral.apply(field.values(), grid.length()),
    ))
}

/// First derivative in the requested mode.
pub fn derivative_with(field: &ScalarField, mode: Differentiation) -> Result<ScalarField> {
    match mode {
        Differentiation::FiniteDifference => Ok(derivative(field)),
        Differentiation::Fourier => fourier_derivative(field),
    }
}

/// `scale · ∇ log u`, evaluated as `scale · u'/u`.
pub fn grad_log(u: &ScalarField, scale: f64) -> Result<VectorAlongFiber> {
    grad_log_with(u, scale, Differentiation::FiniteDifference)
}

pub fn grad_log_with(
    u: &ScalarField,
    scale: f64,
    mode: Differentiation,
) -> Result<VectorAlongFiber> {
    ensure_positive(u)?;
    let du = derivative_with(u, mode)?;
    let values = du
        .values()
        .iter()
        .zip(u.values())
        .map(|(d, v)| scale * d / v)
        .collect();
    Ok(VectorAlongFiber(ScalarField::from_raw(*u.grid(), values)))
}

/// Fails with `NonPositiveField` unless every sample is strictly positive.
pub fn ensure_positive(u: &ScalarField) -> Result<()> {
    let (index, min) = u.argmin();
    if min > 0.0 {
        Ok(())
    } else {
        Err(FlowError::NonPositiveField { min, index })
    }
}

/// Cached FFT plans for spectral differentiation of length-`n` periodic samples.
#[derive(Clone)]
pub struct SpectralDerivative {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralDerivative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralDerivative").field("n", &self.n).finish()
    }
}

impl SpectralDerivative {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Derivative of periodic samples over a period of `length`.
    pub fn apply(&self, values: &[f64], length: f64) -> Vec<f64> {
        let n = self.n;
        assert_eq!(values.len(), n);
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let k0 = 2.0 * std::f64::consts::PI / length;
        for (j, c) in buf.iter_mut().enumerate() {
            // Nyquist mode has no well-defined derivative for real data.
            if n.is_multiple_of(2) && j == n / 2 {
                *c = Complex::new(0.0, 0.0);
                continue;
            }
            let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            *c *= Complex::new(0.0, k * k0);
        }
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }
}
