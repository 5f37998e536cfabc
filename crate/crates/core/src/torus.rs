//! Two-dimensional torus fibers as a tensor product of circles, with a
//! dimension-split (Strang) Crank-Nicolson heat-reaction step.

use crate::error::{FlowError, Result};
use crate::fiber::{FiberGrid, ScalarField};
use crate::mixed_curvature::DiagnosticsRecord;
use crate::parabolic::{step_heat_reaction, Stepper, StepperConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    pub x: FiberGrid,
    pub y: FiberGrid,
}

impl TorusGrid {
    pub fn new(x: FiberGrid, y: FiberGrid) -> Result<Self> {
        if !(x.is_periodic() && y.is_periodic()) {
            return Err(FlowError::InvalidGrid("torus factors must be circles".into()));
        }
        Ok(Self { x, y })
    }

    pub fn n_points(&self) -> usize {
        self.x.n_points() * self.y.n_points()
    }

    pub fn area(&self) -> f64 {
        self.x.length() * self.y.length()
    }
}

/// Samples stored row-major: `values[j * nx + i] = u(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl TorusField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(FlowError::InvalidInput(format!(
                "expected {} values, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(FlowError::InvalidInput(format!("non-finite value at index {j}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = grid.x.coordinates();
        let ys = grid.y.coordinates();
        let values = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.x.n_points() + i]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.x.spacing() * self.grid.y.spacing()
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(FlowError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn row(&self, j: usize) -> &[f64] {
        let nx = self.grid.x.n_points();
        &self.values[j * nx..(j + 1) * nx]
    }

    fn column(&self, i: usize) -> Vec<f64> {
        let nx = self.grid.x.n_points();
        (0..self.grid.y.n_points()).map(|j| self.values[j * nx + i]).collect()
    }
}

fn sweep_x(u: &mut TorusField, half_v: &TorusField, cfg: &StepperConfig) -> Result<()> {
    let g = u.grid;
    let nx = g.x.n_points();
    for j in 0..g.y.n_points() {
        let row = ScalarField::new(g.x, u.row(j).to_vec())?;
        let pot = ScalarField::new(g.x, half_v.row(j).to_vec())?;
        let next = step_heat_reaction(&row, &pot, cfg)?;
        u.values[j * nx..(j + 1) * nx].copy_from_slice(next.values());
    }
    Ok(())
}

fn sweep_y(u: &mut TorusField, half_v: &TorusField, cfg: &StepperConfig) -> Result<()> {
    let g = u.grid;
    let nx = g.x.n_points();
    for i in 0..nx {
        let col = ScalarField::new(g.y, u.column(i))?;
        let pot = ScalarField::new(g.y, half_v.column(i))?;
        let next = step_heat_reaction(&col, &pot, cfg)?;
        for (j, v) in next.values().iter().enumerate() {
            u.values[j * nx + i] = *v;
        }
    }
    Ok(())
}

/// One step of `∂t u = κ(∂xx + ∂yy)u + V u`: half an x-sweep, a full
/// y-sweep, half an x-sweep, each Crank-Nicolson with half the reaction.
pub fn step_heat_reaction_torus(u: &TorusField, potential: &TorusField, kappa: f64, dt: f64) -> Result<TorusField> {
    if u.grid != potential.grid {
        return Err(FlowError::GridMismatch);
    }
    let half_v = TorusField {
        grid: potential.grid,
        values: potential.values.iter().map(|v| 0.5 * v).collect(),
    };
    let half = StepperConfig::periodic(0.5 * dt, kappa)?;
    let full = StepperConfig::periodic(dt, kappa)?;
    let mut next = u.clone();
    sweep_x(&mut next, &half_v, &half)?;
    sweep_y(&mut next, &half_v, &full)?;
    sweep_x(&mut next, &half_v, &half)?;
    Ok(next)
}

/// `∂t u = κ Δu + V u` on a torus.
#[derive(Debug, Clone)]
pub struct TorusHeatReaction {
    pub potential: TorusField,
    pub diffusivity: f64,
}

impl Stepper for TorusHeatReaction {
    type State = TorusField;

    fn step(&mut self, state: &TorusField, _t: f64, dt: f64) -> Result<TorusField> {
        step_heat_reaction_torus(state, &self.potential, self.diffusivity, dt)
    }

    fn diagnostics(&self, t: f64, state: &TorusField) -> DiagnosticsRecord {
        let mut r = DiagnosticsRecord::at(t);
        r.min_u = state.min();
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parabolic::{evolve, RunControl};
    use std::f64::consts::PI;

    fn torus(n: usize) -> TorusGrid {
        let c = FiberGrid::circle(2.0 * PI, n).unwrap();
        TorusGrid::new(c, c).unwrap()
    }

    fn run(n: usize, dt: f64, t_end: f64, v: impl Fn(f64, f64) -> f64) -> TorusField {
        let g = torus(n);
        let u0 = TorusField::from_fn(g, |x, y| 2.0 + x.cos() * (2.0 * y).cos()).unwrap();
        let mut stepper = TorusHeatReaction {
            potential: TorusField::from_fn(g, v).unwrap(),
            diffusivity: 0.5,
        };
        let control = RunControl::new(t_end, dt, usize::MAX).unwrap();
        evolve(&mut stepper, u0, &control, &mut []).unwrap().last().state.clone()
    }

    #[test]
    fn separable_mode_decays_at_the_product_rate() {
        let u = run(64, 1e-2, 0.5, |_, _| 0.0);
        let g = *u.grid();
        let exact = TorusField::from_fn(g, |x, y| 2.0 + (-2.5f64 * 0.5).exp() * x.cos() * (2.0 * y).cos()).unwrap();
        let h = g.x.spacing();
        assert!(u.sup_distance(&exact).unwrap() < 5.0 * h * h);
    }

    #[test]
    fn pure_heat_conserves_mass() {
        let g = torus(32);
        let u0 = TorusField::from_fn(g, |x, y| 2.0 + x.sin() * y.cos() + 0.3 * (x + y).cos()).unwrap();
        let u = step_heat_reaction_torus(&u0, &TorusField::from_fn(g, |_, _| 0.0).unwrap(), 1.0, 0.05).unwrap();
        assert!((u.integrate() - u0.integrate()).abs() < 1e-12);
    }

    #[test]
    fn splitting_is_second_order_in_time() {
        let v = |x: f64, y: f64| 0.3 * x.cos() + 0.2 * (x + y).sin();
        let reference = run(32, 1e-4, 0.2, v);
        let e1 = run(32, 2e-2, 0.2, v).sup_distance(&reference).unwrap();
        let e2 = run(32, 1e-2, 0.2, v).sup_distance(&reference).unwrap();
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn interval_factor_is_rejected() {
        let c = FiberGrid::circle(1.0, 16).unwrap();
        let i = FiberGrid::interval(1.0, 16).unwrap();
        assert!(TorusGrid::new(c, i).is_err());
    }
}
