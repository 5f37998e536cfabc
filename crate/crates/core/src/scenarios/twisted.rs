//! Twisted products: the warping function heats along the fibers,
//! `∂t f = n Δ_F f`, independently over each sampled base point.

use crate::error::{FlowError, Result};
use crate::fiber::{derivative, grad_log, integrate, FiberGrid, ScalarField, VectorAlongFiber};
use crate::mixed_curvature::DiagnosticsRecord;
use crate::parabolic::{
    evolve, step_heat_reaction, EvolveFailure, RunControl, Stepper, StepperConfig, Trajectory,
};

use super::uniform_spacing;

#[derive(Debug, Clone)]
pub struct TwistedConfig {
    /// Rank of the orthogonal distribution (diffusivity of the warping heat flow).
    pub n: usize,
    /// `f₀(x_i, ·)` for each base point `x_i`, all on one circle fiber.
    pub slices: Vec<ScalarField>,
    pub control: RunControl,
}

#[derive(Debug, Clone)]
pub struct TwistedState {
    pub t: f64,
    pub base_points: usize,
    pub f: Vec<ScalarField>,
    /// Mean curvature `-n ∇ log f` per slice.
    pub h: Vec<VectorAlongFiber>,
}

impl TwistedState {
    fn build(t: f64, n: usize, f: Vec<ScalarField>) -> Result<Self> {
        let h = f
            .iter()
            .map(|s| grad_log(s, -(n as f64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t,
            base_points: f.len(),
            f,
            h,
        })
    }

    /// Unit mean curvature `H/n = -∇ log f`.
    pub fn unit_mean_curvature(&self, slice: usize, n: usize) -> VectorAlongFiber {
        self.h[slice].scaled(1.0 / n as f64)
    }

    /// Fiber mean of each slice.
    pub fn slice_means(&self) -> Vec<f64> {
        self.f.iter().map(|s| integrate(s) / s.grid().length()).collect()
    }
}

struct TwistedStepper {
    n: usize,
    cfg: StepperConfig,
    zero: ScalarField,
}

impl Stepper for TwistedStepper {
    type State = TwistedState;

    fn step(&mut self, state: &TwistedState, t: f64, dt: f64) -> Result<TwistedState> {
        let cfg = self.cfg.with_dt(dt);
        let f = state
            .f
            .iter()
            .map(|s| step_heat_reaction(s, &self.zero, &cfg))
            .collect::<Result<Vec<_>>>()?;
        TwistedState::build(t + dt, self.n, f)
    }

    fn diagnostics(&self, t: f64, state: &TwistedState) -> DiagnosticsRecord {
        let mut r = DiagnosticsRecord::at(t);
        r.min_u = state.f.iter().map(|s| s.min()).fold(f64::INFINITY, f64::min);
        r
    }
}

fn validate(cfg: &TwistedConfig) -> Result<FiberGrid> {
    if cfg.n == 0 {
        return Err(FlowError::InvalidInput("rank n must be at least 1".into()));
    }
    let first = cfg
        .slices
        .first()
        .ok_or_else(|| FlowError::InvalidInput("need at least one base point".into()))?;
    let grid = *first.grid();
    if !grid.is_periodic() {
        return Err(FlowError::InvalidInput("twisted fibers must be circles".into()));
    }
    for s in &cfg.slices {
        if *s.grid() != grid {
            return Err(FlowError::GridMismatch);
        }
        crate::fiber::ensure_positive(s)?;
    }
    Ok(grid)
}

/// Evolves every slice by `∂t f = n Δ_F f` and derives `H = -n ∇ log f`.
pub fn run_twisted_product(
    cfg: &TwistedConfig,
) -> std::result::Result<Trajectory<TwistedState>, EvolveFailure<TwistedState>> {
    let fail = |error| EvolveFailure {
        t: 0.0,
        error,
        partial: Trajectory { records: Vec::new() },
    };
    let grid = validate(cfg).map_err(fail)?;
    let heat = StepperConfig::periodic(cfg.control.dt, cfg.n as f64).map_err(fail)?;
    let initial = TwistedState::build(0.0, cfg.n, cfg.slices.clone()).map_err(fail)?;
    let mut stepper = TwistedStepper {
        n: cfg.n,
        cfg: heat,
        zero: ScalarField::zeros(grid),
    };
    evolve(&mut stepper, initial, &cfg.control, &mut [])
}

/// Sup-norm residual of `∂t H + ∇|H|² = n ∇(Div H)` over all slices, with
/// central time differences across equally spaced records.
pub fn multi_burgers_residual(trajectory: &Trajectory<TwistedState>, n: usize) -> Result<f64> {
    let dt = uniform_spacing(&trajectory.times()).ok_or_else(|| {
        FlowError::InvalidInput("residual needs at least three equally spaced records".into())
    })?;
    let nf = n as f64;
    let mut worst: f64 = 0.0;
    for w in trajectory.records.windows(3) {
        let (prev, mid, next) = (&w[0].state, &w[1].state, &w[2].state);
        for i in 0..mid.base_points {
            let h = mid.h[i].component();
            let sq = h.map(|v| v * v)?;
            let grad_sq = derivative(&sq);
            let grad_div = derivative(&derivative(h));
            for j in 0..h.len() {
                let ht = (next.h[i].values()[j] - prev.h[i].values()[j]) / (2.0 * dt);
                let r = ht + grad_sq.values()[j] - nf * grad_div.values()[j];
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// `max_i max_t |∫f_i(t) - ∫f_i(0)| / t`.
pub fn slice_mass_drift_rate(trajectory: &Trajectory<TwistedState>) -> f64 {
    let m0: Vec<f64> = trajectory.first().state.f.iter().map(integrate).collect();
    let mut worst: f64 = 0.0;
    for r in trajectory.records.iter().skip(1) {
        if r.t <= 0.0 {
            continue;
        }
        for (s, m) in r.state.f.iter().zip(&m0) {
            worst = worst.max((integrate(s) - m).abs() / r.t);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn config(amp: f64, t_end: f64, dt: f64, every: usize) -> TwistedConfig {
        let g = FiberGrid::circle(2.0 * PI, 128).unwrap();
        let slices = [1.0, 2.0, 0.5]
            .iter()
            .map(|a| ScalarField::from_fn(g, |y| a * (1.0 + amp * y.cos())).unwrap())
            .collect();
        TwistedConfig {
            n: 2,
            slices,
            control: RunControl::new(t_end, dt, every).unwrap(),
        }
    }

    #[test]
    fn fiber_independent_warping_is_stationary() {
        let traj = run_twisted_product(&config(0.0, 0.5, 1e-2, 10)).unwrap();
        for r in &traj.records {
            for (h, f) in r.state.h.iter().zip(&r.state.f) {
                assert!(h.sup_norm() < 1e-12);
                assert!(f.max() - f.min() < 1e-13);
            }
        }
    }

    #[test]
    fn mass_is_conserved_per_slice() {
        let traj = run_twisted_product(&config(0.3, 1.0, 1e-2, 10)).unwrap();
        assert!(slice_mass_drift_rate(&traj) <= 1e-10);
    }

    #[test]
    fn interval_fiber_is_rejected() {
        let g = FiberGrid::interval(1.0, 32).unwrap();
        let cfg = TwistedConfig {
            n: 1,
            slices: vec![ScalarField::constant(g, 1.0).unwrap()],
            control: RunControl::new(0.1, 1e-2, 1).unwrap(),
        };
        assert!(run_twisted_product(&cfg).is_err());
    }

    #[test]
    fn mean_curvature_solves_the_multi_burgers_equation() {
        let traj = run_twisted_product(&config(0.3, 0.05, 1e-3, 1)).unwrap();
        let r = multi_burgers_residual(&traj, 2).unwrap();
        assert!(r < 5e-3, "residual {r}");
    }
}
