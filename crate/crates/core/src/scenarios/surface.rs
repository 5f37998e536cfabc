//! Surface of revolution: the profile radius `ρ(x, t)` solves the heat
//! equation in the arc-length coordinate, and the geodesic curvature of the
//! parallels `k = -(log ρ)'` solves Burgers' equation.

use crate::error::{FlowError, Result};
use crate::fiber::{derivative, grad_log, laplacian, FiberGrid, ScalarField};
use crate::mixed_curvature::{riccati_residual_interior, DiagnosticsRecord};
use crate::parabolic::{
    evolve, step_burgers_forced, step_heat_reaction, Boundary, EvolveFailure, RunControl, Scheme,
    Stepper, StepperConfig, Trajectory,
};

use super::uniform_spacing;

/// Slack on `|ρ'| ≤ 1` before the height function is declared undefined.
pub const SLOPE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SurfaceConfig {
    /// Initial profile; on an interval its end values become the Dirichlet data.
    pub rho0: ScalarField,
    pub control: RunControl,
    /// Height of the profile curve at the first node.
    pub z0: f64,
}

#[derive(Debug, Clone)]
pub struct SurfaceState {
    pub t: f64,
    pub rho: ScalarField,
    /// Height `z(x) = z0 + ∫ √(1 - ρ'²)`.
    pub h: ScalarField,
    /// `√(1 - ρ'²)`, the slope of `h` used for the arc-length constraint.
    pub h_slope: ScalarField,
    /// Geodesic curvature of the parallels, `-(log ρ)'`.
    pub k: ScalarField,
    /// Gaussian curvature `-ρ''/ρ`.
    pub gauss_curvature: ScalarField,
    /// `(ρ/ρ₀)²`.
    pub conformal_factor: ScalarField,
    /// `exp(-2 ∫₀ᵗ K dt)`, trapezoid rule over the steps taken.
    pub conformal_from_curvature: ScalarField,
    curvature_integral: ScalarField,
}

impl SurfaceState {
    /// `max |ρ'² + h'² - 1|`.
    pub fn arc_length_residual(&self) -> f64 {
        let slope = derivative(&self.rho);
        slope
            .values()
            .iter()
            .zip(self.h_slope.values())
            .map(|(a, b)| (a * a + b * b - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max |exp(-2∫K) - (ρ/ρ₀)²|`.
    pub fn conformal_mismatch(&self) -> f64 {
        self.conformal_factor
            .sup_distance(&self.conformal_from_curvature)
            .unwrap_or(f64::INFINITY)
    }
}

fn derive_state(
    t: f64,
    rho: ScalarField,
    rho0: &ScalarField,
    curvature_integral: ScalarField,
    z0: f64,
) -> Result<SurfaceState> {
    let (index, min) = rho.argmin();
    if min <= 0.0 {
        return Err(FlowError::ProfileDegenerate(format!(
            "radius {min} at node {index} is not positive"
        )));
    }
    let grid = *rho.grid();
    let slope = derivative(&rho);
    let steepest = slope.sup_norm();
    if steepest > 1.0 + SLOPE_TOL {
        return Err(FlowError::ProfileDegenerate(format!(
            "|ρ'| = {steepest} exceeds 1; the profile is not parametrized by arc length"
        )));
    }
    let h_slope = slope.map(|s| (1.0 - s * s).max(0.0).sqrt())?;
    let dx = grid.spacing();
    let mut z = Vec::with_capacity(grid.n_points());
    let mut acc = z0;
    z.push(acc);
    for w in h_slope.values().windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        z.push(acc);
    }
    let h = ScalarField::new(grid, z)?;
    let k = grad_log(&rho, -1.0)?.into_component();
    let gauss_curvature = laplacian(&rho).zip_with(&rho, |l, r| -l / r)?;
    let conformal_factor = rho.zip_with(rho0, |r, r0| (r / r0).powi(2))?;
    let conformal_from_curvature = curvature_integral.map(|i| (-2.0 * i).exp())?;
    Ok(SurfaceState {
        t,
        rho,
        h,
        h_slope,
        k,
        gauss_curvature,
        conformal_factor,
        conformal_from_curvature,
        curvature_integral,
    })
}

fn heat_config(rho0: &ScalarField, dt: f64) -> Result<StepperConfig> {
    let v = rho0.values();
    if rho0.grid().is_periodic() {
        StepperConfig::periodic(dt, 1.0)
    } else {
        StepperConfig::dirichlet(dt, 1.0, v[0], v[v.len() - 1])
    }
}

struct SurfaceStepper {
    rho0: ScalarField,
    cfg: StepperConfig,
    z0: f64,
}

impl Stepper for SurfaceStepper {
    type State = SurfaceState;

    fn step(&mut self, state: &SurfaceState, t: f64, dt: f64) -> Result<SurfaceState> {
        let zero = ScalarField::zeros(*state.rho.grid());
        let rho = step_heat_reaction(&state.rho, &zero, &self.cfg.with_dt(dt))?;
        let curvature = laplacian(&rho).zip_with(&rho, |l, r| -l / r)?;
        let integral = state
            .curvature_integral
            .zip_with(&state.gauss_curvature, |i, k| i + 0.5 * dt * k)?
            .zip_with(&curvature, |i, k| i + 0.5 * dt * k)?;
        derive_state(t + dt, rho, &self.rho0, integral, self.z0)
    }

    fn diagnostics(&self, t: f64, state: &SurfaceState) -> DiagnosticsRecord {
        let mut r = DiagnosticsRecord::at(t);
        r.min_u = state.rho.min();
        r.riccati_res = riccati_residual_interior(&state.k, &state.gauss_curvature).unwrap_or(f64::NAN);
        r
    }
}

/// Evolves `ρ_t = ρ_xx` and derives `h, k, K` and both conformal factors each step.
pub fn run_surface_of_revolution(
    cfg: &SurfaceConfig,
) -> std::result::Result<Trajectory<SurfaceState>, EvolveFailure<SurfaceState>> {
    let fail = |error| EvolveFailure {
        t: 0.0,
        error,
        partial: Trajectory { records: Vec::new() },
    };
    let grid = *cfg.rho0.grid();
    let heat = heat_config(&cfg.rho0, cfg.control.dt).map_err(fail)?;
    let initial = derive_state(0.0, cfg.rho0.clone(), &cfg.rho0, ScalarField::zeros(grid), cfg.z0).map_err(fail)?;
    let mut stepper = SurfaceStepper {
        rho0: cfg.rho0.clone(),
        cfg: heat,
        z0: cfg.z0,
    };
    evolve(&mut stepper, initial, &cfg.control, &mut [])
}

/// The steady state under Dirichlet data: `ρ̄(x) = ρ_a + (ρ_b - ρ_a) x / l`.
pub fn linear_limit(grid: FiberGrid, rho_a: f64, rho_b: f64) -> Result<ScalarField> {
    let l = grid.length();
    ScalarField::from_fn(grid, |x| rho_a + (rho_b - rho_a) * x / l)
}

/// Residuals of `∂t k = K'` and `∂t K = K'' - 2k K'` (`'` along the profile).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCrosscheck {
    pub k_residual: f64,
    pub curvature_residual: f64,
}

/// Central time differences of the recorded `k`, `K` against their spatial
/// right-hand sides, in sup norm over interior records. On an interval the
/// three outermost nodes at each end are skipped (nested one-sided stencils).
pub fn surface_evolution_crosscheck(trajectory: &Trajectory<SurfaceState>) -> Result<SurfaceCrosscheck> {
    let times = trajectory.times();
    let dt = uniform_spacing(&times).ok_or_else(|| {
        FlowError::InvalidInput("crosscheck needs at least three equally spaced records".into())
    })?;
    let states: Vec<&SurfaceState> = trajectory.records.iter().map(|r| &r.state).collect();
    let n = states[0].rho.len();
    let range = if states[0].rho.grid().is_periodic() { 0..n } else { 3..n - 3 };
    let mut out = SurfaceCrosscheck {
        k_residual: 0.0,
        curvature_residual: 0.0,
    };
    for w in states.windows(3) {
        let (prev, mid, next) = (w[0], w[1], w[2]);
        let nk = derivative(&mid.gauss_curvature);
        let nnk = derivative(&nk);
        for j in range.clone() {
            let kt = (next.k.values()[j] - prev.k.values()[j]) / (2.0 * dt);
            let big_kt = (next.gauss_curvature.values()[j] - prev.gauss_curvature.values()[j]) / (2.0 * dt);
            let rhs_k = nk.values()[j];
            let rhs_big = nnk.values()[j] - 2.0 * mid.k.values()[j] * nk.values()[j];
            out.k_residual = out.k_residual.max((kt - rhs_k).abs());
            out.curvature_residual = out.curvature_residual.max((big_kt - rhs_big).abs());
        }
    }
    Ok(out)
}

/// Evolves `k` directly by Burgers' equation (unit viscosity, no forcing)
/// alongside the heat flow of `ρ`; on an interval the end values of `k` are
/// taken from `ρ` each step. Returns `max_t ‖k_direct - (-(log ρ)')‖∞`.
pub fn burgers_curvature_crosscheck(cfg: &SurfaceConfig) -> Result<f64> {
    let grid = *cfg.rho0.grid();
    let zero = ScalarField::zeros(grid);
    let steps = cfg.control.steps();
    let dt = cfg.control.effective_dt();
    let heat = heat_config(&cfg.rho0, dt)?;
    let mut rho = cfg.rho0.clone();
    let mut k = grad_log(&rho, -1.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        rho = step_heat_reaction(&rho, &zero, &heat)?;
        let target = grad_log(&rho, -1.0)?;
        let boundary = if grid.is_periodic() {
            Boundary::Periodic
        } else {
            let v = target.values();
            Boundary::Dirichlet {
                left: v[0],
                right: v[v.len() - 1],
            }
        };
        let burgers = StepperConfig::new(dt, 1.0, Scheme::CrankNicolson, boundary)?;
        k = step_burgers_forced(&k, &zero, &burgers)?;
        worst = worst.max(k.sup_distance(&target)?);
    }
    Ok(worst)
}
