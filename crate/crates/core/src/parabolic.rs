//! Time integration of the two leafwise PDEs: the heat equation with a
//! linear reaction term and the forced viscous Burgers equation.
//!
//! Heat/reaction: `∂t u = κ Δu + V u`, Crank-Nicolson by default.
//! Forced Burgers (rank `n` form): `∂t H = n H'' - (H²)' - n² β'`, with the
//! diffusive part treated by Crank-Nicolson and the flux terms by Heun's
//! method, which keeps the scheme second order in time.

use crate::error::{FlowError, Result};
use crate::fiber::{derivative, ensure_same_grid, FiberGrid, ScalarField, Topology, VectorAlongFiber};
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::mixed_curvature::DiagnosticsRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    CrankNicolson,
    ExplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Values held at the two interval ends.
    Dirichlet { left: f64, right: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub diffusivity: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
}

impl StepperConfig {
    pub fn new(dt: f64, diffusivity: f64, scheme: Scheme, boundary: Boundary) -> Result<Self> {
        let cfg = Self {
            dt,
            diffusivity,
            scheme,
            boundary,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn periodic(dt: f64, diffusivity: f64) -> Result<Self> {
        Self::new(dt, diffusivity, Scheme::CrankNicolson, Boundary::Periodic)
    }

    pub fn dirichlet(dt: f64, diffusivity: f64, left: f64, right: f64) -> Result<Self> {
        Self::new(
            dt,
            diffusivity,
            Scheme::CrankNicolson,
            Boundary::Dirichlet { left, right },
        )
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(FlowError::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.diffusivity.is_finite() && self.diffusivity > 0.0) {
            return Err(FlowError::InvalidInput(format!(
                "diffusivity must be positive, got {}",
                self.diffusivity
            )));
        }
        if let Boundary::Dirichlet { left, right } = self.boundary {
            if !(left.is_finite() && right.is_finite()) {
                return Err(FlowError::InvalidInput("boundary values must be finite".into()));
            }
        }
        Ok(())
    }

    /// Explicit-Euler bound `0.5 h² / κ`.
    pub fn cfl_limit(&self, grid: &FiberGrid) -> f64 {
        0.5 * grid.spacing() * grid.spacing() / self.diffusivity
    }

    fn check_topology(&self, grid: &FiberGrid) -> Result<()> {
        match (self.boundary, grid.topology()) {
            (Boundary::Periodic, Topology::Circle) | (Boundary::Dirichlet { .. }, Topology::Interval) => Ok(()),
            (b, t) => Err(FlowError::InvalidInput(format!(
                "boundary {b:?} is incompatible with topology {t:?}"
            ))),
        }
    }

    fn check_explicit(&self, grid: &FiberGrid) -> Result<()> {
        let limit = self.cfl_limit(grid);
        if self.scheme == Scheme::ExplicitEuler && self.dt > limit {
            return Err(FlowError::CflViolation { dt: self.dt, limit });
        }
        Ok(())
    }
}

/// `κ Δu + V u` at every node that evolves (all nodes on a circle, interior nodes on an interval).
fn apply_operator(u: &[f64], potential: &[f64], kappa: f64, h: f64, periodic: bool) -> Vec<f64> {
    let n = u.len();
    let c = kappa / (h * h);
    let mut out = vec![0.0; n];
    if periodic {
        for j in 0..n {
            let lap = u[(j + 1) % n] - 2.0 * u[j] + u[(j + n - 1) % n];
            out[j] = c * lap + potential[j] * u[j];
        }
    } else {
        for j in 1..n - 1 {
            out[j] = c * (u[j + 1] - 2.0 * u[j] + u[j - 1]) + potential[j] * u[j];
        }
    }
    out
}

/// Solves `(I - dt/2 (κΔ + diag V)) x = rhs`. On an interval only interior
/// rows are solved; `x[0]` and `x[n-1]` are set to the Dirichlet values and
/// their couplings moved to the right-hand side.
fn implicit_half_solve(
    rhs: &[f64],
    potential: &[f64],
    kappa: f64,
    h: f64,
    dt: f64,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let c = 0.5 * dt * kappa / (h * h);
    match boundary {
        Boundary::Periodic => {
            let lower = vec![-c; n];
            let upper = vec![-c; n];
            let diag: Vec<f64> = potential.iter().map(|v| 1.0 + 2.0 * c - 0.5 * dt * v).collect();
            solve_cyclic_tridiagonal(&lower, &diag, &upper, rhs)
        }
        Boundary::Dirichlet { left, right } => {
            let m = n - 2;
            let lower = vec![-c; m];
            let upper = vec![-c; m];
            let diag: Vec<f64> = potential[1..n - 1]
                .iter()
                .map(|v| 1.0 + 2.0 * c - 0.5 * dt * v)
                .collect();
            let mut b = rhs[1..n - 1].to_vec();
            b[0] += c * left;
            b[m - 1] += c * right;
            let inner = solve_tridiagonal(&lower, &diag, &upper, &b).map_err(|e| match e {
                FlowError::SolverSingular { row, pivot } => FlowError::SolverSingular { row: row + 1, pivot },
                other => other,
            })?;
            let mut x = Vec::with_capacity(n);
            x.push(left);
            x.extend(inner);
            x.push(right);
            Ok(x)
        }
    }
}

fn check_boundary_match(values: &[f64], boundary: Boundary) -> Result<()> {
    if let Boundary::Dirichlet { left, right } = boundary {
        let n = values.len();
        let tol = |b: f64| 1e-12 * (1.0 + b.abs());
        if (values[0] - left).abs() > tol(left) || (values[n - 1] - right).abs() > tol(right) {
            return Err(FlowError::InvalidInput(format!(
                "field ends ({}, {}) do not match Dirichlet data ({left}, {right})",
                values[0],
                values[n - 1]
            )));
        }
    }
    Ok(())
}

/// One step of `∂t u = κ Δu + V u`.
pub fn step_heat_reaction(u: &ScalarField, potential: &ScalarField, cfg: &StepperConfig) -> Result<ScalarField> {
    ensure_same_grid(u.grid(), potential.grid())?;
    cfg.validate()?;
    let grid = *u.grid();
    cfg.check_topology(&grid)?;
    cfg.check_explicit(&grid)?;
    check_boundary_match(u.values(), cfg.boundary)?;
    let h = grid.spacing();
    let periodic = grid.is_periodic();
    let au = apply_operator(u.values(), potential.values(), cfg.diffusivity, h, periodic);
    let next = match cfg.scheme {
        Scheme::ExplicitEuler => {
            let mut next: Vec<f64> = u.values().iter().zip(&au).map(|(v, a)| v + cfg.dt * a).collect();
            if let Boundary::Dirichlet { left, right } = cfg.boundary {
                let n = next.len();
                next[0] = left;
                next[n - 1] = right;
            }
            next
        }
        Scheme::CrankNicolson => {
            // Increment form: (I - dt/2 A) δ = dt A u. A state with A u = 0
            // exactly stays bit-identical.
            let rhs: Vec<f64> = au.iter().map(|a| cfg.dt * a).collect();
            let zero_ends = match cfg.boundary {
                Boundary::Periodic => Boundary::Periodic,
                Boundary::Dirichlet { .. } => Boundary::Dirichlet { left: 0.0, right: 0.0 },
            };
            let delta = implicit_half_solve(&rhs, potential.values(), cfg.diffusivity, h, cfg.dt, zero_ends)?;
            let mut next: Vec<f64> = u.values().iter().zip(&delta).map(|(v, d)| v + d).collect();
            if let Boundary::Dirichlet { left, right } = cfg.boundary {
                let n = next.len();
                next[0] = left;
                next[n - 1] = right;
            }
            next
        }
    };
    ScalarField::new(grid, next)
}

/// Explicit flux part of the forced Burgers equation, `-(H²)' - n² β'`.
fn burgers_flux_terms(h: &ScalarField, forcing_grad: &ScalarField, n: f64) -> Vec<f64> {
    let sq = ScalarField::from_raw(*h.grid(), h.values().iter().map(|v| v * v).collect());
    let dsq = derivative(&sq);
    dsq.values()
        .iter()
        .zip(forcing_grad.values())
        .map(|(a, b)| -a - n * n * b)
        .collect()
}

/// One step of the forced Burgers equation `∂t H = n H'' - (H²)' - n² β'`
/// with `n = cfg.diffusivity` and `β = forcing`.
///
/// Dirichlet values in `cfg` are the end values at the new time level, so
/// time-dependent end data is followed by updating them every step.
pub fn step_burgers_forced(
    velocity: &VectorAlongFiber,
    forcing: &ScalarField,
    cfg: &StepperConfig,
) -> Result<VectorAlongFiber> {
    ensure_same_grid(velocity.grid(), forcing.grid())?;
    cfg.validate()?;
    let grid = *velocity.grid();
    cfg.check_topology(&grid)?;
    cfg.check_explicit(&grid)?;
    let spacing = grid.spacing();
    let n = cfg.diffusivity;
    let dt = cfg.dt;

    let speed = velocity.sup_norm();
    if speed > 0.0 {
        let limit = spacing / (2.0 * speed);
        if dt > limit {
            return Err(FlowError::CflViolation { dt, limit });
        }
    }

    let periodic = grid.is_periodic();
    let zero = vec![0.0; grid.n_points()];
    let forcing_grad = derivative(forcing);
    let h0 = velocity.component();
    let r0 = burgers_flux_terms(h0, &forcing_grad, n);
    let diff0 = apply_operator(h0.values(), &zero, n, spacing, periodic);
    let pin = |mut v: Vec<f64>| {
        if let Boundary::Dirichlet { left, right } = cfg.boundary {
            let last = v.len() - 1;
            v[0] = left;
            v[last] = right;
        }
        v
    };

    let next = match cfg.scheme {
        Scheme::ExplicitEuler => pin(h0
            .values()
            .iter()
            .zip(diff0.iter().zip(&r0))
            .map(|(v, (d, r))| v + dt * (d + r))
            .collect()),
        Scheme::CrankNicolson => {
            let base: Vec<f64> = h0
                .values()
                .iter()
                .zip(&diff0)
                .map(|(v, d)| v + 0.5 * dt * d)
                .collect();
            let rhs_pred: Vec<f64> = base.iter().zip(&r0).map(|(b, r)| b + dt * r).collect();
            let pred = implicit_half_solve(&rhs_pred, &zero, n, spacing, dt, cfg.boundary)?;
            let pred = ScalarField::new(grid, pred)?;
            let r1 = burgers_flux_terms(&pred, &forcing_grad, n);
            let rhs: Vec<f64> = base
                .iter()
                .zip(r0.iter().zip(&r1))
                .map(|(b, (a, c))| b + 0.5 * dt * (a + c))
                .collect();
            implicit_half_solve(&rhs, &zero, n, spacing, dt, cfg.boundary)?
        }
    };
    VectorAlongFiber::new(grid, next)
}

/// A state-in/state-out time stepper.
pub trait Stepper {
    type State: Clone;

    fn step(&mut self, state: &Self::State, t: f64, dt: f64) -> Result<Self::State>;

    fn diagnostics(&self, t: f64, state: &Self::State) -> DiagnosticsRecord {
        let _ = state;
        DiagnosticsRecord::at(t)
    }
}

/// Callback run at every recorded step; may enrich the record or abort the run.
pub trait Monitor<S> {
    fn observe(&mut self, t: f64, state: &S, record: &mut DiagnosticsRecord) -> Result<()>;
}

impl<S, F> Monitor<S> for F
where
    F: FnMut(f64, &S, &mut DiagnosticsRecord) -> Result<()>,
{
    fn observe(&mut self, t: f64, state: &S, record: &mut DiagnosticsRecord) -> Result<()> {
        self(t, state, record)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunControl {
    pub t_end: f64,
    pub dt: f64,
    pub record_every: usize,
}

impl RunControl {
    pub fn new(t_end: f64, dt: f64, record_every: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(FlowError::InvalidInput(format!("t_end must be non-negative, got {t_end}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FlowError::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            t_end,
            dt,
            record_every: record_every.max(1),
        })
    }

    /// Number of steps; the step is shortened uniformly so that the last one lands on `t_end`.
    pub fn steps(&self) -> usize {
        if self.t_end == 0.0 {
            return 0;
        }
        let raw = self.t_end / self.dt;
        (raw - 1e-9 * raw.max(1.0)).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        match self.steps() {
            0 => self.dt,
            s => self.t_end / s as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Record<S> {
    pub t: f64,
    pub state: S,
    pub diagnostics: DiagnosticsRecord,
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub records: Vec<Record<S>>,
}

impl<S> Trajectory<S> {
    pub fn first(&self) -> &Record<S> {
        &self.records[0]
    }

    pub fn last(&self) -> &Record<S> {
        self.records.last().expect("trajectory always holds the initial record")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

/// A run that stopped early; `partial` holds everything recorded before the failure.
#[derive(Debug, Clone)]
pub struct EvolveFailure<S> {
    pub t: f64,
    pub error: FlowError,
    pub partial: Trajectory<S>,
}

impl<S> From<EvolveFailure<S>> for FlowError {
    fn from(f: EvolveFailure<S>) -> Self {
        FlowError::StepFailed {
            t: f.t,
            source: Box::new(f.error),
        }
    }
}

/// Repeated stepping from `initial` to `control.t_end`, recording every
/// `record_every` steps (and always the first and last state).
pub fn evolve<P: Stepper>(
    stepper: &mut P,
    initial: P::State,
    control: &RunControl,
    monitors: &mut [&mut dyn Monitor<P::State>],
) -> std::result::Result<Trajectory<P::State>, EvolveFailure<P::State>> {
    let steps = control.steps();
    let dt = control.effective_dt();
    let mut trajectory = Trajectory { records: Vec::new() };

    let mut record = stepper.diagnostics(0.0, &initial);
    for m in monitors.iter_mut() {
        if let Err(error) = m.observe(0.0, &initial, &mut record) {
            return Err(EvolveFailure { t: 0.0, error, partial: trajectory });
        }
    }
    trajectory.records.push(Record {
        t: 0.0,
        state: initial.clone(),
        diagnostics: record,
    });

    let mut state = initial;
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * dt;
        let t = if k == steps { control.t_end } else { k as f64 * dt };
        state = match stepper.step(&state, t_prev, dt) {
            Ok(s) => s,
            Err(error) => return Err(EvolveFailure { t: t_prev, error, partial: trajectory }),
        };
        if k % control.record_every == 0 || k == steps {
            let mut record = stepper.diagnostics(t, &state);
            for m in monitors.iter_mut() {
                if let Err(error) = m.observe(t, &state, &mut record) {
                    return Err(EvolveFailure { t, error, partial: trajectory });
                }
            }
            trajectory.records.push(Record {
                t,
                state: state.clone(),
                diagnostics: record,
            });
        }
    }
    Ok(trajectory)
}

/// `∂t u = κ Δu + V u` with a fixed potential.
#[derive(Debug, Clone)]
pub struct HeatReaction {
    pub potential: ScalarField,
    pub cfg: StepperConfig,
}

impl HeatReaction {
    pub fn new(potential: ScalarField, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.check_topology(potential.grid())?;
        Ok(Self { potential, cfg })
    }

    pub fn pure_heat(grid: FiberGrid, cfg: StepperConfig) -> Result<Self> {
        Self::new(ScalarField::zeros(grid), cfg)
    }
}

impl Stepper for HeatReaction {
    type State = ScalarField;

    fn step(&mut self, state: &ScalarField, _t: f64, dt: f64) -> Result<ScalarField> {
        step_heat_reaction(state, &self.potential, &self.cfg.with_dt(dt))
    }

    fn diagnostics(&self, t: f64, state: &ScalarField) -> DiagnosticsRecord {
        let mut r = DiagnosticsRecord::at(t);
        r.min_u = state.min();
        r
    }
}

/// Direct forced-Burgers evolution.
#[derive(Debug, Clone)]
pub struct ForcedBurgers {
    pub forcing: ScalarField,
    pub cfg: StepperConfig,
}

impl Stepper for ForcedBurgers {
    type State = VectorAlongFiber;

    fn step(&mut self, state: &VectorAlongFiber, _t: f64, dt: f64) -> Result<VectorAlongFiber> {
        step_burgers_forced(state, &self.forcing, &self.cfg.with_dt(dt))
    }
}
