//! The normalized flow on a bundle with circle fibers: after the Cole-Hopf
//! substitution `H = -n ∇ log u` the potential obeys `∂t u = n(Δu + β_D u)`,
//! `Sc_mix - ‖T‖²` relaxes to `n λ₀`, and `‖T‖²` follows
//! `∂t ‖T‖² = 4(Sc_mix - ‖T‖² - Φ) ‖T‖²` with `Φ = n λ₀`.

use std::sync::Arc;

use crate::colehopf::velocity_from_potential_with;
use crate::error::{FlowError, Result};
use crate::fiber::{ensure_positive, ensure_same_grid, Differentiation, ScalarField, VectorAlongFiber};
use crate::mixed_curvature::{
    conservation_quantity, sc_mix_minus_t2_from_potential, Conserved, ConservedSample, DiagnosticsRecord,
    EPS_T,
};
use crate::parabolic::{
    evolve, step_burgers_forced, step_heat_reaction, EvolveFailure, RunControl, Stepper, StepperConfig,
    Trajectory,
};
use crate::schrodinger::{assemble_operator, ground_state_seeded, GroundState, SchrodingerOperator, DEFAULT_SEED};

/// Smallest spectral gap for which convergence rates are reported.
pub const MIN_GAP: f64 = 1e-6;

/// Deviation of `Sc_mix - ‖T‖²` from `n λ₀` below which a run counts as converged.
pub const CONVERGED_DEVIATION: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct NormalizedConfig {
    pub n: usize,
    /// Non-umbilicity `β_D ≥ 0`, frozen in time.
    pub beta: ScalarField,
    pub u0: ScalarField,
    /// Initial `‖T‖²`.
    pub t2_0: ScalarField,
    pub control: RunControl,
    /// Derivative used for `H` and the conservation monitor.
    pub mode: Differentiation,
    /// Seed of the eigensolver's start block.
    pub seed: u64,
}

impl NormalizedConfig {
    pub fn new(n: usize, beta: ScalarField, u0: ScalarField, t2_0: ScalarField, control: RunControl) -> Self {
        let mode = Differentiation::preferred(beta.grid());
        Self {
            n,
            beta,
            u0,
            t2_0,
            control,
            mode,
            seed: DEFAULT_SEED,
        }
    }

    /// `t_end = 12 / (n · gap)`: twelve e-foldings of the slowest transient.
    pub fn settling_time(n: usize, ground: &GroundState) -> f64 {
        12.0 / (n as f64 * ground.gap)
    }
}

#[derive(Debug, Clone)]
pub struct NormalizedState {
    pub t: f64,
    /// Unit-mean potential (the flow only sees `u` up to scale).
    pub u: ScalarField,
    pub h: VectorAlongFiber,
    pub beta_d: ScalarField,
    /// `‖T‖²`; equals `‖T‖²₀ · gain`.
    pub t2: ScalarField,
    pub gain: ScalarField,
    /// `Sc_mix - ‖T‖²`.
    pub scmix_t2: ScalarField,
    pub phi: f64,
    pub n: usize,
    pub ground: Arc<GroundState>,
    /// `sup |Sc_mix - ‖T‖² - n λ₀|`.
    pub deviation: f64,
    /// `sup |H + n ∇ log e₀|`.
    pub h_deviation: f64,
}

impl Conserved for NormalizedState {
    fn conserved(&self, t: f64) -> ConservedSample<'_> {
        ConservedSample {
            t,
            n: self.n,
            beta: Some(&self.beta_d),
            mean_curvature: Some(&self.h),
            t_norm_sq: Some(&self.t2),
            mass_field: None,
        }
    }
}

struct Context {
    n: usize,
    beta: ScalarField,
    potential: ScalarField,
    t2_0: ScalarField,
    phi: f64,
    ground: Arc<GroundState>,
    h_bar: VectorAlongFiber,
    mode: Differentiation,
    operator: SchrodingerOperator,
}

impl Context {
    fn state(&self, t: f64, u: ScalarField, gain: ScalarField) -> Result<NormalizedState> {
        let h = velocity_from_potential_with(&u, self.n as f64, self.mode)?;
        let scmix_t2 = sc_mix_minus_t2_from_potential(&u, self.n, &self.beta)?;
        let deviation = scmix_t2.values().iter().fold(0.0f64, |m, s| m.max((s - self.phi).abs()));
        let h_deviation = h.sup_distance(&self.h_bar)?;
        let t2 = self.t2_0.zip_with(&gain, |a, g| a * g)?;
        Ok(NormalizedState {
            t,
            u,
            h,
            beta_d: self.beta.clone(),
            t2,
            gain,
            scmix_t2,
            phi: self.phi,
            n: self.n,
            ground: Arc::clone(&self.ground),
            deviation,
            h_deviation,
        })
    }
}

struct NormalizedStepper {
    ctx: Context,
    cfg: StepperConfig,
    initial_conserved: Vec<Option<f64>>,
}

impl Stepper for NormalizedStepper {
    type State = NormalizedState;

    fn step(&mut self, state: &NormalizedState, t: f64, dt: f64) -> Result<NormalizedState> {
        let raw = step_heat_reaction(&state.u, &self.ctx.potential, &self.cfg.with_dt(dt))?;
        ensure_positive(&raw)?;
        // Exact integrating factor along the discrete trajectory:
        // ∂t log‖T‖² = -4 ∂t log u - 4Φ.
        let decay = (-4.0 * self.ctx.phi * dt).exp();
        let ratio = state.u.zip_with(&raw, |a, b| (a / b).powi(4) * decay)?;
        let gain = state.gain.zip_with(&ratio, |g, r| g * r)?;
        let u = raw.normalized_mean()?;
        self.ctx.state(t + dt, u, gain)
    }

    fn diagnostics(&self, t: f64, state: &NormalizedState) -> DiagnosticsRecord {
        let mut r = DiagnosticsRecord::at(t);
        r.min_u = state.u.min();
        r.rayleigh = self.ctx.operator.rayleigh_quotient(&state.u).unwrap_or(f64::NAN);
        r.scmix_minus_t2_dev = state.deviation;
        r.betad_drift = state.beta_d.sup_distance(&self.ctx.beta).unwrap_or(f64::NAN);
        r.conservation_drift = conservation_quantity(&state.h, &state.t2, state.n, self.ctx.mode, EPS_T)
            .map(|c| drift(&self.initial_conserved, &c))
            .unwrap_or(f64::NAN);
        r
    }
}

fn drift(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, pair| match pair {
        (Some(x), Some(y)) => m.max((x - y).abs()),
        (None, None) => m,
        _ => f64::INFINITY,
    })
}

fn prepare(cfg: &NormalizedConfig) -> Result<(Context, NormalizedState)> {
    let grid = *cfg.beta.grid();
    if !grid.is_periodic() {
        return Err(FlowError::InvalidInput("the normalized flow needs circle fibers".into()));
    }
    if cfg.n == 0 {
        return Err(FlowError::InvalidInput("rank n must be at least 1".into()));
    }
    ensure_same_grid(&grid, cfg.u0.grid())?;
    ensure_same_grid(&grid, cfg.t2_0.grid())?;
    ensure_positive(&cfg.u0)?;
    if cfg.beta.min() < -1e-12 {
        return Err(FlowError::InconsistentData(format!("β_D has negative value {}", cfg.beta.min())));
    }
    if cfg.t2_0.min() < 0.0 {
        return Err(FlowError::InconsistentData(format!("‖T‖² has negative value {}", cfg.t2_0.min())));
    }
    let ground = ground_state_seeded(&cfg.beta, cfg.seed)?;
    if ground.gap < MIN_GAP {
        return Err(FlowError::GapTooSmall { gap: ground.gap });
    }
    let nf = cfg.n as f64;
    let phi = nf * ground.lambda0;
    let h_bar = velocity_from_potential_with(&ground.e0, nf, cfg.mode)?;
    let ctx = Context {
        n: cfg.n,
        beta: cfg.beta.clone(),
        potential: cfg.beta.scaled(nf),
        t2_0: cfg.t2_0.clone(),
        phi,
        ground: Arc::new(ground),
        h_bar,
        mode: cfg.mode,
        operator: assemble_operator(&cfg.beta),
    };
    let initial = ctx.state(0.0, cfg.u0.normalized_mean()?, ScalarField::constant(grid, 1.0)?)?;
    Ok((ctx, initial))
}

/// Runs the normalized flow; the ground state of `-Δ - β_D` is computed once up front.
pub fn run_normalized_flow(
    cfg: &NormalizedConfig,
) -> std::result::Result<Trajectory<NormalizedState>, EvolveFailure<NormalizedState>> {
    let fail = |error| EvolveFailure {
        t: 0.0,
        error,
        partial: Trajectory { records: Vec::new() },
    };
    let (ctx, initial) = prepare(cfg).map_err(fail)?;
    let heat = StepperConfig::periodic(cfg.control.dt, cfg.n as f64).map_err(fail)?;
    let initial_conserved =
        conservation_quantity(&initial.h, &initial.t2, cfg.n, cfg.mode, EPS_T).map_err(fail)?;
    let mut stepper = NormalizedStepper {
        ctx,
        cfg: heat,
        initial_conserved,
    };
    evolve(&mut stepper, initial, &cfg.control, &mut [])
}

/// Sign of the limiting mixed scalar curvature.
#[derive(Debug, Clone)]
pub struct PositivityReport {
    /// `Sc_mix = ‖T‖² + (Sc_mix - ‖T‖²)` at the final state.
    pub limit_scmix: ScalarField,
    pub positive_everywhere: bool,
    pub min_limit: f64,
    /// Smallest constant `‖T‖²₀` making the limit positive everywhere
    /// (the limit of `‖T‖²` is `‖T‖²₀` times a gain independent of `‖T‖²₀`).
    pub threshold_t2: f64,
    /// `threshold_t2 / max β_D`; `None` when `β_D ≡ 0`.
    pub threshold_ratio: Option<f64>,
}

pub fn positivity_verdict(final_state: &NormalizedState) -> Result<PositivityReport> {
    if final_state.deviation > CONVERGED_DEVIATION {
        return Err(FlowError::NotConverged {
            deviation: final_state.deviation,
            tolerance: CONVERGED_DEVIATION,
        });
    }
    let limit_scmix = final_state.t2.zip_with(&final_state.scmix_t2, |a, b| a + b)?;
    let min_limit = limit_scmix.min();
    let threshold_t2 = final_state
        .scmix_t2
        .values()
        .iter()
        .zip(final_state.gain.values())
        .map(|(s, g)| -s / g)
        .fold(0.0, f64::max);
    let max_beta = final_state.beta_d.max();
    Ok(PositivityReport {
        positive_everywhere: min_limit > 0.0,
        min_limit,
        limit_scmix,
        threshold_t2,
        threshold_ratio: (max_beta > 0.0).then(|| threshold_t2 / max_beta),
    })
}

/// Evolves `H` directly by the forced Burgers equation (forcing `β_D`,
/// viscosity `n`) next to the potential route; returns
/// `max_t ‖H_direct - (-n ∇ log u)‖∞` with finite differences throughout.
pub fn normalized_burgers_crosscheck(cfg: &NormalizedConfig) -> Result<f64> {
    let nf = cfg.n as f64;
    let dt = cfg.control.effective_dt();
    let heat = StepperConfig::periodic(dt, nf)?;
    let potential = cfg.beta.scaled(nf);
    let fd = Differentiation::FiniteDifference;
    let mut u = cfg.u0.normalized_mean()?;
    let mut h = velocity_from_potential_with(&u, nf, fd)?;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.control.steps() {
        u = step_heat_reaction(&u, &potential, &heat)?.normalized_mean()?;
        h = step_burgers_forced(&h, &cfg.beta, &heat)?;
        worst = worst.max(h.sup_distance(&velocity_from_potential_with(&u, nf, fd)?)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::FiberGrid;
    use std::f64::consts::PI;

    fn config(beta: impl Fn(f64) -> f64, t2: f64, t_end: f64) -> NormalizedConfig {
        let g = FiberGrid::circle(2.0 * PI, 128).unwrap();
        NormalizedConfig::new(
            2,
            ScalarField::from_fn(g, beta).unwrap(),
            ScalarField::from_fn(g, |x| 1.0 + 0.2 * x.sin()).unwrap(),
            ScalarField::constant(g, t2).unwrap(),
            RunControl::new(t_end, 1e-2, 10).unwrap(),
        )
    }

    #[test]
    fn zero_potential_relaxes_to_the_split_case() {
        let traj = run_normalized_flow(&config(|_| 0.0, 0.0, 12.0)).unwrap();
        let last = &traj.last().state;
        assert!(last.ground.lambda0.abs() < 1e-8);
        assert!(last.h.sup_norm() < 1e-6);
        assert!(last.deviation < 1e-6);
        let v = positivity_verdict(last).unwrap();
        assert!(v.limit_scmix.sup_norm() < 1e-6);
        assert!(!v.positive_everywhere);
        assert_eq!(v.threshold_ratio, None);
    }

    #[test]
    fn constant_potential_shifts_the_limit() {
        let c = 0.3;
        let traj = run_normalized_flow(&config(|_| c, 1.0, 12.0)).unwrap();
        let last = &traj.last().state;
        assert!((last.phi + 2.0 * c).abs() < 1e-9);
        assert!(last.h.sup_norm() < 1e-6);
        for s in last.scmix_t2.values() {
            assert!((s + 2.0 * c).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_set_of_t_persists() {
        let mut cfg = config(|x| 0.2 * (1.0 + x.cos()), 0.0, 1.0);
        let g = *cfg.beta.grid();
        cfg.t2_0 = ScalarField::from_fn(g, |x| x.sin().max(0.0)).unwrap();
        let traj = run_normalized_flow(&cfg).unwrap();
        for r in &traj.records {
            for (a, b) in r.state.t2.values().iter().zip(cfg.t2_0.values()) {
                assert_eq!(*a == 0.0, *b == 0.0);
                assert!(*a >= 0.0);
            }
        }
    }

    #[test]
    fn unconverged_run_has_no_verdict() {
        let traj = run_normalized_flow(&config(|x| 0.2 * (1.0 + x.cos()), 1.0, 0.1)).unwrap();
        assert!(matches!(positivity_verdict(&traj.last().state), Err(FlowError::NotConverged { .. })));
    }

    #[test]
    fn degenerate_gap_is_rejected() {
        let g = FiberGrid::circle(20000.0, 16).unwrap();
        let cfg = NormalizedConfig::new(
            1,
            ScalarField::zeros(g),
            ScalarField::constant(g, 1.0).unwrap(),
            ScalarField::zeros(g),
            RunControl::new(1.0, 0.1, 1).unwrap(),
        );
        let err = run_normalized_flow(&cfg).unwrap_err();
        assert!(matches!(err.error, FlowError::GapTooSmall { .. }), "{:?}", err.error);
    }

    #[test]
    fn velocity_matches_potential_by_construction() {
        let traj = run_normalized_flow(&config(|x| 0.2 * (1.0 + x.cos()), 1.0, 0.5)).unwrap();
        for r in &traj.records {
            let h = velocity_from_potential_with(&r.state.u, 2.0, Differentiation::Fourier).unwrap();
            assert!(h.sup_distance(&r.state.h).unwrap() <= 1e-10);
        }
    }
}
