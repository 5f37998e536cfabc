mod common;

use std::f64::consts::PI;

use folflow_core::colehopf::velocity_from_potential_fn;
use folflow_core::fiber::{derivative, grad_log, integrate, laplacian};
use folflow_core::mixed_curvature::{
    conservation_report, riccati_residual, riccati_residual_interior, sc_mix_minus_t2, EPS_T,
};
use folflow_core::parabolic::{step_burgers_forced, StepperConfig};
use folflow_core::scenarios::{
    burgers_curvature_crosscheck, normalized_burgers_crosscheck, positivity_verdict, run_normalized_flow,
    run_surface_of_revolution, run_twisted_product, surface_evolution_crosscheck, NormalizedConfig,
    SurfaceConfig, TwistedConfig,
};
use folflow_core::schrodinger::ground_state;
use folflow_core::{Differentiation, FiberGrid, RunControl, ScalarField};

fn circle(n: usize) -> FiberGrid {
    FiberGrid::circle(2.0 * PI, n).unwrap()
}

fn beta(g: FiberGrid) -> ScalarField {
    ScalarField::from_fn(g, |x| 0.2 * (1.0 + x.cos())).unwrap()
}

/// `‖step(H̄) - H̄‖∞ / dt` for the limit field `H̄ = -n ∇ log e₀`.
fn stationarity_defect(n_points: usize) -> f64 {
    let g = circle(n_points);
    let f = beta(g);
    let gs = ground_state(&f).unwrap();
    let h_bar = velocity_from_potential_fn(&gs.e0, 2.0).unwrap();
    let dt = 1e-3;
    let cfg = StepperConfig::periodic(dt, 2.0).unwrap();
    let next = step_burgers_forced(&h_bar, &f, &cfg).unwrap();
    next.sup_distance(&h_bar).unwrap() / dt
}

#[test]
fn limit_field_is_discretely_stationary() {
    let coarse = stationarity_defect(256);
    let fine = stationarity_defect(512);
    assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
    let finest = stationarity_defect(4096);
    assert!(finest <= 1e-6, "defect {finest}");
}

#[test]
fn ground_state_substitution_gives_n_lambda0() {
    // Div H̄ - |H̄|²/n - n f = n λ₀ and, at n = 2, the conservative-solution
    // identity Div H̄ - H̄²/2 - 2(f + λ₀) = 0.
    let mut errs = Vec::new();
    for n_points in [256, 512] {
        let g = circle(n_points);
        let f = beta(g);
        let gs = ground_state(&f).unwrap();
        let h_bar = velocity_from_potential_fn(&gs.e0, 2.0).unwrap();
        let s = sc_mix_minus_t2(&h_bar, 2, &f).unwrap();
        errs.push(s.values().iter().map(|v| (v - 2.0 * gs.lambda0).abs()).fold(0.0, f64::max));
    }
    assert!(errs[0] < 1e-3);
    assert!(common::order(errs[0], errs[1]) >= 1.8, "{errs:?}");
}

#[test]
fn riccati_residuals_on_cone_and_sphere() {
    for (n_points, bound) in [(101usize, 1e-12), (201, 1e-12)] {
        let g = FiberGrid::interval(1.0, n_points).unwrap();
        let rho = ScalarField::from_fn(g, |x| 0.5 + 0.3 * x).unwrap();
        let k = grad_log(&rho, -1.0).unwrap().into_component();
        let big_k = laplacian(&rho).zip_with(&rho, |l, r| -l / r).unwrap();
        // A linear profile is differentiated exactly; the residual is k' - k² at O(h²).
        assert!(big_k.sup_norm() < bound * 1e3);
        let h = g.spacing();
        assert!(riccati_residual(&k, &big_k).unwrap() < 10.0 * h * h);
    }
    let sphere = |n: usize| {
        let g = FiberGrid::interval(2.0, n).unwrap();
        let rho = ScalarField::from_fn(g, |x| (x + 0.5).sin()).unwrap();
        let k = grad_log(&rho, -1.0).unwrap().into_component();
        let big_k = laplacian(&rho).zip_with(&rho, |l, r| -l / r).unwrap();
        riccati_residual_interior(&k, &big_k).unwrap()
    };
    let (a, b) = (sphere(201), sphere(401));
    assert!(common::order(a, b) >= 1.8, "{a} {b}");
}

#[test]
fn closed_surface_curvature_integrates_nonpositively() {
    let g = circle(256);
    let rho = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x.cos()).unwrap();
    let cfg = SurfaceConfig {
        rho0: rho,
        control: RunControl::new(0.5, 1e-3, 100).unwrap(),
        z0: 0.0,
    };
    let traj = run_surface_of_revolution(&cfg).unwrap();
    for r in &traj.records {
        let dk = derivative(&r.state.k);
        assert!(integrate(&dk).abs() < 1e-12);
        let big_k = integrate(&r.state.gauss_curvature);
        assert!(big_k <= 0.0);
        let k2 = integrate(&r.state.k.map(|v| v * v).unwrap());
        assert!((k2 + big_k).abs() < 1e-3 * (1.0 + k2), "∫k² + ∫K = {}", k2 + big_k);
    }
}

fn bump(n_points: usize, dt: f64, t_end: f64, every: usize) -> SurfaceConfig {
    let g = FiberGrid::interval(1.0, n_points).unwrap();
    SurfaceConfig {
        rho0: ScalarField::from_fn(g, |x| 0.5 + 0.3 * x + 0.1 * (PI * x).sin()).unwrap(),
        control: RunControl::new(t_end, dt, every).unwrap(),
        z0: 0.0,
    }
}

#[test]
fn curvature_evolution_is_second_order() {
    let coarse = surface_evolution_crosscheck(&run_surface_of_revolution(&bump(201, 1e-4, 0.02, 1)).unwrap()).unwrap();
    let fine = surface_evolution_crosscheck(&run_surface_of_revolution(&bump(401, 5e-5, 0.02, 1)).unwrap()).unwrap();
    assert!(coarse.k_residual <= 5e-3);
    assert!(coarse.k_residual / fine.k_residual >= 3.5, "{coarse:?} {fine:?}");
    assert!(common::order(coarse.curvature_residual, fine.curvature_residual) >= 1.8);
}

#[test]
fn directly_evolved_curvature_tracks_cole_hopf() {
    let err = burgers_curvature_crosscheck(&bump(201, 1e-4, 1.0, 1000)).unwrap();
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn twisted_closed_form_with_separable_warping() {
    let g = circle(256);
    let a = [0.7, 1.0, 1.6];
    let cfg = TwistedConfig {
        n: 2,
        slices: a
            .iter()
            .map(|&ai| ScalarField::from_fn(g, |y| ai * (1.0 + 0.3 * y.cos())).unwrap())
            .collect(),
        control: RunControl::new(1.0, 1e-3, 1000).unwrap(),
    };
    let last = run_twisted_product(&cfg).unwrap().last().state.clone();
    for (ai, f) in a.iter().zip(&last.f) {
        let exact = ScalarField::from_fn(g, |y| ai * (1.0 + 0.3 * (-2.0f64).exp() * y.cos())).unwrap();
        let rel = f.zip_with(&exact, |p, q| ((p - q) / q).abs()).unwrap().max();
        assert!(rel <= 1e-4, "{rel}");
    }
}

fn normalized(n_points: usize, t2: f64, t_end: f64, dt: f64) -> NormalizedConfig {
    let g = circle(n_points);
    NormalizedConfig::new(
        2,
        beta(g),
        ScalarField::constant(g, 1.0).unwrap(),
        ScalarField::constant(g, t2).unwrap(),
        RunControl::new(t_end, dt, 10).unwrap(),
    )
}

#[test]
fn normalized_flow_cole_hopf_invariant() {
    let err = normalized_burgers_crosscheck(&normalized(256, 1.0, 2.0, 1e-3)).unwrap();
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn normalized_velocity_converges_at_the_gap_rate() {
    let mut cfg = normalized(256, 1.0, 6.0, 1e-2);
    cfg.u0 = ScalarField::from_fn(circle(256), |x| 1.0 + 0.1 * x.sin()).unwrap();
    let traj = run_normalized_flow(&cfg).unwrap();
    let gs = &traj.first().state.ground;
    let samples: Vec<(f64, f64)> = traj
        .records
        .iter()
        .filter(|r| r.t >= 1.0)
        .map(|r| (r.t, r.state.h_deviation))
        .collect();
    let rate = common::decay_rate(&samples);
    let target = 2.0 * gs.gap;
    assert!((rate / target - 1.0).abs() <= 0.1, "rate {rate} vs {target}");
}

#[test]
fn conservation_law_and_frozen_non_umbilicity() {
    let g = circle(256);
    let mut cfg = normalized(256, 1.0, 5.0, 1e-2);
    cfg.t2_0 = ScalarField::from_fn(g, |x| 1.0 + 0.5 * x.cos()).unwrap();
    cfg.u0 = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x.sin()).unwrap();
    let traj = run_normalized_flow(&cfg).unwrap();
    let states: Vec<_> = traj.records.iter().map(|r| (r.t, &r.state)).collect();
    let report = conservation_report(&states, Differentiation::Fourier, EPS_T).unwrap();
    assert_eq!(report.betad_drift, 0.0);
    let drift = report.conservation_drift.unwrap();
    assert!(drift <= 1e-6, "{drift}");
}

#[test]
fn large_integrability_makes_the_limit_positive() {
    let g = circle(128);
    let max_beta = beta(g).max();
    let gs = ground_state(&beta(g)).unwrap();
    let t_end = NormalizedConfig::settling_time(2, &gs);
    let mut thresholds = Vec::new();
    for scale in [0.0, 1.0, 10.0 * 4.0 * max_beta] {
        let traj = run_normalized_flow(&normalized(128, scale, t_end, 1e-2)).unwrap();
        let verdict = positivity_verdict(&traj.last().state).unwrap();
        if scale == 0.0 {
            assert!(!verdict.positive_everywhere);
            assert!(verdict.min_limit < 0.0);
        }
        if scale >= 10.0 * 4.0 * max_beta {
            assert!(verdict.positive_everywhere);
        }
        thresholds.push(verdict.threshold_t2);
    }
    // The threshold does not depend on the initial size of ‖T‖².
    assert!((thresholds[0] - thresholds[2]).abs() < 1e-6 * thresholds[0]);
}
