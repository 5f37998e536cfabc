//! Scenario execution: turns a validated [`RunConfig`] into a [`Report`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use folflow_core::colehopf::{roundtrip_residual, velocity_from_potential_with};
use folflow_core::fiber::integrate;
use folflow_core::mixed_curvature::conservation_report;
use folflow_core::parabolic::{step_burgers_forced, step_heat_reaction, Boundary, EvolveFailure, Scheme, StepperConfig};
use folflow_core::scenarios::{
    fit_exponential_rate, linear_limit, multi_burgers_residual, positivity_verdict, run_normalized_flow,
    run_surface_of_revolution, run_twisted_product, slice_mass_drift_rate, surface_evolution_crosscheck,
    NormalizedConfig, SurfaceConfig, TwistedConfig,
};
use folflow_core::schrodinger::{assemble_operator, eigen_residual, eigencount, expand, gram_matrix, reconstruct,
    spectrum_seeded, weyl_constant, SpectralDecomposition};
use folflow_core::{Differentiation, FlowError, RunControl, ScalarField, Trajectory};
use serde_json::{json, Value};

use crate::artifacts::{snapshot_indices, Failure, Report, Snapshot, Table};
use crate::config::{base_value, RunConfig, Scenario, SchemeSpec};

/// Samples of a decaying quantity below this are treated as round-off.
const FIT_FLOOR: f64 = 1e-10;

/// Runs the scenario in memory. Numerical failures are recorded in the
/// report (with everything computed up to that point), never panicked on.
pub fn execute(cfg: &RunConfig) -> Report {
    let mut echo = cfg.clone();
    echo.output.dir = None;
    let config_echo = serde_json::to_value(&echo).unwrap_or(Value::Null);
    let mut report = Report {
        scenario: cfg.scenario.name().to_string(),
        config_echo,
        trajectory: Table::default(),
        snapshots: Vec::new(),
        results: Value::Null,
        failure: None,
    };
    let control = match RunControl::new(cfg.time.t_end, cfg.dt(), cfg.time.record_every) {
        Ok(c) => c,
        Err(e) => {
            report.failure = Some(failure(0.0, &e));
            return report;
        }
    };
    match cfg.scenario {
        Scenario::Surface => surface(cfg, control, &mut report),
        Scenario::Twisted => twisted(cfg, control, &mut report),
        Scenario::Normalized => normalized(cfg, control, &mut report),
        Scenario::ColeHopfCheck => cole_hopf(cfg, control, &mut report),
        Scenario::SpectralReport => spectral(cfg, &mut report),
    }
    report
}

/// A finished run: the report plus the files written.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Executes and writes all artifacts into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> std::io::Result<RunOutcome> {
    let start = Instant::now();
    let report = execute(cfg);
    let wall = start.elapsed().as_secs_f64();
    let files = report.write(out_dir, wall, cfg.output.plot)?;
    Ok(RunOutcome {
        report,
        out_dir: out_dir.to_path_buf(),
        files,
    })
}

/// Output directory: the override, else `output.dir` (relative to the
/// config file), else `folflow-out` next to the config.
pub fn output_dir(cfg: &RunConfig, overridden: Option<&Path>) -> PathBuf {
    if let Some(p) = overridden {
        return p.to_path_buf();
    }
    let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("folflow-out"));
    if dir.is_absolute() {
        dir
    } else {
        cfg.base_dir.join(dir)
    }
}

fn failure(t: f64, e: &FlowError) -> Failure {
    Failure {
        t,
        kind: kind_of(e.root()),
        message: e.to_string(),
    }
}

fn kind_of(e: &FlowError) -> &'static str {
    match e {
        FlowError::InvalidGrid(_) | FlowError::InvalidInput(_) | FlowError::GridMismatch => "invalid-input",
        FlowError::NonPositiveField { .. } => "non-positive-field",
        FlowError::SolverSingular { .. } => "solver-singular",
        FlowError::CflViolation { .. } => "cfl-violation",
        FlowError::NotConservative { .. } => "not-conservative",
        FlowError::ConvergenceFailure { .. } => "convergence-failure",
        FlowError::InconsistentData(_) => "inconsistent-data",
        FlowError::ProfileDegenerate(_) => "profile-degenerate",
        FlowError::GapTooSmall { .. } => "gap-too-small",
        FlowError::NotConverged { .. } => "not-converged",
        FlowError::StepFailed { .. } => "step-failed",
    }
}

fn split<S>(result: Result<Trajectory<S>, EvolveFailure<S>>) -> (Trajectory<S>, Option<Failure>) {
    match result {
        Ok(t) => (t, None),
        Err(f) => {
            let fail = failure(f.t, &f.error);
            (f.partial, Some(fail))
        }
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Least-squares rate over samples with `t ≥ from` above the round-off floor.
fn rate_fit(samples: &[(f64, f64)], from: f64, expected: f64) -> Value {
    let window: Vec<(f64, f64)> = samples.iter().copied().filter(|(t, v)| *t >= from && *v > FIT_FLOOR).collect();
    if window.len() < 3 {
        return json!({"fitted": null, "expected": expected, "samples": window.len()});
    }
    match fit_exponential_rate(&window) {
        Ok(fit) => json!({
            "fitted": fit.rate,
            "expected": expected,
            "relative_error": (fit.rate - expected).abs() / expected,
            "samples": fit.samples,
        }),
        Err(_) => json!({"fitted": null, "expected": expected, "samples": window.len()}),
    }
}

fn snapshots<S>(
    cfg: &RunConfig,
    traj: &Trajectory<S>,
    fields: impl Fn(&S) -> Vec<(String, Vec<f64>)>,
) -> Vec<Snapshot> {
    let x = cfg.grid().coordinates();
    snapshot_indices(&traj.times(), cfg.output.snapshots.as_deref())
        .into_iter()
        .map(|i| {
            let r = &traj.records[i];
            let mut cols = vec![("x".to_string(), x.clone())];
            cols.extend(fields(&r.state));
            Snapshot {
                t: r.t,
                fields: Table::from_columns(cols),
            }
        })
        .collect()
}

fn col(name: &str, v: &[f64]) -> (String, Vec<f64>) {
    (name.to_string(), v.to_vec())
}

fn surface(cfg: &RunConfig, control: RunControl, report: &mut Report) {
    let grid = cfg.grid();
    let rho0 = cfg.sample(&cfg.initial_family().expect("validated"));
    let (traj, fail) = split(run_surface_of_revolution(&SurfaceConfig {
        rho0: rho0.clone(),
        control,
        z0: 0.0,
    }));
    report.failure = fail;

    let periodic = grid.is_periodic();
    let limit = if periodic {
        ScalarField::constant(grid, rho0.mean())
    } else {
        let v = rho0.values();
        linear_limit(grid, v[0], v[v.len() - 1])
    }
    .expect("limit profile on a valid grid");

    let mut table = Table::new(&[
        "t",
        "sup_K",
        "sup_k",
        "min_rho",
        "sup_dev_limit",
        "arc_length_residual",
        "conformal_mismatch",
        "riccati_residual",
    ]);
    let mut dev = Vec::new();
    let (mut arc, mut conf, mut ric): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for r in &traj.records {
        let s = &r.state;
        let d = s.rho.sup_distance(&limit).unwrap_or(f64::NAN);
        dev.push((r.t, d));
        arc = arc.max(s.arc_length_residual());
        conf = conf.max(s.conformal_mismatch());
        ric = ric.max(r.diagnostics.riccati_res);
        table.push(vec![
            r.t,
            s.gauss_curvature.sup_norm(),
            s.k.sup_norm(),
            s.rho.min(),
            d,
            s.arc_length_residual(),
            s.conformal_mismatch(),
            r.diagnostics.riccati_res,
        ]);
    }
    report.trajectory = table;
    report.snapshots = snapshots(cfg, &traj, |s| {
        vec![
            col("rho", s.rho.values()),
            col("h", s.h.values()),
            col("k", s.k.values()),
            col("K", s.gauss_curvature.values()),
            col("conformal_factor", s.conformal_factor.values()),
        ]
    });
    if traj.is_empty() {
        return;
    }
    let last = traj.last();
    let slowest = if periodic {
        (2.0 * PI / grid.length()).powi(2)
    } else {
        (PI / grid.length()).powi(2)
    };
    let crosscheck = match surface_evolution_crosscheck(&traj) {
        Ok(c) => json!({"k_residual": c.k_residual, "curvature_residual": c.curvature_residual}),
        Err(e) => json!({"unavailable": e.to_string()}),
    };
    let mut results = json!({
        "limit": if periodic { "fiber-mean" } else { "linear-interpolant" },
        "final": {
            "t": last.t,
            "sup_K": last.state.gauss_curvature.sup_norm(),
            "sup_k": last.state.k.sup_norm(),
            "min_rho": last.state.rho.min(),
            "sup_dev_limit": dev.last().map_or(f64::NAN, |d| d.1),
        },
        "max_arc_length_residual": arc,
        "max_conformal_mismatch": conf,
        "max_riccati_residual": ric,
        "decay_rate": rate_fit(&dev, 0.5 * last.t, slowest),
        "evolution_crosscheck": crosscheck,
    });
    if periodic {
        let m0 = integrate(&rho0);
        let drift = traj
            .records
            .iter()
            .filter(|r| r.t > 0.0)
            .map(|r| (integrate(&r.state.rho) - m0).abs() / r.t)
            .fold(0.0, f64::max);
        results["mass_drift_rate"] = json!(drift);
    }
    report.results = results;
}

fn twisted(cfg: &RunConfig, control: RunControl, report: &mut Report) {
    let profile = cfg.sample(&cfg.initial_family().expect("validated"));
    let base = cfg.base_profile();
    let base_x = cfg.base_coordinates();
    let slices: Vec<ScalarField> = base_x
        .iter()
        .map(|&x| profile.scaled(base_value(&base, x, cfg.base_length()).expect("validated")))
        .collect();
    let n = cfg.rank();
    let means0: Vec<f64> = slices.iter().map(ScalarField::mean).collect();
    let (traj, fail) = split(run_twisted_product(&TwistedConfig {
        n,
        slices: slices.clone(),
        control,
    }));
    report.failure = fail;

    let masses0: Vec<f64> = slices.iter().map(integrate).collect();
    let mut table = Table::new(&["t", "sup_H", "min_f", "sup_dev_mean", "mass_drift"]);
    let mut dev = Vec::new();
    for r in &traj.records {
        let s = &r.state;
        let sup_h = s.h.iter().map(|h| h.sup_norm()).fold(0.0, f64::max);
        let d = s
            .f
            .iter()
            .zip(&means0)
            .map(|(f, m)| sup_abs(&f.values().iter().map(|v| v - m).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        let mass = s
            .f
            .iter()
            .zip(&masses0)
            .map(|(f, m)| (integrate(f) - m).abs())
            .fold(0.0, f64::max);
        dev.push((r.t, d));
        table.push(vec![r.t, sup_h, r.diagnostics.min_u, d, mass]);
    }
    report.trajectory = table;
    report.snapshots = snapshots(cfg, &traj, |s| {
        let mut cols = Vec::new();
        for (i, (f, h)) in s.f.iter().zip(&s.h).enumerate() {
            cols.push(col(&format!("f_{i}"), f.values()));
            cols.push(col(&format!("H_{i}"), h.values()));
        }
        cols
    });
    if traj.is_empty() {
        return;
    }
    let last = traj.last();
    let length = cfg.grid().length();
    let residual = match multi_burgers_residual(&traj, n) {
        Ok(r) => json!(r),
        Err(e) => json!({"unavailable": e.to_string()}),
    };
    report.results = json!({
        "base_points": base_x,
        "limit_slice_means": means0,
        "final_slice_means": last.state.slice_means(),
        "final_sup_dev_mean": dev.last().map_or(f64::NAN, |d| d.1),
        "mass_drift_rate": slice_mass_drift_rate(&traj),
        "mean_curvature_equation_residual": residual,
        "decay_rate": rate_fit(&dev, 0.5 * last.t, n as f64 * (2.0 * PI / length).powi(2)),
    });
}

fn normalized(cfg: &RunConfig, control: RunControl, report: &mut Report) {
    let beta = cfg.sample(&cfg.potential_family().expect("validated"));
    let u0 = cfg.sample(&cfg.initial_family().expect("validated"));
    let t2_0 = cfg.sample(&cfg.t2_family());
    let n = cfg.rank();
    let mut ncfg = NormalizedConfig::new(n, beta, u0, t2_0, control);
    ncfg.seed = cfg.seed();
    let (traj, fail) = split(run_normalized_flow(&ncfg));
    report.failure = fail;

    let mut table = Table::new(&[
        "t",
        "sup_dev_scmix",
        "sup_dev_h",
        "rayleigh",
        "lambda0",
        "gap",
        "min_u",
        "min_T2",
        "betad_drift",
        "conservation_drift",
    ]);
    for r in &traj.records {
        let s = &r.state;
        let d = &r.diagnostics;
        table.push(vec![
            r.t,
            s.deviation,
            s.h_deviation,
            d.rayleigh,
            s.ground.lambda0,
            s.ground.gap,
            d.min_u,
            s.t2.min(),
            d.betad_drift,
            d.conservation_drift,
        ]);
    }
    report.trajectory = table;
    report.snapshots = snapshots(cfg, &traj, |s| {
        vec![
            col("u", s.u.values()),
            col("H", s.h.values()),
            col("beta_D", s.beta_d.values()),
            col("T2", s.t2.values()),
            col("scmix_T2", s.scmix_t2.values()),
            col("e0", s.ground.e0.values()),
        ]
    });
    if traj.is_empty() {
        return;
    }
    let last = traj.last();
    let g = &last.state.ground;
    let nf = n as f64;
    let samples: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, r.state.deviation)).collect();
    let states: Vec<_> = traj.records.iter().map(|r| (r.t, &r.state)).collect();
    let conservation = match conservation_report(&states, ncfg.mode, cfg.eps_t()) {
        Ok(c) => json!({"betad_drift": c.betad_drift, "conservation_drift": c.conservation_drift}),
        Err(e) => json!({"unavailable": e.to_string()}),
    };
    let positivity = match positivity_verdict(&last.state) {
        Ok(p) => json!({
            "positive_everywhere": p.positive_everywhere,
            "min_limit_scmix": p.min_limit,
            "threshold_T2": p.threshold_t2,
            "threshold_ratio": p.threshold_ratio,
        }),
        Err(e) => json!({"unavailable": e.to_string()}),
    };
    report.results = json!({
        "ground_state": {"lambda0": g.lambda0, "lambda1": g.lambda1, "gap": g.gap, "phi": nf * g.lambda0},
        "settling_time": NormalizedConfig::settling_time(n, g),
        "final": {"t": last.t, "sup_dev_scmix": last.state.deviation, "sup_dev_h": last.state.h_deviation},
        "decay_rate": rate_fit(&samples, 1.0 / (nf * g.gap), nf * g.gap),
        "conservation": conservation,
        "positivity": positivity,
    });
}

fn cole_hopf(cfg: &RunConfig, control: RunControl, report: &mut Report) {
    let u0 = cfg.sample(&cfg.initial_family().expect("validated"));
    let beta = cfg.sample(&cfg.potential_family().expect("validated"));
    let n = cfg.rank();
    let nf = n as f64;
    let dt = control.effective_dt();
    let scheme = match cfg.scheme {
        SchemeSpec::CrankNicolson => Scheme::CrankNicolson,
        SchemeSpec::ExplicitEuler => Scheme::ExplicitEuler,
    };
    let fd = Differentiation::FiniteDifference;
    let pure_heat = beta.sup_norm() == 0.0;
    let mut table = Table::new(&["t", "sup_diff", "sup_H", "min_u"]);
    let mut records: Vec<(f64, ScalarField, ScalarField, ScalarField)> = Vec::new();
    let mut max_diff: f64 = 0.0;
    let m0 = integrate(&u0);
    let mut mass_drift: f64 = 0.0;

    let outcome = (|| -> Result<(), (f64, FlowError)> {
        let at0 = |e| (0.0, e);
        let heat = StepperConfig::new(dt, nf, scheme, Boundary::Periodic).map_err(at0)?;
        let potential = beta.scaled(nf);
        let mut u = u0.clone();
        let mut h = velocity_from_potential_with(&u, nf, fd).map_err(at0)?;
        let mut record = |t: f64, u: &ScalarField, h: &folflow_core::VectorAlongFiber| -> Result<(), FlowError> {
            let from_u = velocity_from_potential_with(u, nf, fd)?;
            let d = h.sup_distance(&from_u)?;
            max_diff = max_diff.max(d);
            table.push(vec![t, d, h.sup_norm(), u.min()]);
            records.push((t, u.clone(), h.component().clone(), from_u.into_component()));
            Ok(())
        };
        record(0.0, &u, &h).map_err(at0)?;
        let steps = control.steps();
        for k in 1..=steps {
            let t_prev = (k - 1) as f64 * dt;
            let t = if k == steps { control.t_end } else { k as f64 * dt };
            let at = |e| (t_prev, e);
            u = step_heat_reaction(&u, &potential, &heat).map_err(at)?;
            if pure_heat {
                mass_drift = mass_drift.max((integrate(&u) - m0).abs() / t);
            } else {
                u = u.normalized_mean().map_err(at)?;
            }
            h = step_burgers_forced(&h, &beta, &heat).map_err(at)?;
            if k % control.record_every == 0 || k == steps {
                record(t, &u, &h).map_err(|e| (t, e))?;
            }
        }
        Ok(())
    })();
    if let Err((t, e)) = outcome {
        report.failure = Some(failure(t, &e));
    }
    report.trajectory = table;
    let times: Vec<f64> = records.iter().map(|r| r.0).collect();
    let x = cfg.grid().coordinates();
    report.snapshots = snapshot_indices(&times, cfg.output.snapshots.as_deref())
        .into_iter()
        .map(|i| {
            let (t, u, hd, hu) = &records[i];
            Snapshot {
                t: *t,
                fields: Table::from_columns(vec![
                    col("x", &x),
                    col("u", u.values()),
                    col("H_direct", hd.values()),
                    col("H_from_u", hu.values()),
                ]),
            }
        })
        .collect();
    let roundtrip = match roundtrip_residual(&u0, nf) {
        Ok(r) => json!(r),
        Err(e) => json!({"unavailable": e.to_string()}),
    };
    report.results = json!({
        "final_sup_diff": report.trajectory.rows.last().map(|r| r[1]),
        "max_sup_diff": max_diff,
        "roundtrip_residual": roundtrip,
        "mass_drift_rate": if pure_heat { json!(mass_drift) } else { Value::Null },
    });
}

fn spectral(cfg: &RunConfig, report: &mut Report) {
    let grid = cfg.grid();
    let f = cfg.sample(&cfg.potential_family().expect("validated"));
    let m = cfg.modes();
    let dec = match spectrum_seeded(&f, m, cfg.seed()) {
        Ok(d) => d,
        Err(e) => {
            report.trajectory = Table::new(&["t", "lambda0", "lambda1", "gap", "max_residual"]);
            report.failure = Some(failure(0.0, &e));
            return;
        }
    };
    let op = assemble_operator(&f);
    let residuals: Vec<f64> = dec
        .eigenvalues
        .iter()
        .zip(&dec.eigenfunctions)
        .map(|(l, e)| eigen_residual(&op, *l, e).unwrap_or(f64::NAN))
        .collect();
    let l0 = dec.eigenvalues[0];
    let l1 = dec.eigenvalues.get(1).copied().unwrap_or(f64::NAN);
    let mut table = Table::new(&["t", "lambda0", "lambda1", "gap", "max_residual"]);
    table.push(vec![0.0, l0, l1, l1 - l0, residuals.iter().copied().fold(0.0, f64::max)]);
    report.trajectory = table;

    let mut cols = vec![col("x", &grid.coordinates()), col("f", f.values())];
    for (i, e) in dec.eigenfunctions.iter().enumerate() {
        cols.push(col(&format!("e_{i}"), e.values()));
    }
    report.snapshots = vec![Snapshot {
        t: 0.0,
        fields: Table::from_columns(cols),
    }];

    let gram_dev = gram_matrix(&dec)
        .map(|g| {
            g.iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, v)| (v - f64::from(u8::from(i == j))).abs()))
                .fold(0.0, f64::max)
        })
        .unwrap_or(f64::NAN);
    let theta = weyl_constant(&grid);
    let weyl: Vec<Value> = dec
        .eigenvalues
        .iter()
        .filter(|l| **l > 0.0)
        .map(|&l| json!({"lambda": l, "count": eigencount(&dec, l), "weyl": theta * l.sqrt()}))
        .collect();
    let mut results = json!({
        "eigenvalues": dec.eigenvalues,
        "residuals": residuals,
        "gram_max_deviation": gram_dev,
        "lower_bound_holds": l0 >= -f.max(),
        "ground_state_positive": dec.eigenfunctions[0].min() > 0.0,
        "weyl_constant": theta,
        "weyl_counts": weyl,
    });
    if let Some(fam) = &cfg.initial_data {
        results["expansion"] = expansion(&cfg.sample(fam), &dec);
    }
    report.results = results;
}

/// Coefficients of `u` and the sup error of each partial sum.
fn expansion(u: &ScalarField, dec: &SpectralDecomposition) -> Value {
    let Ok(coeffs) = expand(u, dec) else {
        return Value::Null;
    };
    let errors: Vec<f64> = (1..=dec.len())
        .map(|k| {
            let sub = SpectralDecomposition {
                eigenvalues: dec.eigenvalues[..k].to_vec(),
                eigenfunctions: dec.eigenfunctions[..k].to_vec(),
            };
            reconstruct(&coeffs[..k], &sub)
                .and_then(|r| r.sup_distance(u))
                .unwrap_or(f64::NAN)
        })
        .collect();
    json!({"coefficients": coeffs, "partial_sum_errors": errors})
}
