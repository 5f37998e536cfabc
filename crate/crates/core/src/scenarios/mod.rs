//! End-to-end realizations of the flow: surfaces of revolution, twisted
//! products, and the normalized fiber-bundle flow.

mod normalized;
mod surface;
mod twisted;

pub use normalized::{
    normalized_burgers_crosscheck, positivity_verdict, run_normalized_flow, NormalizedConfig,
    NormalizedState, PositivityReport, CONVERGED_DEVIATION, MIN_GAP,
};
pub use surface::{
    burgers_curvature_crosscheck, linear_limit, run_surface_of_revolution, surface_evolution_crosscheck,
    SurfaceConfig, SurfaceCrosscheck, SurfaceState, SLOPE_TOL,
};
pub use twisted::{
    multi_burgers_residual, run_twisted_product, slice_mass_drift_rate, TwistedConfig, TwistedState,
};

use crate::error::{FlowError, Result};

/// Least-squares fit of `v(t) ≈ A e^{-rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub log_amplitude: f64,
    pub samples: usize,
}

/// Fits a decay rate to the positive, finite samples of `(t, v)`.
pub fn fit_exponential_rate(samples: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, v)| t.is_finite() && v.is_finite() && *v > 0.0)
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(FlowError::InvalidInput("rate fit needs two positive samples".into()));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FlowError::InvalidInput("rate fit needs distinct times".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        rate: -slope,
        log_amplitude: ym - slope * tm,
        samples: pts.len(),
    })
}

/// Central time differences need equally spaced records.
fn uniform_spacing(times: &[f64]) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let dt = times[1] - times[0];
    let ok = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
    ok.then_some(dt)
}
