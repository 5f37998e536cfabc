//! Extrinsic-geometry bookkeeping along the fibers: the non-umbilicity
//! measure β_D, the mixed scalar curvature identity, the Riccati equation of
//! the rank-one case, and drift monitors for the quantities the flow conserves.

use crate::error::{FlowError, Result};
use crate::fiber::{
    derivative, derivative_with, ensure_positive, ensure_same_grid, integrate, laplacian,
    Differentiation, ScalarField, VectorAlongFiber,
};

/// Threshold defining the discrete set where the integrability tensor does not vanish.
pub const EPS_T: f64 = 1e-8;

const ALGEBRA_TOL: f64 = 1e-12;

/// Per-step residuals and invariant drifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub betad_drift: f64,
    pub conservation_drift: f64,
    pub riccati_res: f64,
    pub min_u: f64,
    pub rayleigh: f64,
    /// Sup-deviation of `Sc_mix - ‖T‖²` from its limit value `n λ₀`.
    pub scmix_minus_t2_dev: f64,
}

impl DiagnosticsRecord {
    pub fn at(t: f64) -> Self {
        Self {
            t,
            betad_drift: 0.0,
            conservation_drift: 0.0,
            riccati_res: 0.0,
            min_u: 0.0,
            rayleigh: 0.0,
            scmix_minus_t2_dev: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.betad_drift,
            self.conservation_drift,
            self.riccati_res,
            self.min_u,
            self.rayleigh,
            self.scmix_minus_t2_dev,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Second fundamental form data of the orthogonal distribution `D` (rank `n`),
/// sampled along a fiber.
#[derive(Debug, Clone)]
pub struct ExtrinsicData {
    n: usize,
    principal_curvatures: Option<Vec<Vec<f64>>>,
    b_norm_sq: ScalarField,
    mean_curvature: VectorAlongFiber,
    t_norm_sq: ScalarField,
}

impl ExtrinsicData {
    pub fn new(
        n: usize,
        b_norm_sq: ScalarField,
        mean_curvature: VectorAlongFiber,
        t_norm_sq: ScalarField,
    ) -> Result<Self> {
        if n == 0 {
            return Err(FlowError::InvalidInput("rank n must be at least 1".into()));
        }
        ensure_same_grid(b_norm_sq.grid(), mean_curvature.grid())?;
        ensure_same_grid(b_norm_sq.grid(), t_norm_sq.grid())?;
        let nf = n as f64;
        for (j, (b, h)) in b_norm_sq.values().iter().zip(mean_curvature.values()).enumerate() {
            let gap = nf * b - h * h;
            if gap < -ALGEBRA_TOL * (1.0 + nf * b.abs()) {
                return Err(FlowError::InconsistentData(format!(
                    "n‖b‖² < |H|² at node {j} ({} < {})",
                    nf * b,
                    h * h
                )));
            }
        }
        if t_norm_sq.min() < 0.0 {
            return Err(FlowError::InconsistentData("‖T‖² must be non-negative".into()));
        }
        Ok(Self {
            n,
            principal_curvatures: None,
            b_norm_sq,
            mean_curvature,
            t_norm_sq,
        })
    }

    /// Rank-one fibers (p = 1): `b` is determined by the `n` principal
    /// curvatures at each node, so `‖b‖² = Σ k_i²` and `H = Σ k_i`.
    pub fn from_principal_curvatures(
        grid: crate::fiber::FiberGrid,
        curvatures: Vec<Vec<f64>>,
        t_norm_sq: ScalarField,
    ) -> Result<Self> {
        let n = curvatures.first().map(Vec::len).unwrap_or(0);
        if curvatures.len() != grid.n_points() || curvatures.iter().any(|k| k.len() != n) {
            return Err(FlowError::InvalidInput(
                "need one curvature vector of common length per node".into(),
            ));
        }
        let b: Vec<f64> = curvatures.iter().map(|k| k.iter().map(|v| v * v).sum()).collect();
        let h: Vec<f64> = curvatures.iter().map(|k| k.iter().sum()).collect();
        let mut data = Self::new(
            n,
            ScalarField::new(grid, b)?,
            VectorAlongFiber::new(grid, h)?,
            t_norm_sq,
        )?;
        data.principal_curvatures = Some(curvatures);
        Ok(data)
    }

    /// Attach principal curvatures to independently supplied `‖b‖²`, `H`.
    pub fn with_principal_curvatures(mut self, curvatures: Vec<Vec<f64>>) -> Result<Self> {
        if curvatures.len() != self.b_norm_sq.len() || curvatures.iter().any(|k| k.len() != self.n) {
            return Err(FlowError::InvalidInput(
                "need n principal curvatures per node".into(),
            ));
        }
        self.principal_curvatures = Some(curvatures);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean_curvature(&self) -> &VectorAlongFiber {
        &self.mean_curvature
    }

    pub fn b_norm_sq(&self) -> &ScalarField {
        &self.b_norm_sq
    }

    pub fn t_norm_sq(&self) -> &ScalarField {
        &self.t_norm_sq
    }
}

/// Non-umbilicity `β_D = n⁻²(n‖b‖² - |H|²)`; cross-checked against
/// `n⁻² Σ_{i<j} (k_i - k_j)²` when principal curvatures are present.
pub fn beta_d(data: &ExtrinsicData) -> Result<ScalarField> {
    let nf = data.n as f64;
    let general: Vec<f64> = data
        .b_norm_sq
        .values()
        .iter()
        .zip(data.mean_curvature.values())
        .map(|(b, h)| (nf * b - h * h) / (nf * nf))
        .collect();
    if let Some(ks) = &data.principal_curvatures {
        for (j, (k, g)) in ks.iter().zip(&general).enumerate() {
            let mut pairwise = 0.0;
            for a in 0..k.len() {
                for b in a + 1..k.len() {
                    pairwise += (k[a] - k[b]).powi(2);
                }
            }
            pairwise /= nf * nf;
            let scale = 1.0 + k.iter().map(|v| v * v).sum::<f64>();
            if (pairwise - g).abs() > ALGEBRA_TOL * scale {
                return Err(FlowError::InconsistentData(format!(
                    "β_D formulas disagree at node {j}: {g} vs {pairwise}"
                )));
            }
        }
    }
    if let Some(j) = general.iter().position(|&v| v < -ALGEBRA_TOL) {
        return Err(FlowError::InconsistentData(format!(
            "negative β_D {} at node {j}",
            general[j]
        )));
    }
    ScalarField::new(*data.b_norm_sq.grid(), general)
}

/// `Sc_mix - ‖T‖² = Div H - |H|²/n - n β_D`, with `Div` the leafwise derivative.
pub fn sc_mix_minus_t2(h: &VectorAlongFiber, n: usize, beta: &ScalarField) -> Result<ScalarField> {
    sc_mix_minus_t2_with(h, n, beta, Differentiation::FiniteDifference)
}

pub fn sc_mix_minus_t2_with(
    h: &VectorAlongFiber,
    n: usize,
    beta: &ScalarField,
    mode: Differentiation,
) -> Result<ScalarField> {
    ensure_same_grid(h.grid(), beta.grid())?;
    let nf = n as f64;
    let div = derivative_with(h.component(), mode)?;
    ScalarField::new(
        *h.grid(),
        div.values()
            .iter()
            .zip(h.values())
            .zip(beta.values())
            .map(|((d, hv), b)| d - hv * hv / nf - nf * b)
            .collect(),
    )
}

/// `Sc_mix - ‖T‖²` for `H = -n ∇ log u`, written through the potential:
/// `-n (Δu/u + β_D)`. Equal to the derivative form in the continuum, and
/// exactly `n λ₀` at the discrete ground state.
pub fn sc_mix_minus_t2_from_potential(u: &ScalarField, n: usize, beta: &ScalarField) -> Result<ScalarField> {
    ensure_same_grid(u.grid(), beta.grid())?;
    ensure_positive(u)?;
    let nf = n as f64;
    let lap = laplacian(u);
    ScalarField::new(
        *u.grid(),
        lap.values()
            .iter()
            .zip(u.values())
            .zip(beta.values())
            .map(|((l, uv), b)| -nf * (l / uv + b))
            .collect(),
    )
}

/// Pointwise Riccati defect `k' - k² - K` for the rank-one case.
pub fn riccati_defect(k: &ScalarField, curvature: &ScalarField) -> Result<ScalarField> {
    ensure_same_grid(k.grid(), curvature.grid())?;
    let dk = derivative(k);
    ScalarField::new(
        *k.grid(),
        dk.values()
            .iter()
            .zip(k.values())
            .zip(curvature.values())
            .map(|((d, kv), kk)| d - kv * kv - kk)
            .collect(),
    )
}

/// `‖k' - k² - K‖∞`.
pub fn riccati_residual(k: &ScalarField, curvature: &ScalarField) -> Result<f64> {
    Ok(riccati_defect(k, curvature)?.sup_norm())
}

/// As [`riccati_residual`], skipping the two outermost nodes at each interval
/// end, where nested one-sided stencils lose an order.
pub fn riccati_residual_interior(k: &ScalarField, curvature: &ScalarField) -> Result<f64> {
    let d = riccati_defect(k, curvature)?;
    let v = d.values();
    let inner = if k.grid().is_periodic() { v } else { &v[2..v.len() - 2] };
    Ok(inner.iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// Fields a conservation monitor reads from one recorded state.
#[derive(Debug, Clone, Copy)]
pub struct ConservedSample<'a> {
    pub t: f64,
    pub n: usize,
    pub beta: Option<&'a ScalarField>,
    pub mean_curvature: Option<&'a VectorAlongFiber>,
    pub t_norm_sq: Option<&'a ScalarField>,
    /// Field whose integral is conserved (heat flows with zero reaction).
    pub mass_field: Option<&'a ScalarField>,
}

pub trait Conserved {
    fn conserved(&self, t: f64) -> ConservedSample<'_>;
}

/// Maximum drifts over a trajectory, plus per-record values.
#[derive(Debug, Clone)]
pub struct ConservationReport {
    pub records: Vec<DiagnosticsRecord>,
    pub betad_drift: f64,
    /// Drift of `2H - n ∇ log‖T‖` on the set `‖T‖² > ε_T`; `None` without `H` and `‖T‖²`.
    pub conservation_drift: Option<f64>,
    /// `max_t |m(t) - m(0)| / t`; `None` without a mass field.
    pub mass_drift_rate: Option<f64>,
}

/// `2H - n ∇ log‖T‖`, with `∇ log‖T‖ = (‖T‖²)' / (2‖T‖²)`, evaluated where `‖T‖² > ε_T`.
pub fn conservation_quantity(
    h: &VectorAlongFiber,
    t_norm_sq: &ScalarField,
    n: usize,
    mode: Differentiation,
    eps_t: f64,
) -> Result<Vec<Option<f64>>> {
    ensure_same_grid(h.grid(), t_norm_sq.grid())?;
    let dt2 = derivative_with(t_norm_sq, mode)?;
    let nf = n as f64;
    Ok(h.values()
        .iter()
        .zip(t_norm_sq.values())
        .zip(dt2.values())
        .map(|((hv, t2), d)| (*t2 > eps_t).then(|| 2.0 * hv - nf * d / (2.0 * t2)))
        .collect())
}

/// Drift of β_D, of the conservation law `∂t(2H - n ∇ log‖T‖) = 0`, and of
/// fiber mass, measured against the first record.
pub fn conservation_report<S: Conserved>(
    states: &[(f64, &S)],
    mode: Differentiation,
    eps_t: f64,
) -> Result<ConservationReport> {
    let Some((t0, first)) = states.first() else {
        return Err(FlowError::InvalidInput("empty trajectory".into()));
    };
    let s0 = first.conserved(*t0);
    let c0 = match (s0.mean_curvature, s0.t_norm_sq) {
        (Some(h), Some(t2)) => Some(conservation_quantity(h, t2, s0.n, mode, eps_t)?),
        _ => None,
    };
    let m0 = s0.mass_field.map(integrate);

    let mut report = ConservationReport {
        records: Vec::with_capacity(states.len()),
        betad_drift: 0.0,
        conservation_drift: c0.as_ref().map(|_| 0.0),
        mass_drift_rate: m0.map(|_| 0.0),
    };
    for (t, state) in states {
        let s = state.conserved(*t);
        let mut rec = DiagnosticsRecord::at(*t);
        if let (Some(b0), Some(b)) = (s0.beta, s.beta) {
            rec.betad_drift = b.sup_distance(b0)?;
            report.betad_drift = report.betad_drift.max(rec.betad_drift);
        }
        if let (Some(c0), Some(h), Some(t2)) = (&c0, s.mean_curvature, s.t_norm_sq) {
            let c = conservation_quantity(h, t2, s.n, mode, eps_t)?;
            let mut drift: f64 = 0.0;
            for (a, b) in c0.iter().zip(&c) {
                match (a, b) {
                    (Some(a), Some(b)) => drift = drift.max((a - b).abs()),
                    (None, None) => {}
                    // The zero set of T is time-independent; a change is an infinite drift.
                    _ => drift = f64::INFINITY,
                }
            }
            rec.conservation_drift = drift;
            if let Some(d) = report.conservation_drift.as_mut() {
                *d = d.max(drift);
            }
        }
        if let (Some(m0), Some(u)) = (m0, s.mass_field) {
            let dm = (integrate(u) - m0).abs();
            if *t > *t0 {
                if let Some(r) = report.mass_drift_rate.as_mut() {
                    *r = r.max(dm / (t - t0));
                }
            }
        }
        report.records.push(rec);
    }
    Ok(report)
}

impl Conserved for ScalarField {
    fn conserved(&self, t: f64) -> ConservedSample<'_> {
        ConservedSample {
            t,
            n: 1,
            beta: None,
            mean_curvature: None,
            t_norm_sq: None,
            mass_field: Some(self),
        }
    }
}
