//! Run configuration: the TOML schema, documented defaults, and fail-closed validation.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use folflow_core::schrodinger::DEFAULT_SEED;
use folflow_core::{FiberGrid, ScalarField, Topology};
use serde::{Deserialize, Serialize};

use crate::families::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Surface,
    Twisted,
    Normalized,
    ColeHopfCheck,
    SpectralReport,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Surface,
        Scenario::Twisted,
        Scenario::Normalized,
        Scenario::ColeHopfCheck,
        Scenario::SpectralReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Surface => "surface",
            Scenario::Twisted => "twisted",
            Scenario::Normalized => "normalized",
            Scenario::ColeHopfCheck => "cole-hopf-check",
            Scenario::SpectralReport => "spectral-report",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologySpec {
    Circle,
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub topology: TopologySpec,
    /// Defaults to 2π on a circle and 1 on an interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    pub n_points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<FiberGrid, String> {
        let topology = match self.topology {
            TopologySpec::Circle => Topology::Circle,
            TopologySpec::Interval => Topology::Interval,
        };
        let length = self.length.unwrap_or_else(|| default_length(self.topology));
        FiberGrid::new(topology, length, self.n_points).map_err(|e| e.to_string())
    }
}

fn default_length(t: TopologySpec) -> f64 {
    match t {
        TopologySpec::Circle => 2.0 * PI,
        TopologySpec::Interval => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    /// Defaults to `min(1e-3, 0.25 h²)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_t_end() -> f64 {
    1.0
}

fn default_record_every() -> usize {
    1
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: default_t_end(),
            record_every: default_record_every(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeSpec {
    #[default]
    CrankNicolson,
    ExplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySpec {
    Periodic,
    Dirichlet { left: f64, right: f64 },
}

/// Base direction of a twisted product: `f₀(x_i, y) = base_profile(x_i) · initial_data(y)`
/// at `base_points` equally spaced `x_i` on a circle of length `base_length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistedSpec {
    pub base_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_profile: Option<Family>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_modes() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    /// Threshold of the set `‖T‖² > eps_t` where the conservation law is monitored.
    #[serde(default = "default_eps_t")]
    pub eps_t: f64,
}

fn default_eps_t() -> f64 {
    folflow_core::mixed_curvature::EPS_T
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Times of the `fields_<t>.csv` snapshots (nearest record); default first and last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<f64>>,
    #[serde(default = "default_plot")]
    pub plot: bool,
}

fn default_plot() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            snapshots: None,
            plot: default_plot(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub grid: GridSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_data: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rank: Option<usize>,
    #[serde(default, rename = "T2_initial", skip_serializing_if = "Option::is_none")]
    pub t2_initial: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twisted: Option<TwistedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative paths (CSV profiles) resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        message: String,
    },
    Parse {
        line: Option<usize>,
        column: Option<usize>,
        field: Option<String>,
        message: String,
    },
    Validation {
        violations: Vec<String>,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read {}: {message}", path.display()),
            ConfigError::Parse { line, field, message, .. } => {
                write!(f, "parse error")?;
                if let Some(l) = line {
                    write!(f, " at line {l}")?;
                }
                if let Some(k) = field {
                    write!(f, " (field `{k}`)")?;
                }
                write!(f, ": {message}")
            }
            ConfigError::Validation { violations } => {
                write!(f, "{} violation(s): {}", violations.len(), violations.join("; "))
            }
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_str(&text, &base)
}

/// Parses, fills documented defaults, and validates.
pub fn parse_str(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    cfg.base_dir = base_dir.to_path_buf();
    cfg.fill_defaults();
    let violations = cfg.violations();
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation { violations })
    }
}

pub fn serialize(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration is always representable in TOML")
}

fn parse_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let message = e.message().to_string();
    let (line, column, line_text) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let start = before.rfind('\n').map_or(0, |i| i + 1);
            let column = before[start..].chars().count() + 1;
            let line_text = text[start..].lines().next().unwrap_or("");
            (Some(line), Some(column), line_text)
        }
        None => (None, None, ""),
    };
    let field = backticked_field(&message).or_else(|| {
        let key = line_text.split('=').next()?.trim();
        (line_text.contains('=') && !key.is_empty()).then(|| key.to_string())
    });
    ConfigError::Parse {
        line,
        column,
        field,
        message,
    }
}

fn backticked_field(message: &str) -> Option<String> {
    for marker in ["unknown field `", "missing field `", "unknown variant `"] {
        if let Some(i) = message.find(marker) {
            let rest = &message[i + marker.len()..];
            return rest.find('`').map(|j| rest[..j].to_string());
        }
    }
    None
}

/// Topology requirement and the optional sections a scenario reads.
struct Usage {
    circle_only: bool,
    initial_data: bool,
    potential: bool,
    n_rank: bool,
    t2_initial: bool,
    boundary: bool,
    twisted: bool,
    spectral: bool,
    explicit_scheme: bool,
    tolerances: bool,
}

fn usage(s: Scenario) -> Usage {
    let none = Usage {
        circle_only: false,
        initial_data: false,
        potential: false,
        n_rank: false,
        t2_initial: false,
        boundary: false,
        twisted: false,
        spectral: false,
        explicit_scheme: false,
        tolerances: false,
    };
    match s {
        Scenario::Surface => Usage {
            initial_data: true,
            boundary: true,
            ..none
        },
        Scenario::Twisted => Usage {
            circle_only: true,
            initial_data: true,
            n_rank: true,
            twisted: true,
            ..none
        },
        Scenario::Normalized => Usage {
            circle_only: true,
            initial_data: true,
            potential: true,
            n_rank: true,
            t2_initial: true,
            tolerances: true,
            ..none
        },
        Scenario::ColeHopfCheck => Usage {
            circle_only: true,
            initial_data: true,
            potential: true,
            n_rank: true,
            explicit_scheme: true,
            ..none
        },
        Scenario::SpectralReport => Usage {
            initial_data: true,
            potential: true,
            spectral: true,
            ..none
        },
    }
}

impl RunConfig {
    pub fn rank(&self) -> usize {
        self.n_rank.unwrap_or(1)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn eps_t(&self) -> f64 {
        self.tolerances.as_ref().map_or_else(default_eps_t, |t| t.eps_t)
    }

    pub fn dt(&self) -> f64 {
        self.time.dt.expect("defaults are filled at load")
    }

    pub fn grid(&self) -> FiberGrid {
        self.grid.build().expect("grid validated at load")
    }

    /// Samples a family that validation has already accepted.
    pub fn sample(&self, family: &Family) -> ScalarField {
        family.sample(&self.grid(), &self.base_dir).expect("profile validated at load")
    }

    /// Scenario defaults: `u₀ ≡ 1`, `‖T‖²₀ ≡ 0`, zero potential for the Cole-Hopf check.
    pub fn initial_family(&self) -> Option<Family> {
        match self.scenario {
            Scenario::Normalized => Some(self.initial_data.clone().unwrap_or(Family::constant(1.0))),
            _ => self.initial_data.clone(),
        }
    }

    pub fn potential_family(&self) -> Option<Family> {
        match self.scenario {
            Scenario::ColeHopfCheck => Some(self.potential.clone().unwrap_or(Family::constant(0.0))),
            _ => self.potential.clone(),
        }
    }

    pub fn t2_family(&self) -> Family {
        self.t2_initial.clone().unwrap_or(Family::constant(0.0))
    }

    pub fn base_profile(&self) -> Family {
        self.twisted
            .as_ref()
            .and_then(|t| t.base_profile.clone())
            .unwrap_or(Family::constant(1.0))
    }

    pub fn modes(&self) -> usize {
        self.spectral.as_ref().map_or_else(default_modes, |s| s.modes)
    }

    pub fn base_length(&self) -> f64 {
        self.twisted.as_ref().and_then(|t| t.base_length).unwrap_or(2.0 * PI)
    }

    /// Base coordinates of a twisted product.
    pub fn base_coordinates(&self) -> Vec<f64> {
        let Some(t) = &self.twisted else { return Vec::new() };
        let l = self.base_length();
        (0..t.base_points).map(|i| i as f64 * l / t.base_points as f64).collect()
    }

    fn fill_defaults(&mut self) {
        if self.grid.length.is_none() {
            self.grid.length = Some(default_length(self.grid.topology));
        }
        if self.time.dt.is_none() {
            if let Ok(g) = self.grid.build() {
                let h = g.spacing();
                self.time.dt = Some(f64::min(1e-3, 0.25 * h * h));
            }
        }
    }

    /// Every violated constraint, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let use_ = usage(self.scenario);
        let s = self.scenario;

        let grid = match self.grid.build() {
            Ok(g) => Some(g),
            Err(e) => {
                v.push(format!("grid: {e}"));
                None
            }
        };
        if use_.circle_only && self.grid.topology != TopologySpec::Circle {
            v.push(format!("grid.topology: scenario {s} runs on circle fibers only"));
        }
        if let Some(dt) = self.time.dt {
            if !(dt.is_finite() && dt > 0.0) {
                v.push(format!("time.dt must be positive, got {dt}"));
            }
        }
        if !(self.time.t_end.is_finite() && self.time.t_end >= 0.0) {
            v.push(format!("time.t_end must be non-negative, got {}", self.time.t_end));
        }
        if self.time.record_every == 0 {
            v.push("time.record_every must be at least 1".into());
        }
        if let Some(snaps) = &self.output.snapshots {
            if snaps.iter().any(|t| !t.is_finite() || *t < 0.0) {
                v.push("output.snapshots must be non-negative times".into());
            }
        }

        let mut unused = |present: bool, used: bool, name: &str| {
            if present && !used {
                v.push(format!("{name} is not used by scenario {s}"));
            }
        };
        unused(self.initial_data.is_some(), use_.initial_data, "initial_data");
        unused(self.potential.is_some(), use_.potential, "potential");
        unused(self.n_rank.is_some(), use_.n_rank, "n_rank");
        unused(self.t2_initial.is_some(), use_.t2_initial, "T2_initial");
        unused(self.twisted.is_some(), use_.twisted, "twisted");
        unused(self.spectral.is_some(), use_.spectral, "spectral");
        unused(self.tolerances.is_some(), use_.tolerances, "tolerances");
        if let Some(b) = self.boundary {
            let matches = matches!(
                (b, self.grid.topology),
                (BoundarySpec::Periodic, TopologySpec::Circle) | (BoundarySpec::Dirichlet { .. }, TopologySpec::Interval)
            );
            if !use_.boundary && !matches!(b, BoundarySpec::Periodic) {
                v.push(format!("boundary: scenario {s} takes periodic fibers only"));
            } else if !matches {
                v.push("boundary: periodic needs a circle grid, dirichlet an interval grid".into());
            }
        }
        if self.scheme == SchemeSpec::ExplicitEuler && !use_.explicit_scheme {
            v.push(format!("scheme: scenario {s} integrates with crank-nicolson only"));
        }
        if let Some(n) = self.n_rank {
            if n == 0 {
                v.push("n_rank must be at least 1".into());
            }
        }
        if let Some(t) = &self.tolerances {
            if !(t.eps_t.is_finite() && t.eps_t >= 0.0) {
                v.push(format!("tolerances.eps_t must be non-negative, got {}", t.eps_t));
            }
        }

        for (name, fam) in [
            ("initial_data", &self.initial_data),
            ("potential", &self.potential),
            ("T2_initial", &self.t2_initial),
        ] {
            if let Some(f) = fam {
                f.check(name, &mut v);
            }
        }
        if let Some(t) = &self.twisted {
            if t.base_points == 0 {
                v.push("twisted.base_points must be at least 1".into());
            }
            if let Some(l) = t.base_length {
                if !(l.is_finite() && l > 0.0) {
                    v.push(format!("twisted.base_length must be positive, got {l}"));
                }
            }
            if let Some(p) = &t.base_profile {
                p.check("twisted.base_profile", &mut v);
            }
        }
        if v.is_empty() {
            if let Some(g) = grid {
                self.check_fields(&g, &mut v);
            }
        }
        v
    }

    /// Requirements that need the sampled fields.
    fn check_fields(&self, grid: &FiberGrid, v: &mut Vec<String>) {
        let s = self.scenario;
        let sample = |name: &str, f: &Family, v: &mut Vec<String>| match f.sample(grid, &self.base_dir) {
            Ok(field) => Some(field),
            Err(e) => {
                v.push(format!("{name}: {e}"));
                None
            }
        };
        let positive = |name: &str, f: &ScalarField, v: &mut Vec<String>| {
            if f.min() <= 0.0 {
                v.push(format!("{name} must be positive on the grid, min {}", f.min()));
            }
        };

        let initial = match self.initial_family() {
            Some(f) => sample("initial_data", &f, v),
            None => {
                if s != Scenario::SpectralReport {
                    v.push(format!("initial_data is required by scenario {s}"));
                }
                None
            }
        };
        if let (Some(u), true) = (&initial, s != Scenario::SpectralReport) {
            positive("initial_data", u, v);
        }
        let potential = match self.potential_family() {
            Some(f) => sample("potential", &f, v),
            None => {
                if matches!(s, Scenario::Normalized | Scenario::SpectralReport) {
                    v.push(format!("potential is required by scenario {s}"));
                }
                None
            }
        };

        match s {
            Scenario::Surface => {
                if let Some(rho) = &initial {
                    let slope = folflow_core::fiber::derivative(rho).sup_norm();
                    if slope > 1.0 + folflow_core::scenarios::SLOPE_TOL {
                        v.push(format!("initial_data: profile slope must satisfy |ρ'| ≤ 1, max {slope}"));
                    }
                    if let Some(BoundarySpec::Dirichlet { left, right }) = self.boundary {
                        let vals = rho.values();
                        let (a, b) = (vals[0], vals[vals.len() - 1]);
                        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
                        if (left - a).abs() > tol || (right - b).abs() > tol {
                            v.push(format!(
                                "boundary: dirichlet values ({left}, {right}) differ from the profile ends ({a}, {b})"
                            ));
                        }
                    }
                }
            }
            Scenario::Normalized => {
                if let Some(beta) = &potential {
                    if beta.min() < 0.0 {
                        v.push(format!("potential (β_D) must be non-negative, min {}", beta.min()));
                    }
                }
                if let Some(t2) = sample("T2_initial", &self.t2_family(), v) {
                    if t2.min() < 0.0 {
                        v.push(format!("T2_initial must be non-negative, min {}", t2.min()));
                    }
                }
            }
            Scenario::Twisted => {
                if self.twisted.is_none() {
                    v.push("twisted section (base_points) is required by scenario twisted".into());
                } else {
                    let profile = self.base_profile();
                    for (i, x) in self.base_coordinates().iter().enumerate() {
                        match base_value(&profile, *x, self.base_length()) {
                            Ok(a) if a > 0.0 && a.is_finite() => {}
                            Ok(a) => {
                                v.push(format!("twisted.base_profile must be positive, got {a} at base point {i}"));
                                break;
                            }
                            Err(e) => {
                                v.push(format!("twisted.base_profile: {e}"));
                                break;
                            }
                        }
                    }
                }
            }
            Scenario::ColeHopfCheck => {}
            Scenario::SpectralReport => {
                let m = self.modes();
                let dim = match grid.topology() {
                    Topology::Circle => grid.n_points(),
                    Topology::Interval => grid.n_points() - 2,
                };
                if m == 0 || m > dim {
                    v.push(format!("spectral.modes must be in 1..={dim}, got {m}"));
                }
            }
        }

        if self.scheme == SchemeSpec::ExplicitEuler {
            if let Some(dt) = self.time.dt {
                let kappa = self.rank() as f64;
                let limit = 0.5 * grid.spacing() * grid.spacing() / kappa;
                if dt > limit {
                    v.push(format!("time.dt {dt} exceeds the explicit stability bound {limit}"));
                }
            }
        }
    }
}

/// Value of the base profile at `x` on a base circle of length `length` (only
/// closed-form families; a CSV profile has no meaning between base points).
pub fn base_value(profile: &Family, x: f64, length: f64) -> Result<f64, String> {
    use Family::*;
    Ok(match profile {
        Constant { value } => *value,
        Linear { a, b } => a + b * x,
        CosinePerturbed { base, amplitude, mode, phase } => {
            base + amplitude * (2.0 * PI * f64::from(*mode) * x / length + phase).cos()
        }
        GaussianBump { center, width, height, base } => {
            let d = (x - center).abs().rem_euclid(length);
            let d = d.min(length - d);
            base + height * (-0.5 * (d / width).powi(2)).exp()
        }
        FromCsv { .. } => return Err("from-csv is not supported for the base direction".into()),
        Sum { terms } => {
            let mut acc = 0.0;
            for t in terms {
                acc += base_value(t, x, length)?;
            }
            acc
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_SURFACE: &str = r#"
scenario = "surface"

[grid]
topology = "interval"
n_points = 101

[initial_data]
family = "linear"
a = 0.5
b = 0.3
"#;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_str(text, Path::new("."))
    }

    #[test]
    fn minimal_surface_gets_documented_defaults() {
        let cfg = parse(MINIMAL_SURFACE).unwrap();
        let h = cfg.grid().spacing();
        assert!((h - 0.01).abs() < 1e-15);
        assert_eq!(cfg.dt(), f64::min(1e-3, 0.25 * h * h));
        assert_eq!(cfg.grid.length, Some(1.0));
        assert_eq!(cfg.time.t_end, 1.0);
        assert_eq!(cfg.time.record_every, 1);
        assert_eq!(cfg.scheme, SchemeSpec::CrankNicolson);
        assert!(cfg.output.plot);
    }

    #[test]
    fn coarse_grid_default_step_is_capped() {
        let cfg = parse(&MINIMAL_SURFACE.replace("101", "11")).unwrap();
        assert_eq!(cfg.dt(), 1e-3);
    }

    #[test]
    fn too_few_points_is_a_validation_error() {
        match parse(&MINIMAL_SURFACE.replace("101", "4")) {
            Err(ConfigError::Validation { violations }) => {
                assert!(violations.iter().any(|v| v.starts_with("grid")), "{violations:?}")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_location() {
        let text = format!("{MINIMAL_SURFACE}flux_limiter = \"minmod\"\n");
        match parse(&text) {
            Err(ConfigError::Parse { field, line, .. }) => {
                assert_eq!(field.as_deref(), Some("flux_limiter"));
                assert!(line.is_some());
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_family_parameter_is_rejected() {
        let text = MINIMAL_SURFACE.replace("b = 0.3", "b = 0.3\nslope = 1.0");
        match parse(&text) {
            Err(ConfigError::Parse { field, .. }) => assert_eq!(field.as_deref(), Some("slope")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_type_reports_the_line_and_key() {
        let text = MINIMAL_SURFACE.replace("n_points = 101", "n_points = \"many\"");
        match parse(&text) {
            Err(ConfigError::Parse { field, line, .. }) => {
                assert_eq!(field.as_deref(), Some("n_points"));
                assert_eq!(line, Some(6));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let text = r#"
scenario = "normalized"
n_rank = 0
[grid]
topology = "interval"
n_points = 64
[time]
t_end = -1.0
record_every = 0
[potential]
family = "constant"
value = 1.0
[twisted]
base_points = 3
"#;
        match parse(text) {
            Err(ConfigError::Validation { violations }) => {
                for needle in ["grid.topology", "t_end", "record_every", "twisted is not used", "n_rank"] {
                    assert!(violations.iter().any(|v| v.contains(needle)), "{needle}: {violations:?}");
                }
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_profile_and_negative_potential_are_rejected() {
        let text = r#"
scenario = "normalized"
[grid]
topology = "circle"
n_points = 64
[initial_data]
family = "cosine-perturbed"
base = 1.0
amplitude = 1.5
mode = 1
[potential]
family = "cosine-perturbed"
base = 0.0
amplitude = 0.2
mode = 1
"#;
        match parse(text) {
            Err(ConfigError::Validation { violations }) => {
                assert_eq!(violations.len(), 2, "{violations:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn dirichlet_values_must_match_profile() {
        let text = format!("{MINIMAL_SURFACE}\n[boundary]\nkind = \"dirichlet\"\nleft = 0.5\nright = 0.9\n");
        assert!(matches!(parse(&text), Err(ConfigError::Validation { .. })));
        let ok = format!("{MINIMAL_SURFACE}\n[boundary]\nkind = \"dirichlet\"\nleft = 0.5\nright = 0.8\n");
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn explicit_scheme_is_checked_against_the_stability_bound() {
        let text = r#"
scenario = "cole-hopf-check"
scheme = "explicit-euler"
[grid]
topology = "circle"
n_points = 64
[time]
dt = 0.01
[initial_data]
family = "constant"
value = 1.0
"#;
        match parse(text) {
            Err(ConfigError::Validation { violations }) => assert!(violations[0].contains("stability")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn serialization_round_trips() {
        let text = r#"
scenario = "twisted"
n_rank = 2
seed = 7
[grid]
topology = "circle"
n_points = 32
[time]
dt = 0.001
t_end = 0.5
record_every = 10
[initial_data]
family = "sum"
terms = [
  { family = "constant", value = 1.0 },
  { family = "gaussian-bump", center = 3.0, width = 0.4, height = 0.2 },
]
[twisted]
base_points = 4
base_profile = { family = "cosine-perturbed", base = 1.0, amplitude = 0.1, mode = 1, phase = 0.1 }
[output]
snapshots = [0.0, 0.25]
plot = false
"#;
        let cfg = parse(text).unwrap();
        let again = parse(&serialize(&cfg)).unwrap();
        assert_eq!(cfg, again);
    }
}
