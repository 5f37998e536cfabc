//! Named families of initial data and potentials.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use folflow_core::{FiberGrid, ScalarField, Topology};
use serde::{Deserialize, Serialize};

/// A scalar profile on a fiber, sampled at the grid nodes.
///
/// Wavenumbers follow the topology: `cos(2π·mode·x/L + phase)` on a circle,
/// `cos(π·mode·x/l + phase)` on an interval (half-waves fit the ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    Constant {
        value: f64,
    },
    /// `a + b x`.
    Linear {
        a: f64,
        b: f64,
    },
    CosinePerturbed {
        base: f64,
        amplitude: f64,
        mode: u32,
        #[serde(default)]
        phase: f64,
    },
    /// `base + height · exp(-d²/(2 width²))`, `d` the (periodic) distance to `center`.
    GaussianBump {
        center: f64,
        width: f64,
        height: f64,
        #[serde(default)]
        base: f64,
    },
    /// One value per node: a single column, or `x,value` rows. A header line is skipped.
    FromCsv {
        path: PathBuf,
    },
    Sum {
        terms: Vec<Family>,
    },
}

impl Family {
    pub fn constant(value: f64) -> Self {
        Family::Constant { value }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Linear { .. } => "linear",
            Family::CosinePerturbed { .. } => "cosine-perturbed",
            Family::GaussianBump { .. } => "gaussian-bump",
            Family::FromCsv { .. } => "from-csv",
            Family::Sum { .. } => "sum",
        }
    }

    /// Appends every parameter violation, prefixed by `at` (e.g. `initial_data.terms[1]`).
    pub fn check(&self, at: &str, out: &mut Vec<String>) {
        let mut finite = |name: &str, v: f64| {
            if !v.is_finite() {
                out.push(format!("{at}.{name} must be finite, got {v}"));
            }
        };
        match self {
            Family::Constant { value } => finite("value", *value),
            Family::Linear { a, b } => {
                finite("a", *a);
                finite("b", *b);
            }
            Family::CosinePerturbed { base, amplitude, phase, .. } => {
                finite("base", *base);
                finite("amplitude", *amplitude);
                finite("phase", *phase);
            }
            Family::GaussianBump { center, width, height, base } => {
                finite("center", *center);
                finite("width", *width);
                finite("height", *height);
                finite("base", *base);
                if width.is_finite() && *width <= 0.0 {
                    out.push(format!("{at}.width must be positive, got {width}"));
                }
            }
            Family::FromCsv { path } => {
                if path.as_os_str().is_empty() {
                    out.push(format!("{at}.path must not be empty"));
                }
            }
            Family::Sum { terms } => {
                if terms.is_empty() {
                    out.push(format!("{at}.terms must not be empty"));
                }
                for (i, t) in terms.iter().enumerate() {
                    t.check(&format!("{at}.terms[{i}]"), out);
                }
            }
        }
    }

    /// Samples at the nodes of `grid`; relative CSV paths resolve against `base_dir`.
    pub fn sample(&self, grid: &FiberGrid, base_dir: &Path) -> Result<ScalarField, String> {
        let values = self.values(grid, base_dir)?;
        ScalarField::new(*grid, values).map_err(|e| e.to_string())
    }

    fn values(&self, grid: &FiberGrid, base_dir: &Path) -> Result<Vec<f64>, String> {
        let xs = grid.coordinates();
        let length = grid.length();
        let periodic = grid.topology() == Topology::Circle;
        Ok(match self {
            Family::Constant { value } => vec![*value; xs.len()],
            Family::Linear { a, b } => xs.iter().map(|x| a + b * x).collect(),
            Family::CosinePerturbed { base, amplitude, mode, phase } => {
                let k = if periodic { 2.0 * PI } else { PI } * f64::from(*mode) / length;
                xs.iter().map(|x| base + amplitude * (k * x + phase).cos()).collect()
            }
            Family::GaussianBump { center, width, height, base } => xs
                .iter()
                .map(|x| {
                    let mut d = (x - center).abs();
                    if periodic {
                        d = d.rem_euclid(length);
                        d = d.min(length - d);
                    }
                    base + height * (-0.5 * (d / width).powi(2)).exp()
                })
                .collect(),
            Family::FromCsv { path } => read_csv_profile(&base_dir.join(path), grid)?,
            Family::Sum { terms } => {
                let mut acc = vec![0.0; xs.len()];
                for t in terms {
                    for (a, v) in acc.iter_mut().zip(t.values(grid, base_dir)?) {
                        *a += v;
                    }
                }
                acc
            }
        })
    }
}

fn read_csv_profile(path: &Path, grid: &FiberGrid) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(nums) if nums.len() == 1 || nums.len() == 2 => values.push(*nums.last().unwrap_or(&f64::NAN)),
            Ok(nums) => {
                return Err(format!(
                    "{}:{}: expected 1 or 2 columns, got {}",
                    path.display(),
                    i + 1,
                    nums.len()
                ))
            }
            Err(_) if values.is_empty() && i == 0 => continue,
            Err(e) => return Err(format!("{}:{}: {e}", path.display(), i + 1)),
        }
    }
    if values.len() != grid.n_points() {
        return Err(format!(
            "{} has {} values, grid has {} nodes",
            path.display(),
            values.len(),
            grid.n_points()
        ));
    }
    Ok(values)
}
