//! Golden-file helpers shared by the CLI tests and the acceptance suite.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::Value;

pub const GOLDEN_CONFIGS: [&str; 5] = [
    "surface_bump",
    "twisted_warping",
    "normalized_cosine",
    "cole_hopf",
    "spectral_cosine",
];

/// Relative slack for golden numbers: different FFT code paths and CPUs may
/// round differently; bit-exactness is only required between repeated runs.
const GOLDEN_TOL: f64 = 1e-9;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden")
}

pub fn config_path(name: &str) -> PathBuf {
    golden_dir().join(format!("{name}.toml"))
}

pub fn expected_dir(name: &str) -> PathBuf {
    golden_dir().join("expected").join(name)
}

/// Data artifacts of a run directory, sorted by name (`plot.gp` excluded).
pub fn data_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "json"))
        .collect();
    files.sort();
    files
}

/// `summary.json` text without the `metadata` block.
pub fn summary_without_metadata(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("metadata");
    }
    v
}

/// Bytes of a data artifact with run metadata removed.
pub fn canonical_bytes(path: &Path) -> Vec<u8> {
    if path.extension().is_some_and(|x| x == "json") {
        serde_json::to_vec_pretty(&summary_without_metadata(path)).unwrap()
    } else {
        std::fs::read(path).unwrap()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= GOLDEN_TOL * (1.0 + a.abs().max(b.abs()))
}

fn compare_json(a: &Value, b: &Value, at: &str, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if !close(x, y) {
                out.push(format!("{at}: {x} vs {y}"));
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                compare_json(p, q, &format!("{at}[{i}]"), out);
            }
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => {
            for (k, p) in x {
                match y.get(k) {
                    Some(q) => compare_json(p, q, &format!("{at}.{k}"), out),
                    None => out.push(format!("{at}.{k}: missing")),
                }
            }
        }
        _ if a == b => {}
        _ => out.push(format!("{at}: {a} vs {b}")),
    }
}

fn compare_csv(a: &str, b: &str, name: &str, out: &mut Vec<String>) {
    let (la, lb): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    if la.len() != lb.len() || la.first() != lb.first() {
        out.push(format!("{name}: shape or header differs"));
        return;
    }
    for (i, (p, q)) in la.iter().zip(&lb).enumerate().skip(1) {
        let (cp, cq): (Vec<&str>, Vec<&str>) = (p.split(',').collect(), q.split(',').collect());
        if cp.len() != cq.len() {
            out.push(format!("{name}:{}: column count differs", i + 1));
            continue;
        }
        for (x, y) in cp.iter().zip(&cq) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) if close(x, y) => {}
                _ => {
                    out.push(format!("{name}:{}: {x} vs {y}", i + 1));
                    break;
                }
            }
        }
    }
}

/// Mismatches between a fresh run directory and the stored golden output.
pub fn golden_mismatches(name: &str, run_dir: &Path) -> Vec<String> {
    let expected = expected_dir(name);
    let mut out = Vec::new();
    let got = data_files(run_dir);
    let want = data_files(&expected);
    let names = |v: &[PathBuf]| v.iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    if names(&got) != names(&want) {
        out.push(format!("{name}: artifact set {:?} vs {:?}", names(&got), names(&want)));
        return out;
    }
    for (g, w) in got.iter().zip(&want) {
        let file = g.file_name().unwrap().to_string_lossy().to_string();
        if file.ends_with(".json") {
            compare_json(&summary_without_metadata(g), &summary_without_metadata(w), &file, &mut out);
        } else {
            let (a, b) = (std::fs::read_to_string(g).unwrap(), std::fs::read_to_string(w).unwrap());
            compare_csv(&a, &b, &file, &mut out);
        }
    }
    out
}

/// With `FOLFLOW_BLESS=1`, copies the run's data artifacts over the golden output.
pub fn bless_if_requested(name: &str, run_dir: &Path) -> bool {
    if std::env::var("FOLFLOW_BLESS").as_deref() != Ok("1") {
        return false;
    }
    let dest = expected_dir(name);
    let _ = std::fs::remove_dir_all(&dest);
    std::fs::create_dir_all(&dest).unwrap();
    for f in data_files(run_dir) {
        let target = dest.join(f.file_name().unwrap());
        if f.extension().is_some_and(|x| x == "json") {
            let mut text = serde_json::to_string_pretty(&summary_without_metadata(&f)).unwrap();
            text.push('\n');
            std::fs::write(target, text).unwrap();
        } else {
            std::fs::copy(&f, target).unwrap();
        }
    }
    true
}
