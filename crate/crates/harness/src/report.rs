//! Report rows and their CSV, JSON and series encodings.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Theorem, Variant};
use crate::error::{HarnessError, Result};

/// Fixed CSV column set, in order.
pub const CSV_COLUMNS: [&str; 26] = [
    "theorem",
    "point",
    "minimum",
    "gamma",
    "lambda",
    "m",
    "r",
    "p",
    "variant",
    "effective_dimension",
    "taylor",
    "interaction",
    "generalization",
    "complement",
    "bound",
    "raw_bound",
    "lower",
    "pi_infinity",
    "oracle",
    "margin",
    "std_error",
    "allowance",
    "asserted",
    "pass",
    "oracle_method",
    "seed",
];

/// Formats with 12 significant digits, dropping trailing zeros of the mantissa.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{x:.11e}");
    let (mant, exp) = s
        .split_once('e')
        .expect("scientific format has an exponent");
    let mant = if mant.contains('.') {
        mant.trim_end_matches('0').trim_end_matches('.')
    } else {
        mant
    };
    if exp == "0" {
        mant.to_string()
    } else {
        format!("{mant}e{exp}")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Terms {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_dimension: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taylor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generalization: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complement: Option<f64>,
}

/// One `(theorem, configuration point[, minimum])` comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub theorem: Theorem,
    pub point: String,
    pub minimum: Option<usize>,
    pub gamma: f64,
    pub lambda: f64,
    pub m: u64,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub variant: Variant,
    pub terms: Terms,
    /// Bound total; for the ellipsoid-mass rows the upper bound, for the complement the clamped bound.
    pub bound: f64,
    pub raw_bound: Option<f64>,
    pub lower: Option<f64>,
    pub pi_infinity: Option<f64>,
    pub oracle: f64,
    pub margin: f64,
    pub std_error: f64,
    /// Tolerated negative margin: 3 standard errors, or the quadrature accuracy budget.
    pub allowance: f64,
    pub asserted: bool,
    pub pass: bool,
    pub oracle_method: String,
    pub seed: u64,
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn num_json(x: f64) -> Value {
    // serde_json writes the shortest decimal that round-trips, i.e. at most 17 significant digits
    if x.is_finite() {
        json!(x)
    } else {
        json!(fmt_num(x))
    }
}

fn opt_json(x: Option<f64>) -> Value {
    x.map(num_json).unwrap_or(Value::Null)
}

impl Row {
    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.theorem.to_string(),
            self.point.clone(),
            self.minimum.map(|m| m.to_string()).unwrap_or_default(),
            fmt_num(self.gamma),
            fmt_num(self.lambda),
            self.m.to_string(),
            opt(self.r),
            opt(self.p),
            self.variant.as_str().into(),
            opt(self.terms.effective_dimension),
            opt(self.terms.taylor),
            opt(self.terms.interaction),
            opt(self.terms.generalization),
            opt(self.terms.complement),
            fmt_num(self.bound),
            opt(self.raw_bound),
            opt(self.lower),
            opt(self.pi_infinity),
            fmt_num(self.oracle),
            fmt_num(self.margin),
            fmt_num(self.std_error),
            fmt_num(self.allowance),
            self.asserted.to_string(),
            self.pass.to_string(),
            self.oracle_method.clone(),
            self.seed.to_string(),
        ]
    }

    fn to_json(&self) -> Value {
        let terms: serde_json::Map<String, Value> = [
            ("effective_dimension", self.terms.effective_dimension),
            ("taylor", self.terms.taylor),
            ("interaction", self.terms.interaction),
            ("generalization", self.terms.generalization),
            ("complement", self.terms.complement),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), num_json(v))))
        .collect();
        json!({
            "theorem": self.theorem.as_str(),
            "point": {
                "key": self.point,
                "gamma": num_json(self.gamma),
                "lambda": num_json(self.lambda),
                "m": self.m,
                "r": opt_json(self.r),
                "p": opt_json(self.p),
                "variant": self.variant.as_str(),
            },
            "minimum": self.minimum,
            "terms": terms,
            "bound": num_json(self.bound),
            "raw_bound": opt_json(self.raw_bound),
            "lower": opt_json(self.lower),
            "pi_infinity": opt_json(self.pi_infinity),
            "oracle": {
                "value": num_json(self.oracle),
                "std_error": num_json(self.std_error),
                "method": self.oracle_method,
            },
            "margin": num_json(self.margin),
            "allowance": num_json(self.allowance),
            "asserted": self.asserted,
            "pass": self.pass,
            "seed": self.seed,
        })
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub master_seed: u64,
    pub rows: Vec<Row>,
    /// Wall time of the evaluation; kept out of the CSV and JSON reports.
    pub elapsed: Duration,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn rows_for(&self, theorem: Theorem) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.theorem == theorem)
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.csv_fields().iter().map(|f| csv_escape(f)).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let passed = self.rows.iter().filter(|r| r.pass).count();
        let v = json!({
            "name": self.name,
            "master_seed": self.master_seed,
            "summary": { "rows": self.rows.len(), "passed": passed, "failed": self.rows.len() - passed },
            "rows": self.rows.iter().map(Row::to_json).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&v).expect("report is valid JSON");
        s.push('\n');
        s
    }

    /// Per-theorem `(file name, CSV)` series of bound and oracle along the sweep.
    pub fn series(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for t in Theorem::ALL {
            let rows: Vec<&Row> = self.rows_for(t).collect();
            if rows.is_empty() {
                continue;
            }
            let mut s = String::from("point,minimum,gamma,r,bound,oracle,std_error\n");
            for r in rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    csv_escape(&r.point),
                    r.minimum.map(|m| m.to_string()).unwrap_or_default(),
                    fmt_num(r.gamma),
                    opt(r.r),
                    fmt_num(r.bound),
                    fmt_num(r.oracle),
                    fmt_num(r.std_error)
                ));
            }
            out.push((format!("{t}.csv"), s));
        }
        out
    }
}

/// Creates a fresh `<base>/<name>-NNNN` directory; earlier runs are never touched.
pub fn create_run_dir(base: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(base)
        .map_err(|e| HarnessError::io(format!("creating {}", base.display()), e))?;
    let stem: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    for i in 1..100_000 {
        let dir = base.join(format!("{stem}-{i:04}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(HarnessError::io(format!("creating {}", dir.display()), e)),
        }
    }
    Err(HarnessError::io(
        format!("no free run directory under {}", base.display()),
        std::io::Error::from(ErrorKind::AlreadyExists),
    ))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

/// Writes `report.csv`, `report.json`, `series/*.csv` and `run_meta.json` into `dir`.
pub fn write_report(
    dir: &Path,
    report: &RunReport,
    cfg: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<()> {
    write(&dir.join("report.csv"), &report.to_csv())?;
    write(&dir.join("report.json"), &report.to_json())?;
    let series_dir = dir.join("series");
    fs::create_dir(&series_dir)
        .map_err(|e| HarnessError::io(format!("creating {}", series_dir.display()), e))?;
    for (name, body) in report.series() {
        write(&series_dir.join(name), &body)?;
    }
    let meta = json!({
        "name": report.name,
        "master_seed": report.master_seed,
        "workers": workers,
        "elapsed_seconds": report.elapsed.as_secs_f64(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(cfg).expect("configuration serializes"),
    });
    let mut s = serde_json::to_string_pretty(&meta).expect("metadata is valid JSON");
    s.push('\n');
    write(&dir.join("run_meta.json"), &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_num(100.0), "1e2");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn csv_quotes_separators() {
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("gamma=1;m=2"), "gamma=1;m=2");
    }
}
