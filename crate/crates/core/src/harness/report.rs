//! Experiment reports: criteria, time series and fitted rates.

use crate::error::Result;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// One registered pass/fail check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub id: String,
    pub description: String,
    /// Measured quantity compared against the threshold.
    pub value: f64,
    /// Acceptance condition in readable form.
    pub condition: String,
    pub passed: bool,
}

impl Criterion {
    pub fn at_most(id: &str, description: &str, value: f64, max: f64) -> Self {
        Criterion {
            id: id.into(),
            description: description.into(),
            value,
            condition: format!("<= {max:e}"),
            passed: value <= max,
        }
    }

    pub fn at_least(id: &str, description: &str, value: f64, min: f64) -> Self {
        Criterion {
            id: id.into(),
            description: description.into(),
            value,
            condition: format!(">= {min:e}"),
            passed: value >= min,
        }
    }

    pub fn within(id: &str, description: &str, value: f64, lo: f64, hi: f64) -> Self {
        Criterion {
            id: id.into(),
            description: description.into(),
            value,
            condition: format!("in [{lo}, {hi}]"),
            passed: lo <= value && value <= hi,
        }
    }

    /// Structural check; `value` carries the most informative measurement.
    pub fn holds(id: &str, description: &str, value: f64, condition: &str, passed: bool) -> Self {
        Criterion {
            id: id.into(),
            description: description.into(),
            value,
            condition: condition.into(),
            passed: passed && !value.is_nan(),
        }
    }

    /// `PASS id: value (condition)`.
    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.6e} ({}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.value,
            self.condition,
            self.description
        )
    }
}

/// Table of per-time-node (or per-ladder-point) measurements.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Series {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FittedRate {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    /// Student-t interval for the slope; absent with fewer than 3 points.
    pub ci: Option<[f64; 2]>,
    pub confidence: f64,
    pub points: usize,
}

/// Fits `ln y = a + b ln x`. Nonpositive pairs are dropped.
pub fn fit_loglog(name: &str, xs: &[f64], ys: &[f64], confidence: f64) -> FittedRate {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    let mut out = FittedRate {
        name: name.into(),
        slope: f64::NAN,
        intercept: f64::NAN,
        ci: None,
        confidence,
        points: n,
    };
    if n < 2 {
        return out;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return out;
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    out.slope = b;
    out.intercept = a;
    if n >= 3 {
        let sse: f64 = pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let q = StudentsT::new(0.0, 1.0, nf - 2.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.5 + 0.5 * confidence);
        out.ci = Some([b - q * se, b + q * se]);
    }
    out
}

/// Machine-readable outcome of one experiment.
///
/// Everything except `timings` is a function of `(config, seeds, build)`;
/// timings are written to a separate file so `report.json` is reproducible.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub scalars: BTreeMap<String, f64>,
    pub series: Vec<Series>,
    pub rates: Vec<FittedRate>,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl ExperimentReport {
    pub fn new<C: Serialize>(experiment: &str, config: &C) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seeds: BTreeMap::new(),
            scalars: BTreeMap::new(),
            series: Vec::new(),
            rates: Vec::new(),
            criteria: Vec::new(),
            notes: Vec::new(),
            timings: Vec::new(),
        }
    }

    /// True iff at least one criterion is registered and all pass.
    pub fn passed(&self) -> bool {
        !self.criteria.is_empty() && self.criteria.iter().all(|c| c.passed)
    }

    pub fn scalar(&mut self, key: &str, v: f64) {
        self.scalars.insert(key.into(), v);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Records wall-clock seconds since `start`.
    pub fn timing(&mut self, label: &str, start: Instant) {
        self.timings.push((label.into(), start.elapsed().as_secs_f64()));
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn criterion(&self, id: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn summary(&self) -> Vec<String> {
        self.criteria.iter().map(Criterion::line).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["passed"] = self.passed().into();
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Writes `report.json`, `timings.json` and one CSV per series.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let p = dir.join("report.json");
        std::fs::write(&p, self.to_json()?)?;
        out.push(p);
        let timings: BTreeMap<&str, f64> = self.timings.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let p = dir.join("timings.json");
        std::fs::write(&p, serde_json::to_string_pretty(&timings)?)?;
        out.push(p);
        for s in &self.series {
            let p = dir.join(format!("{}.csv", s.name));
            s.write_csv(&p)?;
            out.push(p);
        }
        Ok(out)
    }
}
