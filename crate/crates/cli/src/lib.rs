//! Configuration, result rows, and renderers behind the `dirsup` binary.
//!
//! An experiment is a sweep over a grid of `(N, sigma, tau)` cells: each
//! cell builds the unit-weight block-union support under `N`, estimates the
//! expected supremum with the configured method, and pairs the estimate
//! with the closed-form bound curves. Rows come out in a fixed order
//! (`N` outermost, then `sigma`, then `tau`) and render to JSON lines or
//! CSV; both formats carry enough digits to reproduce every float exactly,
//! so identical configurations produce byte-identical files.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dirsup::bounds::{lower_main, upper_main, ConstantPolicy};
use dirsup::montecarlo::{block_union_spec, estimate_esup, Method, TauRule};
use dirsup::numbertheory::{psi_count, PrimeTable};

/// How the prime cutoff is chosen for each `N` in the grid: one of the
/// named rules, or an explicit list of cutoffs to sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauRuleSpec {
    Named(String),
    Explicit(Vec<usize>),
}

impl TauRuleSpec {
    fn check(&self) -> Result<()> {
        match self {
            TauRuleSpec::Named(name) => match name.as_str() {
                "pi(N)" | "sqrt(N)" | "rs-optimal" => Ok(()),
                other => bail!(
                    "unknown tau rule {other:?}: expected \"pi(N)\", \"sqrt(N)\", \"rs-optimal\", or a list of cutoffs"
                ),
            },
            TauRuleSpec::Explicit(list) => {
                if list.is_empty() {
                    bail!("explicit tau list must not be empty");
                }
                if list.contains(&0) {
                    bail!("tau cutoffs must be at least 1");
                }
                Ok(())
            }
        }
    }

    /// The cutoffs to run for one `N`.
    pub fn taus_for(&self, n: u64, table: &PrimeTable) -> Result<Vec<usize>> {
        match self {
            TauRuleSpec::Named(name) => {
                let rule = match name.as_str() {
                    "pi(N)" => TauRule::PiN,
                    "sqrt(N)" => TauRule::SqrtN,
                    "rs-optimal" => TauRule::Balanced,
                    other => bail!("unknown tau rule {other:?}"),
                };
                Ok(vec![rule.resolve(n, table)?])
            }
            TauRuleSpec::Explicit(list) => Ok(list.clone()),
        }
    }
}

/// Method selection with optional per-method parameters; unset parameters
/// take the defaults below, parameters for a different method are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    /// "z-exact", "torus-grid", or "line-grid".
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl MethodSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            budget: None,
            refine_steps: None,
            t_min: None,
            t_max: None,
            steps: None,
        }
    }

    pub fn to_method(&self) -> Result<Method> {
        let torus_params = self.budget.is_some() || self.refine_steps.is_some();
        let line_params = self.t_min.is_some() || self.t_max.is_some() || self.steps.is_some();
        match self.name.as_str() {
            "z-exact" => {
                if torus_params || line_params {
                    bail!("method \"z-exact\" takes no parameters");
                }
                Ok(Method::ZExact)
            }
            "torus-grid" => {
                if line_params {
                    bail!("t_min/t_max/steps belong to \"line-grid\", not \"torus-grid\"");
                }
                Ok(Method::TorusGrid {
                    budget: self.budget.unwrap_or(4096),
                    refine_steps: self.refine_steps.unwrap_or(1),
                })
            }
            "line-grid" => {
                if torus_params {
                    bail!("budget/refine_steps belong to \"torus-grid\", not \"line-grid\"");
                }
                Ok(Method::LineGrid {
                    t_min: self.t_min.unwrap_or(0.0),
                    t_max: self.t_max.unwrap_or(100.0),
                    steps: self.steps.unwrap_or(2001),
                })
            }
            other => bail!(
                "unknown method {other:?}: expected \"z-exact\", \"torus-grid\", or \"line-grid\""
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// A full sweep description, read from a JSON file. Unknown keys are
/// rejected so a typo cannot silently fall back to a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_grid: Vec<u64>,
    pub tau_rule: TauRuleSpec,
    pub sigmas: Vec<f64>,
    pub method: MethodSpec,
    pub replicates: usize,
    pub seed: u64,
    /// Where to write rows; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("config is not valid JSON for an experiment")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            bail!("n_grid must not be empty");
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2) {
            bail!("every N must be at least 2, got {n}");
        }
        self.tau_rule.check()?;
        if self.sigmas.is_empty() {
            bail!("sigmas must not be empty");
        }
        if let Some(&s) = self.sigmas.iter().find(|s| !s.is_finite() || !(0.0..0.5).contains(*s)) {
            bail!("every sigma must lie in [0, 1/2), got {s}");
        }
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        self.method.to_method()?;
        Ok(())
    }
}

/// One experiment cell: the estimate, its uncertainty, the per-draw bracket
/// companions, and the closed-form curves at the same `(N, tau, sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: u64,
    pub tau: usize,
    pub sigma: f64,
    pub method: String,
    pub replicates: usize,
    pub seed: u64,
    pub estimate: f64,
    pub std_error: f64,
    /// Mean certified slack: the supremum lies in `[estimate, estimate + gap]`
    /// on average over draws.
    pub gap: f64,
    /// Mean exact lattice supremum over the same draws.
    pub lower_z: f64,
    /// The sign-independent envelope `sum |w_n|`.
    pub l1: f64,
    /// Case-selected upper growth curve, unit constant.
    pub upper: f64,
    /// Density-weighted lower growth curve with the exact smooth density,
    /// unit constant; 0 when `tau < 2` leaves the formula undefined.
    pub lower: f64,
    /// `estimate / (N^{1-sigma} / log N)`.
    pub ratio_to_rate: f64,
}

/// Rounding slack for the write-time ordering check.
#[inline]
fn above(a: f64, b: f64) -> bool {
    a > b * (1.0 + 1e-12) + 1e-12
}

impl ResultRow {
    /// The ordering every written row must satisfy:
    /// `lower_z <= estimate + gap <= l1`, up to rounding.
    #[must_use]
    pub fn ordering_holds(&self) -> bool {
        !above(self.lower_z, self.estimate + self.gap) && !above(self.estimate + self.gap, self.l1)
    }
}

/// Everything a sweep produced: the rows in grid order, plus the indexes of
/// rows that failed a write-time check (broken mean ordering, or any
/// per-draw violation inside the cell).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    pub flagged: Vec<usize>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let method = cfg.method.to_method()?;
    let policy = ConstantPolicy::default();
    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for &n in &cfg.n_grid {
        let table = PrimeTable::sieve(n)?;
        let taus = cfg.tau_rule.taus_for(n, &table)?;
        for &sigma in &cfg.sigmas {
            for &tau in &taus {
                let spec = block_union_spec(n, tau, sigma, &table)
                    .with_context(|| format!("building the support for N = {n}, tau = {tau}"))?;
                let record = estimate_esup(&spec, tau, method, cfg.replicates, cfg.seed)?;
                let upper = upper_main(n, tau, sigma, &policy)?.value;
                let lower = match table.prime(tau) {
                    Some(p) if tau >= 2 => {
                        let density = psi_count(n, p)? as f64 / n as f64;
                        lower_main(n, tau, sigma, density, &policy)?.value
                    }
                    _ => 0.0,
                };
                let nf = n as f64;
                let row = ResultRow {
                    n,
                    tau,
                    sigma,
                    method: method.label().to_string(),
                    replicates: cfg.replicates,
                    seed: cfg.seed,
                    estimate: record.estimate,
                    std_error: record.std_error,
                    gap: record.mean_gap,
                    lower_z: record.mean_lower_z,
                    l1: record.l1,
                    upper,
                    lower,
                    ratio_to_rate: record.estimate / (nf.powf(1.0 - sigma) / nf.ln()),
                };
                if record.sandwich_violations > 0 || !row.ordering_holds() {
                    flagged.push(rows.len());
                }
                rows.push(row);
            }
        }
    }
    Ok(ExperimentOutcome { rows, flagged })
}

/// One JSON object per line, in row order. serde_json prints the shortest
/// decimal that round-trips, so parsing a line back recovers each float
/// exactly.
#[must_use]
pub fn render_json(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("rows hold only plain fields"));
        out.push('\n');
    }
    out
}

/// Column order of the CSV rendering; identical to the JSON field order.
pub const CSV_COLUMNS: [&str; 14] = [
    "n",
    "tau",
    "sigma",
    "method",
    "replicates",
    "seed",
    "estimate",
    "std_error",
    "gap",
    "lower_z",
    "l1",
    "upper",
    "lower",
    "ratio_to_rate",
];

/// 17 significant digits: enough to reproduce any f64 exactly on re-read.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(&[
            r.n.to_string(),
            r.tau.to_string(),
            fmt_float(r.sigma),
            r.method.clone(),
            r.replicates.to_string(),
            r.seed.to_string(),
            fmt_float(r.estimate),
            fmt_float(r.std_error),
            fmt_float(r.gap),
            fmt_float(r.lower_z),
            fmt_float(r.l1),
            fmt_float(r.upper),
            fmt_float(r.lower),
            fmt_float(r.ratio_to_rate),
        ])?;
    }
    w.flush()?;
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(String::from_utf8(bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n_grid: vec![50, 100],
            tau_rule: TauRuleSpec::Explicit(vec![2, 4]),
            sigmas: vec![0.0, 0.25],
            method: MethodSpec::named("z-exact"),
            replicates: 20,
            seed: 7,
            output: None,
            format: OutputFormat::Json,
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = small_config();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn config_parses_named_rules_and_methods() {
        let text = r#"{
            "n_grid": [256],
            "tau_rule": "pi(N)",
            "sigmas": [0.0],
            "method": {"name": "torus-grid", "budget": 512, "refine_steps": 2},
            "replicates": 5,
            "seed": 1,
            "format": "csv"
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.tau_rule, TauRuleSpec::Named("pi(N)".into()));
        assert_eq!(
            cfg.method.to_method().unwrap(),
            Method::TorusGrid { budget: 512, refine_steps: 2 }
        );
        assert_eq!(cfg.format, OutputFormat::Csv);
    }

    #[test]
    fn config_rejects_bad_shapes() {
        let base = small_config();
        let mut bad = base.clone();
        bad.n_grid.clear();
        assert!(bad.validate().is_err());
        let mut bad = base.clone();
        bad.sigmas = vec![0.5];
        assert!(bad.validate().is_err());
        let mut bad = base.clone();
        bad.replicates = 0;
        assert!(bad.validate().is_err());
        let mut bad = base.clone();
        bad.tau_rule = TauRuleSpec::Named("all".into());
        assert!(bad.validate().is_err());
        let mut bad = base.clone();
        bad.tau_rule = TauRuleSpec::Explicit(vec![]);
        assert!(bad.validate().is_err());
        let mut bad = base.clone();
        bad.method = MethodSpec::named("newton");
        assert!(bad.validate().is_err());
        let mut bad = base;
        bad.method = MethodSpec { steps: Some(100), ..MethodSpec::named("torus-grid") };
        assert!(bad.validate().is_err());
        // Unknown keys are config errors, not silent defaults.
        assert!(ExperimentConfig::from_json("{\"n_grid\": [10]}").is_err());
        assert!(ExperimentConfig::from_json("not json").is_err());
    }

    #[test]
    fn rows_come_out_in_grid_order_and_ordered() {
        let outcome = run_experiment(&small_config()).unwrap();
        assert!(outcome.flagged.is_empty());
        let cells: Vec<(u64, f64, usize)> =
            outcome.rows.iter().map(|r| (r.n, r.sigma, r.tau)).collect();
        let mut expected = Vec::new();
        for &n in &[50u64, 100] {
            for &s in &[0.0, 0.25] {
                for &t in &[2usize, 4] {
                    expected.push((n, s, t));
                }
            }
        }
        assert_eq!(cells, expected);
        for row in &outcome.rows {
            assert!(row.ordering_holds());
            assert_eq!(row.method, "z-exact");
            assert!(row.upper > 0.0);
            assert!(row.ratio_to_rate > 0.0);
        }
    }

    #[test]
    fn json_lines_round_trip_field_by_field() {
        let outcome = run_experiment(&small_config()).unwrap();
        let text = render_json(&outcome.rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), outcome.rows.len());
        for (line, row) in lines.iter().zip(&outcome.rows) {
            let back: ResultRow = serde_json::from_str(line).unwrap();
            assert_eq!(&back, row);
        }
    }

    #[test]
    fn csv_round_trips_and_keeps_the_header_order() {
        let outcome = run_experiment(&small_config()).unwrap();
        let text = render_csv(&outcome.rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<ResultRow> = reader.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(back, outcome.rows);
    }

    #[test]
    fn reruns_render_byte_identically() {
        let cfg = small_config();
        let a = render_json(&run_experiment(&cfg).unwrap().rows);
        let b = render_json(&run_experiment(&cfg).unwrap().rows);
        assert_eq!(a, b);
        let mut csv_cfg = cfg;
        csv_cfg.format = OutputFormat::Csv;
        let c = render_csv(&run_experiment(&csv_cfg).unwrap().rows).unwrap();
        let d = render_csv(&run_experiment(&csv_cfg).unwrap().rows).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn float_formatting_is_full_precision() {
        let x = std::f64::consts::PI / 7.0;
        let s = fmt_float(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
    }
}
