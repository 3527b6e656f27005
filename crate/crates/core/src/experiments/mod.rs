//! Reproducible experiments with structured reports.
//!
//! A run takes an [`ExperimentConfig`] and returns an [`ExperimentReport`]
//! holding numeric tables, fitted constants and pass/fail criteria, each
//! tied to a named tolerance. Reports carry no timestamps and use ordered
//! maps, so equal config and seed give byte-identical output.

mod chi;
mod conformal;
mod convergence;
mod decay;
mod tools;
mod whitenoise;

pub use chi::run_chi;
pub use conformal::run_conformal;
pub use convergence::run_green_convergence;
pub use decay::run_cumulant_decay;
pub use tools::{run_green, run_kpoint, run_sample};
pub use whitenoise::run_whitenoise;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::continuum::TestFunction;
use crate::correlation::CorrelationRequest;
use crate::error::{Error, Result};
use crate::lattice::DomainSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Green,
    Chi,
    Kpoint,
    Cumulant,
    Whitenoise,
    Conformal,
    GreenConvergence,
    Sample,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Green => "green",
            ExperimentKind::Chi => "chi",
            ExperimentKind::Kpoint => "kpoint",
            ExperimentKind::Cumulant => "cumulant",
            ExperimentKind::Whitenoise => "whitenoise",
            ExperimentKind::Conformal => "conformal",
            ExperimentKind::GreenConvergence => "green-convergence",
            ExperimentKind::Sample => "sample",
        }
    }
}

/// Union of the inputs used by the experiments; each one reads the fields it
/// needs and ignores the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    /// Dimension for experiments without a domain (`chi`).
    #[serde(default)]
    pub d: Option<usize>,
    /// Strictly decreasing mesh sizes.
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub functions: Vec<TestFunction>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    /// Möbius parameters `a` (as `[re, im]`).
    #[serde(default)]
    pub mobius: Vec<[f64; 2]>,
    /// Cumulant orders, or point counts `k` for `conformal`.
    #[serde(default)]
    pub orders: Vec<usize>,
    #[serde(default)]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Truncation tolerances for `chi`.
    #[serde(default)]
    pub chi_tolerances: Vec<f64>,
    #[serde(default)]
    pub request: Option<CorrelationRequest>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            domain: None,
            d: None,
            eps: Vec::new(),
            functions: Vec::new(),
            points: Vec::new(),
            mobius: Vec::new(),
            orders: Vec::new(),
            replicates: 0,
            seed: 0,
            chi_tolerances: Vec::new(),
            request: None,
            tolerances: BTreeMap::new(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Schedule ordering and test-function support.
    pub fn validate(&self) -> Result<()> {
        if self.eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidConfig("eps values must be positive".into()));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig("eps schedule must be strictly decreasing".into()));
        }
        if !self.functions.is_empty() {
            let spec = self.domain_spec()?;
            for f in &self.functions {
                f.check_support(spec, 0.0)?;
            }
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> Result<&DomainSpec> {
        self.domain
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{} needs a domain", self.experiment.name())))
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn min_levels(&self, n: usize) -> Result<()> {
        if self.eps.len() < n {
            return Err(Error::InvalidConfig(format!(
                "{} needs at least {n} eps levels",
                self.experiment.name()
            )));
        }
        Ok(())
    }
}

/// Numeric table; written to `<name>.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_float(x)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integers print plainly, everything else with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub tolerance_key: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub code_version: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub provenance: Provenance,
    /// Every tolerance used, defaults included.
    pub tolerances: BTreeMap<String, f64>,
    pub tables: BTreeMap<String, Table>,
    pub fitted: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
    /// Large tables written only as CSV.
    #[serde(skip)]
    pub dumps: BTreeMap<String, Table>,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig) -> Self {
        ExperimentReport {
            experiment: cfg.experiment,
            provenance: Provenance {
                config_sha256: cfg.hash(),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                seed: cfg.seed,
            },
            tolerances: BTreeMap::new(),
            tables: BTreeMap::new(),
            fitted: BTreeMap::new(),
            criteria: Vec::new(),
            notes: Vec::new(),
            dumps: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    /// Criteria whose name starts with `prefix`.
    pub fn criteria_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Criterion> {
        self.criteria.iter().filter(move |c| c.name.starts_with(prefix))
    }

    /// Looks up a tolerance in the config, falling back to `default`, and
    /// records the value used.
    fn tol(&mut self, cfg: &ExperimentConfig, key: &str, default: f64) -> f64 {
        let v = cfg.tolerances.get(key).copied().unwrap_or(default);
        self.tolerances.insert(key.to_string(), v);
        v
    }

    fn check(&mut self, name: impl Into<String>, value: f64, relation: Relation, key: &str) {
        let tolerance = self.tolerances[key];
        let passed = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::Below => value < tolerance,
            Relation::Above => value > tolerance,
        };
        self.criteria.push(Criterion {
            name: name.into(),
            passed,
            value,
            relation,
            tolerance,
            tolerance_key: key.to_string(),
        });
    }

    /// Writes `report.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(dir.join("report.json"), json)?;
        for (name, table) in self.tables.iter().chain(&self.dumps) {
            table.write_csv(&dir.join(format!("{name}.csv")))?;
        }
        Ok(())
    }
}

/// Runs the experiment named in the config.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Green => run_green(cfg),
        ExperimentKind::Chi => run_chi(cfg),
        ExperimentKind::Kpoint => run_kpoint(cfg),
        ExperimentKind::Cumulant => run_cumulant_decay(cfg),
        ExperimentKind::Whitenoise => run_whitenoise(cfg),
        ExperimentKind::Conformal => run_conformal(cfg),
        ExperimentKind::GreenConvergence => run_green_convergence(cfg),
        ExperimentKind::Sample => run_sample(cfg),
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn frobenius(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
