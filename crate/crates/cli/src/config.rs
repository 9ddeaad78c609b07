//! Declarative run configuration. Precedence is command-line flag, then
//! config file, then the defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Covariates `(1 - purity, purity)` from `samples.csv`.
    Purity,
    /// Covariates `(normal, tumor, shared)` from the group column.
    Group,
    /// Covariates read from `x.csv`.
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub total_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub adapt_sigma_lambda: bool,
    pub store_subject_level: bool,
    pub store_coefficients: bool,
    /// Prepend a constant covariate (general mode only).
    pub intercept: bool,
    pub initial_sigma_lambda: f64,
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            total_iterations: 20_000,
            burn_in: 10_000,
            thin: 10,
            adapt_sigma_lambda: true,
            store_subject_level: false,
            store_coefficients: true,
            intercept: false,
            initial_sigma_lambda: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub kappa: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Level strings, interpreted per mode: purities (`"0.5"`),
    /// group names (`"tumor"`) or colon-separated vectors (`"1:0:1"`).
    /// Empty means the mode's defaults.
    pub levels: Vec<String>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            kappa: vec![0.1],
            alpha: vec![0.1],
            levels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub sim: u8,
    pub p: usize,
    pub replicates: usize,
    /// Defaults to 50 (simulation 1) or 100 (simulation 2).
    pub n_reference: Option<usize>,
    /// Defaults to 150 (simulation 1) or 200 (simulation 2).
    pub n_mixed: Option<usize>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            sim: 1,
            p: 20,
            replicates: 1,
            n_reference: None,
            n_mixed: None,
        }
    }
}

impl SimulateSection {
    pub fn sizes(&self) -> (usize, usize) {
        let (r, m) = if self.sim == 2 { (100, 200) } else { (50, 150) };
        (self.n_reference.unwrap_or(r), self.n_mixed.unwrap_or(m))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Thread count never changes results, so it is left out of recorded
    /// configurations.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    pub chain: ChainSection,
    pub selection: SelectionSection,
    pub simulate: SimulateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Purity,
            seed: 1,
            workers: None,
            chain: ChainSection::default(),
            selection: SelectionSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file, or returns defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        let c = &self.chain;
        if c.burn_in >= c.total_iterations {
            return Err(CliError::config("burn_in must be below total_iterations"));
        }
        if c.thin == 0 {
            return Err(CliError::config("thin must be at least 1"));
        }
        if self.selection.kappa.iter().any(|k| !(*k >= 0.0)) {
            return Err(CliError::config("kappa values must be non-negative"));
        }
        if self.selection.alpha.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(CliError::config("alpha values must lie in (0, 1)"));
        }
        if !matches!(self.simulate.sim, 1 | 2) {
            return Err(CliError::config("sim must be 1 or 2"));
        }
        Ok(())
    }

    /// Worker threads: explicit setting, then `EDGEREG_WORKERS`, then 1.
    pub fn worker_count(&self) -> CliResult<usize> {
        if let Some(w) = self.workers {
            return Ok(w.max(1));
        }
        match std::env::var("EDGEREG_WORKERS") {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map(|w| w.max(1))
                .map_err(|_| CliError::config(format!("EDGEREG_WORKERS='{v}' is not a count"))),
            Err(_) => Ok(1),
        }
    }
}

/// Parses level strings into covariate vectors.
pub fn parse_levels(mode: Mode, specs: &[String]) -> CliResult<Vec<(String, Vec<f64>)>> {
    let defaults: Vec<String> = match mode {
        Mode::Purity => vec!["0".into(), "1".into()],
        Mode::Group => vec!["normal".into(), "tumor".into()],
        Mode::General => Vec::new(),
    };
    let specs = if specs.is_empty() { &defaults } else { specs };
    if specs.is_empty() {
        return Err(CliError::config("general mode needs explicit --levels"));
    }
    specs
        .iter()
        .map(|s| {
            let s = s.trim();
            let v = match mode {
                Mode::Purity => {
                    let pi: f64 = s
                        .parse()
                        .map_err(|_| CliError::config(format!("purity level '{s}' is not a number")))?;
                    if !(0.0..=1.0).contains(&pi) {
                        return Err(CliError::config(format!("purity level {pi} outside [0, 1]")));
                    }
                    vec![1.0 - pi, pi]
                }
                Mode::Group => match s.parse::<edgereg::Group>() {
                    Ok(g) => edgereg::simgen::encode_groups(&[g]).row(0).iter().copied().collect(),
                    Err(_) => parse_vector(s)?,
                },
                Mode::General => parse_vector(s)?,
            };
            Ok((s.to_string(), v))
        })
        .collect()
}

fn parse_vector(s: &str) -> CliResult<Vec<f64>> {
    s.split(':')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("level '{s}' is not a colon-separated vector")))
        })
        .collect()
}

/// Splits a comma-separated list of numbers.
pub fn parse_f64_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("'{t}' is not a number")))
        })
        .collect()
}
