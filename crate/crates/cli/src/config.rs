use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use tidual_core::{MarketParams, PathConfig, ReportOptions, WealthGrid};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x_max: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x_max: 20.0,
            n: 4001,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> tidual_core::Result<WealthGrid> {
        WealthGrid::new(self.x_max, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub a_values: Vec<f64>,
    pub eta_values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            a_values: vec![0.05, 0.1, 0.2, 0.4],
            eta_values: vec![0.05, 0.1, 0.2, 0.5],
        }
    }
}

/// Everything a run needs. Every table and key is optional; missing ones
/// take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: MarketParams,
    pub grid: GridConfig,
    pub sim: PathConfig,
    pub sweep: Option<SweepConfig>,
    /// Check sizes for `verify`; `verify.x` is also the initial wealth of `simulate`.
    pub verify: ReportOptions,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: MarketParams::default(),
            grid: GridConfig::default(),
            sim: PathConfig::default(),
            sweep: None,
            verify: ReportOptions::default(),
            output_dir: PathBuf::from("out"),
            emit_svg: false,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: bool,
    pub a: Option<f64>,
    pub eta: Option<f64>,
    pub r: Option<f64>,
    pub x: Option<f64>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.sim.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        self.emit_svg |= o.svg;
        if let Some(a) = o.a {
            self.params.a = a;
        }
        if let Some(eta) = o.eta {
            self.params.eta = eta;
        }
        if let Some(r) = o.r {
            self.params.r = r;
        }
        if let Some(x) = o.x {
            self.verify.x = x;
        }
        if let Some(n) = o.paths {
            self.sim.n_paths = n;
        }
        if let Some(dt) = o.dt {
            self.sim.dt = dt;
        }
        if let Some(t) = o.t_max {
            self.sim.t_max = t;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid =
            |what: &str, e: tidual_core::Error| ConfigError::Validation(format!("{what}: {e}"));
        self.params
            .derive_constants()
            .map_err(|e| invalid("params", e))?;
        self.grid.build().map_err(|e| invalid("grid", e))?;
        if !(self.verify.x > 0.0 && self.verify.x <= self.grid.x_max) {
            return Err(ConfigError::Validation(format!(
                "verify.x = {} must lie in (0, grid.x_max]",
                self.verify.x
            )));
        }
        self.sim
            .validate(&self.params, self.verify.x)
            .map_err(|e| invalid("sim", e))?;
        if let Some(s) = &self.sweep {
            if s.a_values.is_empty() || s.eta_values.is_empty() {
                return Err(ConfigError::Validation(
                    "sweep.a_values and sweep.eta_values must be non-empty".into(),
                ));
            }
            for &a in &s.a_values {
                for &eta in &s.eta_values {
                    self.params
                        .with_a(a)
                        .with_eta(eta)
                        .derive_constants()
                        .map_err(|e| invalid(&format!("sweep cell a={a} eta={eta}"), e))?;
                }
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(ConfigError::Validation("output_dir is empty".into()));
        }
        Ok(())
    }

    pub fn sweep_or_default(&self) -> SweepConfig {
        self.sweep.clone().unwrap_or_default()
    }
}
