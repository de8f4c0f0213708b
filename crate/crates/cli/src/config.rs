//! Run configuration: a JSON document merged with command-line flags.
//! Flags take precedence over the document.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use pqr_core::budget::DEFAULT_ENTRY_BUDGET;
use pqr_core::models::{burgers_fem, lorenz, vdp_ring, BenchmarkInstance};
use pqr_core::sim::{OdeOptions, SimOptions};
use pqr_core::{PolynomialSystem, PqrOptions, QuadraticCost};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MAX_DEGREE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Lorenz,
    Vdp,
    Burgers,
    Custom,
}

/// Everything a run can be configured with. Every field is optional so the
/// same type serves as the config document and as the flag overlay.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<Model>,
    pub degree: Option<usize>,
    pub horizon: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub g: Option<usize>,
    pub actuated_nodes: Option<Vec<usize>>,
    pub y0: Option<f64>,
    pub n_elements: Option<usize>,
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub m: Option<usize>,
    /// Column-major `n × n` state weight.
    pub q: Option<Vec<f64>>,
    /// Column-major `m × m` control weight.
    pub r: Option<Vec<f64>>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub memory_budget: Option<usize>,
    pub strict_paper_rhs: Option<bool>,
    pub system_file: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// JSON config document; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Highest feedback degree (1 to 8)
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Initial state, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Oscillators in the van der Pol ring
    #[arg(long)]
    pub g: Option<usize>,
    /// Actuated oscillators (1-based), comma separated
    #[arg(long, value_delimiter = ',')]
    pub nodes: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<f64>,
    #[arg(long)]
    pub n_elements: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Number of Burgers actuators
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub rtol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub atol: Option<f64>,
    /// Output samples along the horizon
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave out the N_d terms that the shorter published right-hand sides omit
    #[arg(long)]
    pub strict_paper_rhs: bool,
    /// Largest number of entries any single tensor may have
    #[arg(long)]
    pub memory_budget: Option<usize>,
    /// JSON system description for `--model custom`
    #[arg(long)]
    pub system_file: Option<PathBuf>,
}

impl RunArgs {
    fn overlay(&self) -> RunConfig {
        RunConfig {
            model: self.model,
            degree: self.degree,
            horizon: self.horizon,
            x0: self.x0.clone(),
            g: self.g,
            actuated_nodes: self.nodes.clone(),
            y0: self.y0,
            n_elements: self.n_elements,
            eps: self.eps,
            alpha: self.alpha,
            m: self.m,
            q: None,
            r: None,
            rtol: self.rtol,
            atol: self.atol,
            samples: self.samples,
            out: self.out.clone(),
            memory_budget: self.memory_budget,
            strict_paper_rhs: self.strict_paper_rhs.then_some(true),
            system_file: self.system_file.clone(),
        }
    }
}

macro_rules! merge {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config document: {e}")))
    }

    /// Reads `--config` (if any) and lays the flags over it.
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let mut base = match &args.config {
            Some(path) => Self::from_json(&read(path)?)?,
            None => Self::default(),
        };
        let top = args.overlay();
        merge!(base, top; model, degree, horizon, x0, g, actuated_nodes, y0, n_elements, eps, alpha, m,
            q, r, rtol, atol, samples, out, memory_budget, strict_paper_rhs, system_file);
        Ok(base)
    }

    /// Fills defaults and checks ranges. Nothing is computed before this passes.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let model = self.model.unwrap_or(Model::Lorenz);
        let degree = self.degree.unwrap_or(3);
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(CliError::Config(format!("degree must be in 1..={MAX_DEGREE}, got {degree}")));
        }
        let ode = OdeOptions {
            rtol: self.rtol.unwrap_or(OdeOptions::default().rtol),
            atol: self.atol.unwrap_or(OdeOptions::default().atol),
            ..OdeOptions::default()
        };
        positive("rtol", ode.rtol)?;
        positive("atol", ode.atol)?;
        if let Some(h) = self.horizon {
            positive("horizon", h)?;
        }
        let samples = self.samples.unwrap_or(SimOptions::default().samples);
        if samples < 2 {
            return Err(CliError::Config(format!("samples must be at least 2, got {samples}")));
        }
        let memory_budget = self.memory_budget.unwrap_or(DEFAULT_ENTRY_BUDGET);
        if memory_budget == 0 {
            return Err(CliError::Config("memory budget must be positive".into()));
        }
        if let Some(x0) = &self.x0 {
            if x0.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("x0 has non-finite entries".into()));
            }
        }
        if model != Model::Custom && self.system_file.is_some() {
            return Err(CliError::Config("--system-file is only used with --model custom".into()));
        }
        let instance = self.instance(model)?;
        Ok(Resolved {
            instance,
            degree,
            sim: SimOptions { ode, samples },
            pqr: PqrOptions { strict_paper_rhs: self.strict_paper_rhs.unwrap_or(false) },
            out: self.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            memory_budget,
        })
    }

    fn instance(&self, model: Model) -> Result<BenchmarkInstance, CliError> {
        let mut inst = match model {
            Model::Lorenz => lorenz(),
            Model::Vdp => {
                let nodes = self.actuated_nodes.clone().unwrap_or_else(|| vec![1, 2]);
                vdp_ring(self.g.unwrap_or(4), &nodes, self.y0.unwrap_or(0.3)).map_err(config)?
            }
            Model::Burgers => burgers_fem(
                self.n_elements.unwrap_or(16),
                self.eps.unwrap_or(0.005),
                self.alpha.unwrap_or(0.3),
                self.m.unwrap_or(3),
            )
            .map_err(config)?,
            Model::Custom => {
                let path = self
                    .system_file
                    .as_ref()
                    .ok_or_else(|| CliError::Config("--model custom needs --system-file".into()))?;
                CustomSystemFile::from_json(&read(path)?)?.instance()?
            }
        };
        if let Some(x0) = &self.x0 {
            inst = inst.with_x0(x0.clone()).map_err(config)?;
        }
        if let Some(h) = self.horizon {
            inst = inst.with_horizon(h).map_err(config)?;
        }
        if self.q.is_some() || self.r.is_some() {
            let (n, m) = (inst.system.n(), inst.system.m());
            let q = match &self.q {
                Some(v) => square("q", n, v)?,
                None => inst.cost.q().clone(),
            };
            let r = match &self.r {
                Some(v) => square("r", m, v)?,
                None => inst.cost.r().clone(),
            };
            inst = inst.with_cost(QuadraticCost::new(q, r).map_err(config)?).map_err(config)?;
        }
        Ok(inst)
    }
}

/// Validated run settings.
pub struct Resolved {
    pub instance: BenchmarkInstance,
    pub degree: usize,
    pub sim: SimOptions,
    pub pqr: PqrOptions,
    pub out: PathBuf,
    pub memory_budget: usize,
}

/// User-supplied system `ẋ = Ax + Bu + Σ N_k x^{⊗k}` with cost weights.
/// Matrices are column-major; `nonlinear[i]` is `N_{i+2}` (`n × n^{i+2}`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSystemFile {
    pub n: usize,
    pub m: usize,
    /// Highest polynomial degree of the drift.
    pub p: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "N", default)]
    pub nonlinear: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub x0: Vec<f64>,
    #[serde(rename = "T")]
    pub t: f64,
}

impl CustomSystemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("system file: {e}")))
    }

    pub fn instance(&self) -> Result<BenchmarkInstance, CliError> {
        let (n, m) = (self.n, self.m);
        if n == 0 || m == 0 {
            return Err(CliError::Config("system file: n and m must be positive".into()));
        }
        if self.p < 1 || self.nonlinear.len() + 1 != self.p {
            return Err(CliError::Config(format!(
                "system file: p = {} needs {} nonlinear coefficients, got {}",
                self.p,
                self.p.saturating_sub(1),
                self.nonlinear.len()
            )));
        }
        let mut system = PolynomialSystem::new(matrix("A", n, n, &self.a)?, matrix("B", n, m, &self.b)?).map_err(config)?;
        for (i, nk) in self.nonlinear.iter().enumerate() {
            let k = i + 2;
            let cols = n.checked_pow(k as u32).ok_or_else(|| CliError::Config(format!("N{k} is too large")))?;
            system = system.with_term(k, matrix(&format!("N{k}"), n, cols, nk)?).map_err(config)?;
        }
        let cost = QuadraticCost::new(square("Q", n, &self.q)?, square("R", m, &self.r)?).map_err(config)?;
        BenchmarkInstance::new(system, cost, self.x0.clone(), self.t, "custom").map_err(config)
    }
}

fn matrix(name: &str, rows: usize, cols: usize, data: &[f64]) -> Result<DMatrix<f64>, CliError> {
    if data.len() != rows * cols {
        return Err(CliError::Config(format!("{name} needs {rows}x{cols} = {} entries, got {}", rows * cols, data.len())));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{name} has non-finite entries")));
    }
    Ok(DMatrix::from_column_slice(rows, cols, data))
}

fn square(name: &str, n: usize, data: &[f64]) -> Result<DMatrix<f64>, CliError> {
    matrix(name, n, n, data)
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn config(e: pqr_core::PqrError) -> CliError {
    CliError::Config(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
