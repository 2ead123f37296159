//! Run configuration: JSON file, flag overrides, validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Nekrasov,
    Krasovskii,
    Hammerstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationCfg {
    /// Initial arclength step.
    pub ds: f64,
    pub max_steps: usize,
    /// Series parameter for the first branch point.
    pub initial_s: f64,
}

impl Default for ContinuationCfg {
    fn default() -> Self {
        ContinuationCfg { ds: 0.02, max_steps: 50, initial_s: 0.02 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Newton residual tolerance reported with branch points.
    pub newton: f64,
    /// Required excess of the fitted residual order over the series order K.
    pub slope_margin: f64,
    /// Maximum relative mismatch accepted by the equivalence verdict.
    pub equivalence_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { newton: 1e-11, slope_margin: 0.7, equivalence_rel: 1e-6 }
    }
}

/// Fitting window for the reduced-equation root curve; `None` fields are
/// resolved to per-problem defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchingCfg {
    pub window: Option<f64>,
    pub guard: Option<usize>,
}

/// Deterministic fault-injection hooks for exercising failure paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestHooks {
    /// Nonzero values bias the analytic kernel inside the verify battery.
    pub kernel_perturbation: f64,
}

impl Default for TestHooks {
    fn default() -> Self {
        TestHooks { kernel_perturbation: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemKind,
    /// Fluid depth; set together with `wavelength` for the finite-depth
    /// problem, leave both unset for infinite depth.
    pub depth: Option<f64>,
    pub wavelength: Option<f64>,
    /// Spectral truncation N.
    pub n_modes: usize,
    /// Branch mode n (and row count for the spectrum table).
    pub mode: usize,
    /// Series truncation order K.
    pub order: usize,
    /// Polynomial coefficients of the Hammerstein nonlinearity:
    /// `coeffs[k-1]` multiplies `u^k` (no constant term).
    pub hammerstein_coeffs: Vec<f64>,
    pub continuation: ContinuationCfg,
    pub tolerances: Tolerances,
    pub branching: BranchingCfg,
    pub out_dir: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub test_hooks: TestHooks,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemKind::Nekrasov,
            depth: None,
            wavelength: None,
            n_modes: 32,
            mode: 1,
            order: 4,
            hammerstein_coeffs: vec![1.0, 0.0, -1.0],
            continuation: ContinuationCfg::default(),
            tolerances: Tolerances::default(),
            branching: BranchingCfg::default(),
            out_dir: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
            test_hooks: TestHooks::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Fills per-problem defaults so the echoed config is fully resolved.
    pub fn resolve(&mut self) {
        let (window, guard) = match self.problem {
            ProblemKind::Nekrasov => (0.15, 3),
            ProblemKind::Krasovskii => (0.06, 4),
            ProblemKind::Hammerstein => (0.10, 3),
        };
        self.branching.window.get_or_insert(window);
        self.branching.guard.get_or_insert(guard);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_modes < 2 {
            return Err(CliError::Config("n_modes must be at least 2".into()));
        }
        if self.mode == 0 {
            return Err(CliError::Config("mode must be positive".into()));
        }
        if self.order == 0 {
            return Err(CliError::Config("order must be positive".into()));
        }
        if self.order > self.n_modes / 4 {
            return Err(CliError::Config(format!(
                "order {} exceeds n_modes/4 = {}",
                self.order,
                self.n_modes / 4
            )));
        }
        match (self.depth, self.wavelength) {
            (None, None) => {}
            (Some(h), Some(l)) => {
                if h <= 0.0 || l <= 0.0 {
                    return Err(CliError::Config("depth and wavelength must be positive".into()));
                }
            }
            _ => {
                return Err(CliError::Config(
                    "depth and wavelength must be set together (or both omitted)".into(),
                ))
            }
        }
        if self.continuation.ds <= 0.0
            || self.continuation.initial_s <= 0.0
            || self.continuation.max_steps == 0
        {
            return Err(CliError::Config("continuation parameters must be positive".into()));
        }
        if self.tolerances.newton <= 0.0
            || self.tolerances.slope_margin <= 0.0
            || self.tolerances.equivalence_rel <= 0.0
        {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if let Some(w) = self.branching.window {
            if w <= 0.0 {
                return Err(CliError::Config("branching.window must be positive".into()));
            }
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("at least one output format is required".into()));
        }
        Ok(())
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}
