//! JSON job configuration: strict parsing, validation, and the effective
//! configuration echoed at the top of every output.

use std::path::PathBuf;

use gpspectra_core::{ExponentialKernel, MemoryKernel, PowerLawFamily, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    Spectrum,
    Verify,
    Sweep,
    OracleCheck,
    Asymptote,
}

impl JobKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            JobKind::Spectrum => "spectrum",
            JobKind::Verify => "verify",
            JobKind::Sweep => "sweep",
            JobKind::OracleCheck => "oracle-check",
            JobKind::Asymptote => "asymptote",
        }
    }
}

fn default_true() -> bool {
    true
}

/// Power-law family `c_k = A k^-alpha`, `gamma_k = B k^beta` with `N` explicit
/// terms and, by default, the integral correction for the remaining terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub amplitude: f64,
    pub scale: f64,
    pub alpha: f64,
    pub beta: f64,
    pub truncation: usize,
    #[serde(default = "default_true")]
    pub tail_correction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricModes {
    pub a_min: f64,
    pub factor: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModesConfig {
    List(Vec<f64>),
    Geometric(GeometricModes),
}

fn default_residual_tol() -> f64 {
    SolverOptions::default().residual_tol
}

fn default_quadrature_tol() -> f64 {
    SolverOptions::default().quadrature_tol
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_quadrature_tol")]
    pub quadrature_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual_tol: default_residual_tol(),
            quadrature_tol: default_quadrature_tol(),
        }
    }
}

/// Configuration document as written by the user, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<ExponentialKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    pub xi: f64,
    pub modes: ModesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job: Option<JobKind>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Kernel selected by the configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Ladder(ExponentialKernel),
    Family(PowerLawFamily, bool),
}

impl KernelChoice {
    pub fn memory_kernel(&self) -> gpspectra_core::Result<MemoryKernel> {
        match self {
            KernelChoice::Ladder(k) => Ok(k.clone().into()),
            KernelChoice::Family(f, true) => f.memory_kernel(),
            KernelChoice::Family(f, false) => Ok(f.materialize()?.into()),
        }
    }

    pub fn family(&self) -> Option<&PowerLawFamily> {
        match self {
            KernelChoice::Family(f, _) => Some(f),
            KernelChoice::Ladder(_) => None,
        }
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub raw: JobConfig,
    pub kernel: KernelChoice,
    pub modes: Vec<f64>,
    pub geometric: bool,
}

impl Validated {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            residual_tol: self.raw.tolerances.residual_tol,
            quadrature_tol: self.raw.tolerances.quadrature_tol,
        }
    }

    /// The effective configuration as pretty JSON.
    pub fn effective_json(&self) -> String {
        serde_json::to_string_pretty(&self.raw).expect("configuration serializes")
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Validated, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: JobConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(format!("{path}: {}", e.inner()))
    })?;
    validate(raw)
}

fn validate(raw: JobConfig) -> Result<Validated, CliError> {
    let kernel = match (&raw.ladder, &raw.family) {
        (Some(k), None) => KernelChoice::Ladder(k.clone()),
        (None, Some(f)) => {
            let family = PowerLawFamily::new(f.amplitude, f.scale, f.alpha, f.beta, f.truncation)
                .map_err(|e| config_error(format!("family: {e}")))?;
            KernelChoice::Family(family, f.tail_correction)
        }
        (Some(_), Some(_)) => {
            return Err(config_error(
                "exactly one of \"ladder\" and \"family\" may be given, found both",
            ))
        }
        (None, None) => return Err(config_error("one of \"ladder\" and \"family\" is required")),
    };
    if !(raw.xi > 0.0 && raw.xi < 1.0) {
        return Err(config_error(format!(
            "xi: xi must lie strictly inside (0,1), got {}",
            raw.xi
        )));
    }
    let (modes, geometric) = match &raw.modes {
        ModesConfig::List(list) => (list.clone(), false),
        ModesConfig::Geometric(g) => {
            if !(g.a_min > 0.0 && g.a_min.is_finite()) {
                return Err(config_error(format!(
                    "modes.a_min: must be positive, got {}",
                    g.a_min
                )));
            }
            if !(g.factor > 1.0 && g.factor.is_finite()) {
                return Err(config_error(format!(
                    "modes.factor: must exceed 1, got {}",
                    g.factor
                )));
            }
            (
                (0..g.count)
                    .map(|i| g.a_min * g.factor.powi(i as i32))
                    .collect(),
                true,
            )
        }
    };
    if modes.is_empty() {
        return Err(config_error("modes: the mode ladder is empty"));
    }
    if let Some(bad) = modes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(config_error(format!(
            "modes: entries must be positive and finite, got {bad}"
        )));
    }
    let t = raw.tolerances;
    if !(t.residual_tol > 0.0 && t.quadrature_tol > 0.0) {
        return Err(config_error("tolerances: values must be positive"));
    }
    Ok(Validated {
        raw,
        kernel,
        modes,
        geometric,
    })
}
