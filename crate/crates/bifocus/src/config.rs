//! Scenario files: JSON with a `kind` tag, unknown keys rejected.

use std::path::{Path, PathBuf};

use bifocus_core::BiFocusSpectrum;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Validate,
    Raise,
    OrderN,
    Renorm,
    Universal,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Validate => "validate",
            Kind::Raise => "raise",
            Kind::OrderN => "order_n",
            Kind::Renorm => "renorm",
            Kind::Universal => "universal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Validate {
        /// Model files; empty means the built-in reference model.
        #[serde(default)]
        models: Vec<PathBuf>,
        #[serde(default)]
        out_dir: Option<PathBuf>,
    },
    Raise {
        /// Exactly two model files, `gm1` then `gm2`.
        models: Vec<PathBuf>,
        #[serde(default)]
        spectrum: Option<BiFocusSpectrum>,
        #[serde(default = "default_k_min")]
        k_min: u32,
        #[serde(default = "default_k_max")]
        k_max: u32,
        #[serde(default)]
        out_dir: Option<PathBuf>,
    },
    OrderN {
        /// Explicit model files, or
        #[serde(default)]
        models: Vec<PathBuf>,
        /// every `*.json` in a directory, in name order.
        #[serde(default)]
        model_dir: Option<PathBuf>,
        /// Target order `N`.
        order: u32,
        #[serde(default)]
        spectrum: Option<BiFocusSpectrum>,
        #[serde(default = "default_k_min")]
        k_min: u32,
        #[serde(default = "default_k_max")]
        k_max: u32,
        #[serde(default)]
        out_dir: Option<PathBuf>,
    },
    Renorm {
        #[serde(default)]
        model: Option<PathBuf>,
        #[serde(default)]
        spectrum: Option<BiFocusSpectrum>,
        #[serde(default = "default_scheme")]
        scheme: SchemeName,
        k_list: Vec<u32>,
        #[serde(default)]
        out_dir: Option<PathBuf>,
    },
    Universal {
        #[serde(default)]
        model: Option<PathBuf>,
        #[serde(default)]
        spectrum: Option<BiFocusSpectrum>,
        target: Target,
        n: usize,
        k_list: Vec<u32>,
        #[serde(default)]
        out_dir: Option<PathBuf>,
    },
}

fn default_k_min() -> u32 {
    bifocus_core::raiser::DEFAULT_K_RANGE.0
}

fn default_k_max() -> u32 {
    bifocus_core::raiser::DEFAULT_K_RANGE.1
}

fn default_scheme() -> SchemeName {
    SchemeName::OrderForm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    OrderForm,
    FullPolynomialForm,
}

/// Disk maps for the universal scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Target {
    /// `(1 - a Y1^2 + Y2, b Y1)`.
    Henon { a: f64, b: f64 },
    /// Terms `[j, i, c]` meaning `c Y1^(j-i) Y2^i`.
    Polynomial {
        y1: Vec<(usize, usize, f64)>,
        y2: Vec<(usize, usize, f64)>,
    },
    /// Dense random polynomial pair with coefficients uniform in `[-1, 1]`.
    RandomPolynomial { degree: usize, seed: u64 },
}

impl Scenario {
    pub fn kind(&self) -> Kind {
        match self {
            Scenario::Validate { .. } => Kind::Validate,
            Scenario::Raise { .. } => Kind::Raise,
            Scenario::OrderN { .. } => Kind::OrderN,
            Scenario::Renorm { .. } => Kind::Renorm,
            Scenario::Universal { .. } => Kind::Universal,
        }
    }

    pub fn out_dir(&self) -> Option<&Path> {
        match self {
            Scenario::Validate { out_dir, .. }
            | Scenario::Raise { out_dir, .. }
            | Scenario::OrderN { out_dir, .. }
            | Scenario::Renorm { out_dir, .. }
            | Scenario::Universal { out_dir, .. } => out_dir.as_deref(),
        }
    }

    pub fn spectrum(&self) -> BiFocusSpectrum {
        match self {
            Scenario::Validate { .. } => None,
            Scenario::Raise { spectrum, .. }
            | Scenario::OrderN { spectrum, .. }
            | Scenario::Renorm { spectrum, .. }
            | Scenario::Universal { spectrum, .. } => spectrum.clone(),
        }
        .unwrap_or_default()
    }
}

/// A parsed scenario and the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub base: PathBuf,
}

impl LoadedScenario {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }

    /// Run directory; defaults to `run_<kind>` beside the config.
    pub fn run_dir(&self) -> PathBuf {
        match self.scenario.out_dir() {
            Some(p) => self.resolve(p),
            None => self.base.join(format!("run_{}", self.scenario.kind().name())),
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedScenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Contract(format!("config {}: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| Failure::Contract(format!("config {}: {e}", path.display())))?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedScenario { scenario, base })
}
