use std::path::{Path, PathBuf};

use gmc_core::surface::ChartDescription;
use gmc_core::{QuadConfig, ToleranceConfig, TraceConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

/// Fully resolved settings of one run; embedded in every JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub chart: Option<ChartDescription>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub seed: u64,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chart: None,
            tolerances: ToleranceConfig::default(),
            trace: TraceConfig::default(),
            quadrature: QuadConfig::default(),
            out: None,
            formats: default_formats(),
            seed: 0,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        if text.trim().is_empty() {
            return Err(CliError::usage(format!("{}: empty configuration", path.display())));
        }
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn load_chart(path: &Path) -> Result<ChartDescription, CliError> {
        let text = read(path)?;
        if text.trim().is_empty() {
            return Err(CliError::usage(format!("{}: empty chart description", path.display())));
        }
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&mut self) -> Result<(), CliError> {
        if self.formats.is_empty() {
            return Err(CliError::usage("at least one output format is required"));
        }
        self.formats.sort();
        self.formats.dedup();
        self.trace.validate().map_err(|e| CliError::usage(e.to_string()))?;
        let t = &self.tolerances;
        if ![t.eps_k, t.eps_umbilic, t.eps_regular, t.eps_boundary]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
        {
            return Err(CliError::usage("tolerances must be finite and non-negative"));
        }
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
        }
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
