//! Experiment configuration: a single versioned JSON document per run.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Free-form scenario name echoed into the manifest.
    #[serde(default)]
    pub scenario: Option<String>,
    /// Seed for every randomized draw. Mandatory for randomized checks.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default = "default_quadrature_points")]
    pub quadrature_points: usize,
    /// Series truncation tolerance.
    #[serde(default = "default_series_tol")]
    pub series_tol: f64,
    /// Acceptance tolerance for identity checks.
    #[serde(default = "default_check_tol")]
    pub check_tol: f64,
    #[serde(default)]
    pub abstract_model: Option<AbstractModelConfig>,
    #[serde(default)]
    pub qed_model: Option<QedModelConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Number of random systems in dyson-check / properties runs.
    #[serde(default = "default_systems")]
    pub systems: usize,
}

fn default_quadrature_points() -> usize {
    32
}

fn default_series_tol() -> f64 {
    1e-10
}

fn default_check_tol() -> f64 {
    1e-8
}

fn default_systems() -> usize {
    5
}

/// Abstract finite-dimensional system: free part plus a random symmetric
/// perturbation drawn from the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractModelConfig {
    /// Builtin preset name; explicit fields below override nothing when a
    /// preset is set.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub dim: Option<usize>,
    /// Largest free eigenvalue.
    #[serde(default)]
    pub spectral_top: Option<f64>,
    /// Operator norm of the perturbation.
    #[serde(default)]
    pub coupling_strength: Option<f64>,
    /// Use the gapped ladder spectrum 0, 1, ..., spectral_top instead of a
    /// random free part (what the adiabatic sweeps want).
    #[serde(default)]
    pub gapped_spectrum: Option<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct AbstractModelParams {
    pub dim: usize,
    pub spectral_top: f64,
    pub coupling_strength: f64,
    pub gapped_spectrum: bool,
}

impl AbstractModelConfig {
    pub fn resolve(&self) -> Result<AbstractModelParams, String> {
        if let Some(name) = &self.preset {
            if self.dim.is_some()
                || self.spectral_top.is_some()
                || self.coupling_strength.is_some()
                || self.gapped_spectrum.is_some()
            {
                return Err("abstract_model: use either a preset or explicit fields".into());
            }
            return match name.as_str() {
                "free-dim8" => Ok(AbstractModelParams {
                    dim: 8,
                    spectral_top: 1.5,
                    coupling_strength: 0.0,
                    gapped_spectrum: false,
                }),
                "dim16" => Ok(AbstractModelParams {
                    dim: 16,
                    spectral_top: 1.5,
                    coupling_strength: 0.6,
                    gapped_spectrum: false,
                }),
                "gml-dim32" => Ok(AbstractModelParams {
                    dim: 32,
                    spectral_top: 2.0,
                    coupling_strength: 0.25,
                    gapped_spectrum: true,
                }),
                other => Err(format!("unknown abstract preset `{other}`")),
            };
        }
        let dim = self.dim.ok_or("abstract_model.dim missing")?;
        if dim < 2 {
            return Err("abstract_model.dim must be at least 2".into());
        }
        let spectral_top = self.spectral_top.ok_or("abstract_model.spectral_top missing")?;
        if !(spectral_top > 0.0) {
            return Err("abstract_model.spectral_top must be positive".into());
        }
        let coupling_strength = self
            .coupling_strength
            .ok_or("abstract_model.coupling_strength missing")?;
        if !(coupling_strength >= 0.0) {
            return Err("abstract_model.coupling_strength must be non-negative".into());
        }
        Ok(AbstractModelParams {
            dim,
            spectral_top,
            coupling_strength,
            gapped_spectrum: self.gapped_spectrum.unwrap_or(false),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QedModelConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub photon_momenta: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub photon_chi: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda_ph: Option<f64>,
    #[serde(default = "default_k_min")]
    pub k_min: f64,
    #[serde(default)]
    pub electron_momenta: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub electron_chi: Option<Vec<f64>>,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub lambda_el: Option<f64>,
    #[serde(default)]
    pub coupling: Option<f64>,
    #[serde(default)]
    pub n_max: Option<u32>,
    #[serde(default)]
    pub spatial: Option<Vec<SpatialPointConfig>>,
    #[serde(default)]
    pub insertions: Option<Vec<InsertionConfig>>,
}

fn default_k_min() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialPointConfig {
    pub position: [f64; 3],
    pub weight: f64,
    pub chi_sp: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionConfig {
    /// "photon" | "dirac" | "dirac_dagger"
    pub kind: String,
    /// Photon direction 1..=3 or Dirac component 0..4.
    pub index: usize,
    pub position: [f64; 3],
    pub time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
    pub t_grid: Vec<f64>,
    /// Insertion times for the abstract sweep (operators are random
    /// Hermitian draws from the seed).
    #[serde(default)]
    pub insertion_times: Vec<f64>,
    /// |ratio(T_max) - G_m| must fall below this.
    #[serde(default = "default_gml_tol")]
    pub convergence_tol: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_step() -> f64 {
    0.5
}

fn default_step_tol() -> f64 {
    1e-13
}

fn default_gml_tol() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {})",
                cfg.schema_version, SCHEMA_VERSION
            ));
        }
        if !(cfg.series_tol > 0.0) || !(cfg.check_tol > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if cfg.quadrature_points < 2 {
            return Err("quadrature_points must be at least 2".into());
        }
        Ok(cfg)
    }
}
