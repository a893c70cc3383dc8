//! TOML run configuration. Every dimensional key carries its unit in the name.
//!
//! ```toml
//! reference_plane_attenuation_db = 80.0
//!
//! [materials.Ta]
//! tc_k = 4.06
//! n0_per_m3_ev = 6.9e28
//! sigma_n_s_per_m = 1.0e7
//! gap_model = "tanh"            # or "constant_delta0"
//!
//! [resonators.R1]
//! material = "Ta"
//! f_r_hz = 3.654e9
//! alpha = 0.05
//!
//! [io]
//! inputs = ["data"]             # files or directories, relative to this file
//! output_dir = "out"
//!
//! [fit]
//! beta_min = 0.1
//! beta_max = 2.0
//! regime_threshold = 3.0
//! clamp_policy = "clamp"        # or "drop"
//! ```
//!
//! Optional `[synth]`, `[compare]` and `[mb_table]` sections drive the
//! corresponding CLI subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lossmodel::{ResonatorParams, TlsParams};
use crate::mbcore::{GapModel, Material};
use crate::resfit::{self, Background};
use crate::synth::{NoiseSpec, ResonatorSpec, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    pub tc_k: f64,
    pub n0_per_m3_ev: f64,
    pub sigma_n_s_per_m: f64,
    #[serde(default)]
    pub gap_model: GapModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsEntry {
    pub inv_q_tls0: f64,
    pub n_c: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorEntry {
    pub material: String,
    pub f_r_hz: f64,
    pub alpha: f64,
    /// Generator-only: coupling Q magnitude.
    pub q_c_abs: Option<f64>,
    /// Generator-only: impedance-mismatch rotation.
    #[serde(default)]
    pub phi0_rad: f64,
    /// Generator-only: TLS ground truth.
    pub tls: Option<TlsEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicy {
    /// Negative extractions are set to zero and flagged.
    #[default]
    Clamp,
    /// Rows whose extraction had to be clamped are left out of the report.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    #[serde(default = "default_beta_min")]
    pub beta_min: f64,
    #[serde(default = "default_beta_max")]
    pub beta_max: f64,
    #[serde(default = "default_regime_threshold")]
    pub regime_threshold: f64,
    #[serde(default)]
    pub clamp_policy: ClampPolicy,
}

fn default_beta_min() -> f64 {
    crate::lossmodel::DEFAULT_BETA_BOUNDS.0
}
fn default_beta_max() -> f64 {
    crate::lossmodel::DEFAULT_BETA_BOUNDS.1
}
fn default_regime_threshold() -> f64 {
    resfit::DEFAULT_REGIME_THRESHOLD
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            beta_min: default_beta_min(),
            beta_max: default_beta_max(),
            regime_threshold: default_regime_threshold(),
            clamp_policy: ClampPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Resonators to simulate; empty means all configured resonators.
    #[serde(default)]
    pub resonators: Vec<String>,
    pub temperatures_k: Vec<f64>,
    pub powers_dbm: Vec<f64>,
    /// Omit for noiseless traces.
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub excess_density_per_um3: f64,
    #[serde(default = "default_points")]
    pub points_per_trace: usize,
    #[serde(default = "default_span")]
    pub span_linewidths: f64,
    #[serde(default = "default_amplitude")]
    pub background_amplitude: f64,
    #[serde(default)]
    pub background_phase_rad: f64,
    #[serde(default)]
    pub background_delay_s: f64,
}

fn default_points() -> usize {
    2001
}
fn default_span() -> f64 {
    5.0
}
fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub material_a: String,
    pub material_b: String,
    #[serde(default)]
    pub t_over_tc: Vec<f64>,
    /// Adds a row at this common absolute temperature.
    pub temperature_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbTableConfig {
    pub material: String,
    pub frequency_hz: f64,
    pub temperatures_k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub reference_plane_attenuation_db: f64,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialEntry>,
    #[serde(default)]
    pub resonators: BTreeMap<String, ResonatorEntry>,
    #[serde(default)]
    pub io: IoConfig,
    #[serde(default)]
    pub fit: FitOptions,
    pub synth: Option<SynthConfig>,
    pub compare: Option<CompareConfig>,
    pub mb_table: Option<MbTableConfig>,
    /// SHA-256 of the source text, hex.
    #[serde(skip)]
    pub source_sha256: String,
}

impl RunConfig {
    /// Parses and validates a config file. Relative input and output paths
    /// are resolved against the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Parse {
                path: path.to_path_buf(),
                msg,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut cfg.io.inputs {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.io.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.source_sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reference_plane_attenuation_db >= 0.0 && self.reference_plane_attenuation_db.is_finite()) {
            return Err(Error::Config(format!(
                "reference_plane_attenuation_db must be >= 0, got {}",
                self.reference_plane_attenuation_db
            )));
        }
        for name in self.materials.keys() {
            self.material(name)?;
        }
        for name in self.resonators.keys() {
            self.resonator_params(name)?;
        }
        let f = &self.fit;
        if !(f.beta_min > 0.0 && f.beta_min < f.beta_max && f.beta_max.is_finite()) {
            return Err(Error::Config(format!("need 0 < beta_min < beta_max, got ({}, {})", f.beta_min, f.beta_max)));
        }
        if !(f.regime_threshold > 0.0 && f.regime_threshold.is_finite()) {
            return Err(Error::Config("regime_threshold must be > 0".into()));
        }
        if let Some(c) = &self.compare {
            self.material(&c.material_a)?;
            self.material(&c.material_b)?;
        }
        if let Some(m) = &self.mb_table {
            self.material(&m.material)?;
        }
        Ok(())
    }

    pub fn material(&self, name: &str) -> Result<Material> {
        let e = self
            .materials
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown material '{name}'")))?;
        Material::new(name, e.tc_k, e.n0_per_m3_ev, e.sigma_n_s_per_m, e.gap_model)
    }

    pub fn resonator_params(&self, name: &str) -> Result<ResonatorParams> {
        let e = self
            .resonators
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown resonator '{name}'")))?;
        ResonatorParams::new(e.f_r_hz, e.alpha, self.material(&e.material)?)
            .map_err(|err| Error::Config(format!("resonator '{name}': {err}")))
    }

    /// Builds the generator scenario from the `[synth]` section.
    /// `seed` overrides the configured seed.
    pub fn scenario(&self, seed: Option<u64>) -> Result<ScenarioSpec> {
        let s = self
            .synth
            .as_ref()
            .ok_or_else(|| Error::Config("missing [synth] section".into()))?;
        let names: Vec<String> = if s.resonators.is_empty() {
            self.resonators.keys().cloned().collect()
        } else {
            s.resonators.clone()
        };
        let mut material: Option<Material> = None;
        let mut specs = Vec::new();
        for name in &names {
            let rp = self.resonator_params(name)?;
            let e = &self.resonators[name];
            let q_c_abs = e
                .q_c_abs
                .ok_or_else(|| Error::Config(format!("resonator '{name}' needs q_c_abs for synthesis")))?;
            let t = e
                .tls
                .ok_or_else(|| Error::Config(format!("resonator '{name}' needs a [tls] table for synthesis")))?;
            match &material {
                None => material = Some(rp.material.clone()),
                Some(m) if *m != rp.material => {
                    return Err(Error::Config("all synthesized resonators must share one material".into()))
                }
                Some(_) => {}
            }
            specs.push(ResonatorSpec {
                id: name.clone(),
                resonator: rp,
                tls: TlsParams::new(t.inv_q_tls0, t.n_c, t.beta)
                    .map_err(|err| Error::Config(format!("resonator '{name}': {err}")))?,
                q_c_abs,
                phi0_rad: e.phi0_rad,
            });
        }
        let material = material.ok_or_else(|| Error::Config("no resonators to synthesize".into()))?;
        let spec = ScenarioSpec {
            material,
            resonators: specs,
            temperature_grid_k: s.temperatures_k.clone(),
            power_grid_dbm: s.powers_dbm.clone(),
            noise: NoiseSpec {
                snr_db: s.snr_db.unwrap_or(f64::INFINITY),
                seed: seed.unwrap_or(s.seed),
            },
            background: Background {
                amplitude: s.background_amplitude,
                phase_offset_rad: s.background_phase_rad,
                delay_s: s.background_delay_s,
            },
            excess_density_per_um3: s.excess_density_per_um3,
            points_per_trace: s.points_per_trace,
            span_linewidths: s.span_linewidths,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
reference_plane_attenuation_db = 80.0

[materials.Ta]
tc_k = 4.06
n0_per_m3_ev = 6.9e28
sigma_n_s_per_m = 1.0e7

[resonators.R1]
material = "Ta"
f_r_hz = 3.654e9
alpha = 0.05
q_c_abs = 2e5
tls = { inv_q_tls0 = 2e-6, n_c = 5.0, beta = 1.0 }

[synth]
temperatures_k = [0.05, 0.2]
powers_dbm = [-150.0, -130.0]
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.materials["Ta"].gap_model, GapModel::TanhInterpolation);
        assert_eq!(cfg.fit, FitOptions::default());
        assert_eq!(cfg.source_sha256.len(), 64);
        let spec = cfg.scenario(Some(9)).unwrap();
        assert_eq!(spec.noise.seed, 9);
        assert!(spec.noise.snr_db.is_infinite());
        assert_eq!(spec.resonators[0].id, "R1");
    }

    #[test]
    fn rejects_unknown_material_and_keys() {
        let bad = BASIC.replace("material = \"Ta\"", "material = \"Nb\"");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = BASIC.replace("tc_k = 4.06", "tc = 4.06");
        assert!(RunConfig::from_toml_str(&bad).is_err());
        let bad = BASIC.replace("80.0", "-1.0");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }
}
