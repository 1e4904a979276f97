//! JSON run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use salgame_core::{InitKind, PipelineConfig};
use serde::{Deserialize, Serialize};

use crate::error::{SgError, SgResult};

/// On-disk form. Every key is optional; missing keys take the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scales: Option<Vec<usize>>,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub init: Option<String>,
    pub feature_tensor: Option<PathBuf>,
    pub proposals: Option<PathBuf>,
}

/// A resolved configuration: detector parameters plus optional inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub feature_tensor: Option<PathBuf>,
    pub proposals: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { pipeline: PipelineConfig::default(), feature_tensor: None, proposals: None }
    }
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> SgResult<Self> {
        serde_json::from_str(text).map_err(|e| SgError::format(origin, e))
    }

    pub fn load(path: &Path) -> SgResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| SgError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Overlays the set keys onto `base`. Relative input paths are resolved
    /// against `dir`.
    pub fn apply(&self, mut base: RunConfig, dir: &Path) -> SgResult<RunConfig> {
        let p = &mut base.pipeline;
        if let Some(v) = &self.scales {
            p.scales = v.clone();
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { p.$target = v; })*
            };
        }
        set!(sigma => sigma, epsilon => epsilon, lambda1 => lambda1, lambda2 => lambda2, alpha => alpha,
             beta => beta, t => rounds, rho1 => rho1, rho2 => rho2);
        if let Some(name) = &self.init {
            p.init = name.parse::<InitKind>()?;
        }
        if let Some(f) = &self.feature_tensor {
            base.feature_tensor = Some(dir.join(f));
        }
        if let Some(m) = &self.proposals {
            base.proposals = Some(dir.join(m));
        }
        Ok(base)
    }

    /// Every key set from `cfg`.
    pub fn from_run(cfg: &RunConfig) -> Self {
        let p = &cfg.pipeline;
        Self {
            scales: Some(p.scales.clone()),
            sigma: Some(p.sigma),
            epsilon: Some(p.epsilon),
            lambda1: Some(p.lambda1),
            lambda2: Some(p.lambda2),
            alpha: Some(p.alpha),
            beta: Some(p.beta),
            t: Some(p.rounds),
            rho1: Some(p.rho1),
            rho2: Some(p.rho2),
            init: Some(p.init.name().to_string()),
            feature_tensor: cfg.feature_tensor.clone(),
            proposals: cfg.proposals.clone(),
        }
    }
}
