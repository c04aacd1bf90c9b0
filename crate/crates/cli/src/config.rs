//! TOML experiment configs. Every section has defaults, so a config file
//! only needs the keys that differ.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tmsae::{Init, TrainConfig};

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; per-cell seeds are derived from it.
    pub seed: u64,
    pub train: TrainSection,
    pub model: ModelSection,
    pub sweep: SweepSection,
    pub rug: RugSection,
    pub compare: CompareSection,
    pub scaling: ScalingSection,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub window: usize,
    pub max_steps: usize,
    pub init: InitName,
    /// Fresh samples used to report the final per-feature loss.
    pub eval_samples: usize,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitName {
    #[default]
    Tied,
    Independent,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_eps: t.adam_eps,
            window: t.window,
            max_steps: t.max_steps,
            init: InitName::Tied,
            eval_samples: 16_384,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            window: self.window,
            max_steps: self.max_steps,
            init: match self.init {
                InitName::Tied => Init::Tied,
                InitName::Independent => Init::Independent,
            },
            seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub p: f64,
    pub n_s: usize,
    pub n_d: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            p: 0.2,
            n_s: 64,
            n_d: 16,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub p: Vec<f64>,
    /// Compression ratios; `n_d = round(r n_s)`.
    pub r: Vec<f64>,
    pub n_s: Vec<usize>,
    /// Replicates per cell.
    pub seeds: usize,
    pub save_weights: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            p: vec![0.05],
            r: vec![0.25],
            n_s: vec![256],
            seeds: 1,
            save_weights: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RugSection {
    pub n_s: usize,
    pub n_d: usize,
    pub p: f64,
}

impl Default for RugSection {
    fn default() -> Self {
        RugSection {
            n_s: 256,
            n_d: 40,
            p: 0.05,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub p: f64,
    pub n_s: usize,
    pub n_d: Vec<usize>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            p: 0.05,
            n_s: 1024,
            n_d: vec![128, 256, 512],
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub p: Vec<f64>,
    pub r: f64,
    /// Gauss-Legendre nodes per quadrature panel.
    pub n_quad: usize,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection {
            p: vec![0.02, 0.01, 0.005, 0.0025],
            r: 0.25,
            n_quad: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.to_train_config(0).validate()?;
        if self.train.eval_samples == 0 {
            bail!("train.eval_samples must be positive");
        }
        let s = &self.sweep;
        if s.p.is_empty() || s.r.is_empty() || s.n_s.is_empty() || s.seeds == 0 {
            bail!("sweep grids must be nonempty and seeds positive");
        }
        if s.r.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            bail!("sweep ratios must lie in (0, 1]");
        }
        if self.compare.n_d.is_empty() {
            bail!("compare.n_d must be nonempty");
        }
        if self.scaling.p.is_empty() {
            bail!("scaling.p must be nonempty");
        }
        Ok(())
    }
}

/// Hidden width for ratio `r`, at least 1.
pub fn hidden_width(n_s: usize, r: f64) -> usize {
    ((r * n_s as f64).round() as usize).clamp(1, n_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(
            ExperimentConfig::from_toml("").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "seed = 9\n[train]\nlearning_rate = 0.01\ninit = \"independent\"\n[sweep]\np = [0.1, 0.2]\nseeds = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.train.learning_rate, 0.01);
        assert_eq!(cfg.train.batch_size, 1024);
        assert_eq!(cfg.train.to_train_config(0).init, Init::Independent);
        assert_eq!(cfg.sweep.p, vec![0.1, 0.2]);
        assert_eq!(cfg.sweep.r, vec![0.25]);
    }

    #[test]
    fn rejects_unknown_keys_and_empty_grids() {
        assert!(ExperimentConfig::from_toml("[train]\nlr = 1.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[sweep]\np = []\n").is_err());
        assert!(ExperimentConfig::from_toml("[sweep]\nr = [1.5]\n").is_err());
    }

    #[test]
    fn hidden_width_rounds_and_clamps() {
        assert_eq!(hidden_width(256, 0.25), 64);
        assert_eq!(hidden_width(10, 0.01), 1);
        assert_eq!(hidden_width(10, 1.0), 10);
    }
}
