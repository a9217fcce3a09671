use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::nn::{Activation, OptimizerKind};

/// Weights of the asymmetric Hamming cost between arc sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HammingCost {
    /// Charged per predicted arc missing from the gold set.
    pub c_fp: f64,
    /// Charged per gold arc missing from the prediction.
    pub c_fn: f64,
}

impl Default for HammingCost {
    fn default() -> Self {
        HammingCost { c_fp: 0.4, c_fn: 0.6 }
    }
}

/// Every hyperparameter of both training stages. Stored inside model files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub clip: f64,
    pub encoder: EncoderConfig,
    /// Width of the learned concept embedding appended to each node.
    pub concept_dim: usize,
    pub mlp_hidden: usize,
    pub activation: Activation,
    pub cost: HammingCost,
    /// Tags seen fewer times are folded into the empty tag.
    pub min_tag_count: usize,
    /// Decode connected graphs by default.
    pub connected: bool,
    pub smatch_restarts: usize,
    /// Stop a stage early once its dev score reaches 1.0.
    pub stop_at_perfect: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 1,
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.002,
            optimizer: OptimizerKind::Adam,
            clip: 5.0,
            encoder: EncoderConfig::default(),
            concept_dim: 32,
            mlp_hidden: 100,
            activation: Activation::Relu,
            cost: HammingCost::default(),
            min_tag_count: 1,
            connected: true,
            smatch_restarts: 10,
            stop_at_perfect: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("concept_dim", self.concept_dim),
            ("mlp_hidden", self.mlp_hidden),
            ("min_tag_count", self.min_tag_count),
            ("smatch_restarts", self.smatch_restarts),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be positive".into()));
        }
        if !(self.clip > 0.0) {
            return Err(Error::InvalidArgument("clip must be positive".into()));
        }
        if !(self.cost.c_fp >= 0.0 && self.cost.c_fn >= 0.0) {
            return Err(Error::InvalidArgument("Hamming weights must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: TrainConfig =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = TrainConfig::default();
        assert_eq!(TrainConfig::from_toml(&c.to_toml()).unwrap(), c);
        let partial = TrainConfig::from_toml("epochs = 5\n[encoder]\nhidden = 8\n").unwrap();
        assert_eq!(partial.epochs, 5);
        assert_eq!(partial.encoder.hidden, 8);
        assert_eq!(partial.encoder.layers, 2);
        assert_eq!(partial.batch_size, 32);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(TrainConfig::from_toml("epochs = 0\n").is_err());
        assert!(TrainConfig::from_toml("learning_rate = -1.0\n").is_err());
        assert!(TrainConfig::from_toml("bogus = 1\n").is_err());
        assert!(TrainConfig::from_toml("[cost]\nc_fp = -0.1\nc_fn = 1.0\n").is_err());
    }
}
