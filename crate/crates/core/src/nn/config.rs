use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture and optimization settings for one classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Hidden layer widths, input side first.
    pub layer_widths: Vec<usize>,
    pub use_batch_norm: bool,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            layer_widths: vec![300, 100],
            use_batch_norm: true,
            dropout_rate: 0.0,
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 50,
            seed: 42,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.layer_widths.is_empty() || self.layer_widths.len() > 4 {
            return bad(format!("{} hidden layers; 1 to 4 supported", self.layer_widths.len()));
        }
        if self.layer_widths.contains(&0) {
            return bad("hidden layer of width 0".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 || (self.use_batch_norm && self.batch_size < 2) {
            return bad(format!("batch size {} too small", self.batch_size));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        assert!(MlpConfig::default().validate().is_ok());
        let with = |f: fn(&mut MlpConfig)| {
            let mut c = MlpConfig::default();
            f(&mut c);
            c.validate()
        };
        assert!(with(|c| c.layer_widths.clear()).is_err());
        assert!(with(|c| c.layer_widths = vec![8; 5]).is_err());
        assert!(with(|c| c.epochs = 0).is_err());
        assert!(with(|c| c.batch_size = 1).is_err());
        assert!(with(|c| {
            c.batch_size = 1;
            c.use_batch_norm = false
        })
        .is_ok());
        assert!(with(|c| c.dropout_rate = 1.0).is_err());
        assert!(with(|c| c.learning_rate = 0.0).is_err());
    }
}
