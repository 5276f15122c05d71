use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SGD hyper-parameters shared by every training regime.
///
/// `epochs` and `stop_train_acc` govern standard training and the clean
/// second stage; the `stage1_*` fields govern noisy pre-training. A stop
/// threshold can only end training once the run as a whole has completed
/// `min_epochs` epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Stage-1 label corruption fraction.
    pub p: Option<f64>,
    /// Label-smoothing coefficient, 0 for hard targets.
    pub eps: f64,
    pub stop_train_acc: f64,
    pub stage1_epochs: usize,
    pub stage1_stop_acc: f64,
    pub min_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 500,
            batch_size: 64,
            p: None,
            eps: 0.0,
            stop_train_acc: 1.0,
            stage1_epochs: 500,
            stage1_stop_acc: 0.995,
            min_epochs: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.eps) {
            return Err(Error::Config(format!("label smoothing {} outside [0, 1)", self.eps)));
        }
        for (name, v) in [("stop_train_acc", self.stop_train_acc), ("stage1_stop_acc", self.stage1_stop_acc)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} {v} outside (0, 1]")));
            }
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p < 0.5) {
                return Err(Error::Config(format!("corruption fraction {p} outside (0, 0.5)")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects() {
        let bad = [
            TrainConfig { lr: 0.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { eps: 1.0, ..Default::default() },
            TrainConfig { p: Some(0.0), ..Default::default() },
            TrainConfig { p: Some(0.5), ..Default::default() },
            TrainConfig { stop_train_acc: 0.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn json_fills_defaults() {
        let c: TrainConfig = serde_json::from_str(r#"{"lr": 0.01, "p": 0.1}"#).unwrap();
        assert_eq!(c.lr, 0.01);
        assert_eq!(c.p, Some(0.1));
        assert_eq!(c.batch_size, 64);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"learning_rate": 1}"#).is_err());
    }
}
