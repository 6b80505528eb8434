use serde::{Deserialize, Serialize};

use super::{AdamConfig, NnError, Result};

/// Placement of ReLU and batch normalization inside a hidden block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerOrder {
    /// Dense → ReLU → BatchNorm (normalization after each hidden layer).
    #[default]
    DenseReluBatchNorm,
    /// Dense → BatchNorm → ReLU.
    DenseBatchNormRelu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_classes: usize,
    pub input_dropout_rate: f64,
    /// Weight of the old value in `running = m * running + (1 - m) * batch`.
    pub batchnorm_momentum: f64,
    pub batchnorm_epsilon: f64,
    pub layer_order: LayerOrder,
    pub weight_init_seed: u64,
}

impl NetworkConfig {
    /// 256/128/64 ReLU hidden layers, 3 softmax outputs, 50% input dropout.
    pub fn baseline(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_widths: vec![256, 128, 64],
            output_classes: 3,
            input_dropout_rate: 0.5,
            batchnorm_momentum: 0.9,
            batchnorm_epsilon: 1e-5,
            layer_order: LayerOrder::default(),
            weight_init_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NnError::InvalidConfig(m));
        if self.input_dim == 0 {
            return bad("input_dim must be at least 1".into());
        }
        if self.hidden_widths.contains(&0) {
            return bad(format!("hidden widths must be at least 1, got {:?}", self.hidden_widths));
        }
        if self.output_classes < 2 {
            return bad(format!("need at least 2 output classes, got {}", self.output_classes));
        }
        if !(0.0..1.0).contains(&self.input_dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.input_dropout_rate));
        }
        if !(self.batchnorm_momentum > 0.0 && self.batchnorm_momentum < 1.0) {
            return bad(format!("batchnorm momentum {} outside (0, 1)", self.batchnorm_momentum));
        }
        if !(self.batchnorm_epsilon > 0.0 && self.batchnorm_epsilon.is_finite()) {
            return bad("batchnorm epsilon must be positive".into());
        }
        Ok(())
    }
}

/// Reduce-on-plateau settings; the monitored quantity is validation accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub factor: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub min_lr: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self { factor: 0.5, patience: 5, min_delta: 1e-4, min_lr: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSchedule {
    pub initial_lr: f64,
    pub plateau: PlateauConfig,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self {
            initial_lr: 1e-3,
            plateau: PlateauConfig::default(),
            max_epochs: 100,
            batch_size: 64,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainingSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NnError::InvalidSchedule(m));
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad(format!("initial lr {} must be positive", self.initial_lr));
        }
        let p = &self.plateau;
        if !(p.factor > 0.0 && p.factor < 1.0) {
            return bad(format!("plateau factor {} outside (0, 1)", p.factor));
        }
        if p.patience == 0 {
            return bad("plateau patience must be at least 1".into());
        }
        if !(p.min_lr >= 0.0 && p.min_lr <= self.initial_lr) {
            return bad(format!("min lr {} must lie in [0, initial lr]", p.min_lr));
        }
        if p.min_delta < 0.0 {
            return bad("min_delta must be non-negative".into());
        }
        if self.batch_size < 2 {
            return bad("batch size must be at least 2 for batch normalization".into());
        }
        Ok(())
    }
}
