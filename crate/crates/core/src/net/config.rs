use serde::{Deserialize, Serialize};

/// Network and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub lstm_units: usize,
    pub fc_layers: usize,
    pub fc_first_width: usize,
    pub fc_rest_width: usize,
    pub dropout_rate: f64,
    pub l2_gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub recall_weight: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lstm_units: 4,
            fc_layers: 6,
            fc_first_width: 64,
            fc_rest_width: 32,
            dropout_rate: 0.44,
            l2_gamma: 1.78e-3,
            learning_rate: 1e-3,
            batch_size: 1024,
            max_epochs: 300,
            patience: 15,
            recall_weight: 4.5,
            threshold: 0.5,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn hidden_widths(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.fc_layers).map(|i| if i == 0 { self.fc_first_width } else { self.fc_rest_width })
    }
}
