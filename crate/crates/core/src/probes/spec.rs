use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Softmax regression, cross-entropy loss.
    LinearClassifier,
    /// Affine map to one real output, squared error.
    LinearRegressor,
    /// Affine map to a vector output, squared error averaged over outputs.
    LinearMap,
    /// Two layers with ReLU hidden units and per-output sigmoid, binary
    /// cross-entropy averaged over output cells.
    MlpMultilabel,
}

/// Training hyperparameters shared by every probe in a run. Every field can be
/// overridden from the run config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Validation loss must drop by more than this to reset patience.
    pub min_delta: f64,
    pub hidden_dim: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            max_epochs: 200,
            patience: 10,
            batch_size: 64,
            learning_rate: 1e-3,
            min_delta: 1e-5,
            hidden_dim: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub input_dim: usize,
    pub output_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub min_delta: f64,
    pub seed: u64,
}

impl ProbeSpec {
    pub fn new(
        kind: ProbeKind,
        input_dim: usize,
        output_dim: usize,
        config: &ProbeConfig,
        seed: u64,
    ) -> Self {
        Self {
            kind,
            input_dim,
            output_dim,
            hidden_dim: (kind == ProbeKind::MlpMultilabel).then_some(config.hidden_dim),
            max_epochs: config.max_epochs,
            patience: config.patience,
            batch_size: config.batch_size,
            learning_rate: config.learning_rate,
            min_delta: config.min_delta,
            seed,
        }
    }

    /// Same spec with a different input width (used for the concatenated probe).
    pub fn with_input_dim(mut self, input_dim: usize) -> Self {
        self.input_dim = input_dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("probe spec: {msg}")));
        if self.input_dim == 0 || self.output_dim == 0 {
            return bad("dims must be positive");
        }
        if self.kind == ProbeKind::LinearRegressor && self.output_dim != 1 {
            return bad("linear_regressor has a single output");
        }
        match (self.kind, self.hidden_dim) {
            (ProbeKind::MlpMultilabel, Some(h)) if h > 0 => {}
            (ProbeKind::MlpMultilabel, _) => return bad("mlp_multilabel needs hidden_dim > 0"),
            (_, Some(_)) => return bad("hidden_dim only applies to mlp_multilabel"),
            _ => {}
        }
        if self.max_epochs == 0 || self.patience >= self.max_epochs {
            return bad("need 0 < patience < max_epochs");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.min_delta.is_nan() || self.min_delta < 0.0 {
            return bad("min_delta must be non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = ProbeConfig::default();
        for kind in [
            ProbeKind::LinearClassifier,
            ProbeKind::LinearRegressor,
            ProbeKind::LinearMap,
            ProbeKind::MlpMultilabel,
        ] {
            let out = if kind == ProbeKind::LinearRegressor { 1 } else { 4 };
            ProbeSpec::new(kind, 3, out, &cfg, 0).validate().unwrap();
        }
        let mlp = ProbeSpec::new(ProbeKind::MlpMultilabel, 3, 128, &cfg, 0);
        assert_eq!(mlp.hidden_dim, Some(512));
    }

    #[test]
    fn rejects_bad_specs() {
        let cfg = ProbeConfig {
            patience: 200,
            ..ProbeConfig::default()
        };
        assert!(ProbeSpec::new(ProbeKind::LinearMap, 3, 3, &cfg, 0).validate().is_err());
        let cfg = ProbeConfig::default();
        assert!(ProbeSpec::new(ProbeKind::LinearRegressor, 3, 2, &cfg, 0).validate().is_err());
        assert!(ProbeSpec::new(ProbeKind::LinearMap, 0, 2, &cfg, 0).validate().is_err());
    }
}
