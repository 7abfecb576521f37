//! Seeded mini-batch training and prediction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{compute_gradients, ModelConfig, Network};
use super::optim::{adam_step, AdamConfig, AdamState};
use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureWindow, Scaler};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub gradient_clip_norm: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            gradient_clip_norm: 5.0,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            clip_norm: Some(self.gradient_clip_norm),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("gradient_clip_norm", self.gradient_clip_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err((name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err((name, format!("must lie in [0, 1), got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(("batch_size", "must be at least 1".into()));
        }
        Ok(())
    }
}

/// A trained network with the scaler it was trained under.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub network: Network,
    pub scaler: Scaler,
    pub train_config: TrainConfig,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

impl TrainedModel {
    pub fn model_config(&self) -> &ModelConfig {
        self.network.config()
    }
}

/// Train from a fresh seeded initialisation. The training set is only read.
pub fn train(train: &Dataset, config: &TrainConfig, model_config: &ModelConfig) -> Result<TrainedModel> {
    config.validate().map_err(|(f, m)| Error::config(format!("train.{f}"), m))?;
    if train.is_empty() {
        return Err(Error::InsufficientData("training set is empty".into()));
    }
    if train.windows[0].rows != model_config.input_dim {
        return Err(Error::Shape(format!(
            "windows have {} feature rows, model input_dim is {}",
            train.windows[0].rows, model_config.input_dim
        )));
    }
    let mut network = Network::new(model_config)?;
    let adam = config.adam();
    let mut state = AdamState::new(network.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&FeatureWindow> = chunk.iter().map(|&i| &train.windows[i]).collect();
            let grads = compute_gradients(&batch, &network).map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::Divergence { epoch, batch: b },
                other => other,
            })?;
            if !grads.loss.is_finite() || grads.values.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: b });
            }
            adam_step(network.params_mut(), &grads.values, &mut state, &adam);
            total += grads.loss * chunk.len() as f64;
        }
        let mean = total / train.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        loss_trace.push(mean);
    }
    Ok(TrainedModel { network, scaler: train.scaler.clone(), train_config: config.clone(), loss_trace })
}

/// Predictions in MW for scaled windows, in input order.
pub fn predict_windows(model: &TrainedModel, windows: &[FeatureWindow]) -> Result<Vec<f64>> {
    windows
        .par_iter()
        .map(|w| Ok(model.scaler.target.unscale(model.network.forward(w)?)))
        .collect()
}

/// Predictions in MW for a dataset built with the model's scaler.
pub fn predict(model: &TrainedModel, data: &Dataset) -> Result<Vec<f64>> {
    if data.scaler != model.scaler {
        return Err(Error::Invalid("dataset was scaled with a different scaler than the model".into()));
    }
    predict_windows(model, &data.windows)
}
