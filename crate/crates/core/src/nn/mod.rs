//! Per-side-effect binary classifier: dense layers with optional batch
//! normalization and dropout, a sigmoid output, mean binary cross-entropy, and
//! hand-derived gradients verified against central finite differences.
//!
//! Hidden layer order is `affine → batch norm → ReLU → dropout`. Weights are
//! stored `fan_in × fan_out`, so a batch `X` (rows = samples) maps to `XW + b`.

mod adam;
mod backward;
mod config;
mod gradcheck;
mod io;
mod model;
mod train;

pub use adam::{adam_step, Adam, AdamHyper};
pub use backward::{backward, Gradients, LayerGradients};
pub use config::MlpConfig;
pub use gradcheck::{
    gradient_check, random_gradient_check, relative_error, GradCheckReport, GroupError, FD_STEP, RELATIVE_FLOOR,
};
pub use io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{
    init_mlp, BatchNorm, DropoutMasks, ForwardCache, HiddenLayer, MlpModel, Mode, BN_EPSILON, BN_MOMENTUM,
};
pub use train::{
    predict_pair, score_samples, train, train_on_matrices, train_with, EpochReport, TrainOptions, TrainReport,
};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-7;

pub fn bce_loss(probabilities: &[f64], labels: &[f64]) -> crate::Result<f64> {
    if probabilities.len() != labels.len() {
        return Err(crate::Error::Dimension {
            expected: probabilities.len(),
            actual: labels.len(),
            context: "labels for loss",
        });
    }
    if probabilities.is_empty() {
        return Err(crate::Error::TooSmall { actual: 0, minimum: 1 });
    }
    let total: f64 = probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / probabilities.len() as f64)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
