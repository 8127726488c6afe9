use nalgebra::{DMatrix, DVector};

use super::model::{ForwardCache, MlpModel};
use super::PROB_CLAMP;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub gamma: Option<DVector<f64>>,
    pub beta: Option<DVector<f64>>,
}

/// Gradients of the mean BCE loss, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<LayerGradients>,
    pub output_weights: DVector<f64>,
    pub output_bias: f64,
}

impl Gradients {
    /// Same order and layout as [`MlpModel::tensors`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.hidden {
            out.push(layer.weights.as_slice());
            out.push(layer.bias.as_slice());
            if let (Some(g), Some(b)) = (&layer.gamma, &layer.beta) {
                out.push(g.as_slice());
                out.push(b.as_slice());
            }
        }
        out.push(self.output_weights.as_slice());
        out.push(std::slice::from_ref(&self.output_bias));
        out
    }
}

/// Backpropagates through a train-mode pass, including the batch-norm batch
/// statistics. The cache must come from the model in its current state.
pub fn backward(model: &MlpModel, cache: &ForwardCache, labels: &[f64]) -> Result<Gradients> {
    if cache.generation != model.generation {
        return Err(Error::StaleCache("parameters changed since the forward pass"));
    }
    if !cache.train {
        return Err(Error::StaleCache("forward pass ran in inference mode"));
    }
    if cache.layers.len() != model.hidden.len() {
        return Err(Error::StaleCache("cache belongs to a different architecture"));
    }
    let n = cache.probabilities.len();
    if labels.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: labels.len(),
            context: "labels for backward",
        });
    }

    // dL/dlogit; zero where the clamp is active because the loss is flat there
    let scale = 1.0 / n as f64;
    let d_logit = DVector::from_iterator(
        n,
        cache.probabilities.iter().zip(labels).map(|(&p, &y)| {
            if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
                (p - y) * scale
            } else {
                0.0
            }
        }),
    );
    let output_weights = cache.last_activation.transpose() * &d_logit;
    let output_bias = d_logit.sum();
    let mut upstream = &d_logit * model.output_weights.transpose();

    let mut hidden = Vec::with_capacity(model.hidden.len());
    for (layer, lc) in model.hidden.iter().zip(&cache.layers).rev() {
        if let Some(mask) = &lc.mask {
            upstream.component_mul_assign(mask);
        }
        let mut d_pre = upstream;
        d_pre.zip_apply(&lc.pre_activation, |g, z| {
            if z <= 0.0 {
                *g = 0.0
            }
        });
        let (d_z, gamma, beta) = match (&layer.norm, &lc.norm) {
            (Some(bn), Some(nc)) => {
                let rows = d_pre.nrows() as f64;
                let mut d_gamma = DVector::zeros(d_pre.ncols());
                let mut d_beta = DVector::zeros(d_pre.ncols());
                let mut d_z = DMatrix::zeros(d_pre.nrows(), d_pre.ncols());
                for j in 0..d_pre.ncols() {
                    let g = d_pre.column(j);
                    let xhat = nc.normalized.column(j);
                    d_gamma[j] = g.dot(&xhat);
                    d_beta[j] = g.sum();
                    // dx̂ = g·γ; dz = (inv_std/B)(B·dx̂ − Σdx̂ − x̂·Σ(dx̂∘x̂))
                    let sum_dx = d_beta[j] * bn.gamma[j];
                    let sum_dx_xhat = d_gamma[j] * bn.gamma[j];
                    let k = nc.inv_std[j] / rows;
                    for i in 0..d_pre.nrows() {
                        d_z[(i, j)] = k * (rows * g[i] * bn.gamma[j] - sum_dx - xhat[i] * sum_dx_xhat);
                    }
                }
                (d_z, Some(d_gamma), Some(d_beta))
            }
            (None, None) => (d_pre, None, None),
            _ => return Err(Error::StaleCache("batch-norm state does not match the cache")),
        };
        let weights = lc.input.transpose() * &d_z;
        let bias = DVector::from_iterator(d_z.ncols(), d_z.column_iter().map(|c| c.sum()));
        upstream = &d_z * layer.weights.transpose();
        hidden.push(LayerGradients {
            weights,
            bias,
            gamma,
            beta,
        });
    }
    hidden.reverse();
    Ok(Gradients {
        hidden,
        output_weights,
        output_bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::sigmoid;
    use crate::nn::{init_mlp, MlpConfig, Mode};

    fn config(widths: &[usize], bn: bool) -> MlpConfig {
        MlpConfig {
            layer_widths: widths.to_vec(),
            use_batch_norm: bn,
            ..MlpConfig::default()
        }
    }

    #[test]
    fn cancelling_batch_gives_zero_output_bias_gradient() {
        let mut m = init_mlp(3, &config(&[4], false)).unwrap();
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        let (_, cache) = m.forward(&x, Mode::Train { dropout: None }).unwrap();
        let g = backward(&m, &cache, &[1.0, 0.0]).unwrap();
        assert!(g.output_bias.abs() < 1e-12);
    }

    #[test]
    fn identity_like_layer_matches_logistic_gradient() {
        // one hidden unit with weight 1 on a positive input behaves as
        // logistic regression on that input: dL/dw_out = mean((p − y)·x)
        let mut m = init_mlp(1, &config(&[1], false)).unwrap();
        m.hidden[0].weights[(0, 0)] = 1.0;
        m.output_weights[0] = 0.7;
        m.output_bias = -0.2;
        let xs = [0.5, 1.5, 2.0, 3.0];
        let ys = [0.0, 1.0, 0.0, 1.0];
        let x = DMatrix::from_column_slice(4, 1, &xs);
        let (_, cache) = m.forward(&x, Mode::Train { dropout: None }).unwrap();
        let g = backward(&m, &cache, &ys).unwrap();
        let residual: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| sigmoid(0.7 * x - 0.2) - y).collect();
        let dw: f64 = residual.iter().zip(&xs).map(|(r, x)| r * x).sum::<f64>() / 4.0;
        let db: f64 = residual.iter().sum::<f64>() / 4.0;
        assert!((g.output_weights[0] - dw).abs() < 1e-12);
        assert!((g.output_bias - db).abs() < 1e-12);
        assert!((g.hidden[0].weights[(0, 0)] - 0.7 * dw).abs() < 1e-12);
    }

    #[test]
    fn stale_and_infer_caches_rejected() {
        let mut m = init_mlp(2, &config(&[3], true)).unwrap();
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let (_, infer) = m.forward(&x, Mode::Infer).unwrap();
        assert!(matches!(backward(&m, &infer, &[1.0, 0.0]), Err(Error::StaleCache(_))));
        let (_, cache) = m.forward(&x, Mode::Train { dropout: None }).unwrap();
        assert!(matches!(backward(&m, &cache, &[1.0]), Err(Error::Dimension { .. })));
        m.tensors_mut();
        assert!(matches!(backward(&m, &cache, &[1.0, 0.0]), Err(Error::StaleCache(_))));
    }

    #[test]
    fn gradient_layout_matches_parameters() {
        let m = init_mlp(3, &config(&[4, 2], true)).unwrap();
        let x = DMatrix::from_fn(5, 3, |r, c| (r + 2 * c) as f64 * 0.3 - 1.0);
        let (_, cache) = m.forward(&x, Mode::Train { dropout: None }).unwrap();
        let g = backward(&m, &cache, &[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let sizes = |v: Vec<&[f64]>| v.iter().map(|t| t.len()).collect::<Vec<_>>();
        assert_eq!(sizes(g.tensors()), sizes(m.tensors()));
    }
}
