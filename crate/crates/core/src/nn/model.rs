use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{sigmoid, MlpConfig};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

pub const BN_EPSILON: f64 = 1e-5;
/// Weight on the previous running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: DVector<f64>,
    pub beta: DVector<f64>,
    pub running_mean: DVector<f64>,
    /// Population (biased) batch variances, averaged.
    pub running_var: DVector<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        BatchNorm {
            gamma: DVector::from_element(width, 1.0),
            beta: DVector::zeros(width),
            running_mean: DVector::zeros(width),
            running_var: DVector::from_element(width, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    /// `fan_in × fan_out`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub norm: Option<BatchNorm>,
}

impl HiddenLayer {
    pub fn width(&self) -> usize {
        self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden: Vec<HiddenLayer>,
    pub output_weights: DVector<f64>,
    pub output_bias: f64,
    pub config: MlpConfig,
    /// Bumped on every parameter update so stale backward caches are detected.
    pub(crate) generation: u64,
}

/// Stage name for initialization seeds.
pub(crate) const INIT_STAGE: &str = "init";

/// He-style uniform initialization, `U(−√(6/fan_in), √(6/fan_in))`, with zero
/// biases and identity batch norm.
pub fn init_mlp(input_dim: usize, config: &MlpConfig) -> Result<MlpModel> {
    if input_dim == 0 {
        return Err(Error::InvalidConfig("input dimension must be at least 1".into()));
    }
    config.validate()?;
    let mut rng = rng_from_seed(derive_seed(config.seed, INIT_STAGE, ""));
    let mut uniform = |fan_in: usize, rows: usize, cols: usize| {
        let limit = (6.0 / fan_in as f64).sqrt();
        // filled row by row so the draw order matches the serialized layout
        let mut m = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = rng.gen_range(-limit..limit);
            }
        }
        m
    };
    let mut hidden = Vec::with_capacity(config.layer_widths.len());
    let mut fan_in = input_dim;
    for &width in &config.layer_widths {
        hidden.push(HiddenLayer {
            weights: uniform(fan_in, fan_in, width),
            bias: DVector::zeros(width),
            norm: config.use_batch_norm.then(|| BatchNorm::new(width)),
        });
        fan_in = width;
    }
    let output_weights = uniform(fan_in, fan_in, 1).column(0).into_owned();
    Ok(MlpModel {
        input_dim,
        hidden,
        output_weights,
        output_bias: 0.0,
        config: config.clone(),
        generation: 0,
    })
}

/// Inverted-dropout multipliers per hidden layer: each entry is 0 or `1/(1−p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks(pub Vec<DMatrix<f64>>);

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    /// Running batch-norm statistics, no dropout.
    Infer,
    /// Batch statistics; dropout applied only when masks are supplied.
    Train { dropout: Option<&'a DropoutMasks> },
}

#[derive(Debug, Clone)]
pub(crate) struct NormCache {
    pub normalized: DMatrix<f64>,
    pub inv_std: DVector<f64>,
    pub batch_mean: DVector<f64>,
    pub batch_var: DVector<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    /// Input to the layer (previous activation or the batch).
    pub input: DMatrix<f64>,
    /// Value fed to ReLU.
    pub pre_activation: DMatrix<f64>,
    pub norm: Option<NormCache>,
    pub mask: Option<DMatrix<f64>>,
}

/// Intermediate values of a forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) generation: u64,
    pub(crate) train: bool,
    pub(crate) layers: Vec<LayerCache>,
    pub(crate) last_activation: DMatrix<f64>,
    pub probabilities: DVector<f64>,
}

impl MlpModel {
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Parameter tensor names in declaration (and serialization) order.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, layer) in self.hidden.iter().enumerate() {
            names.push(format!("hidden{i}.weights"));
            names.push(format!("hidden{i}.bias"));
            if layer.norm.is_some() {
                names.push(format!("hidden{i}.gamma"));
                names.push(format!("hidden{i}.beta"));
            }
        }
        names.push("output.weights".into());
        names.push("output.bias".into());
        names
    }

    /// Trainable tensors in the order of [`parameter_names`](Self::parameter_names).
    /// Weight matrices are exposed in nalgebra's column-major storage order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.hidden {
            out.push(layer.weights.as_slice());
            out.push(layer.bias.as_slice());
            if let Some(bn) = &layer.norm {
                out.push(bn.gamma.as_slice());
                out.push(bn.beta.as_slice());
            }
        }
        out.push(self.output_weights.as_slice());
        out.push(std::slice::from_ref(&self.output_bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.hidden {
            out.push(layer.weights.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
            if let Some(bn) = &mut layer.norm {
                out.push(bn.gamma.as_mut_slice());
                out.push(bn.beta.as_mut_slice());
            }
        }
        out.push(self.output_weights.as_mut_slice());
        out.push(std::slice::from_mut(&mut self.output_bias));
        out
    }

    /// Fresh inverted-dropout masks for a batch, or `None` when dropout is off.
    pub fn sample_dropout_masks<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Option<DropoutMasks> {
        let p = self.config.dropout_rate;
        if p <= 0.0 {
            return None;
        }
        let keep = 1.0 / (1.0 - p);
        let masks = self
            .hidden
            .iter()
            .map(|layer| {
                let mut m = DMatrix::zeros(batch_size, layer.width());
                for r in 0..batch_size {
                    for c in 0..layer.width() {
                        m[(r, c)] = if rng.gen::<f64>() < p { 0.0 } else { keep };
                    }
                }
                m
            })
            .collect();
        Some(DropoutMasks(masks))
    }

    pub fn forward(&self, batch: &DMatrix<f64>, mode: Mode<'_>) -> Result<(DVector<f64>, ForwardCache)> {
        if batch.ncols() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                actual: batch.ncols(),
                context: "forward batch width",
            });
        }
        let n = batch.nrows();
        let (train, masks) = match mode {
            Mode::Infer => (false, None),
            Mode::Train { dropout } => (true, dropout),
        };
        if train && self.config.use_batch_norm && n < 2 {
            return Err(Error::TooSmall { actual: n, minimum: 2 });
        }
        if let Some(m) = masks {
            if m.0.len() != self.hidden.len() || m.0.iter().zip(&self.hidden).any(|(m, l)| m.shape() != (n, l.width()))
            {
                return Err(Error::InvalidConfig(
                    "dropout masks do not match batch and layer shapes".into(),
                ));
            }
        }

        let mut layers = Vec::with_capacity(self.hidden.len());
        let mut activation = batch.clone();
        for (index, layer) in self.hidden.iter().enumerate() {
            let mut z = &activation * &layer.weights;
            for (j, mut col) in z.column_iter_mut().enumerate() {
                col.add_scalar_mut(layer.bias[j]);
            }
            let (pre_activation, norm_cache) = match &layer.norm {
                None => (z, None),
                Some(bn) if train => {
                    let (y, cache) = normalize_batch(&z, bn);
                    (y, Some(cache))
                }
                Some(bn) => (normalize_running(&z, bn), None),
            };
            // NaN passes through so the training loop's divergence guard sees it
            let mut out = pre_activation.map(|v| if v < 0.0 { 0.0 } else { v });
            let mask = masks.map(|m| m.0[index].clone());
            if let Some(m) = &mask {
                out.component_mul_assign(m);
            }
            layers.push(LayerCache {
                input: std::mem::replace(&mut activation, out),
                pre_activation,
                norm: norm_cache,
                mask,
            });
        }
        let logits = &activation * &self.output_weights;
        let probabilities = logits.map(|z| sigmoid(z + self.output_bias));
        let cache = ForwardCache {
            generation: self.generation,
            train,
            layers,
            last_activation: activation,
            probabilities: probabilities.clone(),
        };
        Ok((probabilities, cache))
    }

    /// Inference-mode probabilities; never touches running statistics.
    pub fn predict(&self, batch: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.forward(batch, Mode::Infer).map(|(p, _)| p)
    }

    /// Folds the batch statistics of a train-mode pass into the running
    /// estimates: `running ← 0.9·running + 0.1·batch`.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        if !cache.train {
            return;
        }
        for (layer, lc) in self.hidden.iter_mut().zip(&cache.layers) {
            if let (Some(bn), Some(nc)) = (&mut layer.norm, &lc.norm) {
                bn.running_mean = &bn.running_mean * BN_MOMENTUM + &nc.batch_mean * (1.0 - BN_MOMENTUM);
                bn.running_var = &bn.running_var * BN_MOMENTUM + &nc.batch_var * (1.0 - BN_MOMENTUM);
            }
        }
    }
}

fn normalize_batch(z: &DMatrix<f64>, bn: &BatchNorm) -> (DMatrix<f64>, NormCache) {
    let n = z.nrows() as f64;
    let width = z.ncols();
    let mut normalized = z.clone();
    let mut batch_mean = DVector::zeros(width);
    let mut batch_var = DVector::zeros(width);
    let mut inv_std = DVector::zeros(width);
    for (j, mut col) in normalized.column_iter_mut().enumerate() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + BN_EPSILON).sqrt();
        col.apply(|v| *v = (*v - mean) * inv);
        batch_mean[j] = mean;
        batch_var[j] = var;
        inv_std[j] = inv;
    }
    let mut y = normalized.clone();
    for (j, mut col) in y.column_iter_mut().enumerate() {
        col.apply(|v| *v = *v * bn.gamma[j] + bn.beta[j]);
    }
    (
        y,
        NormCache {
            normalized,
            inv_std,
            batch_mean,
            batch_var,
        },
    )
}

fn normalize_running(z: &DMatrix<f64>, bn: &BatchNorm) -> DMatrix<f64> {
    let mut y = z.clone();
    for (j, mut col) in y.column_iter_mut().enumerate() {
        let inv = 1.0 / (bn.running_var[j] + BN_EPSILON).sqrt();
        let (mean, g, b) = (bn.running_mean[j], bn.gamma[j], bn.beta[j]);
        col.apply(|v| *v = (*v - mean) * inv * g + b);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(widths: &[usize], bn: bool) -> MlpConfig {
        MlpConfig {
            layer_widths: widths.to_vec(),
            use_batch_norm: bn,
            ..MlpConfig::default()
        }
    }

    #[test]
    fn default_shapes() {
        let m = init_mlp(825, &MlpConfig::default()).unwrap();
        assert_eq!(m.hidden[0].weights.shape(), (825, 300));
        assert_eq!(m.hidden[1].weights.shape(), (300, 100));
        assert_eq!(m.output_weights.len(), 100);
        let bn = m.hidden[0].norm.as_ref().unwrap();
        assert!(bn.gamma.iter().all(|&g| g == 1.0) && bn.beta.iter().all(|&b| b == 0.0));
        assert!(bn.running_var.iter().all(|&v| v == 1.0));
        assert!(m.hidden.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        let limit = (6.0f64 / 825.0).sqrt();
        assert!(m.hidden[0].weights.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_is_deterministic_and_validates() {
        let c = config(&[5, 3], true);
        assert_eq!(init_mlp(4, &c).unwrap(), init_mlp(4, &c).unwrap());
        let other = MlpConfig { seed: 1, ..c.clone() };
        assert_ne!(init_mlp(4, &c).unwrap(), init_mlp(4, &other).unwrap());
        assert!(init_mlp(4, &config(&[], false)).is_err());
        assert!(init_mlp(0, &c).is_err());
    }

    #[test]
    fn zero_model_outputs_half() {
        let mut m = init_mlp(3, &config(&[4], false)).unwrap();
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        let x = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 3.0, 0.5, 0.5, 9.0]);
        assert!(m.predict(&x).unwrap().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn batch_norm_standardizes_pre_activations() {
        let m = init_mlp(4, &config(&[6], true)).unwrap();
        // wide input spread keeps the ε shrinkage var/(var + ε) below 1e-6
        let x = DMatrix::from_fn(16, 4, |r, c| 10.0 * (((r * 7 + c * 3) % 11) as f64 - 5.0));
        let (_, cache) = m.forward(&x, Mode::Train { dropout: None }).unwrap();
        let nc = cache.layers[0].norm.as_ref().unwrap();
        for (j, col) in nc.normalized.column_iter().enumerate() {
            let mean = col.sum() / 16.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 16.0;
            let raw = nc.batch_var[j];
            assert!(mean.abs() < 1e-6);
            assert!((var - raw / (raw + BN_EPSILON)).abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-6, "{var}");
        }
    }

    #[test]
    fn hand_computed_single_unit() {
        // 2 inputs, one hidden unit without batch norm:
        // h = relu(0.5·x0 − 0.25·x1 + 0.1), p = σ(2h − 0.3)
        let mut m = init_mlp(2, &config(&[1], false)).unwrap();
        m.hidden[0].weights = DMatrix::from_row_slice(2, 1, &[0.5, -0.25]);
        m.hidden[0].bias[0] = 0.1;
        m.output_weights[0] = 2.0;
        m.output_bias = -0.3;
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.0]);
        let p = m.predict(&x).unwrap();
        // sample 0: h = 0.5 − 0.5 + 0.1 = 0.1, z = −0.1
        // sample 1: h = relu(−0.4) = 0, z = −0.3
        let expected = [1.0 / (1.0 + 0.1f64.exp()), 1.0 / (1.0 + 0.3f64.exp())];
        for (got, want) in p.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        let (train_p, _) = m.forward(&x, Mode::Train { dropout: None }).unwrap();
        assert_eq!(train_p, p);
    }

    #[test]
    fn forward_errors() {
        let m = init_mlp(3, &config(&[4], true)).unwrap();
        assert!(matches!(m.predict(&DMatrix::zeros(2, 2)), Err(Error::Dimension { .. })));
        assert!(matches!(
            m.forward(&DMatrix::zeros(1, 3), Mode::Train { dropout: None }),
            Err(Error::TooSmall { .. })
        ));
        assert!(m.predict(&DMatrix::zeros(1, 3)).is_ok());
    }

    #[test]
    fn infer_is_pure_and_running_stats_move_in_train() {
        let mut m = init_mlp(3, &config(&[4], true)).unwrap();
        let x = DMatrix::from_fn(8, 3, |r, c| (r as f64 - c as f64) * 0.7);
        let before = m.clone();
        let a = m.predict(&x).unwrap();
        assert_eq!(a, m.predict(&x).unwrap());
        assert_eq!(m, before);
        let (_, cache) = m.forward(&x, Mode::Train { dropout: None }).unwrap();
        m.update_running_stats(&cache);
        let bn = m.hidden[0].norm.as_ref().unwrap();
        let nc = cache.layers[0].norm.as_ref().unwrap();
        for j in 0..4 {
            assert!((bn.running_mean[j] - 0.1 * nc.batch_mean[j]).abs() < 1e-15);
            assert!((bn.running_var[j] - (0.9 + 0.1 * nc.batch_var[j])).abs() < 1e-15);
        }
    }

    #[test]
    fn dropout_masks_scale_kept_units() {
        let c = MlpConfig {
            dropout_rate: 0.5,
            ..config(&[50], false)
        };
        let m = init_mlp(2, &c).unwrap();
        let mut rng = rng_from_seed(1);
        let masks = m.sample_dropout_masks(20, &mut rng).unwrap();
        assert!(masks.0[0].iter().all(|&v| v == 0.0 || v == 2.0));
        let kept = masks.0[0].iter().filter(|&&v| v > 0.0).count();
        assert!((400..600).contains(&kept), "{kept}");
        assert!(init_mlp(2, &config(&[3], false))
            .unwrap()
            .sample_dropout_masks(4, &mut rng)
            .is_none());
    }
}
