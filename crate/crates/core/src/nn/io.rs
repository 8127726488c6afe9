//! Model file layout, all integers `u64` and floats `f64`, little-endian:
//!
//! ```text
//! magic "DRIVENN-MLP"   version u32
//! input_dim  n_layers  width[0..n_layers]
//! use_batch_norm u8  dropout_rate  learning_rate  batch_size  epochs  seed
//! per hidden layer:
//!   weights  fan_in × fan_out values, row-major
//!   bias     fan_out
//!   if batch norm: gamma, beta, running_mean, running_var (fan_out each)
//! output weights (last width), output bias (1)
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::model::{BatchNorm, HiddenLayer};
use super::{MlpConfig, MlpModel};
use crate::binio::{ByteReader, ByteWriter};
use crate::error::Result;

pub const MODEL_MAGIC: &[u8] = b"DRIVENN-MLP";
pub const MODEL_VERSION: u32 = 1;

pub fn save_model(path: impl AsRef<Path>, model: &MlpModel) -> Result<()> {
    let c = &model.config;
    let mut w = ByteWriter::new(MODEL_MAGIC, MODEL_VERSION);
    w.usize(model.input_dim);
    w.usize(c.layer_widths.len());
    for &width in &c.layer_widths {
        w.usize(width);
    }
    w.u8(u8::from(c.use_batch_norm));
    w.f64(c.dropout_rate);
    w.f64(c.learning_rate);
    w.usize(c.batch_size);
    w.usize(c.epochs);
    w.u64(c.seed);
    for layer in &model.hidden {
        for r in 0..layer.weights.nrows() {
            for c in 0..layer.weights.ncols() {
                w.f64(layer.weights[(r, c)]);
            }
        }
        w.f64s(layer.bias.iter().copied());
        if let Some(bn) = &layer.norm {
            for v in [&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var] {
                w.f64s(v.iter().copied());
            }
        }
    }
    w.f64s(model.output_weights.iter().copied());
    w.f64(model.output_bias);
    w.write_to(path.as_ref())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let (mut r, version) = ByteReader::open(path.as_ref(), MODEL_MAGIC)?;
    if version != MODEL_VERSION {
        return Err(r.error(format!("unsupported model version {version}")));
    }
    let input_dim = r.len()?;
    let n_layers = r.len()?;
    let layer_widths = (0..n_layers).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
    let use_batch_norm = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(r.error(format!("invalid batch-norm flag {other}"))),
    };
    let config = MlpConfig {
        layer_widths,
        use_batch_norm,
        dropout_rate: r.f64()?,
        learning_rate: r.f64()?,
        batch_size: r.len()?,
        epochs: r.len()?,
        seed: r.u64()?,
    };
    config.validate().map_err(|e| r.error(e.to_string()))?;
    if input_dim == 0 {
        return Err(r.error("input dimension 0"));
    }
    let mut hidden = Vec::with_capacity(n_layers);
    let mut fan_in = input_dim;
    for &width in &config.layer_widths {
        let weights = DMatrix::from_row_slice(fan_in, width, &r.f64s(fan_in * width)?);
        let bias = DVector::from_vec(r.f64s(width)?);
        let norm = if use_batch_norm {
            let mut next = || r.f64s(width).map(DVector::from_vec);
            Some(BatchNorm {
                gamma: next()?,
                beta: next()?,
                running_mean: next()?,
                running_var: next()?,
            })
        } else {
            None
        };
        hidden.push(HiddenLayer { weights, bias, norm });
        fan_in = width;
    }
    let output_weights = DVector::from_vec(r.f64s(fan_in)?);
    let output_bias = r.f64()?;
    r.finish()?;
    Ok(MlpModel {
        input_dim,
        hidden,
        output_weights,
        output_bias,
        config,
        generation: 0,
    })
}
