use super::{Gradients, MlpModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update, in place. `t` is the 1-based step index.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    first: &mut [f64],
    second: &mut [f64],
    t: u64,
    hyper: &AdamHyper,
) -> Result<()> {
    let n = params.len();
    for (len, context) in [
        (grads.len(), "adam gradients"),
        (first.len(), "adam first moment"),
        (second.len(), "adam second moment"),
    ] {
        if len != n {
            return Err(Error::Dimension {
                expected: n,
                actual: len,
                context,
            });
        }
    }
    if t == 0 {
        return Err(Error::InvalidConfig("adam step index starts at 1".into()));
    }
    let c1 = 1.0 - hyper.beta1.powf(t as f64);
    let c2 = 1.0 - hyper.beta2.powf(t as f64);
    for i in 0..n {
        let g = grads[i];
        first[i] = hyper.beta1 * first[i] + (1.0 - hyper.beta1) * g;
        second[i] = hyper.beta2 * second[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = first[i] / c1;
        let v_hat = second[i] / c2;
        params[i] -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
    }
    Ok(())
}

/// Optimizer state for every tensor of one model.
#[derive(Debug, Clone)]
pub struct Adam {
    pub hyper: AdamHyper,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    pub fn new(model: &MlpModel, hyper: AdamHyper) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Adam {
            hyper,
            second: zeros.clone(),
            first: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        let grads = grads.tensors();
        if grads.len() != self.first.len() {
            return Err(Error::Dimension {
                expected: self.first.len(),
                actual: grads.len(),
                context: "gradient tensor count",
            });
        }
        self.t += 1;
        for (((param, grad), m), v) in model
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            adam_step(param, grad, m, v, self.t, &self.hyper)?;
        }
        Ok(())
    }
}
