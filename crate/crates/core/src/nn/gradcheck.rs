use nalgebra::DMatrix;
use rand::Rng;

use super::{backward, bce_loss, init_mlp, DropoutMasks, MlpConfig, MlpModel, Mode};
use crate::error::Result;
use crate::seed::stage_rng;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared on an absolute scale; below it the
/// difference quotient is dominated by rounding in the loss.
pub const RELATIVE_FLOOR: f64 = 1e-6;

const GRADCHECK_STAGE: &str = "gradcheck";

#[derive(Debug, Clone, PartialEq)]
pub struct GroupError {
    pub name: String,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub elements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub trials: usize,
    pub tolerance: f64,
    /// One entry per parameter tensor name, merged across trials.
    pub groups: Vec<GroupError>,
    pub configs: Vec<MlpConfig>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.groups.iter().map(|g| g.max_relative_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        !self.groups.is_empty() && self.groups.iter().all(|g| g.max_relative_error < self.tolerance)
    }

    fn merge(&mut self, trial: Vec<GroupError>) {
        for g in trial {
            match self.groups.iter_mut().find(|e| e.name == g.name) {
                Some(e) => {
                    e.max_relative_error = e.max_relative_error.max(g.max_relative_error);
                    e.max_absolute_error = e.max_absolute_error.max(g.max_absolute_error);
                    e.elements += g.elements;
                }
                None => self.groups.push(g),
            }
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn train_loss(model: &MlpModel, x: &DMatrix<f64>, y: &[f64], masks: Option<&DropoutMasks>) -> Result<f64> {
    let (p, _) = model.forward(x, Mode::Train { dropout: masks })?;
    bce_loss(p.as_slice(), y)
}

/// Compares every analytic gradient element of one model and batch against a
/// central difference of the train-mode loss.
fn check_one(
    model: &mut MlpModel,
    x: &DMatrix<f64>,
    y: &[f64],
    masks: Option<&DropoutMasks>,
) -> Result<Vec<GroupError>> {
    let (_, cache) = model.forward(x, Mode::Train { dropout: masks })?;
    let grads = backward(model, &cache, y)?;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let names = model.parameter_names();
    let mut out = Vec::with_capacity(names.len());
    for (t, name) in names.into_iter().enumerate() {
        let mut group = GroupError {
            name,
            max_relative_error: 0.0,
            max_absolute_error: 0.0,
            elements: analytic[t].len(),
        };
        for (k, &a) in analytic[t].iter().enumerate() {
            let original = model.tensors()[t][k];
            model.tensors_mut()[t][k] = original + FD_STEP;
            let plus = train_loss(model, x, y, masks)?;
            model.tensors_mut()[t][k] = original - FD_STEP;
            let minus = train_loss(model, x, y, masks)?;
            model.tensors_mut()[t][k] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            group.max_relative_error = group.max_relative_error.max(relative_error(a, numeric));
            group.max_absolute_error = group.max_absolute_error.max((a - numeric).abs());
        }
        out.push(group);
    }
    Ok(out)
}

/// Builds a randomized model and batch for `config`: parameters are jittered
/// away from their initial values so biases, γ and β are exercised.
/// Model, inputs, labels and a fixed dropout mask.
type Trial = (MlpModel, DMatrix<f64>, Vec<f64>, Option<DropoutMasks>);

fn trial_setup(config: &MlpConfig, input_dim: usize, batch: usize, trial: usize) -> Result<Trial> {
    let mut rng = stage_rng(config.seed, GRADCHECK_STAGE, &trial.to_string());
    let seeded = MlpConfig {
        seed: rng.gen(),
        ..config.clone()
    };
    let mut model = init_mlp(input_dim, &seeded)?;
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.gen_range(-0.2..0.2);
        }
    }
    let x = DMatrix::from_fn(batch, input_dim, |_, _| rng.gen_range(-2.0..2.0));
    // alternate labels so both classes appear
    let y: Vec<f64> = (0..batch).map(|i| (i % 2) as f64).collect();
    let masks = model.sample_dropout_masks(batch, &mut rng);
    Ok((model, x, y, masks))
}

/// Checks `config` on `trials` random models and batches.
pub fn gradient_check(config: &MlpConfig, trials: usize, tolerance: f64) -> Result<GradCheckReport> {
    config.validate()?;
    let mut report = GradCheckReport {
        trials,
        tolerance,
        groups: Vec::new(),
        configs: Vec::new(),
    };
    for trial in 0..trials {
        let (mut model, x, y, masks) = trial_setup(config, 5, 8, trial)?;
        report.merge(check_one(&mut model, &x, &y, masks.as_ref())?);
        report.configs.push(model.config.clone());
    }
    Ok(report)
}

/// Random architectures cycling through 1–3 hidden layers with batch norm on
/// and off; every fourth trial also injects a fixed dropout mask.
pub fn random_gradient_check(trials: usize, tolerance: f64, seed: u64) -> Result<GradCheckReport> {
    let mut report = GradCheckReport {
        trials,
        tolerance,
        groups: Vec::new(),
        configs: Vec::new(),
    };
    for trial in 0..trials {
        let mut rng = stage_rng(seed, GRADCHECK_STAGE, &format!("arch{trial}"));
        let layers = 1 + trial % 3;
        let config = MlpConfig {
            layer_widths: (0..layers).map(|_| rng.gen_range(2..=6)).collect(),
            use_batch_norm: (trial / 3) % 2 == 0,
            dropout_rate: if trial % 4 == 3 { 0.3 } else { 0.0 },
            batch_size: 8,
            seed: rng.gen(),
            ..MlpConfig::default()
        };
        let input_dim = rng.gen_range(2..=6);
        let batch = rng.gen_range(4..=10);
        let (mut model, x, y, masks) = trial_setup(&config, input_dim, batch, trial)?;
        report.merge(check_one(&mut model, &x, &y, masks.as_ref())?);
        report.configs.push(config);
    }
    Ok(report)
}
