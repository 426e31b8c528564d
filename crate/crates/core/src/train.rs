//! Adam training on squared error plus an optional Jacobian penalty.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::{forward, param_gradients, Gradients, Network, OUTPUT_DIM};
use crate::rng::{self, Domain};

/// Penalty weight used for Jacobian-regularized ("+J") models.
pub const JACOBIAN_LAMBDA: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub lambda: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            learning_rate: 1e-3,
            max_epochs: 100,
            patience: 10,
            lambda: 0.0,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config("Adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Bias-corrected Adam update of one parameter slice at step `t >= 1`.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &TrainConfig,
) -> Result<()> {
    assert!(t >= 1, "Adam steps are 1-based");
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), m.len());
    assert_eq!(params.len(), v.len());
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical {
            layer: 0,
            message: "non-finite gradient passed to Adam".into(),
        });
    }
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

/// First and second moment estimates for every parameter of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl AdamState {
    pub fn new(net: &Network) -> Self {
        AdamState {
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One Adam step over all layers.
pub fn adam_step(
    net: &mut Network,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    state.t += 1;
    let t = state.t;
    for (l, layer) in net.layers_mut().iter_mut().enumerate() {
        let (w, b) = layer.params_mut();
        let g = &grads.layers[l];
        let (m, v) = (&mut state.m.layers[l], &mut state.v.layers[l]);
        adam_update(w, &g.weights, &mut m.weights, &mut v.weights, t, cfg)
            .and_then(|_| adam_update(b, &g.bias, &mut m.bias, &mut v.bias, t, cfg))
            .map_err(|e| match e {
                Error::Numerical { message, .. } => Error::Numerical { layer: l, message },
                other => other,
            })?;
    }
    Ok(())
}

/// Mean squared Euclidean distance between predictions and targets.
pub fn evaluate_mse(net: &Network, inputs: &Matrix, targets: &Matrix) -> Result<f64> {
    if targets.shape() != (inputs.rows(), OUTPUT_DIM) {
        return Err(Error::Validation(format!(
            "targets are {}x{}, expected {}x{OUTPUT_DIM}",
            targets.rows(),
            targets.cols(),
            inputs.rows()
        )));
    }
    let pred = forward(net, inputs)?;
    Ok(squared_error(pred.values(), targets.values()) / inputs.rows() as f64)
}

fn squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Batch-size weighted mean of the training objective during the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Inputs and reference coordinates for training and validation.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train_x: &'a Matrix,
    pub train_y: &'a Matrix,
    pub val_x: &'a Matrix,
    pub val_y: &'a Matrix,
}

impl TrainData<'_> {
    fn validate(&self, input_dim: usize) -> Result<()> {
        for (name, x, y) in [
            ("train", self.train_x, self.train_y),
            ("validation", self.val_x, self.val_y),
        ] {
            if x.cols() != input_dim {
                return Err(Error::Dimension {
                    expected: input_dim,
                    actual: x.cols(),
                });
            }
            if y.shape() != (x.rows(), OUTPUT_DIM) {
                return Err(Error::Validation(format!(
                    "{name} targets are {}x{}, expected {}x{OUTPUT_DIM}",
                    y.rows(),
                    y.cols(),
                    x.rows()
                )));
            }
        }
        Ok(())
    }
}

fn gather(m: &Matrix, rows: &[usize]) -> Matrix {
    let mut v = Vec::with_capacity(rows.len() * m.cols());
    for &r in rows {
        v.extend_from_slice(m.row(r));
    }
    Matrix::from_raw(rows.len(), m.cols(), v)
}

/// Trains until validation MSE has not improved for `patience` epochs or
/// `max_epochs` is reached, and returns the best-validation weights.
///
/// Rows are reshuffled every epoch from a stream keyed by `(seed, epoch)`;
/// the last batch may be partial. Early stopping watches the pure MSE on
/// the validation rows, never the Jacobian penalty.
pub fn train(
    net: Network,
    data: TrainData<'_>,
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory)> {
    cfg.validate()?;
    data.validate(net.input_dim())?;

    let n = data.train_x.rows();
    let mut net = net;
    let mut state = AdamState::new(&net);
    let mut best_net = net.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 1..=cfg.max_epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::keyed(cfg.seed, Domain::Shuffle, &[epoch as u64]));

        let mut loss_sum = 0.0;
        for rows in order.chunks(cfg.batch_size) {
            let x = gather(data.train_x, rows);
            let y = gather(data.train_y, rows);
            let (grads, loss) = param_gradients(&net, &x, &y, cfg.lambda).map_err(|e| {
                Error::Training {
                    epoch,
                    message: e.to_string(),
                }
            })?;
            loss_sum += loss.total * rows.len() as f64;
            adam_step(&mut net, &grads, &mut state, cfg).map_err(|e| Error::Training {
                epoch,
                message: e.to_string(),
            })?;
        }
        let train_loss = loss_sum / n as f64;

        let val_loss = evaluate_mse(&net, data.val_x, data.val_y).map_err(|e| Error::Training {
            epoch,
            message: e.to_string(),
        })?;
        if !val_loss.is_finite() || !train_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("loss became non-finite (train {train_loss}, val {val_loss})"),
            });
        }

        let improved = val_loss < best_val;
        if improved {
            best_val = val_loss;
            best_epoch = epoch;
            best_net = net.clone();
            since_best = 0;
        } else {
            since_best += 1;
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            best: improved,
        });
        if since_best >= cfg.patience && !improved {
            break;
        }
    }

    let stopped_epoch = epochs.len();
    Ok((
        best_net,
        TrainHistory {
            epochs,
            stopped_epoch,
            best_epoch,
            best_val_loss: best_val,
        },
    ))
}
