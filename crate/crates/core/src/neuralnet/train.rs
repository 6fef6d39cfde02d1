use ndarray::{Array2, Axis, Zip};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{loss_mae, Gradients, Layer, Network};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub minibatch_size: usize,
    /// Epochs between validation checks.
    pub eval_every: usize,
    /// Consecutive checks without improvement before stopping.
    pub patience_checks: usize,
    pub early_stop_tolerance: f64,
    pub max_epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            minibatch_size: 100,
            eval_every: 200,
            patience_checks: 10,
            early_stop_tolerance: 1e-3,
            max_epochs: 50_000,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("early_stop_tolerance", self.early_stop_tolerance),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::field(name, "must be positive"));
            }
        }
        for (name, v) in [
            ("minibatch_size", self.minibatch_size),
            ("eval_every", self.eval_every),
            ("patience_checks", self.patience_checks),
            ("max_epochs", self.max_epochs),
        ] {
            if v == 0 {
                return Err(Error::field(name, "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::field("beta", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Adam moment estimates for one network.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    m: Vec<Layer>,
    v: Vec<Layer>,
}

impl Adam {
    pub fn new(net: &Network, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros: Vec<Layer> = net
            .layers
            .iter()
            .map(|l| Layer {
                w: Array2::zeros(l.w.raw_dim()),
                b: ndarray::Array1::zeros(l.b.len()),
            })
            .collect();
        Adam {
            lr,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn from_config(net: &Network, c: &TrainConfig) -> Self {
        Self::new(net, c.learning_rate, c.beta1, c.beta2, c.epsilon)
    }

    /// One bias-corrected update of `net` with gradients `g`.
    pub fn step(&mut self, net: &mut Network, g: &Gradients) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let lr = self.lr;
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, m), v), g) in net.layers.iter_mut().zip(&mut self.m).zip(&mut self.v).zip(&g.layers) {
            Zip::from(&mut layer.w)
                .and(&mut m.w)
                .and(&mut v.w)
                .and(&g.w)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.b)
                .and(&mut m.b)
                .and(&mut v.b)
                .and(&g.b)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub epoch: usize,
    /// Mean mini-batch loss of the epoch.
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub checks: Vec<Check>,
    pub epochs_run: usize,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_validation_loss: Option<f64>,
    pub early_stopped: bool,
    pub warnings: Vec<String>,
}

/// Trains `net` on scaled data with mini-batch Adam and MAE loss.
///
/// Validation loss is checked every `eval_every` epochs and at `max_epochs`.
/// Training stops after `patience_checks` consecutive checks that fail to
/// beat the best loss so far by more than the tolerance; the parameters of
/// the best check are restored. Without validation data early stopping is
/// disabled and the final parameters are kept.
pub fn train(
    net: &mut Network,
    x: &Array2<f64>,
    y: &Array2<f64>,
    x_val: &Array2<f64>,
    y_val: &Array2<f64>,
    config: &TrainConfig,
) -> Result<TrainingLog> {
    config.check()?;
    if x.nrows() == 0 {
        return Err(Error::Empty("training set".into()));
    }
    if x.nrows() != y.nrows() || x_val.nrows() != y_val.nrows() {
        return Err(Error::Shape("inputs and targets differ in row count".into()));
    }
    let mut log = TrainingLog::default();
    let validate = x_val.nrows() > 0;
    if !validate {
        let msg = "empty validation set: early stopping disabled".to_string();
        tracing::warn!("{msg}");
        log.warnings.push(msg);
    }

    let mut rng = seed::rng(config.seed, &[0x7472]);
    let mut adam = Adam::from_config(net, config);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut best: Option<(f64, Vec<Layer>)> = None;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for idx in order.chunks(config.minibatch_size) {
            let xb = x.select(Axis(0), idx);
            let yb = y.select(Axis(0), idx);
            let (loss, g) = net.backward(&xb, &yb)?;
            if !loss.is_finite() || !g.is_finite() {
                return Err(Error::NonFiniteGradient { epoch });
            }
            adam.step(net, &g);
            loss_sum += loss;
            batches += 1;
        }
        log.epochs_run = epoch;

        if epoch % config.eval_every != 0 && epoch != config.max_epochs {
            continue;
        }
        let train_loss = loss_sum / batches as f64;
        if !validate {
            log.checks.push(Check {
                epoch,
                train_loss,
                validation_loss: None,
            });
            continue;
        }
        let val = loss_mae(&net.forward(x_val)?, y_val);
        log.checks.push(Check {
            epoch,
            train_loss,
            validation_loss: Some(val),
        });
        let improved = match &best {
            None => true,
            Some((b, _)) => val < b - config.early_stop_tolerance,
        };
        if improved {
            best = Some((val, net.layers.clone()));
            log.best_epoch = epoch;
            log.best_validation_loss = Some(val);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience_checks {
                log.early_stopped = true;
                break;
            }
        }
    }

    match best {
        Some((_, layers)) => net.layers = layers,
        None => log.best_epoch = log.epochs_run,
    }
    Ok(log)
}
