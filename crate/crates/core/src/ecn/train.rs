use ndarray::{Array2, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{data_term, gradient_on, loss, LossWeights, TrainingSample};
use super::mlp::MlpParams;
use crate::error::{invalid, Error, Result};
use crate::num::Real;

pub const MIN_DATASET: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without an improvement of at least `min_delta` before stopping.
    pub patience: usize,
    pub min_delta: f64,
    pub validation_fraction: f64,
    pub hidden: Vec<usize>,
    pub w_reg: f64,
    pub w_symm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 256,
            max_epochs: 500,
            patience: 10,
            min_delta: 1e-5,
            validation_fraction: 0.1,
            hidden: vec![64, 64, 64],
            w_reg: 0.01,
            w_symm: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_data: f64,
    pub best_val: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    /// Parameters at the best validation loss.
    pub params: MlpParams<T>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub validation_indices: Vec<usize>,
    pub stopped_early: bool,
}

struct Adam<T> {
    m: MlpParams<T>,
    v: MlpParams<T>,
    step: i32,
}

impl<T: Real> Adam<T> {
    fn new(dims: &[usize]) -> Self {
        Self {
            m: MlpParams::zeros(dims),
            v: MlpParams::zeros(dims),
            step: 0,
        }
    }

    fn update(&mut self, psi: &mut MlpParams<T>, g: &MlpParams<T>, cfg: &TrainConfig) {
        self.step += 1;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        let lr = T::of(cfg.learning_rate);
        let eps = T::of(cfg.epsilon);
        let apply = |p: &mut T, g: &T, m: &mut T, v: &mut T| {
            *m = b1 * *m + (T::one() - b1) * *g;
            *v = b2 * *v + (T::one() - b2) * *g * *g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((p, g), m), v) in psi
            .layers
            .iter_mut()
            .zip(&g.layers)
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
        {
            Zip::from(&mut p.w)
                .and(&g.w)
                .and(&mut m.w)
                .and(&mut v.w)
                .for_each(apply);
            Zip::from(&mut p.b)
                .and(&g.b)
                .and(&mut m.b)
                .and(&mut v.b)
                .for_each(apply);
        }
    }
}

/// Adam on minibatches with a seeded 90/10 split and early stopping on the
/// validation loss.
pub fn train<T: Real>(data: &[TrainingSample<T>], cfg: &TrainConfig) -> Result<TrainReport<T>> {
    train_with_progress(data, cfg, |_| {})
}

pub fn train_with_progress<T: Real>(
    data: &[TrainingSample<T>],
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<TrainReport<T>> {
    if data.len() < MIN_DATASET {
        return Err(invalid(
            "dataset",
            format!("{} samples, need at least {MIN_DATASET}", data.len()),
        ));
    }
    let input_dim = data[0].s_e.len();
    if input_dim == 0 || data.iter().any(|s| s.s_e.len() != input_dim) {
        return Err(invalid("dataset", "inconsistent input lengths"));
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(invalid(
            "train",
            "batch_size and max_epochs must be positive",
        ));
    }
    if !(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0) {
        return Err(invalid(
            "validation_fraction",
            format!("{} outside (0, 1)", cfg.validation_fraction),
        ));
    }
    let weights = LossWeights {
        w_reg: T::of(cfg.w_reg),
        w_symm: T::of(cfg.w_symm),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((data.len() as f64 * cfg.validation_fraction).round() as usize).max(1);
    let validation_indices = order[..n_val].to_vec();
    let mut train_idx = order[n_val..].to_vec();
    let val: Vec<TrainingSample<T>> = validation_indices
        .iter()
        .map(|&i| data[i].clone())
        .collect();

    let mut dims = vec![input_dim];
    dims.extend(&cfg.hidden);
    dims.push(4);
    let mut psi = MlpParams::glorot(&dims, &mut rng);
    let mut adam = Adam::new(&dims);

    let mut best = psi.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut history = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut sum = 0.0;
        for chunk in train_idx.chunks(cfg.batch_size) {
            let mut x = Array2::zeros((chunk.len(), input_dim));
            let mut targets = Vec::with_capacity(chunk.len());
            for (r, &i) in chunk.iter().enumerate() {
                x.row_mut(r)
                    .iter_mut()
                    .zip(&data[i].s_e)
                    .for_each(|(d, s)| *d = *s);
                targets.push(data[i].tau_d);
            }
            let (value, g) = gradient_on(&psi, x, &targets, &weights);
            if !value.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            sum += value.f64() * chunk.len() as f64;
            adam.update(&mut psi, &g, cfg);
        }
        if !psi.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        let val_loss = loss(&psi, &val, &weights).f64();
        if !val_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        if val_loss < best_val - cfg.min_delta {
            stale = 0;
        } else {
            stale += 1;
        }
        if val_loss < best_val {
            best_val = val_loss;
            best = psi.clone();
            best_epoch = epoch;
        }
        let stats = EpochStats {
            epoch,
            train_loss: sum / train_idx.len() as f64,
            val_loss,
            val_data: data_term(&psi, &val).f64(),
            best_val,
        };
        progress(&stats);
        history.push(stats);
        if stale >= cfg.patience {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainReport {
        params: best,
        history,
        best_epoch,
        validation_indices,
        stopped_early,
    })
}
