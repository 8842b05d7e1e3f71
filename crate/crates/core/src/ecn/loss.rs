use ndarray::{Array2, Axis};

use super::mlp::{Layer, MlpParams};
use crate::num::Real;

/// Weights of the regularization and bilateral symmetry terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights<T> {
    pub w_reg: T,
    pub w_symm: T,
}

impl<T: Real> Default for LossWeights<T> {
    fn default() -> Self {
        Self {
            w_reg: T::of(0.01),
            w_symm: T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample<T> {
    pub s_e: Vec<T>,
    /// Normalized per-leg torques `[hipL, hipR, kneeL, kneeR]` in `[-1, 1]`.
    pub tau_d: [T; 4],
}

/// Batch means of the three loss terms, unweighted, and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms<T> {
    pub data: T,
    pub reg: T,
    pub symmetry: T,
    pub total: T,
}

/// Left/right output pairs.
const PAIRS: [(usize, usize); 2] = [(0, 1), (2, 3)];

pub fn loss_from_outputs<T: Real>(
    outputs: &[[T; 4]],
    targets: &[[T; 4]],
    w: &LossWeights<T>,
) -> LossTerms<T> {
    let mut data = T::zero();
    let mut reg = T::zero();
    let mut symmetry = T::zero();
    for (y, t) in outputs.iter().zip(targets) {
        for j in 0..4 {
            let e = t[j] - y[j];
            data += e * e;
            reg += y[j] * y[j];
        }
        for (l, r) in PAIRS {
            let d = y[l] - y[r];
            symmetry += d * d;
        }
    }
    let n = T::of(outputs.len().max(1) as f64);
    let (data, reg, symmetry) = (data / n, reg / n, symmetry / n);
    LossTerms {
        data,
        reg,
        symmetry,
        total: data + w.w_reg * reg + w.w_symm * symmetry,
    }
}

pub(crate) fn batch_matrix<T: Real>(batch: &[TrainingSample<T>], dim: usize) -> Array2<T> {
    let mut x = Array2::zeros((batch.len(), dim));
    for (mut row, s) in x.axis_iter_mut(Axis(0)).zip(batch) {
        for (dst, src) in row.iter_mut().zip(&s.s_e) {
            *dst = *src;
        }
    }
    x
}

fn rows4<T: Real>(y: &Array2<T>) -> Vec<[T; 4]> {
    y.axis_iter(Axis(0))
        .map(|r| [r[0], r[1], r[2], r[3]])
        .collect()
}

pub fn loss_terms<T: Real>(
    psi: &MlpParams<T>,
    batch: &[TrainingSample<T>],
    w: &LossWeights<T>,
) -> LossTerms<T> {
    let x = batch_matrix(batch, psi.input_dim());
    let y = psi.forward_batch(x.view());
    let targets: Vec<[T; 4]> = batch.iter().map(|s| s.tau_d).collect();
    loss_from_outputs(&rows4(&y), &targets, w)
}

/// Mean of data + weighted regularization + weighted symmetry over the batch.
pub fn loss<T: Real>(psi: &MlpParams<T>, batch: &[TrainingSample<T>], w: &LossWeights<T>) -> T {
    loss_terms(psi, batch, w).total
}

/// Mean squared tracking term alone.
pub fn data_term<T: Real>(psi: &MlpParams<T>, batch: &[TrainingSample<T>]) -> T {
    let w = LossWeights {
        w_reg: T::zero(),
        w_symm: T::zero(),
    };
    loss_terms(psi, batch, &w).data
}

/// Loss and its exact gradient by reverse-mode differentiation.
pub fn gradient<T: Real>(
    psi: &MlpParams<T>,
    batch: &[TrainingSample<T>],
    w: &LossWeights<T>,
) -> (T, MlpParams<T>) {
    let x = batch_matrix(batch, psi.input_dim());
    let targets: Vec<[T; 4]> = batch.iter().map(|s| s.tau_d).collect();
    gradient_on(psi, x, &targets, w)
}

pub(crate) fn gradient_on<T: Real>(
    psi: &MlpParams<T>,
    x: Array2<T>,
    targets: &[[T; 4]],
    w: &LossWeights<T>,
) -> (T, MlpParams<T>) {
    let trace = psi.forward_trace(x);
    let n_layers = psi.layers.len();
    let y = &trace.inputs[n_layers];
    let value = loss_from_outputs(&rows4(y), targets, w).total;

    let scale = T::of(2.0) / T::of(targets.len().max(1) as f64);
    let mut delta = Array2::zeros(y.dim());
    for (i, t) in targets.iter().enumerate() {
        let yi = [y[[i, 0]], y[[i, 1]], y[[i, 2]], y[[i, 3]]];
        let mut dy = [T::zero(); 4];
        for j in 0..4 {
            dy[j] = (yi[j] - t[j]) + w.w_reg * yi[j];
        }
        for (l, r) in PAIRS {
            let d = w.w_symm * (yi[l] - yi[r]);
            dy[l] += d;
            dy[r] -= d;
        }
        for j in 0..4 {
            // tanh' = 1 - y²
            delta[[i, j]] = scale * dy[j] * (T::one() - yi[j] * yi[j]);
        }
    }

    let mut grads: Vec<Layer<T>> = Vec::with_capacity(n_layers);
    for l in (0..n_layers).rev() {
        let input = &trace.inputs[l];
        let gw = delta.t().dot(input);
        let gb = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut back = delta.dot(&psi.layers[l].w);
            back.zip_mut_with(input, |d, h| {
                if *h <= T::zero() {
                    *d = T::zero();
                }
            });
            delta = back;
        }
        grads.push(Layer { w: gw, b: gb });
    }
    grads.reverse();
    (value, MlpParams { layers: grads })
}
