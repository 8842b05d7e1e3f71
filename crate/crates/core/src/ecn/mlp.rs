use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{invalid, Result};
use crate::num::Real;

/// Fully connected layer, `w` shaped (outputs, inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub w: Array2<T>,
    pub b: Array1<T>,
}

/// Rectified-linear hidden layers and a hyperbolic-tangent output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    pub layers: Vec<Layer<T>>,
}

/// Activations kept for backpropagation: `inputs[l]` enters layer `l`,
/// the last entry is the network output.
pub(crate) struct Trace<T> {
    pub inputs: Vec<Array2<T>>,
}

impl<T: Real> MlpParams<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        let layers = dims
            .windows(2)
            .map(|d| Layer {
                w: Array2::zeros((d[1], d[0])),
                b: Array1::zeros(d[1]),
            })
            .collect();
        Self { layers }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng>(dims: &[usize], rng: &mut R) -> Self {
        let mut p = Self::zeros(dims);
        for layer in &mut p.layers {
            let (rows, cols) = layer.w.dim();
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            layer
                .w
                .mapv_inplace(|_| T::of(rng.random_range(-limit..limit)));
        }
        p
    }

    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        let p = Self { layers };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(invalid("layers", "network has no layers"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.b.len() != l.w.nrows() {
                return Err(invalid(
                    "layers",
                    format!(
                        "layer {i}: bias length {} for {} rows",
                        l.b.len(),
                        l.w.nrows()
                    ),
                ));
            }
            if i > 0 && l.w.ncols() != self.layers[i - 1].w.nrows() {
                return Err(invalid(
                    "layers",
                    format!(
                        "layer {i}: {} inputs after {} outputs",
                        l.w.ncols(),
                        self.layers[i - 1].w.nrows()
                    ),
                ));
            }
            if !l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()) {
                return Err(invalid("layers", format!("layer {i}: non-finite entry")));
            }
        }
        Ok(())
    }

    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].w.ncols()];
        d.extend(self.layers.iter().map(|l| l.w.nrows()));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim() {
            return Err(invalid(
                "input",
                format!(
                    "length {} for a {}-input network",
                    x.len(),
                    self.input_dim()
                ),
            ));
        }
        let batch = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.forward_batch(batch).into_raw_vec_and_offset().0)
    }

    /// Row-per-sample forward pass.
    pub fn forward_batch(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = h.dot(&l.w.t());
            z += &l.b.view().insert_axis(Axis(0));
            if i == last {
                z.mapv_inplace(|v| v.tanh());
            } else {
                z.mapv_inplace(|v| v.max(T::zero()));
            }
            h = z;
        }
        h
    }

    pub(crate) fn forward_trace(&self, x: Array2<T>) -> Trace<T> {
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        inputs.push(x);
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = inputs[i].dot(&l.w.t());
            z += &l.b.view().insert_axis(Axis(0));
            if i == last {
                z.mapv_inplace(|v| v.tanh());
            } else {
                z.mapv_inplace(|v| v.max(T::zero()));
            }
            inputs.push(z);
        }
        Trace { inputs }
    }

    pub fn cast<U: Real>(&self) -> MlpParams<U> {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w: l.w.mapv(|v| U::of(v.f64())),
                    b: l.b.mapv(|v| U::of(v.f64())),
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }
}
