use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static NEXT_MLP_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// Affine layer `y = act(x W + b)` with `W` of shape inputs x outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::InvalidArgument("layer shape must be at least 1x1".into()));
        }
        if bias.len() != weights.ncols() {
            return Err(Error::DimensionMismatch {
                context: "layer bias",
                expected: weights.ncols(),
                found: bias.len(),
            });
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("layer parameters must be finite".into()));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    /// He-style initialization: weights ~ N(0, gain/fan_in), zero bias.
    pub fn random(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let gain = if activation == Activation::Relu { 2.0 } else { 1.0 };
        let normal = Normal::new(0.0, (gain / inputs as f64).sqrt()).expect("positive std");
        let weights = DMatrix::from_fn(inputs, outputs, |_, _| normal.sample(rng));
        DenseLayer {
            weights,
            bias: DVector::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }
}

/// Gradients of one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Intermediate values of a forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct MlpCache {
    mlp_id: u64,
    version: u64,
    inputs: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
    outputs: DMatrix<f64>,
}

impl MlpCache {
    pub fn output(&self) -> &DMatrix<f64> {
        &self.outputs
    }
}

/// A stack of dense layers operating on row-major batches (one sample per
/// row). Every parameter mutation bumps a version counter so caches from
/// older forward passes are rejected.
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
    id: u64,
    version: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::DimensionMismatch {
                    context: "consecutive layers",
                    expected: pair[0].outputs(),
                    found: pair[1].inputs(),
                });
            }
        }
        Ok(Mlp {
            layers,
            id: NEXT_MLP_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        })
    }

    /// Randomly initialized MLP with the given widths; hidden layers use
    /// `hidden`, the last layer `output`.
    pub fn random(widths: &[usize], hidden: Activation, output: Activation, rng: &mut impl Rng) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArgument("need at least input and output widths".into()));
        }
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                DenseLayer::random(widths[i], widths[i + 1], act, rng)
            })
            .collect();
        Mlp::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access to the layers; invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.version += 1;
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Forward pass over a batch (rows are samples).
    pub fn forward(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, MlpCache)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "mlp input",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for layer in &self.layers {
            let mut z = &a * &layer.weights;
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            let next = z.map(|v| layer.activation.apply(v));
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let cache = MlpCache {
            mlp_id: self.id,
            version: self.version,
            inputs,
            pre,
            outputs: a.clone(),
        };
        Ok((a, cache))
    }

    /// Forward pass without keeping intermediates.
    pub fn infer(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "mlp input",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        let mut a = x.clone();
        for layer in &self.layers {
            let mut z = &a * &layer.weights;
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            z.apply(|v| *v = layer.activation.apply(*v));
            a = z;
        }
        Ok(a)
    }

    pub fn infer_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let out = self.infer(&DMatrix::from_row_slice(1, x.len(), x))?;
        Ok(out.iter().copied().collect())
    }

    /// Reverse-mode pass: parameter gradients and the gradient with respect
    /// to the batch input.
    pub fn backward(&self, cache: &MlpCache, upstream: &DMatrix<f64>) -> Result<(Vec<LayerGrads>, DMatrix<f64>)> {
        if cache.mlp_id != self.id || cache.version != self.version || cache.pre.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        if upstream.shape() != cache.outputs.shape() {
            return Err(Error::DimensionMismatch {
                context: "mlp upstream gradient",
                expected: cache.outputs.ncols(),
                found: upstream.ncols(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[i];
            let act = layer.activation;
            if act != Activation::Identity {
                let out: &DMatrix<f64> = if i + 1 == self.layers.len() {
                    &cache.outputs
                } else {
                    &cache.inputs[i + 1]
                };
                delta.zip_zip_apply(z, out, |d, zv, av| *d *= act.derivative(zv, av));
            }
            let gw = cache.inputs[i].tr_mul(&delta);
            let gb = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
            let next = &delta * layer.weights.transpose();
            grads.push(LayerGrads { weights: gw, bias: gb });
            delta = next;
        }
        grads.reverse();
        Ok((grads, delta))
    }
}

/// Horizontal concatenation of two batches with equal row counts.
pub(crate) fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = DenseLayer::new(DMatrix::identity(3, 3), DVector::zeros(3), Activation::Identity).unwrap();
        let mlp = Mlp::new(vec![layer]).unwrap();
        assert_eq!(mlp.infer_vec(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn relu_on_negative_preactivations_is_zero() {
        let layer = DenseLayer::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![-1.0, -1.0]),
            Activation::Relu,
        )
        .unwrap();
        let mlp = Mlp::new(vec![layer]).unwrap();
        assert_eq!(mlp.infer_vec(&[0.5, -3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn forward_matches_scalar_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mlp = Mlp::random(&[4, 6, 5, 3], Activation::Tanh, Activation::Sigmoid, &mut rng).unwrap();
        let x = [0.3, -1.2, 0.7, 2.0];
        let got = mlp.infer_vec(&x).unwrap();

        let mut a = x.to_vec();
        for layer in mlp.layers() {
            let mut next = vec![0.0; layer.outputs()];
            for (j, n) in next.iter_mut().enumerate() {
                let mut s = layer.bias[j];
                for (i, ai) in a.iter().enumerate() {
                    s += ai * layer.weights[(i, j)];
                }
                *n = layer.activation.apply(s);
            }
            a = next;
        }
        for (g, e) in got.iter().zip(&a) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_scalar_gradients() {
        let w = DMatrix::from_column_slice(3, 1, &[0.5, -1.0, 2.0]);
        let mlp = Mlp::new(vec![DenseLayer::new(
            w.clone(),
            DVector::zeros(1),
            Activation::Identity,
        )
        .unwrap()])
        .unwrap();
        let x = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let (_, cache) = mlp.forward(&x).unwrap();
        let (g, gx) = mlp.backward(&cache, &DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(g[0].weights.as_slice(), x.as_slice());
        assert_eq!(gx.as_slice(), w.as_slice());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mlp = Mlp::random(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 0.0]);
        let (_, cache) = mlp.forward(&x).unwrap();
        let (g, gx) = mlp.backward(&cache, &DMatrix::zeros(2, 2)).unwrap();
        assert!(g
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|&v| v == 0.0)));
        assert!(gx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut mlp = Mlp::random(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let other = Mlp::random(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let (_, cache) = mlp.forward(&x).unwrap();
        let up = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(other.backward(&cache, &up), Err(Error::StaleCache)));
        mlp.layers_mut()[0].bias[0] += 0.1;
        assert!(matches!(mlp.backward(&cache, &up), Err(Error::StaleCache)));
    }

    #[test]
    fn input_dimension_is_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = Mlp::random(&[2, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        assert!(matches!(
            mlp.infer_vec(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
