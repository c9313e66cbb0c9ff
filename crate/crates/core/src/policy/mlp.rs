//! Feed-forward MLP with explicit layer-by-layer gradients.
//!
//! The architecture is `in -> hidden... -> out` with tanh on hidden layers
//! and a linear output. Besides the usual forward/backward passes the type
//! exposes a forward-mode directional derivative (`jvp`), which together
//! with `backward_params` gives the Gauss-Newton products the trust-region
//! code needs without any taped autodiff.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Mlp {
    // weights[l]: (out, in) row-major; biases[l]: (out,)
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    dims: Vec<usize>,
}

/// Activations from a batch forward pass. `acts[0]` is the input,
/// `acts[l + 1]` the post-activation output of layer `l`.
#[derive(Debug)]
pub struct MlpCache {
    acts: Vec<Array2<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("cache has at least the input")
    }

    pub fn batch_len(&self) -> usize {
        self.acts[0].nrows()
    }
}

impl Mlp {
    /// Build with weights uniform in `±1/sqrt(fan_in)` and zero biases.
    pub fn new(dims: &[usize], rng: &mut RngStream) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        assert!(dims.iter().all(|&d| d > 0), "layer dims must be positive");
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.uniform_range(-bound, bound))
                .collect();
            weights.push(Array2::from_shape_vec((fan_out, fan_in), data).unwrap());
            biases.push(Array1::zeros(fan_out));
        }
        Self {
            weights,
            biases,
            dims: dims.to_vec(),
        }
    }

    /// Zero the final layer so the initial output is identically zero.
    /// Critics use this so that a freshly built net predicts 0 everywhere.
    pub fn zero_output_layer(&mut self) {
        self.weights.last_mut().unwrap().fill(0.0);
        self.biases.last_mut().unwrap().fill(0.0);
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn param_count(&self) -> usize {
        self.dims
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Flat view: per layer, weights row-major then biases.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice().unwrap());
            out.extend_from_slice(b.as_slice().unwrap());
        }
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                context: "Mlp::set_from_flat",
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let wn = w.len();
            w.as_slice_mut()
                .unwrap()
                .copy_from_slice(&flat[offset..offset + wn]);
            offset += wn;
            let bn = b.len();
            b.as_slice_mut()
                .unwrap()
                .copy_from_slice(&flat[offset..offset + bn]);
            offset += bn;
        }
        Ok(())
    }

    /// In-place `params += alpha * flat`.
    pub fn axpy_flat(&mut self, alpha: f64, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                context: "Mlp::axpy_flat",
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            for v in w.as_slice_mut().unwrap() {
                *v += alpha * flat[offset];
                offset += 1;
            }
            for v in b.as_slice_mut().unwrap() {
                *v += alpha * flat[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    /// Split a flat tangent into per-layer weight/bias arrays.
    #[allow(clippy::type_complexity)]
    fn split_flat(&self, flat: &[f64]) -> Result<(Vec<Array2<f64>>, Vec<Array1<f64>>)> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                context: "Mlp::split_flat",
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut ws = Vec::with_capacity(self.layer_count());
        let mut bs = Vec::with_capacity(self.layer_count());
        let mut offset = 0;
        for w in self.dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let wn = fan_in * fan_out;
            ws.push(
                Array2::from_shape_vec((fan_out, fan_in), flat[offset..offset + wn].to_vec())
                    .unwrap(),
            );
            offset += wn;
            bs.push(Array1::from_vec(flat[offset..offset + fan_out].to_vec()));
            offset += fan_out;
        }
        Ok((ws, bs))
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<MlpCache> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "Mlp::forward_batch",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let last = self.layer_count() - 1;
        let mut acts = Vec::with_capacity(self.layer_count() + 1);
        acts.push(x.to_owned());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts.last().unwrap().dot(&w.t());
            z += b;
            acts.push(if l < last { z.mapv(f64::tanh) } else { z });
        }
        Ok(MlpCache { acts })
    }

    /// Single-sample forward pass without the ndarray plumbing; used on the
    /// rollout hot path.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "Mlp::forward_one",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let last = self.layer_count() - 1;
        let mut cur = x.to_vec();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let rows = w.nrows();
            let cols = w.ncols();
            let wd = w.as_slice().unwrap();
            let mut next = b.to_vec();
            for i in 0..rows {
                let row = &wd[i * cols..(i + 1) * cols];
                let mut acc = 0.0;
                for (rv, xv) in row.iter().zip(&cur) {
                    acc += rv * xv;
                }
                next[i] += acc;
            }
            if l < last {
                for v in &mut next {
                    *v = v.tanh();
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Backpropagate `d_out` (the gradient of a scalar with respect to the
    /// network output, one row per sample, summed over the batch) to a flat
    /// parameter gradient. Returns the input gradient too when asked.
    pub fn backward_params(
        &self,
        cache: &MlpCache,
        d_out: ArrayView2<f64>,
        want_input_grad: bool,
    ) -> (Vec<f64>, Option<Array2<f64>>) {
        let layers = self.layer_count();
        assert_eq!(d_out.ncols(), self.output_dim(), "upstream gradient shape");
        assert_eq!(d_out.nrows(), cache.batch_len(), "upstream gradient rows");

        let mut grads_w: Vec<Array2<f64>> = Vec::with_capacity(layers);
        let mut grads_b: Vec<Array1<f64>> = Vec::with_capacity(layers);
        grads_w.resize_with(layers, || Array2::zeros((0, 0)));
        grads_b.resize_with(layers, || Array1::zeros(0));

        let mut delta = d_out.to_owned();
        let mut input_grad = None;
        for l in (0..layers).rev() {
            if l < layers - 1 {
                // Output of layer l went through tanh.
                let a = &cache.acts[l + 1];
                delta.zip_mut_with(a, |d, &a| *d *= 1.0 - a * a);
            }
            grads_w[l] = delta.t().dot(&cache.acts[l]);
            grads_b[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                delta = delta.dot(&self.weights[l]);
            } else if want_input_grad {
                input_grad = Some(delta.dot(&self.weights[0]));
            }
        }

        let mut flat = Vec::with_capacity(self.param_count());
        for (w, b) in grads_w.iter().zip(&grads_b) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        (flat, input_grad)
    }

    /// Forward-mode directional derivative of the batch outputs along a flat
    /// parameter tangent (inputs held fixed).
    pub fn jvp(&self, cache: &MlpCache, tangent: &[f64]) -> Result<Array2<f64>> {
        let (tw, tb) = self.split_flat(tangent)?;
        let layers = self.layer_count();
        let n = cache.batch_len();
        let mut t = Array2::zeros((n, self.input_dim()));
        for l in 0..layers {
            let mut tz = cache.acts[l].dot(&tw[l].t()) + t.dot(&self.weights[l].t());
            tz += &tb[l];
            if l < layers - 1 {
                let a = &cache.acts[l + 1];
                tz.zip_mut_with(a, |d, &a| *d *= 1.0 - a * a);
            }
            t = tz;
        }
        Ok(t)
    }
}

/// Mean squared error and its batch gradient helper.
pub fn mse(pred: ArrayView1<f64>, target: ArrayView1<f64>) -> f64 {
    let n = pred.len() as f64;
    pred.iter()
        .zip(target.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n
}
