//! Critic heads built on the shared MLP: reward/cost value nets, the
//! statewise multiplier net, the cost Q-net, and the linear cost-gain model
//! for the safety layer. The multiplier and Q heads pass through softplus so
//! their outputs stay non-negative.
//!
//! All heads start with a zeroed output layer, so a fresh critic predicts
//! exactly zero (and a fresh multiplier predicts softplus(0) = ln 2)
//! everywhere. On a batch with identically zero costs this makes every
//! derived cost advantage exactly zero, which is what keeps the safe
//! algorithms' first update identical to plain TRPO in cost-free settings.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::mlp::{mse, Mlp};
use crate::numerics::RngStream;
use crate::{Error, Result};

/// Outcome of an iterative least-squares fit.
#[derive(Debug, Clone, Copy)]
pub struct FitReport {
    pub initial_mse: f64,
    pub final_mse: f64,
    /// Set when the final loss came out above the initial one.
    pub warning: bool,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Scalar critic (`V` or `V_C`).
#[derive(Debug, Clone)]
pub struct ValueNet {
    net: Mlp,
}

impl ValueNet {
    pub fn new(obs_dim: usize, hidden: &[usize], rng: &mut RngStream) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(obs_dim);
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut net = Mlp::new(&dims, rng);
        net.zero_output_layer();
        Self { net }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn predict_one(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.net.forward_one(obs)?[0])
    }

    pub fn predict_batch(&self, obs: ArrayView2<f64>) -> Result<Array1<f64>> {
        let cache = self.net.forward_batch(obs)?;
        Ok(cache.output().column(0).to_owned())
    }

    /// `iters` Adam steps on the mean squared error; the optimizer moments
    /// live in `state` and persist across calls.
    pub fn fit_adam(
        &mut self,
        obs: ArrayView2<f64>,
        targets: ArrayView1<f64>,
        iters: usize,
        lr: f64,
        state: &mut super::optim::AdamState,
    ) -> Result<FitReport> {
        if targets.len() != obs.nrows() {
            return Err(Error::DimensionMismatch {
                context: "ValueNet::fit_adam targets",
                expected: obs.nrows(),
                got: targets.len(),
            });
        }
        let n = obs.nrows() as f64;
        let mut initial_mse = None;
        for _ in 0..iters {
            let cache = self.net.forward_batch(obs)?;
            let pred = cache.output().column(0);
            let loss = mse(pred, targets);
            if !loss.is_finite() {
                return Err(Error::NonFinite("ValueNet::fit_adam loss"));
            }
            initial_mse.get_or_insert(loss);
            let d_out = Array2::from_shape_vec(
                (obs.nrows(), 1),
                pred.iter()
                    .zip(targets.iter())
                    .map(|(p, t)| 2.0 * (p - t) / n)
                    .collect(),
            )
            .unwrap();
            let (grad, _) = self.net.backward_params(&cache, d_out.view(), false);
            let update = state.step(&grad, lr)?;
            self.net.axpy_flat(1.0, &update)?;
        }
        let final_pred = self.predict_batch(obs)?;
        let final_mse = mse(final_pred.view(), targets);
        if !final_mse.is_finite() {
            return Err(Error::NonFinite("ValueNet::fit_adam final loss"));
        }
        let initial_mse = initial_mse.unwrap_or(final_mse);
        Ok(FitReport {
            initial_mse,
            final_mse,
            warning: final_mse > initial_mse,
        })
    }

    /// `iters` gradient-descent steps on the mean squared error with step
    /// size `lr`.
    pub fn fit(
        &mut self,
        obs: ArrayView2<f64>,
        targets: ArrayView1<f64>,
        iters: usize,
        lr: f64,
    ) -> Result<FitReport> {
        if targets.len() != obs.nrows() {
            return Err(Error::DimensionMismatch {
                context: "ValueNet::fit targets",
                expected: obs.nrows(),
                got: targets.len(),
            });
        }
        let n = obs.nrows() as f64;
        let mut initial_mse = None;
        for _ in 0..iters {
            let cache = self.net.forward_batch(obs)?;
            let pred = cache.output().column(0);
            let loss = mse(pred, targets);
            if !loss.is_finite() {
                return Err(Error::NonFinite("ValueNet::fit loss"));
            }
            initial_mse.get_or_insert(loss);
            let d_out = Array2::from_shape_vec(
                (obs.nrows(), 1),
                pred.iter()
                    .zip(targets.iter())
                    .map(|(p, t)| 2.0 * (p - t) / n)
                    .collect(),
            )
            .unwrap();
            let (grad, _) = self.net.backward_params(&cache, d_out.view(), false);
            self.net.axpy_flat(-lr, &grad)?;
        }
        let final_pred = self.predict_batch(obs)?;
        let final_mse = mse(final_pred.view(), targets);
        if !final_mse.is_finite() {
            return Err(Error::NonFinite("ValueNet::fit final loss"));
        }
        let initial_mse = initial_mse.unwrap_or(final_mse);
        Ok(FitReport {
            initial_mse,
            final_mse,
            warning: final_mse > initial_mse,
        })
    }
}

/// Statewise Lagrange multiplier network `lambda(s) = softplus(mlp(s))`.
#[derive(Debug, Clone)]
pub struct MultiplierNet {
    net: Mlp,
}

impl MultiplierNet {
    pub fn new(obs_dim: usize, hidden: &[usize], rng: &mut RngStream) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(obs_dim);
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut net = Mlp::new(&dims, rng);
        net.zero_output_layer();
        Self { net }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn value_one(&self, obs: &[f64]) -> Result<f64> {
        Ok(softplus(self.net.forward_one(obs)?[0]))
    }

    pub fn values(&self, obs: ArrayView2<f64>) -> Result<Array1<f64>> {
        let cache = self.net.forward_batch(obs)?;
        Ok(cache.output().column(0).mapv(softplus))
    }

    /// Objective `mean_s[lambda(s) * penalty(s)]` and its parameter
    /// gradient.
    pub fn penalty_objective_and_gradient(
        &self,
        obs: ArrayView2<f64>,
        penalties: ArrayView1<f64>,
    ) -> Result<(f64, Vec<f64>)> {
        if penalties.len() != obs.nrows() {
            return Err(Error::DimensionMismatch {
                context: "MultiplierNet penalties",
                expected: obs.nrows(),
                got: penalties.len(),
            });
        }
        let n = obs.nrows() as f64;
        let cache = self.net.forward_batch(obs)?;
        let z = cache.output().column(0);
        let objective = z
            .iter()
            .zip(penalties.iter())
            .map(|(zi, w)| softplus(*zi) * w)
            .sum::<f64>()
            / n;
        let d_out = Array2::from_shape_vec(
            (obs.nrows(), 1),
            z.iter()
                .zip(penalties.iter())
                .map(|(zi, w)| w * sigmoid(*zi) / n)
                .collect(),
        )
        .unwrap();
        let (grad, _) = self.net.backward_params(&cache, d_out.view(), false);
        Ok((objective, grad))
    }

    /// One gradient-ascent step on `mean_s[lambda(s) * penalty(s)]`.
    /// Returns the objective value before the step.
    pub fn ascend(
        &mut self,
        obs: ArrayView2<f64>,
        penalties: ArrayView1<f64>,
        lr: f64,
    ) -> Result<f64> {
        let (objective, grad) = self.penalty_objective_and_gradient(obs, penalties)?;
        self.net.axpy_flat(lr, &grad)?;
        Ok(objective)
    }
}

/// Non-negative cost action-value `Q_C(s, a) = softplus(mlp([s; a]))`.
#[derive(Debug, Clone)]
pub struct CostQNet {
    net: Mlp,
    obs_dim: usize,
    act_dim: usize,
}

impl CostQNet {
    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut RngStream) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(obs_dim + act_dim);
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut net = Mlp::new(&dims, rng);
        net.zero_output_layer();
        Self {
            net,
            obs_dim,
            act_dim,
        }
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    fn joined(&self, obs: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.obs_dim || action.len() != self.act_dim {
            return Err(Error::DimensionMismatch {
                context: "CostQNet input",
                expected: self.obs_dim + self.act_dim,
                got: obs.len() + action.len(),
            });
        }
        let mut x = Vec::with_capacity(self.obs_dim + self.act_dim);
        x.extend_from_slice(obs);
        x.extend_from_slice(action);
        Ok(x)
    }

    pub fn value(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        let x = self.joined(obs, action)?;
        Ok(softplus(self.net.forward_one(&x)?[0]))
    }

    /// Gradient of `Q_C(s, a)` with respect to the action.
    pub fn action_gradient(&self, obs: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        let x = self.joined(obs, action)?;
        let row = Array2::from_shape_vec((1, x.len()), x).unwrap();
        let cache = self.net.forward_batch(row.view())?;
        let z = cache.output()[[0, 0]];
        let d_out = Array2::from_elem((1, 1), sigmoid(z));
        let (_, input_grad) = self.net.backward_params(&cache, d_out.view(), true);
        let input_grad = input_grad.expect("input gradient requested");
        let grad: Vec<f64> = input_grad.row(0).iter().skip(self.obs_dim).copied().collect();
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("CostQNet action gradient"));
        }
        Ok(grad)
    }

    /// Regression of `Q_C(s, a)` toward the given targets; plain gradient
    /// descent on the MSE through the softplus head.
    pub fn fit(
        &mut self,
        inputs: ArrayView2<f64>,
        targets: ArrayView1<f64>,
        iters: usize,
        lr: f64,
    ) -> Result<FitReport> {
        if inputs.ncols() != self.obs_dim + self.act_dim {
            return Err(Error::DimensionMismatch {
                context: "CostQNet::fit inputs",
                expected: self.obs_dim + self.act_dim,
                got: inputs.ncols(),
            });
        }
        let n = inputs.nrows() as f64;
        let mut initial_mse = None;
        for _ in 0..iters {
            let cache = self.net.forward_batch(inputs)?;
            let z = cache.output().column(0);
            let q = z.mapv(softplus);
            let loss = mse(q.view(), targets);
            if !loss.is_finite() {
                return Err(Error::NonFinite("CostQNet::fit loss"));
            }
            initial_mse.get_or_insert(loss);
            let d_out = Array2::from_shape_vec(
                (inputs.nrows(), 1),
                z.iter()
                    .zip(q.iter())
                    .zip(targets.iter())
                    .map(|((zi, qi), t)| 2.0 * (qi - t) * sigmoid(*zi) / n)
                    .collect(),
            )
            .unwrap();
            let (grad, _) = self.net.backward_params(&cache, d_out.view(), false);
            self.net.axpy_flat(-lr, &grad)?;
        }
        let cache = self.net.forward_batch(inputs)?;
        let final_mse = mse(cache.output().column(0).mapv(softplus).view(), targets);
        let initial_mse = initial_mse.unwrap_or(final_mse);
        Ok(FitReport {
            initial_mse,
            final_mse,
            warning: final_mse > initial_mse,
        })
    }
}

/// Linear-in-action cost model for the safety layer: the network maps a
/// state to a per-action gain vector and a bias, predicting the one-step
/// cost change `c_next - c_prev ≈ gain(s)ᵀ a + bias(s)`.
#[derive(Debug, Clone)]
pub struct CostGainModel {
    net: Mlp,
    act_dim: usize,
}

impl CostGainModel {
    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut RngStream) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(obs_dim);
        dims.extend_from_slice(hidden);
        dims.push(act_dim + 1);
        let mut net = Mlp::new(&dims, rng);
        net.zero_output_layer();
        Self { net, act_dim }
    }

    /// Predicted gain vector and bias at a state.
    pub fn gain(&self, obs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let out = self.net.forward_one(obs)?;
        Ok((out[..self.act_dim].to_vec(), out[self.act_dim]))
    }

    pub fn predict_delta(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        let (gain, bias) = self.gain(obs)?;
        Ok(gain.iter().zip(action).map(|(g, a)| g * a).sum::<f64>() + bias)
    }

    /// Least-squares fit of `deltas ≈ gain(s)ᵀ a + bias(s)`.
    pub fn fit(
        &mut self,
        obs: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        deltas: ArrayView1<f64>,
        iters: usize,
        lr: f64,
    ) -> Result<FitReport> {
        let n_rows = obs.nrows();
        if actions.nrows() != n_rows || deltas.len() != n_rows {
            return Err(Error::DimensionMismatch {
                context: "CostGainModel::fit alignment",
                expected: n_rows,
                got: deltas.len(),
            });
        }
        let n = n_rows as f64;
        let mut initial_mse = None;
        for _ in 0..iters {
            let cache = self.net.forward_batch(obs)?;
            let out = cache.output();
            let mut d_out = Array2::zeros((n_rows, self.act_dim + 1));
            let mut loss = 0.0;
            for i in 0..n_rows {
                let mut pred = out[[i, self.act_dim]];
                for j in 0..self.act_dim {
                    pred += out[[i, j]] * actions[[i, j]];
                }
                let resid = pred - deltas[i];
                loss += resid * resid;
                let upstream = 2.0 * resid / n;
                for j in 0..self.act_dim {
                    d_out[[i, j]] = upstream * actions[[i, j]];
                }
                d_out[[i, self.act_dim]] = upstream;
            }
            loss /= n;
            if !loss.is_finite() {
                return Err(Error::NonFinite("CostGainModel::fit loss"));
            }
            initial_mse.get_or_insert(loss);
            let (grad, _) = self.net.backward_params(&cache, d_out.view(), false);
            self.net.axpy_flat(-lr, &grad)?;
        }
        let final_mse = self.eval_mse(obs, actions, deltas)?;
        let initial_mse = initial_mse.unwrap_or(final_mse);
        Ok(FitReport {
            initial_mse,
            final_mse,
            warning: final_mse > initial_mse,
        })
    }

    pub fn eval_mse(
        &self,
        obs: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        deltas: ArrayView1<f64>,
    ) -> Result<f64> {
        let cache = self.net.forward_batch(obs)?;
        let out = cache.output();
        let n = obs.nrows() as f64;
        let mut loss = 0.0;
        for i in 0..obs.nrows() {
            let mut pred = out[[i, self.act_dim]];
            for j in 0..self.act_dim {
                pred += out[[i, j]] * actions[[i, j]];
            }
            let resid = pred - deltas[i];
            loss += resid * resid;
        }
        Ok(loss / n)
    }
}
