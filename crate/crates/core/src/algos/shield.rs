//! Hierarchical safety machinery: the closed-form safety-layer projection
//! and the unrolled gradient correction, plus their model-fitting routines
//! and rollout-time shield adapters.

use ndarray::{Array1, Array2};

use crate::numerics::{dot, norm2};
use crate::policy::{CostGainModel, CostQNet, FitReport};
use crate::runtime::{ActionShield, Batch};
use crate::Result;

/// Closed-form single-constraint projection of a reference action:
/// `a_safe = a_ref - max(0, (g·a_ref + c_prev - d) / (g·g)) * g`, clipped to
/// the `[-1, 1]` action box. A (near-)zero gain vector passes the reference
/// through untouched.
pub fn safety_layer_project(a_ref: &[f64], gain: &[f64], c_prev: f64, d: f64) -> Vec<f64> {
    let gg = dot(gain, gain);
    if gg < 1e-12 {
        return a_ref.to_vec();
    }
    let violation = dot(gain, a_ref) + c_prev - d;
    let coeff = (violation / gg).max(0.0);
    a_ref
        .iter()
        .zip(gain)
        .map(|(a, g)| (a - coeff * g).clamp(-1.0, 1.0))
        .collect()
}

/// Anything that can score an action's cost and differentiate it.
pub trait CostCritic {
    fn cost_value(&self, obs: &[f64], action: &[f64]) -> Result<f64>;
    fn cost_action_grad(&self, obs: &[f64], action: &[f64]) -> Result<Vec<f64>>;
}

impl CostCritic for CostQNet {
    fn cost_value(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        self.value(obs, action)
    }

    fn cost_action_grad(&self, obs: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        self.action_gradient(obs, action)
    }
}

/// Unrolled safety-layer correction: gradient descent on the learned cost
/// critic, `a <- clip(a - (eta / Z) * dQ_C/da)` with `Z = ||dQ_C/da|| + 1e-8`,
/// stopping as soon as `Q_C(s, a) <= d` or after `iters` iterations.
pub fn usl_correct(
    a_ref: &[f64],
    obs: &[f64],
    critic: &impl CostCritic,
    d: f64,
    eta: f64,
    iters: usize,
) -> Result<Vec<f64>> {
    assert!(eta > 0.0 && iters >= 1, "usl correction parameters");
    let mut action = a_ref.to_vec();
    for _ in 0..iters {
        if critic.cost_value(obs, &action)? <= d {
            break;
        }
        let grad = critic.cost_action_grad(obs, &action)?;
        let z = norm2(&grad) + 1e-8;
        for (a, g) in action.iter_mut().zip(&grad) {
            *a = (*a - eta / z * g).clamp(-1.0, 1.0);
        }
    }
    Ok(action)
}

/// Least-squares fit of the linear cost model on one batch: for every step
/// the target is `c_next - c_prev` (with `c_prev = 0` at episode starts).
pub fn safety_layer_fit(
    model: &mut CostGainModel,
    batch: &Batch,
    iters: usize,
    lr: f64,
) -> Result<FitReport> {
    let n = batch.total_steps;
    let obs_dim = batch.trajectories[0].observations[0].len();
    let act_dim = batch.trajectories[0].actions[0].len();
    let mut obs = Array2::zeros((n, obs_dim));
    let mut actions = Array2::zeros((n, act_dim));
    let mut deltas = Array1::zeros(n);
    let mut row = 0;
    for t in &batch.trajectories {
        for i in 0..t.len() {
            for (j, v) in t.observations[i].iter().enumerate() {
                obs[[row, j]] = *v;
            }
            for (j, v) in t.actions[i].iter().enumerate() {
                actions[[row, j]] = *v;
            }
            let c_prev = if i == 0 { 0.0 } else { t.costs[i - 1] };
            deltas[row] = t.costs[i] - c_prev;
            row += 1;
        }
    }
    model.fit(obs.view(), actions.view(), deltas.view(), iters, lr)
}

/// Regression inputs `[s; a]` and discounted cost return-to-go targets for
/// the cost Q-net (bootstrapped with the cost critic on truncation).
pub fn qc_regression_targets(batch: &Batch, gamma: f64) -> Result<(Array2<f64>, Array1<f64>)> {
    let n = batch.total_steps;
    let obs_dim = batch.trajectories[0].observations[0].len();
    let act_dim = batch.trajectories[0].actions[0].len();
    let mut inputs = Array2::zeros((n, obs_dim + act_dim));
    let mut targets = Array1::zeros(n);
    let mut row = 0;
    for t in &batch.trajectories {
        let bootstrap = if t.done { 0.0 } else { t.bootstrap_cost_value };
        let mut running = bootstrap;
        let mut rtg = vec![0.0; t.len()];
        for i in (0..t.len()).rev() {
            running = t.costs[i] + gamma * running;
            rtg[i] = running;
        }
        for (i, target) in rtg.iter().enumerate() {
            for (j, v) in t.observations[i].iter().enumerate() {
                inputs[[row, j]] = *v;
            }
            for (j, v) in t.actions[i].iter().enumerate() {
                inputs[[row, obs_dim + j]] = *v;
            }
            targets[row] = *target;
            row += 1;
        }
    }
    Ok((inputs, targets))
}

/// Regression of `Q_C(s, a)` toward the batch's Monte-Carlo discounted
/// cost returns-to-go.
pub fn usl_fit_qc(
    qc: &mut CostQNet,
    batch: &Batch,
    gamma: f64,
    iters: usize,
    lr: f64,
) -> Result<FitReport> {
    let (inputs, targets) = qc_regression_targets(batch, gamma)?;
    qc.fit(inputs.view(), targets.view(), iters, lr)
}

/// Rollout-time shield for TRPO-SL.
pub struct SafetyLayerShield<'a> {
    pub model: &'a CostGainModel,
    pub target_cost: f64,
}

impl ActionShield for SafetyLayerShield<'_> {
    fn shield(&self, obs: &[f64], action: &[f64], prev_cost: f64) -> Result<Vec<f64>> {
        let (gain, _bias) = self.model.gain(obs)?;
        Ok(safety_layer_project(action, &gain, prev_cost, self.target_cost))
    }
}

/// Rollout-time shield for TRPO-USL.
pub struct UslShield<'a> {
    pub qc: &'a CostQNet,
    pub target_cost: f64,
    pub eta: f64,
    pub iters: usize,
}

impl ActionShield for UslShield<'_> {
    fn shield(&self, obs: &[f64], action: &[f64], _prev_cost: f64) -> Result<Vec<f64>> {
        usl_correct(action, obs, self.qc, self.target_cost, self.eta, self.iters)
    }
}
