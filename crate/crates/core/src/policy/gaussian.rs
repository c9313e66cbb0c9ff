//! Diagonal-Gaussian MLP policy and its trust-region derivatives.
//!
//! The action distribution is `N(mean_net(s), exp(log_std)^2)` with a
//! state-independent log-std vector. All derivatives needed by the policy
//! updates — surrogate gradient, KL gradient, and Fisher-vector products —
//! are computed in closed form from the batch caches.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::mlp::Mlp;
use crate::numerics::RngStream;
use crate::{Error, Result};

const LOG_TAU: f64 = 1.837_877_066_409_345_5; // ln(2*pi)

#[derive(Debug, Clone)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    pub log_std: Array1<f64>,
}

/// Per-state mean and std recorded at rollout time; the fixed side of the
/// trust-region KL.
#[derive(Debug, Clone)]
pub struct OldPolicyStats {
    pub means: Array2<f64>,
    pub stds: Array2<f64>,
}

impl OldPolicyStats {
    pub fn len(&self) -> usize {
        self.means.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.means.nrows() == 0
    }
}

impl GaussianPolicy {
    /// Initial log-std is `-0.5`, keeping early actions moderate inside the
    /// `[-1, 1]` action scale.
    pub const DEFAULT_INIT_LOG_STD: f64 = -0.5;

    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut RngStream) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(obs_dim);
        dims.extend_from_slice(hidden);
        dims.push(act_dim);
        Self {
            mean_net: Mlp::new(&dims, rng),
            log_std: Array1::from_elem(act_dim, Self::DEFAULT_INIT_LOG_STD),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.mean_net.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.mean_net.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.mean_net.param_count() + self.act_dim()
    }

    /// Flat parameter view: mean-net parameters followed by log-std.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.mean_net.flat();
        out.extend(self.log_std.iter());
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                context: "GaussianPolicy::set_from_flat",
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let split = self.mean_net.param_count();
        self.mean_net.set_from_flat(&flat[..split])?;
        for (dst, src) in self.log_std.iter_mut().zip(&flat[split..]) {
            *dst = *src;
        }
        Ok(())
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        let mut copy = self.clone();
        copy.set_from_flat(flat)?;
        Ok(copy)
    }

    pub fn std(&self) -> Array1<f64> {
        self.log_std.mapv(f64::exp)
    }

    /// Mean and std at a single observation.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mean = self.mean_net.forward_one(obs)?;
        let std = self.log_std.iter().map(|l| l.exp()).collect();
        Ok((mean, std))
    }

    /// Draw `a = mean + std .* z` and return its log-density.
    pub fn sample_action(&self, obs: &[f64], rng: &mut RngStream) -> Result<(Vec<f64>, f64)> {
        let (mean, std) = self.forward(obs)?;
        let mut action = Vec::with_capacity(mean.len());
        for (m, s) in mean.iter().zip(&std) {
            action.push(m + s * rng.normal());
        }
        let log_prob = log_prob_given(&mean, &std, &action);
        Ok((action, log_prob))
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.act_dim() {
            return Err(Error::DimensionMismatch {
                context: "GaussianPolicy::log_prob",
                expected: self.act_dim(),
                got: action.len(),
            });
        }
        let (mean, std) = self.forward(obs)?;
        Ok(log_prob_given(&mean, &std, action))
    }

    /// Record the per-state stats of this policy over an observation batch.
    pub fn stats_for(&self, obs: ArrayView2<f64>) -> Result<OldPolicyStats> {
        let cache = self.mean_net.forward_batch(obs)?;
        let means = cache.output().clone();
        let n = means.nrows();
        let std = self.std();
        let mut stds = Array2::zeros((n, self.act_dim()));
        for mut row in stds.rows_mut() {
            row.assign(&std);
        }
        Ok(OldPolicyStats { means, stds })
    }
}

fn log_prob_given(mean: &[f64], std: &[f64], action: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((m, s), a) in mean.iter().zip(std).zip(action) {
        let z = (a - m) / s;
        acc += -0.5 * z * z - s.ln();
    }
    acc - 0.5 * LOG_TAU * mean.len() as f64
}

/// Mean over states of the closed-form diagonal-Gaussian `KL(old || new)`.
pub fn mean_kl(
    old: &OldPolicyStats,
    policy: &GaussianPolicy,
    obs: ArrayView2<f64>,
) -> Result<f64> {
    if old.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let cache = policy.mean_net.forward_batch(obs)?;
    let means = cache.output();
    let std_new = policy.std();
    let n = means.nrows() as f64;
    let mut total = 0.0;
    for i in 0..means.nrows() {
        for j in 0..policy.act_dim() {
            let s1 = old.stds[[i, j]];
            let s2 = std_new[j];
            let dm = old.means[[i, j]] - means[[i, j]];
            total += (s2 / s1).ln() + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5;
        }
    }
    let kl = total / n;
    if !kl.is_finite() {
        return Err(Error::NonFinite("mean_kl"));
    }
    Ok(kl)
}

/// Mean KL together with its gradient with respect to the new policy's flat
/// parameters. Valid at any parameter point, not just the old one.
pub fn kl_and_gradient(
    old: &OldPolicyStats,
    policy: &GaussianPolicy,
    obs: ArrayView2<f64>,
) -> Result<(f64, Vec<f64>)> {
    if old.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let cache = policy.mean_net.forward_batch(obs)?;
    let means = cache.output();
    let n_rows = means.nrows();
    let n = n_rows as f64;
    let d = policy.act_dim();
    let std_new = policy.std();

    let mut total = 0.0;
    let mut d_mean = Array2::zeros((n_rows, d));
    let mut g_log_std = vec![0.0; d];
    for i in 0..n_rows {
        for j in 0..d {
            let s1 = old.stds[[i, j]];
            let s2 = std_new[j];
            let var2 = s2 * s2;
            let dm = means[[i, j]] - old.means[[i, j]];
            total += (s2 / s1).ln() + (s1 * s1 + dm * dm) / (2.0 * var2) - 0.5;
            d_mean[[i, j]] = dm / var2 / n;
            g_log_std[j] += (1.0 - (s1 * s1 + dm * dm) / var2) / n;
        }
    }
    let kl = total / n;
    if !kl.is_finite() {
        return Err(Error::NonFinite("kl_and_gradient"));
    }
    let (mut grad, _) = policy.mean_net.backward_params(&cache, d_mean.view(), false);
    grad.extend_from_slice(&g_log_std);
    Ok((kl, grad))
}

/// Product of the KL Hessian at the current parameters with `v`, plus
/// `damping * v`.
///
/// Assumes the policy equals the one that produced `old` (the trust-region
/// evaluation point), where the Gauss-Newton form below is the exact
/// Hessian: the mean block is `Jᵀ diag(1/std²) J` and the log-std block is
/// `2 I`, with vanishing cross terms.
pub fn fisher_vector_product(
    policy: &GaussianPolicy,
    obs: ArrayView2<f64>,
    v: &[f64],
    damping: f64,
) -> Result<Vec<f64>> {
    if v.len() != policy.param_count() {
        return Err(Error::DimensionMismatch {
            context: "fisher_vector_product",
            expected: policy.param_count(),
            got: v.len(),
        });
    }
    let mean_params = policy.mean_net.param_count();
    let cache = policy.mean_net.forward_batch(obs)?;
    let n = cache.batch_len() as f64;
    let std = policy.std();

    let mut tangent_out = policy.mean_net.jvp(&cache, &v[..mean_params])?;
    for mut row in tangent_out.rows_mut() {
        for (t, s) in row.iter_mut().zip(&std) {
            *t /= s * s * n;
        }
    }
    let (mut result, _) = policy.mean_net.backward_params(&cache, tangent_out.view(), false);
    result.extend(v[mean_params..].iter().map(|lv| 2.0 * lv));

    for (r, vi) in result.iter_mut().zip(v) {
        *r += damping * vi;
        if !r.is_finite() {
            return Err(Error::NonFinite("fisher_vector_product"));
        }
    }
    Ok(result)
}

/// Importance-ratio surrogate `mean(exp(logp - logp_old) * adv)` and its
/// gradient with respect to the policy's flat parameters.
pub fn surrogate_and_gradient(
    policy: &GaussianPolicy,
    obs: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    old_log_probs: ArrayView1<f64>,
    advantages: ArrayView1<f64>,
) -> Result<(f64, Vec<f64>)> {
    let (loss, grad) = surrogate_impl(policy, obs, actions, old_log_probs, advantages, true)?;
    Ok((loss, grad.expect("gradient requested")))
}

/// Surrogate value only; the cheap path used inside backtracking.
pub fn surrogate_value(
    policy: &GaussianPolicy,
    obs: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    old_log_probs: ArrayView1<f64>,
    advantages: ArrayView1<f64>,
) -> Result<f64> {
    let (loss, _) = surrogate_impl(policy, obs, actions, old_log_probs, advantages, false)?;
    Ok(loss)
}

fn surrogate_impl(
    policy: &GaussianPolicy,
    obs: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    old_log_probs: ArrayView1<f64>,
    advantages: ArrayView1<f64>,
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    let n_rows = obs.nrows();
    if actions.nrows() != n_rows
        || old_log_probs.len() != n_rows
        || advantages.len() != n_rows
    {
        return Err(Error::DimensionMismatch {
            context: "surrogate batch alignment",
            expected: n_rows,
            got: advantages.len(),
        });
    }
    if n_rows == 0 {
        return Err(Error::EmptyBatch);
    }

    let cache = policy.mean_net.forward_batch(obs)?;
    let means = cache.output();
    let d = policy.act_dim();
    let std = policy.std();
    let log_std_sum: f64 = policy.log_std.iter().sum();
    let n = n_rows as f64;

    let mut loss = 0.0;
    let mut d_mean = if want_grad {
        Some(Array2::zeros((n_rows, d)))
    } else {
        None
    };
    let mut g_log_std = vec![0.0; d];

    for i in 0..n_rows {
        let mut quad = 0.0;
        for j in 0..d {
            let z = (actions[[i, j]] - means[[i, j]]) / std[j];
            quad += z * z;
        }
        let logp = -0.5 * quad - log_std_sum - 0.5 * LOG_TAU * d as f64;
        let ratio = (logp - old_log_probs[i]).exp();
        if !ratio.is_finite() {
            return Err(Error::NonFinite("surrogate ratio"));
        }
        let coeff = ratio * advantages[i] / n;
        loss += ratio * advantages[i];
        if let Some(dm) = d_mean.as_mut() {
            for j in 0..d {
                let z = (actions[[i, j]] - means[[i, j]]) / std[j];
                dm[[i, j]] = coeff * z / std[j];
                g_log_std[j] += coeff * (z * z - 1.0);
            }
        }
    }
    loss /= n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("surrogate value"));
    }

    let grad = if let Some(dm) = d_mean {
        let (mut g, _) = policy.mean_net.backward_params(&cache, dm.view(), false);
        g.extend_from_slice(&g_log_std);
        Some(g)
    } else {
        None
    };
    Ok((loss, grad))
}
