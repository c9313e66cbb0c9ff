//! The shared trust-region backbone: natural-gradient direction via
//! conjugate gradient on Fisher-vector products, then backtracking line
//! search inside the KL ball.

use ndarray::{Array1, Array2};

use super::{TrustRegionConfig, UpdateReport};
use crate::numerics::{axpy, conjugate_gradient, dot, norm2, FnOperator};
use crate::policy::{
    fisher_vector_product, mean_kl, surrogate_and_gradient, surrogate_value, GaussianPolicy,
    OldPolicyStats,
};
use crate::runtime::{AdvantageEstimates, Batch};
use crate::{Error, Result};

/// Batch tensors shared by every update rule.
#[derive(Debug, Clone)]
pub struct UpdateData {
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub old_log_probs: Array1<f64>,
    pub old_stats: OldPolicyStats,
    pub reward_advantages: Array1<f64>,
    pub cost_advantages: Array1<f64>,
    pub cost_returns: Array1<f64>,
    /// Discounted constraint estimate `J_C` of the sampling policy.
    pub constraint_value: f64,
}

impl UpdateData {
    /// Flatten a batch into update tensors. The policy must be the one that
    /// collected the batch; its per-state stats become the fixed side of
    /// the trust-region KL.
    pub fn from_batch(
        batch: &Batch,
        estimates: &AdvantageEstimates,
        policy: &GaussianPolicy,
    ) -> Result<Self> {
        batch.validate()?;
        let n = batch.total_steps;
        let obs_dim = policy.obs_dim();
        let act_dim = policy.act_dim();
        if estimates.reward_advantages.len() != n {
            return Err(Error::DimensionMismatch {
                context: "UpdateData advantages",
                expected: n,
                got: estimates.reward_advantages.len(),
            });
        }

        let mut obs = Array2::zeros((n, obs_dim));
        let mut actions = Array2::zeros((n, act_dim));
        let mut old_log_probs = Array1::zeros(n);
        let mut row = 0;
        for t in &batch.trajectories {
            for i in 0..t.len() {
                for (j, v) in t.observations[i].iter().enumerate() {
                    obs[[row, j]] = *v;
                }
                for (j, v) in t.actions[i].iter().enumerate() {
                    actions[[row, j]] = *v;
                }
                old_log_probs[row] = t.log_probs[i];
                row += 1;
            }
        }

        let old_stats = policy.stats_for(obs.view())?;
        Ok(Self {
            obs,
            actions,
            old_log_probs,
            old_stats,
            reward_advantages: Array1::from_vec(estimates.reward_advantages.clone()),
            cost_advantages: Array1::from_vec(estimates.cost_advantages.clone()),
            cost_returns: Array1::from_vec(estimates.cost_returns.clone()),
            constraint_value: estimates.constraint_value,
        })
    }

    pub fn len(&self) -> usize {
        self.obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.nrows() == 0
    }
}

/// `H^{-1} v` via conjugate gradient on damped Fisher-vector products.
pub(crate) fn solve_fisher(
    policy: &GaussianPolicy,
    data: &UpdateData,
    rhs: &[f64],
    cfg: &TrustRegionConfig,
) -> Result<Vec<f64>> {
    let op = FnOperator::new(policy.param_count(), |v: &[f64]| {
        fisher_vector_product(policy, data.obs.view(), v, cfg.damping)
    });
    let solution = conjugate_gradient(&op, rhs, cfg.cg_iters, cfg.cg_residual_tol)?;
    Ok(solution.x)
}

pub(crate) fn apply_fisher(
    policy: &GaussianPolicy,
    data: &UpdateData,
    v: &[f64],
    cfg: &TrustRegionConfig,
) -> Result<Vec<f64>> {
    fisher_vector_product(policy, data.obs.view(), v, cfg.damping)
}

/// Scale a natural direction `x` to the trust-region boundary:
/// `sqrt(2 delta / xᵀHx) * x`. Returns nothing when the curvature is not
/// usable (zero or non-finite).
pub(crate) fn boundary_step(
    policy: &GaussianPolicy,
    data: &UpdateData,
    x: &[f64],
    cfg: &TrustRegionConfig,
) -> Result<Option<Vec<f64>>> {
    let hx = apply_fisher(policy, data, x, cfg)?;
    let xhx = dot(x, &hx);
    if !(xhx.is_finite() && xhx > 1e-16) {
        return Ok(None);
    }
    let beta = (2.0 * cfg.delta_kl / xhx).sqrt();
    Ok(Some(x.iter().map(|v| beta * v).collect()))
}

pub(crate) struct Candidate {
    pub policy: GaussianPolicy,
    pub exponent: u32,
    pub kl: f64,
}

/// Backtrack over exponents `j = 0..backtrack_steps` with factor
/// `coeff^j`, accepting the first candidate inside the KL ball for which
/// `extra_accept` holds. Non-finite evaluations backtrack further instead
/// of aborting.
pub(crate) fn backtrack(
    policy: &GaussianPolicy,
    data: &UpdateData,
    full_step: &[f64],
    cfg: &TrustRegionConfig,
    mut extra_accept: impl FnMut(&GaussianPolicy) -> Result<bool>,
) -> Result<Option<Candidate>> {
    let theta0 = policy.flat();
    for exponent in 0..cfg.backtrack_steps {
        let scale = cfg.backtrack_coeff.powi(exponent as i32);
        let mut theta = theta0.clone();
        axpy(scale, full_step, &mut theta);
        let candidate = policy.with_flat(&theta)?;
        let kl = match mean_kl(&data.old_stats, &candidate, data.obs.view()) {
            Ok(kl) => kl,
            Err(Error::NonFinite(_)) => continue,
            Err(e) => return Err(e),
        };
        if kl > cfg.delta_kl {
            continue;
        }
        match extra_accept(&candidate) {
            Ok(true) => {
                return Ok(Some(Candidate {
                    policy: candidate,
                    exponent,
                    kl,
                }))
            }
            Ok(false) => continue,
            Err(Error::NonFinite(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// One TRPO update on the given advantage vector: natural gradient scaled
/// to the KL boundary, then backtracking that requires strict surrogate
/// improvement inside the trust region. A failed search leaves the policy
/// unchanged and reports rejection.
pub fn trpo_step(
    policy: &GaussianPolicy,
    data: &UpdateData,
    advantages: &Array1<f64>,
    cfg: &TrustRegionConfig,
) -> Result<(GaussianPolicy, UpdateReport)> {
    let (surrogate_before, grad) = surrogate_and_gradient(
        policy,
        data.obs.view(),
        data.actions.view(),
        data.old_log_probs.view(),
        advantages.view(),
    )?;
    let mut report = UpdateReport::rejected(surrogate_before, data.constraint_value);

    if norm2(&grad) < 1e-12 {
        return Ok((policy.clone(), report));
    }
    let direction = solve_fisher(policy, data, &grad, cfg)?;
    let Some(full_step) = boundary_step(policy, data, &direction, cfg)? else {
        return Ok((policy.clone(), report));
    };

    let found = backtrack(policy, data, &full_step, cfg, |candidate| {
        let surrogate = surrogate_value(
            candidate,
            data.obs.view(),
            data.actions.view(),
            data.old_log_probs.view(),
            advantages.view(),
        )?;
        Ok(surrogate - surrogate_before > 0.0)
    })?;

    match found {
        Some(candidate) => {
            let surrogate_after = surrogate_value(
                &candidate.policy,
                data.obs.view(),
                data.actions.view(),
                data.old_log_probs.view(),
                advantages.view(),
            )?;
            report.kl_after = candidate.kl;
            report.surrogate_after = surrogate_after;
            report.accepted_exponent = Some(candidate.exponent);
            Ok((candidate.policy, report))
        }
        None => Ok((policy.clone(), report)),
    }
}


#[cfg(test)]
mod tests {
    use super::testkit::*;
    use super::*;

    #[test]
    fn zero_advantages_reject_without_moving() {
        let policy = tiny_policy(1);
        let mut data = synthetic_data(&policy, 32, 2, |_| 0.0);
        data.reward_advantages.fill(0.0);
        let (next, report) = trpo_step(
            &policy,
            &data,
            &data.reward_advantages.clone(),
            &TrustRegionConfig::default(),
        )
        .unwrap();
        assert!(!report.accepted());
        assert_eq!(next.flat(), policy.flat());
    }

    #[test]
    fn accepted_steps_stay_inside_the_kl_ball() {
        let cfg = TrustRegionConfig::default();
        let mut policy = tiny_policy(3);
        for round in 0..10 {
            let data = synthetic_data(&policy, 64, 100 + round, |_| 0.0);
            let (next, report) =
                trpo_step(&policy, &data, &data.reward_advantages.clone(), &cfg).unwrap();
            if report.accepted() {
                assert!(
                    report.kl_after <= cfg.delta_kl * (1.0 + 1e-4),
                    "kl {}",
                    report.kl_after
                );
                assert!(report.surrogate_after > report.surrogate_before);
            }
            policy = next;
        }
    }

    #[test]
    fn scalar_quadratic_full_step_matches_algebra() {
        // One-parameter check of the boundary scaling: with a single
        // log-std parameter the Fisher block is exactly 2 (+ damping), so
        // the full step is sqrt(2*delta/(g^2/(2+eps))) * g/(2+eps).
        let mut rng = crate::numerics::RngStream::new(9);
        let policy = GaussianPolicy::new(1, 1, &[], &mut rng);
        let data = synthetic_data(&policy, 16, 10, |_| 0.0);
        let cfg = TrustRegionConfig {
            damping: 0.0,
            cg_iters: 50,
            ..TrustRegionConfig::default()
        };
        // Build a gradient that lives only on the log-std coordinate.
        let mut g = vec![0.0; policy.param_count()];
        *g.last_mut().unwrap() = 0.7;
        let x = solve_fisher(&policy, &data, &g, &cfg).unwrap();
        let full = boundary_step(&policy, &data, &x, &cfg).unwrap().unwrap();
        // H^{-1} g has 0.7/2 in the last slot; xHx = 0.49/2.
        let expected_last = (2.0 * cfg.delta_kl / (0.49 / 2.0)).sqrt() * 0.35;
        let got = *full.last().unwrap();
        assert!(
            (got - expected_last).abs() < 1e-9,
            "got {got} expected {expected_last}"
        );
        for v in &full[..full.len() - 1] {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn backtracking_report_matches_schedule() {
        // The accepted exponent must correspond to scale coeff^j; probe by
        // forcing rejection of the first k candidates.
        let policy = tiny_policy(5);
        let data = synthetic_data(&policy, 48, 11, |_| 0.0);
        let cfg = TrustRegionConfig::default();
        let mut seen = Vec::new();
        let full = vec![0.01; policy.param_count()];
        let mut countdown = 3;
        let found = backtrack(&policy, &data, &full, &cfg, |_| {
            if countdown > 0 {
                countdown -= 1;
                Ok(false)
            } else {
                Ok(true)
            }
        })
        .unwrap()
        .unwrap();
        seen.push(found.exponent);
        assert_eq!(found.exponent, 3);
    }
}
