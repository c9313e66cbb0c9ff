//! Dual-penalty update rules: scalar-multiplier TRPO-Lagrangian and the
//! statewise multiplier network of TRPO-FAC.

use super::trust_region::{trpo_step, UpdateData};
use super::{ConstraintConfig, TrustRegionConfig, UpdateReport};
use crate::policy::{GaussianPolicy, MultiplierNet};
use crate::Result;

/// TRPO-Lagrangian: the policy ascends the composite advantage
/// `(A - lambda * A_C) / (1 + lambda)` inside the usual trust region, then
/// the multiplier ascends the violation `J_C - d` and is projected back to
/// `lambda >= 0`.
pub fn lagrangian_step(
    policy: &GaussianPolicy,
    data: &UpdateData,
    lambda: f64,
    tr: &TrustRegionConfig,
    cc: &ConstraintConfig,
) -> Result<(GaussianPolicy, f64, UpdateReport)> {
    let scale = 1.0 / (1.0 + lambda);
    let composite = ndarray::Array1::from_shape_fn(data.len(), |i| {
        (data.reward_advantages[i] - lambda * data.cost_advantages[i]) * scale
    });
    let (next, mut report) = trpo_step(policy, data, &composite, tr)?;
    let next_lambda =
        (lambda + cc.lagrangian_lr * (data.constraint_value - cc.target_cost)).max(0.0);
    report.multiplier = next_lambda;
    Ok((next, next_lambda, report))
}

/// TRPO-FAC: per-state multipliers from a softplus network weight the cost
/// advantage, the policy moves under the statewise composite advantage, and
/// the multiplier net takes one ascent step on
/// `mean_s[lambda(s) * (cost-return-to-go(s) - d)]`.
pub fn fac_step(
    policy: &GaussianPolicy,
    data: &UpdateData,
    net: &mut MultiplierNet,
    tr: &TrustRegionConfig,
    cc: &ConstraintConfig,
) -> Result<(GaussianPolicy, UpdateReport)> {
    let multipliers = net.values(data.obs.view())?;
    let mean_lambda = multipliers.sum() / data.len() as f64;
    let scale = 1.0 / (1.0 + mean_lambda);
    let composite = ndarray::Array1::from_shape_fn(data.len(), |i| {
        (data.reward_advantages[i] - multipliers[i] * data.cost_advantages[i]) * scale
    });
    let (next, mut report) = trpo_step(policy, data, &composite, tr)?;

    let penalties = ndarray::Array1::from_shape_fn(data.len(), |i| {
        data.cost_returns[i] - cc.target_cost
    });
    net.ascend(data.obs.view(), penalties.view(), cc.fac_lr)?;
    let after = net.values(data.obs.view())?;
    report.multiplier = after.sum() / data.len() as f64;
    Ok((next, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algos::trust_region::testkit::*;
    use crate::numerics::RngStream;
    use crate::policy::HIDDEN_LAYERS;

    #[test]
    fn zero_multiplier_matches_plain_trpo() {
        let policy = tiny_policy(7);
        let data = synthetic_data(&policy, 48, 21, |i| (i % 3) as f64 * 0.1);
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default();
        let (lag_next, _, _) = lagrangian_step(&policy, &data, 0.0, &tr, &cc).unwrap();
        let (trpo_next, _) =
            trpo_step(&policy, &data, &data.reward_advantages.clone(), &tr).unwrap();
        for (a, b) in lag_next.flat().iter().zip(&trpo_next.flat()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_dual_when_on_target() {
        let policy = tiny_policy(8);
        let mut data = synthetic_data(&policy, 32, 22, |_| 0.0);
        data.constraint_value = 0.0; // equals the target
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default();
        let (_, lambda, _) = lagrangian_step(&policy, &data, 0.25, &tr, &cc).unwrap();
        assert_eq!(lambda, 0.25);
    }

    #[test]
    fn dual_ascent_arithmetic() {
        let policy = tiny_policy(9);
        let mut data = synthetic_data(&policy, 32, 23, |_| 0.0);
        data.constraint_value = 2.0;
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default(); // lr 0.005, d = 0
        let (_, lambda, report) = lagrangian_step(&policy, &data, 0.1, &tr, &cc).unwrap();
        assert!((lambda - 0.11).abs() < 1e-12);
        assert_eq!(report.multiplier, lambda);
    }

    #[test]
    fn lambda_stays_nonnegative_under_any_update_sequence() {
        let policy = tiny_policy(10);
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig {
            lagrangian_lr: 0.5,
            ..ConstraintConfig::default()
        };
        let mut lambda = 0.0;
        let mut rng = RngStream::new(5);
        for round in 0..30 {
            let mut data = synthetic_data(&policy, 16, 300 + round, |_| 0.0);
            data.constraint_value = rng.normal(); // violations of both signs
            let (_, next, _) = lagrangian_step(&policy, &data, lambda, &tr, &cc).unwrap();
            lambda = next;
            assert!(lambda >= 0.0, "lambda {lambda}");
        }
    }

    #[test]
    fn fac_multiplier_never_grows_on_violation_free_states() {
        let policy = tiny_policy(11);
        let mut rng = RngStream::new(6);
        let mut net = MultiplierNet::new(policy.obs_dim(), &HIDDEN_LAYERS, &mut rng);
        // Cost returns identically zero with target 0: the ascent signal is
        // nonpositive, so multipliers must not increase.
        let mut data = synthetic_data(&policy, 32, 24, |_| 0.0);
        data.cost_returns.fill(0.0);
        let before = net.values(data.obs.view()).unwrap();
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default();
        fac_step(&policy, &data, &mut net, &tr, &cc).unwrap();
        let after = net.values(data.obs.view()).unwrap();
        for (b, a) in before.iter().zip(after.iter()) {
            assert!(*a <= b + 1e-12);
        }
    }

    #[test]
    fn fac_with_vanishing_multiplier_output_matches_trpo_direction() {
        // Drive the pre-softplus head far negative so lambda(s) ~ 0; the
        // composite advantage then reduces to the TRPO one.
        let policy = tiny_policy(14);
        let mut rng = RngStream::new(15);
        let mut net = MultiplierNet::new(policy.obs_dim(), &HIDDEN_LAYERS, &mut rng);
        let params = net.net().param_count();
        let mut flat = net.net().flat();
        flat[params - 1] = -60.0; // output bias
        net.net_mut().set_from_flat(&flat).unwrap();
        let data = synthetic_data(&policy, 48, 26, |i| 0.2 * (i % 4) as f64);
        let lambdas = net.values(data.obs.view()).unwrap();
        assert!(lambdas.iter().all(|l| *l < 1e-20));

        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default();
        let (fac_next, _) = fac_step(&policy, &data, &mut net, &tr, &cc).unwrap();
        let (trpo_next, _) =
            trpo_step(&policy, &data, &data.reward_advantages.clone(), &tr).unwrap();
        let base = policy.flat();
        let da: Vec<f64> = fac_next.flat().iter().zip(&base).map(|(a, b)| a - b).collect();
        let db: Vec<f64> = trpo_next.flat().iter().zip(&base).map(|(a, b)| a - b).collect();
        let na = crate::numerics::norm2(&da);
        let nb = crate::numerics::norm2(&db);
        assert!(na > 0.0 && nb > 0.0);
        for (a, b) in da.iter().zip(&db) {
            assert!((a / na - b / nb).abs() < 1e-8);
        }
    }

    #[test]
    fn fac_with_zero_cost_advantages_matches_trpo_direction() {
        let policy = tiny_policy(12);
        let mut rng = RngStream::new(7);
        let mut net = MultiplierNet::new(policy.obs_dim(), &HIDDEN_LAYERS, &mut rng);
        let data = synthetic_data(&policy, 48, 25, |_| 0.0);
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default();
        let (fac_next, _) = fac_step(&policy, &data, &mut net, &tr, &cc).unwrap();
        let (trpo_next, _) =
            trpo_step(&policy, &data, &data.reward_advantages.clone(), &tr).unwrap();
        let base = policy.flat();
        let da: Vec<f64> = fac_next.flat().iter().zip(&base).map(|(a, b)| a - b).collect();
        let db: Vec<f64> = trpo_next.flat().iter().zip(&base).map(|(a, b)| a - b).collect();
        let na = crate::numerics::norm2(&da);
        let nb = crate::numerics::norm2(&db);
        assert!(na > 0.0 && nb > 0.0);
        for (a, b) in da.iter().zip(&db) {
            assert!((a / na - b / nb).abs() < 1e-8);
        }
    }
}
