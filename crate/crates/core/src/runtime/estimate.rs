//! Return, advantage, and constraint-value estimation.

use super::batch::Batch;
use crate::{Error, Result};

/// `sum_t gamma^t r_t`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    assert!((0.0..1.0).contains(&gamma) || gamma == 0.0, "gamma in [0, 1)");
    rewards
        .iter()
        .rev()
        .fold(0.0, |acc, r| r + gamma * acc)
}

/// Generalized advantage estimation over one trajectory.
///
/// `values` must hold one prediction per step plus the bootstrap entry for
/// the state after the last step (zero for terminal episodes, the critic
/// value for truncated ones).
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    if values.len() != rewards.len() + 1 {
        return Err(Error::DimensionMismatch {
            context: "gae values",
            expected: rewards.len() + 1,
            got: values.len(),
        });
    }
    let mut advantages = vec![0.0; rewards.len()];
    let mut running = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        running = delta + gamma * lambda * running;
        advantages[t] = running;
    }
    Ok(advantages)
}

/// Discounted returns-to-go with a bootstrap tail value.
pub fn returns_to_go(rewards: &[f64], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut running = bootstrap;
    for t in (0..rewards.len()).rev() {
        running = rewards[t] + gamma * running;
        out[t] = running;
    }
    out
}

/// `(A - mean) / (std + 1e-8)` with the population std.
pub fn normalize(advantages: &[f64]) -> Vec<f64> {
    assert!(advantages.len() >= 2, "normalize needs at least 2 entries");
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    advantages.iter().map(|a| (a - mean) / (std + 1e-8)).collect()
}

/// Mean over episodes of the discounted cost sum; truncated episodes
/// bootstrap with the cost critic's value at the cut state.
pub fn estimate_constraint_value(batch: &Batch, gamma: f64) -> Result<f64> {
    if batch.trajectories.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for t in &batch.trajectories {
        let bootstrap = if t.done { 0.0 } else { t.bootstrap_cost_value };
        let discounted = discounted_return(&t.costs, gamma)
            + gamma.powi(t.len() as i32) * bootstrap;
        total += discounted;
    }
    Ok(total / batch.trajectories.len() as f64)
}

/// Advantages, returns-to-go, and the constraint estimate for a batch.
/// Reward advantages are normalized (when enabled); cost advantages are
/// left raw because their scale enters the constraint arithmetic.
#[derive(Debug, Clone)]
pub struct AdvantageEstimates {
    pub reward_advantages: Vec<f64>,
    pub cost_advantages: Vec<f64>,
    pub reward_returns: Vec<f64>,
    pub cost_returns: Vec<f64>,
    pub constraint_value: f64,
}

pub fn estimate_advantages(
    batch: &Batch,
    gamma: f64,
    lambda: f64,
    normalize_reward: bool,
) -> Result<AdvantageEstimates> {
    batch.validate()?;
    let mut reward_advantages = Vec::with_capacity(batch.total_steps);
    let mut cost_advantages = Vec::with_capacity(batch.total_steps);
    let mut reward_returns = Vec::with_capacity(batch.total_steps);
    let mut cost_returns = Vec::with_capacity(batch.total_steps);

    for t in &batch.trajectories {
        let (boot_v, boot_c) = if t.done {
            (0.0, 0.0)
        } else {
            (t.bootstrap_value, t.bootstrap_cost_value)
        };
        let mut values = t.value_preds.clone();
        values.push(boot_v);
        let mut cost_values = t.cost_value_preds.clone();
        cost_values.push(boot_c);

        reward_advantages.extend(gae(&t.rewards, &values, gamma, lambda)?);
        cost_advantages.extend(gae(&t.costs, &cost_values, gamma, lambda)?);
        reward_returns.extend(returns_to_go(&t.rewards, boot_v, gamma));
        cost_returns.extend(returns_to_go(&t.costs, boot_c, gamma));
    }

    if normalize_reward && reward_advantages.len() >= 2 {
        reward_advantages = normalize(&reward_advantages);
    }

    let constraint_value = estimate_constraint_value(batch, gamma)?;
    Ok(AdvantageEstimates {
        reward_advantages,
        cost_advantages,
        reward_returns,
        cost_returns,
        constraint_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::runtime::Trajectory;
    use proptest::prelude::*;

    fn traj(rewards: Vec<f64>, costs: Vec<f64>, done: bool) -> Trajectory {
        let n = rewards.len();
        Trajectory {
            observations: vec![vec![0.0]; n],
            actions: vec![vec![0.0]; n],
            log_probs: vec![0.0; n],
            value_preds: vec![0.0; n],
            cost_value_preds: vec![0.0; n],
            rewards,
            costs,
            done,
            bootstrap_value: 0.0,
            bootstrap_cost_value: 0.0,
        }
    }

    #[test]
    fn discounted_return_examples() {
        assert!((discounted_return(&[1.0, 1.0, 1.0], 0.5) - 1.75).abs() < 1e-15);
        assert_eq!(discounted_return(&[3.25], 0.9), 3.25);
        assert_eq!(discounted_return(&[0.0, 0.0, 0.0], 0.99), 0.0);
    }

    #[test]
    fn gae_lambda_zero_is_one_step_td() {
        let rewards = [1.0, 2.0, 3.0];
        let values = [0.5, 1.0, 1.5, 2.0];
        let adv = gae(&rewards, &values, 0.9, 0.0).unwrap();
        for t in 0..3 {
            let delta = rewards[t] + 0.9 * values[t + 1] - values[t];
            assert!((adv[t] - delta).abs() < 1e-15);
        }
    }

    #[test]
    fn gae_lambda_one_zero_values_is_return_to_go() {
        let rewards = [1.0, -2.0, 0.5, 4.0];
        let values = [0.0; 5];
        let gamma = 0.95;
        let adv = gae(&rewards, &values, gamma, 1.0).unwrap();
        let rtg = returns_to_go(&rewards, 0.0, gamma);
        for (a, r) in adv.iter().zip(&rtg) {
            assert!((a - r).abs() < 1e-12);
        }
    }

    #[test]
    fn gae_three_step_hand_recursion() {
        // Hand-unrolled: delta_t = r_t + g*V_{t+1} - V_t,
        // A_t = delta_t + (g*l) * A_{t+1}.
        let rewards = [1.0, 0.0, 2.0];
        let values = [0.3, 0.6, -0.2, 0.1];
        let (g, l) = (0.9, 0.8);
        let d2 = 2.0 + g * 0.1 - (-0.2);
        let d1 = 0.0 + g * (-0.2) - 0.6;
        let d0 = 1.0 + g * 0.6 - 0.3;
        let a2 = d2;
        let a1 = d1 + g * l * a2;
        let a0 = d0 + g * l * a1;
        let adv = gae(&rewards, &values, g, l).unwrap();
        assert!((adv[0] - a0).abs() < 1e-15);
        assert!((adv[1] - a1).abs() < 1e-15);
        assert!((adv[2] - a2).abs() < 1e-15);
    }

    #[test]
    fn gae_length_mismatch_is_error() {
        assert!(gae(&[1.0, 2.0], &[0.0, 0.0], 0.9, 0.95).is_err());
    }

    #[test]
    fn constraint_value_examples() {
        let batch = Batch {
            trajectories: vec![traj(vec![0.0; 3], vec![1.0, 0.0, 0.0], true)],
            epoch: 0,
            total_steps: 3,
        };
        assert!((estimate_constraint_value(&batch, 0.99).unwrap() - 1.0).abs() < 1e-15);

        let batch = Batch {
            trajectories: vec![
                traj(vec![0.0], vec![2.0], true),
                traj(vec![0.0], vec![4.0], true),
            ],
            epoch: 0,
            total_steps: 2,
        };
        assert!((estimate_constraint_value(&batch, 0.5).unwrap() - 3.0).abs() < 1e-15);

        let batch = Batch {
            trajectories: vec![traj(vec![0.0; 4], vec![0.0; 4], true)],
            epoch: 0,
            total_steps: 4,
        };
        assert_eq!(estimate_constraint_value(&batch, 0.99).unwrap(), 0.0);
    }

    #[test]
    fn constraint_value_is_order_invariant() {
        let a = traj(vec![0.0; 2], vec![1.0, 0.5], true);
        let b = traj(vec![0.0; 3], vec![0.0, 2.0, 0.25], true);
        let fwd = Batch {
            trajectories: vec![a.clone(), b.clone()],
            epoch: 0,
            total_steps: 5,
        };
        let rev = Batch {
            trajectories: vec![b, a],
            epoch: 0,
            total_steps: 5,
        };
        let x = estimate_constraint_value(&fwd, 0.9).unwrap();
        let y = estimate_constraint_value(&rev, 0.9).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn truncated_episode_bootstraps_cost_critic() {
        let mut t = traj(vec![0.0; 2], vec![1.0, 0.0], false);
        t.bootstrap_cost_value = 2.0;
        let batch = Batch {
            trajectories: vec![t],
            epoch: 0,
            total_steps: 2,
        };
        let gamma = 0.5;
        // 1 + 0 + gamma^2 * 2
        let expected = 1.0 + gamma * gamma * 2.0;
        assert!((estimate_constraint_value(&batch, gamma).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn normalize_examples() {
        let constant = normalize(&[3.0, 3.0, 3.0]);
        assert!(constant.iter().all(|v| v.abs() < 1e-7));

        let two = normalize(&[-1.0, 1.0]);
        assert!((two[0] + 1.0).abs() < 1e-7);
        assert!((two[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn normalized_moments() {
        let mut rng = RngStream::new(9);
        let raw: Vec<f64> = (0..500).map(|_| 3.0 * rng.normal() + 1.5).collect();
        let normed = normalize(&raw);
        let mean = normed.iter().sum::<f64>() / normed.len() as f64;
        let var = normed.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
            / normed.len() as f64;
        assert!(mean.abs() < 1e-10);
        assert!((var.sqrt() - 1.0).abs() < 1e-6);
    }

    proptest! {
        /// Undiscounted GAE with lambda = 1 and zero values equals the plain
        /// return-to-go computed by brute-force double summation.
        #[test]
        fn gae_monte_carlo_limit_matches_brute_force(
            seed in 0u64..300,
            len in 1usize..=20,
        ) {
            let mut rng = RngStream::new(seed);
            let rewards: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
            let values = vec![0.0; len + 1];
            let adv = gae(&rewards, &values, 1.0, 1.0).unwrap();
            for t in 0..len {
                let brute: f64 = rewards[t..].iter().sum();
                prop_assert!((adv[t] - brute).abs() < 1e-9);
            }
        }
    }
}
