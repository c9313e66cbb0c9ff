//! Rollout collection.

use super::batch::{Batch, Trajectory};
use crate::env::Env;
use crate::numerics::RngStream;
use crate::policy::{GaussianPolicy, ValueNet};
use crate::Result;

/// Action filter applied between the policy and the environment; used by
/// the hierarchical algorithms at evaluation time. `prev_cost` is the cost
/// incurred entering the current state (zero at episode start).
pub trait ActionShield {
    fn shield(&self, obs: &[f64], action: &[f64], prev_cost: f64) -> Result<Vec<f64>>;
}

/// Collect exactly `steps` environment steps of on-policy experience,
/// resetting (via `env_factory`, called with the episode index) whenever an
/// episode ends. Value and cost-value predictions are recorded at
/// collection time; a trajectory cut by the step budget stores critic
/// bootstrap values for its final state. When a shield is supplied the
/// executed action is the shielded one and the stored log-probability is
/// re-evaluated at it.
#[allow(clippy::too_many_arguments)]
pub fn collect_rollouts<F>(
    mut env_factory: F,
    policy: &GaussianPolicy,
    value_net: &ValueNet,
    cost_value_net: &ValueNet,
    steps: usize,
    epoch: u32,
    rng: &mut RngStream,
    shield: Option<&dyn ActionShield>,
) -> Result<Batch>
where
    F: FnMut(u64) -> Result<(Env, Vec<f64>)>,
{
    assert!(steps >= 1, "need at least one step");
    let mut trajectories = Vec::new();
    let mut episode_index = 0u64;
    let (mut env, mut obs) = env_factory(episode_index)?;
    let mut current = new_trajectory();
    let mut prev_cost = 0.0;

    for step in 0..steps {
        let (raw_action, mut log_prob) = policy.sample_action(&obs, rng)?;
        let action = match shield {
            Some(s) => {
                let shielded = s.shield(&obs, &raw_action, prev_cost)?;
                if shielded != raw_action {
                    log_prob = policy.log_prob(&obs, &shielded)?;
                }
                shielded
            }
            None => raw_action,
        };

        current.observations.push(obs.clone());
        current.value_preds.push(value_net.predict_one(&obs)?);
        current.cost_value_preds.push(cost_value_net.predict_one(&obs)?);
        current.actions.push(action.clone());
        current.log_probs.push(log_prob);

        let outcome = env.step(&action)?;
        current.rewards.push(outcome.reward);
        current.costs.push(outcome.cost);
        prev_cost = outcome.cost;
        obs = outcome.observation;

        if outcome.done {
            current.done = true;
            trajectories.push(std::mem::replace(&mut current, new_trajectory()));
            if step + 1 < steps {
                episode_index += 1;
                let fresh = env_factory(episode_index)?;
                env = fresh.0;
                obs = fresh.1;
                prev_cost = 0.0;
            }
        }
    }

    if !current.is_empty() {
        current.done = false;
        current.bootstrap_value = value_net.predict_one(&obs)?;
        current.bootstrap_cost_value = cost_value_net.predict_one(&obs)?;
        trajectories.push(current);
    }

    let batch = Batch {
        trajectories,
        epoch,
        total_steps: steps,
    };
    batch.validate()?;
    Ok(batch)
}

fn new_trajectory() -> Trajectory {
    Trajectory {
        observations: Vec::new(),
        actions: Vec::new(),
        rewards: Vec::new(),
        costs: Vec::new(),
        log_probs: Vec::new(),
        value_preds: Vec::new(),
        cost_value_preds: Vec::new(),
        done: false,
        bootstrap_value: 0.0,
        bootstrap_cost_value: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::WorldConfig;
    use crate::policy::HIDDEN_LAYERS;

    fn setup(max_steps: u32) -> (WorldConfig, GaussianPolicy, ValueNet, ValueNet) {
        let cfg = WorldConfig {
            max_episode_steps: max_steps,
            ..WorldConfig::default()
        };
        let obs_dim = crate::env::observation_dim(&cfg);
        let mut rng = RngStream::new(1);
        let policy = GaussianPolicy::new(obs_dim, cfg.action_dim(), &HIDDEN_LAYERS, &mut rng);
        let value = ValueNet::new(obs_dim, &[8], &mut rng);
        let cost_value = ValueNet::new(obs_dim, &[8], &mut rng);
        (cfg, policy, value, cost_value)
    }

    #[test]
    fn exact_episode_fit_yields_single_done_trajectory() {
        let (cfg, policy, value, cost_value) = setup(5);
        let mut rng = RngStream::new(2);
        let batch = collect_rollouts(
            |ep| Env::reset(&cfg, 100 + ep),
            &policy,
            &value,
            &cost_value,
            5,
            0,
            &mut rng,
            None,
        )
        .unwrap();
        assert_eq!(batch.trajectories.len(), 1);
        assert_eq!(batch.trajectories[0].len(), 5);
        assert!(batch.trajectories[0].done);
    }

    #[test]
    fn two_episodes_fill_the_budget_without_truncation() {
        let (cfg, policy, value, cost_value) = setup(5);
        let mut rng = RngStream::new(3);
        let batch = collect_rollouts(
            |ep| Env::reset(&cfg, 200 + ep),
            &policy,
            &value,
            &cost_value,
            10,
            0,
            &mut rng,
            None,
        )
        .unwrap();
        assert_eq!(batch.total_steps, 10);
        assert_eq!(batch.trajectories.len(), 2);
        assert!(batch.trajectories.iter().all(|t| t.done));
    }

    #[test]
    fn mid_episode_cut_is_flagged_truncated() {
        let (cfg, policy, value, cost_value) = setup(8);
        let mut rng = RngStream::new(4);
        let batch = collect_rollouts(
            |ep| Env::reset(&cfg, 300 + ep),
            &policy,
            &value,
            &cost_value,
            12,
            0,
            &mut rng,
            None,
        )
        .unwrap();
        assert_eq!(batch.trajectories.len(), 2);
        assert!(batch.trajectories[0].done);
        let tail = &batch.trajectories[1];
        assert!(!tail.done);
        assert_eq!(tail.len(), 4);
    }

    #[test]
    fn fixed_seed_reproduces_the_batch() {
        let (cfg, policy, value, cost_value) = setup(6);
        let run = || {
            let mut rng = RngStream::new(55);
            collect_rollouts(
                |ep| Env::reset(&cfg, 400 + ep),
                &policy,
                &value,
                &cost_value,
                14,
                0,
                &mut rng,
                None,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.trajectories.len(), b.trajectories.len());
        for (ta, tb) in a.trajectories.iter().zip(&b.trajectories) {
            assert_eq!(ta.rewards, tb.rewards);
            assert_eq!(ta.actions, tb.actions);
            assert_eq!(ta.log_probs, tb.log_probs);
        }
    }

    #[test]
    fn shield_hook_rewrites_actions_and_log_probs() {
        struct ZeroShield;
        impl ActionShield for ZeroShield {
            fn shield(&self, _obs: &[f64], action: &[f64], _prev: f64) -> Result<Vec<f64>> {
                Ok(vec![0.0; action.len()])
            }
        }
        let (cfg, policy, value, cost_value) = setup(6);
        let mut rng = RngStream::new(5);
        let batch = collect_rollouts(
            |ep| Env::reset(&cfg, 500 + ep),
            &policy,
            &value,
            &cost_value,
            6,
            0,
            &mut rng,
            Some(&ZeroShield),
        )
        .unwrap();
        let t = &batch.trajectories[0];
        for (obs, (a, lp)) in t
            .observations
            .iter()
            .zip(t.actions.iter().zip(&t.log_probs))
        {
            assert!(a.iter().all(|x| *x == 0.0));
            let expected = policy.log_prob(obs, a).unwrap();
            assert_eq!(lp.to_bits(), expected.to_bits());
        }
    }
}
