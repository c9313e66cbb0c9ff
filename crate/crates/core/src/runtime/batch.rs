//! Rollout storage.

use crate::{Error, Result};

/// One episode (or episode fragment) of experience. `done` records whether
/// the environment terminated the episode; a trajectory cut by the batch
/// boundary instead carries critic bootstrap values for its final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub costs: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub value_preds: Vec<f64>,
    pub cost_value_preds: Vec<f64>,
    pub done: bool,
    pub bootstrap_value: f64,
    pub bootstrap_cost_value: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let aligned = self.observations.len() == n
            && self.actions.len() == n
            && self.costs.len() == n
            && self.log_probs.len() == n
            && self.value_preds.len() == n
            && self.cost_value_preds.len() == n;
        if !aligned {
            return Err(Error::DimensionMismatch {
                context: "Trajectory arrays",
                expected: n,
                got: self.observations.len(),
            });
        }
        if !self.log_probs.iter().all(|lp| lp.is_finite()) {
            return Err(Error::NonFinite("Trajectory log_probs"));
        }
        Ok(())
    }
}

/// One epoch of rollouts totaling `total_steps` environment steps; the last
/// trajectory may be truncated mid-episode (flagged by `done == false`).
#[derive(Debug, Clone)]
pub struct Batch {
    pub trajectories: Vec<Trajectory>,
    pub epoch: u32,
    pub total_steps: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.total_steps
    }

    pub fn is_empty(&self) -> bool {
        self.total_steps == 0
    }

    /// Episode returns/costs of the completed episodes in this batch.
    pub fn completed_episode_totals(&self) -> Vec<(f64, f64)> {
        self.trajectories
            .iter()
            .filter(|t| t.done)
            .map(|t| (t.total_reward(), t.total_cost()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trajectories.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let steps: usize = self.trajectories.iter().map(Trajectory::len).sum();
        if steps != self.total_steps {
            return Err(Error::DimensionMismatch {
                context: "Batch step count",
                expected: self.total_steps,
                got: steps,
            });
        }
        for t in &self.trajectories {
            t.validate()?;
        }
        Ok(())
    }
}
