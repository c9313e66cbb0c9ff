//! On-policy data collection and estimation: rollouts, discounted returns,
//! GAE advantages for reward and cost, and the constraint-value estimate
//! that feeds every algorithm.

mod batch;
mod collect;
mod estimate;

pub use batch::{Batch, Trajectory};
pub use collect::{collect_rollouts, ActionShield};
pub use estimate::{
    discounted_return, estimate_advantages, estimate_constraint_value, gae, normalize,
    AdvantageEstimates,
};
