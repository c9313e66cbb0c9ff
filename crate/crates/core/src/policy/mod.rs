//! MLP function approximators with hand-rolled reverse-mode gradients:
//! the Gaussian policy, reward/cost critics, multiplier and cost-Q heads,
//! and the KL / Fisher-vector-product machinery for trust-region updates.

mod checkpoint;
mod gaussian;
mod heads;
mod mlp;
mod optim;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use optim::AdamState;
pub use gaussian::{
    fisher_vector_product, kl_and_gradient, mean_kl, surrogate_and_gradient, surrogate_value,
    GaussianPolicy, OldPolicyStats,
};
pub use heads::{CostGainModel, CostQNet, FitReport, MultiplierNet, ValueNet};
pub use mlp::{mse, Mlp, MlpCache};

/// Hidden layer sizes shared by the policy and critics.
pub const HIDDEN_LAYERS: [usize; 2] = [64, 64];
