//! Constrained-MDP benchmark core: kinematic environment suite, Gaussian MLP
//! policies with hand-rolled gradients, on-policy estimation, and eight
//! policy-update rules sharing one trust-region backbone.

mod error;

pub mod algos;
pub mod env;
pub mod numerics;
pub mod runtime;
pub mod oracles;
pub mod policy;

pub use error::{Error, Result};
