//! Training hyper-parameters and `key=value` overrides.

use anyhow::{bail, Result};
use saferl_core::algos::{ConstraintConfig, TrustRegionConfig};

/// Defaults follow the benchmark's standard table; the advantage discount
/// is the table's 0.97 (the alternative 0.95 is a plain `lam=0.95`
/// override away).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub gamma: f64,
    pub lam: f64,
    pub delta_kl: f64,
    pub damping: f64,
    pub cg_iters: usize,
    pub backtrack_steps: u32,
    pub backtrack_coeff: f64,
    pub value_iters: usize,
    pub value_lr: f64,
    pub target_cost: f64,
    pub cost_reduction: f64,
    pub t_ipo: f64,
    pub ipo_penalty: f64,
    pub lagrangian_lr: f64,
    pub fac_lr: f64,
    pub usl_eta: f64,
    pub usl_iters: usize,
    pub shield_fit_iters: usize,
    pub shield_fit_lr: f64,
    pub warmup_ratio: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lam: 0.97,
            delta_kl: 0.02,
            damping: 0.1,
            cg_iters: 10,
            backtrack_steps: 100,
            backtrack_coeff: 0.8,
            value_iters: 80,
            value_lr: 0.001,
            target_cost: 0.0,
            cost_reduction: 0.0,
            t_ipo: 0.01,
            ipo_penalty: 5.0,
            lagrangian_lr: 0.005,
            fac_lr: 0.0001,
            usl_eta: 0.05,
            usl_iters: 20,
            shield_fit_iters: 80,
            shield_fit_lr: 0.001,
            warmup_ratio: 1.0 / 3.0,
        }
    }
}

impl HyperParams {
    /// Apply a `key=value` override; returns false when the key is not a
    /// hyper-parameter (so it can fall through to the environment config).
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<bool> {
        macro_rules! parse {
            ($ty:ty) => {
                match value.parse::<$ty>() {
                    Ok(v) => v,
                    Err(_) => bail!("bad value for {key}: '{value}'"),
                }
            };
        }
        match key {
            "gamma" => self.gamma = parse!(f64),
            "lam" => self.lam = parse!(f64),
            "delta_kl" => self.delta_kl = parse!(f64),
            "damping" => self.damping = parse!(f64),
            "cg_iters" => self.cg_iters = parse!(usize),
            "backtrack_steps" => self.backtrack_steps = parse!(u32),
            "backtrack_coeff" => self.backtrack_coeff = parse!(f64),
            "value_iters" => self.value_iters = parse!(usize),
            "value_lr" => self.value_lr = parse!(f64),
            "target_cost" => self.target_cost = parse!(f64),
            "cost_reduction" => self.cost_reduction = parse!(f64),
            "t_ipo" => self.t_ipo = parse!(f64),
            "ipo_penalty" => self.ipo_penalty = parse!(f64),
            "lagrangian_lr" => self.lagrangian_lr = parse!(f64),
            "fac_lr" => self.fac_lr = parse!(f64),
            "usl_eta" => self.usl_eta = parse!(f64),
            "usl_iters" => self.usl_iters = parse!(usize),
            "shield_fit_iters" => self.shield_fit_iters = parse!(usize),
            "shield_fit_lr" => self.shield_fit_lr = parse!(f64),
            "warmup_ratio" => self.warmup_ratio = parse!(f64),
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn trust_region(&self) -> TrustRegionConfig {
        TrustRegionConfig {
            delta_kl: self.delta_kl,
            cg_iters: self.cg_iters,
            cg_residual_tol: 1e-10,
            damping: self.damping,
            backtrack_steps: self.backtrack_steps,
            backtrack_coeff: self.backtrack_coeff,
        }
    }

    pub fn constraint(&self) -> ConstraintConfig {
        ConstraintConfig {
            target_cost: self.target_cost,
            cost_reduction: self.cost_reduction,
            t_ipo: self.t_ipo,
            ipo_penalty: self.ipo_penalty,
            lagrangian_lr: self.lagrangian_lr,
            fac_lr: self.fac_lr,
            gamma: self.gamma,
            usl_eta: self.usl_eta,
            usl_iters: self.usl_iters,
            shield_fit_iters: self.shield_fit_iters,
            shield_fit_lr: self.shield_fit_lr,
        }
    }

    /// Epochs spent collecting unshielded data before the hierarchical
    /// algorithms switch their shields on.
    pub fn warmup_epochs(&self, epochs: u32) -> u32 {
        (epochs as f64 * self.warmup_ratio).ceil() as u32
    }
}
