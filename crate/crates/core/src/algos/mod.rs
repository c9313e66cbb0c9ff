//! The eight policy-update rules over one trust-region backbone: TRPO,
//! TRPO-Lagrangian, TRPO-FAC, TRPO-IPO, CPO, PCPO (L2 and KL projections),
//! TRPO-SL, and TRPO-USL.

mod cpo;
mod ipo;
mod lagrangian;
mod pcpo;
mod shield;
mod trust_region;

pub use cpo::{cpo_search_direction, cpo_step, CpoBranch, CpoDirection};
pub use ipo::{ipo_step, log_barrier};
pub use lagrangian::{fac_step, lagrangian_step};
pub use pcpo::{pcpo_direction, pcpo_step, PcpoProjection};
pub use shield::{
    qc_regression_targets, safety_layer_fit, safety_layer_project, usl_correct, usl_fit_qc,
    CostCritic, SafetyLayerShield, UslShield,
};
pub use trust_region::{trpo_step, UpdateData};

use crate::numerics::RngStream;
use crate::policy::{CostGainModel, CostQNet, GaussianPolicy, MultiplierNet, HIDDEN_LAYERS};
use crate::runtime::{ActionShield, Batch};
use crate::{Error, Result};

/// Trust-region geometry and line-search schedule.
#[derive(Debug, Clone, Copy)]
pub struct TrustRegionConfig {
    pub delta_kl: f64,
    pub cg_iters: usize,
    pub cg_residual_tol: f64,
    pub damping: f64,
    pub backtrack_steps: u32,
    pub backtrack_coeff: f64,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        Self {
            delta_kl: 0.02,
            cg_iters: 10,
            cg_residual_tol: 1e-10,
            damping: 0.1,
            backtrack_steps: 100,
            backtrack_coeff: 0.8,
        }
    }
}

/// Constraint handling knobs shared by the safe variants.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintConfig {
    /// Constraint threshold `d`.
    pub target_cost: f64,
    /// Extra margin demanded by the CPO recovery arithmetic.
    pub cost_reduction: f64,
    /// Log-barrier sharpness for TRPO-IPO.
    pub t_ipo: f64,
    /// Fixed cost-advantage penalty weight when the barrier is undefined.
    pub ipo_penalty: f64,
    pub lagrangian_lr: f64,
    pub fac_lr: f64,
    /// Discount factor; enters the constraint surrogate scale `1/(1-gamma)`.
    pub gamma: f64,
    pub usl_eta: f64,
    pub usl_iters: usize,
    pub shield_fit_iters: usize,
    pub shield_fit_lr: f64,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self {
            target_cost: 0.0,
            cost_reduction: 0.0,
            t_ipo: 0.01,
            ipo_penalty: 5.0,
            lagrangian_lr: 0.005,
            fac_lr: 0.0001,
            gamma: 0.99,
            usl_eta: 0.05,
            usl_iters: 20,
            shield_fit_iters: 80,
            shield_fit_lr: 0.001,
        }
    }
}

/// Per-update diagnostics. A rejected step leaves the parameters unchanged
/// and `accepted_exponent` empty.
#[derive(Debug, Clone)]
pub struct UpdateReport {
    pub kl_after: f64,
    pub surrogate_before: f64,
    pub surrogate_after: f64,
    pub constraint_estimate: f64,
    pub accepted_exponent: Option<u32>,
    pub multiplier: f64,
    pub warning: Option<String>,
}

impl UpdateReport {
    pub(crate) fn rejected(surrogate: f64, constraint_estimate: f64) -> Self {
        Self {
            kl_after: 0.0,
            surrogate_before: surrogate,
            surrogate_after: surrogate,
            constraint_estimate,
            accepted_exponent: None,
            multiplier: 0.0,
            warning: None,
        }
    }

    pub fn accepted(&self) -> bool {
        self.accepted_exponent.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgoKind {
    Trpo,
    TrpoLag,
    TrpoFac,
    TrpoIpo,
    Cpo,
    PcpoL2,
    PcpoKl,
    TrpoSl,
    TrpoUsl,
}

impl AlgoKind {
    pub const ALL: [AlgoKind; 9] = [
        AlgoKind::Trpo,
        AlgoKind::TrpoLag,
        AlgoKind::TrpoFac,
        AlgoKind::TrpoIpo,
        AlgoKind::Cpo,
        AlgoKind::PcpoL2,
        AlgoKind::PcpoKl,
        AlgoKind::TrpoSl,
        AlgoKind::TrpoUsl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgoKind::Trpo => "trpo",
            AlgoKind::TrpoLag => "trpo_lag",
            AlgoKind::TrpoFac => "trpo_fac",
            AlgoKind::TrpoIpo => "trpo_ipo",
            AlgoKind::Cpo => "cpo",
            AlgoKind::PcpoL2 => "pcpo_l2",
            AlgoKind::PcpoKl => "pcpo_kl",
            AlgoKind::TrpoSl => "trpo_sl",
            AlgoKind::TrpoUsl => "trpo_usl",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownAlgorithm(name.to_string()))
    }

    /// Whether the algorithm filters actions through a learned shield at
    /// rollout time (after warmup).
    pub fn uses_shield(self) -> bool {
        matches!(self, AlgoKind::TrpoSl | AlgoKind::TrpoUsl)
    }
}

impl std::fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One algorithm instance: the update rule plus whatever auxiliary state it
/// carries (dual variable, multiplier net, shield models). Every variant
/// exposes the same batch-in/report-out entry point.
pub struct Algorithm {
    kind: AlgoKind,
    pub trust_region: TrustRegionConfig,
    pub constraint: ConstraintConfig,
    pub lagrange: f64,
    pub multiplier_net: Option<MultiplierNet>,
    pub gain_model: Option<CostGainModel>,
    pub qc_net: Option<CostQNet>,
}

impl Algorithm {
    pub fn new(
        kind: AlgoKind,
        obs_dim: usize,
        act_dim: usize,
        trust_region: TrustRegionConfig,
        constraint: ConstraintConfig,
        rng: &mut RngStream,
    ) -> Self {
        let multiplier_net = (kind == AlgoKind::TrpoFac)
            .then(|| MultiplierNet::new(obs_dim, &HIDDEN_LAYERS, rng));
        let gain_model = (kind == AlgoKind::TrpoSl)
            .then(|| CostGainModel::new(obs_dim, act_dim, &HIDDEN_LAYERS, rng));
        let qc_net = (kind == AlgoKind::TrpoUsl)
            .then(|| CostQNet::new(obs_dim, act_dim, &HIDDEN_LAYERS, rng));
        Self {
            kind,
            trust_region,
            constraint,
            lagrange: 0.0,
            multiplier_net,
            gain_model,
            qc_net,
        }
    }

    pub fn kind(&self) -> AlgoKind {
        self.kind
    }

    /// Run one policy update on the prepared batch data.
    pub fn update(
        &mut self,
        policy: &GaussianPolicy,
        data: &UpdateData,
    ) -> Result<(GaussianPolicy, UpdateReport)> {
        match self.kind {
            AlgoKind::Trpo | AlgoKind::TrpoSl | AlgoKind::TrpoUsl => {
                trpo_step(policy, data, &data.reward_advantages, &self.trust_region)
            }
            AlgoKind::TrpoLag => {
                let (next, lambda, report) = lagrangian_step(
                    policy,
                    data,
                    self.lagrange,
                    &self.trust_region,
                    &self.constraint,
                )?;
                self.lagrange = lambda;
                Ok((next, report))
            }
            AlgoKind::TrpoFac => {
                let net = self
                    .multiplier_net
                    .as_mut()
                    .expect("FAC carries a multiplier net");
                fac_step(policy, data, net, &self.trust_region, &self.constraint)
            }
            AlgoKind::TrpoIpo => ipo_step(policy, data, &self.trust_region, &self.constraint),
            AlgoKind::Cpo => cpo_step(policy, data, &self.trust_region, &self.constraint),
            AlgoKind::PcpoL2 => pcpo_step(
                policy,
                data,
                PcpoProjection::L2,
                &self.trust_region,
                &self.constraint,
            ),
            AlgoKind::PcpoKl => pcpo_step(
                policy,
                data,
                PcpoProjection::Kl,
                &self.trust_region,
                &self.constraint,
            ),
        }
    }

    /// Rollout-time action shield, available once the auxiliary cost models
    /// exist (TRPO-SL and TRPO-USL only).
    pub fn shield(&self) -> Option<Box<dyn ActionShield + '_>> {
        match self.kind {
            AlgoKind::TrpoSl => self.gain_model.as_ref().map(|model| {
                Box::new(SafetyLayerShield {
                    model,
                    target_cost: self.constraint.target_cost,
                }) as Box<dyn ActionShield>
            }),
            AlgoKind::TrpoUsl => self.qc_net.as_ref().map(|qc| {
                Box::new(UslShield {
                    qc,
                    target_cost: self.constraint.target_cost,
                    eta: self.constraint.usl_eta,
                    iters: self.constraint.usl_iters,
                }) as Box<dyn ActionShield>
            }),
            _ => None,
        }
    }

    /// Fit the shield cost models on the epoch's batch (done every epoch;
    /// the shield itself only activates after warmup).
    pub fn fit_shield_models(&mut self, batch: &Batch) -> Result<()> {
        let iters = self.constraint.shield_fit_iters;
        let lr = self.constraint.shield_fit_lr;
        if let Some(model) = self.gain_model.as_mut() {
            safety_layer_fit(model, batch, iters, lr)?;
        }
        if let Some(qc) = self.qc_net.as_mut() {
            usl_fit_qc(qc, batch, self.constraint.gamma, iters, lr)?;
        }
        Ok(())
    }
}
