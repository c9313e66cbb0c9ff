//! TRPO-IPO: interior-point flavored update with a logarithmic barrier on
//! the constraint surrogate.

use super::trust_region::{trpo_step, UpdateData};
use super::{ConstraintConfig, TrustRegionConfig, UpdateReport};
use crate::policy::GaussianPolicy;
use crate::Result;

/// Log barrier `phi(x) = ln(-x) / t`, defined for `x < 0` and diverging to
/// `-inf` as the constraint approaches violation.
pub fn log_barrier(x: f64, t: f64) -> f64 {
    assert!(t > 0.0, "barrier sharpness must be positive");
    if x < 0.0 {
        (-x).ln() / t
    } else {
        f64::NEG_INFINITY
    }
}

const MAX_BARRIER_WEIGHT: f64 = 1e6;

/// One IPO update. While strictly feasible (`J_C - d < 0`) the advantage is
/// augmented with the barrier's linearized contribution
/// `phi'(x) / (1 - gamma) * A_C`; from an infeasible iterate, where the
/// barrier is undefined, a fixed large penalty weight on the cost advantage
/// drives the policy back toward the feasible region.
pub fn ipo_step(
    policy: &GaussianPolicy,
    data: &UpdateData,
    tr: &TrustRegionConfig,
    cc: &ConstraintConfig,
) -> Result<(GaussianPolicy, UpdateReport)> {
    let gap = data.constraint_value - cc.target_cost;
    let weight = if gap < 0.0 {
        // phi'(x) = 1 / (t x) < 0; cap the magnitude near the boundary.
        let scaled = 1.0 / (cc.t_ipo * gap) / (1.0 - cc.gamma);
        scaled.max(-MAX_BARRIER_WEIGHT)
    } else {
        -cc.ipo_penalty
    };
    let augmented = ndarray::Array1::from_shape_fn(data.len(), |i| {
        data.reward_advantages[i] + weight * data.cost_advantages[i]
    });
    let (next, mut report) = trpo_step(policy, data, &augmented, tr)?;
    report.multiplier = -weight;
    Ok((next, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algos::trust_region::testkit::*;

    #[test]
    fn barrier_values() {
        // phi(-1) = ln(1)/t = 0 for any t.
        assert_eq!(log_barrier(-1.0, 0.01), 0.0);
        // phi(-0.5) = 100 ln(0.5) ~ -69.31.
        let v = log_barrier(-0.5, 0.01);
        assert!((v - 100.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((v + 69.3147180559945).abs() < 1e-10);
    }

    #[test]
    fn barrier_diverges_toward_the_boundary() {
        let t = 0.01;
        let a = log_barrier(-1e-1, t);
        let b = log_barrier(-1e-3, t);
        let c = log_barrier(-1e-6, t);
        assert!(a > b && b > c, "monotone decreasing toward 0-");
        assert!(c < -1e3);
        assert_eq!(log_barrier(0.0, t), f64::NEG_INFINITY);
        assert_eq!(log_barrier(1.0, t), f64::NEG_INFINITY);
    }

    #[test]
    fn infeasible_gap_uses_fixed_penalty() {
        let policy = tiny_policy(31);
        let mut data = synthetic_data(&policy, 32, 41, |i| 0.05 * (i % 4) as f64);
        data.constraint_value = 1.5; // above target 0
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default();
        let (_, report) = ipo_step(&policy, &data, &tr, &cc).unwrap();
        assert_eq!(report.multiplier, cc.ipo_penalty);
    }

    #[test]
    fn feasible_gap_uses_barrier_slope() {
        let policy = tiny_policy(32);
        let mut data = synthetic_data(&policy, 32, 42, |i| 0.05 * (i % 4) as f64);
        data.constraint_value = -1.0;
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig {
            target_cost: 0.0,
            ..ConstraintConfig::default()
        };
        let (_, report) = ipo_step(&policy, &data, &tr, &cc).unwrap();
        // |phi'(-1)|/(1-gamma) = (1/t)/(1-gamma) = 100 * 100.
        assert!((report.multiplier - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn zero_cost_advantages_reduce_to_trpo() {
        let policy = tiny_policy(33);
        let mut data = synthetic_data(&policy, 48, 43, |_| 0.0);
        data.constraint_value = 0.0;
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default();
        let (ipo_next, _) = ipo_step(&policy, &data, &tr, &cc).unwrap();
        let (trpo_next, _) =
            trpo_step(&policy, &data, &data.reward_advantages.clone(), &tr).unwrap();
        for (a, b) in ipo_next.flat().iter().zip(&trpo_next.flat()) {
            assert_eq!(*a, *b);
        }
    }
}
