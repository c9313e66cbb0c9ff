//! PCPO: an unconstrained trust-region reward step followed by an
//! analytical projection back onto the linearized constraint set, under
//! either the L2 or the KL metric.

use super::trust_region::{solve_fisher, UpdateData};
use super::{ConstraintConfig, TrustRegionConfig, UpdateReport};
use crate::numerics::{dot, norm2};
use crate::policy::{mean_kl, surrogate_and_gradient, surrogate_value, GaussianPolicy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcpoProjection {
    L2,
    Kl,
}

impl PcpoProjection {
    pub fn name(self) -> &'static str {
        match self {
            PcpoProjection::L2 => "L2",
            PcpoProjection::Kl => "KL",
        }
    }
}

/// One PCPO update:
///
/// `step = sqrt(2 delta / q) H^{-1} g
///         - max(0, (sqrt(2 delta / q) g_cᵀH^{-1}g + b) / (g_cᵀL^{-1}g_c)) L^{-1} g_c`
///
/// with `L = I` (L2) or `L = H` (KL). The update is applied directly — no
/// backtracking — with one safety valve: if the realized KL exceeds
/// `4 delta`, the step is halved until it fits.
pub fn pcpo_step(
    policy: &GaussianPolicy,
    data: &UpdateData,
    projection: PcpoProjection,
    tr: &TrustRegionConfig,
    cc: &ConstraintConfig,
) -> Result<(GaussianPolicy, UpdateReport)> {
    let scale = 1.0 / (1.0 - cc.gamma);
    let (surrogate_before, g) = surrogate_and_gradient(
        policy,
        data.obs.view(),
        data.actions.view(),
        data.old_log_probs.view(),
        data.reward_advantages.view(),
    )?;
    let (_, mut g_c) = surrogate_and_gradient(
        policy,
        data.obs.view(),
        data.actions.view(),
        data.old_log_probs.view(),
        data.cost_advantages.view(),
    )?;
    for v in &mut g_c {
        *v *= scale;
    }
    let b = data.constraint_value - cc.target_cost;

    let mut report = UpdateReport::rejected(surrogate_before, data.constraint_value);
    if norm2(&g) < 1e-12 {
        return Ok((policy.clone(), report));
    }

    let hinv_g = solve_fisher(policy, data, &g, tr)?;
    let q = dot(&g, &hinv_g);
    if !(q.is_finite() && q > 1e-16) {
        return Ok((policy.clone(), report));
    }
    let reward_coeff = (2.0 * tr.delta_kl / q).sqrt();
    let reward_step: Vec<f64> = hinv_g.iter().map(|v| reward_coeff * v).collect();

    let (denom, correction): (f64, Vec<f64>) = match projection {
        PcpoProjection::L2 => (dot(&g_c, &g_c), g_c.clone()),
        PcpoProjection::Kl => {
            let hinv_gc = solve_fisher(policy, data, &g_c, tr)?;
            (dot(&g_c, &hinv_gc), hinv_gc)
        }
    };

    let violation = dot(&g_c, &reward_step) + b;
    let coeff = if denom > 1e-12 {
        (violation / denom).max(0.0)
    } else {
        0.0
    };

    let mut step: Vec<f64> = reward_step
        .iter()
        .zip(&correction)
        .map(|(r, c)| r - coeff * c)
        .collect();

    // Safety valve: halve until the realized KL is within 4 delta.
    let theta0 = policy.flat();
    let mut halvings = 0u32;
    let (next, kl) = loop {
        let mut theta = theta0.clone();
        for (t, s) in theta.iter_mut().zip(&step) {
            *t += s;
        }
        let candidate = policy.with_flat(&theta)?;
        match mean_kl(&data.old_stats, &candidate, data.obs.view()) {
            Ok(kl) if kl <= 4.0 * tr.delta_kl => break (candidate, kl),
            Ok(_) | Err(Error::NonFinite(_)) => {
                if halvings >= 60 {
                    return Ok((policy.clone(), report));
                }
                for s in &mut step {
                    *s *= 0.5;
                }
                halvings += 1;
            }
            Err(e) => return Err(e),
        }
    };

    report.kl_after = kl;
    report.accepted_exponent = Some(halvings);
    report.multiplier = coeff;
    report.surrogate_after = surrogate_value(
        &next,
        data.obs.view(),
        data.actions.view(),
        data.old_log_probs.view(),
        data.reward_advantages.view(),
    )?;
    Ok((next, report))
}

/// The raw projection arithmetic, exposed for oracle comparison: returns
/// the full update direction given precomputed `H^{-1}` applications.
pub fn pcpo_direction(
    g: &[f64],
    g_c: &[f64],
    b: f64,
    delta: f64,
    projection: PcpoProjection,
    solve: &mut impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let hinv_g = solve(g)?;
    let q = dot(g, &hinv_g);
    let reward_coeff = (2.0 * delta / q).sqrt();
    let reward_step: Vec<f64> = hinv_g.iter().map(|v| reward_coeff * v).collect();
    let (denom, correction) = match projection {
        PcpoProjection::L2 => (dot(g_c, g_c), g_c.to_vec()),
        PcpoProjection::Kl => {
            let hinv_gc = solve(g_c)?;
            (dot(g_c, &hinv_gc), hinv_gc)
        }
    };
    let violation = dot(g_c, &reward_step) + b;
    let coeff = if denom > 1e-12 {
        (violation / denom).max(0.0)
    } else {
        0.0
    };
    Ok(reward_step
        .iter()
        .zip(&correction)
        .map(|(r, c)| r - coeff * c)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algos::trust_region::testkit::*;
    use crate::numerics::DenseOperator;

    fn dense_solver(h: DenseOperator) -> impl FnMut(&[f64]) -> Result<Vec<f64>> {
        move |rhs: &[f64]| {
            crate::numerics::conjugate_gradient(&h, rhs, 200, 1e-14).map(|s| s.x)
        }
    }

    #[test]
    fn inactive_projection_is_pure_trpo_step() {
        // b very negative and g_c small: max(0, .) vanishes.
        let delta = 0.02;
        let g = [1.0, 0.2];
        let g_c = [0.1, -0.05];
        let mut solve = dense_solver(DenseOperator::new(2, vec![1.0, 0.0, 0.0, 1.0]));
        let dir = pcpo_direction(&g, &g_c, -5.0, delta, PcpoProjection::L2, &mut solve).unwrap();
        let q = 1.04;
        let coeff = (2.0 * delta / q).sqrt();
        assert!((dir[0] - coeff * g[0]).abs() < 1e-10);
        assert!((dir[1] - coeff * g[1]).abs() < 1e-10);
    }

    #[test]
    fn active_projection_lands_on_the_linearized_constraint() {
        let delta = 0.02;
        let g = [1.0, 0.3];
        let g_c = [0.7, -0.4];
        let b = 0.2;
        for projection in [PcpoProjection::L2, PcpoProjection::Kl] {
            let mut solve = dense_solver(DenseOperator::new(2, vec![1.5, 0.2, 0.2, 0.8]));
            let dir = pcpo_direction(&g, &g_c, b, delta, projection, &mut solve).unwrap();
            let lin = dot(&g_c, &dir) + b;
            assert!(lin.abs() <= 1e-8, "{projection:?}: residual {lin}");
        }
    }

    #[test]
    fn l2_and_kl_differ_for_anisotropic_h() {
        let delta = 0.02;
        let g = [1.0, 0.5];
        let g_c = [0.6, -0.8];
        let b = 0.5;
        let h = vec![1.0, 0.0, 0.0, 4.0];
        let mut solve_a = dense_solver(DenseOperator::new(2, h.clone()));
        let mut solve_b = dense_solver(DenseOperator::new(2, h));
        let l2 = pcpo_direction(&g, &g_c, b, delta, PcpoProjection::L2, &mut solve_a).unwrap();
        let kl = pcpo_direction(&g, &g_c, b, delta, PcpoProjection::Kl, &mut solve_b).unwrap();
        let diff = l2
            .iter()
            .zip(&kl)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff > 1e-6, "projections should differ, diff {diff}");
    }

    #[test]
    fn realized_kl_respects_the_valve() {
        let mut policy = tiny_policy(71);
        let tr = TrustRegionConfig::default();
        let cc = ConstraintConfig::default();
        for round in 0..6 {
            let mut data = synthetic_data(&policy, 48, 500 + round, |i| 0.1 * (i % 3) as f64);
            data.constraint_value = 0.5;
            let (next, report) =
                pcpo_step(&policy, &data, PcpoProjection::Kl, &tr, &cc).unwrap();
            if report.accepted() {
                assert!(report.kl_after <= 4.0 * tr.delta_kl + 1e-9);
            }
            policy = next;
        }
    }
}
