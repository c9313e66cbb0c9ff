//! CPO: trust-region policy improvement subject to a linearized cost
//! constraint, solved through the single-constraint dual.

use super::trust_region::{apply_fisher, backtrack, solve_fisher, trpo_step, UpdateData};
use super::{ConstraintConfig, TrustRegionConfig, UpdateReport};
use crate::numerics::{dot, norm2};
use crate::policy::{surrogate_and_gradient, surrogate_value, GaussianPolicy};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpoBranch {
    /// Constrained optimum inside (or on) the trust region.
    Feasible,
    /// Constraint unreachable inside the trust region: pure cost descent.
    Recovery,
    /// Degenerate cost gradient: plain TRPO.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct CpoDirection {
    /// Full step to the trust-region boundary (before backtracking).
    pub step: Vec<f64>,
    pub branch: CpoBranch,
    /// Constraint dual at the optimum (zero when inactive).
    pub nu: f64,
}

/// Solve `max gᵀx  s.t.  ½ xᵀHx <= delta,  b + g_cᵀx <= 0` with `H` given
/// implicitly through `solve` (`H^{-1}·`) and `apply` (`H·`).
///
/// Case analysis on the dual of the single-constraint problem:
/// with `q = gᵀH⁻¹g`, `r = gᵀH⁻¹g_c`, `s = g_cᵀH⁻¹g_c`,
/// * infeasible (`b > 0` and `b²/s > 2 delta`): recovery step
///   `-sqrt(2 delta / s) H⁻¹ g_c`;
/// * cost constraint slack at the TRPO optimum: plain boundary step;
/// * otherwise both constraints active: `x = (H⁻¹g - nu H⁻¹g_c) / lambda`
///   with `lambda = sqrt((q - r²/s) / (2 delta - b²/s))`,
///   `nu = (r + lambda b) / s`.
pub fn cpo_search_direction(
    g: &[f64],
    g_c: &[f64],
    b: f64,
    delta: f64,
    solve: &mut impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<Option<CpoDirection>> {
    const EPS: f64 = 1e-12;

    if norm2(g_c) < 1e-10 {
        return Ok(Some(CpoDirection {
            step: Vec::new(),
            branch: CpoBranch::Degenerate,
            nu: 0.0,
        }));
    }

    let hinv_g = solve(g)?;
    let hinv_gc = solve(g_c)?;
    let q = dot(g, &hinv_g);
    let r = dot(g, &hinv_gc);
    let s = dot(g_c, &hinv_gc);
    if !(s.is_finite() && s > EPS) {
        return Ok(Some(CpoDirection {
            step: Vec::new(),
            branch: CpoBranch::Degenerate,
            nu: 0.0,
        }));
    }

    let recovery = |hinv_gc: &[f64]| {
        let scale = (2.0 * delta / s).sqrt();
        hinv_gc.iter().map(|v| -scale * v).collect::<Vec<f64>>()
    };

    if b > 0.0 && b * b / s > 2.0 * delta {
        return Ok(Some(CpoDirection {
            step: recovery(&hinv_gc),
            branch: CpoBranch::Recovery,
            nu: f64::INFINITY,
        }));
    }

    if !(q.is_finite() && q > EPS) {
        // No usable reward gradient: satisfy the constraint if violated,
        // otherwise there is nothing to do.
        if b > 0.0 {
            return Ok(Some(CpoDirection {
                step: recovery(&hinv_gc),
                branch: CpoBranch::Recovery,
                nu: f64::INFINITY,
            }));
        }
        return Ok(None);
    }

    // nu = 0 candidate: the plain TRPO boundary step.
    let lambda0 = (q / (2.0 * delta)).sqrt();
    if r / lambda0 + b <= 0.0 {
        let step = hinv_g.iter().map(|v| v / lambda0).collect();
        return Ok(Some(CpoDirection {
            step,
            branch: CpoBranch::Feasible,
            nu: 0.0,
        }));
    }

    // Both constraints active.
    let a_term = (q - r * r / s).max(0.0);
    let b_term = 2.0 * delta - b * b / s;
    if b_term <= EPS || a_term <= EPS {
        // The active-set system degenerates (g parallel to g_c or the
        // trust region exactly tangent): fall back to cost descent.
        return Ok(Some(CpoDirection {
            step: recovery(&hinv_gc),
            branch: CpoBranch::Recovery,
            nu: f64::INFINITY,
        }));
    }
    let lambda = (a_term / b_term).sqrt();
    let nu = ((r + lambda * b) / s).max(0.0);
    let step = hinv_g
        .iter()
        .zip(&hinv_gc)
        .map(|(a, c)| (a - nu * c) / lambda)
        .collect();
    Ok(Some(CpoDirection {
        step,
        branch: CpoBranch::Feasible,
        nu,
    }))
}

/// One CPO update. The cost surrogate
/// `J_C(pi_k) + E[ratio * A_C] / (1 - gamma)` is linearized into `g_c` and
/// `b = J_C - d + cost_reduction`; backtracking accepts the first candidate
/// inside the KL ball whose cost surrogate worsens by no more than
/// `max(0, -b)`. A degenerate cost gradient falls back to plain TRPO with a
/// warning.
pub fn cpo_step(
    policy: &GaussianPolicy,
    data: &UpdateData,
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
    let (cost_raw, mut g_c) = surrogate_and_gradient(
        policy,
        data.obs.view(),
        data.actions.view(),
        data.old_log_probs.view(),
        data.cost_advantages.view(),
    )?;
    for v in &mut g_c {
        *v *= scale;
    }
    let cost_surrogate_before = cost_raw * scale;
    let b = data.constraint_value - cc.target_cost + cc.cost_reduction;

    let mut solve = |rhs: &[f64]| solve_fisher(policy, data, rhs, tr);
    let direction = cpo_search_direction(&g, &g_c, b, tr.delta_kl, &mut solve)?;

    let Some(direction) = direction else {
        return Ok((
            policy.clone(),
            UpdateReport::rejected(surrogate_before, data.constraint_value),
        ));
    };

    if direction.branch == CpoBranch::Degenerate {
        let (next, mut report) = trpo_step(policy, data, &data.reward_advantages, tr)?;
        report.warning = Some("degenerate cost gradient; plain TRPO step".into());
        return Ok((next, report));
    }

    // Scale the feasible-branch step onto the trust boundary the same way
    // the backbone does. The dual already normalizes it, but damping and CG
    // truncation leave a gap worth closing before the line search.
    let full_step = {
        let hx = apply_fisher(policy, data, &direction.step, tr)?;
        let xhx = dot(&direction.step, &hx);
        if xhx.is_finite() && xhx > 1e-16 {
            let beta = (2.0 * tr.delta_kl / xhx).sqrt();
            direction.step.iter().map(|v| beta * v).collect::<Vec<f64>>()
        } else {
            direction.step.clone()
        }
    };

    let allowed_worsening = (-b).max(0.0);
    let found = backtrack(policy, data, &full_step, tr, |candidate| {
        let cost_surrogate = surrogate_value(
            candidate,
            data.obs.view(),
            data.actions.view(),
            data.old_log_probs.view(),
            data.cost_advantages.view(),
        )? * scale;
        Ok(cost_surrogate - cost_surrogate_before <= allowed_worsening + 1e-12)
    })?;

    let mut report = UpdateReport::rejected(surrogate_before, data.constraint_value);
    report.multiplier = if direction.nu.is_finite() {
        direction.nu
    } else {
        0.0
    };
    if direction.branch == CpoBranch::Recovery {
        report.warning = Some("infeasible iterate; recovery step".into());
    }
    match found {
        Some(candidate) => {
            report.kl_after = candidate.kl;
            report.accepted_exponent = Some(candidate.exponent);
            report.surrogate_after = surrogate_value(
                &candidate.policy,
                data.obs.view(),
                data.actions.view(),
                data.old_log_probs.view(),
                data.reward_advantages.view(),
            )?;
            Ok((candidate.policy, report))
        }
        None => Ok((policy.clone(), report)),
    }
}
