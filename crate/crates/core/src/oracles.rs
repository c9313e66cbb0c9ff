//! Independent reference implementations used by the verification suites.
//!
//! Everything here deliberately avoids the production solve paths: dense
//! Gaussian elimination instead of conjugate gradient, and a dual-variable
//! bisection instead of the closed-form case analysis. Test code compares
//! the two routes; nothing in the training pipeline calls into this module.

use crate::numerics::dot;

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// Panics on singular systems; callers supply well-conditioned instances.
pub fn dense_solve(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i * n + col]
                    .abs()
                    .partial_cmp(&m[j * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        assert!(m[pivot * n + col].abs() > 1e-12, "singular system");
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let diag = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / diag;
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    x
}

/// Outcome of the numeric linear-objective / linear-plus-quadratic
/// constraint solve.
#[derive(Debug, Clone)]
pub struct LolqcSolution {
    pub x: Vec<f64>,
    /// True when the linear constraint is unreachable inside the trust
    /// region and the solution is the pure cost-descent point.
    pub infeasible: bool,
}

/// Numerically solve `max gᵀx  s.t.  ½ xᵀHx <= delta,  b + cᵀx <= 0` for a
/// dense symmetric positive definite `H`, by bisecting the constraint dual:
/// for a fixed multiplier `nu`, the trust-region maximizer of
/// `(g - nu c)ᵀ x` lies on the boundary at
/// `sqrt(2 delta / wᵀH⁻¹w) · H⁻¹ w` with `w = g - nu c`; complementary
/// slackness picks the smallest `nu >= 0` whose maximizer satisfies the
/// linear constraint.
pub fn lolqc_solve(
    n: usize,
    g: &[f64],
    c: &[f64],
    b: f64,
    h: &[f64],
    delta: f64,
) -> LolqcSolution {
    let hinv_c = dense_solve(n, h, c);
    let s = dot(c, &hinv_c);

    let boundary_point = |w: &[f64]| -> Option<Vec<f64>> {
        let hinv_w = dense_solve(n, h, w);
        let quad = dot(w, &hinv_w);
        if quad <= 1e-14 {
            return None;
        }
        let scale = (2.0 * delta / quad).sqrt();
        Some(hinv_w.iter().map(|v| scale * v).collect())
    };

    // Feasibility: the best reachable constraint value is b - sqrt(2 delta s).
    if s > 1e-14 && b - (2.0 * delta * s).sqrt() > 0.0 {
        let scale = (2.0 * delta / s).sqrt();
        return LolqcSolution {
            x: hinv_c.iter().map(|v| -scale * v).collect(),
            infeasible: true,
        };
    }

    let constraint_at = |nu: f64| -> (f64, Vec<f64>) {
        let w: Vec<f64> = g.iter().zip(c).map(|(gi, ci)| gi - nu * ci).collect();
        match boundary_point(&w) {
            Some(x) => (dot(c, &x) + b, x),
            // w vanished: any interior point works; use the origin.
            None => (b, vec![0.0; n]),
        }
    };

    let (h0, x0) = constraint_at(0.0);
    if h0 <= 0.0 {
        return LolqcSolution {
            x: x0,
            infeasible: false,
        };
    }

    // Find an upper bracket then bisect on the (nonincreasing) constraint
    // value.
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..200 {
        if constraint_at(hi).0 <= 0.0 {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if constraint_at(mid).0 <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (_, x) = constraint_at(hi);
    LolqcSolution {
        x,
        infeasible: false,
    }
}
