//! Dense vector helpers, iterative solvers, and verification oracles.
//!
//! All arithmetic is 64-bit. Operations here are pure functions of their
//! inputs and are safe to call concurrently. Non-finite values are reported
//! as errors rather than silently clamped: numeric divergence elsewhere in
//! the crate must surface loudly.

mod rng;

pub use rng::RngStream;

use crate::{Error, Result};

/// Matrix-free symmetric positive definite operator.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>>;
}

/// Dense symmetric matrix adapter, row-major.
pub struct DenseOperator {
    dim: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim, "dense operator shape");
        Self { dim, data }
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("DenseOperator::apply", self.dim, v.len())?;
        let mut out = vec![0.0; self.dim];
        for (i, row) in self.data.chunks_exact(self.dim).enumerate() {
            out[i] = dot(row, v);
        }
        Ok(out)
    }
}

/// Closure-backed operator (used to wrap Fisher-vector products).
pub struct FnOperator<F: Fn(&[f64]) -> Result<Vec<f64>>> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        (self.f)(v)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

/// Conjugate-gradient solution together with its achieved residual.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Solve `op(x) = b` for symmetric positive definite `op`.
///
/// Returns the first iterate whose residual 2-norm falls at or below
/// `residual_tol`, or the iterate after `max_iters` steps with the residual
/// reported in the solution. Any damping must be folded into `op` by the
/// caller; the solver itself is generic.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    max_iters: usize,
    residual_tol: f64,
) -> Result<CgSolution> {
    check_dim("conjugate_gradient", op.dim(), b.len())?;
    assert!(max_iters >= 1, "max_iters must be at least 1");
    if !all_finite(b) {
        return Err(Error::NonFinite("conjugate_gradient rhs"));
    }

    let n = b.len();
    let mut x = vec![0.0; n];
    let mut residual = b.to_vec();
    let mut direction = b.to_vec();
    let mut rs_old = dot(&residual, &residual);

    if rs_old.sqrt() <= residual_tol {
        return Ok(CgSolution {
            x,
            residual_norm: rs_old.sqrt(),
            iterations: 0,
        });
    }

    let mut iterations = 0;
    for _ in 0..max_iters {
        let ad = op.apply(&direction)?;
        if !all_finite(&ad) {
            return Err(Error::NonFinite("conjugate_gradient operator output"));
        }
        let dad = dot(&direction, &ad);
        if dad <= 0.0 || !dad.is_finite() {
            // Operator is not positive definite along this direction; stop
            // with the best iterate so far.
            break;
        }
        let alpha = rs_old / dad;
        axpy(alpha, &direction, &mut x);
        axpy(-alpha, &ad, &mut residual);
        iterations += 1;

        let rs_new = dot(&residual, &residual);
        if !rs_new.is_finite() {
            return Err(Error::NonFinite("conjugate_gradient residual"));
        }
        if rs_new.sqrt() <= residual_tol {
            rs_old = rs_new;
            break;
        }
        let beta = rs_new / rs_old;
        for (d, r) in direction.iter_mut().zip(&residual) {
            *d = r + beta * *d;
        }
        rs_old = rs_new;
    }

    Ok(CgSolution {
        x,
        residual_norm: rs_old.sqrt(),
        iterations,
    })
}

/// Central-difference gradient of a scalar function, component by component:
/// `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)`.
///
/// The default `eps` used throughout the crate is `1e-5`, balancing
/// truncation against rounding at 64-bit precision.
pub fn finite_difference_gradient<F>(f: F, x: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(eps > 0.0, "eps must be positive");
    let mut probe = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = f(&probe);
        probe[i] = orig - eps;
        let minus = f(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("finite_difference_gradient evaluation"));
        }
        grad[i] = (plus - minus) / (2.0 * eps);
    }
    Ok(grad)
}

/// Exact single-constraint projection: `argmin ½‖a - a_ref‖²` subject to
/// `gᵀa + offset <= limit`, by KKT analysis. Serves as the numeric oracle
/// for the closed-form safety-layer projection.
pub fn solve_qp_projection_oracle(
    a_ref: &[f64],
    g: &[f64],
    offset: f64,
    limit: f64,
) -> Result<Vec<f64>> {
    check_dim("solve_qp_projection_oracle", a_ref.len(), g.len())?;
    let gg = dot(g, g);
    if gg <= 0.0 {
        return Err(Error::ZeroGradient);
    }
    let violation = dot(g, a_ref) + offset - limit;
    if violation <= 0.0 {
        return Ok(a_ref.to_vec());
    }
    // Active constraint: a = a_ref - (violation / gᵀg) g, multiplier = violation / gᵀg.
    let mut out = a_ref.to_vec();
    axpy(-violation / gg, g, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Identity(usize);

    impl LinearOperator for Identity {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
            Ok(v.to_vec())
        }
    }

    fn random_spd(n: usize, rng: &mut RngStream) -> Vec<f64> {
        // A = MᵀM + I
        let m: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += m[k * n + i] * m[k * n + j];
                }
                a[i * n + j] = acc + if i == j { 1.0 } else { 0.0 };
            }
        }
        a
    }

    /// Plain Gaussian elimination with partial pivoting; the independent
    /// dense route the CG result is checked against.
    fn dense_solve(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
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

    #[test]
    fn cg_identity_returns_rhs() {
        let sol = conjugate_gradient(&Identity(3), &[1.0, 2.0, 3.0], 10, 1e-12).unwrap();
        assert!(sol.residual_norm <= 1e-12);
        for (xi, bi) in sol.x.iter().zip(&[1.0, 2.0, 3.0]) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_diagonal_inverse() {
        let op = DenseOperator::new(2, vec![2.0, 0.0, 0.0, 2.0]);
        let sol = conjugate_gradient(&op, &[2.0, 4.0], 10, 1e-12).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cg_matches_dense_solve_on_random_spd() {
        let mut rng = RngStream::new(314);
        let n = 8;
        let a = random_spd(n, &mut rng);
        let b: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let op = DenseOperator::new(n, a.clone());
        let sol = conjugate_gradient(&op, &b, 4 * n, 1e-12).unwrap();
        let expected = dense_solve(n, &a, &b);

        let residual = op.apply(&sol.x).unwrap();
        let err = residual
            .iter()
            .zip(&b)
            .map(|(r, bi)| (r - bi) * (r - bi))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-8, "residual {err}");
        for (xi, ei) in sol.x.iter().zip(&expected) {
            assert!((xi - ei).abs() < 1e-7);
        }
    }

    #[test]
    fn cg_dimension_mismatch_is_error() {
        let err = conjugate_gradient(&Identity(3), &[1.0, 2.0], 5, 1e-8).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn cg_nonfinite_rhs_is_error() {
        let err = conjugate_gradient(&Identity(2), &[f64::NAN, 0.0], 5, 1e-8).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn fd_gradient_of_square() {
        let grad = finite_difference_gradient(|x| x[0] * x[0], &[1.0], 1e-5).unwrap();
        assert!((grad[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn fd_gradient_of_sine_at_zero() {
        let grad = finite_difference_gradient(|x| x[0].sin(), &[0.0], 1e-5).unwrap();
        assert!((grad[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fd_gradient_nonfinite_is_error() {
        let err = finite_difference_gradient(|x| (-x[0]).ln(), &[0.0], 1e-5).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn qp_projection_axis_aligned() {
        // KKT by hand: multiplier 0.5, first coordinate projected to the plane.
        let a = solve_qp_projection_oracle(&[0.5, 0.3], &[1.0, 0.0], 0.0, 0.0).unwrap();
        assert!((a[0] - 0.0).abs() < 1e-12);
        assert!((a[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn qp_projection_feasible_reference_unchanged() {
        let a_ref = [0.2, -0.4];
        let a = solve_qp_projection_oracle(&a_ref, &[1.0, 1.0], 0.0, 1.0).unwrap();
        assert_eq!(a, a_ref.to_vec());
    }

    #[test]
    fn qp_projection_onto_diagonal_plane() {
        let a = solve_qp_projection_oracle(&[2.0, 2.0], &[1.0, 1.0], 0.0, 1.0).unwrap();
        assert!((a[0] - 0.5).abs() < 1e-12);
        assert!((a[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn qp_projection_zero_gradient_is_error() {
        let err = solve_qp_projection_oracle(&[1.0], &[0.0], 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::ZeroGradient));
    }

    proptest! {
        #[test]
        fn cg_reaches_tolerance_within_n_iterations(seed in 0u64..500, n in 2usize..=20) {
            let mut rng = RngStream::new(seed);
            let a = random_spd(n, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let op = DenseOperator::new(n, a);
            // Exact-arithmetic CG terminates in n steps; allow a small slack
            // for floating point while keeping the residual bound tight.
            let sol = conjugate_gradient(&op, &b, n + 5, 1e-10).unwrap();
            let residual = op.apply(&sol.x).unwrap();
            let err = residual.iter().zip(&b).map(|(r, bi)| (r - bi) * (r - bi)).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-8, "residual {}", err);
        }

        #[test]
        fn qp_projection_satisfies_constraint_and_distance_bound(
            seed in 0u64..500,
            n in 1usize..=6,
            offset in -2.0f64..2.0,
            limit in -2.0f64..2.0,
        ) {
            let mut rng = RngStream::new(seed);
            let a_ref: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let mut g: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            if norm2(&g) < 1e-6 {
                g[0] += 1.0;
            }
            let a = solve_qp_projection_oracle(&a_ref, &g, offset, limit).unwrap();
            prop_assert!(dot(&g, &a) + offset <= limit + 1e-10);
            // Never farther from a_ref than a_ref's distance to the plane.
            let plane_dist = (dot(&g, &a_ref) + offset - limit).max(0.0) / norm2(&g);
            let moved = a.iter().zip(&a_ref).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            prop_assert!(moved <= plane_dist + 1e-10);
        }
    }
}
