//! Convergence metrics: the restricted gap function (maximized by projected
//! gradient ascent over the ball with a stationarity certificate, guarded by
//! a brute-force sampling oracle), the averaged squared operator norm, and
//! the squared distance to the solution.

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::problems::{evaluate, AffineProblem};
use crate::rng::{sample_in_ball, stream_id, substream};
use crate::solvers::Trajectory;
use serde::{Deserialize, Serialize};

pub const GAP_MAX_ITERS: usize = 100_000;

/// Result of the restricted-gap maximization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapResult {
    /// Gap estimate: <F(u*), x - u*> at the returned maximizer.
    pub value: f64,
    /// Point of the ball attaining `value`.
    pub maximizer: Vector,
    pub iterations_used: usize,
    /// Projected-gradient norm at the returned maximizer; a stationarity
    /// residual. Results with `certificate_gap > tol` after the full
    /// iteration budget must not be accepted silently.
    pub certificate_gap: f64,
}

impl GapResult {
    pub fn certified(&self, tol: f64) -> bool {
        self.certificate_gap <= tol
    }
}

/// Scale-aware default stationarity tolerance.
pub fn default_gap_tol(problem: &AffineProblem, x: &[f64], radius: f64) -> f64 {
    let d = linalg::dist(x, problem.solution());
    1e-8 * (1.0 + d * problem.lipschitz() * radius)
}

fn project_ball(u: &[f64], center: &[f64], radius: f64) -> Vector {
    let diff = linalg::sub(u, center);
    let n = linalg::norm(&diff);
    if n <= radius {
        u.to_vec()
    } else {
        linalg::axpy(center, radius / n, &diff)
    }
}

/// Objective g(u) = <Au + b, x - u>.
fn gap_objective(problem: &AffineProblem, x: &[f64], u: &[f64]) -> f64 {
    let fu = linalg::add(&problem.matrix().matvec(u), problem.offset());
    linalg::dot(&fu, &linalg::sub(x, u))
}

/// grad g(u) = A^T (x - u) - (A u + b).
fn gap_gradient(problem: &AffineProblem, x: &[f64], u: &[f64]) -> Vector {
    let at = problem.matrix().matvec_transpose(&linalg::sub(x, u));
    let fu = linalg::add(&problem.matrix().matvec(u), problem.offset());
    linalg::sub(&at, &fu)
}

/// Gap_R(x) = max over u in B_R(x*) of <F(u), x - u>, for monotone problems.
///
/// Projected gradient ascent from u = x* with stepsize 1/Lambda,
/// Lambda = lambda_max(A + A^T) + ||A|| + 1 (the objective is concave exactly
/// when the problem is monotone, so ascent converges globally). On
/// termination the best of the PGA point and the closed-form candidates is
/// returned, and the certificate is the projected-gradient norm at that
/// returned point.
pub fn gap_restricted(problem: &AffineProblem, x: &[f64], radius: f64, tol: f64) -> Result<GapResult> {
    let d = problem.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if !linalg::is_finite(x) {
        return Err(Error::NonFinite("gap evaluation point"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let sym = problem.matrix().symmetric_part();
    let sym_min = sym.sym_eig_min();
    if sym_min < -1e-10 {
        return Err(Error::NonMonotone(sym_min));
    }
    let star = problem.solution();
    let big_lambda = (2.0 * sym.sym_eig_max()).max(0.0) + problem.lipschitz() + 1.0;
    let step = 1.0 / big_lambda;

    let mut u = star.to_vec();
    let mut iterations = 0usize;
    while iterations < GAP_MAX_ITERS {
        let grad = gap_gradient(problem, x, &u);
        let u_plus = project_ball(&linalg::axpy(&u, step, &grad), star, radius);
        let residual = big_lambda * linalg::dist(&u, &u_plus);
        u = u_plus;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }

    // Candidate hardening: x* itself, the projected unconstrained maximizer
    // (the "x/2" point for the identity operator), and the boundary point in
    // the ascent direction from x*. All are feasible, so taking the best one
    // can only tighten the lower bound the maximizer provides.
    let mut candidates = vec![u.clone(), star.to_vec()];
    if let Some(unconstrained) = unconstrained_maximizer(problem, x) {
        candidates.push(project_ball(&unconstrained, star, radius));
    }
    let g0 = gap_gradient(problem, x, star);
    let g0_norm = linalg::norm(&g0);
    if g0_norm > 0.0 {
        candidates.push(linalg::axpy(star, radius / g0_norm, &g0));
    }
    let (best, value) = candidates
        .into_iter()
        .map(|c| {
            let v = gap_objective(problem, x, &c);
            (c, v)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();

    let grad = gap_gradient(problem, x, &best);
    let next = project_ball(&linalg::axpy(&best, step, &grad), star, radius);
    let certificate_gap = big_lambda * linalg::dist(&best, &next);

    // F(u) recomputed at the maximizer; `value` already is exactly this inner
    // product, and u = x* guarantees value >= 0 up to rounding.
    let value = value.max(gap_objective(problem, x, star));
    Ok(GapResult { value, maximizer: best, iterations_used: iterations, certificate_gap })
}

/// Unconstrained stationary point: (A + A^T) u = A^T x - b, when solvable.
fn unconstrained_maximizer(problem: &AffineProblem, x: &[f64]) -> Option<Vector> {
    let d = problem.dim();
    let mut hess = linalg::Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            hess.set(i, j, problem.matrix().get(i, j) + problem.matrix().get(j, i));
        }
    }
    let rhs = linalg::sub(&problem.matrix().matvec_transpose(x), problem.offset());
    hess.solve(&rhs, 1e-10)
}

/// Sampling lower bound on Gap_R(x): the best objective value over uniform
/// ball samples plus the closed-form candidates. Converges to the gap from
/// below as the sample count grows; intended for small dimensions.
pub fn gap_bruteforce(problem: &AffineProblem, x: &[f64], radius: f64, n_samples: usize, seed: u64) -> Result<f64> {
    let d = problem.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let star = problem.solution();
    let mut best = gap_objective(problem, x, star);
    if let Some(unconstrained) = unconstrained_maximizer(problem, x) {
        best = best.max(gap_objective(problem, x, &project_ball(&unconstrained, star, radius)));
    }
    let g0 = gap_gradient(problem, x, star);
    let g0_norm = linalg::norm(&g0);
    if g0_norm > 0.0 {
        let boundary = linalg::axpy(star, radius / g0_norm, &g0);
        best = best.max(gap_objective(problem, x, &boundary));
    }
    let mut rng = substream(seed, &[stream_id::GAP_BRUTEFORCE]);
    for _ in 0..n_samples {
        let u = sample_in_ball(&mut rng, star, radius);
        best = best.max(gap_objective(problem, x, &u));
    }
    Ok(best)
}

/// Mean of ||F(x)||^2 over the given points.
pub fn avg_sq_operator_norm_over(problem: &AffineProblem, points: &[Vector]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let mut sum = 0.0;
    for p in points {
        let f = evaluate(problem, p)?;
        sum += linalg::dot(&f, &f);
    }
    Ok(sum / points.len() as f64)
}

/// Mean of ||F(x^k)||^2 over a recorded trajectory's iterates.
pub fn avg_sq_operator_norm(trajectory: &Trajectory, problem: &AffineProblem) -> Result<f64> {
    avg_sq_operator_norm_over(problem, &trajectory.iterates)
}

/// ||x - x*||^2.
pub fn dist_sq(x: &[f64], problem: &AffineProblem) -> Result<f64> {
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: x.len() });
    }
    let diff = linalg::sub(x, problem.solution());
    Ok(linalg::dot(&diff, &diff))
}
