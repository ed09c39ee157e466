//! Clipped stochastic extragradient and gradient descent-ascent loops, plus
//! their unclipped baselines (the same loops with the clip bypassed).

pub mod schedule;

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::oracle::{batch_mean, clip, NoiseModel};
use crate::problems::{evaluate, AffineProblem};
use crate::rng::{stream_id, substream};
use schedule::{ClipRule, Schedule, SegSchedule, SgdaSchedule};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClippedSeg,
    ClippedSgda,
    /// Unclipped extragradient baseline.
    Seg,
    /// Unclipped gradient descent-ascent baseline.
    Sgda,
}

impl Method {
    pub fn is_seg(self) -> bool {
        matches!(self, Method::ClippedSeg | Method::Seg)
    }

    pub fn is_clipped(self) -> bool {
        matches!(self, Method::ClippedSeg | Method::ClippedSgda)
    }
}

/// Recorded outcome of one solver run.
///
/// The averaged points and the squared-norm sum are accumulated online over
/// the iterates where steps were computed (k = 0..=K), so runs with very long
/// horizons can skip recording the full sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// x^0..x^{K+1} when recording was requested, empty otherwise.
    pub iterates: Vec<Vector>,
    /// Extrapolation points x~^0..x~^K (extragradient only, when recording).
    pub extrapolations: Vec<Vector>,
    /// Mean of the extrapolation points (extragradient only).
    pub avg_extrapolation: Option<Vector>,
    /// Mean of x^0..x^K.
    pub avg_iterate: Vector,
    /// Last iterate reached (x^{K+1} on a clean run).
    pub final_iterate: Vector,
    /// Sum over k = 0..=K of ||F(x^k)||^2.
    pub sq_norm_sum: f64,
    /// Number of iterations executed (K+1 on a clean run).
    pub steps_completed: usize,
    pub oracle_calls: u64,
    /// Set when a non-finite value appeared; the trajectory is truncated at
    /// the last finite iterate.
    pub diverged: bool,
}

impl Trajectory {
    /// (1/(K+1)) sum_{k=0}^{K} ||F(x^k)||^2 from the online accumulator.
    pub fn avg_sq_norm(&self) -> f64 {
        if self.steps_completed == 0 {
            return f64::NAN;
        }
        self.sq_norm_sum / self.steps_completed as f64
    }
}

fn apply_clip(y: Vector, level: Option<f64>) -> Vector {
    match level {
        None => y,
        Some(lambda) => clip(&y, lambda),
    }
}

pub struct SegStep {
    pub x_tilde: Vector,
    pub x_next: Vector,
    pub oracle_calls: u64,
}

/// One extragradient iteration:
/// x~ = x - gamma1 clip(batch_mean(x, m1(k)), lambda1(k)),
/// x+ = x - gamma2 clip(batch_mean(x~, m2(k)), lambda2(k)).
/// The two mini-batches draw from disjoint substreams of (seed, k).
pub fn seg_step(
    problem: &AffineProblem,
    model: &NoiseModel,
    x: &[f64],
    sched: &SegSchedule,
    k: usize,
    seed: u64,
) -> Result<SegStep> {
    let m1 = sched.m1.size(k);
    let m2 = sched.m2.size(k);
    let mut rng1 = substream(seed, &[stream_id::SOLVER_EXTRAPOLATION, k as u64]);
    let mut rng2 = substream(seed, &[stream_id::SOLVER_UPDATE, k as u64]);
    let g1 = apply_clip(batch_mean(problem, model, x, m1, &mut rng1)?, sched.lambda1.level(k));
    let x_tilde = linalg::axpy(x, -sched.gamma1, &g1);
    let g2 = apply_clip(
        batch_mean(problem, model, &x_tilde, m2, &mut rng2)?,
        sched.lambda2.level(k),
    );
    let x_next = linalg::axpy(x, -sched.gamma2, &g2);
    Ok(SegStep { x_tilde, x_next, oracle_calls: (m1 + m2) as u64 })
}

/// One descent-ascent iteration: x+ = x - gamma clip(batch_mean(x, m(k)), lambda(k)).
pub fn sgda_step(
    problem: &AffineProblem,
    model: &NoiseModel,
    x: &[f64],
    sched: &SgdaSchedule,
    k: usize,
    seed: u64,
) -> Result<(Vector, u64)> {
    let m = sched.m.size(k);
    let mut rng = substream(seed, &[stream_id::SOLVER_UPDATE, k as u64]);
    let g = apply_clip(batch_mean(problem, model, x, m, &mut rng)?, sched.lambda.level(k));
    Ok((linalg::axpy(x, -sched.gamma, &g), m as u64))
}

fn bypass(rule: &ClipRule, clipped: bool) -> ClipRule {
    if clipped {
        *rule
    } else {
        ClipRule::Unbounded
    }
}

/// Execute a full run. Divergence (any non-finite iterate) truncates the run
/// and sets the flag instead of failing.
pub fn run_solver(
    problem: &AffineProblem,
    model: &NoiseModel,
    method: Method,
    sched: &Schedule,
    x0: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    run_solver_with(problem, model, method, sched, x0, seed, true)
}

/// As `run_solver`, with control over whether full iterate sequences are kept.
pub fn run_solver_with(
    problem: &AffineProblem,
    model: &NoiseModel,
    method: Method,
    sched: &Schedule,
    x0: &[f64],
    seed: u64,
    record: bool,
) -> Result<Trajectory> {
    let d = problem.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    if !linalg::is_finite(x0) {
        return Err(Error::NonFinite("x0"));
    }
    match (method.is_seg(), sched) {
        (true, Schedule::Seg(s)) => {
            let mut s = s.clone();
            s.lambda1 = bypass(&s.lambda1, method.is_clipped());
            s.lambda2 = bypass(&s.lambda2, method.is_clipped());
            run_seg(problem, model, &s, x0, seed, record)
        }
        (false, Schedule::Sgda(s)) => {
            let mut s = s.clone();
            s.lambda = bypass(&s.lambda, method.is_clipped());
            run_sgda(problem, model, &s, x0, seed, record)
        }
        _ => Err(Error::Incompatible(format!("method {method:?} does not match the schedule family"))),
    }
}

fn run_seg(
    problem: &AffineProblem,
    model: &NoiseModel,
    sched: &SegSchedule,
    x0: &[f64],
    seed: u64,
    record: bool,
) -> Result<Trajectory> {
    let d = problem.dim();
    let mut x = x0.to_vec();
    let mut sum_x = vec![0.0; d];
    let mut sum_xt = vec![0.0; d];
    let mut sq_norm_sum = 0.0;
    let mut oracle_calls = 0u64;
    let mut steps = 0usize;
    let mut diverged = false;
    let mut iterates = Vec::new();
    let mut extrapolations = Vec::new();
    if record {
        iterates.push(x.clone());
    }
    for k in 0..sched.horizon {
        let fx = evaluate(problem, &x)?;
        sq_norm_sum += linalg::dot(&fx, &fx);
        for (s, v) in sum_x.iter_mut().zip(&x) {
            *s += v;
        }
        let step = seg_step(problem, model, &x, sched, k, seed)?;
        oracle_calls += step.oracle_calls;
        steps += 1;
        if !linalg::is_finite(&step.x_tilde) || !linalg::is_finite(&step.x_next) {
            diverged = true;
            break;
        }
        for (s, v) in sum_xt.iter_mut().zip(&step.x_tilde) {
            *s += v;
        }
        if record {
            extrapolations.push(step.x_tilde.clone());
            iterates.push(step.x_next.clone());
        }
        x = step.x_next;
    }
    let denom = steps as f64;
    Ok(Trajectory {
        iterates,
        extrapolations,
        avg_extrapolation: Some(linalg::scale(&sum_xt, 1.0 / denom)),
        avg_iterate: linalg::scale(&sum_x, 1.0 / denom),
        final_iterate: x,
        sq_norm_sum,
        steps_completed: steps,
        oracle_calls,
        diverged,
    })
}

fn run_sgda(
    problem: &AffineProblem,
    model: &NoiseModel,
    sched: &SgdaSchedule,
    x0: &[f64],
    seed: u64,
    record: bool,
) -> Result<Trajectory> {
    let d = problem.dim();
    let mut x = x0.to_vec();
    let mut sum_x = vec![0.0; d];
    let mut sq_norm_sum = 0.0;
    let mut oracle_calls = 0u64;
    let mut steps = 0usize;
    let mut diverged = false;
    let mut iterates = Vec::new();
    if record {
        iterates.push(x.clone());
    }
    for k in 0..sched.horizon {
        let fx = evaluate(problem, &x)?;
        sq_norm_sum += linalg::dot(&fx, &fx);
        for (s, v) in sum_x.iter_mut().zip(&x) {
            *s += v;
        }
        let (x_next, calls) = sgda_step(problem, model, &x, sched, k, seed)?;
        oracle_calls += calls;
        steps += 1;
        if !linalg::is_finite(&x_next) {
            diverged = true;
            break;
        }
        if record {
            iterates.push(x_next.clone());
        }
        x = x_next;
    }
    Ok(Trajectory {
        iterates,
        extrapolations: Vec::new(),
        avg_extrapolation: None,
        avg_iterate: linalg::scale(&sum_x, 1.0 / steps as f64),
        final_iterate: x,
        sq_norm_sum,
        steps_completed: steps,
        oracle_calls,
        diverged,
    })
}
