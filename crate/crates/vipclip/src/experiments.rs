//! Monte-Carlo high-probability verification: fan a configuration out over
//! seeds, compute the case-appropriate metric per seed, and compare the
//! empirical success frequency against the guaranteed bound at confidence
//! level 1 - beta.

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::metrics::{self, default_gap_tol};
use crate::oracle::NoiseModel;
use crate::problems::AffineProblem;
use crate::solvers::schedule::{theoretical_bound, Case, Schedule};
use crate::solvers::{run_solver_with, Method, Trajectory};
use crate::tails::empirical_quantile;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which convergence measure a run is judged by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Restricted gap at the averaged extrapolation (extragradient) or the
    /// averaged iterate (descent-ascent).
    Gap,
    /// (1/(K+1)) sum ||F(x^k)||^2 over the trajectory.
    AvgSqNorm,
    /// ||x^{K+1} - x*||^2.
    DistSq,
}

impl Metric {
    /// Table pairing of metric and convergence case.
    pub fn compatible_with(self, case: Case) -> bool {
        matches!(
            (self, case),
            (Metric::Gap, Case::Monotone | Case::MonotoneSc)
                | (Metric::AvgSqNorm, Case::WeakMinty | Case::Sc)
                | (Metric::DistSq, Case::Qsm | Case::QsmSc)
        )
    }
}

/// Everything a verification experiment needs, resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: AffineProblem,
    pub noise: NoiseModel,
    pub method: Method,
    pub schedule: Schedule,
    pub x0: Vector,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub beta: f64,
    pub metric: Metric,
    /// R: must dominate ||x0 - x*||.
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub per_seed_metric: Vec<f64>,
    pub per_seed_diverged: Vec<bool>,
    /// Guaranteed bound; infinite when the schedule carries no case.
    pub bound: f64,
    /// Fraction of seeds with a finite metric at or below the bound.
    pub success_fraction: f64,
    /// (q, value) at q = 0.5, 0.9, and 1 - beta.
    pub quantiles: Vec<(f64, f64)>,
    pub n_diverged: usize,
    pub oracle_calls_per_seed: u64,
    /// Seconds; excluded from the determinism contract.
    pub wall_time: f64,
}

/// Fraction of finite values at or below the bound (non-finite values,
/// including diverged runs, count as failures).
pub fn success_fraction(values: &[f64], bound: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let ok = values.iter().filter(|v| v.is_finite() && **v <= bound).count();
    ok as f64 / values.len() as f64
}

fn validate(spec: &ExperimentSpec) -> Result<()> {
    if spec.n_seeds == 0 {
        return Err(Error::InvalidParameter("n_seeds must be at least 1".into()));
    }
    if !(spec.beta > 0.0 && spec.beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1], got {}", spec.beta)));
    }
    if spec.x0.len() != spec.problem.dim() {
        return Err(Error::DimensionMismatch { expected: spec.problem.dim(), got: spec.x0.len() });
    }
    let r0 = linalg::dist(&spec.x0, spec.problem.solution());
    if spec.radius < r0 * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "R = {} must dominate ||x0 - x*|| = {r0}",
            spec.radius
        )));
    }
    if spec.method.is_seg() != matches!(spec.schedule, Schedule::Seg(_)) {
        return Err(Error::Incompatible(format!(
            "method {:?} does not match the schedule family",
            spec.method
        )));
    }
    if let Some(p) = spec.schedule.provenance() {
        if !spec.metric.compatible_with(p.case) {
            return Err(Error::Incompatible(format!(
                "metric {:?} is not the guaranteed metric for case {:?}",
                spec.metric, p.case
            )));
        }
    }
    Ok(())
}

fn seed_metric(spec: &ExperimentSpec, traj: &Trajectory) -> f64 {
    if traj.diverged {
        return f64::NAN;
    }
    match spec.metric {
        Metric::DistSq => metrics::dist_sq(&traj.final_iterate, &spec.problem).unwrap_or(f64::NAN),
        Metric::AvgSqNorm => traj.avg_sq_norm(),
        Metric::Gap => {
            let point = if spec.method.is_seg() {
                traj.avg_extrapolation.as_ref().unwrap_or(&traj.avg_iterate)
            } else {
                &traj.avg_iterate
            };
            let tol = default_gap_tol(&spec.problem, point, spec.radius);
            match metrics::gap_restricted(&spec.problem, point, spec.radius, tol) {
                // A maximizer that exhausted its budget without certifying
                // stationarity is never accepted silently: the seed fails.
                Ok(g) if g.certified(tol) => g.value,
                _ => f64::NAN,
            }
        }
    }
}

/// Run the full seed fan-out. Seeds base_seed..base_seed+n_seeds-1 execute
/// independently (in parallel; per-seed streams make the result a pure
/// function of the spec), then the report is a deterministic reduction.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    validate(spec)?;
    let started = std::time::Instant::now();
    let outcomes: Vec<(f64, bool, u64)> = (0..spec.n_seeds)
        .into_par_iter()
        .map(|i| {
            let seed = spec.base_seed.wrapping_add(i as u64);
            let traj = run_solver_with(
                &spec.problem,
                &spec.noise,
                spec.method,
                &spec.schedule,
                &spec.x0,
                seed,
                false,
            )?;
            Ok((seed_metric(spec, &traj), traj.diverged, traj.oracle_calls))
        })
        .collect::<Result<_>>()?;

    let per_seed_metric: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let per_seed_diverged: Vec<bool> = outcomes.iter().map(|o| o.1).collect();
    let n_diverged = per_seed_diverged.iter().filter(|d| **d).count();
    let bound = match spec.schedule.provenance() {
        Some(p) => theoretical_bound(
            spec.method,
            p.case,
            &spec.schedule,
            spec.radius,
            spec.schedule.horizon().saturating_sub(1),
        )?,
        None => f64::INFINITY,
    };
    let quantiles = [0.5, 0.9, 1.0 - spec.beta]
        .iter()
        .map(|&q| Ok((q, empirical_quantile(&per_seed_metric, q)?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        success_fraction: success_fraction(&per_seed_metric, bound),
        per_seed_metric,
        per_seed_diverged,
        bound,
        quantiles,
        n_diverged,
        oracle_calls_per_seed: spec.schedule.oracle_calls(),
        wall_time: started.elapsed().as_secs_f64(),
    })
}

impl ExperimentReport {
    /// CSV with header `seed,metric_value,diverged,oracle_calls`.
    pub fn to_per_seed_csv(&self, base_seed: u64) -> String {
        let mut out = String::from("seed,metric_value,diverged,oracle_calls\n");
        for (i, (m, d)) in self.per_seed_metric.iter().zip(&self.per_seed_diverged).enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                base_seed.wrapping_add(i as u64),
                crate::fmt_g17(*m),
                d,
                self.oracle_calls_per_seed
            ));
        }
        out
    }
}

/// Anytime curves for plotting: one row per (seed, k) with the metric
/// evaluated on the prefix ending at iteration k (the distance after the
/// k-th step, the running mean of squared operator norms, or the gap at the
/// running averaged point). These carry no per-iteration guarantee; the
/// bounds hold for the K each schedule was built for.
pub fn trajectory_csv(spec: &ExperimentSpec) -> Result<String> {
    validate(spec)?;
    let mut out = String::from("seed,k,metric_value\n");
    for i in 0..spec.n_seeds {
        let seed = spec.base_seed.wrapping_add(i as u64);
        let traj = run_solver_with(
            &spec.problem,
            &spec.noise,
            spec.method,
            &spec.schedule,
            &spec.x0,
            seed,
            true,
        )?;
        let values = per_iteration_metric(spec, &traj)?;
        for (k, v) in values.iter().enumerate() {
            out.push_str(&format!("{seed},{k},{}\n", crate::fmt_g17(*v)));
        }
    }
    Ok(out)
}

fn per_iteration_metric(spec: &ExperimentSpec, traj: &Trajectory) -> Result<Vec<f64>> {
    let steps = traj.steps_completed;
    let mut values = Vec::with_capacity(steps);
    match spec.metric {
        Metric::DistSq => {
            for k in 0..steps {
                let v = traj
                    .iterates
                    .get(k + 1)
                    .map(|x| metrics::dist_sq(x, &spec.problem).unwrap_or(f64::NAN))
                    .unwrap_or(f64::NAN);
                values.push(v);
            }
        }
        Metric::AvgSqNorm => {
            let mut sum = 0.0;
            for k in 0..steps {
                let f = crate::problems::evaluate(&spec.problem, &traj.iterates[k])?;
                sum += linalg::dot(&f, &f);
                values.push(sum / (k as f64 + 1.0));
            }
        }
        Metric::Gap => {
            let points = if spec.method.is_seg() { &traj.extrapolations } else { &traj.iterates };
            let d = spec.problem.dim();
            let mut running = vec![0.0; d];
            for k in 0..steps.min(points.len()) {
                for (s, v) in running.iter_mut().zip(&points[k]) {
                    *s += v;
                }
                let avg = linalg::scale(&running, 1.0 / (k as f64 + 1.0));
                let tol = default_gap_tol(&spec.problem, &avg, spec.radius);
                let v = match metrics::gap_restricted(&spec.problem, &avg, spec.radius, tol) {
                    Ok(g) if g.certified(tol) => g.value,
                    _ => f64::NAN,
                };
                values.push(v);
            }
        }
    }
    Ok(values)
}

/// Paired comparison of two specs under equal oracle budgets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodComparison {
    pub median_a: f64,
    pub median_b: f64,
    pub n_diverged_a: usize,
    pub n_diverged_b: usize,
}

/// Compare final metrics of two configurations sharing problem, noise,
/// starting point, metric, seed set, and total oracle budget.
pub fn compare_methods(a: &ExperimentSpec, b: &ExperimentSpec) -> Result<MethodComparison> {
    if a.problem != b.problem {
        return Err(Error::Incompatible("compared specs must share the problem".into()));
    }
    if a.noise != b.noise {
        return Err(Error::Incompatible("compared specs must share the noise model".into()));
    }
    if a.x0 != b.x0 {
        return Err(Error::Incompatible("compared specs must share x0".into()));
    }
    if a.metric != b.metric {
        return Err(Error::Incompatible("compared specs must share the metric".into()));
    }
    if (a.n_seeds, a.base_seed) != (b.n_seeds, b.base_seed) {
        return Err(Error::Incompatible("compared specs must share the seed set".into()));
    }
    let (budget_a, budget_b) = (a.schedule.oracle_calls(), b.schedule.oracle_calls());
    if budget_a != budget_b {
        return Err(Error::Incompatible(format!(
            "oracle budgets differ: {budget_a} vs {budget_b}"
        )));
    }
    let ra = run_experiment(a)?;
    let rb = run_experiment(b)?;
    Ok(MethodComparison {
        median_a: empirical_quantile(&ra.per_seed_metric, 0.5)?,
        median_b: empirical_quantile(&rb.per_seed_metric, 0.5)?,
        n_diverged_a: ra.n_diverged,
        n_diverged_b: rb.n_diverged,
    })
}
