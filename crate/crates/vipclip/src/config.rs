//! Configuration files for the command-line tool: JSON schemas, validation,
//! and resolution into runnable experiment specs. Every number a schedule
//! needs is in the config, and the emitted report embeds the fully resolved
//! schedule so runs can be audited and replayed.

use crate::error::{Error, Result};
use crate::experiments::{ExperimentSpec, Metric};
use crate::linalg::{self, Vector};
use crate::oracle::NoiseModel;
use crate::problems::{
    make_bilinear, make_star_cocoercive, make_strongly_monotone, make_weak_minty, AffineProblem,
};
use crate::rng::point_on_sphere;
use crate::solvers::schedule::{
    build_seg_schedule, build_sgda_schedule, Case, CaseParams, Regime, Schedule,
};
use crate::solvers::Method;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Zoo constructor selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    StronglyMonotone { d: usize, mu: f64, big_l: f64, seed: u64 },
    Bilinear { d: usize, s: f64 },
    WeakMinty { eps: f64 },
    StarCocoercive { d: usize, ell: f64, min_eig: f64, seed: u64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<AffineProblem> {
        match *self {
            ProblemSpec::StronglyMonotone { d, mu, big_l, seed } => make_strongly_monotone(d, mu, big_l, seed),
            ProblemSpec::Bilinear { d, s } => make_bilinear(d, s),
            ProblemSpec::WeakMinty { eps } => make_weak_minty(eps),
            ProblemSpec::StarCocoercive { d, ell, min_eig, seed } => make_star_cocoercive(d, ell, min_eig, seed),
        }
    }
}

/// Starting point: either an explicit vector or a seeded point at a given
/// distance from the solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Spec {
    Point(Vector),
    Sphere { radius: f64, seed: u64 },
}

impl X0Spec {
    pub fn resolve(&self, problem: &AffineProblem) -> Result<Vector> {
        match self {
            X0Spec::Point(p) => {
                if p.len() != problem.dim() {
                    return Err(Error::DimensionMismatch { expected: problem.dim(), got: p.len() });
                }
                if !linalg::is_finite(p) {
                    return Err(Error::NonFinite("x0"));
                }
                Ok(p.clone())
            }
            X0Spec::Sphere { radius, seed } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::Config(format!("x0 radius must be positive, got {radius}")));
                }
                Ok(point_on_sphere(*seed, problem.solution(), *radius))
            }
        }
    }
}

/// Configuration of `run` and `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub noise: NoiseModel,
    pub method: Method,
    pub case: Case,
    pub regime: Regime,
    /// K: the run executes iterations k = 0..=K.
    pub iterations: usize,
    pub beta: f64,
    pub metric: Metric,
    pub x0: X0Spec,
    /// R; defaults to ||x0 - x*||.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_trajectory: bool,
    /// Worker threads for the seed fan-out; falls back to VIPCLIP_THREADS and
    /// then to the available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Build the problem, starting point, and schedule this config describes.
    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let problem = self.problem.build()?;
        let x0 = self.x0.resolve(&problem)?;
        let r0 = linalg::dist(&x0, problem.solution());
        let radius = self.radius.unwrap_or(r0);
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!(
                "R must be positive (got {radius}); pass an explicit radius when x0 = x*"
            )));
        }
        if radius < r0 * (1.0 - 1e-9) {
            return Err(Error::Config(format!("R = {radius} must dominate ||x0 - x*|| = {r0}")));
        }
        let smoothness = if self.case.is_seg() {
            problem.lipschitz()
        } else {
            problem.sc_ell().ok_or_else(|| {
                Error::Config(format!(
                    "case {:?} needs a star-cocoercivity constant, which {:?} does not certify",
                    self.case, self.problem
                ))
            })?
        };
        let params = CaseParams {
            smoothness,
            mu: problem.qsm_mu().unwrap_or(0.0),
            rho: problem.snc_rho().unwrap_or(0.0),
            radius,
            sigma: self.noise.sigma(),
            iterations: self.iterations,
            beta: self.beta,
        };
        let schedule = if self.case.is_seg() {
            Schedule::Seg(build_seg_schedule(self.case, self.regime, params)?)
        } else {
            Schedule::Sgda(build_sgda_schedule(self.case, self.regime, params)?)
        };
        Ok(ExperimentSpec {
            problem,
            noise: self.noise.clone(),
            method: self.method,
            schedule,
            x0,
            n_seeds: self.n_seeds,
            base_seed: self.base_seed,
            beta: self.beta,
            metric: self.metric,
            radius,
        })
    }

    /// Thread count: explicit config wins, then VIPCLIP_THREADS, then auto.
    pub fn effective_threads(&self) -> Option<usize> {
        self.threads.or_else(threads_from_env)
    }
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var("VIPCLIP_THREADS").ok().and_then(|v| v.parse().ok()).filter(|&n| n > 0)
}

/// Configuration of `tails`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsConfig {
    pub problem: ProblemSpec,
    pub noise: NoiseModel,
    /// Point at which noise norms are sampled.
    pub at: X0Spec,
    pub n_samples: usize,
    /// Mini-batch size m of each sampled estimate.
    pub batch: usize,
    pub seed: u64,
    pub n_bins: usize,
    pub output_dir: PathBuf,
}

/// Configuration of `estimator-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorCheckConfig {
    pub problem: ProblemSpec,
    pub noise: NoiseModel,
    pub at: X0Spec,
    pub batch: usize,
    pub lambda: f64,
    pub n_trials: usize,
    pub seed: u64,
}

/// Parse a JSON config file, keeping serde's line/column diagnostics.
pub fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn write_output(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content)?;
    Ok(())
}

/// report.json payload: the config echo plus everything needed for audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub problem: AffineProblem,
    pub schedule: Schedule,
    pub x0: Vector,
    pub radius: f64,
    pub bound: f64,
    pub success_fraction: f64,
    pub quantiles: Vec<(f64, f64)>,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub n_diverged: usize,
    pub oracle_calls_per_seed: u64,
    pub wall_time: f64,
}

/// tails.json payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailsReportDoc {
    pub config: TailsConfig,
    pub report: crate::tails::TailReport,
}
