//! Stepsize, clipping-level, and batch-size schedules for every supported
//! convergence case, in both the large-step/large-batch and the
//! small-step/small-batch regimes, together with the guaranteed bounds they
//! come with.
//!
//! All numerical constants here are the constant-explicit forms of the
//! guarantees (160, 650, 10800, 264600, ... for the extragradient cases; 170,
//! 400, 97200, 27000, ... for the descent-ascent cases), with the confidence
//! factor A = ln(c (K+1) / beta) for c = 6 or 4 depending on the case.

use super::Method;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Convergence case. The first three drive the extragradient schedules, the
/// last three the descent-ascent schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// Monotone + Lipschitz; metric: restricted gap at the averaged extrapolation.
    Monotone,
    /// Star-negatively comonotone + Lipschitz; metric: averaged squared operator norm.
    WeakMinty,
    /// Quasi-strongly monotone + Lipschitz; metric: squared distance at the last iterate.
    Qsm,
    /// Monotone + star-cocoercive; metric: restricted gap at the averaged iterate.
    MonotoneSc,
    /// Star-cocoercive; metric: averaged squared operator norm.
    Sc,
    /// Quasi-strongly monotone + star-cocoercive; metric: squared distance.
    QsmSc,
}

impl Case {
    pub fn is_seg(self) -> bool {
        matches!(self, Case::Monotone | Case::WeakMinty | Case::Qsm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Stepsize at its ceiling, batch sizes grow with K.
    LargeStep,
    /// Stepsize shrunk so that batch size 1 satisfies the batch condition.
    SmallStep,
}

/// Per-iteration clipping level, as a closed-form descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClipRule {
    /// No clipping (the unclipped baselines). Implemented as a clip bypass
    /// rather than a large float, so divergence demos cannot overflow through
    /// the clip scaling.
    Unbounded,
    Constant { level: f64 },
    /// level_k = base * exp(-rate * k)
    ExpDecay { base: f64, rate: f64 },
}

impl ClipRule {
    /// Clipping level at iteration k; None means no clipping.
    pub fn level(&self, k: usize) -> Option<f64> {
        match *self {
            ClipRule::Unbounded => None,
            ClipRule::Constant { level } => Some(level),
            ClipRule::ExpDecay { base, rate } => Some(base * (-rate * k as f64).exp()),
        }
    }
}

/// Per-iteration batch size, as a closed-form descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BatchRule {
    Constant { size: usize },
    /// size_k = max(1, ceil(coeff * exp(rate * k)))
    ExpGrowth { coeff: f64, rate: f64 },
}

impl BatchRule {
    pub fn size(&self, k: usize) -> usize {
        match *self {
            BatchRule::Constant { size } => size.max(1),
            BatchRule::ExpGrowth { coeff, rate } => {
                let m = (coeff * (rate * k as f64).exp()).ceil();
                if m <= 1.0 {
                    1
                } else {
                    m as usize
                }
            }
        }
    }
}

/// Problem- and run-level quantities a schedule is built from. `smoothness`
/// is the Lipschitz constant L for the extragradient cases and the
/// star-cocoercivity constant ell for the descent-ascent cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    pub smoothness: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub rho: f64,
    pub radius: f64,
    pub sigma: f64,
    /// K: schedules cover iterations k = 0..=K.
    pub iterations: usize,
    pub beta: f64,
}

/// Provenance of a built schedule, kept for bound recomputation and audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleProvenance {
    pub case: Case,
    pub regime: Regime,
    pub params: CaseParams,
}

/// Extragradient schedule: extrapolation stepsize gamma1, update stepsize
/// gamma2, per-iteration clipping levels and batch sizes for both
/// half-steps, over `horizon` = K+1 iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegSchedule {
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda1: ClipRule,
    pub lambda2: ClipRule,
    pub m1: BatchRule,
    pub m2: BatchRule,
    pub horizon: usize,
    pub log_factor: f64,
    pub provenance: Option<ScheduleProvenance>,
}

impl SegSchedule {
    /// Hand-made schedule with equal stepsizes and iteration-independent
    /// clipping and batching (used for baselines and comparisons).
    pub fn uniform(gamma: f64, lambda: ClipRule, m: usize, horizon: usize) -> Self {
        SegSchedule {
            gamma1: gamma,
            gamma2: gamma,
            lambda1: lambda,
            lambda2: lambda,
            m1: BatchRule::Constant { size: m },
            m2: BatchRule::Constant { size: m },
            horizon,
            log_factor: 1.0,
            provenance: None,
        }
    }

    /// Total oracle calls over the horizon.
    pub fn oracle_calls(&self) -> u64 {
        (0..self.horizon)
            .map(|k| self.m1.size(k) as u64 + self.m2.size(k) as u64)
            .sum()
    }
}

/// Descent-ascent schedule over `horizon` = K+1 iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdaSchedule {
    pub gamma: f64,
    pub lambda: ClipRule,
    pub m: BatchRule,
    pub horizon: usize,
    pub log_factor: f64,
    pub provenance: Option<ScheduleProvenance>,
}

impl SgdaSchedule {
    pub fn uniform(gamma: f64, lambda: ClipRule, m: usize, horizon: usize) -> Self {
        SgdaSchedule {
            gamma,
            lambda,
            m: BatchRule::Constant { size: m },
            horizon,
            log_factor: 1.0,
            provenance: None,
        }
    }

    pub fn oracle_calls(&self) -> u64 {
        (0..self.horizon).map(|k| self.m.size(k) as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Schedule {
    Seg(SegSchedule),
    Sgda(SgdaSchedule),
}

impl Schedule {
    pub fn horizon(&self) -> usize {
        match self {
            Schedule::Seg(s) => s.horizon,
            Schedule::Sgda(s) => s.horizon,
        }
    }

    pub fn oracle_calls(&self) -> u64 {
        match self {
            Schedule::Seg(s) => s.oracle_calls(),
            Schedule::Sgda(s) => s.oracle_calls(),
        }
    }

    pub fn provenance(&self) -> Option<&ScheduleProvenance> {
        match self {
            Schedule::Seg(s) => s.provenance.as_ref(),
            Schedule::Sgda(s) => s.provenance.as_ref(),
        }
    }
}

fn validate_common(p: &CaseParams) -> Result<()> {
    if !(p.smoothness > 0.0) || !p.smoothness.is_finite() {
        return Err(Error::SchedulePrecondition(format!(
            "smoothness constant must be positive, got {}",
            p.smoothness
        )));
    }
    if !(p.radius > 0.0) || !p.radius.is_finite() {
        return Err(Error::SchedulePrecondition(format!("R must be positive, got {}", p.radius)));
    }
    if !(p.sigma >= 0.0) || !p.sigma.is_finite() {
        return Err(Error::SchedulePrecondition(format!("sigma must be nonnegative, got {}", p.sigma)));
    }
    if !(p.beta > 0.0 && p.beta <= 1.0) {
        return Err(Error::SchedulePrecondition(format!("beta must lie in (0, 1], got {}", p.beta)));
    }
    Ok(())
}

/// A = ln(c (K+1) / beta); the analysis requires A >= 1.
fn log_factor(c: f64, iterations: usize, beta: f64) -> Result<f64> {
    let a = (c * (iterations as f64 + 1.0) / beta).ln();
    if !(a >= 1.0) {
        return Err(Error::SchedulePrecondition(format!(
            "confidence factor ln({c}(K+1)/beta) = {a:.6} < 1: decrease beta or increase K"
        )));
    }
    Ok(a)
}

fn checked_batch(m_real: f64) -> Result<usize> {
    if !m_real.is_finite() || m_real > 1e15 {
        return Err(Error::SchedulePrecondition(format!(
            "batch size formula evaluates to {m_real:e}; parameters demand infeasible batches"
        )));
    }
    Ok((m_real.ceil() as usize).max(1))
}

/// Build the extragradient schedule for the given case and regime.
pub fn build_seg_schedule(case: Case, regime: Regime, params: CaseParams) -> Result<SegSchedule> {
    if !case.is_seg() {
        return Err(Error::Incompatible(format!(
            "{case:?} is a descent-ascent case; use build_sgda_schedule"
        )));
    }
    validate_common(&params)?;
    let CaseParams { smoothness: l, mu, rho, radius: r, sigma, iterations: k, beta } = params;
    let kp1 = k as f64 + 1.0;
    let a = log_factor(6.0, k, beta)?;
    let provenance = Some(ScheduleProvenance { case, regime, params });

    match case {
        Case::Monotone => {
            let gamma_cap = 1.0 / (160.0 * l * a);
            let (gamma, m) = match regime {
                Regime::LargeStep => {
                    let m = checked_batch(27.0 * kp1 * sigma * sigma / (64.0 * l * l * r * r * a))?;
                    (gamma_cap, m)
                }
                Regime::SmallStep => {
                    let noise_arm = if sigma > 0.0 {
                        r / (60.0 * sigma * (3.0 * kp1 * a).sqrt())
                    } else {
                        f64::INFINITY
                    };
                    (gamma_cap.min(noise_arm), 1)
                }
            };
            let lambda = r / (20.0 * gamma * a);
            Ok(SegSchedule {
                gamma1: gamma,
                gamma2: gamma,
                lambda1: ClipRule::Constant { level: lambda },
                lambda2: ClipRule::Constant { level: lambda },
                m1: BatchRule::Constant { size: m },
                m2: BatchRule::Constant { size: m },
                horizon: k + 1,
                log_factor: a,
                provenance,
            })
        }
        Case::WeakMinty => {
            // The analysis provides no small-batch schedule in this case (the
            // extrapolation batch must grow with K), so only the large-batch
            // regime is constructible.
            if regime == Regime::SmallStep {
                return Err(Error::SchedulePrecondition(
                    "no small-step/small-batch schedule exists for the weak-Minty case".into(),
                ));
            }
            let rho_cap = 1.0 / (640.0 * l * a);
            if rho > rho_cap {
                return Err(Error::SchedulePrecondition(format!(
                    "weak-Minty schedule requires rho <= 1/(640 L A) = {rho_cap:e}, got rho = {rho:e}"
                )));
            }
            let gamma1 = 1.0 / (160.0 * l * a);
            let gamma2 = gamma1 / 2.0;
            debug_assert!(gamma2 + 2.0 * rho <= gamma1 * (1.0 + 1e-12));
            let m = checked_batch(81.0 * kp1 * sigma * sigma / (640.0 * l * l * r * r * a))?;
            Ok(SegSchedule {
                gamma1,
                gamma2,
                lambda1: ClipRule::Constant { level: r / (20.0 * gamma1 * a) },
                lambda2: ClipRule::Constant { level: r / (20.0 * gamma2 * a) },
                m1: BatchRule::Constant { size: m },
                m2: BatchRule::Constant { size: m },
                horizon: k + 1,
                log_factor: a,
                provenance,
            })
        }
        Case::Qsm => {
            if !(mu > 0.0) {
                return Err(Error::SchedulePrecondition(format!(
                    "quasi-strongly monotone schedule requires mu > 0, got {mu}"
                )));
            }
            let gamma_cap = 1.0 / (650.0 * l * a);
            let gamma = match regime {
                Regime::LargeStep => gamma_cap,
                Regime::SmallStep => {
                    if sigma > 0.0 {
                        let bk = solve_bk_fixed_point(&BkParams {
                            mu,
                            radius: r,
                            sigma,
                            iterations: k,
                            beta,
                            log_arg_constant: 6.0,
                            denom_constant: 264_600.0,
                        })?;
                        gamma_cap.min(bk.ln() / (mu * kp1))
                    } else {
                        gamma_cap
                    }
                }
            };
            let lambda_base = (-gamma * mu).exp() * r / (120.0 * gamma * a);
            let m = match regime {
                Regime::LargeStep => {
                    let coeff = 264_600.0 * gamma * gamma * kp1 * sigma * sigma * a / (r * r);
                    checked_batch(coeff * (gamma * mu * k as f64).exp())?; // feasibility at k = K
                    BatchRule::ExpGrowth { coeff, rate: gamma * mu }
                }
                Regime::SmallStep => BatchRule::Constant { size: 1 },
            };
            Ok(SegSchedule {
                gamma1: gamma,
                gamma2: gamma,
                lambda1: ClipRule::ExpDecay { base: lambda_base, rate: gamma * mu / 2.0 },
                lambda2: ClipRule::ExpDecay { base: lambda_base, rate: gamma * mu / 2.0 },
                m1: m,
                m2: m,
                horizon: k + 1,
                log_factor: a,
                provenance,
            })
        }
        _ => unreachable!(),
    }
}

/// Build the descent-ascent schedule for the given case and regime.
pub fn build_sgda_schedule(case: Case, regime: Regime, params: CaseParams) -> Result<SgdaSchedule> {
    if case.is_seg() {
        return Err(Error::Incompatible(format!(
            "{case:?} is an extragradient case; use build_seg_schedule"
        )));
    }
    validate_common(&params)?;
    let CaseParams { smoothness: ell, mu, radius: r, sigma, iterations: k, beta, .. } = params;
    let kp1 = k as f64 + 1.0;
    let provenance = Some(ScheduleProvenance { case, regime, params });

    match case {
        Case::MonotoneSc | Case::Sc => {
            let a = log_factor(if case == Case::MonotoneSc { 6.0 } else { 4.0 }, k, beta)?;
            let gamma_cap = 1.0 / (170.0 * ell * a);
            let (gamma, m) = match regime {
                Regime::LargeStep => {
                    let m = checked_batch(972.0 * kp1 * sigma * sigma / (289.0 * ell * ell * r * r * a))?;
                    (gamma_cap, m)
                }
                Regime::SmallStep => {
                    let noise_arm = if sigma > 0.0 {
                        r / (180.0 * sigma * (3.0 * kp1 * a).sqrt())
                    } else {
                        f64::INFINITY
                    };
                    (gamma_cap.min(noise_arm), 1)
                }
            };
            Ok(SgdaSchedule {
                gamma,
                lambda: ClipRule::Constant { level: r / (60.0 * gamma * a) },
                m: BatchRule::Constant { size: m },
                horizon: k + 1,
                log_factor: a,
                provenance,
            })
        }
        Case::QsmSc => {
            if !(mu > 0.0) {
                return Err(Error::SchedulePrecondition(format!(
                    "quasi-strongly monotone schedule requires mu > 0, got {mu}"
                )));
            }
            let a = log_factor(4.0, k, beta)?;
            let gamma_cap = 1.0 / (400.0 * ell * a);
            let gamma = match regime {
                Regime::LargeStep => gamma_cap,
                Regime::SmallStep => {
                    if sigma > 0.0 {
                        let bk = solve_bk_fixed_point(&BkParams {
                            mu,
                            radius: r,
                            sigma,
                            iterations: k,
                            beta,
                            log_arg_constant: 4.0,
                            denom_constant: 27_000.0,
                        })?;
                        gamma_cap.min(bk.ln() / (mu * kp1))
                    } else {
                        gamma_cap
                    }
                }
            };
            let lambda_base = (-gamma * mu).exp() * r / (120.0 * gamma * a);
            let m = match regime {
                Regime::LargeStep => {
                    let coeff = 27_000.0 * gamma * gamma * kp1 * sigma * sigma * a / (r * r);
                    checked_batch(coeff * (gamma * mu * k as f64).exp())?;
                    BatchRule::ExpGrowth { coeff, rate: gamma * mu }
                }
                Regime::SmallStep => BatchRule::Constant { size: 1 },
            };
            Ok(SgdaSchedule {
                gamma,
                lambda: ClipRule::ExpDecay { base: lambda_base, rate: gamma * mu / 2.0 },
                m,
                horizon: k + 1,
                log_factor: a,
                provenance,
            })
        }
        _ => unreachable!(),
    }
}

/// Inputs of the small-step fixed-point quantity B_K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkParams {
    pub mu: f64,
    pub radius: f64,
    pub sigma: f64,
    pub iterations: usize,
    pub beta: f64,
    /// 6 for the extragradient case, 4 for the descent-ascent case.
    pub log_arg_constant: f64,
    /// 264600 for the extragradient case, 27000 for the descent-ascent case.
    pub denom_constant: f64,
}

/// Solve B = max{2, C / ln^2(B)} with
/// C = (K+1) mu^2 R^2 / (denom * sigma^2 * ln(c(K+1)/beta)).
///
/// Fixed-point iteration from B = 2. The plain map oscillates for mid-range C
/// (it is only a contraction once ln(B) > 2), so each update is damped in log
/// space, which keeps the same fixed points and contracts for every C.
pub fn solve_bk_fixed_point(params: &BkParams) -> Result<f64> {
    let BkParams { mu, radius, sigma, iterations, beta, log_arg_constant, denom_constant } = *params;
    if !(sigma > 0.0) {
        return Err(Error::SchedulePrecondition(
            "B_K is only defined for sigma > 0 (otherwise the stepsize falls back to the smoothness term)".into(),
        ));
    }
    let a = (log_arg_constant * (iterations as f64 + 1.0) / beta).ln();
    let c = (iterations as f64 + 1.0) * mu * mu * radius * radius / (denom_constant * sigma * sigma * a);
    if !c.is_finite() || !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("B_K map coefficient is not finite (C = {c:e})")));
    }
    const DAMPING: f64 = 0.4;
    let mut b: f64 = 2.0;
    for _ in 0..100 {
        let f = (c / b.ln().powi(2)).max(2.0);
        let next = ((1.0 - DAMPING) * b.ln() + DAMPING * f.ln()).exp();
        if (next - b).abs() <= 1e-9 * b {
            return Ok(next.max(2.0));
        }
        b = next;
    }
    Err(Error::FixedPointStalled { max_iters: 100, last: b })
}

/// Right-hand side of the high-probability guarantee for the given method and
/// case, evaluated at horizon K: the scalar the per-seed metric is compared
/// against.
pub fn theoretical_bound(
    method: Method,
    case: Case,
    schedule: &Schedule,
    radius: f64,
    k: usize,
) -> Result<f64> {
    if method.is_seg() != case.is_seg() {
        return Err(Error::Incompatible(format!("method {method:?} does not run case {case:?}")));
    }
    let kp1 = k as f64 + 1.0;
    let r_sq = radius * radius;
    match (case, schedule) {
        (Case::Monotone, Schedule::Seg(s)) => Ok(9.0 * r_sq / (2.0 * s.gamma2 * kp1)),
        (Case::WeakMinty, Schedule::Seg(s)) => Ok(36.0 * r_sq / (s.gamma1 * s.gamma2 * kp1)),
        (Case::Qsm, Schedule::Seg(s)) => {
            let mu = s
                .provenance
                .as_ref()
                .map(|p| p.params.mu)
                .ok_or_else(|| Error::Incompatible("distance bound needs mu from the schedule provenance".into()))?;
            Ok(2.0 * (-s.gamma2 * mu * kp1).exp() * r_sq)
        }
        (Case::MonotoneSc, Schedule::Sgda(s)) => Ok(9.0 * r_sq / (2.0 * s.gamma * kp1)),
        (Case::Sc, Schedule::Sgda(s)) => {
            let ell = s
                .provenance
                .as_ref()
                .map(|p| p.params.smoothness)
                .ok_or_else(|| Error::Incompatible("operator-norm bound needs ell from the schedule provenance".into()))?;
            Ok(2.0 * ell * r_sq / (s.gamma * kp1))
        }
        (Case::QsmSc, Schedule::Sgda(s)) => {
            let mu = s
                .provenance
                .as_ref()
                .map(|p| p.params.mu)
                .ok_or_else(|| Error::Incompatible("distance bound needs mu from the schedule provenance".into()))?;
            Ok(2.0 * (-s.gamma * mu * kp1).exp() * r_sq)
        }
        _ => Err(Error::Incompatible(format!("case {case:?} does not match the schedule family"))),
    }
}
