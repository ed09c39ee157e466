//! Quartile-based heavy-tail diagnostics: exceedance fractions over
//! IQR-shifted thresholds, their normal-reference ratios, gradient-noise-norm
//! sampling, and histogram export.

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::oracle::{batch_mean, NoiseModel};
use crate::problems::{evaluate, AffineProblem};
use crate::rng::{stream_id, substream};
use serde::{Deserialize, Serialize};

/// Exceedance fraction of a standard normal over Q3 + 1.5 IQR ("mild").
pub const P_MR_NORMAL: f64 = 0.0035;
/// Exceedance fraction of a standard normal over Q3 + 3 IQR ("extreme").
pub const P_ER_NORMAL: f64 = 1.2e-6;

/// Sample quartiles and right-tail heaviness ratios.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// Fraction strictly above Q3 + 1.5 IQR.
    pub p_mr: f64,
    /// Fraction strictly above Q3 + 3 IQR.
    pub p_er: f64,
    /// p_mr relative to the normal reference 0.0035.
    pub rho_mr: f64,
    /// p_er relative to the normal reference 1.2e-6.
    pub rho_er: f64,
    pub n: usize,
}

/// Linear-interpolation quantile at position h = (n-1) q over the sorted sample.
pub fn empirical_quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("quantile of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        // Clamped one-sided form: exactly monotone in q even under rounding
        // (the two-sided lerp can invert adjacent quantiles by an ulp).
        let w = h - lo as f64;
        let v = sorted[lo] + (sorted[hi] - sorted[lo]) * w;
        v.clamp(sorted[lo], sorted[hi])
    }
}

/// (Q1, Q2, Q3) by linear interpolation at h = (n-1) p.
pub fn quartiles(samples: &[f64]) -> Result<(f64, f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("quartiles of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.5),
        quantile_sorted(&sorted, 0.75),
    ))
}

/// F_lambda(X): fraction of samples strictly exceeding Q3 + lambda (Q3 - Q1).
pub fn f_lambda(samples: &[f64], lam: f64) -> Result<f64> {
    if samples.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "f_lambda needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    if !(lam > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lam}")));
    }
    let (q1, _, q3) = quartiles(samples)?;
    let threshold = q3 + lam * (q3 - q1);
    let count = samples.iter().filter(|&&x| x > threshold).count();
    Ok(count as f64 / samples.len() as f64)
}

/// Full tail report: quartiles, p_mR = F_1.5, p_eR = F_3, and their ratios to
/// the normal reference values.
pub fn tail_report(samples: &[f64]) -> Result<TailReport> {
    if samples.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "tail_report needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    let (q1, q2, q3) = quartiles(samples)?;
    let p_mr = f_lambda(samples, 1.5)?;
    let p_er = f_lambda(samples, 3.0)?;
    Ok(TailReport {
        q1,
        q2,
        q3,
        p_mr,
        p_er,
        rho_mr: p_mr / P_MR_NORMAL,
        rho_er: p_er / P_ER_NORMAL,
        n: samples.len(),
    })
}

/// n independent draws of ||batch_mean(x, m) - F(x)||: the gradient-noise
/// norm distribution at a fixed point.
pub fn noise_norm_samples(
    problem: &AffineProblem,
    model: &NoiseModel,
    x: &[f64],
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let fx = evaluate(problem, x)?;
    let mut rng = substream(seed, &[stream_id::NOISE_NORMS]);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let bm = batch_mean(problem, model, x, m, &mut rng)?;
        out.push(linalg::dist(&bm, &fx));
    }
    Ok(out)
}

/// Equal-width histogram over [min, max]; the last bin is right-inclusive so
/// every sample lands in exactly one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vector,
    pub counts: Vec<u64>,
}

pub fn histogram(samples: &[f64], n_bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("histogram of an empty sample".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    if !linalg::is_finite(samples) {
        return Err(Error::NonFinite("histogram samples"));
    }
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / n_bins as f64;
    let edges: Vector = (0..=n_bins).map(|i| min + width * i as f64).collect();
    let mut counts = vec![0u64; n_bins];
    for &x in samples {
        let idx = if width == 0.0 {
            0
        } else {
            (((x - min) / width) as usize).min(n_bins - 1)
        };
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

impl Histogram {
    /// CSV with header `bin_left,bin_right,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                crate::fmt_g17(self.edges[i]),
                crate::fmt_g17(self.edges[i + 1]),
                c
            ));
        }
        out
    }
}
