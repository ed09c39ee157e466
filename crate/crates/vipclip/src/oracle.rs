//! Stochastic first-order oracle: additive heavy-tailed noise, mini-batch
//! mean estimators, the norm-clipping operator, and Monte-Carlo statistics of
//! clipped estimates.
//!
//! Noise is additive and state-independent (F_xi(x) = F(x) + xi), with
//! per-coordinate scale sigma / sqrt(d) so that E||xi||^2 = sigma^2 holds with
//! equality. That keeps the theoretical batch-size formulas directly
//! applicable and makes the variance constant exact for bound checking.

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::problems::{evaluate, AffineProblem};
use crate::rng::{stream_id, substream};
use rand::Rng;
use rand_distr::{Distribution, Pareto, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

/// Zero-mean noise distribution with total standard deviation `sigma`
/// (i.e. sigma^2 = E||xi||^2 over the full vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseDoc", into = "NoiseDoc")]
pub struct NoiseModel {
    kind: NoiseKind,
    sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    None,
    Gaussian,
    /// Student-t with nu > 2 degrees of freedom, scaled to unit variance.
    StudentT { nu: f64 },
    /// Centered Pareto with alpha > 2, scaled to unit variance.
    SymmetricPareto { alpha: f64 },
    /// +-M with probability p_spike/2 each and 0 otherwise, M = 1/sqrt(p_spike).
    BernoulliSpike { p_spike: f64 },
}

/// Wire format: {kind, sigma, nu?, alpha?, p_spike?}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseDoc {
    kind: String,
    #[serde(default)]
    sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_spike: Option<f64>,
}

impl From<NoiseModel> for NoiseDoc {
    fn from(m: NoiseModel) -> Self {
        let (kind, nu, alpha, p_spike) = match m.kind {
            NoiseKind::None => ("none", None, None, None),
            NoiseKind::Gaussian => ("gaussian", None, None, None),
            NoiseKind::StudentT { nu } => ("student_t", Some(nu), None, None),
            NoiseKind::SymmetricPareto { alpha } => ("pareto", None, Some(alpha), None),
            NoiseKind::BernoulliSpike { p_spike } => ("bernoulli_spike", None, None, Some(p_spike)),
        };
        NoiseDoc { kind: kind.to_string(), sigma: m.sigma, nu, alpha, p_spike }
    }
}

impl TryFrom<NoiseDoc> for NoiseModel {
    type Error = Error;

    fn try_from(doc: NoiseDoc) -> Result<Self> {
        let need = |opt: Option<f64>, name: &str| {
            opt.ok_or_else(|| Error::Config(format!("noise kind {:?} requires field {name}", doc.kind)))
        };
        match doc.kind.as_str() {
            "none" => Ok(NoiseModel::none()),
            "gaussian" => NoiseModel::gaussian(doc.sigma),
            "student_t" => NoiseModel::student_t(doc.sigma, need(doc.nu, "nu")?),
            "pareto" => NoiseModel::symmetric_pareto(doc.sigma, need(doc.alpha, "alpha")?),
            "bernoulli_spike" => NoiseModel::bernoulli_spike(doc.sigma, need(doc.p_spike, "p_spike")?),
            other => Err(Error::Config(format!("unknown noise kind {other:?}"))),
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    Ok(())
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel { kind: NoiseKind::None, sigma: 0.0 }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(NoiseModel { kind: NoiseKind::Gaussian, sigma })
    }

    /// Rejected for nu <= 2: the variance would be infinite, violating the
    /// bounded-variance assumption the schedules rely on.
    pub fn student_t(sigma: f64, nu: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("student_t requires nu > 2, got {nu}")));
        }
        Ok(NoiseModel { kind: NoiseKind::StudentT { nu }, sigma })
    }

    pub fn symmetric_pareto(sigma: f64, alpha: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !(alpha > 2.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("pareto requires alpha > 2, got {alpha}")));
        }
        Ok(NoiseModel { kind: NoiseKind::SymmetricPareto { alpha }, sigma })
    }

    pub fn bernoulli_spike(sigma: f64, p_spike: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !(p_spike > 0.0 && p_spike < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bernoulli_spike requires p_spike in (0, 1), got {p_spike}"
            )));
        }
        Ok(NoiseModel { kind: NoiseKind::BernoulliSpike { p_spike }, sigma })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, NoiseKind::None) || self.sigma == 0.0
    }

    /// One unit-variance scalar draw of the base distribution.
    fn base_draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian => rng.sample(StandardNormal),
            NoiseKind::StudentT { nu } => {
                let t = StudentT::new(nu).expect("validated at construction").sample(rng);
                t * ((nu - 2.0) / nu).sqrt()
            }
            NoiseKind::SymmetricPareto { alpha } => {
                let p = Pareto::new(1.0, alpha).expect("validated at construction").sample(rng);
                let mean = alpha / (alpha - 1.0);
                let var = alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0));
                (p - mean) / var.sqrt()
            }
            NoiseKind::BernoulliSpike { p_spike } => {
                let u: f64 = rng.random();
                let m = 1.0 / p_spike.sqrt();
                if u < p_spike / 2.0 {
                    m
                } else if u < p_spike {
                    -m
                } else {
                    0.0
                }
            }
        }
    }
}

/// One noise vector: i.i.d. coordinates with per-coordinate std sigma/sqrt(d).
pub fn sample_noise<R: Rng>(model: &NoiseModel, d: usize, rng: &mut R) -> Vector {
    if model.is_none() {
        return vec![0.0; d];
    }
    let scale = model.sigma / (d as f64).sqrt();
    (0..d).map(|_| scale * model.base_draw(rng)).collect()
}

/// F(x) + (1/m) * sum of m noise draws; conditional variance sigma^2 / m.
pub fn batch_mean<R: Rng>(
    problem: &AffineProblem,
    model: &NoiseModel,
    x: &[f64],
    m: usize,
    rng: &mut R,
) -> Result<Vector> {
    if m == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    let mut out = evaluate(problem, x)?;
    if model.is_none() {
        return Ok(out);
    }
    let d = out.len();
    let inv_m = 1.0 / m as f64;
    for _ in 0..m {
        let xi = sample_noise(model, d, rng);
        for (o, v) in out.iter_mut().zip(&xi) {
            *o += inv_m * v;
        }
    }
    Ok(out)
}

/// clip(y, lambda) = min{1, lambda/||y||} y, with clip(0, lambda) = 0.
///
/// Non-finite inputs are returned unchanged so the caller's divergence
/// detection sees them; scaling an infinite vector would manufacture NaNs.
pub fn clip(y: &[f64], lambda: f64) -> Vector {
    debug_assert!(lambda > 0.0);
    let n = linalg::norm(y);
    if !n.is_finite() {
        return y.to_vec();
    }
    if n <= lambda {
        return y.to_vec();
    }
    let mut out = linalg::scale(y, lambda / n);
    // Rounding can leave the rescaled norm an ulp above the level, which
    // would break exact idempotence (clip returns its input unchanged only
    // when the norm test passes). Nudge down until it does.
    while linalg::norm(&out) > lambda {
        for v in out.iter_mut() {
            *v *= 1.0 - f64::EPSILON;
        }
    }
    out
}

/// clip(batch_mean(x), lambda).
pub fn clipped_estimate<R: Rng>(
    problem: &AffineProblem,
    model: &NoiseModel,
    x: &[f64],
    m: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<Vector> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    Ok(clip(&batch_mean(problem, model, x, m, rng)?, lambda))
}

/// Monte-Carlo statistics of the clipped mini-batch estimator around F(x).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorStats {
    /// || mean of clipped draws - F(x) ||
    pub bias_norm: f64,
    /// mean ||X~ - F(x)||^2
    pub second_moment: f64,
    /// mean ||X~ - empirical mean||^2
    pub centered_second_moment: f64,
    /// max ||X~ - empirical mean||; bounded by 2 lambda since every clipped
    /// draw and hence the empirical mean has norm at most lambda.
    pub max_dev: f64,
    pub n_trials: usize,
    /// sigma^2 / m, the effective variance entering the bounds.
    pub sigma_eff_sq: f64,
}

/// Estimate bias/variance statistics of clip(batch_mean(x), lambda) over
/// `n_trials` independent trials. Requires ||F(x)|| <= lambda/2, the validity
/// condition of the bias and second-moment bounds being checked.
pub fn estimator_stats(
    problem: &AffineProblem,
    model: &NoiseModel,
    x: &[f64],
    m: usize,
    lambda: f64,
    n_trials: usize,
    seed: u64,
) -> Result<EstimatorStats> {
    if n_trials < 1000 {
        return Err(Error::InvalidParameter(format!(
            "estimator_stats needs n_trials >= 1000, got {n_trials}"
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let fx = evaluate(problem, x)?;
    let norm_f = linalg::norm(&fx);
    if norm_f > lambda / 2.0 {
        return Err(Error::LemmaPrecondition { norm_f, half_lambda: lambda / 2.0 });
    }
    let d = fx.len();
    let mut rng = substream(seed, &[stream_id::ESTIMATOR]);
    let mut trials: Vec<Vector> = Vec::with_capacity(n_trials);
    let mut mean = vec![0.0; d];
    for _ in 0..n_trials {
        let est = clipped_estimate(problem, model, x, m, lambda, &mut rng)?;
        for (s, v) in mean.iter_mut().zip(&est) {
            *s += v;
        }
        trials.push(est);
    }
    for s in mean.iter_mut() {
        *s /= n_trials as f64;
    }
    let mut second = 0.0;
    let mut centered = 0.0;
    let mut max_dev: f64 = 0.0;
    for est in &trials {
        second += linalg::dot(&linalg::sub(est, &fx), &linalg::sub(est, &fx));
        let dev = linalg::dist(est, &mean);
        centered += dev * dev;
        max_dev = max_dev.max(dev);
    }
    Ok(EstimatorStats {
        bias_norm: linalg::dist(&mean, &fx),
        second_moment: second / n_trials as f64,
        centered_second_moment: centered / n_trials as f64,
        max_dev,
        n_trials,
        sigma_eff_sq: model.sigma * model.sigma / m as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear, make_star_cocoercive};
    use proptest::prelude::*;

    fn identity_problem(d: usize) -> AffineProblem {
        AffineProblem::from_parts(
            crate::linalg::Matrix::identity(d),
            vec![0.0; d],
            vec![0.0; d],
            1.0,
            Some(1.0),
            Some(1.0),
            Some(0.0),
        )
        .unwrap()
    }

    #[test]
    fn none_model_is_exact() {
        let p = identity_problem(3);
        let model = NoiseModel::none();
        let mut rng = substream(0, &[1]);
        assert_eq!(sample_noise(&model, 3, &mut rng), vec![0.0; 3]);
        let x = [1.0, -2.0, 0.5];
        let bm = batch_mean(&p, &model, &x, 7, &mut rng).unwrap();
        assert_eq!(bm, x.to_vec());
    }

    #[test]
    fn estimator_stats_zero_with_dyadic_inputs() {
        // Dyadic coordinates keep the trial mean exactly equal to F(x), so
        // the no-noise statistics are exactly zero.
        let p = identity_problem(2);
        let s = estimator_stats(&p, &NoiseModel::none(), &[0.125, 0.25], 1, 1.0, 1000, 0).unwrap();
        assert_eq!(s.bias_norm, 0.0);
        assert_eq!(s.second_moment, 0.0);
        assert_eq!(s.max_dev, 0.0);
    }

    #[test]
    fn invalid_tail_parameters_rejected() {
        assert!(NoiseModel::student_t(1.0, 2.0).is_err());
        assert!(NoiseModel::student_t(1.0, 1.5).is_err());
        assert!(NoiseModel::symmetric_pareto(1.0, 2.0).is_err());
        assert!(NoiseModel::bernoulli_spike(1.0, 0.0).is_err());
        assert!(NoiseModel::gaussian(-1.0).is_err());
    }

    #[test]
    fn clip_matches_hand_values() {
        assert_eq!(clip(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(clip(&[3.0, 4.0], 10.0), vec![3.0, 4.0]);
        let c = clip(&[3.0, 4.0], 2.5);
        assert!((c[0] - 1.5).abs() < 1e-15 && (c[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn noise_mean_and_variance_normalization() {
        // Empirical E||xi||^2 must equal sigma^2 for every kind and dimension.
        let models = [
            NoiseModel::gaussian(1.0).unwrap(),
            NoiseModel::student_t(1.0, 3.0).unwrap(),
            NoiseModel::symmetric_pareto(1.0, 3.0).unwrap(),
            NoiseModel::bernoulli_spike(1.0, 0.05).unwrap(),
        ];
        for model in &models {
            for d in [1usize, 5, 50] {
                let mut rng = substream(1234, &[d as u64]);
                let n = 200_000usize;
                let mut sum = vec![0.0; d];
                let mut sq = 0.0;
                for _ in 0..n {
                    let xi = sample_noise(model, d, &mut rng);
                    for (s, v) in sum.iter_mut().zip(&xi) {
                        *s += v;
                    }
                    sq += linalg::dot(&xi, &xi);
                }
                let mean_norm = linalg::norm(&sum) / n as f64;
                let var = sq / n as f64;
                // CLT-scale mean bound; wide variance band for the kinds
                // whose fourth moment is infinite (t with nu = 3, Pareto with
                // alpha = 3), whose sample variance converges slowly.
                assert!(mean_norm < 0.05, "{model:?} d={d}: mean norm {mean_norm}");
                let band = match model.kind() {
                    NoiseKind::StudentT { .. } | NoiseKind::SymmetricPareto { .. } => 0.35,
                    _ => 0.1,
                };
                assert!(
                    (var - 1.0).abs() < band,
                    "{model:?} d={d}: empirical variance {var}"
                );
            }
        }
    }

    #[test]
    fn gaussian_total_variance_tight_at_one_million_draws() {
        let model = NoiseModel::gaussian(1.0).unwrap();
        let mut rng = substream(17, &[4]);
        let n = 1_000_000usize;
        let mut sq = 0.0;
        for _ in 0..n {
            let xi = sample_noise(&model, 4, &mut rng);
            sq += linalg::dot(&xi, &xi);
        }
        let var = sq / n as f64;
        assert!((var - 1.0).abs() < 0.01, "empirical E||xi||^2 = {var}");
    }

    #[test]
    fn student_t_variance_normalization_at_one_million_draws() {
        let model = NoiseModel::student_t(1.0, 3.0).unwrap();
        let mut rng = substream(23, &[1]);
        let n = 1_000_000usize;
        let mut sq = 0.0;
        for _ in 0..n {
            let xi = sample_noise(&model, 1, &mut rng);
            sq += xi[0] * xi[0];
        }
        let var = sq / n as f64;
        assert!((var - 1.0).abs() < 0.05, "empirical variance {var}");
    }

    #[test]
    fn batch_mean_variance_scales_inversely_with_m() {
        let p = identity_problem(4);
        let model = NoiseModel::gaussian(2.0).unwrap();
        let x = [0.5, 0.0, -0.5, 1.0];
        let fx = x.to_vec();
        let mut rng = substream(7, &[0]);
        let trials = 50_000;
        let m = 4;
        let mut msd = 0.0;
        for _ in 0..trials {
            let bm = batch_mean(&p, &model, &x, m, &mut rng).unwrap();
            let d = linalg::sub(&bm, &fx);
            msd += linalg::dot(&d, &d);
        }
        msd /= trials as f64;
        // sigma^2 / m = 4 / 4 = 1.
        assert!((msd - 1.0).abs() < 0.03, "mean squared deviation {msd}");
    }

    #[test]
    fn clipped_estimate_composes_clip_and_mean() {
        // No noise, F(x) = (3, 4), lambda = 2.5 -> (1.5, 2).
        let p = AffineProblem::from_parts(
            crate::linalg::Matrix::identity(2),
            vec![0.0; 2],
            vec![0.0; 2],
            1.0,
            Some(1.0),
            Some(1.0),
            Some(0.0),
        )
        .unwrap();
        let mut rng = substream(0, &[0]);
        let est = clipped_estimate(&p, &NoiseModel::none(), &[3.0, 4.0], 3, 2.5, &mut rng).unwrap();
        assert!((est[0] - 1.5).abs() < 1e-15 && (est[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn estimator_stats_none_model_is_zero() {
        let p = identity_problem(2);
        let s = estimator_stats(&p, &NoiseModel::none(), &[0.1, 0.1], 1, 1.0, 1000, 0).unwrap();
        assert!(s.bias_norm < 1e-14);
        assert!(s.second_moment < 1e-28);
        assert!(s.max_dev < 1e-14);
    }

    #[test]
    fn estimator_stats_rejects_large_operator_norm() {
        let p = identity_problem(2);
        let err = estimator_stats(&p, &NoiseModel::none(), &[3.0, 4.0], 1, 6.0, 1000, 0);
        assert!(matches!(err, Err(Error::LemmaPrecondition { .. })));
    }

    #[test]
    fn estimator_stats_respects_lemma_ceilings() {
        // Gaussian sigma=1, m=1, lambda=10, F(x)=0: second moment is close to
        // sigma^2 = 1 and far below the 18 sigma^2 ceiling.
        let p = identity_problem(4);
        let model = NoiseModel::gaussian(1.0).unwrap();
        let s = estimator_stats(&p, &model, &[0.0; 4], 1, 10.0, 20_000, 3).unwrap();
        assert!(s.second_moment <= 18.0);
        assert!((s.second_moment - 1.0).abs() < 0.05);
        assert!(s.max_dev <= 2.0 * 10.0 * (1.0 + 1e-9));
        assert!(s.bias_norm <= 4.0 * s.sigma_eff_sq / 10.0 + 3.0 * (s.second_moment / 20_000.0).sqrt());
    }

    #[test]
    fn reproducibility_of_draw_streams() {
        let model = NoiseModel::student_t(1.0, 3.0).unwrap();
        let a: Vec<Vector> = {
            let mut rng = substream(5, &[2]);
            (0..10).map(|_| sample_noise(&model, 3, &mut rng)).collect()
        };
        let b: Vec<Vector> = {
            let mut rng = substream(5, &[2]);
            (0..10).map(|_| sample_noise(&model, 3, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn noise_json_round_trip() {
        for m in [
            NoiseModel::none(),
            NoiseModel::gaussian(0.5).unwrap(),
            NoiseModel::student_t(1.0, 3.0).unwrap(),
            NoiseModel::symmetric_pareto(2.0, 2.5).unwrap(),
            NoiseModel::bernoulli_spike(2.0, 0.01).unwrap(),
        ] {
            let s = serde_json::to_string(&m).unwrap();
            let back: NoiseModel = serde_json::from_str(&s).unwrap();
            assert_eq!(m, back);
        }
        assert!(serde_json::from_str::<NoiseModel>(r#"{"kind":"student_t","sigma":1.0,"nu":2.0}"#).is_err());
        assert!(serde_json::from_str::<NoiseModel>(r#"{"kind":"weird","sigma":1.0}"#).is_err());
    }

    proptest! {
        #[test]
        fn clip_norm_never_exceeds_lambda(
            y in proptest::collection::vec(-1e6f64..1e6, 1..8),
            lambda in 1e-6f64..1e6,
        ) {
            let c = clip(&y, lambda);
            prop_assert!(linalg::norm(&c) <= lambda * (1.0 + 1e-12));
        }

        #[test]
        fn clip_positive_homogeneity(
            y in proptest::collection::vec(-1e3f64..1e3, 1..6),
            lambda in 1e-3f64..1e3,
            t in 1e-3f64..1e3,
        ) {
            let left = clip(&linalg::scale(&y, t), t * lambda);
            let right = linalg::scale(&clip(&y, lambda), t);
            for (l, r) in left.iter().zip(&right) {
                prop_assert!((l - r).abs() <= 1e-9 * (1.0 + r.abs()));
            }
        }

        #[test]
        fn clip_idempotent(
            y in proptest::collection::vec(-1e6f64..1e6, 1..8),
            lambda in 1e-6f64..1e6,
        ) {
            let once = clip(&y, lambda);
            let twice = clip(&once, lambda);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn clip_preserves_direction(
            y in proptest::collection::vec(-1e3f64..1e3, 2..6),
            lambda in 1e-3f64..10.0,
        ) {
            prop_assume!(linalg::norm(&y) > 1e-9);
            let c = clip(&y, lambda);
            let cos = linalg::dot(&c, &y) / (linalg::norm(&c).max(1e-300) * linalg::norm(&y));
            prop_assert!(linalg::norm(&c) < 1e-12 || cos > 1.0 - 1e-9);
        }
    }

    #[test]
    fn batch_of_one_equals_direct_noise_addition() {
        let p = make_bilinear(2, 1.0).unwrap();
        let model = NoiseModel::gaussian(1.0).unwrap();
        let x = [1.0, 0.0, -1.0, 2.0];
        let a = {
            let mut rng = substream(3, &[9]);
            batch_mean(&p, &model, &x, 1, &mut rng).unwrap()
        };
        let b = {
            let mut rng = substream(3, &[9]);
            let fx = evaluate(&p, &x).unwrap();
            linalg::add(&fx, &sample_noise(&model, 4, &mut rng))
        };
        assert_eq!(a, b);
    }
}
