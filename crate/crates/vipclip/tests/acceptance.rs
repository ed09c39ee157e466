//! Acceptance suite: one test per shipped guarantee, each exercised
//! end-to-end at its stated tolerance. Every test prints a single
//! `criterion N (<name>): PASS ...` line with the measured numbers
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::Instant;
use vipclip::experiments::{
    compare_methods, run_experiment, success_fraction, ExperimentSpec, Metric,
};
use vipclip::linalg::{self, Matrix, Vector};
use vipclip::metrics::{dist_sq, gap_bruteforce, gap_restricted};
use vipclip::oracle::{estimator_stats, sample_noise, NoiseModel};
use vipclip::problems::{
    evaluate, make_bilinear, make_star_cocoercive, make_strongly_monotone, make_weak_minty,
    AffineProblem,
};
use vipclip::rng::{point_on_sphere, sample_in_ball, substream};
use vipclip::solvers::schedule::{
    build_seg_schedule, build_sgda_schedule, Case, CaseParams, ClipRule, Regime, Schedule,
    SgdaSchedule,
};
use vipclip::solvers::{run_solver, Method};
use vipclip::tails::tail_report;

fn pass(n: u32, name: &str, detail: String, started: Instant) {
    println!(
        "criterion {n} ({name}): PASS ({detail}, {:.2} s)",
        started.elapsed().as_secs_f64()
    );
}

fn spec(
    problem: AffineProblem,
    noise: NoiseModel,
    method: Method,
    case: Case,
    regime: Regime,
    iterations: usize,
    metric: Metric,
    n_seeds: usize,
    x0_seed: u64,
) -> ExperimentSpec {
    let radius = 1.0;
    let x0 = point_on_sphere(x0_seed, problem.solution(), radius);
    let smoothness = if case.is_seg() { problem.lipschitz() } else { problem.sc_ell().unwrap() };
    let params = CaseParams {
        smoothness,
        mu: problem.qsm_mu().unwrap_or(0.0),
        rho: problem.snc_rho().unwrap_or(0.0),
        radius,
        sigma: noise.sigma(),
        iterations,
        beta: 0.1,
    };
    let schedule = if case.is_seg() {
        Schedule::Seg(build_seg_schedule(case, regime, params).unwrap())
    } else {
        Schedule::Sgda(build_sgda_schedule(case, regime, params).unwrap())
    };
    ExperimentSpec {
        problem,
        noise,
        method,
        schedule,
        x0,
        n_seeds,
        base_seed: 0,
        beta: 0.1,
        metric,
        radius,
    }
}

/// Criterion 1: with no noise, one run of the clipped extragradient under the
/// large-step distance schedule lands inside the guaranteed contraction
/// bound, deterministically.
#[test]
fn acceptance_01_deterministic_qsm_bound() {
    let t0 = Instant::now();
    let problem = make_strongly_monotone(10, 1.0, 2.0, 1).unwrap();
    let s = spec(
        problem,
        NoiseModel::none(),
        Method::ClippedSeg,
        Case::Qsm,
        Regime::LargeStep,
        200,
        Metric::DistSq,
        1,
        7,
    );
    let rep = run_experiment(&s).unwrap();
    let value = rep.per_seed_metric[0];
    assert!(
        value <= rep.bound,
        "deterministic distance {value} exceeds bound {}",
        rep.bound
    );
    assert_eq!(rep.n_diverged, 0);
    assert!(t0.elapsed().as_secs_f64() < 1.0, "criterion 1 must finish below 1 s");
    pass(1, "deterministic-qsm-bound", format!("dist_sq {value:.6} <= bound {:.6}", rep.bound), t0);
}

/// Criterion 2: monotone bilinear game under Student-t noise, small-step
/// schedule; the restricted gap of the averaged extrapolation beats its
/// bound in at least 90% of 200 seeds.
#[test]
fn acceptance_02_monotone_gap_bound_heavy_tail() {
    let t0 = Instant::now();
    let problem = make_bilinear(5, 1.0).unwrap();
    let s = spec(
        problem,
        NoiseModel::student_t(1.0, 3.0).unwrap(),
        Method::ClippedSeg,
        Case::Monotone,
        Regime::SmallStep,
        2000,
        Metric::Gap,
        200,
        11,
    );
    let rep = run_experiment(&s).unwrap();
    assert!(
        rep.success_fraction >= 0.9,
        "success fraction {} below 0.9 (bound {})",
        rep.success_fraction,
        rep.bound
    );
    pass(
        2,
        "monotone-gap-bound",
        format!("success {:.3} vs bound {:.4}", rep.success_fraction, rep.bound),
        t0,
    );
}

/// Criterion 3: strongly monotone problem under Student-t noise, large-step
/// distance schedule, 200 seeds.
#[test]
fn acceptance_03_qsm_bound_heavy_tail() {
    let t0 = Instant::now();
    let problem = make_strongly_monotone(10, 1.0, 2.0, 1).unwrap();
    let s = spec(
        problem,
        NoiseModel::student_t(1.0, 3.0).unwrap(),
        Method::ClippedSeg,
        Case::Qsm,
        Regime::LargeStep,
        500,
        Metric::DistSq,
        200,
        7,
    );
    let rep = run_experiment(&s).unwrap();
    assert!(
        rep.success_fraction >= 0.9,
        "success fraction {} below 0.9 (bound {})",
        rep.success_fraction,
        rep.bound
    );
    pass(
        3,
        "qsm-bound-heavy-tail",
        format!("success {:.3} vs bound {:.4}", rep.success_fraction, rep.bound),
        t0,
    );
}

/// Criterion 4: weak-Minty instance inside the admissible rho range, Gaussian
/// noise, large-batch schedule; averaged squared operator norm vs its bound.
#[test]
fn acceptance_04_weak_minty_avg_sq_norm_bound() {
    let t0 = Instant::now();
    let eps = 1e-4;
    let problem = make_weak_minty(eps).unwrap();
    // rho = eps/(1+eps^2) must sit below 1/(640 L A) for K = 500, beta = 0.1.
    let a = (6.0_f64 * 501.0 / 0.1).ln();
    assert!(problem.snc_rho().unwrap() <= 1.0 / (640.0 * problem.lipschitz() * a));
    let s = spec(
        problem,
        NoiseModel::gaussian(0.5).unwrap(),
        Method::ClippedSeg,
        Case::WeakMinty,
        Regime::LargeStep,
        500,
        Metric::AvgSqNorm,
        100,
        3,
    );
    let rep = run_experiment(&s).unwrap();
    assert!(
        rep.success_fraction >= 0.9,
        "success fraction {} below 0.9 (bound {})",
        rep.success_fraction,
        rep.bound
    );
    pass(
        4,
        "weak-minty-avg-sq-norm",
        format!("success {:.3} vs bound {:.4}", rep.success_fraction, rep.bound),
        t0,
    );
}

/// Criterion 5: the three descent-ascent guarantees (gap for monotone
/// star-cocoercive, averaged squared norm for star-cocoercive, distance for
/// quasi-strongly monotone), each at >= 90% of 200 seeds.
#[test]
fn acceptance_05_sgda_suite() {
    let t0 = Instant::now();
    let sc = make_star_cocoercive(4, 1.0, 0.1, 2).unwrap();
    let noise = NoiseModel::student_t(1.0, 3.0).unwrap();

    let gap_spec = spec(
        sc.clone(),
        noise.clone(),
        Method::ClippedSgda,
        Case::MonotoneSc,
        Regime::SmallStep,
        500,
        Metric::Gap,
        200,
        5,
    );
    let gap_rep = run_experiment(&gap_spec).unwrap();
    assert!(gap_rep.success_fraction >= 0.9, "gap case: {}", gap_rep.success_fraction);

    let norm_spec = spec(
        sc,
        noise.clone(),
        Method::ClippedSgda,
        Case::Sc,
        Regime::LargeStep,
        500,
        Metric::AvgSqNorm,
        200,
        5,
    );
    let norm_rep = run_experiment(&norm_spec).unwrap();
    assert!(norm_rep.success_fraction >= 0.9, "sq-norm case: {}", norm_rep.success_fraction);

    let qsm = make_strongly_monotone(10, 1.0, 2.0, 1).unwrap();
    let dist_spec = spec(
        qsm,
        noise,
        Method::ClippedSgda,
        Case::QsmSc,
        Regime::LargeStep,
        500,
        Metric::DistSq,
        200,
        7,
    );
    let dist_rep = run_experiment(&dist_spec).unwrap();
    assert!(dist_rep.success_fraction >= 0.9, "distance case: {}", dist_rep.success_fraction);

    pass(
        5,
        "sgda-suite",
        format!(
            "success gap {:.3} / sq-norm {:.3} / dist {:.3}",
            gap_rep.success_fraction, norm_rep.success_fraction, dist_rep.success_fraction
        ),
        t0,
    );
}

/// Criterion 6: clipped-estimator statistics respect the deviation, bias, and
/// second-moment ceilings for every noise kind and batch size in {1, 16}.
#[test]
fn acceptance_06_clipped_estimator_ceilings() {
    let t0 = Instant::now();
    let d = 4;
    let problem = AffineProblem::from_parts(
        Matrix::identity(d),
        vec![0.0; d],
        vec![0.0; d],
        1.0,
        Some(1.0),
        Some(1.0),
        Some(0.0),
    )
    .unwrap();
    // ||F(x)|| = 1 <= lambda / 2.
    let x = vec![0.5; d];
    let lambda = 3.0;
    let n_trials = 100_000;
    let models = [
        ("gaussian", NoiseModel::gaussian(1.0).unwrap()),
        ("student_t", NoiseModel::student_t(1.0, 3.0).unwrap()),
        ("pareto", NoiseModel::symmetric_pareto(1.0, 3.0).unwrap()),
        ("bernoulli_spike", NoiseModel::bernoulli_spike(1.0, 0.01).unwrap()),
    ];
    let mut detail = String::new();
    for (name, model) in &models {
        for m in [1usize, 16] {
            let s = estimator_stats(&problem, model, &x, m, lambda, n_trials, 42).unwrap();
            assert!(
                s.max_dev <= 2.0 * lambda,
                "{name} m={m}: max_dev {} exceeds 2 lambda",
                s.max_dev
            );
            let mc_margin = 3.0 * (s.second_moment / n_trials as f64).sqrt();
            let bias_ceiling = 4.0 * s.sigma_eff_sq / lambda + mc_margin;
            assert!(
                s.bias_norm <= bias_ceiling,
                "{name} m={m}: bias {} exceeds {bias_ceiling}",
                s.bias_norm
            );
            assert!(
                s.second_moment <= 18.0 * s.sigma_eff_sq,
                "{name} m={m}: second moment {} exceeds {}",
                s.second_moment,
                18.0 * s.sigma_eff_sq
            );
        }
        detail.push_str(name);
        detail.push(' ');
    }
    pass(6, "clipped-estimator-ceilings", format!("all ceilings hold for {detail}m in {{1,16}}"), t0);
}

/// Criterion 7: under spike noise at equal oracle budgets, clipping does not
/// hurt: the clipped run's median final distance and divergence count are at
/// most the unclipped run's.
#[test]
fn acceptance_07_clipping_benefit() {
    let t0 = Instant::now();
    let problem = make_bilinear(5, 1.0).unwrap();
    let noise = NoiseModel::bernoulli_spike(2.0, 0.01).unwrap();
    let x0 = point_on_sphere(9, problem.solution(), 1.0);
    let mk = |method: Method| ExperimentSpec {
        problem: problem.clone(),
        noise: noise.clone(),
        method,
        schedule: Schedule::Sgda(SgdaSchedule::uniform(
            0.1,
            ClipRule::Constant { level: 2.0 },
            1,
            500,
        )),
        x0: x0.clone(),
        n_seeds: 50,
        base_seed: 100,
        beta: 0.1,
        metric: Metric::DistSq,
        radius: 1.0,
    };
    let cmp = compare_methods(&mk(Method::ClippedSgda), &mk(Method::Sgda)).unwrap();
    assert!(
        cmp.median_a <= cmp.median_b,
        "median clipped {} should not exceed unclipped {}",
        cmp.median_a,
        cmp.median_b
    );
    assert!(
        cmp.n_diverged_a <= cmp.n_diverged_b,
        "diverged clipped {} vs unclipped {}",
        cmp.n_diverged_a,
        cmp.n_diverged_b
    );
    pass(
        7,
        "clipping-benefit",
        format!(
            "median {:.2} <= {:.2}, diverged {} <= {}",
            cmp.median_a, cmp.median_b, cmp.n_diverged_a, cmp.n_diverged_b
        ),
        t0,
    );
}

/// Seeded monotone 2x2 problem: PSD symmetric part plus a skew part.
fn random_monotone_2d(seed: u64) -> AffineProblem {
    use rand::Rng;
    let mut rng = substream(seed, &[101]);
    let q = linalg::random_orthogonal(2, &mut rng);
    let e1: f64 = 0.2 + 1.3 * rng.random::<f64>();
    let e2: f64 = 0.2 + 1.3 * rng.random::<f64>();
    let mut diag = Matrix::zeros(2);
    diag.set(0, 0, e1);
    diag.set(1, 1, e2);
    let sym = diag.conjugate_by(&q).symmetric_part();
    let c: f64 = -1.0 + 2.0 * rng.random::<f64>();
    let mut a = sym;
    a.set(0, 1, a.get(0, 1) + c);
    a.set(1, 0, a.get(1, 0) - c);
    let solution: Vector = vec![rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
    let offset = linalg::scale(&a.matvec(&solution), -1.0);
    let lipschitz = a.spectral_norm();
    AffineProblem::from_parts(a, offset, solution, lipschitz, Some(e1.min(e2)), None, Some(0.0))
        .unwrap()
}

/// Criterion 8: the projected-gradient gap maximizer agrees with the
/// brute-force sampling oracle on 20 seeded monotone planar problems.
#[test]
fn acceptance_08_gap_oracle_equivalence() {
    let t0 = Instant::now();
    let radius = 1.0;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let problem = random_monotone_2d(seed);
        let mut rng = substream(seed, &[55]);
        let x = sample_in_ball(&mut rng, problem.solution(), 2.0 * radius);
        let pga = gap_restricted(&problem, &x, radius, 1e-10).unwrap();
        let brute = gap_bruteforce(&problem, &x, radius, 100_000, seed).unwrap();
        let err = (pga.value - brute).abs();
        let tol = 1e-3 * (1.0 + pga.value.abs());
        assert!(
            err <= tol,
            "seed {seed}: |{} - {brute}| = {err} exceeds {tol}",
            pga.value
        );
        worst = worst.max(err / (1.0 + pga.value.abs()));
    }
    assert!(t0.elapsed().as_secs_f64() < 10.0, "criterion 8 must finish below 10 s");
    pass(8, "gap-oracle-equivalence", format!("worst relative error {worst:.2e} over 20 problems"), t0);
}

/// Exact survival function of the Student-t distribution with 3 degrees of
/// freedom (independent oracle for the tail metrics).
fn t3_survival(t: f64) -> f64 {
    let u = t / 3.0_f64.sqrt();
    0.5 - (u.atan() + u / (1.0 + u * u)) / std::f64::consts::PI
}

fn t3_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - t3_survival(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Criterion 9: the mild-tail exceedance of a million standard normal draws
/// reproduces the 0.0035 reference, and Student-t(3) draws show a mild-tail
/// ratio far above 1 (the exact value, by quadrature of the t CDF, is ~7.8).
#[test]
fn acceptance_09_tail_metrics_reference() {
    let t0 = Instant::now();
    let n = 1_000_000usize;
    let gaussian = NoiseModel::gaussian(1.0).unwrap();
    let mut rng = substream(0, &[71]);
    let normal: Vec<f64> = (0..n).map(|_| sample_noise(&gaussian, 1, &mut rng)[0]).collect();
    let rep_n = tail_report(&normal).unwrap();
    assert!(
        (rep_n.p_mr - 0.0035).abs() <= 5e-4,
        "normal p_mr {} deviates from 0.0035",
        rep_n.p_mr
    );

    let student = NoiseModel::student_t(1.0, 3.0).unwrap();
    let mut rng = substream(1, &[71]);
    let heavy: Vec<f64> = (0..n).map(|_| sample_noise(&student, 1, &mut rng)[0]).collect();
    let rep_t = tail_report(&heavy).unwrap();
    assert!(rep_t.rho_mr >= 5.0, "t(3) rho_mr {} below 5", rep_t.rho_mr);

    // Cross-check the measured exceedance against the exact t(3) value.
    let q3 = t3_quantile(0.75);
    let exact = t3_survival(4.0 * q3); // q1 = -q3, so Q3 + 1.5 IQR = 4 Q3
    assert!(
        (rep_t.p_mr - exact).abs() <= 5e-3,
        "t(3) p_mr {} vs exact {exact}",
        rep_t.p_mr
    );
    pass(
        9,
        "tail-metrics-reference",
        format!("normal p_mr {:.4}, t3 rho_mr {:.2} (exact {:.2})", rep_n.p_mr, rep_t.rho_mr, exact / 0.0035),
        t0,
    );
}

/// Criterion 10: bit-exact replay of a full experiment, and the reduction of
/// the clipped methods to their deterministic counterparts when noise is off
/// and the clip level never binds.
#[test]
fn acceptance_10_determinism_and_reduction() {
    let t0 = Instant::now();
    let problem = make_strongly_monotone(6, 1.0, 2.0, 4).unwrap();
    let s = spec(
        problem.clone(),
        NoiseModel::student_t(1.0, 3.0).unwrap(),
        Method::ClippedSeg,
        Case::Qsm,
        Regime::SmallStep,
        300,
        Metric::DistSq,
        20,
        13,
    );
    let a = run_experiment(&s).unwrap();
    let b = run_experiment(&s).unwrap();
    assert_eq!(a.per_seed_metric, b.per_seed_metric);
    assert_eq!(
        a.to_per_seed_csv(s.base_seed),
        b.to_per_seed_csv(s.base_seed),
        "per-seed CSV must replay byte-identically"
    );

    // Reduction invariant: noise off, clip level above every operator norm
    // the run can see.
    let x0 = point_on_sphere(2, problem.solution(), 1.0);
    let sched = Schedule::Seg(vipclip::solvers::schedule::SegSchedule::uniform(
        0.05,
        ClipRule::Constant { level: 1e6 },
        1,
        200,
    ));
    let clipped = run_solver(&problem, &NoiseModel::none(), Method::ClippedSeg, &sched, &x0, 0).unwrap();
    let plain = run_solver(&problem, &NoiseModel::none(), Method::Seg, &sched, &x0, 0).unwrap();
    assert_eq!(clipped.iterates, plain.iterates);
    assert_eq!(clipped.extrapolations, plain.extrapolations);

    // Sanity anchors for the reduction: the final distances agree and both
    // runs actually moved.
    let d_clip = dist_sq(&clipped.final_iterate, &problem).unwrap();
    let d_plain = dist_sq(&plain.final_iterate, &problem).unwrap();
    assert_eq!(d_clip, d_plain);
    let f0 = evaluate(&problem, &x0).unwrap();
    assert!(linalg::norm(&f0) > 0.0);
    assert!(d_clip < 1.0);

    // success_fraction bookkeeping used throughout the suite.
    assert_eq!(success_fraction(&[1.0, 2.0, f64::NAN], 1.5), 1.0 / 3.0);

    pass(10, "determinism-and-reduction", "replays byte-identical; reduction exact".to_string(), t0);
}
