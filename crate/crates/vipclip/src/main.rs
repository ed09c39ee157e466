//! Command-line entry point: zoo inspection, bound-verification runs,
//! heavy-tail diagnostics, and clipped-estimator checks.
//!
//! Exit codes are a stable contract: 0 pass, 1 verification failure,
//! 2 invalid input, 3 runtime divergence in every seed.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vipclip::config::{
    read_json_config, threads_from_env, write_output, EstimatorCheckConfig, ProblemSpec, RunConfig,
    RunReport, TailsConfig, TailsReportDoc,
};
use vipclip::experiments::{run_experiment, trajectory_csv};
use vipclip::oracle::estimator_stats;
use vipclip::tails::{histogram, noise_norm_samples, tail_report};
use vipclip::{fmt_g17, Error};

const EXIT_OK: u8 = 0;
const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_ALL_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "vipclip",
    version,
    about = "Clipped stochastic solvers for variational inequalities with heavy-tailed noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the synthetic problem zoo.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Run an experiment config and write report.json / per_seed.csv.
    Run { config: PathBuf },
    /// Run an experiment config and exit 0 iff success_fraction >= 1 - beta.
    Verify { config: PathBuf },
    /// Sample gradient-noise norms and write tails.json / hist.csv.
    Tails { config: PathBuf },
    /// Check the clipped-estimator deviation, bias, and second-moment ceilings.
    EstimatorCheck { config: PathBuf },
}

#[derive(Subcommand)]
enum ZooAction {
    /// List the zoo constructors.
    List,
    /// Print constructor parameters and certified constants as JSON.
    Describe {
        name: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        big_l: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        min_eig: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Zoo { action } => cmd_zoo(action),
        Command::Run { config } => cmd_run(&config),
        Command::Verify { config } => cmd_verify(&config),
        Command::Tails { config } => cmd_tails(&config),
        Command::EstimatorCheck { config } => cmd_estimator_check(&config),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID_INPUT)
        }
    }
}

fn cmd_zoo(action: ZooAction) -> Result<u8, Error> {
    match action {
        ZooAction::List => {
            println!("strongly_monotone  --d <even> --mu <f> --big-l <f> [--seed <n>]");
            println!("bilinear           --d <n> --s <f>");
            println!("weak_minty         --eps <f in (0,1)>");
            println!("star_cocoercive    --d <n> --ell <f> --min-eig <f> [--seed <n>]");
            Ok(EXIT_OK)
        }
        ZooAction::Describe { name, d, mu, big_l, s, eps, ell, min_eig, seed } => {
            let missing = |flag: &str| Error::Config(format!("zoo describe {name} requires --{flag}"));
            let spec = match name.as_str() {
                "strongly_monotone" => ProblemSpec::StronglyMonotone {
                    d: d.ok_or_else(|| missing("d"))?,
                    mu: mu.ok_or_else(|| missing("mu"))?,
                    big_l: big_l.ok_or_else(|| missing("big-l"))?,
                    seed,
                },
                "bilinear" => ProblemSpec::Bilinear {
                    d: d.ok_or_else(|| missing("d"))?,
                    s: s.ok_or_else(|| missing("s"))?,
                },
                "weak_minty" => ProblemSpec::WeakMinty { eps: eps.ok_or_else(|| missing("eps"))? },
                "star_cocoercive" => ProblemSpec::StarCocoercive {
                    d: d.ok_or_else(|| missing("d"))?,
                    ell: ell.ok_or_else(|| missing("ell"))?,
                    min_eig: min_eig.ok_or_else(|| missing("min-eig"))?,
                    seed,
                },
                other => return Err(Error::Config(format!("unknown zoo problem {other:?}"))),
            };
            let problem = spec.build()?;
            println!("{}", problem.to_json());
            Ok(EXIT_OK)
        }
    }
}

fn setup_threads(explicit: Option<usize>) {
    let threads = explicit.or_else(threads_from_env);
    if let Some(n) = threads {
        // Ignore the error a second initialization would raise.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn cmd_run(config_path: &std::path::Path) -> Result<u8, Error> {
    let config: RunConfig = read_json_config(config_path)?;
    setup_threads(config.threads);
    let spec = config.resolve()?;
    let report = run_experiment(&spec)?;

    let doc = RunReport {
        config: config.clone(),
        problem: spec.problem.clone(),
        schedule: spec.schedule.clone(),
        x0: spec.x0.clone(),
        radius: spec.radius,
        bound: report.bound,
        success_fraction: report.success_fraction,
        quantiles: report.quantiles.clone(),
        n_seeds: spec.n_seeds,
        base_seed: spec.base_seed,
        n_diverged: report.n_diverged,
        oracle_calls_per_seed: report.oracle_calls_per_seed,
        wall_time: report.wall_time,
    };
    let dir = &config.output_dir;
    write_output(&dir.join("report.json"), &serde_json::to_string_pretty(&doc)?)?;
    write_output(&dir.join("per_seed.csv"), &report.to_per_seed_csv(spec.base_seed))?;
    if config.emit_trajectory {
        write_output(&dir.join("trajectory.csv"), &trajectory_csv(&spec)?)?;
    }
    println!(
        "bound {} success_fraction {:.4} n_diverged {}",
        fmt_g17(report.bound),
        report.success_fraction,
        report.n_diverged
    );
    if report.n_diverged == spec.n_seeds {
        eprintln!("every seed diverged; report written to {}", dir.display());
        return Ok(EXIT_ALL_DIVERGED);
    }
    Ok(EXIT_OK)
}

fn cmd_verify(config_path: &std::path::Path) -> Result<u8, Error> {
    let config: RunConfig = read_json_config(config_path)?;
    setup_threads(config.threads);
    let spec = config.resolve()?;
    let report = run_experiment(&spec)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    let target = 1.0 - spec.beta;
    if report.success_fraction >= target {
        println!("verify: PASS (success_fraction {:.4} >= {target:.4})", report.success_fraction);
        Ok(EXIT_OK)
    } else {
        println!("verify: FAIL (success_fraction {:.4} < {target:.4})", report.success_fraction);
        Ok(EXIT_VERIFY_FAILED)
    }
}

fn cmd_tails(config_path: &std::path::Path) -> Result<u8, Error> {
    let config: TailsConfig = read_json_config(config_path)?;
    let problem = config.problem.build()?;
    let at = config.at.resolve(&problem)?;
    let samples = noise_norm_samples(&problem, &config.noise, &at, config.n_samples, config.batch, config.seed)?;
    let report = tail_report(&samples)?;
    let hist = histogram(&samples, config.n_bins)?;
    let dir = config.output_dir.clone();
    let doc = TailsReportDoc { config, report };
    write_output(&dir.join("tails.json"), &serde_json::to_string_pretty(&doc)?)?;
    write_output(&dir.join("hist.csv"), &hist.to_csv())?;
    println!(
        "p_mr {} p_er {} rho_mr {:.3} rho_er {:.3}",
        fmt_g17(doc.report.p_mr),
        fmt_g17(doc.report.p_er),
        doc.report.rho_mr,
        doc.report.rho_er
    );
    Ok(EXIT_OK)
}

fn cmd_estimator_check(config_path: &std::path::Path) -> Result<u8, Error> {
    let config: EstimatorCheckConfig = read_json_config(config_path)?;
    let problem = config.problem.build()?;
    let at = config.at.resolve(&problem)?;
    let stats = estimator_stats(
        &problem,
        &config.noise,
        &at,
        config.batch,
        config.lambda,
        config.n_trials,
        config.seed,
    )?;
    println!("{}", serde_json::to_string_pretty(&stats)?);

    let mc_margin = 3.0 * (stats.second_moment / stats.n_trials as f64).sqrt();
    let checks = [
        ("max_dev <= 2 lambda", stats.max_dev, 2.0 * config.lambda * (1.0 + 1e-9)),
        (
            "bias_norm <= 4 sigma_eff^2 / lambda + mc_margin",
            stats.bias_norm,
            4.0 * stats.sigma_eff_sq / config.lambda + mc_margin,
        ),
        ("second_moment <= 18 sigma_eff^2", stats.second_moment, 18.0 * stats.sigma_eff_sq),
    ];
    let mut pass = true;
    for (name, got, ceiling) in checks {
        let ok = got <= ceiling;
        pass &= ok;
        println!("{}: {} ({} vs ceiling {})", name, if ok { "PASS" } else { "FAIL" }, fmt_g17(got), fmt_g17(ceiling));
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
