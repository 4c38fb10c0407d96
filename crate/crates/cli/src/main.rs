use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use swipt_core::channel::generate_channel_with;
use swipt_core::oracle::{grid_search, unimodality_scan, GridSpec};
use swipt_core::sweep::realization_rng;
use swipt_core::{
    compute_rate_threshold, decompose, emit, run_sweep, solve_joint, solve_ops, solve_otcm, Scheme, SimConfig,
    SwiptProblem,
};

#[derive(Parser)]
#[command(name = "swipt", version, about = "Joint transmit covariance and power-splitting design for MIMO SWIPT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization at one rate requirement.
    Solve(SolveArgs),
    /// Monte Carlo sweep over realizations and rate requirements.
    Sweep(CommonArgs),
    /// Check the solver against the brute-force oracle on random instances.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; unspecified keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Schemes to run (comma-separated or repeated): joint, ops, otcm.
    #[arg(long = "scheme", value_delimiter = ',')]
    schemes: Vec<Scheme>,
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Realization index within the seeded stream.
    #[arg(long, default_value_t = 0)]
    realization: u64,
    /// Rate requirement in bps/Hz.
    #[arg(long, conflicts_with = "rate_fraction")]
    rate: Option<f64>,
    /// Rate requirement as a fraction of this realization's R_max.
    #[arg(long)]
    rate_fraction: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Grid points per axis of the oracle.
    #[arg(long, default_value_t = 400)]
    grid: usize,
}

impl CommonArgs {
    fn load(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.rng_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_path = out.clone();
        }
        if !self.schemes.is_empty() {
            cfg.schemes = self.schemes.clone();
        }
        if let Some(n) = self.realizations {
            cfg.n_realizations = n;
        }
        cfg.validate().context("invalid configuration")?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Validate(args) => validate(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn base_problem(cfg: &SimConfig, realization: u64) -> Result<SwiptProblem> {
    let mut rng = realization_rng(cfg.rng_seed, realization);
    let channel = generate_channel_with(&mut rng, cfg.n_r, cfg.n_t, cfg.theta);
    Ok(SwiptProblem::new(decompose(&channel)?, cfg.p_t_watts, cfg.sigma2_watts(), 0.0)?)
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let cfg = args.common.load()?;
    let base = base_problem(&cfg, args.realization)?;
    let r_max = base.max_rate();
    let rate = match (args.rate, args.rate_fraction) {
        (Some(r), _) => r,
        (None, Some(f)) => f * r_max,
        (None, None) => bail!("pass --rate or --rate-fraction"),
    };
    let prob = base.with_rate(rate)?;
    let mut schemes = cfg.schemes.clone();
    schemes.sort();
    let mut solutions = serde_json::Map::new();
    for scheme in schemes {
        let result = match scheme {
            Scheme::Joint => solve_joint(&prob),
            Scheme::Ops => solve_ops(&prob, &cfg.ops_covariance.build(&prob)?),
            Scheme::Otcm => solve_otcm(&prob, cfg.otcm_rho),
        };
        let value = match result {
            Ok(sol) => json!({
                "solution": sol,
                "p_h": swipt_core::Rectifier::rectify(&cfg.eh_model, sol.p_re),
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        solutions.insert(scheme.to_string(), value);
    }
    let report = json!({
        "realization": args.realization,
        "rng_seed": cfg.rng_seed,
        "singular_values": prob.svd().singular_values(),
        "p_t_watts": cfg.p_t_watts,
        "sigma2_watts": cfg.sigma2_watts(),
        "rate": rate,
        "r_max": r_max,
        "r_th": compute_rate_threshold(prob.svd(), cfg.p_t_watts, cfg.sigma2_watts())?,
        "schemes": solutions,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: CommonArgs) -> Result<ExitCode> {
    let cfg = args.load()?;
    let result = run_sweep(&cfg)?;
    let written = emit(&result, cfg.output_format, &cfg.output_path)?;
    let s = &result.summary;
    println!(
        "{} realizations, {} records, {} infeasible pairs",
        cfg.n_realizations, s.n_records, s.n_infeasible
    );
    println!("mean R_max {:.4} bps/Hz", s.mean_r_max);
    if let Some(r_th) = s.mean_r_th {
        println!("mean R_th {r_th:.4} bps/Hz (closed form {:.4})", s.mean_r_th_closed_form);
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let mut cfg = args.common.load()?;
    if args.common.realizations.is_none() {
        cfg.n_realizations = 10;
    }
    // The grid oracle covers at most three eigenchannels.
    if args.common.config.is_none() {
        cfg.n_r = 2;
        cfg.n_t = 2;
    }
    let grid = GridSpec::new(args.grid, args.grid)?;
    let fractions = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut failures = 0;
    for id in 0..cfg.n_realizations as u64 {
        let base = base_problem(&cfg, id)?;
        let r_max = base.max_rate();
        for fraction in fractions {
            let prob = base.with_rate(fraction * r_max)?;
            let joint = solve_joint(&prob)?;
            let oracle = grid_search(&prob, grid)?;
            let allowed = grid.resolution_bound(&prob).max(0.005 * joint.p_re);
            let gap = joint.p_re - oracle.p_re;
            let unimodal = unimodality_scan(&prob, 200);
            let ok = gap.abs() <= allowed && unimodal && joint.kkt_residual <= swipt_core::joint_opt::KKT_ACCEPT;
            if !ok {
                failures += 1;
            }
            println!(
                "{} realization {id} R={:.4} ({fraction} R_max): joint {:.6e} oracle {:.6e} gap {:+.2e} (allowed {:.2e}) kkt {:.1e} unimodal {unimodal}",
                if ok { "PASS" } else { "FAIL" },
                prob.rate_req(),
                joint.p_re,
                oracle.p_re,
                gap,
                allowed,
                joint.kkt_residual,
            );
        }
    }
    println!(
        "{} of {} checks failed",
        failures,
        cfg.n_realizations * fractions.len()
    );
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
