use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use rayon::prelude::*;

use saferl_bench::{
    emit_plot, run_experiment, write_summary, HyperParams, Metric, RunConfig, SuiteId,
};
use saferl_core::algos::AlgoKind;

/// Constrained-RL benchmark runner: trains one or more algorithms on a
/// suite and writes per-epoch metrics CSVs, a cross-seed summary, and
/// optional SVG learning curves.
#[derive(Parser, Debug)]
#[command(name = "saferl-bench", version, about)]
struct Cli {
    /// Suite name, e.g. Goal_Point_8Hazards or Defense_Drone_8Ghosts.
    #[arg(long)]
    suite: String,

    /// Comma-separated algorithm names (trpo, trpo_lag, trpo_fac, trpo_ipo,
    /// cpo, pcpo_l2, pcpo_kl, trpo_sl, trpo_usl) or "all".
    #[arg(long, default_value = "trpo")]
    algo: String,

    /// Training epochs per seed.
    #[arg(long, default_value_t = 30)]
    epochs: u32,

    /// Environment steps collected per epoch.
    #[arg(long, default_value_t = 4000)]
    steps: usize,

    /// Comma-separated seed list.
    #[arg(long, default_value = "0,1")]
    seeds: String,

    /// Output directory for CSVs, the summary, and plots.
    #[arg(long, default_value = "runs")]
    out: PathBuf,

    /// key=value override of a training hyper-parameter or environment
    /// field (repeatable). Examples: lam=0.95, v0=0.5, lidar_bins=8.
    #[arg(long = "config", value_name = "KEY=VALUE")]
    config: Vec<String>,

    /// Also emit reward/cost/cost-rate SVG plots.
    #[arg(long)]
    plot: bool,

    /// Run at full benchmark scale (200 epochs x 30000 steps).
    #[arg(long)]
    full_scale: bool,
}

fn parse_algos(spec: &str) -> Result<Vec<AlgoKind>> {
    if spec == "all" {
        return Ok(AlgoKind::ALL.to_vec());
    }
    spec.split(',')
        .map(|name| AlgoKind::parse(name.trim()).map_err(|e| anyhow!("{e}")))
        .collect()
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = spec
        .split(',')
        .map(|s| s.trim().parse::<u64>().context("bad seed"))
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        bail!("need at least one seed");
    }
    Ok(seeds)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();

    if let Ok(threads) = std::env::var("GUARD_BENCH_THREADS") {
        let threads: usize = threads
            .parse()
            .context("GUARD_BENCH_THREADS must be an integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }

    let suite = SuiteId::parse(&cli.suite).map_err(|e| anyhow!("{e}"))?;
    let algorithms = parse_algos(&cli.algo)?;
    let seeds = parse_seeds(&cli.seeds)?;
    let (epochs, steps) = if cli.full_scale {
        (200, 30_000)
    } else {
        (cli.epochs, cli.steps)
    };
    if epochs < 1 || steps < 1 {
        bail!("epochs and steps must be at least 1");
    }

    let mut hyper = HyperParams::default();
    let mut env_overrides = Vec::new();
    for pair in &cli.config {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("--config expects KEY=VALUE, got '{pair}'"))?;
        if !hyper.apply_override(key, value)? {
            env_overrides.push((key.to_string(), value.to_string()));
        }
    }

    let configs: Vec<RunConfig> = algorithms
        .iter()
        .map(|&algorithm| {
            let mut cfg = RunConfig::new(suite, algorithm);
            cfg.epochs = epochs;
            cfg.steps_per_epoch = steps;
            cfg.seeds = seeds.clone();
            cfg.out_dir = cli.out.clone();
            cfg.hyper = hyper;
            cfg.env_overrides = env_overrides.clone();
            cfg
        })
        .collect();
    // Validate the merged environment config before spending any compute.
    configs[0].world_config()?;

    println!(
        "suite {suite} | algorithms {} | {} epochs x {} steps | seeds {:?}",
        algorithms
            .iter()
            .map(|a| a.name())
            .collect::<Vec<_>>()
            .join(","),
        epochs,
        steps,
        seeds
    );

    let results: Vec<(AlgoKind, Vec<saferl_bench::SeedResult>)> = configs
        .par_iter()
        .map(|cfg| run_experiment(cfg).map(|r| (cfg.algorithm, r)))
        .collect::<Result<_>>()?;

    let mut all_ok = true;
    for (algo, seed_results) in &results {
        for sr in seed_results {
            match &sr.outcome {
                Ok(run) => {
                    let last = run.rows.last().expect("at least one epoch");
                    println!(
                        "{algo} seed {}: J_r {:.4}  M_c {:.4}  rho_c {:.6}  -> {}",
                        sr.seed,
                        last.j_r,
                        last.m_c,
                        last.rho_c,
                        run.csv_path.display()
                    );
                }
                Err(err) => {
                    all_ok = false;
                    eprintln!("{algo} seed {} FAILED: {err}", sr.seed);
                }
            }
        }
    }

    if all_ok {
        let summary = write_summary(&suite, &cli.out, &results)?;
        println!("summary -> {}", summary.display());
    } else {
        eprintln!("summary skipped: missing seeds");
    }

    if cli.plot {
        let groups: Vec<(String, Vec<PathBuf>)> = results
            .iter()
            .map(|(algo, seed_results)| {
                let paths = seed_results
                    .iter()
                    .filter_map(|sr| sr.outcome.as_ref().ok().map(|r| r.csv_path.clone()))
                    .collect();
                (algo.name().to_string(), paths)
            })
            .collect();
        for metric in Metric::ALL {
            let out = cli
                .out
                .join(format!("{}_{}.svg", suite.format(), metric.name()));
            emit_plot(&groups, metric, &out)?;
            println!("plot -> {}", out.display());
        }
    }

    Ok(all_ok)
}
