//! Seeded training runs: collect, fit critics, update, log.

use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use ndarray::Array1;
use rayon::prelude::*;

use saferl_core::algos::{Algorithm, UpdateData};
use saferl_core::env::{observation_dim, Env, WorldConfig};
use saferl_core::numerics::RngStream;
use saferl_core::policy::{AdamState, GaussianPolicy, ValueNet, HIDDEN_LAYERS};
use saferl_core::runtime::{collect_rollouts, estimate_advantages, Batch};

use crate::hyper::HyperParams;
use crate::metrics::{compute_metrics, MetricsRow, CSV_HEADER};
use crate::suite::SuiteId;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub suite: SuiteId,
    pub algorithm: saferl_core::algos::AlgoKind,
    pub epochs: u32,
    pub steps_per_epoch: usize,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub hyper: HyperParams,
    /// Environment `key=value` overrides applied on top of the suite.
    pub env_overrides: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(suite: SuiteId, algorithm: saferl_core::algos::AlgoKind) -> Self {
        Self {
            suite,
            algorithm,
            epochs: 30,
            steps_per_epoch: 4000,
            seeds: vec![0, 1],
            out_dir: PathBuf::from("runs"),
            hyper: HyperParams::default(),
            env_overrides: Vec::new(),
        }
    }

    pub fn world_config(&self) -> Result<WorldConfig> {
        let mut cfg = self.suite.world_config();
        for (key, value) in &self.env_overrides {
            cfg.apply_override(key, value)
                .map_err(|e| anyhow!("env override {key}={value}: {e}"))?;
        }
        cfg.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(cfg)
    }

    pub fn csv_path(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!(
            "{}_{}_seed{}.csv",
            self.suite.format(),
            self.algorithm.name(),
            seed
        ))
    }
}

/// Result of one seed's full training run.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    pub csv_path: PathBuf,
}

/// One seed per entry; failed seeds carry the error text so the caller can
/// report and exit nonzero.
#[derive(Debug)]
pub struct SeedResult {
    pub seed: u64,
    pub outcome: std::result::Result<SeedRun, String>,
}

/// Deterministic per-episode environment seed.
fn episode_seed(run_seed: u64, epoch: u32, episode: u64) -> u64 {
    RngStream::new(run_seed)
        .derive(0xE41 + epoch as u64)
        .derive(episode)
        .seed()
}

/// Run every seed of the experiment (in parallel) and write one CSV per
/// seed, appended epoch by epoch.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<SeedResult>> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let results: Vec<SeedResult> = cfg
        .seeds
        .par_iter()
        .map(|&seed| SeedResult {
            seed,
            outcome: run_seed(cfg, seed, |_, _| {}).map_err(|e| format!("{e:#}")),
        })
        .collect();
    Ok(results)
}

/// Train one seed. The observer sees every epoch's raw batch together with
/// the metrics row computed from it (used by verification suites to
/// recompute metrics from raw step logs).
pub fn run_seed(
    cfg: &RunConfig,
    seed: u64,
    mut observer: impl FnMut(&Batch, &MetricsRow),
) -> Result<SeedRun> {
    let world = cfg.world_config()?;
    let obs_dim = observation_dim(&world);
    let act_dim = world.action_dim();
    let hp = &cfg.hyper;

    let mut init_rng = RngStream::new(seed).derive(0xA110C);
    let mut policy = GaussianPolicy::new(obs_dim, act_dim, &HIDDEN_LAYERS, &mut init_rng);
    let mut value_net = ValueNet::new(obs_dim, &HIDDEN_LAYERS, &mut init_rng);
    let mut cost_value_net = ValueNet::new(obs_dim, &HIDDEN_LAYERS, &mut init_rng);
    let mut value_opt = AdamState::new(value_net.net().param_count());
    let mut cost_value_opt = AdamState::new(cost_value_net.net().param_count());
    let mut algorithm = Algorithm::new(
        cfg.algorithm,
        obs_dim,
        act_dim,
        hp.trust_region(),
        hp.constraint(),
        &mut init_rng,
    );
    let warmup_epochs = hp.warmup_epochs(cfg.epochs);

    fs::create_dir_all(&cfg.out_dir)?;
    let csv_path = cfg.csv_path(seed);
    let mut csv = File::create(&csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))?;
    writeln!(csv, "{CSV_HEADER}")?;

    let mut rows: Vec<MetricsRow> = Vec::with_capacity(cfg.epochs as usize);
    let mut cumulative_cost = 0.0;
    let mut cumulative_steps = 0u64;

    for epoch in 0..cfg.epochs {
        let mut rollout_rng = RngStream::new(seed).derive(0x5A3 + epoch as u64);
        let shield_active = cfg.algorithm.uses_shield() && epoch >= warmup_epochs;
        let batch = {
            let shield = if shield_active {
                algorithm.shield()
            } else {
                None
            };
            collect_rollouts(
                |episode| Env::reset(&world, episode_seed(seed, epoch, episode)),
                &policy,
                &value_net,
                &cost_value_net,
                cfg.steps_per_epoch,
                epoch,
                &mut rollout_rng,
                shield.as_deref(),
            )?
        };

        let estimates = estimate_advantages(&batch, hp.gamma, hp.lam, true)?;
        let data = UpdateData::from_batch(&batch, &estimates, &policy)?;

        value_net.fit_adam(
            data.obs.view(),
            Array1::from_vec(estimates.reward_returns.clone()).view(),
            hp.value_iters,
            hp.value_lr,
            &mut value_opt,
        )?;
        cost_value_net.fit_adam(
            data.obs.view(),
            Array1::from_vec(estimates.cost_returns.clone()).view(),
            hp.value_iters,
            hp.value_lr,
            &mut cost_value_opt,
        )?;

        let (next_policy, report) = algorithm.update(&policy, &data)?;
        policy = next_policy;
        if cfg.algorithm.uses_shield() {
            algorithm.fit_shield_models(&batch)?;
        }

        let episodes = batch.completed_episode_totals();
        let epoch_cost: f64 = batch.trajectories.iter().map(|t| t.total_cost()).sum();
        cumulative_cost += epoch_cost;
        cumulative_steps += batch.total_steps as u64;
        let row = compute_metrics(
            epoch,
            &episodes,
            rows.last(),
            cumulative_cost,
            cumulative_steps,
            &report,
        );
        writeln!(csv, "{}", row.csv_line())?;
        csv.flush()?;
        observer(&batch, &row);
        rows.push(row);
    }

    Ok(SeedRun {
        seed,
        rows,
        csv_path,
    })
}

/// Write the cross-seed summary (final-epoch means) for a set of completed
/// experiments. Fails if any seed is missing.
pub fn write_summary(
    suite: &SuiteId,
    out_dir: &Path,
    experiments: &[(saferl_core::algos::AlgoKind, Vec<SeedResult>)],
) -> Result<PathBuf> {
    let mut entries = Vec::new();
    for (algo, results) in experiments {
        let mut finals = Vec::new();
        let mut missing = Vec::new();
        for r in results {
            match &r.outcome {
                Ok(run) => match run.rows.last() {
                    Some(last) => finals.push(*last),
                    None => missing.push(r.seed),
                },
                Err(_) => missing.push(r.seed),
            }
        }
        if !missing.is_empty() {
            anyhow::bail!("algorithm {algo} is missing seeds {missing:?}");
        }
        entries.push((algo.name().to_string(), finals));
    }
    let csv = crate::metrics::summary_csv(&entries)?;
    let path = out_dir.join(format!("{}_summary.csv", suite.format()));
    fs::write(&path, csv)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use saferl_core::algos::AlgoKind;

    fn tiny_config(dir: &Path) -> RunConfig {
        let suite = SuiteId::parse("Goal_Point_8Hazards").unwrap();
        let mut cfg = RunConfig::new(suite, AlgoKind::Trpo);
        cfg.epochs = 2;
        cfg.steps_per_epoch = 120;
        cfg.seeds = vec![0];
        cfg.out_dir = dir.to_path_buf();
        cfg.env_overrides
            .push(("max_episode_steps".into(), "60".into()));
        cfg
    }

    #[test]
    fn identical_seeds_produce_identical_csv_bytes() {
        let dir_a = std::env::temp_dir().join("srl_bench_det_a");
        let dir_b = std::env::temp_dir().join("srl_bench_det_b");
        let _ = fs::remove_dir_all(&dir_a);
        let _ = fs::remove_dir_all(&dir_b);
        let cfg_a = tiny_config(&dir_a);
        let cfg_b = tiny_config(&dir_b);
        run_experiment(&cfg_a).unwrap();
        run_experiment(&cfg_b).unwrap();
        let a = fs::read(cfg_a.csv_path(0)).unwrap();
        let b = fs::read(cfg_b.csv_path(0)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        let _ = fs::remove_dir_all(&dir_a);
        let _ = fs::remove_dir_all(&dir_b);
    }

    #[test]
    fn zero_cost_env_logs_zero_episodic_cost() {
        let dir = std::env::temp_dir().join("srl_bench_zerocost");
        let _ = fs::remove_dir_all(&dir);
        let mut cfg = tiny_config(&dir);
        cfg.env_overrides
            .push(("constraint_count".into(), "0".into()));
        let results = run_experiment(&cfg).unwrap();
        for r in results {
            let run = r.outcome.expect("seed should succeed");
            for row in run.rows {
                assert_eq!(row.m_c, 0.0);
                assert_eq!(row.rho_c, 0.0);
            }
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn single_epoch_rho_is_cost_over_steps() {
        let dir = std::env::temp_dir().join("srl_bench_rho");
        let _ = fs::remove_dir_all(&dir);
        let mut cfg = tiny_config(&dir);
        cfg.epochs = 1;
        let mut total_cost = 0.0;
        let mut total_steps = 0usize;
        let run = run_seed(&cfg, 0, |batch, _| {
            total_cost += batch
                .trajectories
                .iter()
                .map(|t| t.total_cost())
                .sum::<f64>();
            total_steps += batch.total_steps;
        })
        .unwrap();
        assert_eq!(total_steps, cfg.steps_per_epoch);
        let expected = total_cost / total_steps as f64;
        assert_eq!(run.rows[0].rho_c, expected);
        let _ = fs::remove_dir_all(&dir);
    }
}
