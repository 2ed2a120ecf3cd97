//! Evaluation protocol: deterministic catcher against the scripted random
//! throw, box statistics, and the α / noise sweeps.

pub mod stats;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{object_catalog, EnvConfig, RewardWeights, ThrowCatchEnv, ThrowConfig, CATCHER_ACTION_DIM, CATCHER_OBS_DIM, NUM_OBJECTS, THROWER_ACTION_DIM};
use crate::error::{Error, Result};
use crate::io::{derive_seeds, load_checkpoint, Checkpoint};
use crate::nn::{policy_output, Head, NetworkSpec};

pub use stats::{quantile_sorted, summarize_box_stats, EvalSummary};

/// The fixed-α keys of the ablation, in table order.
pub const ALPHA_KEYS: [f64; 6] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5];
pub const DEFAULT_NOISE_SCALES: [f64; 3] = [1.0, 1.2, 1.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub episodes: usize,
    pub noise_scale: f64,
    pub seed: u64,
    pub per_object: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            episodes: 1000,
            noise_scale: 1.0,
            seed: 0,
            per_object: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::invalid("episodes", "must be at least 1"));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid("noise_scale", "must be positive"));
        }
        Ok(())
    }
}

/// Environment settings the evaluation runs under.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalEnv {
    pub env: EnvConfig,
    pub throw: ThrowConfig,
    pub rewards: RewardWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatcherPolicy {
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
}

impl CatcherPolicy {
    pub fn new(spec: NetworkSpec, params: Vec<f64>) -> Result<Self> {
        if spec.head != Head::GaussianPolicy || spec.input_dim != CATCHER_OBS_DIM || spec.output_dim != CATCHER_ACTION_DIM {
            return Err(Error::invalid(
                "catcher",
                format!(
                    "policy maps {} -> {}, environment needs {CATCHER_OBS_DIM} -> {CATCHER_ACTION_DIM}",
                    spec.input_dim, spec.output_dim
                ),
            ));
        }
        if params.len() != spec.param_count() {
            return Err(Error::dim("catcher parameters", spec.param_count(), params.len()));
        }
        Ok(CatcherPolicy { spec, params })
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let rec = ckpt
            .network("catcher")
            .ok_or_else(|| Error::Checkpoint("no `catcher` network".into()))?;
        CatcherPolicy::new(rec.spec.clone(), rec.params.clone())
    }

    pub fn load(path: &Path) -> Result<Self> {
        CatcherPolicy::from_checkpoint(&load_checkpoint(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub object_id: usize,
    pub reward: f64,
    pub steps: u64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTally {
    pub object_id: usize,
    pub name: String,
    pub episodes: usize,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerObjectReport {
    pub rows: Vec<ObjectTally>,
}

impl PerObjectReport {
    pub fn from_episodes(episodes: &[EpisodeRecord]) -> Self {
        let mut sums = [0.0; NUM_OBJECTS];
        let mut counts = [0usize; NUM_OBJECTS];
        for e in episodes {
            sums[e.object_id] += e.reward;
            counts[e.object_id] += 1;
        }
        let rows = object_catalog()
            .iter()
            .map(|o| ObjectTally {
                object_id: o.id,
                name: o.name.clone(),
                episodes: counts[o.id],
                mean_reward: if counts[o.id] > 0 { sums[o.id] / counts[o.id] as f64 } else { 0.0 },
            })
            .collect();
        PerObjectReport { rows }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub episodes: Vec<EpisodeRecord>,
    pub per_object: Option<PerObjectReport>,
}

impl EvalRun {
    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.reward).collect()
    }

    pub fn summary(&self) -> Result<EvalSummary> {
        summarize_box_stats(&self.rewards())
    }
}

fn run_episode(policy: &CatcherPolicy, env: &EvalEnv, throw: &ThrowConfig, seed: u64, episode: usize) -> Result<EpisodeRecord> {
    let mut e = ThrowCatchEnv::<f64>::new(
        env.env.clone(),
        throw.clone(),
        env.rewards.clone(),
        derive_seeds(seed, &format!("eval:{episode}")),
    );
    let object_id = e.state.active_object;
    let mut obs = e.observe();
    let idle = [0.0; THROWER_ACTION_DIM];
    let mut reward = 0.0;
    loop {
        let action = policy_output(&policy.spec, &policy.params, &obs.catcher)?.mean;
        let out = e.step(&action, &idle)?;
        reward += out.rewards.r_catch;
        if out.done {
            return Ok(EpisodeRecord {
                episode,
                object_id,
                reward,
                steps: out.state.t,
                failed: out.failed,
            });
        }
        obs = out.obs;
    }
}

/// Undiscounted episode catch reward of the mean-action catcher against
/// the scripted throw (zero velocity action, noise scaled by
/// `cfg.noise_scale`). Episode `e` uses its own seed stream, so the result
/// does not depend on scheduling.
pub fn run_eval(policy: &CatcherPolicy, env: &EvalEnv, cfg: &EvalConfig) -> Result<EvalRun> {
    cfg.validate()?;
    let throw = ThrowConfig {
        noise_scale: cfg.noise_scale,
        ..env.throw.clone()
    };
    throw.validate()?;
    let episodes = (0..cfg.episodes)
        .into_par_iter()
        .map(|e| run_episode(policy, env, &throw, cfg.seed, e))
        .collect::<Result<Vec<_>>>()?;
    let per_object = cfg.per_object.then(|| PerObjectReport::from_episodes(&episodes));
    Ok(EvalRun { episodes, per_object })
}

/// One table row; `result` is `None` when its checkpoint was absent.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: String,
    pub alpha: Option<f64>,
    pub scale: f64,
    pub result: Option<(EvalSummary, Vec<EpisodeRecord>)>,
}

impl SweepRow {
    pub fn summary(&self) -> Option<&EvalSummary> {
        self.result.as_ref().map(|(s, _)| s)
    }

    /// File stem for this row's per-episode dump.
    pub fn dump_stem(&self) -> String {
        match self.alpha {
            Some(a) => format!("episodes_{}_alpha{a:.1}_scale{:.1}", self.method, self.scale),
            None => format!("episodes_{}_scale{:.1}", self.method, self.scale),
        }
    }
}

fn evaluate_row(method: &str, alpha: Option<f64>, policy: Option<&CatcherPolicy>, env: &EvalEnv, cfg: &EvalConfig) -> Result<SweepRow> {
    let result = match policy {
        Some(p) => {
            let run = run_eval(p, env, cfg)?;
            Some((run.summary()?, run.episodes))
        }
        None => None,
    };
    Ok(SweepRow {
        method: method.to_string(),
        alpha,
        scale: cfg.noise_scale,
        result,
    })
}

/// Key of one α-ablation checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaKey {
    Fixed(f64),
    Decay,
}

impl AlphaKey {
    pub fn all() -> Vec<AlphaKey> {
        ALPHA_KEYS.iter().map(|&a| AlphaKey::Fixed(a)).chain([AlphaKey::Decay]).collect()
    }

    pub fn file_name(self) -> String {
        match self {
            AlphaKey::Fixed(a) => format!("alpha_{a:.1}.ckpt"),
            AlphaKey::Decay => "decay.ckpt".to_string(),
        }
    }
}

/// One row per α key in the given order.
pub fn sweep_alpha(entries: &[(AlphaKey, Option<CatcherPolicy>)], env: &EvalEnv, cfg: &EvalConfig) -> Result<Vec<SweepRow>> {
    entries
        .iter()
        .map(|(key, policy)| match key {
            AlphaKey::Fixed(a) => evaluate_row("HA", Some(*a), policy.as_ref(), env, cfg),
            AlphaKey::Decay => evaluate_row("HA-decay", None, policy.as_ref(), env, cfg),
        })
        .collect()
}

/// Methods of the robustness sweep with their checkpoint file names.
pub const NOISE_METHODS: [(&str, &str); 3] = [("SA", "sa.ckpt"), ("HA-fixed", "ha_fixed.ckpt"), ("HA-decay", "ha_decay.ckpt")];

/// One row per `(method, scale)`, methods outermost.
pub fn sweep_noise(entries: &[(String, Option<CatcherPolicy>)], scales: &[f64], env: &EvalEnv, cfg: &EvalConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(entries.len() * scales.len());
    for (method, policy) in entries {
        for &scale in scales {
            let c = EvalConfig {
                noise_scale: scale,
                ..cfg.clone()
            };
            rows.push(evaluate_row(method, None, policy.as_ref(), env, &c)?);
        }
    }
    Ok(rows)
}

/// Loads `dir/file` if it exists; a missing file is `None`, a broken one an error.
pub fn load_optional(dir: &Path, file: &str) -> Result<Option<CatcherPolicy>> {
    let path = dir.join(file);
    if path.exists() {
        CatcherPolicy::load(&path).map(Some)
    } else {
        Ok(None)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EpisodeCsv {
    episode: usize,
    object_id: usize,
    reward: f64,
    steps: u64,
    failed: bool,
}

pub fn write_episodes_csv(path: &Path, episodes: &[EpisodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for e in episodes {
        w.serialize(EpisodeCsv {
            episode: e.episode,
            object_id: e.object_id,
            reward: e.reward,
            steps: e.steps,
            failed: e.failed,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_episodes_csv(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<EpisodeCsv>()
        .map(|row| {
            let e = row?;
            Ok(EpisodeRecord {
                episode: e.episode,
                object_id: e.object_id,
                reward: e.reward,
                steps: e.steps,
                failed: e.failed,
            })
        })
        .collect()
}

pub fn write_per_object_csv(path: &Path, report: &PerObjectReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "method", "alpha", "scale", "n", "mean", "median", "q25", "q75", "whisker_low", "whisker_high", "outlier_count",
];

/// Summary table; absent rows keep their keys and read `absent` in every
/// statistic column.
pub fn write_summary_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for row in rows {
        let mut rec = vec![
            row.method.clone(),
            row.alpha.map(|a| a.to_string()).unwrap_or_default(),
            row.scale.to_string(),
        ];
        match row.summary() {
            Some(s) => rec.extend([
                s.n.to_string(),
                s.mean.to_string(),
                s.median.to_string(),
                s.q25.to_string(),
                s.q75.to_string(),
                s.whisker_low.to_string(),
                s.whisker_high.to_string(),
                s.outlier_count.to_string(),
            ]),
            None => rec.extend(std::iter::repeat("absent".to_string()).take(8)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `summary.csv` plus one per-episode dump per present row.
pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_summary_csv(&dir.join("summary.csv"), rows)?;
    for row in rows {
        if let Some((_, episodes)) = &row.result {
            write_episodes_csv(&dir.join(format!("{}.csv", row.dump_stem())), episodes)?;
        }
    }
    Ok(())
}
