use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use throwcatch::eval::{
    load_optional, run_eval, sweep_alpha, sweep_noise, write_episodes_csv, write_per_object_csv, write_summary_csv, write_sweep,
    AlphaKey, CatcherPolicy, EvalConfig, EvalEnv, SweepRow, NOISE_METHODS,
};
use throwcatch::io::{load_checkpoint, parse_config, RunConfig};
use throwcatch::trainer::{run_training, train, AlphaMode, Mode, Trainer};

#[derive(Parser)]
#[command(name = "throwcatch", version, about = "Throw-catch environment, heterogeneous-agent PPO trainer and evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sa,
    Harl,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Fixed,
    Decay,
}

#[derive(Subcommand)]
enum Command {
    /// Train catcher (and thrower in harl mode).
    Train {
        /// TOML run configuration; defaults are used for anything missing.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Fixed blend weight, or the final value with `--alpha-schedule decay`.
        #[arg(long)]
        alpha: Option<f64>,
        /// `decay` goes linearly from 1.0 to `--alpha` over the run.
        #[arg(long, value_enum)]
        alpha_schedule: Option<ScheduleArg>,
        #[arg(long, env = "SEED")]
        seed: Option<u64>,
        #[arg(long, env = "OUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<u64>,
        /// Continue from this checkpoint instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a catcher checkpoint against the scripted throw.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        #[arg(long)]
        per_object: bool,
        #[arg(long, env = "SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "OUT_DIR")]
        out: PathBuf,
        /// Run configuration supplying environment settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate `alpha_<a>.ckpt` for each ablation α plus `decay.ckpt`.
    SweepAlpha {
        #[arg(long)]
        checkpoints: PathBuf,
        #[arg(long, env = "OUT_DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        #[arg(long, env = "SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate `sa.ckpt`, `ha_fixed.ckpt` and `ha_decay.ckpt` at several noise scales.
    SweepNoise {
        #[arg(long)]
        checkpoints: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1.0,1.2,1.5")]
        scales: Vec<f64>,
        #[arg(long, env = "OUT_DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, env = "SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the built-in oracle and property checks.
    Verify,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => parse_config(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn eval_env(config: Option<&Path>) -> Result<EvalEnv> {
    let c = load_config(config)?;
    Ok(EvalEnv {
        env: c.env,
        throw: c.throw,
        rewards: c.rewards,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    config: Option<PathBuf>,
    mode: Option<ModeArg>,
    alpha: Option<f64>,
    schedule: Option<ScheduleArg>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    iterations: Option<u64>,
    resume: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = load_config(config.as_deref())?;
    if let Some(m) = mode {
        cfg.mode = match m {
            ModeArg::Sa => Mode::Sa,
            ModeArg::Harl => Mode::Harl,
        };
    }
    match schedule {
        Some(ScheduleArg::Decay) => {
            cfg.alpha_schedule.mode = AlphaMode::LinearDecay;
            cfg.alpha_schedule.alpha_end = Some(alpha.unwrap_or(cfg.rewards.alpha));
            cfg.rewards.alpha = 1.0;
        }
        Some(ScheduleArg::Fixed) => {
            cfg.alpha_schedule.mode = AlphaMode::Fixed;
            cfg.alpha_schedule.alpha_end = None;
            if let Some(a) = alpha {
                cfg.rewards.alpha = a;
            }
        }
        None => {
            if let Some(a) = alpha {
                cfg.rewards.alpha = a;
            }
        }
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = iterations {
        cfg.iterations = n;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    let out_dir = cfg.output_dir.clone();
    let trainer = match resume {
        Some(path) => {
            let ckpt = load_checkpoint(&path).with_context(|| format!("loading {}", path.display()))?;
            if ckpt.config_digest != cfg.digest() {
                eprintln!("warning: checkpoint was written under a different run configuration");
            }
            let mut trainer = Trainer::from_checkpoint(cfg, &ckpt)?;
            run_training(&mut trainer, &out_dir)?;
            trainer
        }
        None => train(cfg, &out_dir)?,
    };
    println!(
        "trained {} iterations in {} mode; checkpoints in {}",
        trainer.iteration,
        trainer.config.mode.name(),
        out_dir.display()
    );
    Ok(())
}

fn print_rows(rows: &[SweepRow]) {
    for row in rows {
        let key = match row.alpha {
            Some(a) => format!("{} alpha={a:.1}", row.method),
            None => row.method.clone(),
        };
        match row.summary() {
            Some(s) => println!("{key} scale={:.1}: mean {:.2} median {:.2} (n={})", row.scale, s.mean, s.median, s.n),
            None => println!("{key} scale={:.1}: absent", row.scale),
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train {
            config,
            mode,
            alpha,
            alpha_schedule,
            seed,
            out,
            iterations,
            resume,
        } => cmd_train(config, mode, alpha, alpha_schedule, seed, out, iterations, resume)?,
        Command::Eval {
            checkpoint,
            episodes,
            noise_scale,
            per_object,
            seed,
            out,
            config,
        } => {
            let policy = CatcherPolicy::load(&checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
            let cfg = EvalConfig {
                episodes,
                noise_scale,
                seed,
                per_object,
            };
            let run = run_eval(&policy, &eval_env(config.as_deref())?, &cfg)?;
            std::fs::create_dir_all(&out)?;
            write_episodes_csv(&out.join("episodes.csv"), &run.episodes)?;
            let row = SweepRow {
                method: "eval".into(),
                alpha: None,
                scale: noise_scale,
                result: Some((run.summary()?, run.episodes.clone())),
            };
            write_summary_csv(&out.join("summary.csv"), std::slice::from_ref(&row))?;
            if let Some(report) = &run.per_object {
                write_per_object_csv(&out.join("per_object.csv"), report)?;
            }
            print_rows(&[row]);
        }
        Command::SweepAlpha {
            checkpoints,
            out,
            episodes,
            noise_scale,
            seed,
            config,
        } => {
            let entries = AlphaKey::all()
                .into_iter()
                .map(|k| Ok((k, load_optional(&checkpoints, &k.file_name())?)))
                .collect::<Result<Vec<_>>>()?;
            let cfg = EvalConfig {
                episodes,
                noise_scale,
                seed,
                per_object: false,
            };
            let rows = sweep_alpha(&entries, &eval_env(config.as_deref())?, &cfg)?;
            write_sweep(&out, &rows)?;
            print_rows(&rows);
        }
        Command::SweepNoise {
            checkpoints,
            scales,
            out,
            episodes,
            seed,
            config,
        } => {
            if scales.is_empty() {
                bail!("--scales must list at least one value");
            }
            let entries = NOISE_METHODS
                .iter()
                .map(|(m, f)| Ok((m.to_string(), load_optional(&checkpoints, f)?)))
                .collect::<Result<Vec<_>>>()?;
            let cfg = EvalConfig {
                episodes,
                seed,
                ..Default::default()
            };
            let rows = sweep_noise(&entries, &scales, &eval_env(config.as_deref())?, &cfg)?;
            write_sweep(&out, &rows)?;
            print_rows(&rows);
        }
        Command::Verify => {
            let outcomes = throwcatch::verify::run_all();
            let mut failed = 0;
            for o in &outcomes {
                println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                failed += usize::from(!o.passed);
            }
            println!("{} checks, {failed} failed", outcomes.len());
            if failed > 0 {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
