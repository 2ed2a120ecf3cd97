//! Acceptance suite. Prints one PASS/FAIL line per criterion. Failures are
//! reported but only turn into a nonzero exit with `ACCEPTANCE_STRICT=1`.
//!
//! The learning-progress and method-comparison criteria train nine policies
//! (three methods, three seeds) and take a while on a small machine.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use throwcatch::env::{
    self, blend_rewards, object_catalog, physics_step, reward_catch, reward_throw, EnvConfig, RewardWeights, ThrowConfig,
    ThrowVelocity, Vec2, WorldState, CATCHER_ACTION_DIM, CATCHER_OBS_DIM, GLOBAL_STATE_DIM,
};
use throwcatch::eval::{
    read_episodes_csv, run_eval, summarize_box_stats, sweep_alpha, sweep_noise, write_sweep, AlphaKey, CatcherPolicy, EvalConfig,
    EvalEnv, EvalSummary,
};
use throwcatch::io::{load_checkpoint, read_metrics, MetricsRecord, RunConfig};
use throwcatch::nn::{init_params, NetworkSpec};
use throwcatch::trainer::{
    batch_log_probs, checkpoint_path, compound_ratio, compute_gae, happo_update, normalize_advantages, ppo_clip_loss, ppo_update,
    run_training, surrogate_gradient, train, value_gradient, AgentBatch, GaeConfig, Learner, Mode, PpoConfig, Trainer,
    METRICS_FILE,
};

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, passed: bool, detail: String) {
        let line = format!("[{}] criterion {id:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((passed, line));
    }
}

// ---------------------------------------------------------------- 1

fn random_catcher_batch(spec: &NetworkSpec, params: &[f64], n: usize, rng: &mut ChaCha8Rng) -> AgentBatch<f64> {
    let mut b = AgentBatch::new(spec.input_dim, spec.output_dim);
    for s in 0..n {
        b.obs.extend((0..spec.input_dim).map(|_| rng.gen_range(-1.0..1.0)));
        b.actions.extend((0..spec.output_dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        b.rewards.push(0.0);
        b.values.push(0.0);
        b.dones.push(false);
        b.advantages.push(rng.sample(StandardNormal));
        b.returns.push(rng.gen_range(-2.0..2.0));
        b.anchor.push(s);
        b.span.push((s, s + 1));
    }
    // Old log probs near the current ones so that both clip branches occur.
    b.old_log_probs = vec![0.0; n];
    let current = batch_log_probs(spec, params, &b).unwrap();
    b.old_log_probs = current.iter().map(|lp| lp + rng.gen_range(-0.4..0.4)).collect();
    b
}

fn rel_err(fd: f64, analytic: f64) -> f64 {
    (fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1e-6)
}

fn criterion_gradients(report: &mut Report) {
    let start = Instant::now();
    let h = 1e-5;
    let mut worst = 0.0_f64;
    let mut checked = 0usize;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = NetworkSpec::policy(CATCHER_OBS_DIM, vec![16, 16], CATCHER_ACTION_DIM);
        let mut params = init_params::<f64, _>(&spec, 1.0, 1.0, &mut rng);
        let off = spec.log_std_offset().unwrap();
        for p in &mut params[off..] {
            *p = rng.gen_range(-0.5..0.5);
        }
        let batch = random_catcher_batch(&spec, &params, 12, &mut rng);
        let idx: Vec<usize> = (0..batch.len()).collect();
        let cfg = PpoConfig {
            entropy_coef: 0.01,
            ..Default::default()
        };
        let loss_at = |p: &[f64]| {
            let l = Learner::new(spec.clone(), p.to_vec(), 1e-3).unwrap();
            surrogate_gradient(&l, &batch, &idx, &batch.advantages, &cfg).unwrap()
        };
        let (_, grad, _) = loss_at(&params);
        let mut p = params.clone();
        for k in 0..params.len() {
            p[k] = params[k] + h;
            let up = loss_at(&p).0;
            p[k] = params[k] - h;
            let down = loss_at(&p).0;
            p[k] = params[k];
            worst = worst.max(rel_err((up - down) / (2.0 * h), grad[k]));
            checked += 1;
        }

        let vspec = NetworkSpec::value(GLOBAL_STATE_DIM, vec![16, 16]);
        let vparams = init_params::<f64, _>(&vspec, 1.0, 1.0, &mut rng);
        let states: Vec<f64> = (0..12 * GLOBAL_STATE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let returns: Vec<f64> = (0..12).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let value_at = |p: &[f64]| {
            let l = Learner::new(vspec.clone(), p.to_vec(), 1e-3).unwrap();
            value_gradient(&l, &states, &returns, &idx, cfg.value_coef).unwrap()
        };
        let (_, vgrad) = value_at(&vparams);
        let mut p = vparams.clone();
        for k in 0..vparams.len() {
            p[k] = vparams[k] + h;
            let up = value_at(&p).0;
            p[k] = vparams[k] - h;
            let down = value_at(&p).0;
            p[k] = vparams[k];
            worst = worst.max(rel_err((up - down) / (2.0 * h), vgrad[k]));
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report.record(
        1,
        "gradient correctness",
        worst <= 1e-4 && secs < 60.0,
        format!("max relative error {worst:.2e} over {checked} parameters, 10 seeds, nets [16,16] (limit 1e-4), {secs:.1}s"),
    );
}

// ---------------------------------------------------------------- 2

fn criterion_gae(report: &mut Report) {
    let cfg = GaeConfig::default();
    let mut worst = 0.0_f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = 50;
        let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let values: Vec<f64> = (0..=n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let dones: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.04)).collect();
        // Brute force: Σ_k (γλ)^k δ_{t+k}, stopping after the first terminal step.
        let delta: Vec<f64> = (0..n)
            .map(|t| rewards[t] + if dones[t] { 0.0 } else { cfg.gamma * values[t + 1] } - values[t])
            .collect();
        let expected: Vec<f64> = (0..n)
            .map(|t| {
                let mut sum = 0.0;
                for k in 0..n - t {
                    sum += (cfg.gamma * cfg.lam).powi(k as i32) * delta[t + k];
                    if dones[t + k] {
                        break;
                    }
                }
                sum
            })
            .collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, &cfg).unwrap();
        for t in 0..n {
            worst = worst.max((expected[t] - adv[t]).abs());
            worst = worst.max((expected[t] + values[t] - ret[t]).abs());
        }
    }
    report.record(
        2,
        "GAE oracle",
        worst <= 1e-10,
        format!("max abs error {worst:.2e} on 100 random 50-step trajectories (limit 1e-10)"),
    );
}

// ---------------------------------------------------------------- 3

fn criterion_happo_degeneracy(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let spec = NetworkSpec::policy(CATCHER_OBS_DIM, vec![32, 32], CATCHER_ACTION_DIM);
    let params = init_params::<f64, _>(&spec, 1.0, 0.01, &mut rng);
    let batch = random_catcher_batch(&spec, &params, 256, &mut rng);
    let cfg = PpoConfig::default();

    let mut happo = Learner::new(spec.clone(), params.clone(), cfg.learning_rate).unwrap();
    let mut ppo = happo.clone();
    let h = happo_update(&mut [&mut happo], &[&batch], batch.len(), &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let adv = normalize_advantages(&batch.advantages);
    let (p_stats, _) = ppo_update(&mut ppo, &batch, &adv, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let identical = happo.params == ppo.params && happo.opt == ppo.opt && h.stats[0] == p_stats;
    let first_m = compound_ratio::<f64>(&[], &[], &adv).unwrap();
    let m_is_adv = first_m == adv;
    report.record(
        3,
        "HAPPO degeneracy",
        identical && m_is_adv,
        format!("one-agent update bit-identical to PPO: {identical}; first-agent M == normalised advantage: {m_is_adv}"),
    );
}

// ---------------------------------------------------------------- 4

fn criterion_clip_table(report: &mut Report) {
    let eps = 0.2;
    let ln = f64::ln;
    // (log ρ, M, expected per-sample objective min(ρM, clip(ρ)M))
    let table: [(&str, f64, f64, f64); 6] = [
        ("M>0, rho above 1+eps: clipped", ln(1.5), 2.0, 1.2 * 2.0),
        ("M>0, rho below 1-eps: unclipped", ln(0.5), 2.0, 0.5f64.ln().exp() * 2.0),
        ("M<0, rho above 1+eps: unclipped", ln(1.5), -2.0, 1.5f64.ln().exp() * -2.0),
        ("M<0, rho below 1-eps: clipped", ln(0.5), -2.0, 0.8 * -2.0),
        ("M>0, rho inside", ln(1.1), 3.0, 1.1f64.ln().exp() * 3.0),
        ("M<0, rho inside", ln(0.9), -3.0, 0.9f64.ln().exp() * -3.0),
    ];
    let mut mismatches = Vec::new();
    for (name, lp, m, expected) in table {
        let loss = ppo_clip_loss(&[lp], &[0.0], &[m], eps).unwrap();
        if expected != -loss {
            mismatches.push(format!("{name}: expected {expected}, got {}", -loss));
        }
    }
    report.record(
        4,
        "clip-branch table",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "all four sign/clip branches (plus both in-range cases) exact".into()
        } else {
            mismatches.join("; ")
        },
    );
}

// ---------------------------------------------------------------- 5

fn criterion_physics(report: &mut Report) {
    let cfg = EnvConfig::default();
    let (g, dt) = (cfg.gravity, cfg.dt);
    let mut worst_rec = 0.0_f64;
    let mut worst_margin = f64::INFINITY;
    for (k, &(v0x, v0z, x0, z0)) in [(3.0, 4.5, -0.8, 0.3), (-1.0, 0.0, 0.0, 5.0), (5.0, 8.0, -1.0, 0.35)].iter().enumerate() {
        let obj = &object_catalog()[k];
        let far = [Vec2::new(50.0, 50.0), Vec2::new(50.0, 49.0)];
        let mut s = WorldState::<f64>::new(obj, Vec2::new(x0, z0), far);
        s.object.velocity = Vec2::new(v0x, v0z);
        s.thrown = true;
        // Discrete oracle: v ← v − g·dt, p ← p + v·dt.
        let (mut x, mut z, mut vx, mut vz) = (x0, z0, v0x, v0z);
        for step in 1..=120u32 {
            s = physics_step(&s, &[0.0; CATCHER_ACTION_DIM], &cfg).unwrap();
            vz -= g * dt;
            x += vx * dt;
            z += vz * dt;
            vx += 0.0;
            worst_rec = worst_rec
                .max((s.object.position.x - x).abs())
                .max((s.object.position.z - z).abs())
                .max((s.object.velocity.z - vz).abs());
            let t = step as f64 * dt;
            let closed = z0 + v0z * t - 0.5 * g * t * t;
            let drift = (s.object.position.z - closed).abs().max((s.object.position.x - (x0 + v0x * t)).abs());
            worst_margin = worst_margin.min(g * t * dt / 2.0 + 1e-9 - drift);
        }
    }
    report.record(
        5,
        "free-flight physics",
        worst_rec <= 1e-12 && worst_margin >= 0.0,
        format!("recursion error {worst_rec:.2e} (limit 1e-12); min slack to g*t*dt/2 + 1e-9 bound {worst_margin:.2e}"),
    );
}

// ---------------------------------------------------------------- 6

fn random_state(rng: &mut ChaCha8Rng) -> WorldState<f64> {
    let obj = &object_catalog()[rng.gen_range(0..15)];
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let mut s = WorldState::<f64>::new(
        obj,
        Vec2::new(u(-1.0, 1.0), u(0.0, 2.0)),
        [Vec2::new(u(-1.0, 1.0), u(0.5, 1.5)), Vec2::new(u(-1.0, 1.0), u(0.5, 1.5))],
    );
    s.object.velocity = Vec2::new(u(-5.0, 5.0), u(-5.0, 5.0));
    s.object.angular_velocity = u(-10.0, 10.0);
    for p in &mut s.palms {
        p.grip = u(0.0, 1.0);
        p.velocity = Vec2::new(u(-4.0, 4.0), u(-4.0, 4.0));
    }
    // Put a palm on the object now and then so contact terms are exercised.
    if u(0.0, 1.0) < 0.3 {
        s.palms[0].position = s.object.position + Vec2::new(u(-0.05, 0.05), u(-0.05, 0.05));
    }
    s
}

fn criterion_rewards(report: &mut Report) {
    let w = RewardWeights::default();
    let expected_weights = [5.0, 1.0, 0.5, 0.5, 1e-3, 0.8, 0.2];
    let weights_ok = w.as_array() == expected_weights;
    let cfg = EnvConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    let mut blend_ok = true;
    for _ in 0..10_000 {
        let s = random_state(&mut rng);
        let action: Vec<f64> = (0..CATCHER_ACTION_DIM).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let (r_catch, c) = reward_catch(&s, &action, &w, &cfg);
        let recomposed = expected_weights[0] * c.r_hand_dist + expected_weights[1] * c.r_goal + expected_weights[2] * c.r_finger_contact
            - expected_weights[3] * c.r_arm_contact
            - expected_weights[4] * c.r_catcher_action;
        worst = worst.max((recomposed - r_catch).abs());
        // Terms themselves against their definitions.
        let mean_dist = (s.palms[0].position.dist(s.object.position) + s.palms[1].position.dist(s.object.position)) / 2.0;
        worst = worst.max(((-mean_dist).exp() - c.r_hand_dist).abs());
        worst = worst.max((action.iter().map(|a| a * a).sum::<f64>() - c.r_catcher_action).abs());

        let vel = ThrowVelocity {
            linear: Vec2::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)),
            angular: rng.gen_range(-20.0..20.0),
        };
        let v_action: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (r_throw, t) = reward_throw(&vel, &v_action, &w);
        worst = worst.max((expected_weights[5] * t.r_object_velocity + expected_weights[6] * t.r_thrower_action - r_throw).abs());
        let speed = (vel.linear.x * vel.linear.x + vel.linear.z * vel.linear.z).sqrt() + 0.1 * vel.angular.abs();
        worst = worst.max((speed - t.r_object_velocity).abs());

        blend_ok &= blend_rewards(r_catch, r_throw, 1.0).unwrap() == r_catch;
        blend_ok &= blend_rewards(r_catch, r_throw, 0.0).unwrap() == r_throw;
    }
    report.record(
        6,
        "reward identities",
        weights_ok && blend_ok && worst <= 1e-12,
        format!("default weights match {expected_weights:?}: {weights_ok}; alpha in {{0,1}} exact: {blend_ok}; max recomposition error {worst:.2e} over 10^4 states (limit 1e-12)"),
    );
}

// ---------------------------------------------------------------- 7

fn criterion_thrower_locality(report: &mut Report) {
    let cfg = EnvConfig::default();
    let tc = ThrowConfig::default();
    let w = RewardWeights::default();
    let mut cases = 0;
    let mut all_identical = true;
    for seed in 0..50u64 {
        let mut arng = ChaCha8Rng::seed_from_u64(seed + 500);
        let actions: Vec<Vec<f64>> = (0..cfg.horizon)
            .map(|_| (0..CATCHER_ACTION_DIM).map(|_| arng.gen_range(-1.0..1.0)).collect())
            .collect();
        let perturb_at = arng.gen_range(1..cfg.horizon);
        let rollout = |perturbed: bool| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut s, _) = env::reset::<f64, _>(&cfg, &tc, &mut rng);
            let mut trace = Vec::new();
            for t in 0..cfg.horizon {
                let thrower = match t {
                    0 => [1.0, -0.5, 2.0],
                    t if perturbed && t >= perturb_at => [2.0, 2.0, -5.0],
                    _ => [0.0; 3],
                };
                let out = env::step(&s, &actions[t as usize], &thrower, &w, &cfg, &tc, &mut rng).unwrap();
                s = out.state.clone();
                let done = out.done;
                trace.push(out);
                if done {
                    break;
                }
            }
            trace
        };
        all_identical &= rollout(false) == rollout(true);
        cases += 1;
    }
    report.record(
        7,
        "thrower locality",
        all_identical,
        format!("{cases} episodes with thrower actions perturbed for t > 0: trajectories bit-identical = {all_identical}"),
    );
}

// ---------------------------------------------------------------- 8 and 9

const EVAL_EPISODES: usize = 200;
const SEEDS: [u64; 3] = [0, 1, 2];

fn budget_config(mode: Mode, alpha: f64, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.iterations = 200;
    cfg.envs_per_batch = 64;
    cfg.rewards.alpha = alpha;
    assert_eq!(cfg.networks.catcher_hidden, vec![64, 64]);
    assert_eq!(cfg.env.horizon, 120);
    cfg
}

struct TrainedRun {
    untrained: CatcherPolicy,
    trained: CatcherPolicy,
    thrower_action: (f64, f64),
}

fn train_run(mode: Mode, alpha: f64, seed: u64) -> TrainedRun {
    let mut trainer = Trainer::new(budget_config(mode, alpha, seed)).unwrap();
    let untrained = CatcherPolicy::new(trainer.catcher.spec.clone(), trainer.catcher.params.clone()).unwrap();
    let mut first = None;
    let mut last = 0.0;
    while trainer.iteration < trainer.config.iterations {
        let r = trainer.step_iteration().unwrap();
        first.get_or_insert(r.rollout.mean_thrower_action);
        last = r.rollout.mean_thrower_action;
    }
    TrainedRun {
        untrained,
        trained: CatcherPolicy::new(trainer.catcher.spec.clone(), trainer.catcher.params.clone()).unwrap(),
        thrower_action: (first.unwrap_or(0.0), last),
    }
}

fn eval_cfg(seed: u64, scale: f64) -> EvalConfig {
    EvalConfig {
        episodes: EVAL_EPISODES,
        noise_scale: scale,
        seed: 10_000 + seed,
        per_object: false,
    }
}

fn eval_mean(policy: &CatcherPolicy, seed: u64) -> f64 {
    run_eval(policy, &EvalEnv::default(), &eval_cfg(seed, 1.0)).unwrap().summary().unwrap().mean
}

fn criterion_learning_progress(report: &mut Report, sa: &[TrainedRun], secs: f64) {
    let mut passes = 0;
    let mut parts = Vec::new();
    for (run, &seed) in sa.iter().zip(&SEEDS) {
        let before = eval_mean(&run.untrained, seed);
        let after = eval_mean(&run.trained, seed);
        let ratio = after / before;
        passes += usize::from(ratio >= 3.0);
        parts.push(format!("seed {seed}: {before:.1} -> {after:.1} ({ratio:.2}x)"));
    }
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    report.record(
        8,
        "learning progress",
        passes >= 2 && secs <= 30.0 * 60.0,
        format!(
            "{}; {passes}/3 seeds >= 3x; SA training {:.1} min on {cores} core(s) (limit 30 min on 8 cores)",
            parts.join(", "),
            secs / 60.0
        ),
    );
}

fn summaries_match_dumps(dir: &Path, rows: &[throwcatch::eval::SweepRow]) -> bool {
    rows.iter().all(|row| match &row.result {
        Some((summary, episodes)) => {
            let dumped = read_episodes_csv(&dir.join(format!("{}.csv", row.dump_stem()))).unwrap();
            let rewards: Vec<f64> = dumped.iter().map(|e| e.reward).collect();
            let recomputed: EvalSummary = summarize_box_stats(&rewards).unwrap();
            let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
            &dumped == episodes && &recomputed == summary && (mean - summary.mean).abs() <= 1e-12 * mean.abs().max(1.0)
        }
        None => !dir.join(format!("{}.csv", row.dump_stem())).exists(),
    })
}

fn criterion_method_comparison(report: &mut Report, sa: &[TrainedRun], ha1: &[TrainedRun], ha07: &[TrainedRun]) {
    let scales = [1.0, 1.2, 1.5];
    let mut structural = true;
    let mut trend = 0;
    let mut parts = Vec::new();
    let mut throw_parts = Vec::new();
    for (i, &seed) in SEEDS.iter().enumerate() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![
            ("SA".to_string(), Some(sa[i].trained.clone())),
            ("HA-1.0".to_string(), Some(ha1[i].trained.clone())),
            ("HA-0.7".to_string(), Some(ha07[i].trained.clone())),
        ];
        let cfg = eval_cfg(seed, 1.0);
        let noise = sweep_noise(&entries, &scales, &EvalEnv::default(), &cfg).unwrap();
        let noise_dir = dir.path().join("noise");
        write_sweep(&noise_dir, &noise).unwrap();
        structural &= noise.len() == 9 && noise.iter().all(|r| r.summary().map(|s| s.n) == Some(EVAL_EPISODES));
        structural &= summaries_match_dumps(&noise_dir, &noise);
        let summary_lines = std::fs::read_to_string(noise_dir.join("summary.csv")).unwrap().lines().count();
        structural &= summary_lines == 10;

        let alpha_entries: Vec<_> = AlphaKey::all()
            .into_iter()
            .map(|k| {
                let p = match k {
                    AlphaKey::Fixed(a) if a == 1.0 => Some(ha1[i].trained.clone()),
                    AlphaKey::Fixed(a) if a == 0.7 => Some(ha07[i].trained.clone()),
                    _ => None,
                };
                (k, p)
            })
            .collect();
        let alpha_rows = sweep_alpha(&alpha_entries, &EvalEnv::default(), &cfg).unwrap();
        let alpha_dir = dir.path().join("alpha");
        write_sweep(&alpha_dir, &alpha_rows).unwrap();
        structural &= alpha_rows.len() == 7 && alpha_rows.iter().filter(|r| r.result.is_some()).count() == 2;
        structural &= summaries_match_dumps(&alpha_dir, &alpha_rows);
        // The same policy evaluated by two tables gives the same row.
        structural &= alpha_rows[0].summary() == noise[3].summary() && alpha_rows[3].summary() == noise[6].summary();

        let sa_mean = noise[0].summary().unwrap().mean;
        let ha_mean = noise[6].summary().unwrap().mean;
        trend += usize::from(ha_mean >= sa_mean);
        let row = |r: usize| noise[r].summary().unwrap().mean;
        parts.push(format!(
            "seed {seed}: SA {:.1}/{:.1}/{:.1}, HA1.0 {:.1}/{:.1}/{:.1}, HA0.7 {:.1}/{:.1}/{:.1} (x{:.2})",
            row(0),
            row(1),
            row(2),
            row(3),
            row(4),
            row(5),
            row(6),
            row(7),
            row(8),
            ha_mean / sa_mean
        ));
        throw_parts.push(format!("{:.2}->{:.2}", ha07[i].thrower_action.0, ha07[i].thrower_action.1));
    }
    for p in &parts {
        println!("    {p}  (mean reward at noise 1.0/1.2/1.5)");
    }
    println!("    HA(0.7) mean |v_action| first -> last iteration: {}", throw_parts.join(", "));
    report.record(
        9,
        "method comparison",
        structural && trend >= 2,
        format!("tables complete and consistent with per-episode dumps: {structural}; HA(0.7) >= SA at noise 1.0 in {trend}/3 seeds"),
    );
}

// ---------------------------------------------------------------- 10

fn metrics_without_wall_time(path: &Path) -> Vec<String> {
    read_metrics(path)
        .unwrap()
        .into_iter()
        .map(|r| serde_json::to_string(&MetricsRecord { wall_seconds: 0.0, ..r }).unwrap())
        .collect()
}

fn criterion_determinism(report: &mut Report) {
    let mut cfg = RunConfig::default();
    cfg.seed = 99;
    cfg.iterations = 15;
    cfg.envs_per_batch = 4;
    cfg.checkpoint_every = 5;
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let resumed = dir.path().join("resumed");
    let ta = train(cfg.clone(), &a).unwrap();
    let tb = train(cfg.clone(), &b).unwrap();
    let ma = metrics_without_wall_time(&a.join(METRICS_FILE));
    let mb = metrics_without_wall_time(&b.join(METRICS_FILE));
    let identical = ma == mb && ma.len() == 15 && ta.catcher.params == tb.catcher.params;

    let ckpt = load_checkpoint(&checkpoint_path(&a, 5)).unwrap();
    let mut tr = Trainer::from_checkpoint(cfg.clone(), &ckpt).unwrap();
    run_training(&mut tr, &resumed).unwrap();
    let mr = metrics_without_wall_time(&resumed.join(METRICS_FILE));
    let resume_ok = mr.len() == 10
        && mr[..] == ma[5..]
        && tr.catcher.params == ta.catcher.params
        && tr.thrower.as_ref().map(|t| &t.params) == ta.thrower.as_ref().map(|t| &t.params)
        && tr.critic.params == ta.critic.params;
    report.record(
        10,
        "determinism and persistence",
        identical && resume_ok,
        format!("two identical runs byte-identical metrics (wall time excluded): {identical}; resume at iteration 5 through 15 matches uninterrupted run: {resume_ok}"),
    );
}

// ---------------------------------------------------------------- 11

/// Sort, interpolate between closest ranks, and take the most extreme data
/// inside the 1.5·IQR fences (never inside the box).
fn box_oracle(data: &[f64]) -> EvalSummary {
    let mut s = data.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        if lo == hi {
            s[lo]
        } else {
            s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
        }
    };
    let (q25, q75) = (q(0.25), q(0.75));
    let iqr = q75 - q25;
    let (lo_f, hi_f) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
    let inside: Vec<f64> = s.iter().copied().filter(|&x| x >= lo_f && x <= hi_f).collect();
    let mut mean = 0.0;
    for x in &s {
        mean += x;
    }
    EvalSummary {
        n,
        mean: mean / n as f64,
        median: q(0.5),
        q25,
        q75,
        whisker_low: inside.first().copied().unwrap_or(q25).min(q25),
        whisker_high: inside.last().copied().unwrap_or(q75).max(q75),
        outlier_count: n - inside.len(),
    }
}

fn criterion_box_stats(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut mismatches = 0;
    let mut invariant_ok = true;
    for set in 0..1000 {
        let data: Vec<f64> = match set % 10 {
            0 => vec![rng.gen_range(-100.0..100.0)],
            1 => vec![rng.gen_range(-100.0..100.0); rng.gen_range(2..50)],
            2 => (0..rng.gen_range(2..60)).map(|_| rng.gen_range(0..5) as f64).collect(),
            _ => (0..rng.gen_range(2..300))
                .map(|_| rng.sample::<f64, _>(StandardNormal).powi(3) * 50.0)
                .collect(),
        };
        // Shuffle so ordering of the input never matters.
        let mut shuffled = data.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let got = summarize_box_stats(&shuffled).unwrap();
        if box_oracle(&data) != got {
            mismatches += 1;
        }
        invariant_ok &= got.q25 <= got.median && got.median <= got.q75 && got.whisker_low <= got.q25 && got.whisker_high >= got.q75;
    }
    report.record(
        11,
        "box statistics oracle",
        mismatches == 0 && invariant_ok,
        format!("{mismatches} mismatches against the sort-based oracle on 1000 sets (constant and single-element included); invariants hold: {invariant_ok}"),
    );
}

fn main() -> ExitCode {
    let mut report = Report { lines: Vec::new() };
    criterion_gradients(&mut report);
    criterion_gae(&mut report);
    criterion_happo_degeneracy(&mut report);
    criterion_clip_table(&mut report);
    criterion_physics(&mut report);
    criterion_rewards(&mut report);
    criterion_thrower_locality(&mut report);
    criterion_determinism(&mut report);
    criterion_box_stats(&mut report);

    let start = Instant::now();
    let sa: Vec<TrainedRun> = SEEDS.iter().map(|&s| train_run(Mode::Sa, 1.0, s)).collect();
    criterion_learning_progress(&mut report, &sa, start.elapsed().as_secs_f64());
    let ha1: Vec<TrainedRun> = SEEDS.iter().map(|&s| train_run(Mode::Harl, 1.0, s)).collect();
    let ha07: Vec<TrainedRun> = SEEDS.iter().map(|&s| train_run(Mode::Harl, 0.7, s)).collect();
    criterion_method_comparison(&mut report, &sa, &ha1, &ha07);

    let failed = report.lines.iter().filter(|(ok, _)| !ok).count();
    println!("acceptance: {} criteria, {failed} failed", report.lines.len());
    if failed == 0 || std::env::var_os("ACCEPTANCE_STRICT").is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
