//! Fast self-checks behind the `verify` command: analytic results compared
//! against independent brute-force computations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{self, blend_rewards, object_catalog, physics_step, EnvConfig, RewardWeights, ThrowConfig, Vec2, WorldState};
use crate::eval::{quantile_sorted, summarize_box_stats};
use crate::nn::{init_params, NetworkSpec};
use crate::trainer::{
    compute_gae, happo_update, normalize_advantages, ppo_clip_loss, ppo_update, surrogate_gradient, value_gradient, AgentBatch,
    GaeConfig, Learner, PpoConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        check_gradients(3),
        check_gae(20),
        check_happo_degeneracy(),
        check_clip_table(),
        check_free_flight(),
        check_reward_blend(1000),
        check_thrower_locality(),
        check_box_stats(200),
    ]
}

fn random_batch(spec: &NetworkSpec, n: usize, rng: &mut ChaCha8Rng) -> AgentBatch<f64> {
    let mut b = AgentBatch::new(spec.input_dim, spec.output_dim);
    for s in 0..n {
        b.obs.extend((0..spec.input_dim).map(|_| rng.gen_range(-1.0..1.0)));
        b.actions.extend((0..spec.output_dim).map(|_| rng.gen_range(-1.0..1.0)));
        b.old_log_probs.push(rng.gen_range(-3.0..-1.0));
        b.rewards.push(rng.gen_range(-1.0..1.0));
        b.values.push(0.0);
        b.dones.push(false);
        b.advantages.push(rng.gen_range(-1.0..1.0));
        b.returns.push(rng.gen_range(-1.0..1.0));
        b.anchor.push(s);
        b.span.push((s, s + 1));
    }
    b
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Surrogate and value-loss gradients against central differences.
pub fn check_gradients(seeds: u64) -> CheckOutcome {
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = NetworkSpec::policy(5, vec![16, 16], 3);
        let mut params = init_params::<f64, _>(&spec, 1.0, 1.0, &mut rng);
        let off = spec.log_std_offset().unwrap();
        for p in &mut params[off..] {
            *p = rng.gen_range(-0.5..0.5);
        }
        let batch = random_batch(&spec, 8, &mut rng);
        let idx: Vec<usize> = (0..8).collect();
        let cfg = PpoConfig {
            entropy_coef: 0.01,
            ..Default::default()
        };
        let learner = Learner::new(spec.clone(), params.clone(), 1e-3).unwrap();
        let (_, grad, _) = surrogate_gradient(&learner, &batch, &idx, &batch.advantages, &cfg).unwrap();
        let vspec = NetworkSpec::value(5, vec![16, 16]);
        let vparams = init_params::<f64, _>(&vspec, 1.0, 1.0, &mut rng);
        let critic = Learner::new(vspec.clone(), vparams.clone(), 1e-3).unwrap();
        let (_, vgrad) = value_gradient(&critic, &batch.obs, &batch.returns, &idx, 0.5).unwrap();
        for _ in 0..20 {
            let k = rng.gen_range(0..params.len());
            let f = |d: f64| {
                let mut p = params.clone();
                p[k] += d;
                let l = Learner::new(spec.clone(), p, 1e-3).unwrap();
                surrogate_gradient(&l, &batch, &idx, &batch.advantages, &cfg).unwrap().0
            };
            worst = worst.max(rel_err((f(h) - f(-h)) / (2.0 * h), grad[k]));
            let k = rng.gen_range(0..vparams.len());
            let g = |d: f64| {
                let mut p = vparams.clone();
                p[k] += d;
                let l = Learner::new(vspec.clone(), p, 1e-3).unwrap();
                value_gradient(&l, &batch.obs, &batch.returns, &idx, 0.5).unwrap().0
            };
            worst = worst.max(rel_err((g(h) - g(-h)) / (2.0 * h), vgrad[k]));
        }
    }
    outcome("gradients", worst <= 1e-4, format!("max relative error {worst:.2e}"))
}

/// Recursive GAE against the explicit discounted sum of TD errors.
pub fn check_gae(trajectories: u64) -> CheckOutcome {
    let cfg = GaeConfig::default();
    let mut worst = 0.0_f64;
    for seed in 0..trajectories {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 50;
        let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dones: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.05)).collect();
        let (adv, _) = compute_gae(&rewards, &values, &dones, &cfg).unwrap();
        for t in 0..n {
            let mut expected = 0.0;
            let mut coef = 1.0;
            for k in t..n {
                let next = if dones[k] { 0.0 } else { values[k + 1] };
                expected += coef * (rewards[k] + cfg.gamma * next - values[k]);
                if dones[k] {
                    break;
                }
                coef *= cfg.gamma * cfg.lam;
            }
            worst = worst.max((expected - adv[t]).abs());
        }
    }
    outcome("gae", worst <= 1e-10, format!("max abs error {worst:.2e}"))
}

/// One-agent sequential update against plain PPO on normalised advantages.
pub fn check_happo_degeneracy() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = NetworkSpec::policy(4, vec![8], 2);
    let params = init_params::<f64, _>(&spec, 1.0, 0.01, &mut rng);
    let batch = random_batch(&spec, 40, &mut rng);
    let cfg = PpoConfig::default();
    let mut a = Learner::new(spec.clone(), params.clone(), 1e-3).unwrap();
    let mut b = a.clone();
    let ra = happo_update(&mut [&mut a], &[&batch], 40, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
    let adv = normalize_advantages(&batch.advantages);
    let rb = ppo_update(&mut b, &batch, &adv, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
    let same = matches!((&ra, &rb), (Ok(x), Ok(y)) if x.stats[0] == y.0) && a == b;
    outcome("happo single agent", same, format!("parameters identical: {}", a == b))
}

/// All four sign/clip branches of the clipped surrogate.
pub fn check_clip_table() -> CheckOutcome {
    let eps = 0.2_f64;
    // (ratio, M, expected contribution)
    let table = [
        (1.5, 1.0, 1.2),
        (0.5, 1.0, 0.5),
        (1.5, -1.0, -1.5),
        (0.5, -1.0, -0.8),
    ];
    let ok = table
        .iter()
        .all(|&(r, m, expected)| matches!(ppo_clip_loss(&[f64::ln(r)], &[0.0], &[m], eps), Ok(l) if (-l - expected).abs() <= 1e-15));
    outcome("clip branches", ok, "four ratio/advantage cases".into())
}

/// Free flight against the semi-implicit recursion and the closed form.
pub fn check_free_flight() -> CheckOutcome {
    let cfg = EnvConfig::default();
    let obj = &object_catalog()[2];
    let far = [Vec2::new(10.0, 10.0), Vec2::new(10.0, 9.0)];
    let mut s = WorldState::<f64>::new(obj, Vec2::new(-0.8, 0.3), far);
    let (v0x, v0z) = (2.0, 4.0);
    s.object.velocity = Vec2::new(v0x, v0z);
    s.thrown = true;
    let (mut x, mut z, mut vz) = (-0.8, 0.3, v0z);
    let (mut recursion_err, mut drift_excess) = (0.0_f64, f64::NEG_INFINITY);
    for k in 1..=cfg.horizon {
        s = match physics_step(&s, &[0.0; 6], &cfg) {
            Ok(n) => n,
            Err(e) => return outcome("free flight", false, e.to_string()),
        };
        vz -= cfg.gravity * cfg.dt;
        x += v0x * cfg.dt;
        z += vz * cfg.dt;
        recursion_err = recursion_err.max((s.object.position.x - x).abs()).max((s.object.position.z - z).abs());
        let t = k as f64 * cfg.dt;
        let exact = 0.3 + v0z * t - 0.5 * cfg.gravity * t * t;
        drift_excess = drift_excess.max((s.object.position.z - exact).abs() - (cfg.gravity * t * cfg.dt / 2.0 + 1e-9));
    }
    outcome(
        "free flight",
        recursion_err <= 1e-12 && drift_excess <= 0.0,
        format!("recursion error {recursion_err:.2e}, drift margin {:.2e}", -drift_excess),
    )
}

/// Blend endpoints are exact.
pub fn check_reward_blend(samples: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ok = (0..samples).all(|_| {
        let (c, t) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        blend_rewards(c, t, 1.0).ok() == Some(c) && blend_rewards(c, t, 0.0).ok() == Some(t)
    });
    outcome("reward blend", ok, format!("{samples} random pairs"))
}

/// Thrower actions after the first frame do not change anything.
pub fn check_thrower_locality() -> CheckOutcome {
    let cfg = EnvConfig::default();
    let tc = ThrowConfig::default();
    let w = RewardWeights::default();
    let run = |late: [f64; 3]| {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (mut s, _) = env::reset::<f64, _>(&cfg, &tc, &mut rng);
        let mut trace = Vec::new();
        for t in 0..cfg.horizon {
            let ta = if t == 0 { [0.5, -0.5, 1.0] } else { late };
            let out = env::step(&s, &[0.1, 0.2, 0.6, -0.1, 0.0, 0.7], &ta, &w, &cfg, &tc, &mut rng).unwrap();
            s = out.state.clone();
            trace.push(out);
            if trace.last().unwrap().done {
                break;
            }
        }
        trace
    };
    let ok = run([0.0; 3]) == run([2.0, -2.0, 5.0]);
    outcome("thrower locality", ok, "trajectories bit-identical".into())
}

/// Box statistics against a direct sort-and-interpolate computation.
pub fn check_box_stats(sets: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ok = true;
    for _ in 0..sets {
        let n = rng.gen_range(1..40);
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0_f64..5.0).powi(3)).collect();
        let mut sorted = data.clone();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (n - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        let s = summarize_box_stats(&data).unwrap();
        ok &= s.q25 == q(0.25) && s.q75 == q(0.75) && s.median == quantile_sorted(&sorted, 0.5);
        ok &= s.whisker_low <= s.q25 && s.whisker_high >= s.q75;
    }
    outcome("box statistics", ok, format!("{sets} random sets"))
}
