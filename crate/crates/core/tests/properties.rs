use proptest::prelude::*;
use throwcatch::env::{blend_rewards, EnvConfig, RewardWeights, ThrowConfig, CATCHER_ACTION_DIM, THROWER_ACTION_DIM};
use throwcatch::eval::stats::summarize_box_stats;
use throwcatch::io::derive_seeds;
use throwcatch::trainer::gae::{compute_gae, discounted_return, normalize_advantages, GaeConfig};
use throwcatch::Env;

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, 1..60)
}

proptest! {
    #[test]
    fn box_stats_are_ordered_and_permutation_invariant(mut xs in samples(), seed in any::<u64>()) {
        let s = summarize_box_stats(&xs).unwrap();
        let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min <= s.whisker_low && s.whisker_low <= s.q25);
        prop_assert!(s.q25 <= s.median && s.median <= s.q75);
        prop_assert!(s.q75 <= s.whisker_high && s.whisker_high <= max);
        let iqr = s.q75 - s.q25;
        let outside = xs.iter().filter(|&&x| x < s.q25 - 1.5 * iqr || x > s.q75 + 1.5 * iqr).count();
        prop_assert_eq!(outside, s.outlier_count);

        use rand::seq::SliceRandom;
        xs.shuffle(&mut derive_seeds(seed, "shuffle"));
        prop_assert_eq!(summarize_box_stats(&xs).unwrap(), s);
    }

    #[test]
    fn blend_is_the_convex_combination(c in -10f64..10.0, t in -10f64..10.0, alpha in 0f64..=1.0) {
        let r = blend_rewards(c, t, alpha).unwrap();
        prop_assert!((r - (alpha * c + (1.0 - alpha) * t)).abs() < 1e-12);
        prop_assert_eq!(blend_rewards(c, t, 1.0).unwrap(), c);
        prop_assert_eq!(blend_rewards(c, t, 0.0).unwrap(), t);
        prop_assert!(blend_rewards(c, t, 1.0 + 1e-9).is_err());
    }

    #[test]
    fn gae_with_unit_lambda_returns_discounted_sums(
        rewards in prop::collection::vec(-5f64..5.0, 1..40),
        bootstrap in -5f64..5.0,
        gamma in 0.5f64..1.0,
    ) {
        let n = rewards.len();
        let mut values: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        values.push(bootstrap);
        let cfg = GaeConfig { gamma, lam: 1.0 };
        let (adv, ret) = compute_gae(&rewards, &values, &vec![false; n], &cfg).unwrap();
        for t in 0..n {
            let g = discounted_return(&rewards[t..], bootstrap, gamma);
            prop_assert!((ret[t] - g).abs() < 1e-9 * (1.0 + g.abs()));
            prop_assert!((adv[t] - (g - values[t])).abs() < 1e-9 * (1.0 + g.abs()));
        }
    }

    #[test]
    fn normalized_advantages_have_zero_mean_unit_std(xs in prop::collection::vec(-50f64..50.0, 2..80)) {
        let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let z = normalize_advantages(&xs);
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-9);
        prop_assert!((var - 1.0).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn env_steps_are_seeded_and_blend_the_reward(
        seed in any::<u64>(),
        alpha in 0f64..=1.0,
        thrower in prop::collection::vec(-3f64..3.0, THROWER_ACTION_DIM),
        actions in prop::collection::vec(-1f64..1.0, CATCHER_ACTION_DIM * 40),
    ) {
        let weights = RewardWeights { alpha, ..Default::default() };
        let make = || Env::new(EnvConfig::default(), ThrowConfig::default(), weights.clone(), derive_seeds(seed, "env"));
        let (mut a, mut b) = (make(), make());
        prop_assert_eq!(a.reset(), b.reset());
        for (k, act) in actions.chunks(CATCHER_ACTION_DIM).enumerate() {
            let t_act = if k == 0 { thrower.clone() } else { vec![0.0; THROWER_ACTION_DIM] };
            let ra = a.step(act, &t_act).unwrap();
            let rb = b.step(act, &t_act).unwrap();
            prop_assert_eq!(&ra, &rb);
            prop_assert!(ra.r_total.is_finite());
            let expect = alpha * ra.rewards.r_catch + (1.0 - alpha) * ra.rewards.r_throw;
            prop_assert!((ra.r_total - expect).abs() < 1e-12);
            if k > 0 {
                prop_assert_eq!(ra.rewards.r_throw, 0.0);
            }
            if ra.done {
                break;
            }
        }
    }
}
