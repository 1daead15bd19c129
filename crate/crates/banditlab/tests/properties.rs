//! Invariants as property tests.

use banditlab::algo::{ghp_params, phase2_distribution, GhpState, Learner, Reolb};
use banditlab::design::{
    beta_t, exploration_design, instance_constant_c, op_feasibility_check, orthonormal_oracle, solve_op,
};
use banditlab::env::{
    corruption_totals, interval_schedule, kl_bernoulli, AdversarialGenerator, CorruptionGenerator, EnvSpec,
};
use banditlab::harness::{read_trace, trace_to_string};
use banditlab::linalg::{dot, gram};
use banditlab::rng::RngStream;
use banditlab::robust::catoni_estimate;
use banditlab::trace::{adversarial_regret, pseudo_regret, RoundRecord, Trace};
use banditlab::{make_instance, validate_action_set, ActionSet, ArmDistribution};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn unit_rows(d: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec((prop::collection::vec(-1.0f64..1.0, d), 0.3f64..1.0), n).prop_map(|rows| {
        rows.into_iter()
            .map(|(v, r)| {
                let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-9);
                v.iter().map(|a| a * r / nrm).collect()
            })
            .collect()
    })
}

fn action_set() -> impl Strategy<Value = ActionSet> {
    (1usize..=4)
        .prop_flat_map(|d| (Just(d), d..=8))
        .prop_flat_map(|(d, n)| unit_rows(d, n))
        .prop_filter_map("degenerate action set", |rows| validate_action_set(rows).ok())
}

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
}

fn with_weights() -> impl Strategy<Value = (ActionSet, Vec<f64>)> {
    action_set().prop_flat_map(|x| {
        let n = x.len();
        (Just(x), simplex(n))
    })
}

fn basis(d: usize) -> ActionSet {
    validate_action_set((0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quad_norm_matches_dense_inverse((x, w) in with_weights()) {
        let m = gram(&w, x.actions());
        let d = x.dim();
        let dense = DMatrix::from_row_slice(d, d, m.as_slice());
        prop_assume!(dense.clone().symmetric_eigenvalues().min() > 1e-6);
        let inv = dense.try_inverse().unwrap();
        let f = m.factor();
        for a in x.actions() {
            let v = DVector::from_column_slice(a);
            let oracle = (v.transpose() * &inv * &v)[(0, 0)];
            let got = f.quad_norm(a).unwrap();
            prop_assert!((got - oracle).abs() <= 1e-8 * oracle.abs().max(1e-12), "{got} vs {oracle}");
        }
    }

    #[test]
    fn weighted_norms_sum_to_rank(x in action_set(), raw in prop::collection::vec(0.0f64..1.0, 8), keep in prop::collection::vec(any::<bool>(), 8)) {
        // supports of any size, including rank-deficient ones
        let mut w: Vec<f64> = (0..x.len()).map(|i| if keep[i] { raw[i] + 0.05 } else { 0.0 }).collect();
        if w.iter().all(|v| *v == 0.0) {
            w[0] = 1.0;
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        let f = gram(&w, x.actions()).factor();
        let total: f64 = x.actions().iter().zip(&w).filter(|(_, p)| **p > 0.0).map(|(a, p)| p * f.quad_norm(a).unwrap()).sum();
        prop_assert!((total - f.rank() as f64).abs() < 1e-8, "{total} vs rank {}", f.rank());
    }

    #[test]
    fn gram_is_linear((x, w1) in with_weights(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let w2: Vec<f64> = w1.iter().rev().copied().collect();
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(u, v)| a * u + b * v).collect();
        let lhs = gram(&mix, x.actions());
        let (g1, g2) = (gram(&w1, x.actions()), gram(&w2, x.actions()));
        for ((l, p), q) in lhs.as_slice().iter().zip(g1.as_slice()).zip(g2.as_slice()) {
            prop_assert!((l - (a * p + b * q)).abs() < 1e-12);
        }
    }

    #[test]
    fn catoni_translation_equivariant(xs in prop::collection::vec(-5.0f64..5.0, 1..60), c in -10.0f64..10.0, alpha in 0.05f64..4.0) {
        let base = catoni_estimate(&xs, alpha).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|v| v + c).collect();
        prop_assert!((catoni_estimate(&shifted, alpha).unwrap() - (base + c)).abs() < 1e-10);
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(base >= lo - 1e-12 && base <= hi + 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_and_quadratically_bounded(p in -0.75f64..0.75, q in -0.75f64..0.75) {
        let k = kl_bernoulli(p, q).unwrap();
        prop_assert!(k >= 0.0 && k <= 2.0 * (p - q) * (p - q) + 1e-15);
    }

    #[test]
    fn pseudo_regret_monotone_with_gap_increments(arms in prop::collection::vec(0usize..3, 0..200)) {
        let inst = make_instance(basis(3), vec![-0.2, 0.1, 0.4]).unwrap();
        let r = pseudo_regret(&arms, &inst);
        let mut prev = 0.0;
        for (v, a) in r.iter().zip(&arms) {
            prop_assert!(*v >= prev);
            prop_assert!(((v - prev) - inst.gaps[*a]).abs() < 1e-12);
            prev = *v;
        }
    }

    #[test]
    fn shift_along_constant_direction_changes_nothing(
        rows in unit_rows(2, 4),
        theta in prop::collection::vec(-0.3f64..0.3, 3),
        c in -0.5f64..0.5,
        arms in prop::collection::vec(0usize..4, 1..50),
    ) {
        // every action has last coordinate 1/2, so v = (0, 0, c) shifts all means equally
        let actions: Vec<Vec<f64>> = rows.iter().map(|r| vec![0.8 * r[0], 0.8 * r[1], 0.5]).collect();
        let Ok(x) = validate_action_set(actions) else { return Ok(()); };
        let shifted = vec![theta[0], theta[1], theta[2] + c];
        if let (Ok(a), Ok(b)) = (make_instance(x.clone(), theta.clone()), make_instance(x.clone(), shifted.clone())) {
            for (g, h) in a.gaps.iter().zip(&b.gaps) {
                prop_assert!((g - h).abs() < 1e-12);
            }
        }
        let losses: Vec<Vec<f64>> = arms.iter().enumerate().map(|(t, _)| theta.iter().map(|v| v * (1.0 + t as f64 % 3.0)).collect()).collect();
        let moved: Vec<Vec<f64>> = losses.iter().map(|l| vec![l[0], l[1], l[2] + c]).collect();
        let r1 = adversarial_regret(&arms, &losses, &x).unwrap();
        let r2 = adversarial_regret(&arms, &moved, &x).unwrap();
        prop_assert!((r1 - r2).abs() < 1e-9);
    }

    #[test]
    fn equal_seeds_equal_streams(seed in any::<u64>(), stream in 0u64..8) {
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        for _ in 0..32 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn exploration_design_is_full_rank_and_bounded(x in action_set(), kappa_pow in 2u32..20, pick in prop::collection::vec(any::<bool>(), 8)) {
        let mut subset: Vec<usize> = (0..x.len()).filter(|&i| pick[i]).collect();
        if subset.is_empty() {
            subset.push(0);
        }
        let kappa = 1.0 / 2f64.powi(kappa_pow as i32).sqrt();
        let q = exploration_design(&subset, &x, kappa).unwrap();
        let f = gram(q.weights(), x.actions()).factor();
        prop_assert!(f.is_full_rank());
        for &i in &subset {
            prop_assert!(f.quad_norm(x.arm(i)).unwrap() <= 2.0 * x.dim() as f64 + 1e-3);
        }
    }

    #[test]
    fn trace_csv_round_trips(rows in prop::collection::vec((0usize..9, -1.0f64..1.0, 0u8..3, 0usize..20, prop::option::of(0.0f64..1e4), -1e4f64..1e4), 0..40)) {
        let records = rows.into_iter().enumerate().map(|(i, (arm, y, phase, boe, pseudo, adv))| RoundRecord {
            t: i + 1, arm, y, phase, block_or_epoch: boe, pseudo_regret_cum: pseudo, adv_regret_cum: adv,
        }).collect();
        let trace = Trace { records };
        let text = trace_to_string(&trace).unwrap();
        prop_assert_eq!(read_trace(text.as_bytes()).unwrap(), trace);
    }

    #[test]
    fn phase2_mixture_keeps_half_on_xhat(w in simplex(6), xhat in 0usize..6) {
        let p = ArmDistribution::new(w).unwrap();
        let pt = phase2_distribution(&p, xhat);
        prop_assert!(pt.weights()[xhat] >= 0.5);
        prop_assert!((pt.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_schedule_grows_geometrically(delta in 0.05f64..1.0, gamma in 0.05f64..0.95, horizon in 1usize..2_000_000) {
        let lens = interval_schedule(delta, gamma, horizon).unwrap();
        prop_assert_eq!(lens.iter().sum::<usize>(), horizon);
        let mut before = 0usize;
        for (i, l) in lens.iter().enumerate() {
            if i + 1 < lens.len() {
                prop_assert!(*l as f64 >= 3.0 / delta * before as f64);
            }
            before += l;
        }
    }

    #[test]
    fn corruption_blocks_partition_total(budget in 0.0f64..40.0, period in 1usize..9, kind in 0u8..3, horizon in 1usize..300) {
        let inst = make_instance(basis(3), vec![-0.2, 0.1, 0.3]).unwrap();
        let gen = match kind {
            0 => CorruptionGenerator::FrontLoaded { budget },
            1 => CorruptionGenerator::Periodic { budget, period },
            _ => CorruptionGenerator::TargetOptimal { budget },
        };
        let s = gen.realize(&inst, horizon).unwrap();
        let starts: Vec<usize> = (0..).map(|m| 1usize << m).take_while(|s| *s <= horizon).collect();
        let (total, per) = corruption_totals(&s, &starts);
        prop_assert!((per.iter().sum::<f64>() - total).abs() < 1e-9);
        prop_assert!(total <= budget + 1e-9);
    }

    #[test]
    fn adversarial_sequences_are_oblivious(seed in any::<u64>(), block in 1usize..20, horizon in 1usize..200) {
        let inst = make_instance(basis(2), vec![-0.3, 0.2]).unwrap();
        for gen in [AdversarialGenerator::RandomSign { block }, AdversarialGenerator::Switch { at: None }, AdversarialGenerator::Sinusoid { period: 17.0, amplitude: 0.9 }] {
            let a = gen.generate(&inst, seed, horizon).unwrap();
            let b = gen.generate(&inst, seed, horizon).unwrap();
            prop_assert_eq!(a.losses(), b.losses());
            for l in a.losses() {
                for x in inst.action_set.actions() {
                    prop_assert!(dot(x, l).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn observations_stay_in_unit_interval(seed in any::<u64>(), budget in 0.0f64..30.0) {
        let inst = make_instance(basis(2), vec![-0.9, 0.8]).unwrap();
        let spec = EnvSpec::Corrupted { noise: Default::default(), generator: CorruptionGenerator::FrontLoaded { budget } };
        let env = spec.realize(&inst, seed, 100).unwrap();
        let mut rng = RngStream::new(seed, 2);
        for t in 1..=100 {
            let y = env.observe(t, t % 2, &mut rng);
            prop_assert!((-1.0..=1.0).contains(&y));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn op_meets_certified_bound(x in action_set(), raw in prop::collection::vec(0.0f64..1.0, 8), t_pow in 10i32..=20, scale_pow in 0i32..=15) {
        let mut gaps: Vec<f64> = raw[..x.len()].to_vec();
        gaps[0] = 0.0;
        let t = 2f64.powi(t_pow);
        let beta = beta_t(t, x.len(), 0.1, 2f64.powi(-scale_pow));
        let sol = solve_op(t, &gaps, &x, beta, 1e-8).unwrap();
        prop_assert!(op_feasibility_check(sol.p.weights(), t, &gaps, beta, &x).pass);
        prop_assert!(sol.objective <= (x.dim() as f64 * beta + 1.0) / t.sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn op_gap_dependent_bound(x in action_set(), raw in prop::collection::vec(0.2f64..1.0, 8), extra in 0i32..4) {
        // unique zero at arm 0 and t ≥ 16dβ/Δ̂²_min
        let mut gaps: Vec<f64> = raw[..x.len()].to_vec();
        gaps[0] = 0.0;
        let dmin = gaps[1..].iter().copied().fold(f64::INFINITY, f64::min);
        let d = x.dim() as f64;
        let mut t = 16.0;
        while t < 16.0 * d * beta_t(t, x.len(), 0.1, 1.0 / 32768.0) / (dmin * dmin) {
            t *= 2.0;
        }
        t *= 2f64.powi(extra);
        let beta = beta_t(t, x.len(), 0.1, 1.0 / 32768.0);
        let sol = solve_op(t, &gaps, &x, beta, 1e-8).unwrap();
        prop_assert!(sol.objective <= 24.0 * d * beta / (dmin * t), "{} > {}", sol.objective, 24.0 * d * beta / (dmin * t));
    }

    #[test]
    fn doubling_gaps_halves_orthonormal_constant(d in 2usize..5, raw in prop::collection::vec(0.05f64..0.2, 4)) {
        let x = basis(d);
        let mut theta: Vec<f64> = raw[..d].to_vec();
        theta[0] = -0.1;
        let inst = make_instance(x.clone(), theta.clone()).unwrap();
        let doubled = make_instance(x.clone(), theta.iter().map(|v| 2.0 * v).collect()).unwrap();
        let c1 = orthonormal_oracle(&x, &inst.gaps).unwrap();
        let c2 = orthonormal_oracle(&x, &doubled.gaps).unwrap();
        prop_assert!((c2 - c1 / 2.0).abs() <= 1e-12 * c1);
        let solved = instance_constant_c(&doubled, 1e-9).unwrap();
        prop_assert!(solved.max_violation <= 1e-6);
        prop_assert!((solved.value - c2).abs() / c2 < 1e-3);
    }

    #[test]
    fn ghp_optimism_and_exploration_floor(arms in prop::collection::vec((0usize..3, prop::bool::ANY), 1..300)) {
        let x = basis(3);
        let params = ghp_params(3, 300, 3, 0.1, 1.0 / 32768.0).unwrap();
        let mut s = GhpState::new(&x, params, None).unwrap();
        for (arm, up) in arms {
            s.update(arm, if up { 1.0 } else { -1.0 }).unwrap();
            for (lt, lh) in s.sum_ltilde().iter().zip(s.sum_lhat()) {
                prop_assert!(lt <= lh);
            }
            for (p, q) in s.probabilities().iter().zip(s.exploration()) {
                prop_assert!(*p >= s.params().gamma * q * (1.0 - 1e-12) && *p > 0.0);
            }
        }
    }

    #[test]
    fn reolb_gap_estimates_touch_zero(seed in any::<u64>(), horizon in 1usize..600) {
        let inst = make_instance(basis(3), vec![-0.2, 0.1, 0.2]).unwrap();
        let env = EnvSpec::default().realize(&inst, seed, horizon).unwrap();
        let mut learner = Reolb::new(&inst.action_set, 0.1, 1.0 / 32768.0).unwrap();
        let mut rng = RngStream::new(seed, 1);
        let mut noise = RngStream::new(seed, 2);
        for t in 1..=horizon {
            learner.step(t, &env, &mut rng, &mut noise).unwrap();
            let g = learner.gap_estimates();
            prop_assert_eq!(g.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
        }
    }
}

/// E[ℓ̂_x] = ⟨x, θ⟩ and E[ℓ̂_x²] ≤ ‖x‖²_{S⁻¹} under resampling of (x_t, y).
#[test]
fn estimator_unbiased_with_bounded_second_moment() {
    let x = validate_action_set(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]]).unwrap();
    let theta = vec![-0.3, 0.2];
    let p = ArmDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
    let f = gram(p.weights(), x.actions()).factor();
    let kernel: Vec<Vec<f64>> = x
        .actions()
        .iter()
        .map(|a| {
            let s = f.solve(a).unwrap();
            x.actions().iter().map(|b| dot(b, &s)).collect()
        })
        .collect();
    let n = 1_000_000;
    let mut rng = RngStream::new(11, 1);
    let mut sum = vec![0.0; 3];
    let mut sq = vec![0.0; 3];
    for _ in 0..n {
        let arm = p.sample(rng.uniform());
        let mean = dot(x.arm(arm), &theta);
        let y = if rng.uniform() < 0.5 * (1.0 + mean) { 1.0 } else { -1.0 };
        for i in 0..3 {
            let l = kernel[i][arm] * y;
            sum[i] += l;
            sq[i] += l * l;
        }
    }
    for i in 0..3 {
        let m = sum[i] / n as f64;
        let second = sq[i] / n as f64;
        let se = ((second - m * m) / n as f64).sqrt();
        let truth = dot(x.arm(i), &theta);
        assert!((m - truth).abs() <= 3.0 * se, "arm {i}: {m} vs {truth} (se {se})");
        assert!(second <= f.quad_norm(x.arm(i)).unwrap() * 1.05, "arm {i}: {second}");
    }
}
