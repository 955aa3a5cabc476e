use approx::assert_relative_eq;
use ehpc_core::baselines::Greedy;
use ehpc_core::model::*;
use ehpc_core::online::*;
use ehpc_core::sim::{monte_carlo, SimOptions};
use proptest::prelude::*;

fn model(l1: usize, l2: usize, e1: usize, e2: usize, alpha: f64) -> OnlineModel {
    OnlineModel::new(l1, l2, e1, e2, alpha, 1.0, SystemParams::paper_defaults()).unwrap()
}

fn solve(m: &OnlineModel, eps: f64) -> ValueIteration {
    value_iteration(m, &ViOptions { eps, ..Default::default() }).unwrap()
}

#[test]
fn node_transition_counts_match_closed_form() {
    for cap in 1..=12 {
        for emax in 1..=12 {
            for i in 1..=cap {
                for p in 1..=i {
                    let (counts, overflow) = node_transition_counts(i, p, emax, cap).unwrap();
                    assert_eq!(counts.len(), cap);
                    assert_eq!(counts.iter().sum::<usize>(), emax);
                    assert_eq!(counts[cap - 1], cap_mass_closed_form(i, p, emax, cap), "i={i} p={p} emax={emax} L={cap}");
                    let r = i - p;
                    for (k, &c) in counts.iter().enumerate().take(cap - 1) {
                        let l = k + 1;
                        let expected = (l > r && l - r <= emax) as usize;
                        assert_eq!(c, expected);
                    }
                    assert_eq!(overflow, (r + emax).saturating_sub(cap));
                }
            }
        }
    }
    assert!(node_transition_counts(2, 3, 4, 5).is_err());
    assert!(node_transition_counts(6, 1, 4, 5).is_err());
}

#[test]
fn unit_buffer_always_returns_to_full() {
    let t = node_transition(1, 1, 3, 1).unwrap();
    assert_eq!(t.probs, vec![1.0]);
    assert_relative_eq!(t.overflow, 2.0 / 3.0);
}

#[test]
fn transfer_rows_are_distributions() {
    let m = model(4, 4, 2, 3, 0.9);
    let mut seed = 7u64;
    for _ in 0..20 {
        let actions = (0..m.num_states())
            .map(|k| {
                let (i, j) = m.levels(k);
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((seed >> 33) as usize % i + 1, (seed >> 40) as usize % j + 1)
            })
            .collect();
        let rho = PolicyTable::new(&m, actions).unwrap();
        let p = transfer_matrix(&rho, &m).unwrap();
        for s in 0..p.size() {
            let row: f64 = (0..p.size()).map(|t| p.get(s, t)).sum();
            assert!((row - 1.0).abs() <= 1e-12);
            // nodes move independently
            let (i, j) = m.levels(s);
            let (p1, p2) = rho.action(i, j);
            let a = node_transition(i, p1, m.e1max(), m.l1()).unwrap();
            let b = node_transition(j, p2, m.e2max(), m.l2()).unwrap();
            for t in 0..p.size() {
                let (k, l) = m.levels(t);
                assert_relative_eq!(p.get(s, t), a.probs[k - 1] * b.probs[l - 1], max_relative = 1e-14);
            }
        }
    }
}

#[test]
fn state_distortion_matches_model() {
    let m = model(3, 3, 1, 1, 0.9);
    let params = SystemParams::paper_defaults();
    let d = state_distortion((1, 1), &m).unwrap();
    let r = RatePair::new(channel_rate(1.0, 0.8).unwrap(), channel_rate(1.0, 0.5).unwrap()).unwrap();
    assert_relative_eq!(d, min_weighted_distortion(r, &params).unwrap().value, max_relative = 1e-14);
    assert!((d - brute_force_min_distortion(r, &params, 1000).unwrap()).abs() <= 1e-3);
    assert!(state_distortion((2, 1), &m).unwrap() < d);
    assert!(state_distortion((1, 2), &m).unwrap() < d);
    assert!(state_distortion((0, 1), &m).is_err());

    let m1 = m.with_params(params.with_eta(1.0).unwrap());
    assert_relative_eq!(state_distortion((1, 1), &m1).unwrap(), 1.0 / (1.8 * 1.5), max_relative = 1e-14);
}

#[test]
fn unit_model_value_is_the_distortion() {
    let m = model(1, 1, 1, 1, 0.95);
    let vi = solve(&m, 1e-12);
    assert_relative_eq!(vi.values.as_slice()[0], state_distortion((1, 1), &m).unwrap(), max_relative = 1e-10);
    assert_eq!(vi.policy.action(1, 1), (1, 1));
}

#[test]
fn bellman_is_an_alpha_contraction() {
    let m = model(5, 4, 3, 2, 0.9);
    let n = m.num_states();
    let op = BellmanOperator::new(&m);
    let mut seed = 11u64;
    let mut draw = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..100 {
        let v = CostVector::new((0..n).map(|_| draw()).collect()).unwrap();
        let w = CostVector::new((0..n).map(|_| draw() * 3.0 - 1.0).collect()).unwrap();
        let (tv, _) = op.apply(&v);
        let (tw, _) = op.apply(&w);
        assert!(tv.sup_distance(&tw) <= m.alpha() * v.sup_distance(&w) + 1e-12);
    }
}

#[test]
fn value_iteration_forgets_its_start() {
    let m = model(6, 5, 3, 2, 0.9);
    let eps = 1e-6;
    let a = solve(&m, eps);
    let high = ViOptions { eps, v0: Some(CostVector::new(vec![5.0; m.num_states()]).unwrap()), max_iter: None };
    let b = value_iteration(&m, &high).unwrap();
    assert!(a.values.sup_distance(&b.values) <= 2.0 * eps / (1.0 - m.alpha()));
    // iterates from zero rise towards v*, iterates from above fall
    for (x, y) in a.values.as_slice().iter().zip(b.values.as_slice()) {
        assert!(x <= y);
    }
}

#[test]
fn value_iteration_reports_the_cap() {
    let m = model(4, 4, 2, 2, 0.99);
    let err = value_iteration(&m, &ViOptions { eps: 1e-12, v0: None, max_iter: Some(5) }).unwrap_err();
    assert!(err.is_non_convergence());
    assert!(value_iteration(&m, &ViOptions { eps: 0.0, ..Default::default() }).is_err());
}

#[test]
fn optimal_policy_beats_every_stationary_policy() {
    let m = model(3, 3, 2, 2, 0.9);
    let vi = solve(&m, 1e-12);
    let best = optimal_values_by_enumeration(&m, 100_000).unwrap();
    for (a, b) in vi.values.as_slice().iter().zip(best.as_slice()) {
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
    let exact = policy_value_exact(&vi.policy, &m).unwrap();
    assert!(exact.sup_distance(&best) <= 1e-9);
    assert!(optimal_values_by_enumeration(&model(4, 4, 1, 1, 0.9), 1000).is_err());
}

#[test]
fn exact_policy_value_is_a_fixed_point() {
    let m = model(5, 5, 3, 2, 0.95);
    let rho = PolicyTable::greedy(&m);
    let v = policy_value_exact(&rho, &m).unwrap();
    let again = BellmanOperator::new(&m).apply_policy(&v, &rho);
    assert!(v.sup_distance(&again) <= 1e-12);
}

#[test]
fn value_iteration_is_thread_count_independent() {
    let m = model(8, 7, 4, 3, 0.95);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| solve(&m, 1e-6))
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.values, b.values);
    assert_eq!(a.policy, b.policy);
}

#[test]
fn stationary_distribution_checks() {
    let m = model(5, 5, 3, 2, 0.95);
    let vi = solve(&m, 1e-8);
    let p = transfer_matrix(&vi.policy, &m).unwrap();
    assert_eq!(closed_class_count(&p), 1);
    let pi = stationary_distribution(&p).unwrap();
    assert!((pi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!(pi.iter().all(|&x| x >= 0.0));
    for t in 0..p.size() {
        let moved: f64 = (0..p.size()).map(|s| pi[s] * p.get(s, t)).sum();
        assert!((moved - pi[t]).abs() <= 1e-10);
    }
    let power = stationary_by_power_iteration(&p, 1e-14, 1_000_000).unwrap();
    for (a, b) in pi.iter().zip(&power) {
        assert!((a - b).abs() <= 1e-8);
    }
}

#[test]
fn expected_distortion_on_unit_model() {
    let m = model(1, 1, 2, 2, 0.9);
    let vi = solve(&m, 1e-12);
    let d = state_distortion((1, 1), &m).unwrap();
    assert_relative_eq!(expected_distortion(&vi.values, &vi.policy, &m).unwrap(), d, max_relative = 1e-10);
}

#[test]
fn greedy_never_overflows_when_the_buffer_holds_a_harvest() {
    let m = model(6, 4, 6, 4, 0.9);
    let (q1, q2) = overflow_probability(&PolicyTable::greedy(&m), &m).unwrap();
    assert_eq!((q1, q2), (0.0, 0.0));
    let small = model(2, 2, 4, 4, 0.9);
    let (q1, q2) = overflow_probability(&PolicyTable::greedy(&small), &small).unwrap();
    assert_relative_eq!(q1, 0.5);
    assert_relative_eq!(q2, 0.5);
}

#[test]
fn analytic_overflow_matches_simulation() {
    let m = model(6, 6, 5, 4, 0.95);
    let vi = solve(&m, 1e-6);
    let (q1, q2) = overflow_probability(&vi.policy, &m).unwrap();
    let mc = monte_carlo(&vi.policy, &m, 20_000, 20, 300, None, &SimOptions::default()).unwrap();
    for (q, (rate, se)) in [(q1, (mc.overflow_rate[0], mc.overflow_stderr[0])), (q2, (mc.overflow_rate[1], mc.overflow_stderr[1]))] {
        assert!((q - rate).abs() <= 4.0 * se + 1e-4, "analytic {q} vs simulated {rate} +- {se}");
    }
    let greedy = monte_carlo(&Greedy, &m, 2_000, 4, 1, None, &SimOptions::default()).unwrap();
    assert_eq!(greedy.overflow_rate, [0.0, 0.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn node_transition_is_a_distribution(cap in 1usize..30, emax in 1usize..15, i_frac in 0.0..1.0f64, p_frac in 0.0..1.0f64) {
        let i = 1 + ((cap - 1) as f64 * i_frac) as usize;
        let p = 1 + ((i - 1) as f64 * p_frac) as usize;
        let t = node_transition(i, p, emax, cap).unwrap();
        prop_assert!((t.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(t.overflow >= 0.0 && t.overflow <= t.probs[cap - 1] + 1e-15);
    }

    #[test]
    fn state_index_round_trip(l1 in 1usize..40, l2 in 1usize..40, a in 0.0..1.0f64) {
        let m = model(l1, l2, 1, 1, 0.9);
        let s = 1 + ((m.num_states() - 1) as f64 * a) as usize;
        let idx = StateIndex::new(s, &m).unwrap();
        let (i, j) = m.decode(idx);
        prop_assert_eq!(m.encode(i, j), idx);
    }
}
