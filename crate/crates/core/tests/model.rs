use approx::assert_relative_eq;
use ehpc_core::model::*;
use proptest::prelude::*;

fn params(eta: f64, w1: f64) -> SystemParams {
    SystemParams::new(eta, w1, 1.0 - w1, 0.8, 0.5).unwrap()
}

fn d_at(r1: f64, r2: f64, p: &SystemParams) -> f64 {
    min_weighted_distortion(RatePair { r1, r2 }, p).unwrap().value
}

#[test]
fn brute_force_examples() {
    let p = params(0.7, 0.3);
    let r = RatePair::new(1.0, 1.0).unwrap();
    let closed = min_weighted_distortion(r, &p).unwrap().value;
    assert!((closed - brute_force_min_distortion(r, &p, 1000).unwrap()).abs() <= 1e-3);

    let p = params(0.3, 0.2);
    let r = RatePair::new(2.0, 0.5).unwrap();
    let closed = min_weighted_distortion(r, &p).unwrap().value;
    assert!((closed - brute_force_min_distortion(r, &p, 1000).unwrap()).abs() <= 1e-3);

    let zero = brute_force_min_distortion(RatePair::new(0.0, 0.0).unwrap(), &p, 1000).unwrap();
    assert!((zero - 1.0).abs() <= 1e-3);
    assert!(brute_force_min_distortion(r, &p, 999).is_err());
}

#[test]
fn brute_force_never_beats_closed_form() {
    // the grid only samples feasible points, so it can only be worse
    for &(r1, r2) in &[(0.2, 2.5), (3.0, 0.1), (1.4, 1.7), (0.0, 2.0)] {
        for &eta in &[0.1, 0.5, 0.9] {
            let p = params(eta, 0.3);
            let r = RatePair::new(r1, r2).unwrap();
            let closed = min_weighted_distortion(r, &p).unwrap().value;
            let grid = brute_force_min_distortion(r, &p, 1000).unwrap();
            assert!(grid >= closed - 1e-12, "grid {grid} below closed form {closed}");
        }
    }
}

#[test]
fn bound_example_identity() {
    let b = distortion_bounds(RatePair::new(1.0, 1.0).unwrap(), 0.7).unwrap();
    // x = y = 1/4: d1min = (0.3 + 0.7/4)/4, d12min = (0.3 + 0.7/16)/16
    assert_relative_eq!(b.d1min, 0.475 / 4.0, max_relative = 1e-14);
    assert_relative_eq!(b.d12min, 0.34375 / 16.0, max_relative = 1e-14);
    assert_relative_eq!(b.d1max, 0.475, max_relative = 1e-14);
    assert!(b.d1min * b.d2min <= b.d12min);

    let b = distortion_bounds(RatePair::new(0.0, 0.0).unwrap(), 0.7).unwrap();
    for v in [b.d1min, b.d2min, b.d12min, b.d1max, b.d2max] {
        assert_eq!(v, 1.0);
    }
}

#[test]
fn threshold_matches_boundary_slope() {
    // at r2 = g(r1) the corner D sits where the hyperbola has slope -w1/w2
    let p = params(0.7, 0.3);
    for k in 0..20 {
        let r1 = 0.15 * k as f64;
        let g = g_threshold(r1, &p).unwrap();
        let b = distortion_bounds(RatePair::new(r1, g.max(0.0)).unwrap(), 0.7).unwrap();
        if g < 0.0 {
            continue;
        }
        let d1 = b.d12min / b.d2min;
        assert_relative_eq!(b.d12min / (d1 * d1), p.w1() / p.w2(), max_relative = 1e-9);
    }
}

#[test]
fn threshold_grows_linearly_at_high_rate() {
    let p = params(0.7, 0.3);
    // dips slightly near zero rate, then slope tends to 1
    let s = g_threshold(10.0, &p).unwrap() - g_threshold(9.0, &p).unwrap();
    assert!((s - 1.0).abs() < 1e-3);
    let mut prev = g_threshold(2.0, &p).unwrap();
    for k in 1..100 {
        let g = g_threshold(2.0 + 0.05 * k as f64, &p).unwrap();
        assert!(g > prev);
        prev = g;
    }
}

#[test]
fn degenerate_eta_one() {
    let p = params(1.0, 0.3);
    for &(r1, r2) in &[(0.0, 0.0), (1.0, 1.0), (0.3, 2.0)] {
        let w = min_weighted_distortion(RatePair::new(r1, r2).unwrap(), &p).unwrap();
        assert_relative_eq!(w.value, 2f64.powf(-2.0 * (r1 + r2)), max_relative = 1e-14);
        assert_eq!(w.point.d1, w.point.d2);
    }
}

#[test]
fn every_branch_is_reached() {
    let p = params(0.7, 0.3);
    let mut seen = [false; 3];
    for k in 0..40 {
        for l in 0..40 {
            let w = min_weighted_distortion(RatePair::new(0.1 * k as f64, 0.1 * l as f64).unwrap(), &p).unwrap();
            seen[match w.branch {
                Branch::Curve => 0,
                Branch::CornerD => 1,
                Branch::CornerC => 2,
            }] = true;
        }
    }
    assert_eq!(seen, [true; 3]);
}

fn eta_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.0..1.0f64, Just(1.0)]
}

fn weight_strategy() -> impl Strategy<Value = f64> {
    0.01..0.49f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn midpoint_convexity(eta in eta_strategy(), w1 in weight_strategy(),
                          a1 in 0.0..4.0f64, a2 in 0.0..4.0f64, b1 in 0.0..4.0f64, b2 in 0.0..4.0f64) {
        let p = params(eta, w1);
        let mid = d_at(0.5 * (a1 + b1), 0.5 * (a2 + b2), &p);
        prop_assert!(mid <= 0.5 * (d_at(a1, a2, &p) + d_at(b1, b2, &p)) + 1e-9);
    }

    #[test]
    fn non_increasing_in_each_rate(eta in eta_strategy(), w1 in weight_strategy(),
                                   r1 in 0.0..4.0f64, r2 in 0.0..4.0f64, h in 1e-4..0.5f64) {
        let p = params(eta, w1);
        let d = d_at(r1, r2, &p);
        prop_assert!(d_at(r1 + h, r2, &p) <= d + 1e-9);
        prop_assert!(d_at(r1, r2 + h, &p) <= d + 1e-9);
    }

    #[test]
    fn point_is_feasible_and_exact(eta in eta_strategy(), w1 in weight_strategy(), r1 in 0.0..4.0f64, r2 in 0.0..4.0f64) {
        let p = params(eta, w1);
        let r = RatePair::new(r1, r2).unwrap();
        let w = min_weighted_distortion(r, &p).unwrap();
        prop_assert!(region_contains(w.point, r, eta));
        prop_assert_eq!(w.value, p.w1() * w.point.d1 + p.w2() * w.point.d2);
        prop_assert!(w.point.d1 > 0.0 && w.point.d1 <= 1.0 && w.point.d2 > 0.0 && w.point.d2 <= 1.0);
    }

    #[test]
    fn branch_follows_threshold(eta in 0.0..0.999f64, w1 in weight_strategy(), r1 in 0.0..4.0f64, r2 in 0.0..4.0f64) {
        let p = params(eta, w1);
        let g = g_threshold(r1, &p).unwrap();
        prop_assume!((r2 - g).abs() > 1e-9);
        let w = min_weighted_distortion(RatePair::new(r1, r2).unwrap(), &p).unwrap();
        prop_assert_eq!(w.branch == Branch::CornerD, r2 < g);
    }

    #[test]
    fn branches_agree_on_threshold(eta in 0.0..0.999f64, w1 in weight_strategy(), r1 in 0.0..4.0f64) {
        let p = params(eta, w1);
        let g = g_threshold(r1, &p).unwrap();
        prop_assume!(g > 1e-6);
        let below = d_at(r1, g - 1e-10, &p);
        let above = d_at(r1, g + 1e-10, &p);
        prop_assert!((below - above).abs() <= 1e-9);
    }

    #[test]
    fn bound_identity(eta in 0.0..=1.0f64, r1 in 0.0..4.0f64, r2 in 0.0..4.0f64) {
        let b = distortion_bounds(RatePair::new(r1, r2).unwrap(), eta).unwrap();
        let (x, y) = (2f64.powf(-2.0 * r1), 2f64.powf(-2.0 * r2));
        let gap = b.d12min - b.d1min * b.d2min;
        prop_assert!(gap >= -1e-15);
        let expected = (1.0 - eta) * eta * (1.0 - x) * (1.0 - y) * x * y;
        prop_assert!((gap - expected).abs() <= 1e-14);
    }

    #[test]
    fn rate_round_trip(p in 0.0..1e4f64, h in 0.01..10.0f64) {
        let r = channel_rate(p, h).unwrap();
        let back = power_for_rate(r, h).unwrap();
        prop_assert!((back - p).abs() <= 1e-12 * p.max(1e-300) || (p == 0.0 && back == 0.0));
    }
}
