use proptest::prelude::*;
use regen::cost_model::{check_correct, mbcr, mscr, CodeParams, CostPoint};
use regen::ratio::{from_usize, int, rat, Rational};
use regen::tradeoff::{default_tolerance, min_gamma_for_alpha, trace_curve};

fn small() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=3, 1usize..=3, 0usize..=3).prop_map(|(g, t, e)| (g * t, g * t + e, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convex_combinations_of_feasible_points_are_feasible(
        (k, d, t) in small(),
        lambda in 0u32..=16,
        a_pick in 0u32..=8,
        b_pick in 0u32..=8,
    ) {
        let p = CodeParams::new(k, d, t, int(k as i64)).unwrap();
        let (lo, hi) = (mscr(&p).unwrap().alpha, mbcr(&p).unwrap().alpha);
        let at = |i: u32| &lo + (&hi - &lo) * rat(i as i64, 8);
        let tol = default_tolerance(&p);
        let x = min_gamma_for_alpha(&p, &at(a_pick), &tol).unwrap();
        let y = min_gamma_for_alpha(&p, &at(b_pick), &tol).unwrap();
        let w = rat(lambda as i64, 16);
        let mix = |a: &Rational, b: &Rational| &w * a + (int(1) - &w) * b;
        let c = CostPoint::new(mix(&x.alpha, &y.alpha), mix(&x.beta, &y.beta), mix(&x.beta_prime, &y.beta_prime), d, t);
        prop_assert!(check_correct(&p, &c).unwrap().satisfied());
    }

    #[test]
    fn curves_are_monotone_and_feasible((k, d, t) in small()) {
        let p = CodeParams::new(k, d, t, int(k as i64)).unwrap();
        let tol = default_tolerance(&p);
        let curve = trace_curve(&p, 6, &tol).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[0].alpha <= w[1].alpha);
            prop_assert!(w[0].gamma >= &w[1].gamma - &tol);
        }
        for pt in &curve {
            prop_assert!(check_correct(&p, &pt.to_cost_point(d, t)).unwrap().satisfied());
        }
    }
}

#[test]
fn returned_points_cannot_shrink() {
    let p = CodeParams::new(6, 8, 3, int(6)).unwrap();
    let tol = default_tolerance(&p);
    let two = from_usize(2);
    for pt in trace_curve(&p, 5, &tol).unwrap() {
        let f = (&pt.gamma - &two * &tol) / &pt.gamma;
        let c = pt.to_cost_point(p.d, p.t).with_beta_scaled(&f, p.d, p.t).with_beta_prime_scaled(&f, p.d, p.t);
        assert!(!check_correct(&p, &c).unwrap().satisfied(), "alpha {}", pt.alpha);
    }
}
