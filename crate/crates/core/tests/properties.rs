use cherry_core::bounds::{base_quantity, c_of_ell, e1, ell_pow_neg, synthetic_theta, verify_proposition, BoundParams};
use cherry_core::cf::{closest_returns, convergents, count_in_gap, ContinuedFraction, RotationTarget};
use cherry_core::flatmap::{build_map, Lift};
use cherry_core::suspension::{OrbitSegment, Profile, ReturnTimeModel, SegmentPoint};
use cherry_core::{Mp, Real};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use proptest::prelude::*;

fn lift(ell: f64, flat: f64, c: f64) -> Lift<Mp> {
    build_map(ell, flat, Mp::from_f64(c, 128), 128).unwrap()
}

fn mp(x: f64) -> Mp {
    Mp::from_f64(x, 128)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lift_commutes_with_unit_translation(ell in 0.6f64..4.0, flat in 0.05f64..0.6, c in -1.0f64..1.0, x in -3.0f64..3.0) {
        let f = lift(ell, flat, c);
        let d = f.eval(&(mp(x) + 1.0)) - &f.eval(&mp(x)) - 1.0;
        prop_assert!(d.abs() < Mp::pow2(-100, 128));
    }

    #[test]
    fn lift_is_non_decreasing(ell in 0.6f64..4.0, flat in 0.05f64..0.6, x in -1.0f64..1.0, h in 1e-9f64..0.5) {
        let f = lift(ell, flat, 0.2);
        prop_assert!(f.eval(&mp(x + h)) >= f.eval(&mp(x)));
    }

    #[test]
    fn inverse_branch_undoes_the_map(ell in 0.6f64..4.0, flat in 0.05f64..0.6, c in 0.0f64..1.0, u in 0.001f64..0.999) {
        let f = lift(ell, flat, c);
        let span = Mp::one(128) - &(f.b().clone() - f.a());
        let x = f.b().clone() + &(span * u);
        let z = f.eval(&x);
        let back = f.eval_inverse_g(&z).unwrap();
        prop_assert!((back - &x).abs() < Mp::pow2(-80, 128));
    }

    #[test]
    fn rational_round_trip(q in 2u64..1_000_000, p_frac in 0.0f64..1.0) {
        let p = ((p_frac * (q - 1) as f64) as u64).clamp(1, q - 1);
        let cf = ContinuedFraction::from_rational(&BigUint::from(p), &BigUint::from(q)).unwrap();
        prop_assert_eq!(cf.evaluate(), BigRational::new(BigInt::from(p), BigInt::from(q)));
        let x = Mp::from_ratio(&BigInt::from(p), &BigInt::from(q), 200);
        let from_real = ContinuedFraction::expand(&x, 64).unwrap();
        prop_assert!(from_real.terminated());
        prop_assert_eq!(from_real.quotients(), cf.quotients());
    }

    #[test]
    fn convergents_satisfy_recurrence(quotients in prop::collection::vec(1u64..10_000, 1..60)) {
        let cf = ContinuedFraction::prescribed(quotients).unwrap();
        let t = convergents(&cf);
        prop_assert!(t.satisfies_recurrence(&cf));
        // p_n q_{n-1} - p_{n-1} q_n = ±1
        for n in 1..t.len() {
            let lhs = BigInt::from(t.p(n).unwrap() * t.q(n - 1).unwrap());
            let rhs = BigInt::from(t.p(n - 1).unwrap() * t.q(n).unwrap());
            prop_assert_eq!((lhs - rhs).magnitude().clone(), BigUint::from(1u32));
        }
    }

    #[test]
    fn closest_returns_are_convergent_denominators(head in prop::collection::vec(1u64..8, 0..6), n in 10u64..3000) {
        let rho = if head.is_empty() {
            RotationTarget::<Mp>::golden_mean(128, 40)
        } else {
            RotationTarget::<Mp>::from_quotients(&head, 128, 40).unwrap()
        };
        let t = rho.convergents();
        let mut expected: Vec<u64> = (0..t.len()).filter_map(|k| t.q_u64(k)).filter(|&q| q <= n).collect();
        expected.dedup();
        prop_assert_eq!(closest_returns(&rho, n).unwrap(), expected);
    }

    #[test]
    fn gap_counts_respect_the_bound(head in prop::collection::vec(1u64..8, 1..6), n in 10u64..2000) {
        let rho = RotationTarget::<Mp>::from_quotients(&head, 128, 40).unwrap();
        let t = rho.convergents();
        let mut l = 0;
        while t.q_u64(l).is_some_and(|q| q <= n) && t.q_u64(l + 1).is_some() {
            let g = count_in_gap(&rho, l, n).unwrap();
            prop_assert!(g.bound_ok, "l = {}, n_l = {}", l, g.n_l);
            l += 1;
        }
    }

    #[test]
    fn theta_bound_holds_on_saturated_recurrences(
        quotients in prop::collection::vec(1u64..6, 62..63),
        ell in 1.01f64..3.0,
        s0 in 0.01f64..10.0,
        s1 in 0.01f64..10.0,
    ) {
        let theta = synthetic_theta(ell, &quotients, 2, (s0, s1), 60).unwrap();
        let params = BoundParams::from_data(ell, &quotients, 2, &theta).unwrap();
        let table = convergents(&ContinuedFraction::prescribed(quotients).unwrap());
        let r = verify_proposition(&theta, &table, &params).unwrap();
        prop_assert!(r.verdict, "k_fit {} > k {}", r.k_fit, params.k);
    }

    #[test]
    fn base_quantity_chain(ell in 1.0001f64..2.0, a in 1u64..200) {
        let lhs = ell_pow_neg(ell, a);
        let mid = base_quantity(ell, a);
        prop_assert!(lhs <= mid * (1.0 + 1e-14));
        prop_assert!(base_quantity(ell, a + 1) <= mid * (1.0 + 1e-14));
        prop_assert!(e1(ell, a) > 0.0);
        prop_assert!(c_of_ell(ell, &[a], 1).unwrap() < 1.0);
    }

    #[test]
    fn time_averages_are_normalized_and_linear(lns in prop::collection::vec(-30.0f64..-0.8, 2..40), cut in -20.0f64..-1.0) {
        let m = ReturnTimeModel { tau0: 1.0, kappa: 0.7, epsilon_cut: 0.1 };
        let seg = OrbitSegment {
            prec: 53,
            model: m,
            points: lns
                .iter()
                .enumerate()
                .map(|(i, &l)| SegmentPoint { i: i + 1, z: 0.0, offset: l.exp(), dist: l.exp(), ln_dist: l, t: m.tau(l), dwell: m.dwell(l) })
                .collect(),
        };
        let w = seg.full_window();
        prop_assert!(w.t >= m.tau0 * w.n as f64);
        prop_assert!((seg.time_average(&w, |_| 1.0, Profile::Uniform) - 1.0).abs() < 1e-12);
        let a = seg.time_average(&w, |p| if p.ln_dist < cut { 1.0 } else { 0.0 }, Profile::Uniform);
        let b = seg.time_average(&w, |p| if p.ln_dist >= cut { 1.0 } else { 0.0 }, Profile::Uniform);
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        let g = seg.gamma_hat(&w);
        prop_assert!((0.0..=1.0).contains(&g));
    }
}
