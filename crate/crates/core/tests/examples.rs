//! Worked examples for each public operation, with the reference values
//! either closed forms or computed by the small oracles at the bottom of
//! this file and frozen.

use cherry_core::bounds::{
    c_of_ell, decay_trend, ratio_sequence, synthetic_theta, theta_step, verify_proposition, verify_senk_empirical,
    BoundParams, ThetaOrigin, ThetaSequence,
};
use cherry_core::cf::{closest_returns, convergents, count_in_gap, ContinuedFraction, RotationTarget};
use cherry_core::flatmap::{build_map, tune, Lift, TuneOptions};
use cherry_core::suspension::{
    occupation_times, tau_mu_integral_estimate, OrbitSegment, Profile, ReturnTimeModel, SegmentPoint, TimeWindow,
};
use cherry_core::{Error, Mp, Real};

/// A map tuned near the golden mean, so short forward orbits stay off the
/// critical value.
fn golden_map() -> Lift<Mp> {
    let target = RotationTarget::<Mp>::golden_mean(128, 40);
    tune(1.5, 0.2, &target, 1e-4, TuneOptions::default()).unwrap().lift
}

#[test]
fn expansions_of_named_constants() {
    let golden = Mp::from_f64(5.0, 256).sqrt();
    let golden = (golden - 1.0) / 2.0;
    assert_eq!(ContinuedFraction::expand(&golden, 10).unwrap().quotients(), [1; 10]);
    let silver = Mp::from_f64(2.0, 256).sqrt() - 1.0;
    assert_eq!(ContinuedFraction::expand(&silver, 4).unwrap().quotients(), [2; 4]);
}

#[test]
fn five_sevenths_terminates_from_a_real() {
    let x = Mp::from_ratio(&5.into(), &7.into(), 256);
    let cf = ContinuedFraction::expand(&x, 8).unwrap();
    assert_eq!(cf.quotients(), [1, 2, 2]);
    assert!(cf.terminated());
}

#[test]
fn closest_return_examples() {
    let golden = RotationTarget::<Mp>::golden_mean(128, 30);
    assert_eq!(closest_returns(&golden, 20).unwrap(), [1, 2, 3, 5, 8, 13]);
    let silver = RotationTarget::<Mp>::silver_mean(128, 30);
    assert_eq!(closest_returns(&silver, 15).unwrap(), [1, 2, 5, 12]);
    assert_eq!(closest_returns(&silver, 15).unwrap(), brute_force_closest(&[2; 30], 15));
    let three = RotationTarget::<Mp>::from_quotients(&[3], 128, 30).unwrap();
    assert_eq!(closest_returns(&three, 3).unwrap(), [1, 3]);
    assert_eq!(brute_force_closest(&[3; 1].iter().chain(&[1; 29]).copied().collect::<Vec<_>>(), 3), [1, 3]);
}

#[test]
fn gap_count_examples() {
    let golden = RotationTarget::<Mp>::golden_mean(128, 30);
    let g = count_in_gap(&golden, 3, 20).unwrap();
    assert!(g.n_l <= 4 && g.bound_ok);
    assert_eq!(g.n_l, brute_force_gap(&[1; 30], 3, 20));

    let silver = RotationTarget::<Mp>::silver_mean(128, 30);
    let g = count_in_gap(&silver, 2, 100).unwrap();
    assert!(g.n_l <= 8 && g.bound_ok);
    assert_eq!(g.n_l, brute_force_gap(&[2; 30], 2, 100));

    // N below q_{l+1}: at most one point fits, and the bound holds trivially.
    let g = count_in_gap(&golden, 4, 7).unwrap();
    assert!(g.bound_ok);
}

#[test]
fn linear_profile_is_affine_off_the_flat_piece() {
    let lift = build_map(1.0, 0.2, Mp::from_f64(0.0, 128), 128).unwrap();
    let f = |x: f64| lift.eval(&Mp::from_f64(x, 128)).to_f64();
    assert!((f(0.5) - 0.5).abs() < 1e-15);
    for x in [0.1, 0.3, 0.7, 0.9] {
        assert!((f(x) - (x - 0.1) / 0.8).abs() < 1e-15, "x = {x}");
    }
    for x in [-0.099, 0.0, 0.05] {
        assert_eq!(f(x), 0.0);
    }
}

#[test]
fn closed_form_profiles() {
    // ell = 2: F(b + uL) - c = 3u^2 - 2u^3.  ell = 3 at u = 1/4: 53/512.
    let l2 = build_map(2.0, 0.2, Mp::from_f64(0.25, 192), 192).unwrap();
    // x = b + uL, built from the stored endpoints so u is exact
    let span = |l: &Lift<Mp>| Mp::one(192) - &(l.b().clone() - l.a());
    let x = l2.b().clone() + &(span(&l2) * 0.5);
    let y = l2.eval(&x) - l2.c();
    assert!((y - 0.5).abs() < Mp::pow2(-150, 192));
    let l3 = build_map(3.0, 0.2, Mp::from_f64(0.25, 192), 192).unwrap();
    let x = l3.b().clone() + &(span(&l3) * 0.25);
    let y = l3.eval(&x) - l3.c();
    assert!((y - 53.0 / 512.0).abs() < Mp::pow2(-150, 192));
}

#[test]
fn ell_two_local_constant_is_stable() {
    let lift = build_map(2.0, 0.2, Mp::from_f64(0.1, 256), 256).unwrap();
    let ratios: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&h| {
            let y = lift.eval(&(lift.b().clone() + h)) - lift.c();
            y.to_f64() / (h * h)
        })
        .collect();
    // 3/L^2 with L = 0.8
    let limit = 3.0 / 0.64;
    for r in &ratios {
        assert!((r - limit).abs() / limit < 0.02, "{ratios:?}");
    }
}

#[test]
fn series_matches_quadrature_and_simpson() {
    for ell in [0.8, 1.2, 1.5, 2.0, 3.5] {
        let lift = build_map(ell, 0.2, Mp::from_f64(0.3, 128), 128).unwrap();
        for j in 1..10 {
            let x = Mp::from_f64(0.1 + 0.08 * j as f64, 128);
            let series = lift.eval(&x);
            let quad = lift.eval_quadrature(&x);
            let diff = (series.clone() - &quad).abs().to_f64();
            assert!(diff < 1e-30, "ell {ell} x {x:?}: {diff:e}");
            if ell >= 1.0 {
                let u = (x.to_f64() - 0.1) / 0.8;
                let simpson = 0.3 + simpson_regularized(ell, u);
                assert!((series.to_f64() - simpson).abs() < 1e-9, "ell {ell} u {u}");
            }
        }
    }
}

#[test]
fn flat_piece_maps_to_c() {
    let c = Mp::from_f64(0.37, 128);
    let lift = build_map(1.5, 0.2, c.clone(), 128).unwrap();
    for x in [-0.0999, -0.05, 0.0, 0.05, 0.0999] {
        assert_eq!(lift.eval(&Mp::from_f64(x, 128)), c);
    }
}

#[test]
fn near_rigid_rotation() {
    // ell = 1 with a tiny flat piece is the rotation by c - b up to 1e-9.
    let c = 0.3;
    let lift = build_map(1.0, 1e-9, Mp::from_f64(c, 128), 128).unwrap();
    let est = lift.rotation_number(10_000).unwrap();
    let diff = (est.estimate.to_f64() - c).abs();
    assert!(diff <= 1e-8 + est.error_bound, "{diff:e}");
}

#[test]
fn rational_target_is_rejected() {
    let half = RotationTarget::<Mp>::rational(1, 2, 128).unwrap();
    let err = tune(1.5, 0.2, &half, 1e-6, TuneOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidTarget(_)));
}

#[test]
fn short_tune_lands_inside_the_bracket() {
    let target = RotationTarget::<Mp>::golden_mean(128, 40);
    let t = tune(1.5, 0.2, &target, 1e-4, TuneOptions::default()).unwrap();
    let est = t.lift.rotation_number(20_000).unwrap();
    let diff = (est.estimate - &target.value).abs().to_f64();
    assert!(diff <= 1e-4 + est.error_bound, "{diff:e}");
}

#[test]
fn c_of_ell_examples() {
    assert_eq!(c_of_ell(2.0, &[1], 1).unwrap(), 0.5);
    assert!(c_of_ell(2.0, &[1, 2, 3, 7], 1).unwrap() < 1.0);
    let brute = [1u32, 2, 3]
        .iter()
        .map(|&a| ((1.0 - 1.5f64.powi(-(a as i32))) / (0.5 * a as f64)).sqrt())
        .fold(0.0, f64::max);
    assert!((c_of_ell(1.5, &[1, 2, 3], 2).unwrap() - brute).abs() < 1e-15);
}

#[test]
fn theta_step_examples() {
    assert!((theta_step(2.0, 1, 1, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((theta_step(2.0, 2, 2, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(theta_step(1.7, 3, 2, 0.0, 0.0).unwrap(), 0.0);
}

#[test]
fn proposition_examples() {
    let ones = vec![1u64; 80];
    let table = convergents(&ContinuedFraction::prescribed(ones.clone()).unwrap());
    let theta = synthetic_theta(2.0, &ones, 2, (1.0, 1.0), 60).unwrap();
    let params = BoundParams::from_data(2.0, &ones, 2, &theta).unwrap();
    assert!(verify_proposition(&theta, &table, &params).unwrap().verdict);

    // With n0 = 1 the constant is the base quantity itself (0.5 at ℓ = 2),
    // so the bound 0.5^n q_{n+1} drops below θ_n = 1 near n = 10.
    let theta1 = synthetic_theta(2.0, &ones, 1, (1.0, 1.0), 60).unwrap();
    let params1 = BoundParams::from_data(2.0, &ones, 1, &theta1).unwrap();
    assert!((params1.c - 0.5).abs() < 1e-15);
    assert!(!verify_proposition(&theta1, &table, &params1).unwrap().verdict);

    let zero = ThetaSequence {
        first: 0,
        theta: vec![0.0; 40],
        origin: ThetaOrigin::SyntheticRecurrence,
    };
    let p = BoundParams {
        k: 0.0,
        ..params
    };
    assert!(verify_proposition(&zero, &table, &p).unwrap().verdict);

    let adversarial = ThetaSequence {
        first: 0,
        theta: (0..60).map(|n| table.q_u64(n + 1).unwrap() as f64).collect(),
        origin: ThetaOrigin::SyntheticRecurrence,
    };
    let report = verify_proposition(&adversarial, &table, &params).unwrap();
    assert!(!report.verdict);
    assert!(report
        .rows
        .iter()
        .filter(|r| params.k * params.c.powi(r.n as i32) < 1.0)
        .all(|r| !r.verdict));
}

#[test]
fn senk_examples() {
    let ones = vec![1u64; 40];
    let table = convergents(&ContinuedFraction::prescribed(ones.clone()).unwrap());
    let theta = synthetic_theta(1.5, &ones, 2, (0.7, 1.3), 30).unwrap();
    let r = verify_senk_empirical(&theta, &table, 1.5, &ones).unwrap();
    assert!(r.k1_min >= 1.0 - 1e-12);
    assert!(r.uniform);

    let three = ThetaSequence::measured(vec![1.0, 1.0, 1.0]);
    assert!(matches!(
        verify_senk_empirical(&three, &table, 1.5, &ones),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn geometric_distances_give_constant_ratio() {
    let alpha: f64 = 0.3;
    let d: Vec<(usize, f64)> = (0..12).map(|n| (n, n as f64 * alpha.ln())).collect();
    let r = ratio_sequence(&d).unwrap();
    for row in &r.rows {
        assert!((row.r - alpha * alpha).abs() < 1e-14);
    }
    assert!((r.inf - alpha * alpha).abs() < 1e-14);
    assert!(!r.trend.unwrap().decaying);
    assert!(decay_trend(&[0.0, -1.0, -2.0, -3.0], 6).unwrap().decaying);
}

fn point(i: usize, ln_dist: f64, m: &ReturnTimeModel) -> SegmentPoint<f64> {
    SegmentPoint {
        i,
        z: 0.0,
        offset: ln_dist.exp(),
        dist: ln_dist.exp(),
        ln_dist,
        t: m.tau(ln_dist),
        dwell: m.dwell(ln_dist),
    }
}

fn segment(lns: &[f64], m: ReturnTimeModel) -> OrbitSegment<f64> {
    OrbitSegment {
        prec: 53,
        model: m,
        points: lns.iter().enumerate().map(|(i, &l)| point(i + 1, l, &m)).collect(),
    }
}

#[test]
fn time_average_examples() {
    let m = ReturnTimeModel {
        tau0: 1.0,
        kappa: 1.0,
        epsilon_cut: 0.1,
    };
    let eps = 0.1f64;
    let seg = segment(&[-1.0, (eps / std::f64::consts::E).ln(), -1.5, -2.0], m);
    let w = seg.full_window();
    assert!((seg.time_average(&w, |_| 1.0, Profile::Uniform) - 1.0).abs() < 1e-15);
    // Only the second point is inside the cut, one e-fold deep.
    assert!((seg.gamma_hat(&w) - 1.0 / w.t).abs() < 1e-15);

    let far = segment(&[-1.0, -1.5, -2.0], m);
    assert_eq!(far.gamma_hat(&far.full_window()), 0.0);

    let left = |p: &SegmentPoint<f64>| if p.ln_dist > -1.7 { 1.0 } else { 0.0 };
    let right = |p: &SegmentPoint<f64>| if p.ln_dist <= -1.7 { 1.0 } else { 0.0 };
    let sum = seg.time_average(&w, left, Profile::Uniform) + seg.time_average(&w, right, Profile::Uniform);
    assert!((sum - 1.0).abs() < 1e-15);
    let manual: f64 = seg.points.iter().filter(|p| left(p) > 0.0).map(|p| p.t).sum::<f64>() / w.t;
    assert!((seg.time_average(&w, left, Profile::Uniform) - manual).abs() < 1e-15);
}

#[test]
fn empty_segment_window() {
    let m = ReturnTimeModel::for_lambda1(1.5, 0.1).unwrap();
    let seg = segment(&[-3.0], m);
    let w = seg.window(0.5).unwrap();
    assert_eq!(w, TimeWindow { n: 0, remainder: 0.5, t: 0.5 });
    assert!(w.t <= seg.points[0].t);
}

#[test]
fn occupation_with_empty_b_range() {
    let lift = golden_map();
    let table = RotationTarget::<Mp>::golden_mean(128, 30).convergents();
    let g = cherry_core::flatmap::preimage_geometry(&lift, &table, 4).unwrap();
    let m = ReturnTimeModel::for_lambda1(1.5, 0.1).unwrap();
    let z = (lift.a().clone() + lift.b()) / 2.0;
    let seg = cherry_core::suspension::iterate_segment(&lift, &m, &z, 50).unwrap();
    let occ = occupation_times(&seg, &seg.full_window(), &g.forward, 3, 3).unwrap();
    assert!(occ.b.is_empty());
    assert_eq!(occ.sum_b, 0.0);
}

#[test]
fn constant_return_time_integral() {
    let lift = golden_map();
    let m = ReturnTimeModel {
        tau0: 2.5,
        kappa: 0.0,
        epsilon_cut: 0.1,
    };
    let est = tau_mu_integral_estimate(&lift, &m, 500, None).unwrap();
    assert_eq!(est.estimate, 2.5);
}

// ---- oracles ----

/// `P(u)/B` for `ell >= 1` by composite Simpson after `t = s^5`, which
/// smooths the endpoint behaviour; the upper half uses `P(u) = B - P(1-u)`.
fn simpson_regularized(ell: f64, u: f64) -> f64 {
    let partial = |hi: f64| {
        let w = |s: f64| {
            let t = s.powi(5);
            (t * (1.0 - t)).powf(ell - 1.0) * 5.0 * s.powi(4)
        };
        let top = hi.powf(0.2);
        let n = 2_000;
        let h = top / n as f64;
        let mut acc = w(0.0) + w(top);
        for k in 1..n {
            acc += w(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let beta = 2.0 * partial(0.5);
    if u <= 0.5 {
        partial(u) / beta
    } else {
        1.0 - partial(1.0 - u) / beta
    }
}

/// `(P, Q)` convergent of `quotients` with `Q` just above `2^50`.
fn approximant(quotients: &[u64]) -> (u128, u128) {
    let (mut p0, mut q0, mut p1, mut q1) = (1u128, 0u128, 0u128, 1u128);
    for &a in quotients {
        let (p2, q2) = (a as u128 * p1 + p0, a as u128 * q1 + q0);
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if q1 >= 1 << 50 {
            break;
        }
    }
    (p1, q1)
}

fn brute_force_closest(quotients: &[u64], n: u64) -> Vec<u64> {
    let (p, q) = approximant(quotients);
    let mut best = q;
    let mut out = Vec::new();
    for k in 1..=n as u128 {
        let r = (k * p) % q;
        let d = r.min(q - r);
        if d < best {
            best = d;
            out.push(k as u64);
        }
    }
    out
}

fn brute_force_gap(quotients: &[u64], l: usize, n: u64) -> u64 {
    let (p, q) = approximant(quotients);
    let t = convergents(&ContinuedFraction::prescribed(quotients.to_vec()).unwrap());
    let ql = t.q_u64(l).unwrap() as u128;
    let end = (ql * p) % q;
    (1..=n as u128)
        .filter(|&i| {
            let y = (q - (i * p) % q) % q;
            if end * 2 < q {
                y > 0 && y < end
            } else {
                y > end
            }
        })
        .count() as u64
}
