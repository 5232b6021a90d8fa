//! Tanh-sinh quadrature.
//!
//! Kept as a second, independent route to the profile integral; the lift
//! itself evaluates it from series. Double-exponential nodes cluster at the
//! endpoints, which absorbs the algebraic endpoint singularities of the
//! weight for any exponent, and the integrand receives its distances to both
//! endpoints computed without cancellation.

use crate::real::Real;

/// `∫_{-1}^{1} f` where `f(x, 1 + x, 1 - x)`.
pub fn tanh_sinh<R: Real>(f: impl Fn(&R, &R, &R) -> R, prec: u32) -> R {
    let work = prec + 32;
    let half_pi = R::pi(work) / 2.0;
    // Nodes beyond t_max have 1 - |x| below 2^-(work+16).
    let reach = ((work + 16) as f64 * std::f64::consts::LN_2 / std::f64::consts::PI).max(1.0);
    let t_max = reach.asinh() + 0.5;

    let term = |t: f64| -> R {
        let t = R::from_f64(t, work);
        let e = t.exp();
        let ei = R::one(work) / &e;
        let sinh = (e.clone() - &ei) / 2.0;
        let cosh = (e + &ei) / 2.0;
        let s = half_pi.clone() * &sinh;
        // x = tanh(s); 1 - x = 2/(1 + e^{2s}); 1 + x = 2/(1 + e^{-2s})
        let e2 = (s.clone() * 2.0).exp();
        let one_minus = R::from_f64(2.0, work) / &(e2.clone() + 1.0);
        let one_plus = R::from_f64(2.0, work) / &(R::one(work) / &e2 + 1.0);
        let x = one_plus.clone() - 1.0;
        let cosh_s = (s.exp() + &(-s).exp()) / 2.0;
        let w = half_pi.clone() * &cosh / &(cosh_s.clone() * &cosh_s);
        if one_minus.is_zero() || one_plus.is_zero() {
            return R::zero(work);
        }
        f(&x, &one_plus, &one_minus) * &w
    };

    let mut h = 0.5f64;
    let mut sum = term(0.0);
    let mut k = 1usize;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum = sum + &term(t) + &term(-t);
        k += 1;
    }
    let mut estimate = sum.clone() * h;
    let tol = R::pow2(-(prec as i64), work);
    let mut prev_diff: Option<R> = None;
    for level in 0..14 {
        h /= 2.0;
        let mut k = 1usize;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum = sum + &term(t) + &term(-t);
            k += 2;
        }
        let next = sum.clone() * h;
        let diff = (next.clone() - &estimate).abs();
        estimate = next;
        if diff <= tol.clone() * &estimate.abs() {
            break;
        }
        // Past the rounding floor the differences stop shrinking.
        if level >= 3 && prev_diff.as_ref().is_some_and(|p| diff.clone() * 4.0 >= *p) {
            break;
        }
        prev_diff = Some(diff);
    }
    estimate.with_prec(prec)
}

/// `∫_0^u (t(1-t))^(ℓ-1) dt` for `u` in `(0, 1]`, at `u.prec()`.
pub fn beta_partial<R: Real>(ell: f64, u: &R) -> R {
    let prec = u.prec();
    if u.is_zero() {
        return R::zero(prec);
    }
    let work = prec + 8;
    let u = u.with_prec(work);
    let m = R::from_f64(ell - 1.0, work);
    let one_minus_u = R::one(work) - &u;
    let v = tanh_sinh(
        |_x: &R, xp: &R, xm: &R| {
            // t = u (1 + x)/2, 1 - t = (1 - u) + u (1 - x)/2
            let t = u.clone() * xp / 2.0;
            let s = one_minus_u.clone() + &(u.clone() * xm / 2.0);
            ((t * &s).ln() * &m).exp()
        },
        work,
    );
    (v * &u / 2.0).with_prec(prec)
}
