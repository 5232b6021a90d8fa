//! The normalized profile of the non-flat branch.
//!
//! On the non-flat arc the lift is `c + P(u)/B` where `u` is the position
//! rescaled to `[0,1]`, `P(u) = ∫_0^u (t(1-t))^(ℓ-1) dt` and `B = P(1)`.
//! `P` is evaluated from precomputed coefficient tables:
//!
//! * `u <= 1/16`: `P(u) = u^ℓ Σ e_k u^k` with `e_k = (1-ℓ)_k / (k! (ℓ+k))`;
//! * `1/16 < u <= 1/2`: Taylor expansions about a ladder of centres, each
//!   used within `1/16` of its distance to the singular endpoint;
//! * `u > 1/2`: `P(u) = B - P(1-u)`.
//!
//! Tables are built once at the kernel precision. Evaluation runs at the
//! precision of its argument and only uses as many terms as that precision
//! needs, so cheap low-precision passes share the same kernel.

use crate::error::{Error, Result};
use crate::real::Real;

/// Taylor expansions are used while `|h| <= u0 / 16` (4 bits per term).
const CENTER_RATIO: f64 = 1.0 / 16.0;
/// Below this the endpoint power series is used.
const SERIES_SPLIT: f64 = 1.0 / 16.0;

#[derive(Debug, Clone)]
struct Center<R> {
    u0: R,
    hi: f64,
    p0: R,
    /// `d[k]` multiplies `h^(k+1)`.
    coef: Vec<R>,
}

#[derive(Debug, Clone)]
pub struct ProfileKernel<R> {
    prec: u32,
    ell: R,
    ell_f: f64,
    beta: R,
    endpoint: Vec<R>,
    centers: Vec<Center<R>>,
}

/// Extra bits for the terms counted by the truncation rule; the largest
/// binomial coefficient grows like `2^ℓ`.
fn term_margin(ell: f64) -> f64 {
    16.0 + 2.0 * ell.abs().max(1.0)
}

impl<R: Real> ProfileKernel<R> {
    pub fn new(ell: f64, prec: u32) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::param("ell", "must be a finite positive number"));
        }
        let work = (prec + 32).min(R::MAX_PREC);
        let ell_w = R::from_f64(ell, work);
        let margin = term_margin(ell);

        // Endpoint series coefficients e_k = c_k / (ℓ + k).
        let n_end = (((prec as f64) + margin) / (-SERIES_SPLIT.log2())).ceil() as usize + 2;
        let mut endpoint = Vec::with_capacity(n_end);
        let mut c = R::one(work);
        for k in 0..n_end {
            endpoint.push((c.clone() / (ell_w.clone() + k as f64)).with_prec(prec));
            // c_{k+1} = c_k (k + 1 - ℓ) / (k + 1)
            c = c * (R::from_f64((k + 1) as f64, work) - &ell_w) / ((k + 1) as f64);
        }

        let half = R::from_f64(0.5, work);
        let beta_w = direct_series(&ell_w, &half) * 2.0;

        let n_tay = (((prec as f64) + margin) / (-CENTER_RATIO.log2())).ceil() as usize + 2;
        let mut centers = Vec::new();
        let mut lo = SERIES_SPLIT;
        while lo < 0.5 {
            let u0f = lo / (1.0 - CENTER_RATIO);
            let hi = u0f * (1.0 + CENTER_RATIO);
            let u0 = R::from_f64(u0f, work);
            let p0 = direct_series(&ell_w, &u0);
            let coef = taylor_coefficients(&ell_w, &u0, n_tay)
                .into_iter()
                .map(|v| v.with_prec(prec))
                .collect();
            centers.push(Center {
                u0: u0.with_prec(prec),
                hi,
                p0: p0.with_prec(prec),
                coef,
            });
            lo = hi;
        }

        Ok(ProfileKernel {
            prec,
            ell: ell_w.with_prec(prec),
            ell_f: ell,
            beta: beta_w.with_prec(prec),
            endpoint,
            centers,
        })
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn ell(&self) -> f64 {
        self.ell_f
    }

    /// `B(ℓ, ℓ)`.
    pub fn beta(&self) -> &R {
        &self.beta
    }

    /// `P(u)` for `u` in `[0,1]`, at `u.prec()`.
    pub fn partial(&self, u: &R) -> R {
        let p = u.prec();
        if *u > 0.5 {
            let v = R::one(p) - u;
            return R::zero(p) + &self.beta - self.partial_lower(&v);
        }
        self.partial_lower(u)
    }

    /// `P(u)/B`.
    pub fn regularized(&self, u: &R) -> R {
        self.partial(u) / &self.beta
    }

    /// `(u(1-u))^(ℓ-1)`, the derivative of `P`.
    pub fn density(&self, u: &R) -> R {
        let p = u.prec();
        let q = u.clone() * &(R::one(p) - u);
        if q.is_zero() {
            return if self.ell_f > 1.0 {
                R::zero(p)
            } else if self.ell_f == 1.0 {
                R::one(p)
            } else {
                R::from_f64(f64::INFINITY, p)
            };
        }
        if self.ell_f == 1.0 {
            return R::one(p);
        }
        (q.ln() * &(self.ell.clone() - 1.0)).exp()
    }

    fn partial_lower(&self, u: &R) -> R {
        let p = u.prec();
        if u.is_zero() || u.is_sign_negative() {
            return R::zero(p);
        }
        let uf = u.to_f64();
        if uf <= SERIES_SPLIT {
            let lu = u.ln();
            let bits_per_term = -lu.to_f64() / std::f64::consts::LN_2;
            let n = terms_needed(p, self.ell_f, bits_per_term, self.endpoint.len());
            let mut acc = R::zero(p) + &self.endpoint[n - 1];
            for e in self.endpoint[..n - 1].iter().rev() {
                acc = acc * u + e;
            }
            let upow = (lu * &self.ell).exp();
            return acc * &upow;
        }
        let idx = self
            .centers
            .iter()
            .position(|c| uf <= c.hi)
            .unwrap_or(self.centers.len() - 1);
        let c = &self.centers[idx];
        let h = u.clone() - &c.u0;
        let ratio = (h.to_f64().abs() / c.u0.to_f64()).max(f64::MIN_POSITIVE);
        let bits_per_term = -ratio.log2();
        let n = terms_needed(p, self.ell_f, bits_per_term, c.coef.len());
        let mut acc = R::zero(p) + &c.coef[n - 1];
        for d in c.coef[..n - 1].iter().rev() {
            acc = acc * &h + d;
        }
        acc * &h + &c.p0
    }

    /// Solves `P(u)/B = y` for `y` in `[0,1]`; result at `y.prec()`.
    pub fn inverse(&self, y: &R) -> R {
        let p = y.prec();
        if *y <= 0.0 {
            return R::zero(p);
        }
        if *y >= 1.0 {
            return R::one(p);
        }
        if *y > 0.5 {
            let v = R::one(p) - y;
            return R::one(p) - self.inverse_lower(&v);
        }
        self.inverse_lower(y)
    }

    fn inverse_lower(&self, y: &R) -> R {
        let p = y.prec();
        let target_full = y.clone() * &self.beta;
        // Leading-order guess P(u) ~ u^ℓ / ℓ.
        let start = 64.min(p);
        let t0 = target_full.with_prec(start);
        let mut u = if t0.is_zero() {
            R::zero(start)
        } else {
            ((t0.clone() * self.ell_f).ln() / self.ell_f).exp()
        };
        if !(u < 0.5) {
            u = R::from_f64(0.25, start);
        }
        let mut level = start;
        loop {
            u = u.with_prec(level);
            let target = target_full.with_prec(level);
            u = self.newton(&u, &target, level == start);
            if level >= p {
                break;
            }
            level = (level * 2).min(p);
        }
        u
    }

    fn newton(&self, start: &R, target: &R, first: bool) -> R {
        let p = target.prec();
        let mut lo = R::zero(p);
        let mut hi = R::from_f64(0.5, p);
        let mut u = start.clone();
        let max_iter = if first { 200 } else { 12 };
        for _ in 0..max_iter {
            let f = self.partial_lower(&u) - target;
            if f.is_zero() {
                return u;
            }
            if f.is_sign_negative() {
                lo = u.clone();
            } else {
                hi = u.clone();
            }
            let d = self.density(&u);
            let mut next = if d.is_zero() || !d.is_finite() {
                (lo.clone() + &hi) / 2.0
            } else {
                u.clone() - f / &d
            };
            if !(next >= lo && next <= hi) {
                next = (lo.clone() + &hi) / 2.0;
            }
            let step = (next.clone() - &u).abs();
            u = next;
            // Converged to the working precision, relative to u.
            let scale = u.clone().abs().max_of(R::pow2(-(p as i64) * 2, p));
            if step <= scale * &R::pow2(6 - p as i64, p) {
                break;
            }
            if (hi.clone() - &lo) <= R::pow2(-(p as i64) * 2, p) {
                break;
            }
        }
        u
    }
}

fn terms_needed(prec: u32, ell: f64, bits_per_term: f64, available: usize) -> usize {
    let want = (((prec as f64) + term_margin(ell)) / bits_per_term.max(1e-3)).ceil();
    (want.max(1.0) as usize + 1).min(available).max(1)
}

/// `P(u) = u^ℓ Σ c_k u^k/(ℓ+k)` summed to the precision of `u`; for
/// `u <= 1/2` it converges at least one bit per term.
pub(crate) fn direct_series<R: Real>(ell: &R, u: &R) -> R {
    let p = u.prec();
    if u.is_zero() {
        return R::zero(p);
    }
    let eps = R::pow2(-(p as i64) - 8, p);
    let mut t = R::one(p);
    let mut sum = R::zero(p);
    let mut k = 0usize;
    loop {
        let term = t.clone() / &(ell.clone() + k as f64).with_prec(p);
        sum = sum + &term;
        if t.is_zero() || (k > 4 && term.abs() <= eps.clone() * &sum.abs()) {
            break;
        }
        // t_{k+1} = t_k u (k + 1 - ℓ)/(k + 1)
        t = t * u * &(R::from_f64((k + 1) as f64, p) - ell) / ((k + 1) as f64);
        k += 1;
        if k > 64 * p as usize {
            break;
        }
    }
    sum * &(u.ln() * ell).exp()
}

/// Coefficients `d_k` with `P(u0 + h) - P(u0) = Σ_{k>=1} d_k h^k`, from the
/// recurrence implied by `t(1-t) w' = m(1-2t) w` for `w = (t(1-t))^m`.
fn taylor_coefficients<R: Real>(ell: &R, u0: &R, n: usize) -> Vec<R> {
    let p = u0.prec();
    let m = ell.clone() - 1.0;
    let q0 = u0.clone() * &(R::one(p) - u0);
    let q1 = R::one(p) - u0.clone() * 2.0;
    let w0 = (q0.ln() * &m).exp();
    let mut w_prev = R::zero(p);
    let mut w = w0;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        out.push(w.clone() / ((k + 1) as f64));
        let kf = k as f64;
        // w_{k+1} = [(m - k) q1 w_k + (k - 1 - 2m) w_{k-1}] / (q0 (k+1))
        let a = (m.clone() - kf) * &q1 * &w;
        let b = (R::from_f64(kf - 1.0, p) - m.clone() * 2.0) * &w_prev;
        let next = (a + b) / &(q0.clone() * ((k + 1) as f64));
        w_prev = std::mem::replace(&mut w, next);
    }
    out
}
