//! Continued fractions, convergents and rotation combinatorics.
//!
//! Convergent denominators `q_n` are the closest-return times of the rigid
//! rotation and act as the clock for everything else in the crate. All
//! integer work here is exact; only the rotation-orbit scans touch the
//! working-precision value of the rotation number.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfSource {
    ExactRational,
    RealApproximation,
    Prescribed,
}

/// Partial quotients `a_1, a_2, ...` of `x = 1/(a_1 + 1/(a_2 + ...))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    partial_quotients: Vec<u64>,
    source: CfSource,
    /// The expansion ended because the input is rational.
    terminated: bool,
}

impl ContinuedFraction {
    /// Quotients given directly (e.g. to build a rotation number of a chosen
    /// type).
    pub fn prescribed(quotients: Vec<u64>) -> Result<Self> {
        if quotients.is_empty() {
            return Err(Error::param("quotients", "empty"));
        }
        if quotients.contains(&0) {
            return Err(Error::param("quotients", "partial quotients must be >= 1"));
        }
        Ok(ContinuedFraction {
            partial_quotients: quotients,
            source: CfSource::Prescribed,
            terminated: false,
        })
    }

    /// Euclid's algorithm on `p/q` with `0 < p < q`.
    pub fn from_rational(p: &BigUint, q: &BigUint) -> Result<Self> {
        if p.is_zero() || p >= q {
            return Err(Error::param("x", "rational must lie in (0,1)"));
        }
        let mut quotients = Vec::new();
        let (mut num, mut den) = (q.clone(), p.clone());
        while !den.is_zero() {
            let a = &num / &den;
            let r = &num % &den;
            quotients.push(a.to_u64().ok_or_else(|| Error::param("x", "quotient overflows u64"))?);
            num = den;
            den = r;
        }
        Ok(ContinuedFraction {
            partial_quotients: quotients,
            source: CfSource::ExactRational,
            terminated: true,
        })
    }

    /// Expands a real `x` in `(0,1)` to `depth` quotients.
    ///
    /// The expansion is carried out at `x.prec()` and again at twice that
    /// precision; only quotients produced identically by both runs are
    /// accepted. An input that is rational to within the working noise
    /// terminates early.
    pub fn expand<R: Real>(x: &R, depth: usize) -> Result<Self> {
        // The padded copy carries no new digits, so it keeps the input's
        // noise floor and only shrinks the rounding of the recurrence.
        Self::expand_runs(x, x.prec(), &x.with_prec(x.prec().saturating_mul(2).min(R::MAX_PREC)), x.prec(), depth)
    }

    /// Like [`expand`](Self::expand) but recomputes the input itself at the
    /// doubled precision through `value_at`.
    pub fn expand_with<R: Real>(value_at: impl Fn(u32) -> R, prec: u32, depth: usize) -> Result<Self> {
        let hi_prec = prec.saturating_mul(2).min(R::MAX_PREC);
        Self::expand_runs(&value_at(prec), prec, &value_at(hi_prec), hi_prec, depth)
    }

    fn expand_runs<R: Real>(x: &R, x_bits: u32, hi_x: &R, hi_bits: u32, depth: usize) -> Result<Self> {
        let prec = x.prec();
        if !(*x > 0.0 && *x < 1.0) {
            return Err(Error::param("x", "must lie in (0,1)"));
        }
        let lo = expand_once(x, x_bits, depth);
        let hi = expand_once(hi_x, hi_bits, depth);
        let common = lo
            .quotients
            .iter()
            .zip(&hi.quotients)
            .take_while(|(a, b)| a == b)
            .count();
        if lo.terminated && hi.terminated && lo.quotients == hi.quotients {
            return Ok(ContinuedFraction {
                partial_quotients: lo.quotients,
                source: CfSource::RealApproximation,
                terminated: true,
            });
        }
        if common >= depth {
            let mut q = lo.quotients;
            q.truncate(depth);
            return Ok(ContinuedFraction {
                partial_quotients: q,
                source: CfSource::RealApproximation,
                terminated: false,
            });
        }
        Err(Error::PrecisionInsufficient {
            prec,
            detail: format!("continued fraction digits stable only up to depth {common} of {depth}"),
        })
    }

    pub fn quotients(&self) -> &[u64] {
        &self.partial_quotients
    }

    /// `a_i` with the 1-based index used in the recurrence.
    pub fn a(&self, i: usize) -> Option<u64> {
        i.checked_sub(1).and_then(|k| self.partial_quotients.get(k).copied())
    }

    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    pub fn source(&self) -> CfSource {
        self.source
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn is_bounded_by(&self, m: u64) -> bool {
        self.partial_quotients.iter().all(|&a| a < m)
    }

    /// Exact value of the finite fraction.
    pub fn evaluate(&self) -> BigRational {
        let t = convergents(self);
        let last = t.rows.last().expect("non-empty table");
        BigRational::new(BigInt::from(last.p.clone()), BigInt::from(last.q.clone()))
    }

    /// Appends copies of `tail` until the depth reaches `depth`.
    pub fn extended(&self, tail: u64, depth: usize) -> Self {
        let mut q = self.partial_quotients.clone();
        while q.len() < depth {
            q.push(tail);
        }
        ContinuedFraction {
            partial_quotients: q,
            source: self.source,
            terminated: false,
        }
    }
}

struct Expansion {
    quotients: Vec<u64>,
    terminated: bool,
}

/// `accurate_bits`: how many bits of `x` are meaningful, which may be fewer
/// than its precision.
fn expand_once<R: Real>(x: &R, accurate_bits: u32, depth: usize) -> Expansion {
    let prec = x.prec();
    let mut y = x.clone();
    // log2 of an absolute error bound on y.
    let mut noise = -(accurate_bits.min(prec) as f64) + 1.0;
    let mut quotients = Vec::with_capacity(depth);
    while quotients.len() < depth {
        let yf = y.to_f64();
        let ly = if yf > 1e-300 {
            yf.log2()
        } else {
            y.exponent().map(|e| e as f64 - 1.0).unwrap_or(f64::NEG_INFINITY)
        };
        let r = R::one(prec) / &y;
        // d(1/y) = dy / y^2, plus rounding of the division
        let noise_r = noise - 2.0 * ly + 0.5;
        // A quotient is only trusted with 24 bits of slack in 1/y.
        if noise_r > -24.0 {
            break;
        }
        let a = r.floor();
        let frac = r.clone() - &a;
        let tol = R::pow2((noise_r + 4.0).ceil() as i64, prec);
        let near_zero = frac < tol;
        let near_one = (R::one(prec) - &frac) < tol;
        let Some(a_int) = a.to_f64().to_u64().filter(|v| *v < (1u64 << 53)) else {
            break;
        };
        if near_zero || near_one {
            quotients.push(if near_one { a_int + 1 } else { a_int });
            return Expansion {
                quotients,
                terminated: true,
            };
        }
        quotients.push(a_int);
        y = frac;
        noise = noise_r + 0.5;
    }
    Expansion {
        quotients,
        terminated: false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Convergent {
    pub n: usize,
    pub p: BigUint,
    pub q: BigUint,
}

/// Rows `(n, p_n, q_n)` for `n = 0..=depth`, with `p_0/q_0 = 0/1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConvergentTable {
    pub rows: Vec<Convergent>,
}

pub fn convergents(cf: &ContinuedFraction) -> ConvergentTable {
    let mut rows = Vec::with_capacity(cf.depth() + 1);
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    rows.push(Convergent {
        n: 0,
        p: p.clone(),
        q: q.clone(),
    });
    for (k, &a) in cf.quotients().iter().enumerate() {
        let p_next = &p * a + &p_prev;
        let q_next = &q * a + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        rows.push(Convergent {
            n: k + 1,
            p: p.clone(),
            q: q.clone(),
        });
    }
    ConvergentTable { rows }
}

impl ConvergentTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn q(&self, n: usize) -> Option<&BigUint> {
        self.rows.get(n).map(|r| &r.q)
    }

    pub fn p(&self, n: usize) -> Option<&BigUint> {
        self.rows.get(n).map(|r| &r.p)
    }

    pub fn q_u64(&self, n: usize) -> Option<u64> {
        self.q(n).and_then(|q| q.to_u64())
    }

    pub fn p_u64(&self, n: usize) -> Option<u64> {
        self.p(n).and_then(|p| p.to_u64())
    }

    /// Natural log of `q_n`, valid far beyond `f64` range.
    pub fn ln_q(&self, n: usize) -> Option<f64> {
        self.q(n).map(ln_biguint)
    }

    /// Largest `n` with `q_n <= bound`.
    pub fn last_index_le(&self, bound: u64) -> Option<usize> {
        let b = BigUint::from(bound);
        self.rows.iter().rposition(|r| r.q <= b)
    }

    /// Checks `q_{n+1} = a_{n+1} q_n + q_{n-1}` (and the same for `p`) as
    /// integer identities, plus `q_0 = 1`, `q_1 = a_1`.
    pub fn satisfies_recurrence(&self, cf: &ContinuedFraction) -> bool {
        if self.rows.len() != cf.depth() + 1 || self.rows[0].q != BigUint::one() {
            return false;
        }
        if self.rows.len() > 1 && self.rows[1].q != BigUint::from(cf.quotients()[0]) {
            return false;
        }
        (1..cf.depth()).all(|n| {
            let a = cf.quotients()[n];
            let (prev, cur, next) = (&self.rows[n - 1], &self.rows[n], &self.rows[n + 1]);
            next.q == &cur.q * a + &prev.q && next.p == &cur.p * a + &prev.p
        })
    }
}

pub fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (v >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// A rotation number together with its continued fraction.
#[derive(Debug, Clone)]
pub struct RotationTarget<R: Real> {
    pub value: R,
    pub cf: ContinuedFraction,
    pub bounded_bound: Option<u64>,
}

impl<R: Real> RotationTarget<R> {
    /// `(sqrt 5 - 1)/2`, all quotients 1.
    pub fn golden_mean(prec: u32, depth: usize) -> Self {
        let work = prec + 16;
        let v = (R::from_f64(5.0, work).sqrt() - 1.0) / 2.0;
        RotationTarget {
            value: v.with_prec(prec),
            cf: ContinuedFraction::prescribed(vec![1; depth.max(1)]).expect("non-empty"),
            bounded_bound: Some(2),
        }
    }

    /// `sqrt 2 - 1`, all quotients 2.
    pub fn silver_mean(prec: u32, depth: usize) -> Self {
        let work = prec + 16;
        let v = R::from_f64(2.0, work).sqrt() - 1.0;
        RotationTarget {
            value: v.with_prec(prec),
            cf: ContinuedFraction::prescribed(vec![2; depth.max(1)]).expect("non-empty"),
            bounded_bound: Some(3),
        }
    }

    /// The irrational whose expansion starts with `quotients` and continues
    /// with all ones; `cf` is extended with ones up to `depth`.
    pub fn from_quotients(quotients: &[u64], prec: u32, depth: usize) -> Result<Self> {
        let head = ContinuedFraction::prescribed(quotients.to_vec())?;
        let t = convergents(&head);
        let d = head.depth();
        let work = prec + 16;
        // Tail [1,1,1,...] has value x = (sqrt 5 - 1)/2 and the full number is
        // (p_d + x p_{d-1}) / (q_d + x q_{d-1}).
        let x = (R::from_f64(5.0, work).sqrt() - 1.0) / 2.0;
        let big = |v: &BigUint| R::from_ratio(&BigInt::from(v.clone()), &BigInt::one(), work);
        let num = big(&t.rows[d].p) + x.clone() * &big(&t.rows[d - 1].p);
        let den = big(&t.rows[d].q) + x * &big(&t.rows[d - 1].q);
        let bound = quotients.iter().copied().max().map(|m| m.max(1) + 1);
        Ok(RotationTarget {
            value: (num / den).with_prec(prec),
            cf: head.extended(1, depth.max(d)),
            bounded_bound: bound,
        })
    }

    /// Expands `value`; rejects values that turn out rational.
    pub fn from_value(value: R, depth: usize) -> Result<Self> {
        let cf = ContinuedFraction::expand(&value, depth)?;
        Ok(RotationTarget {
            value,
            cf,
            bounded_bound: None,
        })
    }

    /// An exact rational `p/q`, kept so that consumers can reject it.
    pub fn rational(p: u64, q: u64, prec: u32) -> Result<Self> {
        let cf = ContinuedFraction::from_rational(&BigUint::from(p), &BigUint::from(q))?;
        Ok(RotationTarget {
            value: R::from_ratio(&BigInt::from(p), &BigInt::from(q), prec),
            cf,
            bounded_bound: None,
        })
    }

    pub fn with_bound(mut self, m: u64) -> Self {
        self.bounded_bound = Some(m);
        self
    }

    pub fn is_rational(&self) -> bool {
        self.cf.source() == CfSource::ExactRational || self.cf.terminated()
    }

    pub fn convergents(&self) -> ConvergentTable {
        convergents(&self.cf)
    }

    pub fn prec(&self) -> u32 {
        self.value.prec()
    }

    /// Checks the bounded-type bound and that `value` lies strictly between
    /// consecutive convergents.
    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.bounded_bound {
            if !self.cf.is_bounded_by(m) {
                return Err(Error::InvalidTarget(format!("a quotient is >= bound {m}")));
            }
        }
        if self.is_rational() {
            return Ok(());
        }
        let t = self.convergents();
        let prec = self.prec();
        let frac = |c: &Convergent| R::from_ratio(&BigInt::from(c.p.clone()), &BigInt::from(c.q.clone()), prec);
        for w in t.rows.windows(2) {
            let (x, y) = (frac(&w[0]), frac(&w[1]));
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            if !(self.value > lo && self.value < hi) {
                return Err(Error::InvalidTarget(format!(
                    "value not strictly between convergents {} and {}",
                    w[0].n, w[1].n
                )));
            }
        }
        Ok(())
    }

    /// `i * rho mod 1` in `[0,1)`.
    pub fn orbit_point(&self, i: i64) -> R {
        let v = self.value.clone() * (i as f64);
        v.clone() - &v.floor()
    }
}

fn circle_norm<R: Real>(x: &R) -> R {
    // x in [0,1)
    let other = R::one(x.prec()) - x;
    if *x < other {
        x.clone()
    } else {
        other
    }
}

/// Guard band used by the rotation scans: `2^(16 - prec)`.
fn scan_guard<R: Real>(prec: u32) -> R {
    R::pow2(16 - prec as i64, prec)
}

/// All `q <= n_max` at which `||q rho||` attains a new strict minimum.
pub fn closest_returns<R: Real>(rho: &RotationTarget<R>, n_max: u64) -> Result<Vec<u64>> {
    if n_max < 1 {
        return Err(Error::param("N", "must be >= 1"));
    }
    if rho.is_rational() {
        return Err(Error::InvalidTarget("closest returns need an irrational rotation".into()));
    }
    let prec = rho.prec();
    let guard = scan_guard::<R>(prec);
    let mut best = R::one(prec);
    let mut out = Vec::new();
    for q in 1..=n_max {
        let d = circle_norm(&rho.orbit_point(q as i64));
        let diff = d.clone() - &best;
        if diff.abs() <= guard {
            return Err(Error::PrecisionInsufficient {
                prec,
                detail: format!("||{q} rho|| ties the running minimum within the guard"),
            });
        }
        if d < best {
            best = d;
            out.push(q);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GapCount {
    /// Number of points `-i rho`, `1 <= i <= N`, in the open gap between
    /// `q_l rho` and `0`.
    pub n_l: u64,
    /// `q_{l+1} * n_l <= N`.
    pub bound_ok: bool,
}

pub fn count_in_gap<R: Real>(rho: &RotationTarget<R>, l: usize, n_max: u64) -> Result<GapCount> {
    let t = rho.convergents();
    let (Some(q_l), Some(q_next)) = (t.q_u64(l), t.q_u64(l + 1)) else {
        return Err(Error::param("l", "needs q_l and q_{l+1} within the expansion depth"));
    };
    if q_l > n_max {
        return Err(Error::param("l", format!("q_l = {q_l} exceeds N = {n_max}")));
    }
    let prec = rho.prec();
    let guard = scan_guard::<R>(prec);
    let end = rho.orbit_point(q_l as i64);
    let one = R::one(prec);
    // open arc (0, end) if end < 1/2, else (end, 1)
    let right_side = end < 0.5;
    let (lo, hi) = if right_side { (R::zero(prec), end) } else { (end, one.clone()) };
    let mut n_l = 0u64;
    for i in 1..=n_max {
        let y = rho.orbit_point(-(i as i64));
        let y = if y.is_zero() { one.clone() } else { y };
        let near = (y.clone() - &lo).abs() <= guard || (y.clone() - &hi).abs() <= guard;
        if near {
            return Err(Error::PrecisionInsufficient {
                prec,
                detail: format!("orbit point -{i} lands on a gap endpoint"),
            });
        }
        if y > lo && y < hi {
            n_l += 1;
        }
    }
    Ok(GapCount {
        n_l,
        bound_ok: u128::from(q_next) * u128::from(n_l) <= u128::from(n_max),
    })
}
