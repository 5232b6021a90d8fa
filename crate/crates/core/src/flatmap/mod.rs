//! The flat-interval circle map family and its lift.
//!
//! The chart puts the flat interval at `[a, b] = [-l/2, l/2]` for flat
//! length `l`. The lift is constant `c` on `[a, b]` and on the non-flat arc
//! `[b, a + 1]` it is `c + P(u)/B` with `u = (x - b)/(1 - l)`, see
//! [`kernel`]. The critical value `c` plays the role of the discontinuity
//! point of the inverse branch `g`; distances "to the critical value" are
//! circle distances to `c`.

pub mod geometry;
pub mod kernel;
pub mod orbit;
pub mod tune;

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::real::Real;

pub use self::geometry::{preimage_geometry, ForwardRow, GapRow, PreimageGeometry, PreimageInterval};
pub use self::kernel::ProfileKernel;
pub use self::orbit::{orbit_combinatorics, OrbitCombinatorics};
pub use self::tune::{tune, Side, TuneOptions, Tuned};

/// Smallest precision accepted for parameter sets.
pub const MIN_PRECISION: u32 = 64;

/// Parameters of one member of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatMapParams<R> {
    pub ell: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub a: R,
    pub b: R,
    pub c: R,
    pub precision_bits: u32,
}

/// On-disk form of [`FlatMapParams`]. Chart points are decimal strings so
/// they survive a round trip at any precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsJson {
    pub ell: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub a: String,
    pub b: String,
    pub c: String,
    pub precision_bits: u32,
}

impl<R: Real> FlatMapParams<R> {
    /// `lambda1 = ell`, `lambda2 = -1`.
    pub fn new(ell: f64, flat_length: f64, c: R, precision_bits: u32) -> Result<Self> {
        Self::with_eigenvalues(ell, -1.0, flat_length, c, precision_bits)
    }

    pub fn with_eigenvalues(lambda1: f64, lambda2: f64, flat_length: f64, c: R, precision_bits: u32) -> Result<Self> {
        if !(lambda2 < 0.0) {
            return Err(Error::param("lambda2", "must be negative"));
        }
        let ell = lambda1 / -lambda2;
        if !(flat_length > 0.0 && flat_length < 1.0) {
            return Err(Error::param("flat_length", "must lie in (0,1)"));
        }
        let p = precision_bits;
        let params = FlatMapParams {
            ell,
            lambda1,
            lambda2,
            a: R::from_f64(-flat_length / 2.0, p),
            b: R::from_f64(flat_length / 2.0, p),
            c: c.with_prec(p),
            precision_bits: p,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(Error::param("ell", "must be a finite positive number"));
        }
        if !(self.lambda1 > 0.0) {
            return Err(Error::param("lambda1", "must be positive"));
        }
        if !(self.lambda2 < 0.0) {
            return Err(Error::param("lambda2", "must be negative"));
        }
        let ratio = self.lambda1 / -self.lambda2;
        if (ratio - self.ell).abs() > 1e-12 * self.ell.max(1.0) {
            return Err(Error::param("ell", "must equal lambda1 / -lambda2"));
        }
        if self.precision_bits < MIN_PRECISION {
            return Err(Error::param("precision_bits", format!("must be >= {MIN_PRECISION}")));
        }
        if self.precision_bits > R::MAX_PREC && R::MAX_PREC >= MIN_PRECISION {
            return Err(Error::param("precision_bits", format!("backend supports at most {}", R::MAX_PREC)));
        }
        let len = self.b.clone() - &self.a;
        if !(len > 0.0 && len < 1.0) {
            return Err(Error::param("b", "flat interval length b - a must lie in (0,1)"));
        }
        if !(self.a >= -0.5 && self.b <= 0.5) {
            return Err(Error::param("a", "flat interval must sit inside the chart [-1/2, 1/2]"));
        }
        if !self.c.is_finite() {
            return Err(Error::param("c", "must be finite"));
        }
        Ok(())
    }

    pub fn flat_length(&self) -> R {
        self.b.clone() - &self.a
    }

    pub fn to_json(&self) -> ParamsJson {
        ParamsJson {
            ell: self.ell,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            a: self.a.to_decimal(),
            b: self.b.to_decimal(),
            c: self.c.to_decimal(),
            precision_bits: self.precision_bits,
        }
    }

    pub fn from_json(j: &ParamsJson) -> Result<Self> {
        let p = j.precision_bits;
        let parse = |name: &'static str, s: &str| R::parse(s, p).ok_or_else(|| Error::param(name, format!("`{s}` is not a number")));
        let params = FlatMapParams {
            ell: j.ell,
            lambda1: j.lambda1,
            lambda2: j.lambda2,
            a: parse("a", &j.a)?,
            b: parse("b", &j.b)?,
            c: parse("c", &j.c)?,
            precision_bits: p,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Sign of `F^q(x) - x - p` over the sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RationalComparison {
    /// `ρ > p/q`.
    Above,
    /// `ρ < p/q`.
    Below,
    /// A sign change was seen, so `F^q - id - p` has a zero and `ρ = p/q`.
    Equal,
}

#[derive(Debug, Clone)]
pub struct RotationEstimate<R> {
    pub estimate: R,
    pub error_bound: f64,
    pub n_iter: u64,
}

/// Lift of a flat-interval map. Cheap to clone; the coefficient tables are
/// shared.
#[derive(Debug, Clone)]
pub struct Lift<R: Real> {
    params: FlatMapParams<R>,
    kernel: Arc<ProfileKernel<R>>,
    span: R,
    prec: u32,
}

/// Builds the map with flat interval `[-l/2, l/2]` and critical value `c`.
pub fn build_map<R: Real>(ell: f64, flat_length: f64, c: R, precision_bits: u32) -> Result<Lift<R>> {
    Lift::new(FlatMapParams::new(ell, flat_length, c, precision_bits)?)
}

impl<R: Real> Lift<R> {
    pub fn new(params: FlatMapParams<R>) -> Result<Self> {
        params.validate()?;
        let prec = Self::backend_prec(params.precision_bits);
        let kernel = Arc::new(ProfileKernel::new(params.ell, prec)?);
        Ok(Self::assemble(params, kernel))
    }

    /// Reuses an already built kernel (same `ell`, same precision).
    pub fn with_kernel(params: FlatMapParams<R>, kernel: Arc<ProfileKernel<R>>) -> Result<Self> {
        params.validate()?;
        if kernel.ell() != params.ell || kernel.prec() != Self::backend_prec(params.precision_bits) {
            return Err(Error::Invariant("kernel does not match the parameter set".into()));
        }
        Ok(Self::assemble(params, kernel))
    }

    fn backend_prec(p: u32) -> u32 {
        p.min(R::MAX_PREC)
    }

    fn assemble(params: FlatMapParams<R>, kernel: Arc<ProfileKernel<R>>) -> Self {
        let prec = Self::backend_prec(params.precision_bits);
        let span = R::one(prec) - &params.flat_length();
        Lift {
            params,
            kernel,
            span,
            prec,
        }
    }

    /// Same map, new critical value.
    pub fn with_offset(&self, c: R) -> Self {
        let mut params = self.params.clone();
        params.c = c.with_prec(self.prec);
        Self::assemble(params, self.kernel.clone())
    }

    /// The same map (identical `a`, `b`, `c`) evaluated at another precision.
    pub fn at_precision(&self, precision_bits: u32) -> Result<Self> {
        if precision_bits == self.params.precision_bits {
            return Ok(self.clone());
        }
        let p = precision_bits;
        let params = FlatMapParams {
            a: self.params.a.with_prec(p),
            b: self.params.b.with_prec(p),
            c: self.params.c.with_prec(p),
            precision_bits: p,
            ..self.params.clone()
        };
        Self::new(params)
    }

    pub fn params(&self) -> &FlatMapParams<R> {
        &self.params
    }

    pub fn kernel(&self) -> &Arc<ProfileKernel<R>> {
        &self.kernel
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn ell(&self) -> f64 {
        self.params.ell
    }

    pub fn a(&self) -> &R {
        &self.params.a
    }

    pub fn b(&self) -> &R {
        &self.params.b
    }

    pub fn c(&self) -> &R {
        &self.params.c
    }

    /// Normalization constant `Z = ∫_b^{a+1} w = (1 - l)^(2ℓ-1) B(ℓ,ℓ)`.
    pub fn normalization(&self) -> R {
        let l = &self.span;
        (l.ln() * (2.0 * self.params.ell - 1.0)).exp() * self.kernel.beta()
    }

    fn lift_x(&self, x: &R) -> R {
        x.with_prec(self.prec)
    }

    /// `F(x)`.
    pub fn eval(&self, x: &R) -> R {
        let x = self.lift_x(x);
        let k = (x.clone() - &self.params.a).floor();
        let y = x - &k;
        self.eval_fundamental(&y) + &k
    }

    /// `F(y)` for `y` in `[a, a + 1)`.
    fn eval_fundamental(&self, y: &R) -> R {
        if *y <= self.params.b {
            return self.params.c.clone();
        }
        let u = ((y.clone() - &self.params.b) / &self.span).min_of(R::one(self.prec));
        self.params.c.clone() + &self.kernel.regularized(&u)
    }

    /// One step on the fundamental domain: for `y` in `[a, a+1)` returns
    /// `(y', k)` with `F(y) = y' + k` and `y'` in `[a, a+1)`.
    pub fn step(&self, y: &R) -> (R, i64) {
        let v = self.eval_fundamental(y);
        let k = (v.clone() - &self.params.a).floor_i64();
        (v - k as f64, k)
    }

    /// Reduces `x` into `[a, a+1)`, returning the point and the integer
    /// shift removed.
    pub fn reduce(&self, x: &R) -> (R, i64) {
        let x = self.lift_x(x);
        let k = (x.clone() - &self.params.a).floor_i64();
        (x - k as f64, k)
    }

    /// `F` through an independent route: tanh-sinh quadrature of the weight.
    pub fn eval_quadrature(&self, x: &R) -> R {
        let x = self.lift_x(x);
        let k = (x.clone() - &self.params.a).floor();
        let y = x - &k;
        if y <= self.params.b {
            return self.params.c.clone() + &k;
        }
        let u = ((y - &self.params.b) / &self.span).min_of(R::one(self.prec));
        let ell = self.params.ell;
        let part = quad::beta_partial(ell, &u);
        let whole = quad::beta_partial(ell, &R::one(self.prec));
        self.params.c.clone() + &(part / &whole) + &k
    }

    /// Position of `z` relative to the critical value, in `[0, 1)`.
    pub fn offset_from_crit(&self, z: &R) -> R {
        let d = z.with_prec(self.prec) - &self.params.c;
        d.clone() - &d.floor()
    }

    /// Signed circle offset of `z` from `c`, in `[-1/2, 1/2)`.
    pub fn signed_offset(&self, z: &R) -> R {
        let y = self.offset_from_crit(z);
        if y >= 0.5 {
            y - 1.0
        } else {
            y
        }
    }

    /// Circle distance from `z` to the critical value.
    pub fn dist_to_crit(&self, z: &R) -> R {
        self.signed_offset(z).abs()
    }

    /// The inverse branch `g = (f restricted off U)^(-1)`, valued in
    /// `[b, a+1]`.
    pub fn eval_inverse_g(&self, z: &R) -> Result<R> {
        let y = self.offset_from_crit(z);
        if y.is_zero() {
            return Err(Error::Discontinuity {
                left: self.g_left_limit().to_decimal(),
                right: self.g_right_limit().to_decimal(),
            });
        }
        Ok(self.g_from_offset(&y))
    }

    /// `g` for a point given by its offset `y` in `(0,1)` from `c`.
    pub(crate) fn g_from_offset(&self, y: &R) -> R {
        let u = self.kernel.inverse(y);
        self.params.b.clone() + &(u * &self.span)
    }

    /// `g(c-) = a`.
    pub fn g_left_limit(&self) -> R {
        self.params.a.clone()
    }

    /// `g(c+) = b`.
    pub fn g_right_limit(&self) -> R {
        self.params.b.clone()
    }

    /// `(F^n(b) - b)/n` with the a-priori bound `1/n`.
    pub fn rotation_number(&self, n_iter: u64) -> Result<RotationEstimate<R>> {
        if n_iter < 1 {
            return Err(Error::param("n_iter", "must be >= 1"));
        }
        let x0 = self.params.b.clone();
        let mut y = x0.clone();
        let mut carry: i64 = 0;
        for _ in 0..n_iter {
            let (next, k) = self.step(&y);
            y = next;
            carry += k;
        }
        let total = (y - &x0) + carry as f64;
        Ok(RotationEstimate {
            estimate: total / n_iter as f64,
            error_bound: 1.0 / n_iter as f64,
            n_iter,
        })
    }

    /// `F^q(x) - x - p` for `x` in `[a, a+1)`.
    pub fn displacement(&self, x: &R, p: i64, q: u64) -> R {
        let mut y = x.with_prec(self.prec);
        let mut carry: i64 = 0;
        for _ in 0..q {
            let (next, k) = self.step(&y);
            y = next;
            carry += k;
        }
        (y - x) + (carry - p) as f64
    }

    /// Compares `ρ` with `p/q` from the signs of `F^q(x) - x - p` on a
    /// 1024-point grid plus the flat endpoints. Monotonicity of `F^q` makes
    /// this reliable except when a sign change hides between grid points.
    pub fn compare_rational(&self, p: i64, q: u64) -> Result<RationalComparison> {
        if q == 0 {
            return Err(Error::param("q", "must be >= 1"));
        }
        let mut xs: Vec<R> = (0..1024)
            .map(|j| self.params.a.clone() + j as f64 / 1024.0)
            .collect();
        xs.push(self.params.a.clone());
        xs.push(self.params.b.clone());
        let (mut pos, mut neg) = (false, false);
        for x in &xs {
            let d = self.displacement(x, p, q);
            match d.partial_cmp(&0.0) {
                Some(Ordering::Greater) => pos = true,
                Some(Ordering::Less) => neg = true,
                _ => return Ok(RationalComparison::Equal),
            }
            if pos && neg {
                return Ok(RationalComparison::Equal);
            }
        }
        Ok(if pos {
            RationalComparison::Above
        } else {
            RationalComparison::Below
        })
    }

    /// `2^(32 - prec)`, the smallest distance trusted at this precision.
    pub fn guard(&self) -> R {
        R::pow2(32 - self.prec as i64, self.prec)
    }

    /// `PrecisionExhausted` when `d` is below the guard.
    pub fn check_guard(&self, d: &R) -> Result<()> {
        if *d <= self.guard() {
            let log2 = d.exponent().map(|e| e as f64 - 1.0).unwrap_or(f64::NEG_INFINITY);
            return Err(Error::PrecisionExhausted {
                prec: self.prec,
                log2_dist: log2,
            });
        }
        Ok(())
    }
}

/// Runs `f` at `start` bits, doubling the precision whenever it fails with an
/// error that more precision cures. Returns the result and the precision
/// that produced it.
pub fn with_ladder<T>(start: u32, max: u32, mut f: impl FnMut(u32) -> Result<T>) -> Result<(T, u32)> {
    let mut p = start;
    loop {
        match f(p) {
            Ok(v) => return Ok((v, p)),
            Err(e) if e.wants_more_precision() && p < max => p = (p * 2).min(max),
            Err(e) => return Err(e),
        }
    }
}
