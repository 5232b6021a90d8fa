//! Scalar abstraction over the working-precision number type.
//!
//! Every value carries its own precision and arithmetic between two values
//! rounds to the precision of the left operand. Algorithms in this crate pick
//! their working precision from their inputs, so the same code runs at
//! 53 bits (`f64`) or at thousands of bits (`Mp`, backed by MPFR).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;

/// Working-precision real number.
pub trait Real:
    Clone
    + fmt::Debug
    + PartialOrd
    + PartialOrd<f64>
    + PartialEq<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Largest precision the backend supports, in bits.
    const MAX_PREC: u32;

    fn from_f64(v: f64, prec: u32) -> Self;
    /// Correctly rounded `num / den`.
    fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self;
    /// Parses a decimal string; `None` when the text is not a number.
    fn parse(s: &str, prec: u32) -> Option<Self>;
    /// `2^k`, exact.
    fn pow2(k: i64, prec: u32) -> Self;
    fn pi(prec: u32) -> Self;

    fn prec(&self) -> u32;
    /// The same value rounded (or exactly extended) to `prec` bits.
    fn with_prec(&self, prec: u32) -> Self;
    fn to_f64(&self) -> f64;

    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn powf(&self, e: &Self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn floor(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
    fn is_sign_negative(&self) -> bool;

    /// Binary exponent `e` with `2^(e-1) <= |x| < 2^e`; `None` for zero.
    fn exponent(&self) -> Option<i64>;

    /// Scientific notation with `digits` significant decimal digits.
    fn to_sci(&self, digits: usize) -> String;

    /// Shortest decimal string that parses back to the same value at
    /// `self.prec()` bits.
    fn to_decimal(&self) -> String {
        self.to_sci(decimal_digits(self.prec()) + 2)
    }

    fn zero(prec: u32) -> Self {
        Self::from_f64(0.0, prec)
    }

    fn one(prec: u32) -> Self {
        Self::from_f64(1.0, prec)
    }

    fn ln_f64(&self) -> f64 {
        self.ln().to_f64()
    }

    /// `floor` as an integer; panics when the value does not fit in `i64`.
    fn floor_i64(&self) -> i64 {
        let f = self.floor().to_f64();
        assert!(f.abs() < 9.0e18, "floor out of i64 range");
        f as i64
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

/// Number of significant decimal digits carried by `prec` bits.
pub fn decimal_digits(prec: u32) -> usize {
    ((prec as f64) * std::f64::consts::LOG10_2).floor().max(1.0) as usize
}

/// Digits used in CSV output: the working precision's decimal equivalent,
/// capped at 40.
pub fn csv_digits(prec: u32) -> usize {
    decimal_digits(prec).min(40)
}

impl Real for f64 {
    const MAX_PREC: u32 = 53;

    fn from_f64(v: f64, _prec: u32) -> Self {
        v
    }

    fn from_ratio(num: &BigInt, den: &BigInt, _prec: u32) -> Self {
        use num_traits::ToPrimitive;
        // Scale both down to keep the quotient accurate for huge operands.
        let nb = num.bits() as i64;
        let db = den.bits() as i64;
        let shift = (nb.max(db) - 1000).max(0) as usize;
        let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    }

    fn parse(s: &str, _prec: u32) -> Option<Self> {
        s.trim().parse().ok()
    }

    fn pow2(k: i64, _prec: u32) -> Self {
        2f64.powi(k.clamp(-2000, 2000) as i32)
    }

    fn pi(_prec: u32) -> Self {
        std::f64::consts::PI
    }

    fn prec(&self) -> u32 {
        53
    }

    fn with_prec(&self, _prec: u32) -> Self {
        *self
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn ln(&self) -> Self {
        f64::ln(*self)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn powf(&self, e: &Self) -> Self {
        f64::powf(*self, *e)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn is_sign_negative(&self) -> bool {
        *self < 0.0
    }

    fn exponent(&self) -> Option<i64> {
        if *self == 0.0 || !self.is_finite() {
            return None;
        }
        Some(self.abs().log2().floor() as i64 + 1)
    }

    fn to_sci(&self, digits: usize) -> String {
        format!("{:.*e}", digits.clamp(1, 17) - 1, self)
    }
}

#[cfg(feature = "mpfr")]
pub use self::mp::Mp;

#[cfg(feature = "mpfr")]
mod mp {
    use super::*;
    use rug::float::{Constant, Round};
    use rug::ops::Pow;
    use rug::{Float, Integer, Rational};

    /// MPFR-backed arbitrary precision real.
    #[derive(Clone, PartialEq, PartialOrd)]
    pub struct Mp(pub Float);

    impl Mp {
        pub fn inner(&self) -> &Float {
            &self.0
        }
    }

    impl fmt::Debug for Mp {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "Mp({})", self.to_sci(20))
        }
    }

    impl fmt::Display for Mp {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str(&self.to_sci(decimal_digits(self.prec())))
        }
    }

    fn to_integer(v: &BigInt) -> Integer {
        Integer::from_str_radix(&v.to_str_radix(16), 16).expect("hex digits")
    }

    impl PartialEq<f64> for Mp {
        fn eq(&self, other: &f64) -> bool {
            self.0 == *other
        }
    }

    impl PartialOrd<f64> for Mp {
        fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
            self.0.partial_cmp(other)
        }
    }

    macro_rules! binop {
        ($tr:ident, $m:ident) => {
            impl $tr for Mp {
                type Output = Mp;
                fn $m(self, rhs: Mp) -> Mp {
                    Mp($tr::$m(self.0, &rhs.0))
                }
            }
            impl<'a> $tr<&'a Mp> for Mp {
                type Output = Mp;
                fn $m(self, rhs: &'a Mp) -> Mp {
                    Mp($tr::$m(self.0, &rhs.0))
                }
            }
            impl $tr<f64> for Mp {
                type Output = Mp;
                fn $m(self, rhs: f64) -> Mp {
                    Mp($tr::$m(self.0, rhs))
                }
            }
        };
    }
    binop!(Add, add);
    binop!(Sub, sub);
    binop!(Mul, mul);
    binop!(Div, div);

    impl Neg for Mp {
        type Output = Mp;
        fn neg(self) -> Mp {
            Mp(-self.0)
        }
    }

    impl Real for Mp {
        const MAX_PREC: u32 = 1 << 24;

        fn from_f64(v: f64, prec: u32) -> Self {
            Mp(Float::with_val(prec, v))
        }

        fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
            let r = Rational::from((to_integer(num), to_integer(den)));
            Mp(Float::with_val(prec, r))
        }

        fn parse(s: &str, prec: u32) -> Option<Self> {
            Float::parse(s.trim()).ok().map(|p| Mp(Float::with_val(prec, p)))
        }

        fn pow2(k: i64, prec: u32) -> Self {
            let one = Float::with_val(prec, 1);
            let k = k.clamp(i32::MIN as i64 / 2, i32::MAX as i64 / 2) as i32;
            Mp(one << k)
        }

        fn pi(prec: u32) -> Self {
            Mp(Float::with_val(prec, Constant::Pi))
        }

        fn prec(&self) -> u32 {
            self.0.prec()
        }

        fn with_prec(&self, prec: u32) -> Self {
            Mp(Float::with_val(prec, &self.0))
        }

        fn to_f64(&self) -> f64 {
            self.0.to_f64()
        }

        fn ln(&self) -> Self {
            Mp(self.0.clone().ln())
        }

        fn exp(&self) -> Self {
            Mp(self.0.clone().exp())
        }

        fn powf(&self, e: &Self) -> Self {
            Mp(self.0.clone().pow(&e.0))
        }

        fn sqrt(&self) -> Self {
            Mp(self.0.clone().sqrt())
        }

        fn abs(&self) -> Self {
            Mp(self.0.clone().abs())
        }

        fn floor(&self) -> Self {
            Mp(self.0.clone().floor())
        }

        fn is_zero(&self) -> bool {
            self.0.is_zero()
        }

        fn is_finite(&self) -> bool {
            self.0.is_finite()
        }

        fn is_sign_negative(&self) -> bool {
            self.0.is_sign_negative() && !self.0.is_zero()
        }

        fn exponent(&self) -> Option<i64> {
            self.0.get_exp().map(i64::from)
        }

        fn floor_i64(&self) -> i64 {
            self.0
                .to_integer_round(Round::Down)
                .and_then(|(i, _)| i.to_i64())
                .expect("floor out of i64 range")
        }

        fn to_sci(&self, digits: usize) -> String {
            if self.0.is_zero() {
                return format!("{:.*e}", digits.max(1) - 1, 0.0);
            }
            // MPFR renders "d.ddde-k"; keep that form.
            self.0
                .to_string_radix_round(10, Some(digits.max(1)), Round::Nearest)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_backend_basics() {
        let x = <f64 as Real>::from_f64(0.25, 53);
        assert_eq!(x.ln().exp(), 0.25);
        assert_eq!(<f64 as Real>::pow2(-3, 53), 0.125);
        assert_eq!(<f64 as Real>::exponent(&0.75), Some(0));
        assert_eq!(<f64 as Real>::exponent(&1.0), Some(1));
    }

    #[cfg(feature = "mpfr")]
    #[test]
    fn mp_decimal_round_trip() {
        let x = Mp::from_ratio(&BigInt::from(5), &BigInt::from(7), 300);
        let s = x.to_decimal();
        let y = Mp::parse(&s, 300).unwrap();
        assert_eq!(x, y);
        assert_eq!(Mp::pow2(-4000, 64).exponent(), Some(-3999));
        assert_eq!(Mp::from_f64(-2.5, 64).floor_i64(), -3);
    }

    #[cfg(feature = "mpfr")]
    #[test]
    fn mp_ops_take_left_precision() {
        let lo = Mp::from_f64(1.0, 64);
        let hi = Mp::pi(512);
        assert_eq!((lo + &hi).prec(), 64);
    }
}
