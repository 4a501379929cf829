//! Binary floating values `mantissa * 2^exp` with explicit rounding.
//!
//! Every operation here is either exact or returns the rounded value
//! together with a rigorous bound on what the rounding discarded, so the
//! callers in `approx` never have to reason about hidden rounding.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        BigFloat { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_int(n: i64) -> Self {
        BigFloat { mant: BigInt::from(n), exp: 0 }
    }

    pub fn from_parts(mant: BigInt, exp: i64) -> Self {
        BigFloat { mant, exp }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    /// `2^e`
    pub fn pow2(e: i64) -> Self {
        BigFloat { mant: BigInt::one(), exp: e }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn abs(&self) -> Self {
        BigFloat { mant: self.mant.abs(), exp: self.exp }
    }

    pub fn neg(&self) -> Self {
        BigFloat { mant: -&self.mant, exp: self.exp }
    }

    /// Number of significant bits in the mantissa.
    pub fn precision(&self) -> u64 {
        self.mant.bits()
    }

    /// Exponent of the leading bit, i.e. `floor(log2|x|)`; `None` for zero.
    pub fn magnitude(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mant.bits() as i64 - 1)
        }
    }

    pub fn to_rational(&self) -> Rational {
        if self.exp >= 0 {
            Rational::from_integer(&self.mant << self.exp as usize)
        } else {
            Rational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let shift = (bits - 60).max(0);
        let top = (&self.mant >> shift as usize).to_f64().unwrap_or(0.0);
        top * 2f64.powi((self.exp + shift).clamp(-2000, 2000) as i32)
    }

    pub fn add_exact(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &other.mant << (other.exp - e) as usize;
        BigFloat { mant: a + b, exp: e }
    }

    pub fn sub_exact(&self, other: &Self) -> Self {
        self.add_exact(&other.neg())
    }

    pub fn mul_exact(&self, other: &Self) -> Self {
        BigFloat { mant: &self.mant * &other.mant, exp: self.exp + other.exp }
    }

    /// Rounds to `bits` significant bits, ties to even. Returns the rounded
    /// value and an upper bound on `|self - rounded|` (zero when exact).
    pub fn round_nearest(&self, bits: u32) -> (Self, Self) {
        let len = self.mant.bits();
        if len <= bits as u64 {
            return (self.clone(), BigFloat::zero());
        }
        let shift = (len - bits as u64) as usize;
        let neg = self.mant.is_negative();
        let abs = self.mant.abs();
        let mut q = &abs >> shift;
        let rem = &abs - (&q << shift);
        let half = BigInt::one() << (shift - 1);
        let round_up = match rem.cmp(&half) {
            Ordering::Greater => true,
            Ordering::Equal => q.is_odd(),
            Ordering::Less => false,
        };
        if round_up {
            q += 1;
        }
        let exp = self.exp + shift as i64;
        let rounded = BigFloat { mant: if neg { -q } else { q }, exp };
        let err = if rem.is_zero() {
            BigFloat::zero()
        } else {
            BigFloat::pow2(exp - 1)
        };
        (rounded, err)
    }

    /// Rounds `|self|` up to at most `bits` significant bits.
    pub fn round_up_abs(&self, bits: u32) -> Self {
        let abs = self.mant.abs();
        let len = abs.bits();
        if len <= bits as u64 {
            return BigFloat { mant: abs, exp: self.exp };
        }
        let shift = (len - bits as u64) as usize;
        let mut q = &abs >> shift;
        if (&q << shift) != abs {
            q += 1;
        }
        BigFloat { mant: q, exp: self.exp + shift as i64 }
    }

    /// Rounds `|self|` down to at most `bits` significant bits.
    pub fn round_down_abs(&self, bits: u32) -> Self {
        let abs = self.mant.abs();
        let len = abs.bits();
        if len <= bits as u64 {
            return BigFloat { mant: abs, exp: self.exp };
        }
        let shift = (len - bits as u64) as usize;
        BigFloat { mant: abs >> shift, exp: self.exp + shift as i64 }
    }

    /// Quotient rounded to `bits` significant bits, plus an error bound.
    pub fn div_nearest(&self, other: &Self, bits: u32) -> (Self, Self) {
        assert!(!other.is_zero(), "division by zero");
        if self.is_zero() {
            return (BigFloat::zero(), BigFloat::zero());
        }
        let s = (bits as i64 + 2 + other.mant.bits() as i64 - self.mant.bits() as i64).max(0);
        let num = self.mant.abs() << s as usize;
        let (q, r) = num.div_rem(&other.mant.abs());
        let exp = self.exp - other.exp - s;
        let q = if self.mant.is_negative() != other.mant.is_negative() { -q } else { q };
        let (rounded, rnd) = BigFloat { mant: q, exp }.round_nearest(bits);
        let trunc = if r.is_zero() { BigFloat::zero() } else { BigFloat::pow2(exp) };
        (rounded, rnd.add_exact(&trunc))
    }

    /// Upper bound on `|self / other|` with `bits` significant bits.
    pub fn div_up_abs(&self, other: &Self, bits: u32) -> Self {
        assert!(!other.is_zero(), "division by zero");
        if self.is_zero() {
            return BigFloat::zero();
        }
        let s = (bits as i64 + 2 + other.mant.bits() as i64 - self.mant.bits() as i64).max(0);
        let num = self.mant.abs() << s as usize;
        let (mut q, r) = num.div_rem(&other.mant.abs());
        if !r.is_zero() {
            q += 1;
        }
        BigFloat { mant: q, exp: self.exp - other.exp - s }.round_up_abs(bits)
    }

    /// Nearest value with `bits` significant bits, plus an upper bound on
    /// the representation error.
    pub fn from_rational(x: &Rational, bits: u32) -> (Self, Self) {
        if x.is_zero() {
            return (BigFloat::zero(), BigFloat::zero());
        }
        let n = x.numer();
        let d = x.denom();
        if d.is_one() {
            return BigFloat { mant: n.clone(), exp: 0 }.round_nearest(bits);
        }
        // Aim for bits + 2 quotient bits, then round once more.
        let e = n.bits() as i64 - d.bits() as i64 - bits as i64 - 2;
        let (num, den) = if e >= 0 {
            (n.clone(), d << e as usize)
        } else {
            (n << (-e) as usize, d.clone())
        };
        let (q, r) = num.div_rem(&den);
        let approx = BigFloat { mant: q.clone(), exp: e };
        let (rounded, _) = approx.round_nearest(bits);
        if r.is_zero() && rounded == approx {
            return (rounded, BigFloat::zero());
        }
        let diff = (x - rounded.to_rational()).abs();
        (rounded, BigFloat::rational_upper(&diff, 64))
    }

    /// Upper bound on a nonnegative rational with `bits` significant bits.
    pub fn rational_upper(x: &Rational, bits: u32) -> Self {
        if x.is_zero() {
            return BigFloat::zero();
        }
        let n = x.numer().abs();
        let d = x.denom();
        let e = n.bits() as i64 - d.bits() as i64 - bits as i64 - 1;
        let (num, den) = if e >= 0 {
            (n, d << e as usize)
        } else {
            (n << (-e) as usize, d.clone())
        };
        let (mut q, r) = num.div_rem(&den);
        if !r.is_zero() {
            q += 1;
        }
        BigFloat { mant: q, exp: e }.round_up_abs(bits)
    }

    /// Lower bound on a nonnegative rational with `bits` significant bits.
    pub fn rational_lower(x: &Rational, bits: u32) -> Self {
        if x.is_zero() {
            return BigFloat::zero();
        }
        let n = x.numer().abs();
        let d = x.denom();
        let e = n.bits() as i64 - d.bits() as i64 - bits as i64 - 1;
        let (num, den) = if e >= 0 {
            (n, d << e as usize)
        } else {
            (n << (-e) as usize, d.clone())
        };
        BigFloat { mant: num / den, exp: e }.round_down_abs(bits)
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BigFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.sub_exact(other);
        d.mant.sign().cmp(&num_bigint::Sign::NoSign)
    }
}
