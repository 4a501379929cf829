//! High-precision values carrying a certified absolute error bound.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::float::BigFloat;
use super::rational::{format_scientific, Rational, Rounding};
use crate::error::{domain, Result};

/// Significant bits kept for error bounds. Bounds are always rounded up.
const ERR_BITS: u32 = 64;

/// Working precision and requested final accuracy.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionContext {
    pub bits: u32,
    pub target_eps: Rational,
}

impl PrecisionContext {
    pub fn new(bits: u32, target_eps: Rational) -> Result<Self> {
        if bits < 64 {
            return domain(format!("precision must be at least 64 bits, got {bits}"));
        }
        if target_eps <= Rational::zero() {
            return domain("target_eps must be positive");
        }
        Ok(PrecisionContext { bits, target_eps })
    }

    /// Same precision with a different error target.
    pub fn with_eps(&self, target_eps: Rational) -> Self {
        PrecisionContext { bits: self.bits, target_eps }
    }
}

impl Default for PrecisionContext {
    /// 256 bits, `1e-30`.
    fn default() -> Self {
        let eps = Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10), 30));
        PrecisionContext { bits: 256, target_eps: eps }
    }
}

/// A value `v` with the guarantee that the quantity it stands for lies in
/// `[v - err, v + err]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxValue {
    value: BigFloat,
    err: BigFloat,
    bits: u32,
}

impl ApproxValue {
    /// Rounds `value` to `bits`; the error is zero when it already fits.
    pub fn exact(value: BigFloat, bits: u32) -> Self {
        let (v, rnd) = value.round_nearest(bits);
        ApproxValue { value: v, err: rnd.round_up_abs(ERR_BITS), bits }
    }

    pub fn zero(bits: u32) -> Self {
        ApproxValue { value: BigFloat::zero(), err: BigFloat::zero(), bits }
    }

    pub fn one(bits: u32) -> Self {
        ApproxValue { value: BigFloat::one(), err: BigFloat::zero(), bits }
    }

    pub fn from_rational(x: &Rational, bits: u32) -> Self {
        let (value, err) = BigFloat::from_rational(x, bits);
        ApproxValue { value, err: err.round_up_abs(ERR_BITS), bits }
    }

    pub fn value(&self) -> &BigFloat {
        &self.value
    }

    pub fn err(&self) -> &BigFloat {
        &self.err
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn is_exact_zero(&self) -> bool {
        self.value.is_zero() && self.err.is_zero()
    }

    /// Adds `extra` (taken in absolute value) to the error bound.
    pub fn widen(&self, extra: &BigFloat) -> Self {
        let err = self.err.add_exact(&extra.abs()).round_up_abs(ERR_BITS);
        ApproxValue { value: self.value.clone(), err, bits: self.bits }
    }

    pub fn with_bits(&self, bits: u32) -> Self {
        let (v, rnd) = self.value.round_nearest(bits);
        let err = self.err.add_exact(&rnd).round_up_abs(ERR_BITS);
        ApproxValue { value: v, err, bits }
    }

    /// Upper bound on `|x|` for every `x` the value stands for.
    pub fn abs_upper(&self) -> BigFloat {
        self.value.abs().add_exact(&self.err)
    }

    /// Lower bound on `|x|`; zero when the enclosure touches zero.
    pub fn abs_lower(&self) -> BigFloat {
        let d = self.value.abs().sub_exact(&self.err);
        if d.is_negative() {
            BigFloat::zero()
        } else {
            d
        }
    }

    pub fn may_be_zero(&self) -> bool {
        self.value.abs() <= self.err
    }

    pub fn neg(&self) -> Self {
        ApproxValue { value: self.value.neg(), err: self.err.clone(), bits: self.bits }
    }

    pub fn abs(&self) -> Self {
        ApproxValue { value: self.value.abs(), err: self.err.clone(), bits: self.bits }
    }

    pub fn add(&self, other: &Self) -> Self {
        let bits = self.bits.max(other.bits);
        let (v, rnd) = self.value.add_exact(&other.value).round_nearest(bits);
        let err = self.err.add_exact(&other.err).add_exact(&rnd).round_up_abs(ERR_BITS);
        ApproxValue { value: v, err, bits }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let bits = self.bits.max(other.bits);
        let (v, rnd) = self.value.mul_exact(&other.value).round_nearest(bits);
        let a = self.value.abs();
        let b = other.value.abs();
        let err = a
            .mul_exact(&other.err)
            .add_exact(&b.mul_exact(&self.err))
            .add_exact(&self.err.mul_exact(&other.err))
            .add_exact(&rnd)
            .round_up_abs(ERR_BITS);
        ApproxValue { value: v, err, bits }
    }

    pub fn mul_rational(&self, x: &Rational) -> Self {
        self.mul(&ApproxValue::from_rational(x, self.bits))
    }

    /// Division; fails when the divisor's enclosure contains zero.
    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.may_be_zero() {
            return domain("division by a value that may be zero");
        }
        let bits = self.bits.max(other.bits);
        let (v, rnd) = self.value.div_nearest(&other.value, bits);
        let a = self.value.abs();
        let b = other.value.abs();
        // |a/b - A/B| <= (|a| eB + |b| eA) / (|b| (|b| - eB))
        let num = a
            .mul_exact(&other.err)
            .add_exact(&b.mul_exact(&self.err))
            .round_up_abs(ERR_BITS);
        let den = b
            .round_down_abs(ERR_BITS)
            .mul_exact(&b.sub_exact(&other.err).round_down_abs(ERR_BITS));
        let prop = num.div_up_abs(&den, ERR_BITS);
        let err = prop.add_exact(&rnd).round_up_abs(ERR_BITS);
        Ok(ApproxValue { value: v, err, bits })
    }

    pub fn recip(&self) -> Result<Self> {
        ApproxValue::one(self.bits).div(self)
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, k: u64) -> Self {
        let mut result = ApproxValue::one(self.bits);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// `|self - other|` as a rational, ignoring both error bounds.
    pub fn distance(&self, other: &Self) -> Rational {
        (self.value.to_rational() - other.value.to_rational()).abs()
    }

    /// Whether the two enclosures, each widened by `tol`, can describe the
    /// same number.
    pub fn agrees_with(&self, other: &Self, tol: &Rational) -> bool {
        let budget = self.err.add_exact(&other.err).to_rational() + tol;
        self.distance(other) <= budget
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// Decimal digits that round-trip the working precision.
    pub fn display_digits(&self) -> usize {
        (self.bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1
    }

    pub fn value_string(&self) -> String {
        format_scientific(&self.value.to_rational(), self.display_digits(), Rounding::Nearest)
    }

    pub fn err_string(&self) -> String {
        format_scientific(&self.err.to_rational(), 3, Rounding::Up)
    }
}

impl fmt::Display for ApproxValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", self.value_string(), self.err_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rational::{int, rat};

    fn contains(v: &ApproxValue, x: &Rational) -> bool {
        (v.value().to_rational() - x).abs() <= v.err().to_rational()
    }

    #[test]
    fn third_at_128_bits() {
        let v = ApproxValue::from_rational(&rat(1, 3), 128);
        assert!(contains(&v, &rat(1, 3)));
        let ulp = Rational::new(BigInt::one(), BigInt::one() << 128usize);
        assert!(v.err().to_rational() <= ulp);
    }

    #[test]
    fn zero_is_exact() {
        let v = ApproxValue::from_rational(&int(0), 64);
        assert!(v.is_exact_zero());
    }

    #[test]
    fn tenth_at_256_vs_512() {
        let lo = ApproxValue::from_rational(&rat(1, 10), 256);
        let hi = ApproxValue::from_rational(&rat(1, 10), 512);
        let ulp = Rational::new(BigInt::one(), BigInt::one() << 256usize);
        assert!(lo.err().to_rational() <= ulp);
        assert!(lo.distance(&hi) <= lo.err().to_rational() + hi.err().to_rational());
    }

    #[test]
    fn arithmetic_encloses_exact_results() {
        let bits = 80;
        let x = rat(7, 13);
        let y = rat(-22, 9);
        let ax = ApproxValue::from_rational(&x, bits);
        let ay = ApproxValue::from_rational(&y, bits);
        assert!(contains(&ax.add(&ay), &(&x + &y)));
        assert!(contains(&ax.sub(&ay), &(&x - &y)));
        assert!(contains(&ax.mul(&ay), &(&x * &y)));
        assert!(contains(&ax.div(&ay).unwrap(), &(&x / &y)));
        assert!(contains(&ay.recip().unwrap(), &y.recip()));
        assert!(contains(&ax.powi(7), &crate::numerics::rational_pow(&x, 7).unwrap()));
    }

    #[test]
    fn division_by_possible_zero_fails() {
        let z = ApproxValue::from_rational(&rat(1, 3), 64).sub(&ApproxValue::from_rational(&rat(1, 3), 64));
        let z = z.widen(&BigFloat::pow2(-10));
        assert!(ApproxValue::one(64).div(&z).is_err());
    }

    #[test]
    fn context_invariants() {
        assert!(PrecisionContext::new(32, rat(1, 10)).is_err());
        assert!(PrecisionContext::new(64, int(0)).is_err());
        let ctx = PrecisionContext::default();
        assert_eq!(ctx.bits, 256);
    }

    #[test]
    fn display_form() {
        let v = ApproxValue::one(64);
        assert_eq!(v.to_string(), "1 ± 0");
    }
}
