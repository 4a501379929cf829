//! q-shifted factorials `(a;q)_k` for integer `k` (exact) and `k = ∞`
//! (certified).

use num_traits::{One, Signed, Zero};

use crate::error::{domain, Error, Result};
use crate::numerics::{q_exponent, ApproxValue, BigFloat, PrecisionContext, Rational};

/// The base `q` with `0 < |q| < 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QBase(Rational);

impl QBase {
    pub fn new(q: Rational) -> Result<Self> {
        if q.is_zero() || q.abs() >= Rational::one() {
            return domain(format!("base must satisfy 0 < |q| < 1, got {q}"));
        }
        Ok(QBase(q))
    }

    pub fn q(&self) -> &Rational {
        &self.0
    }

    /// `q^k` for any integer `k`.
    pub fn pow(&self, k: i64) -> Rational {
        crate::numerics::rational_pow(&self.0, k).expect("q is nonzero")
    }

    /// `x * q^k`
    pub fn shift(&self, x: &Rational, k: i64) -> Rational {
        x * self.pow(k)
    }

    /// `j` with `x = q^j`, if any.
    pub fn exponent_of(&self, x: &Rational) -> Option<i64> {
        q_exponent(x, &self.0)
    }
}

/// Value of a finite-order factorial. A pole is an ordinary value: it
/// appears when `k < 0` and one of the reciprocal factors vanishes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PochValue {
    Finite(Rational),
    Pole,
}

impl PochValue {
    pub fn is_zero(&self) -> bool {
        matches!(self, PochValue::Finite(v) if v.is_zero())
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            PochValue::Finite(v) => Some(v),
            PochValue::Pole => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    Numerator,
    Denominator,
}

/// The individual factors `1 - a q^j` that make up `(a;q)_k`.
///
/// For `k >= 0` they sit in the numerator with `j = 0..k`; for `k = -n` they
/// sit in the denominator with `j = -1..=-n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PochFactorList {
    pub a: Rational,
    pub exponents: Vec<i64>,
    pub factors: Vec<Rational>,
    pub placement: Placement,
}

impl PochFactorList {
    pub fn new(a: &Rational, k: i64, base: &QBase) -> Self {
        let (exponents, placement): (Vec<i64>, _) = if k >= 0 {
            ((0..k).collect(), Placement::Numerator)
        } else {
            ((1..=-k).map(|j| -j).collect(), Placement::Denominator)
        };
        let mut factors = Vec::with_capacity(exponents.len());
        let mut qj = if k >= 0 { Rational::one() } else { base.q().recip() };
        let step = if k >= 0 { base.q().clone() } else { base.q().recip() };
        for _ in &exponents {
            factors.push(Rational::one() - a * &qj);
            qj *= &step;
        }
        PochFactorList { a: a.clone(), exponents, factors, placement }
    }

    /// Exponent `j` of the first vanishing factor.
    pub fn vanishing_exponent(&self) -> Option<i64> {
        self.factors.iter().position(|f| f.is_zero()).map(|i| self.exponents[i])
    }

    pub fn product(&self) -> Rational {
        self.factors.iter().fold(Rational::one(), |acc, f| acc * f)
    }

    pub fn value(&self) -> PochValue {
        let p = self.product();
        match self.placement {
            Placement::Numerator => PochValue::Finite(p),
            Placement::Denominator if p.is_zero() => PochValue::Pole,
            Placement::Denominator => PochValue::Finite(p.recip()),
        }
    }
}

/// `(a;q)_k = prod_{j<k} (1 - a q^j)` for `k >= 0`.
pub fn poch_finite(a: &Rational, k: u64, base: &QBase) -> Rational {
    let mut acc = Rational::one();
    let mut qj = Rational::one();
    for _ in 0..k {
        acc *= Rational::one() - a * &qj;
        if acc.is_zero() {
            return acc;
        }
        qj *= base.q();
    }
    acc
}

/// `(a;q)_k` for any integer `k`; negative orders use
/// `(a;q)_{-n} = 1 / prod_{j=1..n} (1 - a q^{-j})`.
pub fn poch_int(a: &Rational, k: i64, base: &QBase) -> PochValue {
    if k >= 0 {
        return PochValue::Finite(poch_finite(a, k as u64, base));
    }
    PochFactorList::new(a, k, base).value()
}

/// Certified `(a;q)_∞` to within `ctx.target_eps`.
pub fn poch_infinite(a: &Rational, base: &QBase, ctx: &PrecisionContext) -> ApproxValue {
    let bits = ctx.bits;
    if a.is_zero() {
        return ApproxValue::one(bits);
    }
    if infinite_vanishes(a, base) {
        return ApproxValue::zero(bits);
    }
    let abs_a = a.abs();
    let abs_q = base.q().abs();
    let one_minus_q = Rational::one() - &abs_q;
    // tail_scale(N) = |a||q|^N / (1 - |q|); the tail product's log is at most
    // 2 * tail_scale once tail_scale <= 1/2, hence |T - 1| <= 4 * tail_scale.
    let half_eps = &ctx.target_eps / Rational::from_integer(2.into());
    let qa = ApproxValue::from_rational(base.q(), bits);
    let mut term_q = ApproxValue::one(bits); // q^j
    let mut product = ApproxValue::one(bits);
    let a_approx = ApproxValue::from_rational(a, bits);
    let mut tail = &abs_a / &one_minus_q; // at N = 0
    loop {
        if tail <= Rational::new(1.into(), 2.into()) {
            let bound = product.abs_upper().to_rational() * &tail * Rational::from_integer(4.into());
            if bound <= half_eps {
                let extra = BigFloat::rational_upper(&bound, 64);
                return product.widen(&extra);
            }
        }
        let factor = ApproxValue::one(bits).sub(&a_approx.mul(&term_q));
        product = product.mul(&factor);
        term_q = term_q.mul(&qa);
        tail *= &abs_q;
    }
}

/// Order of a multi-parameter factorial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Finite(i64),
    Infinite,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MultiValue {
    Exact(Rational),
    Pole,
    Approx(ApproxValue),
}

/// `(a_1, ..., a_m)_k = (a_1)_k ... (a_m)_k`.
pub fn poch_multi(
    params: &[Rational],
    k: Order,
    base: &QBase,
    ctx: &PrecisionContext,
) -> Result<MultiValue> {
    match k {
        Order::Finite(k) => {
            let values: Vec<PochValue> = params.iter().map(|a| poch_int(a, k, base)).collect();
            let has_pole = values.contains(&PochValue::Pole);
            let has_zero = values.iter().any(PochValue::is_zero);
            if has_pole && has_zero {
                return Err(Error::Indeterminate(
                    "zero factorial times a pole in a product of factorials".into(),
                ));
            }
            if has_pole {
                return Ok(MultiValue::Pole);
            }
            let p = values
                .iter()
                .filter_map(PochValue::finite)
                .fold(Rational::one(), |acc, v| acc * v);
            Ok(MultiValue::Exact(p))
        }
        Order::Infinite => {
            let n = params.len().max(1) as i64;
            let each = ctx.with_eps(&ctx.target_eps / Rational::from_integer((4 * n).into()));
            let mut acc = ApproxValue::one(ctx.bits);
            for a in params {
                acc = acc.mul(&poch_infinite(a, base, &each));
            }
            Ok(MultiValue::Approx(acc))
        }
    }
}

/// Is `(x;q)_∞` exactly zero, i.e. `x = q^{-m}` with `m >= 0`?
pub fn infinite_vanishes(x: &Rational, base: &QBase) -> bool {
    matches!(base.exponent_of(x), Some(j) if j <= 0)
}
