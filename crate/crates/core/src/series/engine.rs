//! Two-sided summation driven by the term ratio `t(k+1)/t(k)`.
//!
//! Every series handled here has `t(0) = 1` and a ratio of the form
//!
//! ```text
//! t(k+1)/t(k) = C * q^(slope*k) * prod_num (1 - c q^(s k + o)) / prod_den (1 - c q^(s k + o))
//! ```
//!
//! which covers unilateral and bilateral series, the very-well-poised
//! prefactor (step 2 factors) and the theta-type sum (slope 1). Exact zeros
//! of factors are located up front, so termination from above and below is
//! detected exactly; elsewhere the ratio is evaluated in working precision.
//! Truncation is certified by bounds on the ratio that are monotone in the
//! cut-off index.

use num_traits::{One, Signed, Zero};

use super::TruncationPolicy;
use crate::error::{domain, Error, Result};
use crate::numerics::{rational_pow, ApproxValue, BigFloat, PrecisionContext, Rational};
use crate::qfactorial::QBase;

/// Bits used for the cut-off bounds; they only need to be rigorous.
const BOUND_BITS: u32 = 96;

/// `1 - coeff * q^(step*k + offset)`
#[derive(Clone, Debug)]
pub(crate) struct LinearFactor {
    pub coeff: Rational,
    pub step: i64,
    pub offset: i64,
    /// The `k` at which this factor is exactly zero, if any.
    pub zero_at: Option<i64>,
}

impl LinearFactor {
    pub fn new(coeff: Rational, step: i64, offset: i64, base: &QBase) -> Self {
        debug_assert!(step > 0);
        let zero_at = base.exponent_of(&coeff).and_then(|j| {
            let num = -j - offset;
            if num % step == 0 {
                Some(num / step)
            } else {
                None
            }
        });
        LinearFactor { coeff, step, offset, zero_at }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct RatioModel {
    pub num: Vec<LinearFactor>,
    pub den: Vec<LinearFactor>,
    pub constant: Rational,
    pub slope: i64,
    pub base: QBase,
    /// Every term below `k = 0` vanishes regardless of the factors.
    pub floor: bool,
}

/// Where a one-sided scan stops on its own.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    /// All terms beyond this index vanish; the index itself is the last
    /// possibly nonzero term.
    Terminates(i64),
    /// A pole (or 0/0) is hit before any termination.
    Blocked(i64),
    Open,
}

impl RatioModel {
    pub fn limit_up(&self) -> Option<Rational> {
        if self.slope > 0 {
            Some(Rational::zero())
        } else if self.slope < 0 {
            None
        } else {
            Some(self.constant.abs())
        }
    }

    /// Limit of `|t(k-1)/t(k)|` as `k -> -inf`; `None` when unbounded.
    pub fn limit_down(&self) -> Option<Rational> {
        if self.constant.is_zero() {
            return None;
        }
        let (d, mag, off) = self.down_shape();
        if d > 0 {
            return None;
        }
        if d < 0 {
            return Some(Rational::zero());
        }
        Some(mag * rational_pow(&self.base.q().abs(), off).expect("q nonzero"))
    }

    /// Slope balance `D`, coefficient quotient and offset balance of the
    /// downward ratio.
    fn down_shape(&self) -> (i64, Rational, i64) {
        let mut d = -self.slope;
        let mut mag = self.constant.abs().recip();
        let mut off = 0;
        for f in self.den.iter().filter(|f| !f.coeff.is_zero()) {
            d += f.step;
            mag *= f.coeff.abs();
            off += f.offset;
        }
        for f in self.num.iter().filter(|f| !f.coeff.is_zero()) {
            d -= f.step;
            mag /= f.coeff.abs();
            off -= f.offset;
        }
        (d, mag, off)
    }

    /// Upward scan outcome: a numerator zero at `m >= 0` ends the series at
    /// `m`; a denominator zero at `m >= 0` is a pole.
    pub fn stop_above(&self) -> Stop {
        let first_num = self.num.iter().filter_map(|f| f.zero_at).filter(|&m| m >= 0).min();
        let first_den = self.den.iter().filter_map(|f| f.zero_at).filter(|&m| m >= 0).min();
        match (first_num, first_den) {
            (Some(n), Some(d)) if d <= n => Stop::Blocked(d),
            (Some(n), _) => Stop::Terminates(n),
            (None, Some(d)) => Stop::Blocked(d),
            (None, None) => Stop::Open,
        }
    }

    /// Downward scan outcome: a denominator zero at `m <= -1` makes every
    /// term at or below `m` vanish; a numerator zero there is a pole.
    pub fn stop_below(&self) -> Stop {
        if self.floor {
            return Stop::Terminates(0);
        }
        let first_den = self.den.iter().filter_map(|f| f.zero_at).filter(|&m| m <= -1).max();
        let first_num = self.num.iter().filter_map(|f| f.zero_at).filter(|&m| m <= -1).max();
        match (first_den, first_num) {
            (Some(d), Some(n)) if n >= d => Stop::Blocked(n),
            (Some(d), _) => Stop::Terminates(d + 1),
            (None, Some(n)) => Stop::Blocked(n),
            (None, None) => Stop::Open,
        }
    }

    fn abs_q_pow(&self, e: i64) -> ApproxValue {
        let aq = self.base.q().abs();
        ApproxValue::from_rational(&rational_pow(&aq, e).expect("q nonzero"), BOUND_BITS)
    }

    /// Rigorous upper bound on `|t(k+1)/t(k)|` valid for every `k >= kk`.
    pub fn bound_up(&self, kk: i64) -> Option<Rational> {
        let one = ApproxValue::one(BOUND_BITS);
        let mut b = ApproxValue::from_rational(&self.constant.abs(), BOUND_BITS);
        if self.slope != 0 {
            if self.slope < 0 {
                return None;
            }
            b = b.mul(&self.abs_q_pow(self.slope * kk));
        }
        for f in &self.num {
            let x = self.abs_q_pow(f.step * kk + f.offset).mul_rational(&f.coeff.abs());
            b = b.mul(&one.add(&x));
        }
        for f in &self.den {
            let x = self.abs_q_pow(f.step * kk + f.offset).mul_rational(&f.coeff.abs());
            let lower = one.sub(&x);
            if lower.value().is_negative() || lower.may_be_zero() {
                return None;
            }
            b = b.div(&lower).ok()?;
        }
        Some(b.abs_upper().to_rational())
    }

    /// Rigorous upper bound on `|t(k-1)/t(k)|` valid for every `k <= kk`.
    pub fn bound_down(&self, kk: i64) -> Option<Rational> {
        if self.constant.is_zero() {
            return None;
        }
        let (d, mag, off) = self.down_shape();
        if d > 0 {
            return None;
        }
        let one = ApproxValue::one(BOUND_BITS);
        let mut b = ApproxValue::from_rational(&mag, BOUND_BITS).mul(&self.abs_q_pow((kk - 1) * d + off));
        for f in self.den.iter().filter(|f| !f.coeff.is_zero()) {
            let w = self.abs_q_pow(-(f.step * (kk - 1) + f.offset)).mul_rational(&f.coeff.abs().recip());
            b = b.mul(&one.add(&w));
        }
        for f in self.num.iter().filter(|f| !f.coeff.is_zero()) {
            let w = self.abs_q_pow(-(f.step * (kk - 1) + f.offset)).mul_rational(&f.coeff.abs().recip());
            let lower = one.sub(&w);
            if lower.value().is_negative() || lower.may_be_zero() {
                return None;
            }
            b = b.div(&lower).ok()?;
        }
        Some(b.abs_upper().to_rational())
    }

    /// Sum over all integers `k` with a certified error bound.
    pub fn sum(&self, policy: &TruncationPolicy, ctx: &PrecisionContext) -> Result<ApproxValue> {
        let eps = if policy.target_eps < ctx.target_eps {
            policy.target_eps.clone()
        } else {
            ctx.target_eps.clone()
        };
        let quarter = &eps / Rational::from_integer(4.into());
        let up = self.sum_side(Side::Up, policy, &quarter, ctx.bits)?;
        let down = self.sum_side(Side::Down, policy, &quarter, ctx.bits)?;
        // t(0) = 1 is counted by both sides
        Ok(up.add(&down).sub(&ApproxValue::one(ctx.bits)))
    }

    fn sum_side(
        &self,
        side: Side,
        policy: &TruncationPolicy,
        tail_eps: &Rational,
        bits: u32,
    ) -> Result<ApproxValue> {
        let stop = match side {
            Side::Up => self.stop_above(),
            Side::Down => self.stop_below(),
        };
        let limit = match side {
            Side::Up => self.limit_up(),
            Side::Down => self.limit_down(),
        };
        let ratio_cap = match (&stop, &limit) {
            (Stop::Terminates(_), _) => None,
            (_, Some(l)) if *l < Rational::one() => Some(policy.certified_ratio(l)),
            _ => {
                return domain(match side {
                    Side::Up => "series diverges above (limiting term ratio >= 1)",
                    Side::Down => "series diverges below (limiting term ratio >= 1)",
                })
            }
        };

        let q = ApproxValue::from_rational(self.base.q(), bits);
        let q_inv = ApproxValue::from_rational(&self.base.q().recip(), bits);
        let prepared = |fs: &[LinearFactor]| -> Vec<ApproxValue> {
            fs.iter()
                .map(|f| {
                    let c = &f.coeff * rational_pow(self.base.q(), f.offset).expect("q nonzero");
                    ApproxValue::from_rational(&c, bits)
                })
                .collect()
        };
        let num_c = prepared(&self.num);
        let den_c = prepared(&self.den);
        let constant = ApproxValue::from_rational(&self.constant, bits);
        let one = ApproxValue::one(bits);

        let mut term = ApproxValue::one(bits);
        let mut total = ApproxValue::one(bits);
        // q^m for the ratio index m currently in use
        let mut qm = ApproxValue::one(bits);
        let mut k: i64 = 0;
        let mut count = 0usize;

        loop {
            // the ratio index linking t(k) to its neighbour
            let m = match side {
                Side::Up => k,
                Side::Down => k - 1,
            };
            if side == Side::Down {
                qm = qm.mul(&q_inv);
            }

            match stop {
                Stop::Terminates(last) if (side == Side::Up && k >= last) || (side == Side::Down && k <= last) => {
                    return Ok(total);
                }
                Stop::Blocked(at) if at == m => {
                    let both = self.num.iter().any(|f| f.zero_at == Some(m))
                        && self.den.iter().any(|f| f.zero_at == Some(m));
                    return Err(if both {
                        Error::Indeterminate(format!("zero over zero in the term ratio at index {m}"))
                    } else {
                        Error::Domain(format!("term beyond index {k} has a pole"))
                    });
                }
                _ => {}
            }

            if let Some(cap) = &ratio_cap {
                let tail_factor = cap / (Rational::one() - cap);
                let tail = term.abs_upper().to_rational() * &tail_factor;
                if &tail <= tail_eps {
                    let bound = match side {
                        Side::Up => self.bound_up(k),
                        Side::Down => self.bound_down(k),
                    };
                    if matches!(bound, Some(b) if &b <= cap) {
                        return Ok(total.widen(&BigFloat::rational_upper(&tail, 64)));
                    }
                }
            }
            if count >= policy.max_terms {
                return Err(Error::MaxTermsExceeded { side: side.name(), terms: count });
            }

            let factor_product = |cs: &[ApproxValue], fs: &[LinearFactor]| -> ApproxValue {
                let mut acc = one.clone();
                let mut q2: Option<ApproxValue> = None;
                for (c, f) in cs.iter().zip(fs) {
                    let p = match f.step {
                        1 => qm.clone(),
                        2 => q2.get_or_insert_with(|| qm.mul(&qm)).clone(),
                        s => qm.powi(s as u64),
                    };
                    acc = acc.mul(&one.sub(&c.mul(&p)));
                }
                acc
            };
            let num = factor_product(&num_c, &self.num);
            let den = factor_product(&den_c, &self.den);
            let mut fwd = constant.clone();
            if self.slope != 0 {
                fwd = fwd.mul(&qm.powi(self.slope as u64));
            }
            let fwd_num = fwd.mul(&num);

            term = match side {
                Side::Up => term.mul(&fwd_num).div(&den)?,
                Side::Down => term.mul(&den).div(&fwd_num)?,
            };
            total = total.add(&term);
            count += 1;
            match side {
                Side::Up => {
                    k += 1;
                    qm = qm.mul(&q);
                }
                Side::Down => k -= 1,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Up,
    Down,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Up => "upper",
            Side::Down => "lower",
        }
    }
}
