//! Exact rational scalars and the helpers built on them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};

/// Arbitrary-precision rational, always stored reduced with a positive
/// denominator.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact `x^k` for any integer `k`.
pub fn rational_pow(x: &Rational, k: i64) -> Result<Rational> {
    if k == 0 {
        return Ok(Rational::one());
    }
    if x.is_zero() {
        if k < 0 {
            return domain("zero raised to a negative power");
        }
        return Ok(Rational::zero());
    }
    let base = if k < 0 { x.recip() } else { x.clone() };
    let e = k.unsigned_abs();
    let numer = num_traits::pow::Pow::pow(base.numer(), e);
    let denom = num_traits::pow::Pow::pow(base.denom(), e);
    // Powers of a reduced fraction stay reduced.
    Ok(Rational::new_raw(numer, denom))
}

/// Approximate `log2|x|` for nonzero `x`, accurate to a few ulps of f64
/// whatever the size of the numerator and denominator.
pub fn log2_abs(x: &Rational) -> f64 {
    log2_int(x.numer()) - log2_int(x.denom())
}

fn log2_int(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 60 {
        return n.abs().to_f64().unwrap_or(f64::MAX).log2();
    }
    let shift = bits - 60;
    let top = (n.abs() >> shift).to_f64().unwrap_or(f64::MAX);
    top.log2() + shift as f64
}

/// Returns `j` with `x == q^j` exactly, if such an integer exists.
pub fn q_exponent(x: &Rational, q: &Rational) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    if x.is_one() {
        return Some(0);
    }
    let lq = log2_abs(q);
    if lq == 0.0 {
        return None;
    }
    let guess = (log2_abs(x) / lq).round();
    if !guess.is_finite() || guess.abs() > 1.0e7 {
        return None;
    }
    let j = guess as i64;
    (j - 1..=j + 1).find(|&cand| rational_pow(q, cand).map(|p| &p == x).unwrap_or(false))
}

/// Parses `p/q`, an integer, or a decimal such as `-2.5e-3`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{whole}{frac}");
    let n: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
    let scale = exp - frac.len() as i64;
    let ten = int(10);
    let mut r = Rational::from_integer(n) * rational_pow(&ten, scale)?;
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Prints `p/q`, or a bare integer when the denominator is one.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Nearest,
    /// Away from zero; used for error bounds.
    Up,
}

/// Scientific-notation decimal with `digits` significant digits.
pub fn format_scientific(x: &Rational, digits: usize, mode: Rounding) -> String {
    let digits = digits.max(1);
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let ax = x.abs();
    let ten = int(10);
    // 10^e <= ax < 10^(e+1)
    let mut e = (log2_abs(&ax) * std::f64::consts::LOG10_2).floor() as i64;
    loop {
        let lo = rational_pow(&ten, e).expect("nonzero base");
        if ax < lo {
            e -= 1;
            continue;
        }
        if ax >= &lo * &ten {
            e += 1;
            continue;
        }
        break;
    }
    let scale = rational_pow(&ten, digits as i64 - 1 - e).expect("nonzero base");
    let scaled = ax * scale;
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let mut m = q;
    let bump = match mode {
        Rounding::Nearest => (&r << 1usize) >= *scaled.denom(),
        Rounding::Up => !r.is_zero(),
    };
    if bump {
        m += 1;
    }
    let mut s = m.to_string();
    if s.len() > digits {
        s.truncate(digits);
        e += 1;
    }
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(&s[..1]);
    let tail = s[1..].trim_end_matches('0');
    if !tail.is_empty() {
        out.push('.');
        out.push_str(tail);
    }
    if e != 0 {
        out.push_str(&format!("e{e}"));
    }
    out
}
