//! Unilateral and bilateral basic hypergeometric series.
//!
//! Terminating instances are summed exactly in ℚ. Everything else goes
//! through the ratio engine in [`engine`], which certifies the truncation.
//! Very-well-poised series never carry square roots: the columns
//! `q√a, -q√a / √a, -√a` are folded into the rational prefactor
//! `(1 - a q^{2k}) / (1 - a)`.

pub(crate) mod engine;

use num_traits::{One, Signed, Zero};

use self::engine::{LinearFactor, RatioModel, Stop};
use crate::error::{domain, Error, Result};
use crate::numerics::{int, ApproxValue, PrecisionContext, Rational};
use crate::qfactorial::{poch_int, PochValue, QBase};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Unilateral,
    Bilateral,
}

/// `sφ(s-1)` (unilateral) or `sψs` (bilateral) with rational parameters.
///
/// For unilateral series the `(q;q)_k` denominator is implicit and not part
/// of `lower`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSpec {
    kind: SeriesKind,
    upper: Vec<Rational>,
    lower: Vec<Rational>,
    arg: Rational,
    base: QBase,
}

impl SeriesSpec {
    pub fn new(
        kind: SeriesKind,
        upper: Vec<Rational>,
        lower: Vec<Rational>,
        arg: Rational,
        base: QBase,
    ) -> Result<Self> {
        let expected = match kind {
            SeriesKind::Unilateral => upper.len().checked_sub(1),
            SeriesKind::Bilateral => Some(upper.len()),
        };
        if expected != Some(lower.len()) {
            return domain(format!(
                "{kind:?} series with {} upper parameters cannot take {} lower parameters",
                upper.len(),
                lower.len()
            ));
        }
        for b in &lower {
            if let Some(j) = base.exponent_of(b) {
                if j <= 0 {
                    return domain(format!(
                        "lower parameter {b} equals q^{j}: the denominator factorial vanishes"
                    ));
                }
            }
        }
        Ok(SeriesSpec { kind, upper, lower, arg, base })
    }

    pub fn bilateral(upper: Vec<Rational>, lower: Vec<Rational>, arg: Rational, base: QBase) -> Result<Self> {
        SeriesSpec::new(SeriesKind::Bilateral, upper, lower, arg, base)
    }

    pub fn unilateral(upper: Vec<Rational>, lower: Vec<Rational>, arg: Rational, base: QBase) -> Result<Self> {
        SeriesSpec::new(SeriesKind::Unilateral, upper, lower, arg, base)
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn upper(&self) -> &[Rational] {
        &self.upper
    }

    pub fn lower(&self) -> &[Rational] {
        &self.lower
    }

    pub fn arg(&self) -> &Rational {
        &self.arg
    }

    pub fn base(&self) -> &QBase {
        &self.base
    }

    pub(crate) fn model(&self) -> RatioModel {
        let b = &self.base;
        let mut den: Vec<LinearFactor> =
            self.lower.iter().map(|x| LinearFactor::new(x.clone(), 1, 0, b)).collect();
        if self.kind == SeriesKind::Unilateral {
            den.push(LinearFactor::new(b.q().clone(), 1, 0, b));
        }
        RatioModel {
            num: self.upper.iter().map(|x| LinearFactor::new(x.clone(), 1, 0, b)).collect(),
            den,
            constant: self.arg.clone(),
            slope: 0,
            base: b.clone(),
            floor: false,
        }
    }
}

/// Very-well-poised series with special parameter `a`: lower parameters are
/// `aq/t` for each `t` in `tail`, and the term carries `(1 - aq^{2k})/(1 - a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VWPSpec {
    a: Rational,
    tail: Vec<Rational>,
    arg: Rational,
    base: QBase,
}

impl VWPSpec {
    pub fn new(a: Rational, tail: Vec<Rational>, arg: Rational, base: QBase) -> Result<Self> {
        if a.is_zero() {
            return domain("very-well-poised parameter a must be nonzero");
        }
        let unit_limit = a.is_one() && tail.iter().any(|t| t.is_one());
        if let Some(j) = base.exponent_of(&a) {
            if j % 2 == 0 && !unit_limit {
                return domain(format!(
                    "very-well-poised parameter a = q^{j}: the prefactor (1 - a q^2k)/(1 - a) degenerates"
                ));
            }
        }
        for t in &tail {
            if t.is_zero() {
                return domain("very-well-poised tail parameter must be nonzero");
            }
            let low = &a * base.q() / t;
            if let Some(j) = base.exponent_of(&low) {
                if j <= 0 {
                    return domain(format!(
                        "lower parameter aq/{t} equals q^{j}: the denominator factorial vanishes"
                    ));
                }
            }
        }
        Ok(VWPSpec { a, tail, arg, base })
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn tail(&self) -> &[Rational] {
        &self.tail
    }

    pub fn arg(&self) -> &Rational {
        &self.arg
    }

    pub fn base(&self) -> &QBase {
        &self.base
    }

    /// Same series up to the order of the tail parameters.
    pub fn equivalent(&self, other: &VWPSpec) -> bool {
        let mut x = self.tail.clone();
        let mut y = other.tail.clone();
        x.sort();
        y.sort();
        self.a == other.a && self.arg == other.arg && self.base == other.base && x == y
    }

    /// Lower parameters `aq/t`.
    pub fn lower(&self) -> Vec<Rational> {
        self.tail.iter().map(|t| &self.a * self.base.q() / t).collect()
    }

    /// The same series written with explicit `±q√a / ±√a` columns; only
    /// possible when `a` is the square of a rational.
    pub fn expand(&self) -> Option<Result<SeriesSpec>> {
        let root = rational_sqrt(&self.a)?;
        let q = self.base.q();
        let mut upper = vec![q * &root, -(q * &root)];
        upper.extend(self.tail.iter().cloned());
        let mut lower = vec![root.clone(), -root];
        lower.extend(self.lower());
        Some(SeriesSpec::bilateral(upper, lower, self.arg.clone(), self.base.clone()))
    }

    /// `a = 1` with `1` in the tail: the unilateral limit in which
    /// `(a;q)_k / (1 - a)` becomes `(q;q)_{k-1}` and the term picks up
    /// `1 + q^k` for `k >= 1`.
    fn unit_limit(&self) -> bool {
        self.a.is_one()
    }

    /// For the unit limit the model describes `u_k` with `u_0 = 1` and
    /// `u_k = t_k / 2` for `k >= 1`, so that the sum is `2 Σu - 1`.
    pub(crate) fn model(&self) -> RatioModel {
        let b = &self.base;
        let mut tail = self.tail.clone();
        let (lead_num, lead_den) = if self.unit_limit() {
            let pos = tail.iter().position(|t| t.is_one()).expect("checked in new");
            tail.remove(pos);
            (LinearFactor::new(-Rational::one(), 1, 1, b), LinearFactor::new(-Rational::one(), 1, 0, b))
        } else {
            (LinearFactor::new(self.a.clone(), 2, 2, b), LinearFactor::new(self.a.clone(), 2, 0, b))
        };
        let mut num: Vec<LinearFactor> = tail.iter().map(|t| LinearFactor::new(t.clone(), 1, 0, b)).collect();
        num.push(lead_num);
        // in the unit limit the lower q of the removed tail entry cancels too
        let mut den: Vec<LinearFactor> =
            tail.iter().map(|t| LinearFactor::new(&self.a * b.q() / t, 1, 0, b)).collect();
        den.push(lead_den);
        RatioModel {
            num,
            den,
            constant: self.arg.clone(),
            slope: 0,
            base: b.clone(),
            floor: self.unit_limit(),
        }
    }
}

fn rational_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let n = num_integer::Roots::sqrt(x.numer());
    let d = num_integer::Roots::sqrt(x.denom());
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Cut-off policy for nonterminating sums.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationPolicy {
    /// Per side.
    pub max_terms: usize,
    pub target_eps: Rational,
    /// Added to the limiting ratio to get the certified ratio; `None` means
    /// halfway between the limit and one.
    pub ratio_margin: Option<Rational>,
}

impl TruncationPolicy {
    pub fn new(max_terms: usize, target_eps: Rational, ratio_margin: Option<Rational>) -> Result<Self> {
        if max_terms == 0 {
            return domain("max_terms must be at least 1");
        }
        if target_eps <= Rational::zero() {
            return domain("target_eps must be positive");
        }
        if let Some(m) = &ratio_margin {
            if *m <= Rational::zero() || *m >= Rational::one() {
                return domain("ratio_margin must lie in (0, 1)");
            }
        }
        Ok(TruncationPolicy { max_terms, target_eps, ratio_margin })
    }

    pub(crate) fn certified_ratio(&self, limit: &Rational) -> Rational {
        let one = Rational::one();
        let halfway = (limit + &one) / int(2);
        match &self.ratio_margin {
            Some(m) if limit + m < one => limit + m,
            _ => halfway,
        }
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            max_terms: 10_000,
            target_eps: PrecisionContext::default().target_eps,
            ratio_margin: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermValue {
    pub value: Rational,
    /// A vanishing numerator or a denominator pole forced the term to zero.
    pub annihilated: bool,
}

impl TermValue {
    fn annihilated() -> Self {
        TermValue { value: Rational::zero(), annihilated: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceDomain {
    Converges,
    DivergesAbove,
    DivergesBelow,
    Terminating,
}

/// Combines factorial values into one term.
///
/// Order: a vanishing numerator wins over a denominator pole; 0/0 and ∞/∞
/// are indeterminate; an unmatched numerator pole or denominator zero is a
/// domain error.
fn resolve_term(nums: &[PochValue], dens: &[PochValue], scalar: Rational) -> Result<TermValue> {
    let num_zero = scalar.is_zero() || nums.iter().any(PochValue::is_zero);
    let num_pole = nums.contains(&PochValue::Pole);
    let den_zero = dens.iter().any(PochValue::is_zero);
    let den_pole = dens.contains(&PochValue::Pole);
    if num_zero && den_zero {
        return Err(Error::Indeterminate(
            "numerator and denominator factorials vanish together".into(),
        ));
    }
    if num_zero {
        return Ok(TermValue::annihilated());
    }
    if num_pole && den_pole {
        return Err(Error::Indeterminate("poles in both numerator and denominator".into()));
    }
    if den_pole {
        return Ok(TermValue::annihilated());
    }
    if num_pole {
        return domain("numerator factorial has a pole: the term is unbounded");
    }
    if den_zero {
        return domain("denominator factorial vanishes");
    }
    let mut v = scalar;
    for n in nums.iter().filter_map(PochValue::finite) {
        v *= n;
    }
    for d in dens.iter().filter_map(PochValue::finite) {
        v /= d;
    }
    Ok(TermValue { value: v, annihilated: false })
}

fn arg_power(arg: &Rational, k: i64) -> Result<Rational> {
    if arg.is_zero() && k < 0 {
        return domain("argument 0 raised to a negative power");
    }
    crate::numerics::rational_pow(arg, k)
}

/// Exact `k`-th term.
pub fn term(spec: &SeriesSpec, k: i64) -> Result<TermValue> {
    if spec.kind == SeriesKind::Unilateral && k < 0 {
        return domain("unilateral series have no terms below k = 0");
    }
    let b = &spec.base;
    let nums: Vec<PochValue> = spec.upper.iter().map(|a| poch_int(a, k, b)).collect();
    let mut dens: Vec<PochValue> = spec.lower.iter().map(|a| poch_int(a, k, b)).collect();
    if spec.kind == SeriesKind::Unilateral {
        dens.push(poch_int(b.q(), k, b));
    }
    resolve_term(&nums, &dens, arg_power(&spec.arg, k)?)
}

/// Exact `k`-th term of a very-well-poised series.
pub fn vwp_term(spec: &VWPSpec, k: i64) -> Result<TermValue> {
    let b = &spec.base;
    if spec.unit_limit() {
        if k == 0 {
            return Ok(TermValue { value: Rational::one(), annihilated: false });
        }
        if k < 0 {
            // the lower parameter q has a pole
            return Ok(TermValue::annihilated());
        }
        let mut tail = spec.tail.clone();
        let pos = tail.iter().position(|t| t.is_one()).expect("checked in new");
        tail.remove(pos);
        let lower: Vec<Rational> = tail.iter().map(|t| b.q() / t).collect();
        let nums: Vec<PochValue> = tail.iter().map(|t| poch_int(t, k, b)).collect();
        let mut dens: Vec<PochValue> = lower.iter().map(|l| poch_int(l, k, b)).collect();
        // (q;q)_{k-1} / (q;q)_k
        dens.push(PochValue::Finite(Rational::one() - b.pow(k)));
        let pre = Rational::one() - b.pow(2 * k);
        return resolve_term(&nums, &dens, pre * arg_power(&spec.arg, k)?);
    }
    let pre = (Rational::one() - &spec.a * b.pow(2 * k)) / (Rational::one() - &spec.a);
    let nums: Vec<PochValue> = spec.tail.iter().map(|t| poch_int(t, k, b)).collect();
    let dens: Vec<PochValue> = spec.lower().iter().map(|l| poch_int(l, k, b)).collect();
    resolve_term(&nums, &dens, pre * arg_power(&spec.arg, k)?)
}

fn domain_of(model: &RatioModel) -> ConvergenceDomain {
    let above = model.stop_above();
    let below = model.stop_below();
    if matches!(above, Stop::Terminates(_)) && matches!(below, Stop::Terminates(_)) {
        return ConvergenceDomain::Terminating;
    }
    let one = Rational::one();
    let below_ok = matches!(below, Stop::Terminates(_)) || matches!(model.limit_down(), Some(l) if l < one);
    let above_ok = matches!(above, Stop::Terminates(_)) || matches!(model.limit_up(), Some(l) if l < one);
    if !below_ok {
        ConvergenceDomain::DivergesBelow
    } else if !above_ok {
        ConvergenceDomain::DivergesAbove
    } else {
        ConvergenceDomain::Converges
    }
}

/// Ratio-test classification of a series.
///
/// For a bilateral series with nonzero parameters this is
/// `|∏lower/∏upper| < |arg| < 1`; a side that terminates exactly needs no
/// condition.
pub fn convergence_domain(spec: &SeriesSpec) -> ConvergenceDomain {
    domain_of(&spec.model())
}

pub fn vwp_convergence_domain(spec: &VWPSpec) -> ConvergenceDomain {
    domain_of(&spec.model())
}

fn worst_ratio(model: &RatioModel) -> Option<Rational> {
    let up = match model.stop_above() {
        Stop::Terminates(_) => Rational::zero(),
        _ => model.limit_up()?,
    };
    let down = match model.stop_below() {
        Stop::Terminates(_) => Rational::zero(),
        _ => model.limit_down()?,
    };
    Some(if up > down { up } else { down })
}

impl SeriesSpec {
    /// Largest limiting `|t(k±1)/t(k)|` over the sides that do not
    /// terminate; zero for a terminating series and `None` when a side
    /// grows faster than geometrically.
    pub fn limiting_ratio(&self) -> Option<Rational> {
        worst_ratio(&self.model())
    }
}

impl VWPSpec {
    pub fn limiting_ratio(&self) -> Option<Rational> {
        worst_ratio(&self.model())
    }
}

fn terminating_range(model: &RatioModel) -> Result<(i64, i64)> {
    match (model.stop_below(), model.stop_above()) {
        (Stop::Terminates(lo), Stop::Terminates(hi)) => Ok((lo, hi)),
        (Stop::Blocked(m), _) | (_, Stop::Blocked(m)) => {
            domain(format!("series hits a pole at index {m} before terminating"))
        }
        _ => domain("series does not terminate on both sides"),
    }
}

/// Exact sum of a series that terminates in both directions (for a
/// unilateral series: has an upper parameter `q^{-n}`).
pub fn eval_terminating(spec: &SeriesSpec) -> Result<Rational> {
    let (lo, hi) = terminating_range(&spec.model())?;
    let mut total = Rational::zero();
    for k in lo..=hi {
        total += term(spec, k)?.value;
    }
    Ok(total)
}

pub fn eval_vwp_terminating(spec: &VWPSpec) -> Result<Rational> {
    let (lo, hi) = terminating_range(&spec.model())?;
    let mut total = Rational::zero();
    for k in lo..=hi {
        total += vwp_term(spec, k)?.value;
    }
    Ok(total)
}

fn check_summable(d: ConvergenceDomain) -> Result<()> {
    match d {
        ConvergenceDomain::Converges | ConvergenceDomain::Terminating => Ok(()),
        ConvergenceDomain::DivergesAbove => domain("series diverges above: |arg| >= 1"),
        ConvergenceDomain::DivergesBelow => {
            domain("series diverges below: |prod lower / prod upper| >= |arg|")
        }
    }
}

/// Certified two-sided sum.
pub fn eval_bilateral(
    spec: &SeriesSpec,
    policy: &TruncationPolicy,
    ctx: &PrecisionContext,
) -> Result<ApproxValue> {
    let model = spec.model();
    check_summable(domain_of(&model))?;
    model.sum(policy, ctx)
}

pub fn eval_vwp_bilateral(
    spec: &VWPSpec,
    policy: &TruncationPolicy,
    ctx: &PrecisionContext,
) -> Result<ApproxValue> {
    let model = spec.model();
    check_summable(domain_of(&model))?;
    let u = model.sum(policy, ctx)?;
    if spec.unit_limit() {
        let two = ApproxValue::from_rational(&int(2), ctx.bits);
        return Ok(u.mul(&two).sub(&ApproxValue::one(ctx.bits)));
    }
    Ok(u)
}

/// `sum_k (-1)^k q^{k(k-1)/2} z^k`, the sum side of the triple product.
pub fn eval_theta_sum(
    z: &Rational,
    base: &QBase,
    policy: &TruncationPolicy,
    ctx: &PrecisionContext,
) -> Result<ApproxValue> {
    if z.is_zero() {
        return domain("theta sum needs z != 0");
    }
    let model = RatioModel { num: vec![], den: vec![], constant: -z, slope: 1, base: base.clone(), floor: false };
    model.sum(policy, ctx)
}

/// Exact `(-1)^k q^{k(k-1)/2} z^k`.
pub fn theta_term(z: &Rational, k: i64, base: &QBase) -> Result<Rational> {
    let sign = if k.rem_euclid(2) == 0 { int(1) } else { int(-1) };
    Ok(sign * base.pow(k * (k - 1) / 2) * arg_power(z, k)?)
}

#[cfg(test)]
mod tests;
