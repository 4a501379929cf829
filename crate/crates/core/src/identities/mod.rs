//! Catalog of classical summations and transformations, each with exact or
//! certified evaluators for both sides and a verifier.
//!
//! Terminating identities (I3, I4, I6, I7) are checked in exact rational
//! arithmetic. The bilateral ones are checked with certified enclosures.

mod sample;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::error::{domain, Error, Result};
use crate::numerics::{
    format_rational, format_scientific, ApproxValue, PrecisionContext, Rational, Rounding,
};
use crate::qfactorial::{infinite_vanishes, poch_finite, poch_infinite, QBase};
use crate::series::{
    convergence_domain, eval_bilateral, eval_terminating, eval_theta_sum, eval_vwp_bilateral,
    eval_vwp_terminating, vwp_convergence_domain, ConvergenceDomain, SeriesSpec, TruncationPolicy,
    VWPSpec,
};

pub use sample::{sample_valid_instance, SAMPLE_BOUND};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityId {
    /// Ramanujan's 1psi1 summation.
    I1,
    /// Bailey's very-well-poised 6psi6 summation.
    I2,
    /// q-Pfaff-Saalschütz summation.
    I3,
    /// Terminating q-binomial theorem.
    I4,
    /// Jacobi triple product.
    I5,
    /// Jackson's terminating 8phi7 summation.
    I6,
    /// Bailey's terminating 10phi9 transformation.
    I7,
    /// 6psi6 transformation with one extra parameter `b`.
    I8,
    /// The 6psi6 transformation applied twice, extra parameters `b`, `b'`.
    I9,
}

impl IdentityId {
    pub const ALL: [IdentityId; 9] = [
        IdentityId::I1,
        IdentityId::I2,
        IdentityId::I3,
        IdentityId::I4,
        IdentityId::I5,
        IdentityId::I6,
        IdentityId::I7,
        IdentityId::I8,
        IdentityId::I9,
    ];

    pub fn code(self) -> &'static str {
        match self {
            IdentityId::I1 => "I1",
            IdentityId::I2 => "I2",
            IdentityId::I3 => "I3",
            IdentityId::I4 => "I4",
            IdentityId::I5 => "I5",
            IdentityId::I6 => "I6",
            IdentityId::I7 => "I7",
            IdentityId::I8 => "I8",
            IdentityId::I9 => "I9",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::I1 => "I1_1psi1",
            IdentityId::I2 => "I2_6psi6",
            IdentityId::I3 => "I3_qPfaffSaalschutz",
            IdentityId::I4 => "I4_qBinomial",
            IdentityId::I5 => "I5_TripleProduct",
            IdentityId::I6 => "I6_Jackson8phi7",
            IdentityId::I7 => "I7_Bailey10phi9",
            IdentityId::I8 => "I8_Transform6psi6",
            IdentityId::I9 => "I9_IteratedTransform",
        }
    }

    /// Free rational parameters, `n` excluded.
    pub fn params(self) -> &'static [&'static str] {
        match self {
            IdentityId::I1 => &["a", "b", "z"],
            IdentityId::I2 => &["a", "b", "c", "d", "e"],
            IdentityId::I3 => &["a", "b", "c"],
            IdentityId::I4 => &["z"],
            IdentityId::I5 => &["z"],
            IdentityId::I6 => &["a", "b", "c", "d"],
            IdentityId::I7 => &["a", "b", "c", "d", "e", "f"],
            IdentityId::I8 => &["a", "b", "c", "d", "e", "f"],
            IdentityId::I9 => &["a", "b", "c", "d", "e", "f", "b'"],
        }
    }

    /// Whether the identity carries the truncation order `n`.
    pub fn is_terminating(self) -> bool {
        matches!(self, IdentityId::I3 | IdentityId::I4 | IdentityId::I6 | IdentityId::I7)
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityId::ALL
            .into_iter()
            .find(|id| s.eq_ignore_ascii_case(id.code()) || s.eq_ignore_ascii_case(id.name()))
            .ok_or_else(|| Error::Parse(format!("unknown identity {s:?}; expected one of I1..I9")))
    }
}

/// An identity together with a parameter point. Derived parameters such as
/// `λ` are recomputed on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityInstance {
    id: IdentityId,
    params: BTreeMap<String, Rational>,
    n: Option<u64>,
    base: QBase,
}

impl IdentityInstance {
    pub fn new(id: IdentityId, params: BTreeMap<String, Rational>, n: Option<u64>, base: QBase) -> Result<Self> {
        let expected = id.params();
        for name in expected {
            if !params.contains_key(*name) {
                return Err(Error::InvalidInstance(format!("{id} needs parameter {name}")));
            }
        }
        if let Some(extra) = params.keys().find(|k| !expected.contains(&k.as_str())) {
            return Err(Error::InvalidInstance(format!("{id} does not take parameter {extra}")));
        }
        match (id.is_terminating(), n) {
            (true, None) => return Err(Error::InvalidInstance(format!("{id} needs n"))),
            (false, Some(_)) => return Err(Error::InvalidInstance(format!("{id} does not take n"))),
            _ => {}
        }
        Ok(IdentityInstance { id, params, n, base })
    }

    pub fn from_pairs(id: IdentityId, pairs: &[(&str, Rational)], n: Option<u64>, base: QBase) -> Result<Self> {
        let params = pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        IdentityInstance::new(id, params, n, base)
    }

    pub fn id(&self) -> IdentityId {
        self.id
    }

    pub fn params(&self) -> &BTreeMap<String, Rational> {
        &self.params
    }

    pub fn n(&self) -> Option<u64> {
        self.n
    }

    pub fn base(&self) -> &QBase {
        &self.base
    }

    /// A parameter the identity is known to take.
    pub fn get(&self, name: &str) -> &Rational {
        &self.params[name]
    }

    /// `λ = qa²/bcd` for I7, I8 and I9.
    pub fn lambda(&self) -> Option<Rational> {
        if !matches!(self.id, IdentityId::I7 | IdentityId::I8 | IdentityId::I9) {
            return None;
        }
        let den = self.get("b") * self.get("c") * self.get("d");
        if den.is_zero() {
            return None;
        }
        let a = self.get("a");
        Some(self.base.q() * a * a / den)
    }

    /// `λ' = aqλ/b'ce` for I9.
    pub fn lambda_prime(&self) -> Option<Rational> {
        if self.id != IdentityId::I9 {
            return None;
        }
        let lam = self.lambda()?;
        let den = self.get("b'") * self.get("c") * self.get("e");
        if den.is_zero() {
            return None;
        }
        Some(self.get("a") * self.base.q() * lam / den)
    }

    fn n_i64(&self) -> i64 {
        self.n.unwrap_or(0) as i64
    }
}

/// A value that is either exact or a certified enclosure.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Approx(ApproxValue),
}

impl Value {
    pub fn to_approx(&self, bits: u32) -> ApproxValue {
        match self {
            Value::Exact(x) => ApproxValue::from_rational(x, bits),
            Value::Approx(v) => v.clone(),
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Value::Exact(x) => Some(x),
            Value::Approx(_) => None,
        }
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(x), Value::Exact(y)) => Value::Exact(x * y),
            (Value::Exact(x), Value::Approx(v)) | (Value::Approx(v), Value::Exact(x)) => {
                if x.is_one() {
                    Value::Approx(v.clone())
                } else {
                    Value::Approx(v.mul_rational(x))
                }
            }
            (Value::Approx(u), Value::Approx(v)) => Value::Approx(u.mul(v)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(x) => f.write_str(&format_rational(x)),
            Value::Approx(v) => write!(f, "{v}"),
        }
    }
}

/// `(num_1, num_2, ...)_N / (den_1, den_2, ...)_N` with factors common to
/// both lists cancelled. `N` is supplied at evaluation time (finite or ∞).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorRatio {
    num: Vec<Rational>,
    den: Vec<Rational>,
    cancelled: Vec<Rational>,
}

impl FactorRatio {
    pub fn new(num: Vec<Rational>, den: Vec<Rational>) -> Self {
        let mut num = num;
        let mut den = den;
        num.sort();
        den.sort();
        let (mut i, mut j) = (0, 0);
        let (mut keep_num, mut keep_den, mut cancelled) = (Vec::new(), Vec::new(), Vec::new());
        while i < num.len() && j < den.len() {
            match num[i].cmp(&den[j]) {
                std::cmp::Ordering::Equal => {
                    cancelled.push(num[i].clone());
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Less => {
                    keep_num.push(num[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    keep_den.push(den[j].clone());
                    j += 1;
                }
            }
        }
        keep_num.extend_from_slice(&num[i..]);
        keep_den.extend_from_slice(&den[j..]);
        FactorRatio { num: keep_num, den: keep_den, cancelled }
    }

    pub fn num(&self) -> &[Rational] {
        &self.num
    }

    pub fn den(&self) -> &[Rational] {
        &self.den
    }

    /// Every factor argument, cancelled ones included.
    pub(crate) fn all_factors(&self) -> impl Iterator<Item = &Rational> {
        self.num.iter().chain(&self.den).chain(&self.cancelled)
    }

    /// Whether every factor cancelled.
    pub fn is_one(&self) -> bool {
        self.num.is_empty() && self.den.is_empty()
    }

    /// Product of two ratios, cancelled again.
    pub fn compose(&self, other: &FactorRatio) -> FactorRatio {
        let mut num = self.num.clone();
        num.extend(self.cancelled.iter().cloned());
        num.extend(other.num.iter().cloned());
        num.extend(other.cancelled.iter().cloned());
        let mut den = self.den.clone();
        den.extend(self.cancelled.iter().cloned());
        den.extend(other.den.iter().cloned());
        den.extend(other.cancelled.iter().cloned());
        FactorRatio::new(num, den)
    }

    /// Exact value with every factorial of order `n`.
    pub fn eval_finite(&self, n: u64, base: &QBase) -> Result<Rational> {
        if self.cancelled.iter().any(|x| poch_finite(x, n, base).is_zero()) {
            return Err(Error::Indeterminate(format!("a cancelled factorial of order {n} vanishes")));
        }
        let mut den = Rational::one();
        for x in &self.den {
            let v = poch_finite(x, n, base);
            if v.is_zero() {
                return domain(format!("({};q)_{n} vanishes in a denominator", format_rational(x)));
            }
            den *= v;
        }
        let num = self.num.iter().fold(Rational::one(), |acc, x| acc * poch_finite(x, n, base));
        Ok(num / den)
    }

    /// Certified value with every factorial of infinite order.
    pub fn eval_infinite(&self, base: &QBase, ctx: &PrecisionContext) -> Result<Value> {
        if self.cancelled.iter().any(|x| infinite_vanishes(x, base)) {
            return Err(Error::Indeterminate("a cancelled infinite product vanishes".into()));
        }
        if let Some(x) = self.den.iter().find(|x| infinite_vanishes(x, base)) {
            return domain(format!("({};q)_∞ vanishes in a denominator", format_rational(x)));
        }
        if self.num.iter().any(|x| infinite_vanishes(x, base)) {
            return Ok(Value::Exact(Rational::zero()));
        }
        if self.is_one() {
            return Ok(Value::Exact(Rational::one()));
        }
        // generous headroom: the products can be large
        let count = (self.num.len() + self.den.len()) as i64;
        let each = ctx.with_eps(&ctx.target_eps / Rational::from_integer((count << 20).into()));
        let mut num = ApproxValue::one(ctx.bits);
        for x in &self.num {
            num = num.mul(&poch_infinite(x, base, &each));
        }
        let mut den = ApproxValue::one(ctx.bits);
        for x in &self.den {
            den = den.mul(&poch_infinite(x, base, &each));
        }
        Ok(Value::Approx(num.div(&den)?))
    }
}

/// The right side of a transformation: a factor ratio times a
/// very-well-poised series.
#[derive(Clone, Debug, PartialEq)]
pub struct Transformed {
    pub prefactor: FactorRatio,
    pub series: VWPSpec,
}

fn nonzero(inst: &IdentityInstance) -> Result<()> {
    for (name, v) in &inst.params {
        if v.is_zero() && !(inst.id == IdentityId::I4 && name == "z") {
            return domain(format!("parameter {name} must be nonzero"));
        }
    }
    Ok(())
}

/// The bilateral (or unilateral) series on the left of I8 and I9.
pub(crate) fn transform_lhs(inst: &IdentityInstance) -> Result<VWPSpec> {
    let q = inst.base.q();
    let (a, c, d, e, f) = (inst.get("a"), inst.get("c"), inst.get("d"), inst.get("e"), inst.get("f"));
    let arg = q * a * a / (c * d * e * f);
    VWPSpec::new(a.clone(), vec![c.clone(), d.clone(), e.clone(), f.clone()], arg, inst.base.clone())
}

fn transform_arg(inst: &IdentityInstance) -> Rational {
    let (a, c, d, e, f) = (inst.get("a"), inst.get("c"), inst.get("d"), inst.get("e"), inst.get("f"));
    inst.base.q() * a * a / (c * d * e * f)
}

/// Prefactor and series on the right of I7, I8 or I9.
pub fn transform_parts(inst: &IdentityInstance) -> Result<Transformed> {
    nonzero(inst)?;
    let q = inst.base.q().clone();
    let base = inst.base.clone();
    let p = |s: &str| inst.get(s).clone();
    match inst.id {
        IdentityId::I7 => {
            let (a, b, c, d, e, f) = (p("a"), p("b"), p("c"), p("d"), p("e"), p("f"));
            let lam = inst.lambda().expect("I7 has λ");
            let n = inst.n_i64();
            let aq = &a * &q;
            let prefactor = FactorRatio::new(
                vec![aq.clone(), &aq / (&e * &f), &lam * &q / &e, &lam * &q / &f],
                vec![&aq / &e, &aq / &f, &lam * &q / (&e * &f), &lam * &q],
            );
            let tail = vec![
                lam.clone(),
                &lam * &b / &a,
                &lam * &c / &a,
                &lam * &d / &a,
                e.clone(),
                f.clone(),
                &lam * &a * base.pow(n + 1) / (&e * &f),
                base.pow(-n),
            ];
            Ok(Transformed { prefactor, series: VWPSpec::new(lam, tail, q, base)? })
        }
        IdentityId::I8 => {
            let (a, b, c, d, e, f) = (p("a"), p("b"), p("c"), p("d"), p("e"), p("f"));
            let lam = inst.lambda().expect("I8 has λ");
            let aq = &a * &q;
            let lq = &lam * &q;
            let prefactor = FactorRatio::new(
                vec![
                    aq.clone(),
                    &q / &a,
                    &aq / (&e * &f),
                    &aq / (&c * &d),
                    &lq / &e,
                    &lq / &f,
                    &aq / (&lam * &c),
                    &aq / (&lam * &d),
                ],
                vec![&aq / &e, &aq / &f, &q / &c, &q / &d, lq.clone(), &q / &lam, &lq / (&e * &f), b],
            );
            let tail = vec![&lam * &c / &a, &lam * &d / &a, e, f];
            let series = VWPSpec::new(lam, tail, transform_arg(inst), base)?;
            Ok(Transformed { prefactor, series })
        }
        IdentityId::I9 => {
            let (a, b, c, d, e, f, bp) = (p("a"), p("b"), p("c"), p("d"), p("e"), p("f"), p("b'"));
            let lam = inst.lambda().expect("I9 has λ");
            let lp = inst.lambda_prime().expect("I9 has λ'");
            let aq = &a * &q;
            let lq = &lam * &q;
            let lpq = &lp * &q;
            let prefactor = FactorRatio::new(
                vec![
                    aq.clone(),
                    &q / &a,
                    &aq / (&e * &f),
                    &aq / (&c * &d),
                    &lq / &e,
                    &aq / (&lam * &d),
                    &aq / (&d * &f),
                    &aq / (&e * &c),
                    &a * &lpq / (&lam * &d),
                    &lpq / &f,
                    &aq / (&lp * &c),
                    &lq / (&lp * &e),
                ],
                vec![
                    &aq / &e,
                    &aq / &f,
                    &q / &c,
                    &q / &d,
                    &lq / (&e * &f),
                    b,
                    &aq / &d,
                    &q / &e,
                    lpq.clone(),
                    &q / &lp,
                    &a * &lpq / (&lam * &d * &f),
                    bp,
                ],
            );
            let tail = vec![&lp * &c / &a, &lp * &e / &lam, &lam * &d / &a, f];
            let series = VWPSpec::new(lp, tail, transform_arg(inst), base)?;
            Ok(Transformed { prefactor, series })
        }
        other => domain(format!("{other} is not a transformation")),
    }
}

/// Checks the instance against the identity's stated conditions and, for
/// every bilateral series involved, against the ratio test.
pub fn validate(inst: &IdentityInstance) -> Result<()> {
    nonzero(inst)?;
    let one = Rational::one();
    let converges = |d: ConvergenceDomain, what: &str| -> Result<()> {
        match d {
            ConvergenceDomain::Converges | ConvergenceDomain::Terminating => Ok(()),
            other => domain(format!("{what}: {other:?}")),
        }
    };
    match inst.id {
        IdentityId::I1 => {
            let (a, b, z) = (inst.get("a"), inst.get("b"), inst.get("z"));
            if !((b / a).abs() < z.abs() && z.abs() < one) {
                return domain("I1 needs |b/a| < |z| < 1");
            }
            converges(convergence_domain(&i1_series(inst)?), "1psi1 series")?;
        }
        IdentityId::I2 => {
            let arg = i2_arg(inst);
            if arg.abs() >= one {
                return domain("I2 needs |a²q/bcde| < 1");
            }
            converges(vwp_convergence_domain(&i2_series(inst)?), "6psi6 series")?;
        }
        IdentityId::I5 => {}
        IdentityId::I8 | IdentityId::I9 => {
            if transform_arg(inst).abs() >= one {
                return domain(format!("{} needs |qa²/cdef| < 1", inst.id));
            }
            converges(vwp_convergence_domain(&transform_lhs(inst)?), "left 6psi6")?;
            let parts = transform_parts(inst)?;
            converges(vwp_convergence_domain(&parts.series), "right 6psi6")?;
        }
        IdentityId::I3 | IdentityId::I4 | IdentityId::I6 | IdentityId::I7 => {
            if inst.n.is_none() {
                return domain(format!("{} needs n", inst.id));
            }
        }
    }
    Ok(())
}

pub(crate) fn i1_series(inst: &IdentityInstance) -> Result<SeriesSpec> {
    SeriesSpec::bilateral(
        vec![inst.get("a").clone()],
        vec![inst.get("b").clone()],
        inst.get("z").clone(),
        inst.base.clone(),
    )
}

fn i2_arg(inst: &IdentityInstance) -> Rational {
    let (a, b, c, d, e) = (inst.get("a"), inst.get("b"), inst.get("c"), inst.get("d"), inst.get("e"));
    inst.base.q() * a * a / (b * c * d * e)
}

pub(crate) fn i2_series(inst: &IdentityInstance) -> Result<VWPSpec> {
    let tail = ["b", "c", "d", "e"].iter().map(|s| inst.get(s).clone()).collect();
    VWPSpec::new(inst.get("a").clone(), tail, i2_arg(inst), inst.base.clone())
}

pub(crate) fn i3_series(inst: &IdentityInstance) -> Result<SeriesSpec> {
    let (a, b, c) = (inst.get("a"), inst.get("b"), inst.get("c"));
    let n = inst.n_i64();
    let base = &inst.base;
    SeriesSpec::unilateral(
        vec![a.clone(), b.clone(), base.pow(-n)],
        vec![c.clone(), a * b * base.pow(1 - n) / c],
        base.q().clone(),
        base.clone(),
    )
}

fn i4_series(inst: &IdentityInstance) -> Result<SeriesSpec> {
    let n = inst.n_i64();
    let base = &inst.base;
    SeriesSpec::unilateral(vec![base.pow(-n)], vec![], inst.get("z") * base.pow(n), base.clone())
}

fn i6_series(inst: &IdentityInstance) -> Result<VWPSpec> {
    let (a, b, c, d) = (inst.get("a"), inst.get("b"), inst.get("c"), inst.get("d"));
    let n = inst.n_i64();
    let base = &inst.base;
    let tail = vec![
        a.clone(),
        b.clone(),
        c.clone(),
        d.clone(),
        a * a * base.pow(n + 1) / (b * c * d),
        base.pow(-n),
    ];
    VWPSpec::new(a.clone(), tail, base.q().clone(), base.clone())
}

pub(crate) fn i7_series(inst: &IdentityInstance) -> Result<VWPSpec> {
    let p = |s: &str| inst.get(s).clone();
    let (a, b, c, d, e, f) = (p("a"), p("b"), p("c"), p("d"), p("e"), p("f"));
    let lam = inst.lambda().expect("I7 has λ");
    let n = inst.n_i64();
    let base = &inst.base;
    let last = &lam * &a * base.pow(n + 1) / (&e * &f);
    let tail = vec![a.clone(), b, c, d, e, f, last, base.pow(-n)];
    VWPSpec::new(a, tail, base.q().clone(), base.clone())
}

/// Left member of the identity.
pub fn lhs(inst: &IdentityInstance, policy: &TruncationPolicy, ctx: &PrecisionContext) -> Result<Value> {
    validate(inst)?;
    let base = &inst.base;
    Ok(match inst.id {
        IdentityId::I1 => Value::Approx(eval_bilateral(&i1_series(inst)?, policy, ctx)?),
        IdentityId::I2 => Value::Approx(eval_vwp_bilateral(&i2_series(inst)?, policy, ctx)?),
        IdentityId::I3 => Value::Exact(eval_terminating(&i3_series(inst)?)?),
        IdentityId::I4 => Value::Exact(eval_terminating(&i4_series(inst)?)?),
        IdentityId::I5 => Value::Approx(eval_theta_sum(inst.get("z"), base, policy, ctx)?),
        IdentityId::I6 => Value::Exact(eval_vwp_terminating(&i6_series(inst)?)?),
        IdentityId::I7 => Value::Exact(eval_vwp_terminating(&i7_series(inst)?)?),
        IdentityId::I8 | IdentityId::I9 => {
            Value::Approx(eval_vwp_bilateral(&transform_lhs(inst)?, policy, ctx)?)
        }
    })
}

/// The infinite-product side of I1, I2 and I5. Parameters must be nonzero.
pub(crate) fn closed_form(inst: &IdentityInstance) -> Option<FactorRatio> {
    let q = inst.base.q().clone();
    let p = |s: &str| inst.get(s).clone();
    Some(match inst.id {
        IdentityId::I1 => {
            let (a, b, z) = (p("a"), p("b"), p("z"));
            let az = &a * &z;
            FactorRatio::new(
                vec![q.clone(), &b / &a, az.clone(), &q / &az],
                vec![b.clone(), &q / &a, z, &b / &az],
            )
        }
        IdentityId::I2 => {
            let (a, b, c, d, e) = (p("a"), p("b"), p("c"), p("d"), p("e"));
            let aq = &a * &q;
            FactorRatio::new(
                vec![
                    q.clone(),
                    aq.clone(),
                    &q / &a,
                    &aq / (&b * &c),
                    &aq / (&b * &d),
                    &aq / (&b * &e),
                    &aq / (&c * &d),
                    &aq / (&c * &e),
                    &aq / (&d * &e),
                ],
                vec![
                    &q / &b,
                    &q / &c,
                    &q / &d,
                    &q / &e,
                    &aq / &b,
                    &aq / &c,
                    &aq / &d,
                    &aq / &e,
                    i2_arg(inst),
                ],
            )
        }
        IdentityId::I5 => {
            let z = p("z");
            FactorRatio::new(vec![q.clone(), z.clone(), &q / &z], vec![])
        }
        _ => return None,
    })
}

/// Right member of the identity.
pub fn rhs(inst: &IdentityInstance, policy: &TruncationPolicy, ctx: &PrecisionContext) -> Result<Value> {
    validate(inst)?;
    let base = &inst.base;
    let q = base.q().clone();
    let p = |s: &str| inst.get(s).clone();
    let n = inst.n.unwrap_or(0);
    Ok(match inst.id {
        IdentityId::I1 | IdentityId::I2 | IdentityId::I5 => {
            closed_form(inst).expect("summation with a product side").eval_infinite(base, ctx)?
        }
        IdentityId::I3 => {
            let (a, b, c) = (p("a"), p("b"), p("c"));
            let r = FactorRatio::new(vec![&c / &a, &c / &b], vec![c.clone(), &c / (&a * &b)]);
            Value::Exact(r.eval_finite(n, base)?)
        }
        IdentityId::I4 => Value::Exact(poch_finite(inst.get("z"), n, base)),
        IdentityId::I6 => {
            let (a, b, c, d) = (p("a"), p("b"), p("c"), p("d"));
            let aq = &a * &q;
            let r = FactorRatio::new(
                vec![aq.clone(), &aq / (&b * &c), &aq / (&b * &d), &aq / (&c * &d)],
                vec![&aq / &b, &aq / &c, &aq / &d, &aq / (&b * &c * &d)],
            );
            Value::Exact(r.eval_finite(n, base)?)
        }
        IdentityId::I7 => {
            let parts = transform_parts(inst)?;
            let pre = parts.prefactor.eval_finite(n, base)?;
            Value::Exact(pre * eval_vwp_terminating(&parts.series)?)
        }
        IdentityId::I8 | IdentityId::I9 => {
            let parts = transform_parts(inst)?;
            let pre = parts.prefactor.eval_infinite(base, ctx)?;
            if pre.exact().is_some_and(Zero::is_zero) {
                return Ok(pre);
            }
            let series = Value::Approx(eval_vwp_bilateral(&parts.series, policy, ctx)?);
            pre.mul(&series)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Certified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Invalid,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub instance: IdentityInstance,
    pub mode: Mode,
    pub lhs: Option<Value>,
    pub rhs: Option<Value>,
    /// `|lhs - rhs|` (midpoints in certified mode).
    pub residual: Option<Rational>,
    /// `lhs.err + rhs.err`; zero in exact mode.
    pub budget: Option<Rational>,
    pub verdict: Verdict,
    /// Why the instance could not be checked, if it could not.
    pub reason: Option<String>,
}

/// Tab-separated column order of [`VerificationReport::to_tsv`].
pub const REPORT_COLUMNS: [&str; 8] = ["id", "params", "mode", "lhs", "rhs", "residual", "budget", "verdict"];

impl VerificationReport {
    fn params_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.instance.params {
            map.insert(k.clone(), json!(format_rational(v)));
        }
        if let Some(n) = self.instance.n {
            map.insert("n".into(), json!(n.to_string()));
        }
        serde_json::Value::Object(map)
    }

    fn residual_string(&self) -> Option<String> {
        self.residual.as_ref().map(|r| match self.mode {
            Mode::Exact => format_rational(r),
            Mode::Certified => format_scientific(r, 6, Rounding::Up),
        })
    }

    fn budget_string(&self) -> Option<String> {
        self.budget.as_ref().map(|b| match self.mode {
            Mode::Exact => format_rational(b),
            Mode::Certified => format_scientific(b, 6, Rounding::Up),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "id": self.instance.id.code(),
            "params": self.params_json(),
            "mode": self.mode.to_string(),
            "lhs": self.lhs.as_ref().map(|v| v.to_string()),
            "rhs": self.rhs.as_ref().map(|v| v.to_string()),
            "residual": self.residual_string(),
            "budget": self.budget_string(),
            "verdict": self.verdict.to_string(),
        })
    }

    pub fn to_tsv(&self) -> String {
        let params: Vec<String> = self
            .instance
            .params
            .iter()
            .map(|(k, v)| format!("{k}={}", format_rational(v)))
            .chain(self.instance.n.map(|n| format!("n={n}")))
            .collect();
        let opt = |s: Option<String>| s.unwrap_or_else(|| "-".into());
        [
            self.instance.id.code().to_string(),
            params.join(","),
            self.mode.to_string(),
            opt(self.lhs.as_ref().map(|v| v.to_string())),
            opt(self.rhs.as_ref().map(|v| v.to_string())),
            opt(self.residual_string()),
            opt(self.budget_string()),
            self.verdict.to_string(),
        ]
        .join("\t")
    }
}

/// Evaluates both sides and compares them. Invalid instances come back with
/// verdict `Invalid` and a reason; nothing here returns an error.
pub fn verify(inst: &IdentityInstance, policy: &TruncationPolicy, ctx: &PrecisionContext) -> VerificationReport {
    let mode = if inst.id.is_terminating() { Mode::Exact } else { Mode::Certified };
    let sides = lhs(inst, policy, ctx).and_then(|l| Ok((l, rhs(inst, policy, ctx)?)));
    let (l, r) = match sides {
        Ok(v) => v,
        Err(e) => {
            // an exhausted budget says nothing about the identity itself
            let verdict = if matches!(e, Error::MaxTermsExceeded { .. }) { Verdict::Fail } else { Verdict::Invalid };
            return VerificationReport {
                instance: inst.clone(),
                mode,
                lhs: None,
                rhs: None,
                residual: None,
                budget: None,
                verdict,
                reason: Some(e.to_string()),
            };
        }
    };
    if let (Value::Exact(x), Value::Exact(y)) = (&l, &r) {
        let residual = (x - y).abs();
        let verdict = if residual.is_zero() { Verdict::Pass } else { Verdict::Fail };
        return VerificationReport {
            instance: inst.clone(),
            mode: Mode::Exact,
            lhs: Some(l),
            rhs: Some(r),
            residual: Some(residual),
            budget: Some(Rational::zero()),
            verdict,
            reason: None,
        };
    }
    let (la, ra) = (l.to_approx(ctx.bits), r.to_approx(ctx.bits));
    let residual = la.distance(&ra);
    let budget = la.err().add_exact(ra.err()).to_rational();
    let verdict = if residual <= &budget + &ctx.target_eps { Verdict::Pass } else { Verdict::Fail };
    VerificationReport {
        instance: inst.clone(),
        mode: Mode::Certified,
        lhs: Some(l),
        rhs: Some(r),
        residual: Some(residual),
        budget: Some(budget),
        verdict,
        reason: None,
    }
}

/// The I8 instance obtained by the parameter move `(a, c, d, e) ↦ (λ, λc/a,
/// e, λd/a)` with `b'` as the new extra parameter; applying it to the right
/// side of `inst` gives I9.
pub fn iterate_instance(inst: &IdentityInstance, b_prime: &Rational) -> Result<IdentityInstance> {
    if inst.id != IdentityId::I8 {
        return domain("iteration starts from an I8 instance");
    }
    let lam = inst.lambda().ok_or_else(|| Error::Domain("λ undefined".into()))?;
    let (a, c, d, e, f) = (inst.get("a"), inst.get("c"), inst.get("d"), inst.get("e"), inst.get("f"));
    IdentityInstance::from_pairs(
        IdentityId::I8,
        &[
            ("a", lam.clone()),
            ("b", b_prime.clone()),
            ("c", &lam * c / a),
            ("d", e.clone()),
            ("e", &lam * d / a),
            ("f", f.clone()),
        ],
        None,
        inst.base.clone(),
    )
}
