//! Cauchy's method of bilateralization, mechanized.
//!
//! A terminating identity has `n` replaced by `2n`, its summation index
//! shifted so the sum runs over `[-n, n]`, and parameters carrying `q^{-n}`
//! substituted; letting `n → ∞` then gives a bilateral identity. The finite
//! steps are checked exactly against the displays as printed, the limit
//! numerically against the catalog's closed forms. [`replay_1psi1`] and
//! [`replay_6psi6`] run the two full derivations as step-checked traces.

mod display;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{domain, Error, Result};
use crate::identities::{
    closed_form, i1_series, i3_series, i7_series, iterate_instance, rhs, transform_lhs,
    transform_parts, validate, verify, IdentityId, IdentityInstance, Value, Verdict,
};
use crate::numerics::{
    format_scientific, ApproxValue, PrecisionContext, Rational, Rounding,
};
use crate::qfactorial::{poch_int, PochValue, QBase};
use crate::series::{eval_vwp_bilateral, term, vwp_term, TruncationPolicy};

use display::{eval_expr, sum_piece, Env, Expr};

/// The four finite-n displays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyId {
    /// q-Pfaff-Saalschütz, index shifted to `[-n, n]`.
    QpsShifted,
    /// The same after `a ↦ aq^{-n}`, `c ↦ cq^{-n}`.
    QpsSubstituted,
    /// Bailey's 10phi9 transformation, both sides shifted.
    BaShifted,
    /// The same after `a ↦ aq^{-2n}`, `c, d, e, f ↦ (·)q^{-n}`.
    BaSubstituted,
}

impl FamilyId {
    pub const ALL: [FamilyId; 4] =
        [FamilyId::QpsShifted, FamilyId::QpsSubstituted, FamilyId::BaShifted, FamilyId::BaSubstituted];

    pub fn code(self) -> &'static str {
        match self {
            FamilyId::QpsShifted => "F_qps_shifted",
            FamilyId::QpsSubstituted => "F_qps_substituted",
            FamilyId::BaShifted => "F_Ba_shifted",
            FamilyId::BaSubstituted => "F_Ba_substituted",
        }
    }

    pub fn params(self) -> &'static [&'static str] {
        match self {
            FamilyId::QpsShifted | FamilyId::QpsSubstituted => &["a", "b", "c"],
            FamilyId::BaShifted | FamilyId::BaSubstituted => &["a", "b", "c", "d", "e", "f"],
        }
    }

    fn is_substituted(self) -> bool {
        matches!(self, FamilyId::QpsSubstituted | FamilyId::BaSubstituted)
    }

    fn chain(self) -> Vec<Expr> {
        match self {
            FamilyId::QpsShifted => display::qps_shifted(),
            FamilyId::QpsSubstituted => display::qps_substituted(),
            FamilyId::BaShifted => display::ba_shifted(),
            FamilyId::BaSubstituted => display::ba_substituted(),
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyId::ALL
            .into_iter()
            .find(|f| f.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown display family {s:?}")))
    }
}

/// One display at a fixed `n` and parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteIdentityFamily {
    id: FamilyId,
    n: u64,
    params: BTreeMap<String, Rational>,
    base: QBase,
}

impl FiniteIdentityFamily {
    pub fn new(id: FamilyId, n: u64, params: BTreeMap<String, Rational>, base: QBase) -> Result<Self> {
        let want = id.params();
        if params.len() != want.len() || want.iter().any(|p| !params.contains_key(*p)) {
            return Err(Error::InvalidInstance(format!("{id} takes parameters {}", want.join(", "))));
        }
        if let Some((k, _)) = params.iter().find(|(_, v)| v.is_zero()) {
            return Err(Error::InvalidInstance(format!("parameter {k} must be nonzero")));
        }
        Ok(FiniteIdentityFamily { id, n, params, base })
    }

    pub fn id(&self) -> FamilyId {
        self.id
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn params(&self) -> &BTreeMap<String, Rational> {
        &self.params
    }

    fn vals(&self) -> BTreeMap<char, Rational> {
        symbol_values(&self.params, &self.base)
    }

    /// Every member of the display's chain of equalities, in print order.
    pub fn evaluate(&self) -> Result<Vec<Rational>> {
        let vals = self.vals();
        let env = Env { vals: &vals, base: &self.base, n: self.n as i64, k: 0 };
        self.id.chain().iter().map(|e| eval_expr(e, &env)).collect()
    }
}

/// Parameter values keyed by symbol, with `λ = qa²/bcd` when `b, c, d` are
/// present.
fn symbol_values(params: &BTreeMap<String, Rational>, base: &QBase) -> BTreeMap<char, Rational> {
    let mut vals: BTreeMap<char, Rational> =
        params.iter().map(|(k, v)| (k.chars().next().expect("nonempty name"), v.clone())).collect();
    if let (Some(a), Some(b), Some(c), Some(d)) = (vals.get(&'a'), vals.get(&'b'), vals.get(&'c'), vals.get(&'d')) {
        let lam = base.q() * a * a / (b * c * d);
        vals.insert('λ', lam);
    }
    vals
}

/// Random parameters for a display: signed ratios of small integers off
/// the `q`-lattice. The point may still make some factor singular;
/// [`check_finite_identity`] reports that as an invalid instance.
pub fn sample_family_params(id: FamilyId, seed: u64, base: &QBase) -> BTreeMap<String, Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(100 + id as u64);
    let mut out = BTreeMap::new();
    for name in id.params() {
        let v = loop {
            let p: i64 = rng.gen_range(1..=12);
            let r: i64 = rng.gen_range(1..=12);
            let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
            let v = Rational::new((sign * p).into(), r.into());
            if base.exponent_of(&v).is_none() {
                break v;
            }
        };
        out.insert(name.to_string(), v);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Reindex,
    Substitute,
    TanneryLimit,
    Iterate,
    Specialize,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Measurements a step keeps beyond its residual.
#[derive(Clone, Debug, PartialEq)]
pub enum StepData {
    None,
    /// `|value(n) - target|` for each `n`, and the geometric rate allowed.
    Deviations { ns: Vec<u64>, deviations: Vec<Rational>, ratio: Rational },
    /// The series left after specialization.
    Terminal { value: ApproxValue },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProofStep {
    pub kind: StepKind,
    pub description: String,
    pub residual: Value,
    /// The check was carried out in exact arithmetic.
    pub exact: bool,
    pub pass: bool,
    pub data: StepData,
}

impl ProofStep {
    fn exact(kind: StepKind, description: String, residual: Rational) -> Self {
        let pass = residual.is_zero();
        ProofStep { kind, description, residual: Value::Exact(residual), exact: true, pass, data: StepData::None }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": self.kind.to_string(),
            "description": self.description,
            "residual": residual_string(&self.residual),
            "exact": self.exact,
            "pass": self.pass,
        })
    }
}

fn residual_string(v: &Value) -> String {
    match v {
        Value::Exact(_) => v.to_string(),
        Value::Approx(a) => format!(
            "{} ± {}",
            format_scientific(&a.value().to_rational(), 6, Rounding::Up),
            format_scientific(&a.err().to_rational(), 3, Rounding::Up)
        ),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProofTrace {
    pub target: IdentityId,
    pub steps: Vec<ProofStep>,
    /// `Pass` iff every step passes; never `Invalid`.
    pub verdict: Verdict,
}

/// Tab-separated column order of [`ProofTrace::to_tsv`].
pub const TRACE_COLUMNS: [&str; 7] = ["target", "kind", "description", "residual", "exact", "pass", "verdict"];

impl ProofTrace {
    fn new(target: IdentityId, steps: Vec<ProofStep>) -> Self {
        let verdict = if steps.iter().all(|s| s.pass) { Verdict::Pass } else { Verdict::Fail };
        ProofTrace { target, steps, verdict }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "target": self.target.code(),
            "steps": self.steps.iter().map(ProofStep::to_json).collect::<Vec<_>>(),
            "verdict": self.verdict.to_string(),
        })
    }

    /// One line per step.
    pub fn to_tsv(&self) -> String {
        self.steps
            .iter()
            .map(|s| {
                [
                    self.target.code().to_string(),
                    s.kind.to_string(),
                    s.description.clone(),
                    residual_string(&s.residual),
                    s.exact.to_string(),
                    s.pass.to_string(),
                    self.verdict.to_string(),
                ]
                .join("\t")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Evaluates every member of the display exactly; the residual is the
/// largest distance from the first.
pub fn check_finite_identity(fam: &FiniteIdentityFamily) -> Result<ProofStep> {
    let values = fam.evaluate()?;
    let residual = values[1..].iter().map(|v| (v - &values[0]).abs()).max().unwrap_or_else(Rational::zero);
    let kind = if fam.id.is_substituted() { StepKind::Substitute } else { StepKind::Reindex };
    let desc = format!("{} at n = {}: {} members agree", fam.id, fam.n, values.len());
    Ok(ProofStep::exact(kind, desc, residual))
}

fn finite(v: PochValue, what: &str, den: bool) -> Result<Rational> {
    match v {
        PochValue::Finite(x) if !(den && x.is_zero()) => Ok(x),
        _ => Err(Error::InvalidInstance(format!("{what} is singular in the shifted form"))),
    }
}

/// `∏(x q^n)_j / ∏(y q^n)_j`.
fn shifted_ratio(num: &[Rational], den: &[Rational], n: i64, j: i64, base: &QBase) -> Result<Rational> {
    let qn = base.pow(n);
    let mut v = Rational::one();
    for x in num {
        v *= finite(poch_int(&(x * &qn), j, base), "an upper factorial", false)?;
    }
    for y in den {
        v /= finite(poch_int(&(y * &qn), j, base), "a lower factorial", true)?;
    }
    Ok(v)
}

/// Checks `Σ_{k=0}^{2n} t_k = t_n Σ_{j=-n}^{n} t_{n+j}/t_n` for the terms of
/// I3 or I7 at order `2n`. The ratios come from `(x)_{n+j} = (x)_n (xq^n)_j`,
/// not from dividing raw terms.
pub fn reindex_equivalence(
    id: IdentityId,
    n: u64,
    params: &BTreeMap<String, Rational>,
    base: &QBase,
) -> Result<ProofStep> {
    let inst = IdentityInstance::new(id, params.clone(), Some(2 * n), base.clone())?;
    let ni = n as i64;
    let (raw, shifted) = match id {
        IdentityId::I3 => {
            let spec = i3_series(&inst)?;
            let t = |k| term(&spec, k).map(|t| t.value);
            let raw = (0..=2 * ni).map(t).sum::<Result<Rational>>()?;
            let mut lower = spec.lower().to_vec();
            lower.push(base.q().clone());
            let mut s = Rational::zero();
            for j in -ni..=ni {
                s += shifted_ratio(spec.upper(), &lower, ni, j, base)? * crate::numerics::rational_pow(spec.arg(), j)?;
            }
            (raw, t(ni)? * s)
        }
        IdentityId::I7 => {
            let spec = i7_series(&inst)?;
            let t = |k| vwp_term(&spec, k).map(|t| t.value);
            let raw = (0..=2 * ni).map(t).sum::<Result<Rational>>()?;
            let a = spec.a();
            let pivot = Rational::one() - a * base.pow(2 * ni);
            if pivot.is_zero() {
                return Err(Error::InvalidInstance("1 - aq^{2n} vanishes".into()));
            }
            let lower = spec.lower();
            let mut s = Rational::zero();
            for j in -ni..=ni {
                let lin = (Rational::one() - a * base.pow(2 * ni + 2 * j)) / &pivot;
                s += lin * shifted_ratio(spec.tail(), &lower, ni, j, base)? * crate::numerics::rational_pow(spec.arg(), j)?;
            }
            (raw, t(ni)? * s)
        }
        other => return domain(format!("reindexing is defined for I3 and I7, not {other}")),
    };
    let desc = format!("{id} at 2n = {}: sum over [0, 2n] equals the shifted sum over [-n, n]", 2 * n);
    Ok(ProofStep::exact(StepKind::Reindex, desc, (raw - shifted).abs()))
}

/// Slack on the geometric shrink of the deviation between consecutive `n`.
pub const TANNERY_SLACK: (i64, i64) = (3, 2);

/// Evaluates the bilateral side of a substituted display (a finite sum) at
/// each `n` and compares with `target`.
///
/// With `r = max(ratio, |q|)`, each deviation must be at most
/// `1.5 · r^{Δn}` times the previous one, unless it already sits inside
/// the target's own error window.
pub fn tannery_limit(
    family: FamilyId,
    params: &BTreeMap<String, Rational>,
    base: &QBase,
    target: &ApproxValue,
    ratio: &Rational,
    ns: &[u64],
    eps: &Rational,
) -> Result<ProofStep> {
    if !family.is_substituted() {
        return domain(format!("{family} has no bilateral side"));
    }
    if ns.is_empty() {
        return domain("no n to evaluate at");
    }
    let chain = family.chain();
    let lhs = &chain[0];
    let mid = target.value().to_rational();
    let window = target.err().to_rational() + eps;
    let mut deviations = Vec::with_capacity(ns.len());
    for &n in ns {
        let fam = FiniteIdentityFamily::new(family, n, params.clone(), base.clone())?;
        let vals = fam.vals();
        let v = eval_expr(lhs, &Env { vals: &vals, base, n: n as i64, k: 0 })?;
        deviations.push((v - &mid).abs());
    }
    let slack = Rational::new(TANNERY_SLACK.0.into(), TANNERY_SLACK.1.into());
    let qabs = base.q().abs();
    let r = if *ratio > qabs { ratio.clone() } else { qabs };
    let mut pass = true;
    for (w, dn) in deviations.windows(2).zip(ns.windows(2)) {
        let allowed = &slack * crate::numerics::rational_pow(&r, dn[1] as i64 - dn[0] as i64)? * &w[0];
        pass &= w[1] <= window || (w[1] < w[0] && w[1] <= allowed);
    }
    let shown: Vec<String> = ns
        .iter()
        .zip(&deviations)
        .map(|(n, d)| format!("n={n}: {}", format_scientific(d, 3, Rounding::Up)))
        .collect();
    let desc = format!(
        "let n → ∞ in {family}: deviations {} (geometric rate ≤ {})",
        shown.join(", "),
        format_scientific(&r, 3, Rounding::Up)
    );
    let last = deviations.last().expect("nonempty").clone();
    let residual = ApproxValue::from_rational(&last, target.bits()).widen(target.err());
    Ok(ProofStep {
        kind: StepKind::TanneryLimit,
        description: desc,
        residual: Value::Approx(residual),
        exact: false,
        pass,
        data: StepData::Deviations { ns: ns.to_vec(), deviations, ratio: r },
    })
}

/// Default `n` values for the limit step.
pub const DEFAULT_NS: [u64; 3] = [10, 20, 40];

fn tight(ctx: &PrecisionContext) -> PrecisionContext {
    ctx.with_eps(&ctx.target_eps / Rational::from_integer((1u64 << 40).into()))
}

fn sum_residuals(steps: &[ProofStep]) -> Rational {
    steps.iter().filter_map(|s| s.residual.exact().cloned()).sum()
}

fn merge(kind: StepKind, desc: String, parts: &[ProofStep]) -> ProofStep {
    let mut step = ProofStep::exact(kind, desc, sum_residuals(parts));
    step.pass = parts.iter().all(|s| s.pass);
    step
}

/// Parameters with some of them multiplied by powers of `q`.
fn mapped(params: &BTreeMap<String, Rational>, shifts: &[(&str, i64)], base: &QBase) -> BTreeMap<String, Rational> {
    let mut out = params.clone();
    for (name, j) in shifts {
        let v = out.get_mut(*name).expect("known parameter");
        *v = base.shift(v, *j);
    }
    out
}

/// The substituted display's sums equal the shifted display's sums at the
/// substituted parameters.
fn substitution_map(
    shifted: FamilyId,
    substituted: FamilyId,
    n: u64,
    params: &BTreeMap<String, Rational>,
    shifts: &[(&str, i64)],
    base: &QBase,
) -> Result<Rational> {
    let ni = n as i64;
    let before = shifted.chain();
    let after = substituted.chain();
    let moved = mapped(params, shifts, base);
    let v_before = symbol_values(&moved, base);
    let v_after = symbol_values(params, base);
    let env_before = Env { vals: &v_before, base, n: ni, k: 0 };
    let env_after = Env { vals: &v_after, base, n: ni, k: 0 };
    // pair each sum of the shifted display with its image
    let pairs: Vec<(&Expr, &Expr)> = match shifted {
        FamilyId::QpsShifted => vec![(&before[2], &after[0])],
        FamilyId::BaShifted => vec![(&before[0], &after[0]), (&before[1], &after[2])],
        _ => unreachable!("shifted families only"),
    };
    let mut residual = Rational::zero();
    for (b, a) in pairs {
        let x = eval_expr(std::slice::from_ref(sum_piece(b)), &env_before)?;
        let y = eval_expr(std::slice::from_ref(sum_piece(a)), &env_after)?;
        residual += (x - y).abs();
    }
    Ok(residual)
}

fn pairs_of(names: &[&str], vals: &[&Rational]) -> BTreeMap<String, Rational> {
    names.iter().zip(vals).map(|(k, v)| (k.to_string(), (*v).clone())).collect()
}

fn same_ratio(x: &crate::identities::FactorRatio, y: &crate::identities::FactorRatio) -> bool {
    x.num() == y.num() && x.den() == y.den()
}

/// Replays the derivation of the 1psi1 summation at the point `(a, b, z)`
/// of I1: reindex q-Pfaff-Saalschütz, substitute, and let `n → ∞`.
///
/// The limit is taken at `(a, b/az, b)` in the finite identity's naming,
/// which the final relabeling `b ↦ c/az, c ↦ b` carries back to `(a, b, z)`.
pub fn replay_1psi1(
    params: &BTreeMap<String, Rational>,
    base: &QBase,
    policy: &TruncationPolicy,
    ctx: &PrecisionContext,
    ns: &[u64],
) -> Result<ProofTrace> {
    let inst = IdentityInstance::new(IdentityId::I1, params.clone(), None, base.clone())?;
    validate(&inst)?;
    let q = base.q();
    let (a, b, z) = (inst.get("a"), inst.get("b"), inst.get("z"));
    let (pa, pb, pc) = (a.clone(), b / (a * z), b.clone());
    let fp = pairs_of(&["a", "b", "c"], &[&pa, &pb, &pc]);

    let mut parts = Vec::new();
    for n in 0..=3 {
        parts.push(reindex_equivalence(IdentityId::I3, n, &fp, base)?);
        parts.push(check_finite_identity(&FiniteIdentityFamily::new(FamilyId::QpsShifted, n, fp.clone(), base.clone())?)?);
    }
    let reindex = merge(
        StepKind::Reindex,
        "replace n by 2n in q-Pfaff-Saalschütz and shift the summation index by n (n = 0..3)".into(),
        &parts,
    );

    let mut parts = Vec::new();
    for n in 1..=3u64 {
        let ni = n as i64;
        parts.push(check_finite_identity(&FiniteIdentityFamily::new(FamilyId::QpsSubstituted, n, fp.clone(), base.clone())?)?);
        let r = substitution_map(FamilyId::QpsShifted, FamilyId::QpsSubstituted, n, &fp, &[("a", -ni), ("c", -ni)], base)?;
        parts.push(ProofStep::exact(StepKind::Substitute, String::new(), r));
    }
    let substitute = merge(StepKind::Substitute, "replace a by aq^{-n} and c by cq^{-n} (n = 1..3)".into(), &parts);

    // the limit's product side, relabeled, must be I1's product side
    let limit_form = crate::identities::FactorRatio::new(
        vec![q.clone(), &pc / &pa, &pc / &pb, &pb * q / &pc],
        vec![pc.clone(), q / &pa, pb.clone(), &pc / (&pa * &pb)],
    );
    let relabel_ok = closed_form(&inst).is_some_and(|f| same_ratio(&f, &limit_form));
    let target = match rhs(&inst, policy, &tight(ctx))? {
        Value::Approx(v) => v,
        Value::Exact(x) => ApproxValue::from_rational(&x, ctx.bits),
    };
    let ratio = i1_series(&inst)?.limiting_ratio().unwrap_or_else(Rational::one);
    let mut limit = tannery_limit(FamilyId::QpsSubstituted, &fp, base, &target, &ratio, ns, &ctx.target_eps)?;
    limit.pass &= relabel_ok;
    limit.description = format!("{}; replacing b by c/az and then c by b gives I1", limit.description);

    Ok(ProofTrace::new(IdentityId::I1, vec![reindex, substitute, limit]))
}

const AUX_FACTORS: [(i64, i64); 6] = [(3, 2), (2, 3), (5, 4), (4, 5), (7, 3), (3, 7)];

fn i8_at(a: &Rational, b: &Rational, cdef: [&Rational; 4], base: &QBase) -> Result<IdentityInstance> {
    let [c, d, e, f] = cdef;
    IdentityInstance::from_pairs(
        IdentityId::I8,
        &[("a", a.clone()), ("b", b.clone()), ("c", c.clone()), ("d", d.clone()), ("e", e.clone()), ("f", f.clone())],
        None,
        base.clone(),
    )
}

fn with_b_prime(inst: &IdentityInstance, bp: &Rational) -> Result<IdentityInstance> {
    let mut p = inst.params().clone();
    p.insert("b'".into(), bp.clone());
    IdentityInstance::new(IdentityId::I9, p, None, inst.base().clone())
}

fn certified_close(x: &Value, y: &Value, ctx: &PrecisionContext) -> bool {
    let (u, v) = (x.to_approx(ctx.bits), y.to_approx(ctx.bits));
    u.distance(&v) <= u.err().add_exact(v.err()).to_rational() + &ctx.target_eps
}

/// Replays the derivation of Bailey's 6psi6 summation at `(a, c, d, e, f)`:
/// bilateralize the 10phi9 transformation, iterate the resulting 6psi6
/// transformation once, and specialize both free parameters so the last
/// series is 1.
///
/// The finite steps use an auxiliary `b` near `qa²/cde`; the specialization
/// uses `b = qa²/cde` and `b' = q` exactly.
pub fn replay_6psi6(
    params: &BTreeMap<String, Rational>,
    base: &QBase,
    policy: &TruncationPolicy,
    ctx: &PrecisionContext,
    ns: &[u64],
) -> Result<ProofTrace> {
    let want = ["a", "c", "d", "e", "f"];
    if params.len() != 5 || want.iter().any(|k| !params.contains_key(*k)) {
        return Err(Error::InvalidInstance("6psi6 replay takes parameters a, c, d, e, f".into()));
    }
    let g = |k: &str| params[k].clone();
    let (a, c, d, e, f) = (g("a"), g("c"), g("d"), g("e"), g("f"));
    let q = base.q().clone();
    let i2 = IdentityInstance::from_pairs(
        IdentityId::I2,
        &[("a", a.clone()), ("b", c.clone()), ("c", d.clone()), ("d", e.clone()), ("e", f.clone())],
        None,
        base.clone(),
    )?;
    validate(&i2)?;
    let b_spec = &q * &a * &a / (&c * &d * &e);
    let cdef = [&c, &d, &e, &f];

    let aux = AUX_FACTORS.iter().find_map(|&(p, r)| {
        let b = &b_spec * Rational::new(p.into(), r.into());
        let inst = i8_at(&a, &b, cdef, base).ok()?;
        validate(&inst).ok()?;
        let fp = pairs_of(&["a", "b", "c", "d", "e", "f"], &[&a, &b, &c, &d, &e, &f]);
        for id in [FamilyId::BaShifted, FamilyId::BaSubstituted] {
            FiniteIdentityFamily::new(id, 1, fp.clone(), base.clone()).ok()?.evaluate().ok()?;
        }
        Some((b, inst, fp))
    });
    let Some((b_gen, i8, fp)) = aux else {
        return Err(Error::InvalidInstance("no auxiliary b makes the finite displays regular".into()));
    };

    let mut parts = Vec::new();
    for n in 0..=2 {
        parts.push(reindex_equivalence(IdentityId::I7, n, &fp, base)?);
        parts.push(check_finite_identity(&FiniteIdentityFamily::new(FamilyId::BaShifted, n, fp.clone(), base.clone())?)?);
    }
    let reindex = merge(
        StepKind::Reindex,
        format!(
            "replace n by 2n in the 10phi9 transformation and shift the index by n on both sides (n = 0..2, b = {})",
            crate::numerics::format_rational(&b_gen)
        ),
        &parts,
    );

    let mut parts = Vec::new();
    for n in 1..=2u64 {
        let ni = n as i64;
        parts.push(check_finite_identity(&FiniteIdentityFamily::new(FamilyId::BaSubstituted, n, fp.clone(), base.clone())?)?);
        let shifts = [("a", -2 * ni), ("c", -ni), ("d", -ni), ("e", -ni), ("f", -ni)];
        let r = substitution_map(FamilyId::BaShifted, FamilyId::BaSubstituted, n, &fp, &shifts, base)?;
        parts.push(ProofStep::exact(StepKind::Substitute, String::new(), r));
    }
    let substitute = merge(
        StepKind::Substitute,
        "replace a, c, d, e and f by aq^{-2n}, cq^{-n}, dq^{-n}, eq^{-n} and fq^{-n} (n = 1..2)".into(),
        &parts,
    );

    let target = rhs(&i8, policy, &tight(ctx))?.to_approx(ctx.bits);
    let ratio = transform_lhs(&i8)?.limiting_ratio().unwrap_or_else(Rational::one);
    let mut limit = tannery_limit(FamilyId::BaSubstituted, &fp, base, &target, &ratio, ns, &ctx.target_eps)?;
    limit.description = format!("{}; limit is the 6psi6 transformation", limit.description);

    let iterate = iterate_step(&i8, &b_spec, cdef, policy, ctx)?;
    let specialize = specialize_step(&i2, &b_spec, cdef, policy, ctx)?;
    Ok(ProofTrace::new(IdentityId::I2, vec![reindex, substitute, limit, iterate, specialize]))
}

fn iterate_step(
    i8: &IdentityInstance,
    b_spec: &Rational,
    cdef: [&Rational; 4],
    policy: &TruncationPolicy,
    ctx: &PrecisionContext,
) -> Result<ProofStep> {
    let base = i8.base();
    let q = base.q().clone();
    let a = i8.get("a").clone();
    let chosen = AUX_FACTORS.iter().find_map(|&(p, r)| {
        let bp = &q * Rational::new(p.into(), r.into());
        let second = iterate_instance(i8, &bp).ok()?;
        validate(&second).ok()?;
        let i9 = with_b_prime(i8, &bp).ok()?;
        validate(&i9).ok()?;
        Some((bp, second, i9))
    });
    let Some((bp, second, i9)) = chosen else {
        return Err(Error::InvalidInstance("no b' keeps the iterated transformation regular".into()));
    };
    let first = transform_parts(i8)?;
    let twice = transform_parts(&second)?;
    let direct = transform_parts(&i9)?;
    let structural = transform_lhs(&second)?.equivalent(&first.series)
        && same_ratio(&first.prefactor.compose(&twice.prefactor), &direct.prefactor)
        && twice.series.equivalent(&direct.series)
        && second.lambda() == i9.lambda_prime();

    // the left side does not see b; the right side agrees across two b
    let other = i8_at(&a, b_spec, cdef, base)?;
    let same_lhs = transform_lhs(&other)?.equivalent(&transform_lhs(i8)?);
    let b_free = certified_close(&rhs(i8, policy, ctx)?, &rhs(&other, policy, ctx)?, ctx);

    let report = verify(&i9, policy, ctx);
    let residual = match (&report.residual, &report.budget) {
        (Some(r), Some(b)) => ApproxValue::from_rational(r, ctx.bits).widen(&crate::numerics::BigFloat::rational_upper(b, 64)),
        _ => return Err(Error::InvalidInstance(report.reason.unwrap_or_default())),
    };
    Ok(ProofStep {
        kind: StepKind::Iterate,
        description: format!(
            "apply the transformation again with a, c, d, e replaced by λ, λc/a, e, λd/a (b' = {})",
            crate::numerics::format_rational(&bp)
        ),
        residual: Value::Approx(residual),
        exact: false,
        pass: structural && same_lhs && b_free && report.verdict == Verdict::Pass,
        data: StepData::None,
    })
}

fn specialize_step(
    i2: &IdentityInstance,
    b_spec: &Rational,
    cdef: [&Rational; 4],
    policy: &TruncationPolicy,
    ctx: &PrecisionContext,
) -> Result<ProofStep> {
    let base = i2.base();
    let a = i2.get("a");
    let [c, _, e, _] = cdef;
    let i8 = i8_at(a, b_spec, cdef, base)?;
    let i9 = with_b_prime(&i8, base.q())?;
    let parts = transform_parts(&i9)?;
    let lambdas = i9.lambda().as_ref() == Some(e) && i9.lambda_prime() == Some(a / c);
    let terminal = eval_vwp_bilateral(&parts.series, policy, ctx)?;
    let is_one = terminal.value().to_rational().is_one() && terminal.err().is_zero();
    let bailey = closed_form(i2).is_some_and(|f| same_ratio(&f, &parts.prefactor));
    let report = verify(i2, policy, ctx);
    let residual = match (&report.residual, &report.budget) {
        (Some(r), Some(b)) => ApproxValue::from_rational(r, ctx.bits).widen(&crate::numerics::BigFloat::rational_upper(b, 64)),
        _ => return Err(Error::InvalidInstance(report.reason.unwrap_or_default())),
    };
    let shown = if is_one { "1".to_string() } else { terminal.to_string() };
    Ok(ProofStep {
        kind: StepKind::Specialize,
        description: format!(
            "take λ = e (b = qa²/cde) and λ' = a/c (b' = q): terminal series = {shown}, product side is Bailey's"
        ),
        residual: Value::Approx(residual),
        exact: false,
        pass: lambdas && is_one && bailey && report.verdict == Verdict::Pass,
        data: StepData::Terminal { value: terminal },
    })
}
