//! The finite-n displays of the two bilateralization arguments, written out
//! factor by factor.
//!
//! A factor argument is a monomial in the parameters and `q`, typed the way
//! it is printed: `abq^{1-2n}/c`, `λaq^{3n+1}/ef`, `q^{-n}`. Everything after
//! the slash is in the denominator. Exponents of `q` are linear in `n` and
//! the summation index `k`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numerics::{rational_pow, Rational};
use crate::qfactorial::QBase;

/// `q`-exponent `c0 + cn·n + ck·k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Linear {
    c0: i64,
    cn: i64,
    ck: i64,
}

impl Linear {
    fn parse(s: &str) -> Linear {
        let mut out = Linear::default();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'-' => (-1, &rest[1..]),
                b'+' => (1, &rest[1..]),
                _ => (1, rest),
            };
            let end = body.find(['+', '-']).unwrap_or(body.len());
            let (tok, tail) = body.split_at(end);
            let (digits, var) = match tok.chars().last() {
                Some(c @ ('n' | 'k')) => (&tok[..tok.len() - 1], Some(c)),
                _ => (tok, None),
            };
            let coeff: i64 = if digits.is_empty() {
                1
            } else {
                digits.parse().unwrap_or_else(|_| panic!("bad exponent {s:?}"))
            };
            match var {
                Some('n') => out.cn += sign * coeff,
                Some('k') => out.ck += sign * coeff,
                _ => out.c0 += sign * coeff,
            }
            rest = tail;
        }
        out
    }

    fn at(&self, n: i64, k: i64) -> i64 {
        self.c0 + self.cn * n + self.ck * k
    }
}

/// One factor argument as printed.
#[derive(Clone, Debug)]
pub(crate) struct Mono {
    text: &'static str,
    /// Powers of the named parameters (`λ` included).
    syms: BTreeMap<char, i64>,
    q: Linear,
}

impl Mono {
    pub(crate) fn parse(text: &'static str) -> Mono {
        let mut syms = BTreeMap::new();
        let mut q = Linear::default();
        let mut sign = 1;
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '/' {
                assert!(sign == 1, "two slashes in {text:?}");
                sign = -1;
                continue;
            }
            assert!(matches!(c, 'a'..='f' | 'q' | 'λ'), "unexpected {c:?} in {text:?}");
            let mut exp = Linear { c0: 1, ..Linear::default() };
            if chars.peek() == Some(&'^') {
                chars.next();
                let body: String = if chars.peek() == Some(&'{') {
                    chars.next();
                    chars.by_ref().take_while(|&c| c != '}').collect()
                } else {
                    chars.next().into_iter().collect()
                };
                exp = Linear::parse(&body);
            }
            if c == 'q' {
                q.c0 += sign * exp.c0;
                q.cn += sign * exp.cn;
                q.ck += sign * exp.ck;
            } else {
                assert!(exp.cn == 0 && exp.ck == 0, "only q carries n or k in {text:?}");
                *syms.entry(c).or_insert(0) += sign * exp.c0;
            }
        }
        Mono { text, syms, q }
    }

    /// Value and first-order perturbation weight.
    fn eval(&self, env: &Env) -> Result<(Rational, i64)> {
        let mut v = env.base.pow(self.q.at(env.n, env.k));
        let mut w = 0;
        for (s, &e) in &self.syms {
            let x = env.vals.get(s).unwrap_or_else(|| panic!("no value for {s} in {}", self.text));
            v *= rational_pow(x, e)?;
            w += e * weight(*s);
        }
        Ok((v, w))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Order {
    K,
    /// `c·n`
    N(i64),
}

impl Order {
    fn at(self, env: &Env) -> i64 {
        match self {
            Order::K => env.k,
            Order::N(c) => c * env.n,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Order::K => "k",
            Order::N(1) => "n",
            Order::N(2) => "2n",
            Order::N(_) => "cn",
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Piece {
    /// `(num…)_order / (den…)_order`
    Poch { num: Vec<Mono>, den: Vec<Mono>, order: Order },
    /// `(1 - num) / (1 - den)`
    Lin { num: Mono, den: Mono },
    Power(Mono),
    /// Sum over `k` from `lo·n` to `hi·n`.
    Sum { lo: i64, hi: i64, body: Vec<Piece> },
}

fn monos(list: &'static str) -> Vec<Mono> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(Mono::parse).collect()
}

fn poch(num: &'static str, den: &'static str, order: Order) -> Piece {
    Piece::Poch { num: monos(num), den: monos(den), order }
}

fn lin(num: &'static str, den: &'static str) -> Piece {
    Piece::Lin { num: Mono::parse(num), den: Mono::parse(den) }
}

fn power(m: &'static str) -> Piece {
    Piece::Power(Mono::parse(m))
}

fn sum(lo: i64, hi: i64, body: Vec<Piece>) -> Piece {
    Piece::Sum { lo, hi, body }
}

/// A product of pieces.
pub(crate) type Expr = Vec<Piece>;

pub(crate) struct Env<'a> {
    pub vals: &'a BTreeMap<char, Rational>,
    pub base: &'a QBase,
    pub n: i64,
    pub k: i64,
}

fn invalid(what: String) -> Error {
    Error::InvalidInstance(what)
}

/// Perturbation direction: each parameter `s` moves to `s(1 + w_s ε)`.
/// The weights only need to avoid accidental integer relations.
fn weight(s: char) -> i64 {
    match s {
        'a' => 1009,
        'b' => 2003,
        'c' => 3001,
        'd' => 4001,
        'e' => 5003,
        'f' => 6007,
        // λ = qa²/bcd moves with its definition
        'λ' => 2 * 1009 - 2003 - 3001 - 4001,
        _ => unreachable!("unknown symbol {s}"),
    }
}

/// Leading behaviour of a quantity as `ε → 0`.
#[derive(Clone, Debug, PartialEq)]
enum Lead {
    /// Identically zero.
    Zero,
    /// Tends to zero at an order the leading-term arithmetic cannot see.
    Vanish,
    /// `coef · ε^order`
    Term(Rational, i64),
}

impl Lead {
    fn one() -> Lead {
        Lead::Term(Rational::one(), 0)
    }

    fn mul(self, other: Lead, what: &str) -> Result<Lead> {
        Ok(match (self, other) {
            (Lead::Zero, _) | (_, Lead::Zero) => Lead::Zero,
            (Lead::Vanish, Lead::Term(_, v)) | (Lead::Term(_, v), Lead::Vanish) if v < 0 => {
                return Err(invalid(format!("{what}: 0·∞ beyond leading order")))
            }
            (Lead::Vanish, _) | (_, Lead::Vanish) => Lead::Vanish,
            (Lead::Term(x, u), Lead::Term(y, v)) => Lead::Term(x * y, u + v),
        })
    }

    fn recip(self, what: &str) -> Result<Lead> {
        match self {
            Lead::Term(x, v) => Ok(Lead::Term(x.recip(), -v)),
            _ => Err(invalid(format!("{what} vanishes in a denominator"))),
        }
    }

    fn finish(self, what: &str) -> Result<Rational> {
        match self {
            Lead::Zero | Lead::Vanish => Ok(Rational::zero()),
            Lead::Term(x, 0) => Ok(x),
            Lead::Term(_, v) if v > 0 => Ok(Rational::zero()),
            Lead::Term(..) => Err(invalid(format!("{what} diverges at this point"))),
        }
    }
}

/// `1 - m q^j`.
fn one_minus(m: &(Rational, i64), qj: &Rational) -> Lead {
    let x = &m.0 * qj;
    if !x.is_one() {
        return Lead::Term(Rational::one() - x, 0);
    }
    if m.1 == 0 {
        Lead::Zero
    } else {
        Lead::Term(Rational::from_integer((-m.1).into()), 1)
    }
}

/// `(m; q)_order`, with negative orders as reciprocals.
fn poch_lead(m: &Mono, ord: i64, env: &Env) -> Result<Lead> {
    let mv = m.eval(env)?;
    let q = env.base.q();
    let mut acc = Lead::one();
    if ord >= 0 {
        let mut qj = Rational::one();
        for _ in 0..ord {
            acc = acc.mul(one_minus(&mv, &qj), m.text)?;
            qj *= q;
        }
    } else {
        let mut qj = Rational::one();
        for _ in 0..-ord {
            qj /= q;
            acc = acc.mul(one_minus(&mv, &qj).recip(m.text)?, m.text)?;
        }
    }
    Ok(acc)
}

/// Exact value of a product of pieces. Where a factor vanishes or has a
/// pole the value is the limit along a generic perturbation of the
/// parameters, which is what an identity of rational functions asserts.
pub(crate) fn eval_expr(expr: &[Piece], env: &Env) -> Result<Rational> {
    lead_expr(expr, env)?.finish("the expression")
}

fn lead_expr(expr: &[Piece], env: &Env) -> Result<Lead> {
    let mut acc = Lead::one();
    for piece in expr {
        acc = acc.mul(lead_piece(piece, env)?, "a product")?;
    }
    Ok(acc)
}

fn lead_piece(piece: &Piece, env: &Env) -> Result<Lead> {
    match piece {
        Piece::Power(m) => Ok(Lead::Term(m.eval(env)?.0, 0)),
        Piece::Lin { num, den } => {
            let one = Rational::one();
            let d = one_minus(&den.eval(env)?, &one).recip(den.text)?;
            one_minus(&num.eval(env)?, &one).mul(d, num.text)
        }
        Piece::Poch { num, den, order } => {
            let ord = order.at(env);
            let mut acc = Lead::one();
            for m in num {
                acc = acc.mul(poch_lead(m, ord, env)?, m.text)?;
            }
            for m in den {
                let what = format!("({})_{}", m.text, order.label());
                acc = acc.mul(poch_lead(m, ord, env)?.recip(&what)?, m.text)?;
            }
            Ok(acc)
        }
        Piece::Sum { lo, hi, body } => {
            let mut terms = Vec::new();
            for k in lo * env.n..=hi * env.n {
                terms.push(lead_expr(body, &Env { k, ..*env })?);
            }
            let low = terms.iter().filter_map(|t| match t {
                Lead::Term(_, v) => Some(*v),
                _ => None,
            });
            let Some(min) = low.min() else {
                return Ok(if terms.iter().all(|t| *t == Lead::Zero) { Lead::Zero } else { Lead::Vanish });
            };
            let total: Rational = terms
                .iter()
                .filter_map(|t| match t {
                    Lead::Term(x, v) if *v == min => Some(x.clone()),
                    _ => None,
                })
                .sum();
            if !total.is_zero() {
                Ok(Lead::Term(total, min))
            } else if min >= 0 {
                Ok(Lead::Vanish)
            } else {
                Err(invalid("poles in a sum cancel beyond leading order".into()))
            }
        }
    }
}

/// The summation piece of an expression.
pub(crate) fn sum_piece(expr: &[Piece]) -> &Piece {
    expr.iter().find(|p| matches!(p, Piece::Sum { .. })).expect("expression has a sum")
}

use Order::{K, N};

/// q-Pfaff-Saalschütz with `n ↦ 2n`, before and after moving the index.
pub(crate) fn qps_shifted() -> Vec<Expr> {
    vec![
        vec![poch("c/a,c/b", "c,c/ab", N(2))],
        vec![sum(0, 2, vec![poch("a,b,q^{-2n}", "q,c,abq^{1-2n}/c", K), power("q^k")])],
        vec![
            poch("a,b,q^{-2n}", "q,c,abq^{1-2n}/c", N(1)),
            power("q^n"),
            sum(-1, 1, vec![poch("aq^n,bq^n,q^{-n}", "q^{1+n},cq^n,abq^{1-n}/c", K), power("q^k")]),
        ],
    ]
}

/// The same after `a ↦ aq^{-n}`, `c ↦ cq^{-n}`.
pub(crate) fn qps_substituted() -> Vec<Expr> {
    vec![
        vec![sum(-1, 1, vec![poch("a,bq^n,q^{-n}", "q^{1+n},c,abq^{1-n}/c", K), power("q^k")])],
        vec![
            poch("c/a,cq^{-n}/b", "cq^{-n},c/ab", N(2)),
            poch("q,cq^{-n},abq^{1-2n}/c", "aq^{-n},b,q^{-2n}", N(1)),
            power("q^{-n}"),
        ],
        vec![poch("c/a", "q", N(2)), poch("q,q,c/b,bq/c", "c,q/a,b,c/ab", N(1))],
    ]
}

/// Bailey's 10phi9 transformation with `n ↦ 2n`, both sides shifted.
pub(crate) fn ba_shifted() -> Vec<Expr> {
    vec![
        vec![
            lin("aq^{2n}", "a"),
            poch(
                "a,b,c,d,e,f,λaq^{2n+1}/ef,q^{-2n}",
                "q,aq/b,aq/c,aq/d,aq/e,aq/f,efq^{-2n}/λ,aq^{2n+1}",
                N(1),
            ),
            power("q^n"),
            sum(
                -1,
                1,
                vec![
                    lin("aq^{2n+2k}", "aq^{2n}"),
                    poch("aq^n,bq^n,cq^n,dq^n", "q^{1+n},aq^{1+n}/b,aq^{1+n}/c,aq^{1+n}/d", K),
                    poch("eq^n,fq^n,λaq^{3n+1}/ef,q^{-n}", "aq^{1+n}/e,aq^{1+n}/f,efq^{-n}/λ,aq^{3n+1}", K),
                    power("q^k"),
                ],
            ),
        ],
        vec![
            poch("aq,aq/ef,λq/e,λq/f", "aq/e,aq/f,λq/ef,λq", N(2)),
            lin("λq^{2n}", "λ"),
            poch(
                "λ,λb/a,λc/a,λd/a,e,f,λaq^{2n+1}/ef,q^{-2n}",
                "q,aq/b,aq/c,aq/d,λq/e,λq/f,efq^{-2n}/a,λq^{2n+1}",
                N(1),
            ),
            power("q^n"),
            sum(
                -1,
                1,
                vec![
                    lin("λq^{2n+2k}", "λq^{2n}"),
                    poch("λq^n,λbq^n/a,λcq^n/a,λdq^n/a", "q^{1+n},aq^{1+n}/b,aq^{1+n}/c,aq^{1+n}/d", K),
                    poch("eq^n,fq^n,λaq^{3n+1}/ef,q^{-n}", "λq^{1+n}/e,λq^{1+n}/f,efq^{-n}/a,λq^{3n+1}", K),
                    power("q^k"),
                ],
            ),
        ],
    ]
}

fn ba_right_sum() -> Piece {
    sum(
        -1,
        1,
        vec![
            lin("λq^{2k}", "λ"),
            poch(
                "λq^{-n},λbq^n/a,λc/a,λd/a,e,f,λaq^{n+1}/ef,q^{-n}",
                "q^{1+n},aq^{1-n}/b,aq/c,aq/d,λq/e,λq/f,efq^{-n}/a,λq^{n+1}",
                K,
            ),
            power("q^k"),
        ],
    )
}

/// The same after `a ↦ aq^{-2n}` and `c, d, e, f ↦ (·)q^{-n}`.
pub(crate) fn ba_substituted() -> Vec<Expr> {
    vec![
        vec![sum(
            -1,
            1,
            vec![
                lin("aq^{2k}", "a"),
                poch(
                    "aq^{-n},bq^n,c,d,e,f,λaq^{n+1}/ef,q^{-n}",
                    "q^{1+n},aq^{1-n}/b,aq/c,aq/d,aq/e,aq/f,efq^{-n}/λ,aq^{n+1}",
                    K,
                ),
                power("q^k"),
            ],
        )],
        vec![
            lin("aq^{-2n}", "a"),
            poch("aq^{1-n}/e,aq^{1-n}/f,efq^{-2n}/λ,aq", "aq^{-2n},b,cq^{-n},dq^{-n}", N(1)),
            poch("aq^{1-2n},aq/ef,λq^{1-n}/e,λq^{1-n}/f", "aq^{1-n}/e,aq^{1-n}/f,λq/ef,λq^{1-2n}", N(2)),
            lin("λ", "λq^{-2n}"),
            poch("λq^{-2n},λb/a,λcq^{-n}/a,λdq^{-n}/a", "λq^{1-n}/e,λq^{1-n}/f,efq^{-2n}/a,λq", N(1)),
            ba_right_sum(),
        ],
        vec![
            poch("λq/e,λq/f,aq,λb/a,aq/λc,aq/λd,q/a,aq/ef", "aq/e,aq/f,b,λq,q/c,q/d,q/λ,λq/ef", N(1)),
            ba_right_sum(),
        ],
    ]
}
