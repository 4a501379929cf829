//! Deterministic rejection sampling of valid parameter points.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{closed_form, lhs, rhs, transform_lhs, transform_parts, validate, IdentityId, IdentityInstance};
use super::{i1_series, i2_series};
use crate::error::{Error, Result};
use crate::numerics::{rat, PrecisionContext, Rational};
use crate::qfactorial::{infinite_vanishes, QBase};
use crate::series::TruncationPolicy;

/// Numerators and denominators of sampled parameters lie in `1..=SAMPLE_BOUND`.
pub const SAMPLE_BOUND: i64 = 64;

const MAX_ATTEMPTS: usize = 20_000;

fn max_order(id: IdentityId) -> u64 {
    match id {
        IdentityId::I3 => 8,
        IdentityId::I4 => 10,
        IdentityId::I6 => 6,
        IdentityId::I7 => 5,
        _ => 0,
    }
}

fn draw_rational(rng: &mut ChaCha8Rng) -> Rational {
    let n = rng.gen_range(1..=SAMPLE_BOUND);
    let d = rng.gen_range(1..=SAMPLE_BOUND);
    if rng.gen_bool(0.5) {
        rat(-n, d)
    } else {
        rat(n, d)
    }
}

fn draw(id: IdentityId, rng: &mut ChaCha8Rng, base: &QBase) -> Result<IdentityInstance> {
    let params: BTreeMap<String, Rational> =
        id.params().iter().map(|name| (name.to_string(), draw_rational(rng))).collect();
    let n = id.is_terminating().then(|| rng.gen_range(0..=max_order(id)));
    IdentityInstance::new(id, params, n, base.clone())
}

fn on_lattice(x: &Rational, base: &QBase) -> bool {
    x.is_zero() || base.exponent_of(x).is_some()
}

/// Convergence with room to spare: every limiting term ratio at most 3/4.
fn well_inside(ratio: Option<Rational>) -> bool {
    matches!(ratio, Some(r) if r <= rat(3, 4))
}

fn acceptable(inst: &IdentityInstance) -> bool {
    let base = inst.base();
    if inst.params().values().any(|v| on_lattice(v, base)) {
        return false;
    }
    if validate(inst).is_err() {
        return false;
    }
    match inst.id() {
        IdentityId::I3 | IdentityId::I4 | IdentityId::I6 | IdentityId::I7 => {
            // exact evaluation is cheap; it also rules out poles and 0/0
            let (policy, ctx) = (TruncationPolicy::default(), PrecisionContext::default());
            lhs(inst, &policy, &ctx).is_ok() && rhs(inst, &policy, &ctx).is_ok()
        }
        IdentityId::I1 => {
            let Ok(s) = i1_series(inst) else { return false };
            well_inside(s.limiting_ratio()) && products_clear(inst)
        }
        IdentityId::I2 => {
            let Ok(s) = i2_series(inst) else { return false };
            well_inside(s.limiting_ratio()) && products_clear(inst)
        }
        IdentityId::I5 => products_clear(inst),
        IdentityId::I8 | IdentityId::I9 => {
            let (Ok(left), Ok(parts)) = (transform_lhs(inst), transform_parts(inst)) else {
                return false;
            };
            well_inside(left.limiting_ratio())
                && well_inside(parts.series.limiting_ratio())
                && parts.series.tail().iter().chain(parts.series.lower().iter()).all(|t| !on_lattice(t, base))
                && !on_lattice(parts.series.a(), base)
                && parts.prefactor.all_factors().all(|x| !infinite_vanishes(x, base))
        }
    }
}

fn products_clear(inst: &IdentityInstance) -> bool {
    let base = inst.base();
    closed_form(inst).is_some_and(|r| r.all_factors().all(|x| !infinite_vanishes(x, base)))
}

/// A reproducible valid instance of `id`. Parameters are rationals with
/// numerator and denominator bounded by [`SAMPLE_BOUND`], kept off the
/// lattice `{q^j}` together with every derived product argument, and
/// bilateral series are kept well inside their convergence region.
pub fn sample_valid_instance(id: IdentityId, seed: u64, base: &QBase) -> Result<IdentityInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64 + 1);
    for _ in 0..MAX_ATTEMPTS {
        let inst = draw(id, &mut rng, base)?;
        if acceptable(&inst) {
            return Ok(inst);
        }
    }
    Err(Error::SamplingExhausted { id: id.code().to_string(), attempts: MAX_ATTEMPTS })
}
