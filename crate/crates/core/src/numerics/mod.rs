//! Exact rationals and error-tracked high-precision values.

mod approx;
mod float;
mod rational;

pub use approx::{ApproxValue, PrecisionContext};
pub use float::BigFloat;
pub use rational::{
    format_rational, format_scientific, int, log2_abs, parse_rational, q_exponent, rat,
    rational_pow, Rational, Rounding,
};

/// Converts an exact rational to a working-precision value whose error is
/// at most one unit in the last place.
pub fn to_approx(x: &Rational, ctx: &PrecisionContext) -> ApproxValue {
    ApproxValue::from_rational(x, ctx.bits)
}
