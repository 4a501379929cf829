//! Exact and certified evaluation of q-shifted factorials and basic
//! hypergeometric series (unilateral and bilateral), a catalog of classical
//! summation and transformation identities with a verifier, and replay of
//! the bilateralization ("Cauchy's method") derivations of the 1psi1 and
//! very-well-poised 6psi6 summations as step-checked traces.

pub mod error;
pub mod numerics;
pub mod qfactorial;
pub mod series;
pub mod identities;
pub mod cauchy;
pub mod cli;

pub use error::{Error, Result};
