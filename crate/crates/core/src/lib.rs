//! Flat-interval circle maps, their rotation combinatorics and the
//! logarithmic suspension flows built over them.
//!
//! * [`cf`]: continued fractions, convergents, closest returns.
//! * [`flatmap`]: the map family, its inverse branch, tuning to a rotation
//!   number and the preimage geometry (`α_n`, `θ_n`, critical distances).
//! * [`bounds`]: the `θ` recurrence, the constant `C(ℓ)` and the empirical
//!   checks built on measured geometry.
//! * [`suspension`]: orbit segments with logarithmic return times, time
//!   averages, occupation times and the saddle-mass estimate.
//!
//! Numbers go through the [`Real`] trait: `f64` for quick work, [`Mp`]
//! (MPFR, feature `mpfr`) when precision has to follow the geometry down.

// Negated comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cf;
pub mod error;
pub mod flatmap;
pub mod quad;
pub mod real;
pub mod suspension;

pub use error::{Error, Result};
#[cfg(feature = "mpfr")]
pub use real::Mp;
pub use real::Real;
