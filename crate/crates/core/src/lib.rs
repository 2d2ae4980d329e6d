//! Large-deviation rate functions, limit formulas and a replica-parallel
//! Monte Carlo simulator for a Random Energy Model whose energies are sums
//! of a random number of i.i.d. terms.
//!
//! The model: `Ẑ = (1/N) Σ_i exp(β R_i)` with `R_i = Σ_{j ≤ λ_i} η_ij`,
//! `E λ = m`, `E η = 0`, `N = ⌊e^{qm}⌋`. As `m → ∞`, `(1/m) log Ẑ`
//! converges to `sup_{ν(x) ≤ q} {βx − ν(x)}` where ν is the convolution
//! of the length and energy rate functions.

// Negated float comparisons are guards that must also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod limits;
pub mod montecarlo;
pub mod numeric;
pub mod rates;
pub mod rng;

pub use distributions::{EnergyLaw, LengthLaw};
pub use error::{Error, Result};
pub use montecarlo::{ExperimentConfig, ExperimentKind, ExperimentReport, RunOptions};
pub use rates::{ExtReal, RateFunction};
