//! Compression of two-party private-coin protocols, exact information-cost
//! accounting, direct-sum lower bounds, and desk-scale experiments on random
//! subspaces of `C^m`.
//!
//! The crate is `no_std` and needs only `alloc`. All randomness comes from
//! caller-provided streams (see [`rng`]), so every result is reproducible
//! from a single root seed. File formats, the CLI, and parallel experiment
//! runners live in the `ccompress` crate.
//!
//! Module map:
//!
//! - [`prob`]: finite distributions, joint tables, entropy, relative entropy,
//!   mutual information.
//! - [`substate`]: the good-set decomposition of `P` against `Q`.
//! - [`sampler`]: one-shot rejection sampling, binomial subsequences, and the
//!   Las-Vegas sampler with an abort symbol.
//! - [`protocol`]: protocol trees, simultaneous-message protocols, exact
//!   transcript laws, error, information cost, tensor powers, and an
//!   exhaustive search for tiny deterministic protocols.
//! - [`compress`]: simultaneous-message and round-by-round compression.
//! - [`direct_sum`]: lower-bound arithmetic and superadditivity checks.
//! - [`quantum`]: Haar sampling, the random-basis ensemble, POVM values,
//!   concentration experiments, and net rounding.

#![no_std]
#![forbid(unsafe_code)]
// `!(x >= t)` rejects NaN along with small values; index loops walk
// several parallel tables at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod compress;
pub mod direct_sum;
mod error;
pub(crate) mod math;
pub mod prob;
pub mod protocol;
pub mod quantum;
pub mod random;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod substate;

pub use error::{Error, Result};
