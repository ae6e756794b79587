//! Simulation and analysis of time-bin entangled photon pairs generated by
//! spontaneous four-wave mixing in a (possibly cooled) fiber and distributed
//! over lossy fiber links.
//!
//! The crate is layered bottom-up:
//!
//! - [`raman`]: temperature dependence of spontaneous Raman noise.
//! - [`timebin_state`]: amplitude algebra of the entangled pair and the two
//!   1-bit-delay interferometers, giving the joint detection distribution.
//! - [`link`]: channel transmittance and gated detector parameters.
//! - [`rates`]: closed-form correlated/accidental rates, visibility and the
//!   inverse estimate of the pair number.
//! - [`montecarlo`]: seeded, parallel, gate-by-gate event simulation.
//! - [`fringe`]: phase sweeps and sinusoidal visibility fits.
//! - [`cli`]: scenario files, presets and the command implementations behind
//!   the `timebin-sim` binary.

// Range checks are written as `!(x > lo)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fringe;
pub mod link;
pub mod montecarlo;
pub mod raman;
pub mod rates;
pub mod timebin_state;

pub use error::{Error, Result};
