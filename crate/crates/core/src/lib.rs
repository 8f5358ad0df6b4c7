//! Simulation of multimode optical-image storage and retrieval in a cold-atom
//! EIT memory.
//!
//! Images imprinted on probe pulses are relayed by a two-lens system into an
//! atomic cloud, written into collective spin waves when the coupling field is
//! switched off, held, read back out, and recorded by a gated camera. The
//! [`scenario`] module drives the experiment structure end to end.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::field_reassign_with_default)]

pub mod analysis;
pub mod config;
pub mod detection;
pub mod envelope;
pub mod error;
pub mod fft;
pub mod field;
pub mod glyph;
pub mod medium;
pub mod pgm;
pub mod raster;
pub mod scenario;
pub mod sequencer;

pub use error::{Error, Result};
