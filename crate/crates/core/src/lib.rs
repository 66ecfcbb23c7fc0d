//! Physical-layer tag authentication: tag schemes, detection theory and simulation.

// `!(x >= 0.0)` is the NaN-rejecting form used throughout validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod adversary;
pub mod keytag;
pub mod polarcodec;
pub mod schemes;
pub mod sigcore;
pub mod simlab;
pub mod theory;

pub use error::{Error, Result};
pub use keytag::{InterleaverKey, Permutation, TagKey};
pub use polarcodec::PolarCodeConfig;
pub use schemes::{AuthFrame, DetectionOutcome, Hypothesis, Scheme, SchemeParams};
pub use sigcore::{ChannelDraw, ComplexVec, RngStream, C64};
