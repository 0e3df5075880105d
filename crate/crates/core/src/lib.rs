//! Fidelity and rate models for encoded hybrid quantum repeaters, with
//! brute-force oracles for the closed-form recursions.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod codes;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod physics;
pub mod pipeline;
pub mod qubus;

pub use bell::{BellDiagonal, PurifyOutcome};
pub use codes::{CodeFamily, CodeSpec};
pub use error::{Error, Result};
pub use physics::{ChannelParams, HardwareParams};
pub use pipeline::{OperatingPoint, ProtocolConfig, SweepResult};
