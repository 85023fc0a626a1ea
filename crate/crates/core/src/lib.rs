//! Verification toolkit for the mean king retrodiction protocol.
//!
//! The pieces fit together like this: [`gf`] supplies exact arithmetic in
//! GF(p^n); [`mub`] builds maximal families of mutually unbiased bases;
//! [`designs`] builds striation tables (equivalently: mutually unbiased
//! strings, or complete sets of mutually orthogonal Latin squares) over the
//! same fields and checks them three independent ways; [`king`] assembles
//! the protocol itself — entangled state, post-measurement states, the
//! retrodiction basis — verifies the success-probability-1 conditions, and
//! simulates the protocol trial by trial; [`search`] is an independent
//! combinatorial oracle that rediscovers how many pairwise-orthogonal
//! striations each dimension admits.

mod error;
pub mod designs;
pub mod gf;
pub mod king;
pub mod linalg;
pub mod mub;
pub mod report;
pub mod search;

pub use error::{Error, Result};

/// Numerical slack accepted by verification checks unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
