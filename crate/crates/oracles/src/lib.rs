//! Slow, straightforward reference implementations.
//!
//! Nothing here depends on `blinkscope-core`; every routine is written from
//! the definitions so tests can compare the optimized code against it.

pub mod ear;
pub mod matching;
pub mod otsu;
pub mod peaks;
