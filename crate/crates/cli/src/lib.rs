//! Library half of the `hyporbit` binary: JSON encoding of core types and
//! the command implementations, kept out of `main.rs` so integration tests
//! can call them directly.

pub mod commands;
pub mod jsonio;
