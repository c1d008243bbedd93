//! The guide's chapters, compiled as doc-tests.
//!
//! Each module pulls one chapter of `book/` in via `include_str!`, so every
//! Rust snippet in the guide is built and run by `cargo test`. A chapter
//! edit that breaks an example fails the suite instead of shipping.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/measurements.md")]
pub mod measurements {}

#[doc = include_str!("../../../book/src/meter-model.md")]
pub mod meter_model {}

#[doc = include_str!("../../../book/src/intersubjectivity.md")]
pub mod intersubjectivity {}

#[doc = include_str!("../../../book/src/two-agents.md")]
pub mod two_agents {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/file-formats.md")]
pub mod file_formats {}
