//! The guide's chapters, compiled so that every Rust example runs under
//! `cargo test`.

#[doc = include_str!("src/intro.md")]
pub mod chapter1 {}

#[doc = include_str!("src/transport.md")]
pub mod chapter2 {}

#[doc = include_str!("src/dose.md")]
pub mod chapter3 {}

#[doc = include_str!("src/spectra.md")]
pub mod chapter4 {}

#[doc = include_str!("src/yields.md")]
pub mod chapter5 {}

#[doc = include_str!("src/cli.md")]
pub mod chapter6 {}
