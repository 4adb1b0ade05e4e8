//! Compiles and runs every Rust listing in `book/src` as a doc-test, so the
//! guide cannot drift away from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/steady_state.md")]
pub mod steady_state {}

#[doc = include_str!("../../../book/src/spectrum.md")]
pub mod spectrum {}

#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
