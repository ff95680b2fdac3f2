//! Doc-test hooks for the guide.
//!
//! Every chapter of the mdbook under `book/` is included verbatim as module
//! documentation, so each of its code blocks compiles and runs with the
//! crate's doc-tests and `cargo test` fails when the guide drifts out of
//! sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/robot-model.md")]
pub mod robot_model {}

#[doc = include_str!("../../../book/src/force-balance.md")]
pub mod force_balance {}

#[doc = include_str!("../../../book/src/connection-fields.md")]
pub mod connection_fields {}

#[doc = include_str!("../../../book/src/potentials.md")]
pub mod potentials {}

#[doc = include_str!("../../../book/src/planning.md")]
pub mod planning {}

#[doc = include_str!("../../../book/src/gaits.md")]
pub mod gaits {}

#[doc = include_str!("../../../book/src/pipeline-cli.md")]
pub mod pipeline_cli {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
