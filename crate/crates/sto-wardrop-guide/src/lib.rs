//! The book chapters from `book/src`, included as module documentation so
//! that `cargo test --doc` compiles and runs every code block. mdBook
//! cannot execute snippets against crate dependencies on its own; routing
//! the same Markdown through rustdoc keeps the book and the library from
//! drifting apart.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/network-model.md")]
pub mod network_model {}

#[doc = include_str!("../../../book/src/expected-costs.md")]
pub mod expected_costs {}

#[doc = include_str!("../../../book/src/equilibrium.md")]
pub mod equilibrium {}

#[doc = include_str!("../../../book/src/anarchy-bounds.md")]
pub mod anarchy_bounds {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
