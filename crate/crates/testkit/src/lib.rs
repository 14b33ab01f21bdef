//! Test support for the annogold crates: independent oracles, seeded
//! generators, corpora rebuilt from published figures, and the code that
//! produces the shipped fixture files.
//!
//! Regenerate the fixtures with
//! `ANNOGOLD_REGEN_FIXTURES=1 cargo test -p annogold-testkit`.

pub mod fixtures;
pub mod gen;
pub mod oracle;
pub mod published;
pub mod service;
