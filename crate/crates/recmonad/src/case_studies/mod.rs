//! Special-purpose procedures and fixtures reproducing the worked examples
//! and counterexamples.

pub mod fixtures;
pub mod counterexamples;
pub mod burnside;
pub mod lattice;
pub mod reader;
pub mod studies;
pub mod powerset_squared;
pub mod noncases;
