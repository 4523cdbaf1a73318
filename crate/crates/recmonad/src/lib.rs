//! Bounded workbench for monads on sets presented by equational theories.
//!
//! Free algebras are approximated by congruence closure up to a size bound,
//! languages are recognized by finite algebras, and direct images along
//! letter-to-letter maps are computed by several constructions, each
//! cross-checked against brute force.

pub mod case_studies;
pub mod cli;
pub mod finite_algebra;
pub mod monad_props;
pub mod presentation;
pub mod report;
pub mod recognition;
pub mod term_engine;
