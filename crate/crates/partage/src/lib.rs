//! Compiler and verification harness for secure program partitioning.
//!
//! A sequential security-typed source program plays the role of an ideal
//! functionality; a choreography refines it with explicit hosts and
//! communication; endpoint projection splits the choreography into a
//! distributed program. This crate validates each step (extraction,
//! information-flow typing, synchronization checking, projection) and checks
//! simulation-based security empirically by comparing environment-visible
//! traces of the source and compiled programs under enumerable adversaries.

pub mod adversary;
pub mod files;
pub mod harness;
pub mod labels;
pub mod lang;
pub mod semantics;
pub mod syncheck;
pub mod transform;
pub mod typecheck;

#[cfg(test)]
pub(crate) mod testutil;

pub use labels::{Attack, HostClass, HostEnvironment, Label, Principal};
pub use lang::{Atom, Endpoint, Expr, Kind, Loc, OpKind, Stmt, Value};
