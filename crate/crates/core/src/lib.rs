//! Grammar-driven synthesis of networked platform topologies.
//!
//! The pipeline has three stages:
//!
//! 1. [`alloc`] places application processes onto as few processing
//!    modules as the capacity constraints allow.
//! 2. [`search`] grows candidate topologies by applying production rules of
//!    a graph grammar ([`grammar`], [`topology`]) under Monte Carlo tree
//!    search.
//! 3. [`mapping`] assigns the allocated modules to the processing vertices
//!    of each candidate.
//!
//! [`evaluate`] scores a placed candidate for latency, cost and resilience
//! behind hard structural gates. [`workflow`] ties the stages together and
//! writes run artifacts; [`model`] holds the input documents.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod error;
pub mod evaluate;
pub mod grammar;
pub mod mapping;
pub mod model;
pub mod search;
pub mod topology;
pub mod workflow;

pub use error::{Error, Result};
