//! Trust management for adaptive safety in constrained sensor networks.
//!
//! The crate is split into the trust engines ([`trust_qad`], [`trust_prob`],
//! [`trustworthiness`]), the rolling work-load protocol that moves society-wide
//! aggregation between motes ([`rwp`]), and a deterministic simulator that
//! drives all of them through a monitor, analyze and adapt loop ([`simnet`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod rwp;
pub mod simnet;
pub mod trust_prob;
pub mod trust_qad;
pub mod trustworthiness;

pub use rwp::Address;
