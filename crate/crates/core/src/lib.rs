//! Driven-Markovian master equation (DMME) for driven two-level open
//! quantum systems, built on Lewis-Riesenfeld invariants.
//!
//! The pipeline runs bottom-up: a [`driving::DrivingProtocol`] is solved for
//! its invariant frame ([`lri::solve_lri`]), the frame feeds the coupling
//! coefficients and [`rates`], and [`evolve`] integrates the master equation.
//! [`oracles`] holds the closed-form reference results and [`scenario`] the
//! config-driven runner used by the `simulate` binary.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod acceptance;
pub mod bath;
pub mod coupling;
pub mod driving;
pub mod evolve;
pub mod lri;
pub mod ode;
pub mod oracles;
pub mod par;
pub mod qlinalg;
pub mod quad;
pub mod rates;
pub mod scenario;
