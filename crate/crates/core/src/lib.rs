//! Query-complexity experiment kit: a classical simulator for the
//! amplitude-estimation counting primitive with exact query accounting,
//! threshold distinguishers, approximate k-th-smallest selection and
//! two-phase approximate counting built on top of it, an LP-based
//! certifier for the minimal degree of polynomials approximating
//! threshold-type partial functions, and a reproducible Monte-Carlo
//! harness tying it all together.

// Validation guards are written !(x > 0.0) on purpose: the negation also
// rejects NaN, which x <= 0.0 would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approxcount;
pub mod constants;
pub mod degree;
pub mod distinguish;
pub mod error;
pub mod harness;
pub mod kselect;
pub mod oracle;
pub mod polytools;
pub mod qcount;
pub mod rng;

pub use error::{Error, Result};
