//! Fronthaul compression for distributed MIMO uplink with matched-filter
//! dimension reduction.
//!
//! The pipeline for one channel realisation is
//! [`scenario`] → [`csi`] → [`dimred`] → [`compression`] → [`capacity`];
//! [`harness`] runs seeded Monte-Carlo sweeps over it and writes CSV.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod compression;
pub mod csi;
pub mod dimred;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod scenario;

pub use error::{Error, Result};
