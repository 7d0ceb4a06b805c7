// SPDX-License-Identifier: Apache-2.0

//! Variational p-capacities of ring condensers, distortion of quasiconformal
//! mappings, capacity set functions and capacitary metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod capacity;
pub mod capmetric;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod inequalities;
pub mod mappings;
pub mod report;

pub use error::{Error, Result};
