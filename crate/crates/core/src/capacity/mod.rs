// SPDX-License-Identifier: Apache-2.0

//! Variational p-capacity of ring condensers.

pub mod bounds;
pub mod field;
pub mod radial;
pub mod solver;

pub use bounds::{cap_lower_bound_diam, cap_lower_bound_measure, cap_upper_bound};
pub use field::{p_energy, NodeTag, ScalarField};
pub use radial::{cap_radial_closed_form, cap_radial_oracle};
pub use solver::{cap_numeric, solve_field, solve_grid, CapacityResult, Method, SolverOptions};
