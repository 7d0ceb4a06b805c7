// SPDX-License-Identifier: Apache-2.0

//! Capacity evaluation policy shared by the verification batches.

use serde::{Deserialize, Serialize};

use crate::capacity::{cap_numeric, cap_radial_oracle, solve_grid, SolverOptions};
use crate::error::Result;
use crate::geometry::{distance, RingCondenser};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityMode {
    /// Grid solve for every condenser.
    Numeric,
    /// Radial oracle for concentric ball rings, grid solve otherwise.
    OracleWhenRadial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacitySource {
    Oracle,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityValue {
    pub value: f64,
    pub converged: bool,
    pub source: CapacitySource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityEvaluator {
    /// Grid cells per unit length.
    pub res: usize,
    pub solver: SolverOptions,
    pub mode: CapacityMode,
}

impl Default for CapacityEvaluator {
    fn default() -> Self {
        CapacityEvaluator {
            res: 128,
            solver: SolverOptions {
                attach_bounds: false,
                ..SolverOptions::default()
            },
            mode: CapacityMode::Numeric,
        }
    }
}

impl CapacityEvaluator {
    pub fn new(res: usize, mode: CapacityMode) -> Self {
        CapacityEvaluator {
            res,
            mode,
            ..Default::default()
        }
    }

    /// Concentric radii `(r_F, r_G)` if both plates of the ring are balls
    /// about a common center.
    pub fn radial_radii(ring: &RingCondenser) -> Option<(f64, f64)> {
        let (cf, rf) = ring.f.as_ball_resolved()?;
        let (cg, rg) = ring.g.as_ball_resolved()?;
        let tol = 1e-12 * rg.max(1.0);
        (distance(&cf, &cg, ring.dim()) <= tol && rf > 0.0 && rf < rg).then_some((rf, rg))
    }

    pub fn capacity(&self, ring: &RingCondenser, p: f64) -> Result<CapacityValue> {
        if self.mode == CapacityMode::OracleWhenRadial {
            if let Some((rf, rg)) = Self::radial_radii(ring) {
                return Ok(CapacityValue {
                    value: cap_radial_oracle(rf, rg, ring.dim(), p)?,
                    converged: true,
                    source: CapacitySource::Oracle,
                });
            }
        }
        let opts = SolverOptions {
            p,
            ..self.solver.clone()
        };
        let grid = solve_grid(ring, self.res)?;
        let r = cap_numeric(ring, &opts, &grid)?;
        Ok(CapacityValue {
            value: r.value,
            converged: r.converged,
            source: CapacitySource::Grid,
        })
    }
}
