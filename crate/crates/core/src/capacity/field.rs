// SPDX-License-Identifier: Apache-2.0

//! Grid-sampled test functions and the discrete p-Dirichlet energy.
//!
//! Each grid cell is split into `n!` Kuhn simplices (two triangles in 2D, six
//! tetrahedra in 3D). On a simplex the piecewise-linear interpolant has a
//! constant gradient whose components are one-sided node differences along
//! the simplex path, so the energy of an admissible field is the exact
//! p-Dirichlet energy of its interpolant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Grid, RingCondenser, MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeTag {
    Interior,
    /// On F, value fixed at 1.
    One,
    /// Outside G, value fixed at 0.
    Zero,
}

/// Candidate admissible function sampled at grid nodes.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub mask: Vec<NodeTag>,
}

impl ScalarField {
    /// Field with every node free, sampled from `f`.
    pub fn from_fn(grid: Grid, f: impl Fn(&crate::geometry::Point) -> f64) -> Self {
        let n = grid.node_count();
        let values = (0..n).map(|i| f(&grid.node_point(i))).collect();
        ScalarField {
            grid,
            values,
            mask: vec![NodeTag::Interior; n],
        }
    }

    /// Clamp mask and initial values for a condenser: nodes in F (plates
    /// widened to one layer) carry 1, nodes outside G carry 0.
    ///
    /// Fails when F has no node, when a node of F is within one grid
    /// diagonal of a node outside G, or when F or G is disconnected on the
    /// grid.
    pub fn for_condenser(ring: &RingCondenser, grid: &Grid) -> Result<Self> {
        let h = grid.h;
        if let Some(d) = ring.boundary_gap_exact() {
            if d < 2.0 * h * (1.0 - 1e-9) {
                return Err(Error::CondenserTooThin { h });
            }
        }
        let n = grid.node_count();
        let mut mask = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for idx in 0..n {
            let x = grid.node_point(idx);
            let tag = if ring.f.contains_at(&x, h) {
                NodeTag::One
            } else if ring.g.contains(&x) {
                NodeTag::Interior
            } else {
                NodeTag::Zero
            };
            mask.push(tag);
            values.push(if tag == NodeTag::One { 1.0 } else { 0.0 });
        }
        let field = ScalarField {
            grid: grid.clone(),
            values,
            mask,
        };
        if !field.mask.contains(&NodeTag::One) {
            return Err(Error::PlateNotResolved);
        }
        field.check_thickness()?;
        if !field.connected(|t| t == NodeTag::One) {
            return Err(Error::Disconnected("F"));
        }
        if !field.connected(|t| t != NodeTag::Zero) {
            return Err(Error::Disconnected("G"));
        }
        Ok(field)
    }

    fn neighbor_offsets(&self) -> Vec<[i64; MAX_DIM]> {
        let dim = self.grid.dim;
        let mut out = Vec::new();
        let range: Vec<i64> = vec![-1, 0, 1];
        for &a in &range {
            for &b in &range {
                for &c in &range {
                    if dim == 2 && c != 0 {
                        continue;
                    }
                    if a == 0 && b == 0 && c == 0 {
                        continue;
                    }
                    out.push([a, b, c]);
                }
            }
        }
        out
    }

    fn neighbor(&self, idx: usize, o: &[i64; MAX_DIM]) -> Option<usize> {
        let ijk = self.grid.node_ijk(idx);
        let n = self.grid.nodes_per_axis();
        let mut out = [0usize; MAX_DIM];
        for a in 0..MAX_DIM {
            let k = ijk[a] as i64 + o[a];
            if k < 0 || k >= n[a] as i64 {
                return None;
            }
            out[a] = k as usize;
        }
        Some(self.grid.node_index(out))
    }

    /// dist(F, ∂G) ≥ 2h on the grid: no clamped-zero node adjacent (in the
    /// full 3^n stencil) to a clamped-one node.
    fn check_thickness(&self) -> Result<()> {
        let offs = self.neighbor_offsets();
        for (idx, t) in self.mask.iter().enumerate() {
            if *t != NodeTag::One {
                continue;
            }
            for o in &offs {
                if let Some(j) = self.neighbor(idx, o) {
                    if self.mask[j] == NodeTag::Zero {
                        return Err(Error::CondenserTooThin { h: self.grid.h });
                    }
                }
            }
        }
        Ok(())
    }

    /// Flood fill over nodes selected by `pick` using the full 3^n stencil.
    fn connected(&self, pick: impl Fn(NodeTag) -> bool) -> bool {
        let n = self.mask.len();
        let start = match (0..n).find(|&i| pick(self.mask[i])) {
            Some(s) => s,
            None => return true,
        };
        let total = self.mask.iter().filter(|t| pick(**t)).count();
        let offs = self.neighbor_offsets();
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(i) = stack.pop() {
            count += 1;
            for o in &offs {
                if let Some(j) = self.neighbor(i, o) {
                    if !seen[j] && pick(self.mask[j]) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count == total
    }

    pub fn free_count(&self) -> usize {
        self.mask
            .iter()
            .filter(|t| **t == NodeTag::Interior)
            .count()
    }

    /// Re-imposes the clamps and, when `box_range` is set, projects free
    /// values onto [0, 1].
    pub fn project(&mut self, box_range: bool) {
        for (v, t) in self.values.iter_mut().zip(&self.mask) {
            match t {
                NodeTag::One => *v = 1.0,
                NodeTag::Zero => *v = 0.0,
                NodeTag::Interior => {
                    if box_range {
                        *v = v.clamp(0.0, 1.0)
                    }
                }
            }
        }
    }

    /// Multilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: &crate::geometry::Point) -> f64 {
        let g = &self.grid;
        let dim = g.dim;
        let n = g.nodes_per_axis();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..dim {
            let u = (x[a] - g.origin[a]) / g.h;
            if u < 0.0 || u > g.cells[a] as f64 {
                return 0.0;
            }
            let i = (u.floor() as usize).min(n[a] - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut ijk = base;
            for a in 0..dim {
                if corner & (1 << a) != 0 {
                    ijk[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * self.values[g.node_index(ijk)];
            }
        }
        acc
    }
}

/// Kuhn-simplex discretization of the energy over the cells that matter.
pub(crate) struct Discretization {
    pub dim: usize,
    pub inv_h: f64,
    /// Simplex measure `h^n / n!`.
    pub simplex_volume: f64,
    /// Lower-corner node index of every cell with a free corner or a
    /// non-constant clamp pattern.
    pub cells: Vec<usize>,
    /// For each simplex, the node offsets along its path.
    pub paths: Vec<[usize; MAX_DIM + 1]>,
    pub free: Vec<usize>,
}

fn permutations(dim: usize) -> Vec<Vec<usize>> {
    if dim == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
    }
}

impl Discretization {
    pub fn new(field: &ScalarField, all_cells: bool) -> Self {
        let grid = &field.grid;
        let dim = grid.dim;
        let strides = grid.strides();
        let mut paths = Vec::new();
        for perm in permutations(dim) {
            let mut path = [0usize; MAX_DIM + 1];
            for (k, &a) in perm.iter().enumerate() {
                path[k + 1] = path[k] + strides[a];
            }
            paths.push(path);
        }
        let corners: Vec<usize> = (0..(1usize << dim))
            .map(|c| {
                (0..dim)
                    .filter(|a| c & (1 << a) != 0)
                    .map(|a| strides[a])
                    .sum()
            })
            .collect();
        let c = grid.cells;
        let nz = if dim == 3 { c[2] } else { 1 };
        let mut cells = Vec::new();
        for k in 0..nz {
            for j in 0..c[1] {
                for i in 0..c[0] {
                    let base = grid.node_index([i, j, k]);
                    let keep = all_cells || {
                        let tags: Vec<NodeTag> =
                            corners.iter().map(|o| field.mask[base + o]).collect();
                        tags.contains(&NodeTag::Interior) || tags.iter().any(|t| *t != tags[0])
                    };
                    if keep {
                        cells.push(base);
                    }
                }
            }
        }
        let free = field
            .mask
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == NodeTag::Interior)
            .map(|(i, _)| i)
            .collect();
        let fact = if dim == 2 { 2.0 } else { 6.0 };
        Discretization {
            dim,
            inv_h: 1.0 / grid.h,
            simplex_volume: grid.h.powi(dim as i32) / fact,
            cells,
            paths,
            free,
        }
    }

    /// Regularized energy `Σ (|∇f|² + ε²)^{p/2} · vol`; accumulates the
    /// gradient into `grad` (zeroed first) when given.
    pub fn energy(&self, x: &[f64], p: f64, eps: f64, grad: Option<&mut [f64]>) -> f64 {
        match (self.dim, grad) {
            (2, Some(g)) => self.energy2::<true>(x, p, eps, g),
            (2, None) => self.energy2::<false>(x, p, eps, &mut []),
            (_, Some(g)) => self.energy_n::<true>(x, p, eps, g),
            (_, None) => self.energy_n::<false>(x, p, eps, &mut []),
        }
    }

    fn energy2<const GRAD: bool>(&self, x: &[f64], p: f64, eps: f64, grad: &mut [f64]) -> f64 {
        if GRAD {
            grad.iter_mut().for_each(|v| *v = 0.0);
        }
        let inv_h = self.inv_h;
        let eps2 = eps * eps;
        let vol = self.simplex_volume;
        let quadratic = p == 2.0;
        let half_p = 0.5 * p - 1.0;
        let sx = self.paths[1][1];
        let mut energy = 0.0;
        for &c in &self.cells {
            let f00 = x[c];
            let f10 = x[c + 1];
            let f01 = x[c + sx];
            let f11 = x[c + sx + 1];
            // path 00 -> 10 -> 11
            let ax = (f10 - f00) * inv_h;
            let ay = (f11 - f10) * inv_h;
            // path 00 -> 01 -> 11
            let by = (f01 - f00) * inv_h;
            let bx = (f11 - f01) * inv_h;
            let sa = ax * ax + ay * ay + eps2;
            let sb = bx * bx + by * by + eps2;
            let (ta, tb) = if quadratic {
                (1.0, 1.0)
            } else {
                (pow_or_zero(sa, half_p), pow_or_zero(sb, half_p))
            };
            energy += sa * ta + sb * tb;
            if GRAD {
                let wa = p * ta * vol * inv_h;
                let wb = p * tb * vol * inv_h;
                let (gax, gay) = (wa * ax, wa * ay);
                let (gbx, gby) = (wb * bx, wb * by);
                grad[c] -= gax + gby;
                grad[c + 1] += gax - gay;
                grad[c + sx + 1] += gay + gbx;
                grad[c + sx] += gby - gbx;
            }
        }
        energy * vol
    }

    fn energy_n<const GRAD: bool>(&self, x: &[f64], p: f64, eps: f64, grad: &mut [f64]) -> f64 {
        if GRAD {
            grad.iter_mut().for_each(|v| *v = 0.0);
        }
        let dim = self.dim;
        let inv_h = self.inv_h;
        let eps2 = eps * eps;
        let vol = self.simplex_volume;
        let quadratic = p == 2.0;
        let half_p = 0.5 * p - 1.0;
        let mut energy = 0.0;
        let mut diffs = [0.0; MAX_DIM];
        for &c in &self.cells {
            for path in &self.paths {
                let mut s = eps2;
                for k in 0..dim {
                    let d = (x[c + path[k + 1]] - x[c + path[k]]) * inv_h;
                    diffs[k] = d;
                    s += d * d;
                }
                let t = if quadratic {
                    1.0
                } else {
                    pow_or_zero(s, half_p)
                };
                energy += s * t;
                if GRAD {
                    let w = p * t * vol * inv_h;
                    for k in 0..dim {
                        let gk = w * diffs[k];
                        grad[c + path[k + 1]] += gk;
                        grad[c + path[k]] -= gk;
                    }
                }
            }
        }
        energy * vol
    }
}

/// `s^e`, with a flat simplex contributing nothing even when `e < 0`.
#[inline]
fn pow_or_zero(s: f64, e: f64) -> f64 {
    if s > 0.0 {
        s.powf(e)
    } else {
        0.0
    }
}

/// Discrete p-Dirichlet energy of `f` over every grid cell, with gradient
/// regularization `ε` (`ε = 0` gives the plain energy).
pub fn p_energy(f: &ScalarField, p: f64, epsilon_reg: f64) -> f64 {
    let disc = Discretization::new(f, true);
    disc.energy(&f.values, p, epsilon_reg, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball_ring, point2, point3, ImplicitSet};

    fn unit_square_grid(cells: usize) -> Grid {
        Grid::new(2, point2(0.0, 0.0), 1.0 / cells as f64, [cells, cells, 0]).unwrap()
    }

    #[test]
    fn constant_field_zero_energy() {
        let f = ScalarField::from_fn(unit_square_grid(32), |_| 1.0);
        assert_eq!(p_energy(&f, 2.0, 0.0), 0.0);
        assert_eq!(p_energy(&f, 1.5, 0.0), 0.0);
    }

    #[test]
    fn linear_profile_unit_energy() {
        let f = ScalarField::from_fn(unit_square_grid(64), |x| x[0]);
        assert!((p_energy(&f, 2.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((p_energy(&f, 3.0, 0.0) - 1.0).abs() < 1e-12);
        let g3 = Grid::new(3, point3(0.0, 0.0, 0.0), 0.125, [8, 8, 8]).unwrap();
        let f3 = ScalarField::from_fn(g3, |x| 2.0 * x[2]);
        assert!((p_energy(&f3, 2.0, 0.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let grid = unit_square_grid(6);
        let f = ScalarField::from_fn(grid, |x| (3.0 * x[0]).sin() * x[1] + 0.2);
        let disc = Discretization::new(&f, true);
        for &(p, eps) in &[(2.0, 0.0), (1.5, 0.1), (3.0, 0.01)] {
            let mut g = vec![0.0; f.values.len()];
            disc.energy(&f.values, p, eps, Some(&mut g));
            for idx in [0usize, 8, 20, 30, 48] {
                let mut xp = f.values.clone();
                let mut xm = f.values.clone();
                xp[idx] += 1e-6;
                xm[idx] -= 1e-6;
                let fd = (disc.energy(&xp, p, eps, None) - disc.energy(&xm, p, eps, None)) / 2e-6;
                assert!(
                    (fd - g[idx]).abs() < 1e-6 * (1.0 + fd.abs()),
                    "p={p} idx={idx}"
                );
            }
        }
        let g3 = Grid::new(3, point3(0.0, 0.0, 0.0), 0.25, [4, 4, 4]).unwrap();
        let f3 = ScalarField::from_fn(g3, |x| x[0] * x[1] + (2.0 * x[2]).cos());
        let d3 = Discretization::new(&f3, true);
        let mut g = vec![0.0; f3.values.len()];
        d3.energy(&f3.values, 1.7, 0.05, Some(&mut g));
        for idx in [0usize, 31, 62, 100] {
            let mut xp = f3.values.clone();
            let mut xm = f3.values.clone();
            xp[idx] += 1e-6;
            xm[idx] -= 1e-6;
            let fd = (d3.energy(&xp, 1.7, 0.05, None) - d3.energy(&xm, 1.7, 0.05, None)) / 2e-6;
            assert!((fd - g[idx]).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn condenser_mask_and_checks() {
        let amb = ImplicitSet::aabox(point2(-2.0, -2.0), point2(2.0, 2.0), 2).unwrap();
        let ring = make_ball_ring(point2(0.0, 0.0), 0.5, 1.0, &amb).unwrap();
        let grid = Grid::covering(ring.g.bbox(), 1.0 / 16.0).unwrap();
        let f = ScalarField::for_condenser(&ring, &grid).unwrap();
        for (v, t) in f.values.iter().zip(&f.mask) {
            match t {
                NodeTag::One => assert_eq!(*v, 1.0),
                NodeTag::Zero => assert_eq!(*v, 0.0),
                NodeTag::Interior => {}
            }
        }
        let coarse = Grid::covering(ring.g.bbox(), 0.3).unwrap();
        assert!(matches!(
            ScalarField::for_condenser(&ring, &coarse),
            Err(Error::CondenserTooThin { .. })
        ));
    }

    #[test]
    fn interpolation_reproduces_linear() {
        let f = ScalarField::from_fn(unit_square_grid(8), |x| 2.0 * x[0] - x[1]);
        let v = f.interpolate(&point2(0.33, 0.71));
        assert!((v - (0.66 - 0.71)).abs() < 1e-12);
        assert_eq!(f.interpolate(&point2(1.5, 0.5)), 0.0);
    }
}
