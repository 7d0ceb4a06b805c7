// SPDX-License-Identifier: Apache-2.0

//! Projected spectral gradient minimization of the discrete p-energy.

use serde::{Deserialize, Serialize};

use crate::capacity::bounds::{cap_lower_bound_measure, cap_upper_bound};
use crate::capacity::field::{Discretization, NodeTag, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{Grid, RingCondenser};

/// Descent scheme on the free nodes. Both project onto the admissible box
/// after every step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Polak–Ribière+ directions with a secant step along each direction.
    ConjugateGradient,
    /// Barzilai–Borwein steps with a nonmonotone Armijo search.
    SpectralGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub p: f64,
    pub method: Method,
    /// Initial gradient regularization, relative to the gradient scale of
    /// the condenser.
    pub epsilon_reg: f64,
    /// Final regularization of the continuation, same units.
    pub epsilon_min: f64,
    /// Relative energy change below which an iteration counts as stalled.
    pub tol: f64,
    pub max_iter: usize,
    pub continuation_steps: usize,
    /// Project free values onto [0, 1] after every step.
    pub project_upper: bool,
    /// Coarse levels used for the warm start.
    pub max_levels: usize,
    /// Evaluate the analytic bracket and attach it to the result.
    pub attach_bounds: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            p: 2.0,
            method: Method::ConjugateGradient,
            epsilon_reg: 1e-2,
            epsilon_min: 1e-6,
            tol: 1e-8,
            max_iter: 200_000,
            continuation_steps: 3,
            project_upper: true,
            max_levels: 5,
            attach_bounds: true,
        }
    }
}

impl SolverOptions {
    pub fn with_p(p: f64) -> Self {
        SolverOptions {
            p,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::ExponentTooSmall(self.p));
        }
        if !(self.epsilon_reg >= 0.0) || !(self.epsilon_min >= 0.0) {
            return Err(Error::InvalidParameter("epsilon_reg must be ≥ 0".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Absolute regularization levels of the continuation.
    fn schedule(&self, grad_scale: f64) -> Vec<f64> {
        // ε enters only through |∇f|² + ε², which for p = 2 shifts the
        // energy by a constant
        if self.p == 2.0 {
            return vec![0.0];
        }
        let steps = self.continuation_steps.max(1);
        let (a, b) = (self.epsilon_reg, self.epsilon_min.min(self.epsilon_reg));
        if steps == 1 || a == 0.0 {
            return vec![b * grad_scale];
        }
        if b == 0.0 {
            let mut v: Vec<f64> = (0..steps - 1)
                .map(|k| a * grad_scale * 0.01f64.powi(k as i32))
                .collect();
            v.push(0.0);
            return v;
        }
        let ratio = (b / a).powf(1.0 / (steps - 1) as f64);
        (0..steps)
            .map(|k| a * grad_scale * ratio.powi(k as i32))
            .collect()
    }
}

/// Capacity value with its analytic bracket and solver diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub p: f64,
    #[serde(rename = "h")]
    pub grid_h: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub iterations: usize,
    #[serde(skip)]
    pub final_energy_delta: f64,
    pub converged: bool,
}

impl CapacityResult {
    /// `value^{1/p}`.
    pub fn root(&self) -> f64 {
        self.value.powf(1.0 / self.p)
    }
}

/// Grid with spacing `1/res` covering G.
pub fn solve_grid(ring: &RingCondenser, res: usize) -> Result<Grid> {
    if res == 0 {
        return Err(Error::InvalidParameter("resolution must be ≥ 1".into()));
    }
    Grid::covering(ring.g.bbox(), 1.0 / res as f64)
}

pub fn cap_numeric(
    ring: &RingCondenser,
    opts: &SolverOptions,
    grid: &Grid,
) -> Result<CapacityResult> {
    solve_field(ring, opts, grid).map(|(r, _)| r)
}

/// Minimizes the energy and also returns the minimizing field.
pub fn solve_field(
    ring: &RingCondenser,
    opts: &SolverOptions,
    grid: &Grid,
) -> Result<(CapacityResult, ScalarField)> {
    opts.validate()?;
    if grid.dim != ring.dim() {
        return Err(Error::DimensionMismatch {
            expected: ring.dim(),
            got: grid.dim,
        });
    }
    let fine = ScalarField::for_condenser(ring, grid)?;

    // coarse levels for the warm start, coarsest last
    let mut levels = vec![fine];
    while levels.len() < opts.max_levels.max(1) {
        let prev = levels.last().expect("non-empty");
        if prev.free_count() < 4096 {
            break;
        }
        let coarse_grid = match Grid::covering(ring.g.bbox(), prev.grid.h * 2.0) {
            Ok(g) => g,
            Err(_) => break,
        };
        match ScalarField::for_condenser(ring, &coarse_grid) {
            Ok(f) if f.free_count() > 0 => levels.push(f),
            _ => break,
        }
    }

    let extent = ring.g.bbox();
    let min_extent = (0..ring.dim())
        .map(|i| extent.extent(i))
        .fold(f64::INFINITY, f64::min);
    let grad_scale = 2.0 / min_extent;
    let schedule = opts.schedule(grad_scale);

    let mut iterations = 0;
    let mut converged = true;
    let mut delta = 0.0;
    let mut field: Option<ScalarField> = None;
    let n_levels = levels.len();
    for (li, mut level) in levels.into_iter().rev().enumerate() {
        if let Some(prev) = &field {
            for (idx, t) in level.mask.iter().enumerate() {
                if *t == NodeTag::Interior {
                    level.values[idx] = prev.interpolate(&level.grid.node_point(idx));
                }
            }
            level.project(opts.project_upper);
        } else {
            initial_guess(&mut level);
        }
        let disc = Discretization::new(&level, false);
        let finest = li + 1 == n_levels;
        for &eps in &schedule {
            let out = match opts.method {
                Method::ConjugateGradient => ncg(&disc, &mut level.values, opts, eps),
                Method::SpectralGradient => spg(&disc, &mut level.values, opts, eps),
            };
            iterations += out.iterations;
            if finest {
                converged &= out.converged;
                delta = out.delta;
            }
        }
        field = Some(level);
    }
    let field = field.expect("at least one level");
    let disc = Discretization::new(&field, false);
    let value = disc.energy(&field.values, opts.p, 0.0, None).max(0.0);
    let (lower_bound, upper_bound) = if opts.attach_bounds {
        (
            cap_lower_bound_measure(ring, opts.p).ok(),
            cap_upper_bound(ring, opts.p).ok(),
        )
    } else {
        (None, None)
    };
    Ok((
        CapacityResult {
            value,
            p: opts.p,
            grid_h: grid.h,
            lower_bound,
            upper_bound,
            iterations,
            final_energy_delta: delta,
            converged,
        },
        field,
    ))
}

fn initial_guess(field: &mut ScalarField) {
    for (v, t) in field.values.iter_mut().zip(&field.mask) {
        if *t == NodeTag::Interior {
            *v = 0.5;
        }
    }
}

struct SpgOutcome {
    iterations: usize,
    converged: bool,
    delta: f64,
}

const GLL_MEMORY: usize = 10;
const STALL_WINDOW: usize = 10;
const ARMIJO_GAMMA: f64 = 1e-4;
const STEP_MIN: f64 = 1e-30;
const STEP_MAX: f64 = 1e30;

/// Nonmonotone spectral projected gradient on the free nodes.
fn spg(disc: &Discretization, x: &mut Vec<f64>, opts: &SolverOptions, eps: f64) -> SpgOutcome {
    let p = opts.p;
    let upper = opts.project_upper;
    let proj = |v: f64| if upper { v.clamp(0.0, 1.0) } else { v.max(0.0) };
    let free = &disc.free;
    let n = x.len();
    if free.is_empty() {
        return SpgOutcome {
            iterations: 0,
            converged: true,
            delta: 0.0,
        };
    }
    let mut g = vec![0.0; n];
    let mut f = disc.energy(x, p, eps, Some(&mut g));
    let mut xt = x.clone();
    let mut gt = vec![0.0; n];
    let mut d = vec![0.0; n];

    let mut pg_max: f64 = 0.0;
    for &i in free {
        pg_max = pg_max.max((proj(x[i] - g[i]) - x[i]).abs());
    }
    let mut lambda = if pg_max > 0.0 { 1.0 / pg_max } else { 1.0 };
    let mut history = std::collections::VecDeque::with_capacity(GLL_MEMORY);
    history.push_back(f);
    let mut best_f = f;
    let mut best_x: Option<Vec<f64>> = None;
    let mut stalled = 0;
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let mut gtd = 0.0;
        let mut dmax: f64 = 0.0;
        for &i in free {
            let di = proj(x[i] - lambda * g[i]) - x[i];
            d[i] = di;
            gtd += g[i] * di;
            dmax = dmax.max(di.abs());
        }
        if dmax < 1e-15 || gtd >= 0.0 {
            converged = true;
            delta = 0.0;
            break;
        }
        let f_ref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut alpha = 1.0;
        let mut ft;
        loop {
            for &i in free {
                xt[i] = x[i] + alpha * d[i];
            }
            ft = disc.energy(&xt, p, eps, Some(&mut gt));
            if ft <= f_ref + ARMIJO_GAMMA * alpha * gtd {
                break;
            }
            let denom = ft - f - alpha * gtd;
            let trial = if denom > 0.0 {
                -0.5 * alpha * alpha * gtd / denom
            } else {
                0.5 * alpha
            };
            alpha = if trial >= 0.1 * alpha && trial <= 0.9 * alpha {
                trial
            } else {
                0.5 * alpha
            };
            if alpha < 1e-12 {
                break;
            }
        }
        let mut sts = 0.0;
        let mut sty = 0.0;
        for &i in free {
            let s = xt[i] - x[i];
            let y = gt[i] - g[i];
            sts += s * s;
            sty += s * y;
        }
        let rel = (f - ft).abs() / ft.abs().max(f64::MIN_POSITIVE);
        if ft > best_f && f == best_f {
            best_x = Some(x.clone());
        }
        std::mem::swap(x, &mut xt);
        std::mem::swap(&mut g, &mut gt);
        f = ft;
        for &i in free {
            xt[i] = x[i];
        }
        if f < best_f {
            best_f = f;
            best_x = None;
        }
        lambda = if sty <= 0.0 {
            STEP_MAX
        } else {
            (sts / sty).clamp(STEP_MIN, STEP_MAX)
        };
        if history.len() == GLL_MEMORY {
            history.pop_front();
        }
        history.push_back(f);
        delta = rel;
        if rel < opts.tol {
            stalled += 1;
            if stalled >= STALL_WINDOW {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    if f > best_f {
        if let Some(b) = best_x {
            *x = b;
        }
    }
    SpgOutcome {
        iterations,
        converged,
        delta,
    }
}

/// Projected nonlinear conjugate gradient (Polak–Ribière+) with a secant
/// line search; restarts whenever the projection is active.
fn ncg(disc: &Discretization, x: &mut Vec<f64>, opts: &SolverOptions, eps: f64) -> SpgOutcome {
    let p = opts.p;
    let upper = opts.project_upper;
    let proj = |v: f64| if upper { v.clamp(0.0, 1.0) } else { v.max(0.0) };
    let free = &disc.free;
    let n = x.len();
    if free.is_empty() {
        return SpgOutcome {
            iterations: 0,
            converged: true,
            delta: 0.0,
        };
    }
    let mut g = vec![0.0; n];
    let mut f = disc.energy(x, p, eps, Some(&mut g));
    let mut xt = x.clone();
    let mut gt = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut g_prev_sq = 0.0;
    let mut g_prev = vec![0.0; n];
    let mut restart = true;
    let mut step = {
        let gmax = free.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
        if gmax > 0.0 {
            0.1 / gmax
        } else {
            1.0
        }
    };
    let mut stalled = 0;
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        // direction
        let mut gg = 0.0;
        let mut gy = 0.0;
        for &i in free {
            gg += g[i] * g[i];
            gy += g[i] * (g[i] - g_prev[i]);
        }
        if gg == 0.0 {
            converged = true;
            delta = 0.0;
            break;
        }
        let beta = if restart || g_prev_sq == 0.0 {
            0.0
        } else {
            (gy / g_prev_sq).max(0.0)
        };
        let mut gtd = 0.0;
        for &i in free {
            d[i] = -g[i] + beta * d[i];
            gtd += g[i] * d[i];
        }
        if gtd >= 0.0 {
            for &i in free {
                d[i] = -g[i];
            }
            gtd = -gg;
        }
        // secant step on the directional derivative
        for &i in free {
            xt[i] = x[i] + step * d[i];
        }
        disc.energy(&xt, p, eps, Some(&mut gt));
        let mut gtd1 = 0.0;
        for &i in free {
            gtd1 += gt[i] * d[i];
        }
        let mut alpha = if gtd1 > gtd {
            step * gtd / (gtd - gtd1)
        } else {
            2.0 * step
        };
        let mut ft;
        let mut clamped;
        loop {
            clamped = false;
            for &i in free {
                let v = x[i] + alpha * d[i];
                let pv = proj(v);
                clamped |= pv != v;
                xt[i] = pv;
            }
            ft = disc.energy(&xt, p, eps, Some(&mut gt));
            if ft <= f || alpha < 1e-14 * step {
                break;
            }
            alpha *= 0.5;
        }
        if ft > f {
            converged = true;
            delta = 0.0;
            break;
        }
        step = alpha;
        let rel = (f - ft).abs() / ft.abs().max(f64::MIN_POSITIVE);
        g_prev_sq = gg;
        std::mem::swap(x, &mut xt);
        std::mem::swap(&mut g_prev, &mut g);
        std::mem::swap(&mut g, &mut gt);
        f = ft;
        restart = clamped;
        delta = rel;
        if rel < opts.tol {
            stalled += 1;
            if stalled >= STALL_WINDOW {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    SpgOutcome {
        iterations,
        converged,
        delta,
    }
}
