// SPDX-License-Identifier: Apache-2.0

//! The capacitary metric `d_p(x, y) = inf_γ cp_p^{1/p}(γ; Ω)`, estimated over
//! polylines thickened to tubes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{cap_numeric, solve_grid, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{distance, ImplicitSet, Point, RingCondenser, MAX_DIM};
use crate::inequalities::distortion_constant;
use crate::mappings::MappingSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub dim: usize,
    pub vertices: Vec<Point>,
}

impl Polyline {
    /// A single vertex is a point curve; otherwise consecutive vertices
    /// must differ.
    pub fn new(vertices: Vec<Point>, dim: usize) -> Result<Self> {
        crate::geometry::check_dim(dim)?;
        if vertices.is_empty() {
            return Err(Error::InvalidParameter("polyline needs a vertex".into()));
        }
        if vertices
            .windows(2)
            .any(|w| distance(&w[0], &w[1], dim) == 0.0)
        {
            return Err(Error::InvalidParameter(
                "consecutive polyline vertices coincide".into(),
            ));
        }
        Ok(Polyline { dim, vertices })
    }

    /// Straight segment from `x` to `y` with `m` equally spaced interior
    /// control points.
    pub fn segment(x: &Point, y: &Point, m: usize, dim: usize) -> Result<Self> {
        let vertices = (0..m + 2)
            .map(|k| {
                let s = k as f64 / (m + 1) as f64;
                let mut p = [0.0; MAX_DIM];
                for i in 0..dim {
                    p[i] = x[i] + s * (y[i] - x[i]);
                }
                p
            })
            .collect();
        Polyline::new(vertices, dim)
    }

    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| distance(&w[0], &w[1], self.dim))
            .sum()
    }

    pub fn reversed(&self) -> Polyline {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline {
            dim: self.dim,
            vertices: v,
        }
    }

    /// Points along the curve no further than `step` apart.
    fn samples(&self, step: f64) -> Vec<Point> {
        let dim = self.dim;
        let mut out = vec![self.vertices[0]];
        for w in self.vertices.windows(2) {
            let len = distance(&w[0], &w[1], dim);
            let k = (len / step).ceil().max(1.0) as usize;
            for j in 1..=k {
                let s = j as f64 / k as f64;
                let mut p = [0.0; MAX_DIM];
                for i in 0..dim {
                    p[i] = w[0][i] + s * (w[1][i] - w[0][i]);
                }
                out.push(p);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    /// Grid cells per unit length.
    pub res: usize,
    /// Tube radius in grid cells.
    pub tube_cells: f64,
    /// Interior control points of the polyline.
    pub control_points: usize,
    /// Cap on capacity evaluations per query.
    pub max_evals: usize,
    /// Initial compass step relative to the control-point spacing.
    pub initial_step: f64,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            res: 64,
            tube_cells: 2.0,
            control_points: 5,
            max_evals: 100,
            initial_step: 0.5,
            seed: 0,
            solver: SolverOptions {
                attach_bounds: false,
                ..SolverOptions::default()
            },
        }
    }
}

impl MetricOptions {
    pub fn h(&self) -> f64 {
        1.0 / self.res.max(1) as f64
    }

    pub fn tube_radius(&self) -> f64 {
        self.tube_cells * self.h()
    }
}

/// `cp_p^{1/p}` of the tube condenser, with the same quantity at half the
/// tube radius for bias reporting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveCapacity {
    pub value: f64,
    pub half_radius_value: Option<f64>,
    pub tube_radius: f64,
    pub converged: bool,
}

fn check_curve_exponent(p: f64, dim: usize) -> Result<()> {
    let n = dim as f64;
    if !(p > n - 1.0 && p <= n) {
        return Err(Error::CurveExponentRange {
            p,
            lo: n - 1.0,
            hi: n,
        });
    }
    Ok(())
}

fn directions(dim: usize) -> Vec<Point> {
    let mut out = Vec::new();
    if dim == 2 {
        for k in 0..16 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            out.push([t.cos(), t.sin(), 0.0]);
        }
    } else {
        for a in -1i32..=1 {
            for b in -1i32..=1 {
                for c in -1i32..=1 {
                    if a == 0 && b == 0 && c == 0 {
                        continue;
                    }
                    let v = [a as f64, b as f64, c as f64];
                    let l = crate::geometry::norm(&v, 3);
                    out.push([v[0] / l, v[1] / l, v[2] / l]);
                }
            }
        }
    }
    out
}

/// Every sampled curve point and its neighbours at distance `clearance`
/// lie in `omega`.
fn has_clearance(curve: &Polyline, omega: &ImplicitSet, clearance: f64) -> bool {
    let dim = curve.dim;
    let dirs = directions(dim);
    let step = (0.5 * clearance).max(1e-9);
    curve.samples(step).iter().all(|x| {
        omega.contains(x)
            && dirs.iter().all(|d| {
                let mut y = *x;
                for i in 0..dim {
                    y[i] += clearance * d[i];
                }
                omega.contains(&y)
            })
    })
}

fn tube_value(
    curve: &Polyline,
    omega: &ImplicitSet,
    p: f64,
    radius: f64,
    opts: &MetricOptions,
) -> Result<(f64, bool)> {
    let dim = curve.dim;
    let tube = ImplicitSet::tube(curve.vertices.clone(), radius, dim)?;
    let ring = RingCondenser::new("tube", tube, omega.clone(), omega.clone())?;
    let grid = solve_grid(&ring, opts.res)?;
    let solver = SolverOptions {
        p,
        attach_bounds: false,
        ..opts.solver.clone()
    };
    let r = cap_numeric(&ring, &solver, &grid)?;
    Ok((r.value.powf(1.0 / p), r.converged))
}

fn clearance_needed(opts: &MetricOptions, radius: f64) -> f64 {
    radius + 2.0 * opts.h()
}

/// `cp_p^{1/p}(tube(γ, r); Ω)` for `n − 1 < p ≤ n`, plus the value at `r/2`.
pub fn curve_capacity(
    curve: &Polyline,
    omega: &ImplicitSet,
    p: f64,
    tube_radius: f64,
    opts: &MetricOptions,
) -> Result<CurveCapacity> {
    check_curve_exponent(p, curve.dim)?;
    if !(tube_radius > 0.0) {
        return Err(Error::InvalidParameter("tube radius must be > 0".into()));
    }
    if !has_clearance(curve, omega, clearance_needed(opts, tube_radius)) {
        return Err(Error::ClearanceViolation);
    }
    let (value, c1) = tube_value(curve, omega, p, tube_radius, opts)?;
    let half = tube_value(curve, omega, p, 0.5 * tube_radius, opts).ok();
    Ok(CurveCapacity {
        value,
        half_radius_value: half.map(|h| h.0),
        tube_radius,
        converged: c1 && half.is_none_or(|h| h.1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricQueryResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: f64,
    pub d_value: f64,
    /// Value of the straight segment the search started from.
    pub segment_value: f64,
    /// Best curve re-solved at half the tube radius.
    pub half_radius_value: Option<f64>,
    pub best_curve: Polyline,
    pub iterations: usize,
    pub evaluations: usize,
    pub tube_radius: f64,
    pub converged: bool,
}

/// Upper estimate of `d_p(x, y)`: compass search over the interior control
/// points of a polyline, started from the straight segment. The polling
/// order is shuffled by the seed.
pub fn capacitary_distance(
    x: &Point,
    y: &Point,
    omega: &ImplicitSet,
    p: f64,
    opts: &MetricOptions,
) -> Result<MetricQueryResult> {
    let dim = omega.dim();
    check_curve_exponent(p, dim)?;
    let radius = opts.tube_radius();
    let clearance = clearance_needed(opts, radius);
    if distance(x, y, dim) == 0.0 {
        return Ok(MetricQueryResult {
            x: x[..dim].to_vec(),
            y: y[..dim].to_vec(),
            p,
            d_value: 0.0,
            segment_value: 0.0,
            half_radius_value: Some(0.0),
            best_curve: Polyline::new(vec![*x], dim)?,
            iterations: 0,
            evaluations: 0,
            tube_radius: radius,
            converged: true,
        });
    }
    let m = opts.control_points;
    let mut curve = Polyline::segment(x, y, m, dim)?;
    if !has_clearance(&curve, omega, clearance) {
        return Err(Error::NoFeasibleCurve);
    }
    let (mut best, mut converged) = tube_value(&curve, omega, p, radius, opts)?;
    let segment_value = best;
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut step = opts.initial_step * distance(x, y, dim) / (m + 1) as f64;
    let min_step = opts.h();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut moves: Vec<(usize, usize, f64)> = (1..=m)
        .flat_map(|v| (0..dim).flat_map(move |a| [(v, a, 1.0), (v, a, -1.0)]))
        .collect();
    'search: while step >= min_step && evaluations < opts.max_evals {
        iterations += 1;
        moves.shuffle(&mut rng);
        let mut improved = false;
        for &(v, a, s) in &moves {
            if evaluations >= opts.max_evals {
                break 'search;
            }
            let mut trial = curve.clone();
            trial.vertices[v][a] += s * step;
            let distinct = trial
                .vertices
                .windows(2)
                .all(|w| distance(&w[0], &w[1], dim) > 0.0);
            if !distinct || !has_clearance(&trial, omega, clearance) {
                continue;
            }
            evaluations += 1;
            let Ok((val, ok)) = tube_value(&trial, omega, p, radius, opts) else {
                continue;
            };
            if val < best * (1.0 - 1e-9) {
                best = val;
                converged = ok;
                curve = trial;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let half_radius_value = tube_value(&curve, omega, p, 0.5 * radius, opts)
        .ok()
        .map(|v| v.0);
    Ok(MetricQueryResult {
        x: x[..dim].to_vec(),
        y: y[..dim].to_vec(),
        p,
        d_value: best,
        segment_value,
        half_radius_value,
        best_curve: curve,
        iterations,
        evaluations,
        tube_radius: radius,
        converged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    /// Within the tolerance band but not strictly satisfied, or satisfied
    /// with near equality.
    Tight,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryEntry {
    pub i: usize,
    pub j: usize,
    pub forward: f64,
    pub backward: f64,
    pub relative_gap: f64,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// `d(x_i, x_k)`.
    pub direct: f64,
    /// `d(x_i, x_j) + d(x_j, x_k)`.
    pub detour: f64,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricAxiomReport {
    pub p: f64,
    pub points: Vec<Vec<f64>>,
    /// `distances[i][j]` from the query started at `x_i`.
    pub distances: Vec<Vec<f64>>,
    pub symmetry: Vec<SymmetryEntry>,
    pub triangle: Vec<TriangleEntry>,
    /// Pairs of distinct points with a non-positive distance.
    pub positivity_failures: Vec<(usize, usize)>,
    pub queries: Vec<MetricQueryResult>,
}

impl MetricAxiomReport {
    pub fn passed(&self) -> bool {
        self.positivity_failures.is_empty()
            && self
                .symmetry
                .iter()
                .all(|e| e.status != CheckStatus::Violated)
            && self
                .triangle
                .iter()
                .all(|e| e.status != CheckStatus::Violated)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomTolerances {
    pub symmetry: f64,
    pub triangle: f64,
    /// Relative band under which a satisfied triangle check counts as tight.
    pub tight_band: f64,
}

impl Default for AxiomTolerances {
    fn default() -> Self {
        AxiomTolerances {
            symmetry: 0.02,
            triangle: 0.05,
            tight_band: 0.02,
        }
    }
}

/// Symmetry, triangle inequality and positivity over all pairs and
/// ordered triples of `points`, each pair queried in both directions.
pub fn check_metric_axioms(
    omega: &ImplicitSet,
    p: f64,
    points: &[Point],
    opts: &MetricOptions,
    tol: &AxiomTolerances,
) -> Result<MetricAxiomReport> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least 3 sample points".into(),
        ));
    }
    let dim = omega.dim();
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let queries = pairs
        .par_iter()
        .map(|&(i, j)| capacitary_distance(&points[i], &points[j], omega, p, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut d = vec![vec![0.0; n]; n];
    for (&(i, j), q) in pairs.iter().zip(&queries) {
        d[i][j] = q.d_value;
    }
    let mut symmetry = Vec::new();
    let mut positivity_failures = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (d[i][j], d[j][i]);
            let mean = 0.5 * (a + b);
            let gap = if mean > 0.0 {
                (a - b).abs() / mean
            } else {
                0.0
            };
            symmetry.push(SymmetryEntry {
                i,
                j,
                forward: a,
                backward: b,
                relative_gap: gap,
                status: if gap <= tol.symmetry {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Violated
                },
            });
            let distinct = distance(&points[i], &points[j], dim) > 0.0;
            if distinct && !(a > 0.0 && b > 0.0) {
                positivity_failures.push((i, j));
            }
        }
    }
    let mut triangle = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                let direct = d[i][k];
                let detour = d[i][j] + d[j][k];
                let status = if direct <= detour * (1.0 - tol.tight_band) {
                    CheckStatus::Pass
                } else if direct <= detour * (1.0 + tol.triangle) {
                    CheckStatus::Tight
                } else {
                    CheckStatus::Violated
                };
                triangle.push(TriangleEntry {
                    i,
                    j,
                    k,
                    direct,
                    detour,
                    status,
                });
            }
        }
    }
    Ok(MetricAxiomReport {
        p,
        points: points.iter().map(|x| x[..dim].to_vec()).collect(),
        distances: d,
        symmetry,
        triangle,
        positivity_failures,
        queries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEntry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `d_q(φ⁻¹x, φ⁻¹y)` in Ω.
    pub lhs: f64,
    /// `d_p(x, y)` in Ω̃.
    pub rhs: f64,
    pub bound: f64,
    pub slack: f64,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub p: f64,
    pub q: f64,
    pub constant: f64,
    pub tol: f64,
    pub entries: Vec<LipschitzEntry>,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.status != CheckStatus::Violated)
    }
}

/// `d_q(φ⁻¹x, φ⁻¹y) ≤ K_{p,q}(φ;Ω) · d_p(x, y)` for pairs in Ω̃ and
/// `n − 1 < q ≤ p ≤ n`. Entries within the slack band are flagged tight.
pub fn check_lipschitz(
    phi: &MappingSpec,
    pairs: &[(Point, Point)],
    p: f64,
    q: f64,
    opts: &MetricOptions,
    tol: f64,
) -> Result<LipschitzReport> {
    let dim = phi.dim();
    let n = dim as f64;
    if !(q > n - 1.0 && q <= p && p <= n) {
        return Err(Error::ExponentRange(format!(
            "need n-1 < q <= p <= n (n={dim}, p={p}, q={q})"
        )));
    }
    let constant = distortion_constant(phi, p, q, 256)?.k_pq;
    let entries = pairs
        .par_iter()
        .map(|(x, y)| {
            let rhs = capacitary_distance(x, y, phi.codomain(), p, opts)?.d_value;
            let (xp, yp) = (phi.inverse(x), phi.inverse(y));
            let lhs = capacitary_distance(&xp, &yp, phi.domain(), q, opts)?.d_value;
            let bound = constant * rhs;
            let slack = bound - lhs;
            let status = if slack >= 0.0 {
                CheckStatus::Pass
            } else if slack >= -tol * bound {
                CheckStatus::Tight
            } else {
                CheckStatus::Violated
            };
            Ok(LipschitzEntry {
                x: x[..dim].to_vec(),
                y: y[..dim].to_vec(),
                lhs,
                rhs,
                bound,
                slack,
                status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LipschitzReport {
        p,
        q,
        constant,
        tol,
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityExponents {
    pub p: f64,
    pub q: f64,
    pub p_prime: f64,
    pub q_prime: f64,
}

/// `p′ = p/(p − n + 1)`, `q′ = q/(q − n + 1)` for `p, q > n − 1`.
pub fn duality_exponents(p: f64, q: f64, n: usize) -> Result<DualityExponents> {
    let n1 = n as f64 - 1.0;
    if !(p > n1 && q > n1) {
        return Err(Error::ExponentRange(format!(
            "p and q must exceed n-1 = {n1} (p={p}, q={q})"
        )));
    }
    Ok(DualityExponents {
        p,
        q,
        p_prime: p / (p - n1),
        q_prime: q / (q - n1),
    })
}

/// SVG drawing of the boundary of `omega` (lattice cells that straddle it)
/// and the given curves, for 2D domains.
pub fn render_svg(omega: &ImplicitSet, curves: &[(String, Polyline)]) -> String {
    let b = omega.bbox();
    let size = 480.0;
    let span = b.extent(0).max(b.extent(1)).max(1e-12);
    let to_px = |p: &Point| {
        (
            20.0 + (p[0] - b.lo[0]) / span * size,
            20.0 + (b.hi[1] - p[1]) / span * size,
        )
    };
    let mut s = String::new();
    let w = size + 40.0;
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{w:.0}\" viewBox=\"0 0 {w:.0} {w:.0}\">\n"
    ));
    let m = 160;
    let dx = span / m as f64;
    for i in 0..m {
        for j in 0..m {
            let c = [
                b.lo[0] + (i as f64 + 0.5) * dx,
                b.lo[1] + (j as f64 + 0.5) * dx,
                0.0,
            ];
            let inside = omega.contains(&c);
            let edge = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
                .iter()
                .any(|(u, v)| omega.contains(&[c[0] + u * dx, c[1] + v * dx, 0.0]) != inside);
            if inside && edge {
                let (x, y) = to_px(&c);
                s.push_str(&format!(
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"2\" height=\"2\" fill=\"#555\"/>\n",
                    x - 1.0,
                    y - 1.0
                ));
            }
        }
    }
    let colors = [
        "#c0392b", "#2471a3", "#1e8449", "#b9770e", "#7d3c98", "#117a65",
    ];
    for (k, (label, curve)) in curves.iter().enumerate() {
        let pts: Vec<String> = curve
            .vertices
            .iter()
            .map(|v| {
                let (x, y) = to_px(v);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"><title>{}</title></polyline>\n",
            pts.join(" "),
            colors[k % colors.len()],
            label
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point2;

    #[test]
    fn duality() {
        let d = duality_exponents(2.0, 2.0, 2).unwrap();
        assert_eq!((d.p_prime, d.q_prime), (2.0, 2.0));
        assert!((duality_exponents(4.0, 4.0, 2).unwrap().p_prime - 4.0 / 3.0).abs() < 1e-15);
        assert!(duality_exponents(2.0, 2.5, 3).is_err());
    }

    #[test]
    fn exponent_range_and_coincident_points() {
        let disk = ImplicitSet::open_ball(point2(0.0, 0.0), 1.0, 2).unwrap();
        let seg = Polyline::segment(&point2(-0.25, 0.0), &point2(0.25, 0.0), 0, 2).unwrap();
        let opts = MetricOptions::default();
        assert!(matches!(
            curve_capacity(&seg, &disk, 3.0, 0.03, &opts),
            Err(Error::CurveExponentRange { .. })
        ));
        let x = point2(0.1, 0.2);
        let r = capacitary_distance(&x, &x, &disk, 2.0, &opts).unwrap();
        assert_eq!(r.d_value, 0.0);
        assert_eq!(r.evaluations, 0);
    }

    #[test]
    fn clearance() {
        let disk = ImplicitSet::open_ball(point2(0.0, 0.0), 1.0, 2).unwrap();
        let near_edge = Polyline::segment(&point2(0.0, 0.0), &point2(0.98, 0.0), 1, 2).unwrap();
        let opts = MetricOptions::default();
        assert_eq!(
            curve_capacity(&near_edge, &disk, 2.0, 0.03, &opts),
            Err(Error::ClearanceViolation)
        );
    }
}
