// SPDX-License-Identifier: Apache-2.0

//! Implicit sets, ring condensers, grids and condenser pullbacks.
//!
//! Points are stored as `[f64; 3]`; in two dimensions the third coordinate is
//! ignored and kept at zero. Every set carries its dimension, and all
//! operations only look at the first `dim` coordinates.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mappings::{MappingKind, MappingSpec};

pub const MAX_DIM: usize = 3;

pub type Point = [f64; MAX_DIM];

/// Orthonormal frame, one unit axis per row.
pub type Frame = [[f64; MAX_DIM]; MAX_DIM];

pub const IDENTITY_FRAME: Frame = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Relative padding applied to preimage bounding boxes.
pub const PREIMAGE_BBOX_PADDING: f64 = 0.05;

/// Largest grid the solvers will allocate.
pub const MAX_GRID_NODES: usize = 40_000_000;

pub fn point2(x: f64, y: f64) -> Point {
    [x, y, 0.0]
}

pub fn point3(x: f64, y: f64, z: f64) -> Point {
    [x, y, z]
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: &Point, b: &Point, dim: usize) -> f64 {
    (0..dim).map(|i| a[i] * b[i]).sum()
}

pub fn norm(a: &Point, dim: usize) -> f64 {
    dot(a, a, dim).sqrt()
}

pub fn distance(a: &Point, b: &Point, dim: usize) -> f64 {
    norm(&sub(a, b), dim)
}

/// Volume of the unit ball in dimension `dim`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => f64::NAN,
    }
}

/// Surface area of the unit sphere in dimension `dim`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Distance from `x` to the segment `[a, b]`.
pub fn point_segment_distance(x: &Point, a: &Point, b: &Point, dim: usize) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab, dim);
    if len2 == 0.0 {
        return distance(x, a, dim);
    }
    let t = (dot(&sub(x, a), &ab, dim) / len2).clamp(0.0, 1.0);
    distance(x, &add(a, &scale(&ab, t)), dim)
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BBox {
    pub lo: Point,
    pub hi: Point,
    pub dim: usize,
}

impl BBox {
    pub fn new(lo: Point, hi: Point, dim: usize) -> Self {
        BBox { lo, hi, dim }
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        (0..self.dim).all(|i| other.lo[i] >= self.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn extent(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|i| self.extent(i)).product()
    }

    pub fn diagonal(&self) -> f64 {
        distance(&self.lo, &self.hi, self.dim)
    }

    pub fn center(&self) -> Point {
        scale(&add(&self.lo, &self.hi), 0.5)
    }

    pub fn padded(&self, rel: f64) -> BBox {
        let mut out = *self;
        let pad = rel * (0..self.dim).map(|i| self.extent(i)).fold(0.0, f64::max);
        for i in 0..self.dim {
            out.lo[i] -= pad;
            out.hi[i] += pad;
        }
        out
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>, dim: usize) -> BBox {
        let mut lo = [f64::INFINITY; MAX_DIM];
        let mut hi = [f64::NEG_INFINITY; MAX_DIM];
        for i in dim..MAX_DIM {
            lo[i] = 0.0;
            hi[i] = 0.0;
        }
        for p in points {
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        BBox { lo, hi, dim }
    }

    /// Regular sample of the box boundary (`per_edge` points along each edge
    /// or face direction).
    pub fn boundary_samples(&self, per_edge: usize) -> Vec<Point> {
        let m = per_edge.max(2);
        let mut out = Vec::new();
        let coord = |i: usize, k: usize| self.lo[i] + self.extent(i) * k as f64 / (m - 1) as f64;
        match self.dim {
            2 => {
                for k in 0..m {
                    for &y in &[self.lo[1], self.hi[1]] {
                        out.push(point2(coord(0, k), y));
                    }
                    for &x in &[self.lo[0], self.hi[0]] {
                        out.push(point2(x, coord(1, k)));
                    }
                }
            }
            _ => {
                for fixed in 0..3 {
                    let (a, b) = ((fixed + 1) % 3, (fixed + 2) % 3);
                    for &v in &[self.lo[fixed], self.hi[fixed]] {
                        for ka in 0..m {
                            for kb in 0..m {
                                let mut p = [0.0; 3];
                                p[fixed] = v;
                                p[a] = coord(a, ka);
                                p[b] = coord(b, kb);
                                out.push(p);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Regular lattice of `m` points per axis covering the box.
    pub fn lattice(&self, m: usize) -> Vec<Point> {
        let m = m.max(2);
        let coord = |i: usize, k: usize| self.lo[i] + self.extent(i) * k as f64 / (m - 1) as f64;
        let mut out = Vec::with_capacity(m.pow(self.dim as u32));
        match self.dim {
            2 => {
                for j in 0..m {
                    for i in 0..m {
                        out.push(point2(coord(0, i), coord(1, j)));
                    }
                }
            }
            _ => {
                for k in 0..m {
                    for j in 0..m {
                        for i in 0..m {
                            out.push(point3(coord(0, i), coord(1, j), coord(2, k)));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Kind tag of an implicit set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    Ball,
    Box,
    Tube,
    Preimage,
    Intersection,
    Difference,
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SetKind::Ball => "ball",
            SetKind::Box => "box",
            SetKind::Tube => "tube",
            SetKind::Preimage => "preimage",
            SetKind::Intersection => "intersection",
            SetKind::Difference => "difference",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Ball {
        center: Point,
        radius: f64,
        closed: bool,
    },
    /// Box `{ |<frame_i, x - center>| <= half_i }`. A zero half-width marks a
    /// plate, which grids resolve as a single node layer.
    Box {
        center: Point,
        frame: Frame,
        half: Point,
        closed: bool,
    },
    Tube {
        vertices: Vec<Point>,
        radius: f64,
    },
    Preimage {
        base: ImplicitSet,
        map: MappingKind,
    },
    Intersection(Vec<ImplicitSet>),
    Difference(ImplicitSet, ImplicitSet),
}

/// A bounded subset of R^n given by a pure membership predicate and a
/// bounding box that contains every member.
#[derive(Clone, Debug)]
pub struct ImplicitSet {
    dim: usize,
    bbox: BBox,
    shape: Arc<Shape>,
}

impl ImplicitSet {
    pub fn ball(center: Point, radius: f64, dim: usize) -> Result<Self> {
        Self::ball_with(center, radius, dim, true)
    }

    pub fn open_ball(center: Point, radius: f64, dim: usize) -> Result<Self> {
        Self::ball_with(center, radius, dim, false)
    }

    fn ball_with(center: Point, radius: f64, dim: usize, closed: bool) -> Result<Self> {
        check_dim(dim)?;
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("ball radius {radius}")));
        }
        let mut lo = center;
        let mut hi = center;
        for i in 0..dim {
            lo[i] -= radius;
            hi[i] += radius;
        }
        Ok(ImplicitSet {
            dim,
            bbox: BBox::new(lo, hi, dim),
            shape: Arc::new(Shape::Ball {
                center,
                radius,
                closed,
            }),
        })
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn aabox(lo: Point, hi: Point, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let center = scale(&add(&lo, &hi), 0.5);
        let mut half = [0.0; MAX_DIM];
        for i in 0..dim {
            half[i] = 0.5 * (hi[i] - lo[i]);
        }
        Self::oriented_box(center, IDENTITY_FRAME, half, dim, true)
    }

    pub fn open_aabox(lo: Point, hi: Point, dim: usize) -> Result<Self> {
        let b = Self::aabox(lo, hi, dim)?;
        match &*b.shape {
            Shape::Box {
                center,
                frame,
                half,
                ..
            } => Self::oriented_box(*center, *frame, *half, dim, false),
            _ => unreachable!(),
        }
    }

    pub fn oriented_box(
        center: Point,
        frame: Frame,
        half: Point,
        dim: usize,
        closed: bool,
    ) -> Result<Self> {
        check_dim(dim)?;
        if (0..dim).any(|i| !(half[i] >= 0.0) || !half[i].is_finite()) {
            return Err(Error::InvalidParameter(
                "box half-widths must be >= 0".into(),
            ));
        }
        let mut lo = center;
        let mut hi = center;
        for i in 0..dim {
            let reach: f64 = (0..dim).map(|j| frame[j][i].abs() * half[j]).sum();
            lo[i] -= reach;
            hi[i] += reach;
        }
        Ok(ImplicitSet {
            dim,
            bbox: BBox::new(lo, hi, dim),
            shape: Arc::new(Shape::Box {
                center,
                frame,
                half,
                closed,
            }),
        })
    }

    /// Closed tube of the given radius around a polyline.
    pub fn tube(vertices: Vec<Point>, radius: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if vertices.is_empty() || !(radius > 0.0) {
            return Err(Error::InvalidParameter(
                "tube needs vertices and radius > 0".into(),
            ));
        }
        let mut bbox = BBox::from_points(vertices.iter(), dim);
        for i in 0..dim {
            bbox.lo[i] -= radius;
            bbox.hi[i] += radius;
        }
        Ok(ImplicitSet {
            dim,
            bbox,
            shape: Arc::new(Shape::Tube { vertices, radius }),
        })
    }

    /// `{x : map(x) ∈ base}`, with the default 5% bounding-box padding.
    pub fn preimage(base: &ImplicitSet, map: &MappingKind) -> Result<Self> {
        Self::preimage_with_padding(base, map, PREIMAGE_BBOX_PADDING)
    }

    pub fn preimage_with_padding(
        base: &ImplicitSet,
        map: &MappingKind,
        padding: f64,
    ) -> Result<Self> {
        let dim = base.dim;
        let inverse = map.inverse(dim)?;
        let per_edge = if dim == 2 { 256 } else { 32 };
        let samples: Vec<Point> = base
            .bbox
            .boundary_samples(per_edge)
            .iter()
            .map(|p| inverse.apply(p, dim))
            .collect();
        if samples.iter().any(|p| (0..dim).any(|i| !p[i].is_finite())) {
            return Err(Error::NotInvertibleOnRegion);
        }
        let bbox = BBox::from_points(samples.iter(), dim).padded(padding);
        Ok(ImplicitSet {
            dim,
            bbox,
            shape: Arc::new(Shape::Preimage {
                base: base.clone(),
                map: map.clone(),
            }),
        })
    }

    pub fn intersection(sets: Vec<ImplicitSet>) -> Result<Self> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty intersection".into()))?;
        let dim = first.dim;
        let mut lo = first.bbox.lo;
        let mut hi = first.bbox.hi;
        for s in &sets {
            if s.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim,
                });
            }
            for i in 0..dim {
                lo[i] = lo[i].max(s.bbox.lo[i]);
                hi[i] = hi[i].min(s.bbox.hi[i]);
            }
        }
        for i in 0..dim {
            if hi[i] < lo[i] {
                hi[i] = lo[i];
            }
        }
        Ok(ImplicitSet {
            dim,
            bbox: BBox::new(lo, hi, dim),
            shape: Arc::new(Shape::Intersection(sets)),
        })
    }

    /// `a ∖ b`.
    pub fn difference(a: &ImplicitSet, b: &ImplicitSet) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch {
                expected: a.dim,
                got: b.dim,
            });
        }
        Ok(ImplicitSet {
            dim: a.dim,
            bbox: a.bbox,
            shape: Arc::new(Shape::Difference(a.clone(), b.clone())),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    pub fn kind(&self) -> SetKind {
        match &*self.shape {
            Shape::Ball { .. } => SetKind::Ball,
            Shape::Box { .. } => SetKind::Box,
            Shape::Tube { .. } => SetKind::Tube,
            Shape::Preimage { .. } => SetKind::Preimage,
            Shape::Intersection(_) => SetKind::Intersection,
            Shape::Difference(..) => SetKind::Difference,
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        let dim = self.dim;
        match &*self.shape {
            Shape::Ball {
                center,
                radius,
                closed,
            } => {
                let d2: f64 = (0..dim).map(|i| (x[i] - center[i]).powi(2)).sum();
                if *closed {
                    d2 <= radius * radius
                } else {
                    d2 < radius * radius
                }
            }
            Shape::Box {
                center,
                frame,
                half,
                closed,
            } => {
                let d = sub(x, center);
                (0..dim).all(|j| {
                    let c = dot(&frame[j], &d, dim).abs();
                    if *closed {
                        c <= half[j]
                    } else {
                        c < half[j]
                    }
                })
            }
            Shape::Tube { vertices, radius } => tube_distance(x, vertices, dim) <= *radius,
            Shape::Preimage { base, map } => base.contains(&map.apply(x, dim)),
            Shape::Intersection(sets) => sets.iter().all(|s| s.contains(x)),
            Shape::Difference(a, b) => a.contains(x) && !b.contains(x),
        }
    }

    /// Membership as seen by a grid of spacing `h`: plates (zero half-width
    /// boxes) are widened to one node layer.
    pub fn contains_at(&self, x: &Point, h: f64) -> bool {
        let dim = self.dim;
        match &*self.shape {
            Shape::Box {
                center,
                frame,
                half,
                closed,
            } if (0..dim).any(|j| half[j] == 0.0) => {
                let d = sub(x, center);
                (0..dim).all(|j| {
                    let c = dot(&frame[j], &d, dim);
                    if half[j] == 0.0 {
                        -0.5 * h <= c && c < 0.5 * h
                    } else if *closed {
                        c.abs() <= half[j]
                    } else {
                        c.abs() < half[j]
                    }
                })
            }
            Shape::Preimage { base, map } if base.is_degenerate() => {
                let y = map.apply(x, dim);
                let stretch = map.jacobian(x, dim).map(|j| op_norm(&j)).unwrap_or(1.0);
                base.contains_at(&y, h * stretch)
            }
            Shape::Intersection(sets) => sets.iter().all(|s| s.contains_at(x, h)),
            Shape::Difference(a, b) => a.contains_at(x, h) && !b.contains(x),
            _ => self.contains(x),
        }
    }

    /// True for sets of measure zero that grids must thicken (plates).
    pub fn is_degenerate(&self) -> bool {
        match &*self.shape {
            Shape::Box { half, .. } => (0..self.dim).any(|j| half[j] == 0.0),
            Shape::Preimage { base, .. } => base.is_degenerate(),
            Shape::Intersection(sets) => sets.iter().any(|s| s.is_degenerate()),
            Shape::Difference(a, _) => a.is_degenerate(),
            _ => false,
        }
    }

    pub fn is_convex(&self) -> bool {
        match &*self.shape {
            Shape::Ball { .. } | Shape::Box { .. } => true,
            Shape::Tube { vertices, .. } => vertices.len() <= 2,
            Shape::Preimage { base, map } => map.is_affine() && base.is_convex(),
            Shape::Intersection(sets) => sets.iter().all(|s| s.is_convex()),
            Shape::Difference(..) => false,
        }
    }

    pub fn volume_exact(&self) -> Option<f64> {
        let dim = self.dim;
        match &*self.shape {
            Shape::Ball { radius, .. } => Some(unit_ball_volume(dim) * radius.powi(dim as i32)),
            Shape::Box { half, .. } => Some((0..dim).map(|i| 2.0 * half[i]).product()),
            Shape::Preimage { base, map } => {
                let det = map.affine_determinant(dim)?;
                Some(base.volume_exact()? / det.abs())
            }
            Shape::Difference(a, b) => Some(a.volume_exact()? - b.volume_exact()?),
            _ => None,
        }
    }

    /// (n−1)-measure of the boundary. Plates count both faces.
    pub fn surface_area_exact(&self) -> Option<f64> {
        let dim = self.dim;
        match &*self.shape {
            Shape::Ball { radius, .. } => Some(unit_sphere_area(dim) * radius.powi(dim as i32 - 1)),
            Shape::Box { half, .. } => Some(
                (0..dim)
                    .map(|i| {
                        2.0 * (0..dim)
                            .filter(|&j| j != i)
                            .map(|j| 2.0 * half[j])
                            .product::<f64>()
                    })
                    .sum(),
            ),
            Shape::Preimage {
                base,
                map: MappingKind::Identity,
            } => base.surface_area_exact(),
            _ => None,
        }
    }

    pub fn diameter_exact(&self) -> Option<f64> {
        let dim = self.dim;
        match &*self.shape {
            Shape::Ball { radius, .. } => Some(2.0 * radius),
            Shape::Box { half, .. } => Some(2.0 * norm(half, dim)),
            Shape::Tube { vertices, radius } if vertices.len() <= 2 => {
                let a = vertices[0];
                let b = *vertices.last().unwrap();
                Some(distance(&a, &b, dim) + 2.0 * radius)
            }
            Shape::Preimage {
                base,
                map: MappingKind::Identity,
            } => base.diameter_exact(),
            _ => None,
        }
    }

    /// Diameter estimated from members on a lattice of `m` points per axis.
    pub fn diameter_estimate(&self, m: usize) -> f64 {
        let pts: Vec<Point> = self
            .bbox
            .lattice(m)
            .into_iter()
            .filter(|p| self.contains(p))
            .collect();
        let mut best: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                best = best.max(distance(a, b, self.dim));
            }
        }
        best
    }

    pub fn diameter(&self) -> f64 {
        self.diameter_exact()
            .unwrap_or_else(|| self.diameter_estimate(if self.dim == 2 { 96 } else { 20 }))
    }

    /// Ball center and radius, if this is a ball.
    pub fn as_ball(&self) -> Option<(Point, f64)> {
        match &*self.shape {
            Shape::Ball { center, radius, .. } => Some((*center, *radius)),
            _ => None,
        }
    }

    /// Center and radius when the set is a ball, looking through preimages
    /// under maps that send balls to balls (identity, scalings, radial
    /// stretches about the origin).
    pub fn as_ball_resolved(&self) -> Option<(Point, f64)> {
        let dim = self.dim;
        match &*self.shape {
            Shape::Ball { center, radius, .. } => Some((*center, *radius)),
            Shape::Preimage { base, map } => {
                let (c, r) = base.as_ball_resolved()?;
                match map {
                    MappingKind::Identity => Some((c, r)),
                    MappingKind::RadialStretch(a) if norm(&c, dim) == 0.0 => {
                        Some((c, r.powf(1.0 / a)))
                    }
                    MappingKind::Linear(m) => {
                        let s = m[(0, 0)];
                        let scalar = (0..dim)
                            .all(|i| (0..dim).all(|j| m[(i, j)] == if i == j { s } else { 0.0 }));
                        if scalar && s != 0.0 {
                            Some((scale(&c, 1.0 / s), r / s.abs()))
                        } else {
                            None
                        }
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn as_box(&self) -> Option<(Point, Frame, Point)> {
        match &*self.shape {
            Shape::Box {
                center,
                frame,
                half,
                ..
            } => Some((*center, *frame, *half)),
            _ => None,
        }
    }

    /// Base set and map, if this is a preimage.
    pub fn as_preimage(&self) -> Option<(&ImplicitSet, &MappingKind)> {
        match &*self.shape {
            Shape::Preimage { base, map } => Some((base, map)),
            _ => None,
        }
    }

    /// Members of a regular lattice over the bounding box.
    pub fn lattice_members(&self, m: usize) -> Vec<Point> {
        self.bbox
            .lattice(m)
            .into_iter()
            .filter(|p| self.contains(p))
            .collect()
    }

    /// Sampled check that every lattice member of `self` lies in `other`.
    pub fn sampled_subset_of(&self, other: &ImplicitSet, m: usize) -> bool {
        self.lattice_members(m).iter().all(|p| other.contains(p))
    }
}

fn tube_distance(x: &Point, vertices: &[Point], dim: usize) -> f64 {
    if vertices.len() == 1 {
        return distance(x, &vertices[0], dim);
    }
    vertices
        .windows(2)
        .map(|w| point_segment_distance(x, &w[0], &w[1], dim))
        .fold(f64::INFINITY, f64::min)
}

/// Largest singular value.
pub fn op_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Ordered pair `(F, G)` with `F ⊂ G ⊂ ambient`.
#[derive(Clone, Debug)]
pub struct RingCondenser {
    pub label: String,
    pub f: ImplicitSet,
    pub g: ImplicitSet,
    pub ambient: ImplicitSet,
}

/// Lattice density used for sampled inclusion checks.
fn inclusion_lattice(dim: usize) -> usize {
    if dim == 2 {
        81
    } else {
        21
    }
}

impl RingCondenser {
    /// Validates dimensions and the sampled inclusions `F ⊂ G ⊂ ambient`.
    pub fn new(
        label: impl Into<String>,
        f: ImplicitSet,
        g: ImplicitSet,
        ambient: ImplicitSet,
    ) -> Result<Self> {
        let dim = g.dim();
        for s in [&f, &ambient] {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
        }
        let m = inclusion_lattice(dim);
        if !g.sampled_subset_of(&ambient, m) {
            return Err(Error::EscapesAmbient);
        }
        if !f.sampled_subset_of(&g, m) {
            return Err(Error::NotNested);
        }
        Ok(RingCondenser {
            label: label.into(),
            f,
            g,
            ambient,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Exact `dist(F, ∂G)` for ball/box configurations.
    pub fn boundary_gap_exact(&self) -> Option<f64> {
        let dim = self.dim();
        if let (Some((cf, rf)), Some((cg, rg))) = (self.f.as_ball(), self.g.as_ball()) {
            return Some(rg - rf - distance(&cf, &cg, dim));
        }
        if let (Some((cf, ff, hf)), Some((cg, fg, hg))) = (self.f.as_box(), self.g.as_box()) {
            if ff == fg {
                let d = sub(&cf, &cg);
                let gap = (0..dim)
                    .map(|j| hg[j] - dot(&fg[j], &d, dim).abs() - hf[j])
                    .fold(f64::INFINITY, f64::min);
                return Some(gap);
            }
        }
        if let (Some((cf, ff, hf)), Some((cg, rg))) = (self.f.as_box(), self.g.as_ball()) {
            let mut far: f64 = 0.0;
            for corner in 0..(1usize << dim) {
                let mut p = cf;
                for j in 0..dim {
                    let s = if corner & (1 << j) != 0 { 1.0 } else { -1.0 };
                    for i in 0..dim {
                        p[i] += s * hf[j] * ff[j][i];
                    }
                }
                far = far.max(distance(&p, &cg, dim));
            }
            return Some(rg - far);
        }
        if let (Some((cf, rf)), Some((cg, fg, hg))) = (self.f.as_ball(), self.g.as_box()) {
            let d = sub(&cf, &cg);
            let gap = (0..dim)
                .map(|j| hg[j] - dot(&fg[j], &d, dim).abs())
                .fold(f64::INFINITY, f64::min);
            return Some(gap - rf);
        }
        None
    }

    /// Grid estimate of `dist(F, ∂G)`: smallest distance between nodes of F
    /// and nodes outside G.
    pub fn boundary_gap_estimate(&self, h: f64) -> Result<f64> {
        let grid = Grid::covering(self.g.bbox(), h)?;
        let dim = self.dim();
        let mut f_nodes = Vec::new();
        let mut out_nodes = Vec::new();
        let n = grid.nodes_per_axis();
        for idx in 0..grid.node_count() {
            let x = grid.node_point(idx);
            let ijk = grid.node_ijk(idx);
            if self.f.contains_at(&x, h) {
                f_nodes.push(x);
            } else if !self.g.contains(&x) {
                let next_to_g = (0..dim).any(|a| {
                    [-1i64, 1].iter().any(|&s| {
                        let k = ijk[a] as i64 + s;
                        if k < 0 || k >= n[a] as i64 {
                            return false;
                        }
                        let mut y = x;
                        y[a] += s as f64 * h;
                        self.g.contains(&y)
                    })
                });
                if next_to_g {
                    out_nodes.push(x);
                }
            }
        }
        if f_nodes.is_empty() {
            return Err(Error::PlateNotResolved);
        }
        let mut best = f64::INFINITY;
        for a in &f_nodes {
            for b in &out_nodes {
                best = best.min(distance(a, b, dim));
            }
        }
        Ok(best)
    }

    pub fn boundary_gap(&self, h: f64) -> Result<f64> {
        match self.boundary_gap_exact() {
            Some(d) => Ok(d),
            None => self.boundary_gap_estimate(h),
        }
    }

    /// `|G ∖ F|` when closed forms exist.
    pub fn gap_volume_exact(&self) -> Option<f64> {
        Some(self.g.volume_exact()? - self.f.volume_exact()?)
    }

    pub fn gap_volume(&self) -> f64 {
        self.gap_volume_exact().unwrap_or_else(|| {
            let gap = ImplicitSet::difference(&self.g, &self.f).expect("same dimension");
            let h = self.g.bbox().diagonal() / if self.dim() == 2 { 512.0 } else { 96.0 };
            measure(&gap, MeasureMethod::Grid { h })
                .map(|m| m.value)
                .unwrap_or(f64::NAN)
        })
    }

    pub fn g_volume(&self) -> f64 {
        self.g.volume_exact().unwrap_or_else(|| {
            let h = self.g.bbox().diagonal() / if self.dim() == 2 { 512.0 } else { 96.0 };
            measure(&self.g, MeasureMethod::Grid { h })
                .map(|m| m.value)
                .unwrap_or(f64::NAN)
        })
    }

    /// Same condenser with every length multiplied by `s` about the origin.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let dim = self.dim();
        let mut diag = vec![0.0; dim];
        diag.iter_mut().for_each(|d| *d = 1.0 / s);
        let shrink = MappingKind::Linear(nalgebra::DMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(diag),
        ));
        Ok(RingCondenser {
            label: format!("{}*{}", self.label, s),
            f: ImplicitSet::preimage(&self.f, &shrink)?,
            g: ImplicitSet::preimage(&self.g, &shrink)?,
            ambient: ImplicitSet::preimage(&self.ambient, &shrink)?,
        })
    }
}

/// Concentric closed/open ball pair inside `ambient`.
pub fn make_ball_ring(
    center: Point,
    r_f: f64,
    r_g: f64,
    ambient: &ImplicitSet,
) -> Result<RingCondenser> {
    if !(r_f > 0.0 && r_f < r_g) {
        return Err(Error::RadiusOrdering { r_f, r_g });
    }
    let dim = ambient.dim();
    let f = ImplicitSet::ball(center, r_f, dim)?;
    let g = ImplicitSet::open_ball(center, r_g, dim)?;
    RingCondenser::new(
        format!("ball{:?}/{}/{}", &center[..dim], r_f, r_g),
        f,
        g,
        ambient.clone(),
    )
}

/// Parameters of the box condenser: a plate of half-width `r` inside a box
/// stretched by `t·λ_i` in every direction.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxCondenserParams {
    pub lambda: Vec<f64>,
    pub r: f64,
    pub t: f64,
    pub center: Point,
    pub frame: Frame,
}

impl BoxCondenserParams {
    pub fn new(lambda: Vec<f64>, r: f64, t: f64) -> Result<Self> {
        check_dim(lambda.len())?;
        if lambda.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidParameter("λ entries must be positive".into()));
        }
        if lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "λ must be sorted non-increasing".into(),
            ));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "r must be positive (got {r})"
            )));
        }
        if !(t > 0.0) {
            return Err(Error::NonPositiveAspect(t));
        }
        Ok(BoxCondenserParams {
            lambda,
            r,
            t,
            center: [0.0; MAX_DIM],
            frame: IDENTITY_FRAME,
        })
    }

    pub fn centered_at(mut self, center: Point) -> Self {
        self.center = center;
        self
    }

    /// Rows of `frame` are the box axes; the last used row is the plate normal.
    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `|G| = 2^n λ_n r^n t ∏_{i<n} (1 + t λ_i)`.
    pub fn g_volume(&self) -> f64 {
        let n = self.dim();
        let (r, t) = (self.r, self.t);
        2f64.powi(n as i32)
            * self.lambda[n - 1]
            * r.powi(n as i32)
            * t
            * self.lambda[..n - 1]
                .iter()
                .map(|l| 1.0 + t * l)
                .product::<f64>()
    }
}

pub fn make_box_condenser(params: &BoxCondenserParams) -> Result<RingCondenser> {
    let n = params.dim();
    let (r, t) = (params.r, params.t);
    if !(t > 0.0) {
        return Err(Error::NonPositiveAspect(t));
    }
    let mut half_f = [0.0; MAX_DIM];
    let mut half_g = [0.0; MAX_DIM];
    for i in 0..n - 1 {
        half_f[i] = r;
        half_g[i] = r + r * t * params.lambda[i];
    }
    half_g[n - 1] = r * t * params.lambda[n - 1];
    let f = ImplicitSet::oriented_box(params.center, params.frame, half_f, n, true)?;
    let g = ImplicitSet::oriented_box(params.center, params.frame, half_g, n, false)?;
    let b = g.bbox().padded(0.05);
    let ambient = ImplicitSet::aabox(b.lo, b.hi, n)?;
    RingCondenser::new(
        format!("box{:?}/r{}/t{}", params.lambda, r, t),
        f,
        g,
        ambient,
    )
}

/// `(φ⁻¹(F); φ⁻¹(G))`, living in the domain of `φ`.
pub fn pullback_condenser(phi: &MappingSpec, ring: &RingCondenser) -> Result<RingCondenser> {
    if phi.dim() != ring.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: ring.dim(),
        });
    }
    if matches!(phi.kind(), MappingKind::Identity) {
        return Ok(ring.clone());
    }
    if !ring
        .g
        .sampled_subset_of(phi.codomain(), inclusion_lattice(ring.dim()))
    {
        return Err(Error::NotInvertibleOnRegion);
    }
    let f = ImplicitSet::preimage(&ring.f, phi.kind())?;
    let g = ImplicitSet::preimage(&ring.g, phi.kind())?;
    Ok(RingCondenser {
        label: format!("pullback({})", ring.label),
        f,
        g,
        ambient: phi.domain().clone(),
    })
}

/// Uniform grid of nodes `origin + h·(i, j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub origin: Point,
    pub h: f64,
    /// Cell counts per axis (zero for unused axes).
    pub cells: [usize; MAX_DIM],
}

impl Grid {
    pub fn new(dim: usize, origin: Point, h: f64, cells: [usize; MAX_DIM]) -> Result<Self> {
        check_dim(dim)?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be > 0 (got {h})"
            )));
        }
        let mut cells = cells;
        for c in cells.iter_mut().skip(dim) {
            *c = 0;
        }
        let grid = Grid {
            dim,
            origin,
            h,
            cells,
        };
        if grid.node_count() > MAX_GRID_NODES {
            return Err(Error::InvalidParameter(format!(
                "grid with {} nodes exceeds limit",
                grid.node_count()
            )));
        }
        Ok(grid)
    }

    /// Grid aligned to integer multiples of `h` that covers `bbox` with at
    /// least one extra cell on every side.
    pub fn covering(bbox: &BBox, h: f64) -> Result<Self> {
        let dim = bbox.dim;
        check_dim(dim)?;
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be > 0 (got {h})"
            )));
        }
        let mut origin = [0.0; MAX_DIM];
        let mut cells = [0; MAX_DIM];
        for i in 0..dim {
            let lo = (bbox.lo[i] / h - 1e-9).ceil() - 1.0;
            let hi = (bbox.hi[i] / h + 1e-9).floor() + 1.0;
            origin[i] = lo * h;
            cells[i] = (hi - lo) as usize;
        }
        Grid::new(dim, origin, h, cells)
    }

    pub fn nodes_per_axis(&self) -> [usize; MAX_DIM] {
        let mut n = [1; MAX_DIM];
        for i in 0..self.dim {
            n[i] = self.cells[i] + 1;
        }
        n
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().iter().product()
    }

    pub fn cell_count(&self) -> usize {
        (0..self.dim).map(|i| self.cells[i]).product()
    }

    pub fn strides(&self) -> [usize; MAX_DIM] {
        let n = self.nodes_per_axis();
        [1, n[0], n[0] * n[1]]
    }

    pub fn node_ijk(&self, idx: usize) -> [usize; MAX_DIM] {
        let n = self.nodes_per_axis();
        [idx % n[0], (idx / n[0]) % n[1], idx / (n[0] * n[1])]
    }

    pub fn node_index(&self, ijk: [usize; MAX_DIM]) -> usize {
        let s = self.strides();
        ijk[0] * s[0] + ijk[1] * s[1] + ijk[2] * s[2]
    }

    pub fn node_point(&self, idx: usize) -> Point {
        let ijk = self.node_ijk(idx);
        let mut p = [0.0; MAX_DIM];
        for i in 0..self.dim {
            p[i] = self.origin[i] + self.h * ijk[i] as f64;
        }
        p
    }

    /// Cell centers in row-major order.
    pub fn cell_centers(&self) -> impl Iterator<Item = Point> + '_ {
        let c = self.cells;
        let nz = if self.dim == 3 { c[2] } else { 1 };
        (0..nz).flat_map(move |k| {
            (0..c[1]).flat_map(move |j| {
                (0..c[0]).map(move |i| {
                    let mut p = [0.0; MAX_DIM];
                    let ijk = [i, j, k];
                    for a in 0..self.dim {
                        p[a] = self.origin[a] + self.h * (ijk[a] as f64 + 0.5);
                    }
                    p
                })
            })
        })
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn extent(&self) -> BBox {
        let mut hi = self.origin;
        for i in 0..self.dim {
            hi[i] += self.h * self.cells[i] as f64;
        }
        BBox::new(self.origin, hi, self.dim)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasureMethod {
    /// Cell-center counting on a grid of spacing `h`.
    Grid {
        h: f64,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

/// Volume estimate with an error figure: standard error for Monte Carlo, a
/// boundary-cell bias bound for the grid rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub error: f64,
}

pub fn measure(set: &ImplicitSet, method: MeasureMethod) -> Result<Measurement> {
    let dim = set.dim();
    match method {
        MeasureMethod::MonteCarlo { samples, seed } => {
            if samples < 100 {
                return Err(Error::TooFewSamples(samples));
            }
            let bbox = set.bbox();
            let vol = bbox.volume();
            if vol == 0.0 {
                return Ok(Measurement {
                    value: 0.0,
                    error: 0.0,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut hits = 0usize;
            for _ in 0..samples {
                let mut p = [0.0; MAX_DIM];
                for i in 0..dim {
                    p[i] = bbox.lo[i] + bbox.extent(i) * rng.random::<f64>();
                }
                if set.contains(&p) {
                    hits += 1;
                }
            }
            let frac = hits as f64 / samples as f64;
            Ok(Measurement {
                value: vol * frac,
                error: vol * (frac * (1.0 - frac) / samples as f64).sqrt(),
            })
        }
        MeasureMethod::Grid { h } => {
            let mut bbox = *set.bbox();
            // the covering grid is anchored at multiples of h
            for i in 0..dim {
                bbox.lo[i] += h;
                bbox.hi[i] -= h;
                if bbox.hi[i] < bbox.lo[i] {
                    bbox.hi[i] = bbox.lo[i];
                }
            }
            let grid = Grid::covering(&bbox, h)?;
            let half = 0.5 * h;
            let mut inside = 0usize;
            let mut boundary = 0usize;
            for c in grid.cell_centers() {
                let hit = set.contains(&c);
                if hit {
                    inside += 1;
                }
                let mixed = (0..(1usize << dim)).any(|corner| {
                    let mut p = c;
                    for a in 0..dim {
                        p[a] += if corner & (1 << a) != 0 { half } else { -half };
                    }
                    set.contains(&p) != hit
                });
                if mixed {
                    boundary += 1;
                }
            }
            let cv = grid.cell_volume();
            Ok(Measurement {
                value: inside as f64 * cv,
                error: boundary as f64 * cv,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(half: f64) -> ImplicitSet {
        ImplicitSet::aabox(point2(-half, -half), point2(half, half), 2).unwrap()
    }

    #[test]
    fn ball_ring_valid() {
        let ring = make_ball_ring(point2(0.0, 0.0), 0.5, 1.0, &square(2.0)).unwrap();
        assert_eq!(ring.boundary_gap_exact(), Some(0.5));
        assert!(ring.f.contains(&point2(0.5, 0.0)));
        assert!(!ring.g.contains(&point2(1.0, 0.0)));
    }

    #[test]
    fn ball_ring_radius_ordering() {
        let err = make_ball_ring(point2(0.0, 0.0), 1.0, 0.5, &square(2.0)).unwrap_err();
        assert!(matches!(err, Error::RadiusOrdering { .. }));
        assert!(err.to_string().contains("radius ordering"));
    }

    #[test]
    fn ball_ring_escapes_ambient() {
        let err = make_ball_ring(point2(0.0, 0.0), 1.0, 3.0, &square(2.0)).unwrap_err();
        assert_eq!(err, Error::EscapesAmbient);
        assert!(err.to_string().contains("escapes ambient"));
    }

    #[test]
    fn box_condenser_volumes() {
        let p = BoxCondenserParams::new(vec![1.0, 1.0], 1.0, 0.5).unwrap();
        assert!((p.g_volume() - 3.0).abs() < 1e-15);
        let ring = make_box_condenser(&p).unwrap();
        assert!((ring.g.volume_exact().unwrap() - 3.0).abs() < 1e-15);

        let p3 = BoxCondenserParams::new(vec![1.0, 1.0, 1.0], 1.0, 1.0).unwrap();
        assert!((p3.g_volume() - 32.0).abs() < 1e-12);
        let ring3 = make_box_condenser(&p3).unwrap();
        assert!((ring3.g.volume_exact().unwrap() - 32.0).abs() < 1e-12);
    }

    #[test]
    fn box_condenser_rejects_zero_t() {
        let err = BoxCondenserParams::new(vec![2.0, 1.0], 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("t must be positive"));
    }

    #[test]
    fn box_condenser_params_validate_order() {
        assert!(BoxCondenserParams::new(vec![1.0, 2.0], 1.0, 0.5).is_err());
        assert!(BoxCondenserParams::new(vec![1.0, 0.0], 1.0, 0.5).is_err());
    }

    #[test]
    fn plate_is_one_layer_on_grid() {
        let p = BoxCondenserParams::new(vec![1.0, 1.0], 1.0, 0.5).unwrap();
        let ring = make_box_condenser(&p).unwrap();
        let h = 1.0 / 16.0;
        assert!(ring.f.contains_at(&point2(0.25, 0.0), h));
        assert!(!ring.f.contains_at(&point2(0.25, h), h));
        assert!(!ring.f.contains_at(&point2(0.25, -h), h));
        assert_eq!(ring.boundary_gap_exact(), Some(0.5));
    }

    #[test]
    fn measure_unit_disk_monte_carlo() {
        let disk = ImplicitSet::ball(point2(0.0, 0.0), 1.0, 2).unwrap();
        let m = measure(
            &disk,
            MeasureMethod::MonteCarlo {
                samples: 1_000_000,
                seed: 7,
            },
        )
        .unwrap();
        assert!((m.value - PI).abs() < 0.01, "{m:?}");
        assert!(m.error < 0.01);
    }

    #[test]
    fn measure_unit_square_grid_exact() {
        let sq = ImplicitSet::aabox(point2(0.0, 0.0), point2(1.0, 1.0), 2).unwrap();
        let m = measure(&sq, MeasureMethod::Grid { h: 1.0 / 128.0 }).unwrap();
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn measure_annulus() {
        let outer = ImplicitSet::open_ball(point2(0.0, 0.0), 1.0, 2).unwrap();
        let inner = ImplicitSet::ball(point2(0.0, 0.0), 0.5, 2).unwrap();
        let ann = ImplicitSet::difference(&outer, &inner).unwrap();
        let m = measure(&ann, MeasureMethod::Grid { h: 1.0 / 256.0 }).unwrap();
        assert!((m.value - 0.75 * PI).abs() <= m.error, "{m:?}");
        assert!((m.value - 0.75 * PI).abs() < 1e-3);
        let mc = measure(
            &ann,
            MeasureMethod::MonteCarlo {
                samples: 400_000,
                seed: 1,
            },
        )
        .unwrap();
        assert!((mc.value - 0.75 * PI).abs() < 4.0 * mc.error);
    }

    #[test]
    fn measure_rejects_few_samples() {
        let disk = ImplicitSet::ball(point2(0.0, 0.0), 1.0, 2).unwrap();
        let err = measure(
            &disk,
            MeasureMethod::MonteCarlo {
                samples: 99,
                seed: 0,
            },
        )
        .unwrap_err();
        assert_eq!(err, Error::TooFewSamples(99));
    }

    #[test]
    fn grid_covering_has_margin() {
        let b = BBox::new(point2(-1.0, -1.0), point2(1.0, 1.0), 2);
        let g = Grid::covering(&b, 0.25).unwrap();
        assert_eq!(g.origin[0], -1.25);
        assert_eq!(g.cells[0], 10);
        let e = g.extent();
        assert!(e.lo[0] < b.lo[0] && e.hi[1] > b.hi[1]);
    }

    #[test]
    fn bbox_contains_members() {
        let t = ImplicitSet::tube(vec![point2(-0.3, 0.1), point2(0.4, -0.2)], 0.05, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20_000 {
            let p = point2(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if t.contains(&p) {
                assert!(t.bbox().contains(&p));
            }
        }
    }
}
