// SPDX-License-Identifier: Apache-2.0

//! Catalog of analytic homeomorphisms and their distortion functionals.
//!
//! Each catalog map has a closed-form inverse and derivative. The pointwise
//! p-dilatation is `|Dφ(x)| / |J(x, φ)|^{1/p}` with `|·|` the operator norm,
//! and the integral distortion `K_{p,q}(φ; Ω)` is its `L_κ(Ω)` norm with
//! `1/κ = 1/q − 1/p` (an ess-sup when `p = q`).

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{check_dim, op_norm, Grid, ImplicitSet, Point, MAX_DIM};

/// |J| below this (times scale^n) counts as a vanishing Jacobian.
pub const JACOBIAN_ZERO: f64 = 1e-12;
/// |Dφ| above this (times scale) counts as a non-vanishing derivative.
pub const DERIVATIVE_NONZERO: f64 = 1e-6;
/// Relative step of centered finite-difference Jacobians.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub enum MappingKind {
    Identity,
    /// `x ↦ A x`.
    Linear(DMatrix<f64>),
    /// `x ↦ |x|^{α−1} x`.
    RadialStretch(f64),
    /// Maps applied left to right.
    Composed(Vec<MappingKind>),
}

fn mat_vec(a: &DMatrix<f64>, x: &Point) -> Point {
    let n = a.nrows();
    let mut out = [0.0; MAX_DIM];
    for i in 0..n {
        out[i] = (0..n).map(|j| a[(i, j)] * x[j]).sum();
    }
    out
}

impl MappingKind {
    pub fn diag(entries: &[f64]) -> Self {
        MappingKind::Linear(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(entries),
        ))
    }

    pub fn apply(&self, x: &Point, dim: usize) -> Point {
        match self {
            MappingKind::Identity => *x,
            MappingKind::Linear(a) => mat_vec(a, x),
            MappingKind::RadialStretch(alpha) => {
                let r = (0..dim).map(|i| x[i] * x[i]).sum::<f64>().sqrt();
                if r == 0.0 {
                    return *x;
                }
                let s = r.powf(alpha - 1.0);
                let mut out = [0.0; MAX_DIM];
                for i in 0..dim {
                    out[i] = s * x[i];
                }
                out
            }
            MappingKind::Composed(maps) => maps.iter().fold(*x, |y, m| m.apply(&y, dim)),
        }
    }

    pub fn inverse(&self, dim: usize) -> Result<MappingKind> {
        Ok(match self {
            MappingKind::Identity => MappingKind::Identity,
            MappingKind::Linear(a) => {
                if a.nrows() != dim || a.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: a.nrows(),
                    });
                }
                let inv = a
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::NotHomeomorphism("singular linear map".into()))?;
                if inv.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NotHomeomorphism("singular linear map".into()));
                }
                MappingKind::Linear(inv)
            }
            MappingKind::RadialStretch(alpha) => {
                if !(*alpha > 0.0) || !alpha.is_finite() {
                    return Err(Error::NotHomeomorphism(format!("radial exponent {alpha}")));
                }
                MappingKind::RadialStretch(1.0 / alpha)
            }
            MappingKind::Composed(maps) => MappingKind::Composed(
                maps.iter()
                    .rev()
                    .map(|m| m.inverse(dim))
                    .collect::<Result<Vec<_>>>()?,
            ),
        })
    }

    /// Analytic Jacobian matrix; `None` where the derivative blows up.
    pub fn jacobian(&self, x: &Point, dim: usize) -> Option<DMatrix<f64>> {
        match self {
            MappingKind::Identity => Some(DMatrix::identity(dim, dim)),
            MappingKind::Linear(a) => Some(a.clone()),
            MappingKind::RadialStretch(alpha) => {
                let r = (0..dim).map(|i| x[i] * x[i]).sum::<f64>().sqrt();
                if r == 0.0 {
                    return if *alpha > 1.0 {
                        Some(DMatrix::zeros(dim, dim))
                    } else if *alpha == 1.0 {
                        Some(DMatrix::identity(dim, dim))
                    } else {
                        None
                    };
                }
                let s = r.powf(alpha - 1.0);
                let mut m = DMatrix::identity(dim, dim) * s;
                let c = s * (alpha - 1.0) / (r * r);
                for i in 0..dim {
                    for j in 0..dim {
                        m[(i, j)] += c * x[i] * x[j];
                    }
                }
                Some(m)
            }
            MappingKind::Composed(maps) => {
                let mut y = *x;
                let mut acc = DMatrix::identity(dim, dim);
                for m in maps {
                    acc = m.jacobian(&y, dim)? * acc;
                    y = m.apply(&y, dim);
                }
                Some(acc)
            }
        }
    }

    pub fn is_affine(&self) -> bool {
        match self {
            MappingKind::Identity | MappingKind::Linear(_) => true,
            MappingKind::RadialStretch(a) => *a == 1.0,
            MappingKind::Composed(maps) => maps.iter().all(|m| m.is_affine()),
        }
    }

    /// Determinant of an affine map.
    pub fn affine_determinant(&self, dim: usize) -> Option<f64> {
        if !self.is_affine() {
            return None;
        }
        self.jacobian(&[0.0; MAX_DIM], dim).map(|j| j.determinant())
    }

    /// Points where the derivative vanishes or blows up.
    pub fn singular_points(&self, dim: usize) -> Vec<Point> {
        match self {
            MappingKind::RadialStretch(a) if *a != 1.0 => vec![[0.0; MAX_DIM]],
            MappingKind::Composed(maps) => {
                let mut out = Vec::new();
                for (k, m) in maps.iter().enumerate() {
                    let prefix = MappingKind::Composed(maps[..k].to_vec());
                    if let Ok(back) = prefix.inverse(dim) {
                        for s in m.singular_points(dim) {
                            out.push(back.apply(&s, dim));
                        }
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// Parses `identity`, `linear:a11,a12,...` (n or n² entries, n entries
    /// meaning a diagonal), `radial:alpha` or `composed:[m1;m2;...]`.
    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(MappingKind::Identity);
        }
        let (name, args) = s.split_once(':').ok_or_else(|| Error::Unknown {
            kind: "mapping",
            name: s.to_string(),
        })?;
        match name {
            "linear" | "diag" => {
                let v = parse_floats(args)?;
                if v.len() == dim {
                    Ok(MappingKind::diag(&v))
                } else if v.len() == dim * dim {
                    Ok(MappingKind::Linear(DMatrix::from_row_slice(dim, dim, &v)))
                } else {
                    Err(Error::Parse(format!(
                        "linear map needs {dim} or {} entries",
                        dim * dim
                    )))
                }
            }
            "radial" => {
                let v = parse_floats(args)?;
                match v.as_slice() {
                    [a] => Ok(MappingKind::RadialStretch(*a)),
                    _ => Err(Error::Parse("radial needs one exponent".into())),
                }
            }
            "composed" => {
                let inner = args
                    .trim()
                    .strip_prefix('[')
                    .and_then(|r| r.strip_suffix(']'))
                    .ok_or_else(|| Error::Parse("composed needs [m1;m2;...]".into()))?;
                let parts = split_top_level(inner);
                Ok(MappingKind::Composed(
                    parts
                        .iter()
                        .map(|p| MappingKind::parse(p, dim))
                        .collect::<Result<Vec<_>>>()?,
                ))
            }
            other => Err(Error::Unknown {
                kind: "mapping",
                name: other.to_string(),
            }),
        }
    }
}

fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '[' => {
                depth += 1;
                cur.push(c);
            }
            ']' => {
                depth -= 1;
                cur.push(c);
            }
            ';' if depth == 0 => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

pub(crate) fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("not a number: {t:?}")))
        })
        .collect()
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MappingKind::Identity => write!(f, "identity"),
            MappingKind::Linear(a) => {
                let v: Vec<String> = (0..a.nrows())
                    .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| format!("{}", a[(i, j)]))
                    .collect();
                write!(f, "linear:{}", v.join(","))
            }
            MappingKind::RadialStretch(a) => write!(f, "radial:{a}"),
            MappingKind::Composed(maps) => {
                let v: Vec<String> = maps.iter().map(|m| m.to_string()).collect();
                write!(f, "composed:[{}]", v.join(";"))
            }
        }
    }
}

/// A catalog homeomorphism `φ: Ω → Ω̃` with its domain and image.
#[derive(Clone, Debug)]
pub struct MappingSpec {
    kind: MappingKind,
    inverse: MappingKind,
    dim: usize,
    domain: ImplicitSet,
    codomain: ImplicitSet,
    scale: f64,
}

impl MappingSpec {
    /// Validates the map and builds `Ω̃ = φ(Ω)` as the preimage of `Ω` under
    /// `φ⁻¹`.
    pub fn new(kind: MappingKind, domain: ImplicitSet) -> Result<Self> {
        let dim = domain.dim();
        check_dim(dim)?;
        let inverse = kind.inverse(dim)?;
        let codomain = if kind == MappingKind::Identity {
            domain.clone()
        } else {
            ImplicitSet::preimage(&domain, &inverse)?
        };
        let b = domain.bbox();
        let scale = (0..dim)
            .map(|i| b.extent(i))
            .fold(0.0, f64::max)
            .max(1e-300);
        Ok(MappingSpec {
            kind,
            inverse,
            dim,
            domain,
            codomain,
            scale,
        })
    }

    pub fn identity(domain: ImplicitSet) -> Result<Self> {
        Self::new(MappingKind::Identity, domain)
    }

    pub fn kind(&self) -> &MappingKind {
        &self.kind
    }

    pub fn inverse_kind(&self) -> &MappingKind {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &ImplicitSet {
        &self.domain
    }

    pub fn codomain(&self) -> &ImplicitSet {
        &self.codomain
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn forward(&self, x: &Point) -> Point {
        self.kind.apply(x, self.dim)
    }

    pub fn inverse(&self, y: &Point) -> Point {
        self.inverse.apply(y, self.dim)
    }

    /// The inverse map `φ⁻¹: Ω̃ → Ω` as a spec of its own.
    pub fn inverted(&self) -> Result<MappingSpec> {
        MappingSpec::new(self.inverse.clone(), self.codomain.clone())
    }

    pub fn jacobian(&self, x: &Point) -> Option<DMatrix<f64>> {
        self.kind.jacobian(x, self.dim)
    }

    /// Centered finite-difference Jacobian with step `1e-5·scale`.
    pub fn jacobian_fd(&self, x: &Point) -> DMatrix<f64> {
        let n = self.dim;
        let step = FD_STEP * self.scale;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut xp = *x;
            let mut xm = *x;
            xp[j] += step;
            xm[j] -= step;
            let fp = self.forward(&xp);
            let fm = self.forward(&xm);
            for i in 0..n {
                m[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        m
    }
}

/// `K_p(x) = |Dφ(x)| / |J(x, φ)|^{1/p}`.
pub fn dilatation_p(phi: &MappingSpec, x: &Point, p: f64) -> Result<f64> {
    let jac = phi.jacobian(x).ok_or(Error::DistortionUndefined)?;
    let norm = op_norm(&jac);
    let det = jac.determinant().abs();
    if det == 0.0 {
        if norm == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::DistortionUndefined);
    }
    Ok(norm / det.powf(1.0 / p))
}

/// `1/κ = 1/q − 1/p`; infinite when `p = q`.
pub fn kappa(p: f64, q: f64) -> f64 {
    if p == q {
        f64::INFINITY
    } else {
        p * q / (p - q)
    }
}

#[derive(Clone, Debug)]
pub struct DistortionReport {
    pub p: f64,
    pub q: f64,
    pub kappa: f64,
    /// `K_p` at the quadrature nodes used.
    pub kp_field: Vec<f64>,
    pub k_pq: f64,
    /// `|K(h) − K(2h)|` for the ess-sup case.
    pub refinement_delta: Option<f64>,
    pub finite_distortion_ok: bool,
}

fn quadrature_values(phi: &MappingSpec, p: f64, grid: &Grid) -> Result<Vec<f64>> {
    let dim = phi.dim();
    let singular = phi.kind().singular_points(dim);
    let puncture = 2.0 * grid.h;
    let mut out = Vec::new();
    for c in grid.cell_centers() {
        if !phi.domain().contains(&c) {
            continue;
        }
        if singular
            .iter()
            .any(|s| crate::geometry::distance(s, &c, dim) < puncture)
        {
            continue;
        }
        out.push(dilatation_p(phi, &c, p)?);
    }
    Ok(out)
}

/// `K_{p,q}(φ; Ω)` by cell-center quadrature over `Ω`.
pub fn distortion_norm(
    phi: &MappingSpec,
    p: f64,
    q: f64,
    quadrature: &Grid,
) -> Result<DistortionReport> {
    if q > p {
        return Err(Error::QExceedsP { p, q });
    }
    if !(q >= 1.0) {
        return Err(Error::ExponentRange(format!("need 1 <= q <= p (q={q})")));
    }
    let k = kappa(p, q);
    let values = quadrature_values(phi, p, quadrature)?;
    let fd = finite_distortion_check(phi, 4096);
    let (k_pq, refinement_delta) = if k.is_infinite() {
        let sup = values.iter().cloned().fold(0.0, f64::max);
        let coarse = Grid::covering(phi.domain().bbox(), 2.0 * quadrature.h)?;
        let coarse_sup = quadrature_values(phi, p, &coarse)?
            .into_iter()
            .fold(0.0, f64::max);
        (sup, Some((sup - coarse_sup).abs()))
    } else {
        let cv = quadrature.cell_volume();
        let sum: f64 = values.iter().map(|v| v.powf(k) * cv).sum();
        (sum.powf(1.0 / k), None)
    };
    Ok(DistortionReport {
        p,
        q,
        kappa: k,
        kp_field: values,
        k_pq,
        refinement_delta,
        finite_distortion_ok: fd.ok,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistortionReport {
    pub ok: bool,
    pub violations: Vec<Point>,
}

/// Flags lattice points of `Ω` where `J` vanishes but `Dφ` does not.
pub fn finite_distortion_check(phi: &MappingSpec, samples: usize) -> FiniteDistortionReport {
    let dim = phi.dim();
    let mut m = (samples as f64).powf(1.0 / dim as f64).ceil() as usize;
    if m.is_multiple_of(2) {
        m += 1;
    }
    let n = dim as i32;
    let mut violations = Vec::new();
    for x in phi.domain().lattice_members(m) {
        // an isolated blow-up of Dφ (no Jacobian) is not a zero of J
        if let Some(j) = phi.jacobian(&x) {
            let det = j.determinant().abs();
            let norm = op_norm(&j);
            if det < JACOBIAN_ZERO * phi.scale().powi(n) && norm > DERIVATIVE_NONZERO * phi.scale()
            {
                violations.push(x);
            }
        }
    }
    FiniteDistortionReport {
        ok: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point2, point3};

    fn disk() -> ImplicitSet {
        ImplicitSet::open_ball(point2(0.0, 0.0), 1.0, 2).unwrap()
    }

    fn unit_square() -> ImplicitSet {
        ImplicitSet::aabox(point2(0.0, 0.0), point2(1.0, 1.0), 2).unwrap()
    }

    #[test]
    fn identity_dilatation_is_one() {
        let phi = MappingSpec::identity(disk()).unwrap();
        for p in [1.5, 2.0, 3.0] {
            assert_eq!(dilatation_p(&phi, &point2(0.3, -0.2), p).unwrap(), 1.0);
        }
    }

    #[test]
    fn linear_diag_dilatation() {
        let phi = MappingSpec::new(MappingKind::diag(&[2.0, 1.0]), disk()).unwrap();
        let k = dilatation_p(&phi, &point2(0.1, 0.2), 2.0).unwrap();
        assert!((k - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn radial_dilatation_independent_of_radius() {
        let phi = MappingSpec::new(MappingKind::RadialStretch(4.0), disk()).unwrap();
        for r in [0.1, 0.5, 0.9] {
            let k = dilatation_p(&phi, &point2(r, 0.0), 2.0).unwrap();
            assert!((k - 2.0).abs() < 1e-10, "r={r} k={k}");
        }
    }

    #[test]
    fn radial_origin_is_finite_distortion() {
        let phi = MappingSpec::new(MappingKind::RadialStretch(4.0), disk()).unwrap();
        assert_eq!(dilatation_p(&phi, &point2(0.0, 0.0), 2.0).unwrap(), 0.0);
        let rep = finite_distortion_check(&phi, 1000);
        assert!(rep.ok);
    }

    #[test]
    fn constant_map_rejected() {
        let err = MappingSpec::new(MappingKind::diag(&[0.0, 0.0]), disk()).unwrap_err();
        assert!(matches!(err, Error::NotHomeomorphism(_)));
    }

    #[test]
    fn identity_finite_distortion() {
        let phi = MappingSpec::identity(disk()).unwrap();
        let rep = finite_distortion_check(&phi, 1000);
        assert!(rep.ok && rep.violations.is_empty());
    }

    #[test]
    fn distortion_norm_cases() {
        let grid = Grid::covering(unit_square().bbox(), 1.0 / 64.0).unwrap();
        let id = MappingSpec::identity(unit_square()).unwrap();
        let r = distortion_norm(&id, 2.0, 2.0, &grid).unwrap();
        assert_eq!(r.k_pq, 1.0);
        assert!(r.kappa.is_infinite());

        let lin = MappingSpec::new(MappingKind::diag(&[2.0, 1.0]), unit_square()).unwrap();
        let r = distortion_norm(&lin, 3.0, 2.0, &grid).unwrap();
        assert_eq!(r.kappa, 6.0);
        let expected = 2.0 / 2f64.powf(1.0 / 3.0);
        assert!((r.k_pq - expected).abs() < 1e-9, "{}", r.k_pq);

        let dgrid = Grid::covering(disk().bbox(), 1.0 / 64.0).unwrap();
        let rad = MappingSpec::new(MappingKind::RadialStretch(4.0), disk()).unwrap();
        let r = distortion_norm(&rad, 2.0, 2.0, &dgrid).unwrap();
        assert!((r.k_pq - 2.0).abs() < 1e-6);
        assert!(r.refinement_delta.unwrap() < 1e-6);
    }

    #[test]
    fn distortion_norm_rejects_q_above_p() {
        let grid = Grid::covering(unit_square().bbox(), 0.1).unwrap();
        let id = MappingSpec::identity(unit_square()).unwrap();
        assert!(matches!(
            distortion_norm(&id, 2.0, 3.0, &grid),
            Err(Error::QExceedsP { .. })
        ));
    }

    #[test]
    fn kappa_identity() {
        for (p, q) in [(3.0, 2.0), (2.5, 1.5), (4.0, 1.1)] {
            let k = kappa(p, q);
            assert!((1.0 / k - (1.0 / q - 1.0 / p)).abs() < 1e-15);
        }
    }

    #[test]
    fn parse_catalog() {
        assert_eq!(
            MappingKind::parse("identity", 2).unwrap(),
            MappingKind::Identity
        );
        assert_eq!(
            MappingKind::parse("radial:4", 2).unwrap(),
            MappingKind::RadialStretch(4.0)
        );
        assert_eq!(
            MappingKind::parse("linear:2,1", 2).unwrap(),
            MappingKind::diag(&[2.0, 1.0])
        );
        let full = MappingKind::parse("linear:2,0,0,1", 2).unwrap();
        assert_eq!(full, MappingKind::diag(&[2.0, 1.0]));
        let c = MappingKind::parse("composed:[radial:2;linear:1,0.5,0,1]", 2).unwrap();
        assert!(matches!(c, MappingKind::Composed(ref v) if v.len() == 2));
        assert_eq!(MappingKind::parse(&c.to_string(), 2).unwrap(), c);
        assert!(MappingKind::parse("swirl:1", 2).is_err());
    }

    #[test]
    fn composed_inverse_and_jacobian() {
        let kind = MappingKind::parse("composed:[radial:2;linear:1,0.5,0,1]", 2).unwrap();
        let phi = MappingSpec::new(kind, disk()).unwrap();
        let x = point2(0.3, -0.4);
        let y = phi.forward(&x);
        let back = phi.inverse(&y);
        assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
        let a = phi.jacobian(&x).unwrap();
        let b = phi.jacobian_fd(&x);
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn radial_3d_jacobian() {
        let ball = ImplicitSet::open_ball(point3(0.0, 0.0, 0.0), 1.0, 3).unwrap();
        let phi = MappingSpec::new(MappingKind::RadialStretch(3.0), ball).unwrap();
        let x = point3(0.2, 0.3, -0.1);
        let a = phi.jacobian(&x).unwrap();
        let b = phi.jacobian_fd(&x);
        assert!((a - b).norm() < 1e-7);
    }
}
