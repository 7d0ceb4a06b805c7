// SPDX-License-Identifier: Apache-2.0

//! Analytic capacity bounds from measures and distances.

use crate::error::{Error, Result};
use crate::geometry::RingCondenser;

fn gap_resolution(ring: &RingCondenser) -> f64 {
    ring.g.bbox().diagonal() / if ring.dim() == 2 { 512.0 } else { 96.0 }
}

/// `|G ∖ F| / dist(F, ∂G)^p`.
pub fn cap_upper_bound(ring: &RingCondenser, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ExponentTooSmall(p));
    }
    let dist = ring.boundary_gap(gap_resolution(ring))?;
    if !(dist > 0.0) {
        return Err(Error::NonPositiveDistance);
    }
    Ok(ring.gap_volume() / dist.powf(p))
}

/// `(m_{n-1}(∂F) / |G|^{1-1/p})^p` for convex F. A plate counts both faces.
pub fn cap_lower_bound_measure(ring: &RingCondenser, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ExponentTooSmall(p));
    }
    if !ring.f.is_convex() {
        return Err(Error::RequiresConvex);
    }
    let area = ring
        .f
        .surface_area_exact()
        .ok_or(Error::SurfaceAreaUnavailable)?;
    let vol = ring.g_volume();
    Ok((area / vol.powf(1.0 - 1.0 / p)).powf(p))
}

/// Constant-free scaling diagnostic `diam(F)^{p/(n-1)} / |G|^{p(1/(n-1) - 1/p)}`.
pub fn cap_lower_bound_diam(ring: &RingCondenser, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ExponentTooSmall(p));
    }
    let n1 = ring.dim() as f64 - 1.0;
    let diam = ring.f.diameter();
    if diam == 0.0 {
        return Ok(0.0);
    }
    let vol = ring.g_volume();
    Ok(diam.powf(p / n1) / vol.powf(p * (1.0 / n1 - 1.0 / p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ball_ring, point2, point3, ImplicitSet};
    use std::f64::consts::PI;

    fn ring2(rf: f64, rg: f64) -> RingCondenser {
        let amb = ImplicitSet::aabox(point2(-3.0, -3.0), point2(3.0, 3.0), 2).unwrap();
        make_ball_ring(point2(0.0, 0.0), rf, rg, &amb).unwrap()
    }

    #[test]
    fn upper_bound_annuli() {
        assert!((cap_upper_bound(&ring2(1.0, 2.0), 2.0).unwrap() - 3.0 * PI).abs() < 1e-12);
        assert!((cap_upper_bound(&ring2(0.5, 1.0), 2.0).unwrap() - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn lower_bounds() {
        let r = ring2(0.5, 1.0);
        assert!((cap_lower_bound_measure(&r, 2.0).unwrap() - PI).abs() < 1e-12);
        assert!((cap_lower_bound_diam(&r, 2.0).unwrap() - 1.0 / PI).abs() < 1e-12);
        let amb = ImplicitSet::aabox(point3(-3.0, -3.0, -3.0), point3(3.0, 3.0, 3.0), 3).unwrap();
        let r3 = make_ball_ring(point3(0.0, 0.0, 0.0), 1.0, 2.0, &amb).unwrap();
        let lb = cap_lower_bound_measure(&r3, 2.0).unwrap();
        let expect = (4.0 * PI / (32.0 * PI / 3.0).sqrt()).powi(2);
        assert!((lb - expect).abs() < 1e-9);
        assert!(lb <= 8.0 * PI);
    }

    #[test]
    fn diam_diagnostic_scales_like_capacity() {
        for &p in &[1.5, 2.0, 3.0] {
            let a = cap_lower_bound_diam(&ring2(0.5, 1.0), p).unwrap();
            let b = cap_lower_bound_diam(&ring2(1.0, 2.0), p).unwrap();
            assert!((b / a - 2f64.powf(2.0 - p)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_convex_rejected() {
        let amb = ImplicitSet::aabox(point2(-3.0, -3.0), point2(3.0, 3.0), 2).unwrap();
        let tube = ImplicitSet::tube(
            vec![point2(-0.5, 0.0), point2(0.0, 0.5), point2(0.5, 0.0)],
            0.05,
            2,
        )
        .unwrap();
        let g = ImplicitSet::open_ball(point2(0.0, 0.0), 2.0, 2).unwrap();
        let r = RingCondenser::new("tube", tube, g, amb).unwrap();
        assert_eq!(cap_lower_bound_measure(&r, 2.0), Err(Error::RequiresConvex));
    }
}
