// SPDX-License-Identifier: Apache-2.0

//! Deterministic condenser families used by the ring verifications.

use crate::error::{Error, Result};
use crate::geometry::{
    distance, make_ball_ring, make_box_condenser, BoxCondenserParams, ImplicitSet, Point,
    RingCondenser, MAX_DIM,
};

/// Radius of the largest ball about `c` inside `set`, estimated from lattice
/// points outside the set and the bounding box.
pub fn inradius(set: &ImplicitSet, c: &Point) -> f64 {
    let dim = set.dim();
    let b = set.bbox();
    let mut best = (0..dim)
        .map(|i| (c[i] - b.lo[i]).min(b.hi[i] - c[i]))
        .fold(f64::INFINITY, f64::min);
    let m = if dim == 2 { 201 } else { 41 };
    for x in b.lattice(m) {
        if !set.contains(&x) {
            best = best.min(distance(&x, c, dim));
        }
    }
    best.max(0.0)
}

fn ring_in(set: &ImplicitSet, c: Point, rf: f64, rg: f64) -> Result<RingCondenser> {
    make_ball_ring(c, rf, rg, set)
}

/// `k` concentric rings about `center`, outer radii shrinking from 90% of
/// the inradius and inner/outer ratios spread over [0.2, 0.5].
pub fn centered_rings(set: &ImplicitSet, center: Point, k: usize) -> Result<Vec<RingCondenser>> {
    if k == 0 {
        return Err(Error::InvalidParameter("ring count must be ≥ 1".into()));
    }
    let r0 = 0.9 * inradius(set, &center);
    if !(r0 > 0.0) {
        return Err(Error::NoCondenserFits);
    }
    (0..k)
        .map(|i| {
            let s = if k == 1 {
                0.0
            } else {
                i as f64 / (k - 1) as f64
            };
            let rg = r0 * (1.0 - 0.3 * s);
            let rf = rg * (0.2 + 0.3 * s);
            ring_in(set, center, rf, rg)
        })
        .collect()
}

/// `k` rings whose centers sit on a circle of 35% of the inradius around
/// `center`; outer radii fill half the remaining room, ratios cycle through
/// [1.5, 4].
pub fn off_center_rings(set: &ImplicitSet, center: Point, k: usize) -> Result<Vec<RingCondenser>> {
    if k == 0 {
        return Err(Error::InvalidParameter("ring count must be ≥ 1".into()));
    }
    let dim = set.dim();
    let r0 = inradius(set, &center);
    if !(r0 > 0.0) {
        return Err(Error::NoCondenserFits);
    }
    let ratios = [1.5, 2.0, 2.5, 3.0, 4.0];
    (0..k)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / k as f64;
            let mut c = center;
            let off = 0.35 * r0;
            c[0] += off * theta.cos();
            c[1] += off * theta.sin();
            if dim == 3 {
                c[2] += 0.1 * r0 * (i as f64 - 0.5 * k as f64) / k as f64;
            }
            let room = r0 - distance(&c, &center, dim);
            let rg = 0.9 * room;
            let rf = rg / ratios[i % ratios.len()];
            ring_in(set, c, rf, rg)
        })
        .collect()
}

/// Box condensers centered at `center`, plate along the first axes, one per
/// aspect value, sized to 80% of the inradius.
pub fn box_condensers(
    set: &ImplicitSet,
    center: Point,
    aspects: &[f64],
) -> Result<Vec<RingCondenser>> {
    let dim = set.dim();
    let r0 = 0.8 * inradius(set, &center);
    aspects
        .iter()
        .map(|&t| {
            // lateral half-width r(1 + t) and thickness r·t fit in the ball
            let r = r0 / ((1.0 + t).powi(2) * (dim as f64 - 1.0) + t * t).sqrt();
            let params = BoxCondenserParams::new(vec![1.0; dim], r, t)?.centered_at(center);
            let ring = make_box_condenser(&params)?;
            RingCondenser::new(ring.label, ring.f, ring.g, set.clone())
        })
        .collect()
}

/// The ten-condenser default set: six off-center ball rings and four box
/// condensers.
pub fn default_rings(set: &ImplicitSet) -> Result<Vec<RingCondenser>> {
    let center = set.bbox().center();
    let mut out = off_center_rings(set, center, 6)?;
    out.extend(box_condensers(set, center, &[0.25, 0.5, 0.75, 1.0])?);
    Ok(out)
}

/// Parses `origin-centered:k`, `centered:k`, `off-center:k`, `boxes:t1,t2`
/// or `default`.
pub fn parse_family(spec: &str, set: &ImplicitSet) -> Result<Vec<RingCondenser>> {
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let count = || -> Result<usize> {
        arg.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("ring count in '{spec}'")))
    };
    match name.trim() {
        "origin-centered" => centered_rings(set, [0.0; MAX_DIM], count()?),
        "centered" => centered_rings(set, set.bbox().center(), count()?),
        "off-center" => off_center_rings(set, set.bbox().center(), count()?),
        "boxes" => box_condensers(
            set,
            set.bbox().center(),
            &crate::mappings::parse_floats(arg)?,
        ),
        "default" => default_rings(set),
        other => Err(Error::Unknown {
            kind: "condenser family",
            name: other.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point2;

    #[test]
    fn families_fit_the_domain() {
        let disk = ImplicitSet::open_ball(point2(0.0, 0.0), 1.0, 2).unwrap();
        assert!((inradius(&disk, &point2(0.0, 0.0)) - 1.0).abs() < 0.02);
        assert_eq!(parse_family("origin-centered:5", &disk).unwrap().len(), 5);
        assert_eq!(parse_family("off-center:5", &disk).unwrap().len(), 5);
        let rect = ImplicitSet::aabox(point2(0.0, 0.0), point2(2.0, 1.0), 2).unwrap();
        let set = parse_family("default", &rect).unwrap();
        assert_eq!(set.len(), 10);
        assert!(matches!(
            parse_family("spiral:3", &rect),
            Err(Error::Unknown { .. })
        ));
    }
}
