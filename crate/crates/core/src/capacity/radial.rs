// SPDX-License-Identifier: Apache-2.0

//! Capacity of concentric ball rings from the explicit radial extremal.

use crate::error::{Error, Result};
use crate::geometry::unit_sphere_area;

/// Panels of the composite Simpson rule in the logarithmic radius.
const PANELS: usize = 4000;

/// Derivative of the radial extremal `u` with `u(r_F) = 1`, `u(r_G) = 0`.
fn extremal_slope(rho: f64, r_f: f64, r_g: f64, n: usize, p: f64) -> f64 {
    let nf = n as f64;
    if (p - nf).abs() < 1e-12 {
        -1.0 / (rho * (r_g / r_f).ln())
    } else {
        let a = (p - nf) / (p - 1.0);
        a * rho.powf(a - 1.0) / (r_f.powf(a) - r_g.powf(a))
    }
}

/// `ω_{n-1} ∫ |u'(ρ)|^p ρ^{n-1} dρ` over `(r_F, r_G)` for the radial extremal.
pub fn cap_radial_oracle(r_f: f64, r_g: f64, n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ExponentTooSmall(p));
    }
    if !(r_f > 0.0 && r_f < r_g) {
        return Err(Error::RadiusOrdering { r_f, r_g });
    }
    crate::geometry::check_dim(n)?;
    let (s0, s1) = (r_f.ln(), r_g.ln());
    let step = (s1 - s0) / PANELS as f64;
    let integrand = |s: f64| {
        let rho = s.exp();
        extremal_slope(rho, r_f, r_g, n, p).abs().powf(p) * rho.powi(n as i32)
    };
    let mut acc = integrand(s0) + integrand(s1);
    for k in 1..PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(s0 + k as f64 * step);
    }
    Ok(unit_sphere_area(n) * acc * step / 3.0)
}

/// Closed form of the same quantity.
pub fn cap_radial_closed_form(r_f: f64, r_g: f64, n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ExponentTooSmall(p));
    }
    if !(r_f > 0.0 && r_f < r_g) {
        return Err(Error::RadiusOrdering { r_f, r_g });
    }
    crate::geometry::check_dim(n)?;
    let nf = n as f64;
    let omega = unit_sphere_area(n);
    if (p - nf).abs() < 1e-12 {
        return Ok(omega / (r_g / r_f).ln().powf(nf - 1.0));
    }
    let a = (p - nf) / (p - 1.0);
    let c = ((nf - p).abs() / (p - 1.0)).powf(p - 1.0);
    Ok(omega * c * (r_f.powf(a) - r_g.powf(a)).abs().powf(1.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    /// Least energy over piecewise-linear radial profiles on `m` uniform
    /// shells. The discrete problem minimizes `Σ w_i |Δu_i|^p` under
    /// `Σ Δu_i = 1`, whose minimum is `(Σ w_i^{-1/(p-1)})^{1-p}`.
    fn brute_force(r_f: f64, r_g: f64, n: usize, p: f64, m: usize) -> f64 {
        let omega = unit_sphere_area(n);
        let nf = n as f64;
        let dr = (r_g - r_f) / m as f64;
        let mut sum = 0.0;
        for i in 0..m {
            let a = r_f + i as f64 * dr;
            let b = a + dr;
            let w = omega * (b.powf(nf) - a.powf(nf)) / nf / dr.powf(p);
            sum += w.powf(-1.0 / (p - 1.0));
        }
        sum.powf(1.0 - p)
    }

    #[test]
    fn matches_piecewise_linear_minimizer() {
        for &(rf, rg, n, p) in &[
            (1.0, E, 2, 2.0),
            (0.5, 1.0, 2, 2.0),
            (0.5, 1.0, 2, 1.5),
            (0.5, 1.0, 2, 3.0),
            (1.0, 2.0, 3, 2.0),
            (1.0, 2.0, 3, 3.0),
            (0.2, 0.9, 3, 2.5),
        ] {
            let oracle = cap_radial_oracle(rf, rg, n, p).unwrap();
            let bf = brute_force(rf, rg, n, p, 20_000);
            assert!(
                (oracle - bf).abs() / bf < 1e-6,
                "{rf} {rg} {n} {p}: {oracle} vs {bf}"
            );
        }
    }

    #[test]
    fn known_values() {
        let v = cap_radial_oracle(1.0, E, 2, 2.0).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-9);
        let v = cap_radial_oracle(0.5, 1.0, 2, 2.0).unwrap();
        assert!((v - 2.0 * PI / 2f64.ln()).abs() < 1e-9);
        let v = cap_radial_oracle(1.0, 2.0, 3, 2.0).unwrap();
        assert!((v - 8.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn closed_form_agrees() {
        for &(rf, rg, n, p) in &[
            (0.5, 1.0, 2, 1.5),
            (0.3, 0.8, 2, 3.0),
            (1.0, 2.0, 3, 2.0),
            (1.0, 3.0, 3, 3.0),
        ] {
            let a = cap_radial_oracle(rf, rg, n, p).unwrap();
            let b = cap_radial_closed_form(rf, rg, n, p).unwrap();
            assert!((a - b).abs() / b < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            cap_radial_oracle(0.5, 1.0, 2, 1.0),
            Err(Error::ExponentTooSmall(_))
        ));
        assert!(matches!(
            cap_radial_oracle(1.0, 0.5, 2, 2.0),
            Err(Error::RadiusOrdering { .. })
        ));
    }
}
