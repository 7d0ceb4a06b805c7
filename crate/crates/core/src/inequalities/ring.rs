// SPDX-License-Identifier: Apache-2.0

//! Capacity distortion of ring condensers under catalog mappings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pullback_condenser, Grid, RingCondenser};
use crate::inequalities::evaluator::CapacityEvaluator;
use crate::mappings::{distortion_norm, DistortionReport, MappingSpec};

/// One condenser of a verification batch. `lhs` is `cp_q^{1/q}` of the
/// pulled-back condenser, `rhs` is `cp_p^{1/p}` of the original and
/// `bound = K·rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingInequalityRecord {
    pub id: usize,
    pub label: String,
    pub p: f64,
    pub q: f64,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub converged: bool,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub evaluator: CapacityEvaluator,
    /// Allowed relative excess of a ratio over the distortion constant.
    pub tol_total: f64,
    /// Quadrature cells per unit length for `K_{p,q}`.
    pub quadrature_res: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            evaluator: CapacityEvaluator::default(),
            tol_total: 0.03,
            quadrature_res: 256,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RingVerification {
    pub p: f64,
    pub q: f64,
    /// `K_p(φ;Ω)` or `K_{p,q}(φ;Ω)`.
    pub constant: f64,
    pub tol: f64,
    pub records: Vec<RingInequalityRecord>,
    /// Largest ratio over converged, non-skipped records.
    pub sup_ratio: Option<f64>,
    pub violations: Vec<usize>,
}

impl RingVerification {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `K_{p,q}(φ;Ω)` on a quadrature grid with `res` cells per unit length.
pub fn distortion_constant(
    phi: &MappingSpec,
    p: f64,
    q: f64,
    res: usize,
) -> Result<DistortionReport> {
    let grid = Grid::covering(phi.domain().bbox(), 1.0 / res.max(1) as f64)?;
    distortion_norm(phi, p, q, &grid)
}

/// Why a condenser has zero base capacity, if it does: a point plate has
/// zero p-capacity for `p ≤ n`.
fn zero_capacity_reason(ring: &RingCondenser, p: f64) -> Option<String> {
    let n = ring.dim() as f64;
    (ring.f.diameter() == 0.0 && p <= n).then(|| "zero base capacity".to_string())
}

fn evaluate(
    phi: &MappingSpec,
    rings: &[RingCondenser],
    p: f64,
    q: f64,
    constant: f64,
    opts: &VerifyOptions,
) -> Result<RingVerification> {
    let records: Vec<Result<RingInequalityRecord>> = rings
        .par_iter()
        .enumerate()
        .map(|(id, ring)| {
            let mut rec = RingInequalityRecord {
                id,
                label: ring.label.clone(),
                p,
                q,
                lhs: None,
                rhs: None,
                ratio: None,
                bound: None,
                slack: None,
                converged: true,
                skipped: None,
            };
            if let Some(reason) = zero_capacity_reason(ring, p) {
                rec.skipped = Some(reason);
                return Ok(rec);
            }
            let pulled = pullback_condenser(phi, ring)?;
            let base = opts.evaluator.capacity(ring, p)?;
            if !(base.value > 0.0) {
                rec.skipped = Some("zero base capacity".into());
                return Ok(rec);
            }
            let top = opts.evaluator.capacity(&pulled, q)?;
            let lhs = top.value.powf(1.0 / q);
            let rhs = base.value.powf(1.0 / p);
            rec.lhs = Some(lhs);
            rec.rhs = Some(rhs);
            rec.ratio = Some(lhs / rhs);
            rec.bound = Some(constant * rhs);
            rec.slack = Some(constant * rhs - lhs);
            rec.converged = base.converged && top.converged;
            Ok(rec)
        })
        .collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    let usable = || {
        records
            .iter()
            .filter(|r| r.converged && r.skipped.is_none())
    };
    let sup_ratio = usable().filter_map(|r| r.ratio).reduce(f64::max);
    let violations = usable()
        .filter(|r| {
            r.ratio
                .is_some_and(|x| x > constant * (1.0 + opts.tol_total))
        })
        .map(|r| r.id)
        .collect();
    Ok(RingVerification {
        p,
        q,
        constant,
        tol: opts.tol_total,
        records,
        sup_ratio,
        violations,
    })
}

/// `cp_p^{1/p}(φ⁻¹F; φ⁻¹G) ≤ K_p(φ;Ω) · cp_p^{1/p}(F; G)` on every ring.
pub fn verify_ring_pp(
    phi: &MappingSpec,
    rings: &[RingCondenser],
    p: f64,
    opts: &VerifyOptions,
) -> Result<RingVerification> {
    if !(p > 1.0) {
        return Err(Error::ExponentTooSmall(p));
    }
    let k = distortion_constant(phi, p, p, opts.quadrature_res)?.k_pq;
    evaluate(phi, rings, p, p, k, opts)
}

/// `cp_q^{1/q}(φ⁻¹F; φ⁻¹G) ≤ K_{p,q}(φ;Ω) · cp_p^{1/p}(F; G)` for
/// `n − 1 < q < p`.
pub fn verify_ring_pq(
    phi: &MappingSpec,
    rings: &[RingCondenser],
    p: f64,
    q: f64,
    opts: &VerifyOptions,
) -> Result<RingVerification> {
    let n1 = phi.dim() as f64 - 1.0;
    if !(q > n1 && q < p) || !(q > 1.0) {
        return Err(Error::ExponentRange(format!(
            "need n-1 < q < p (n={}, p={p}, q={q})",
            phi.dim()
        )));
    }
    let k = distortion_constant(phi, p, q, opts.quadrature_res)?.k_pq;
    evaluate(phi, rings, p, q, k, opts)
}

/// One CSV row per record: id, p, q, lhs, rhs, ratio, bound, slack,
/// converged.
pub fn write_ledger<W: std::io::Write>(records: &[RingInequalityRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "id",
        "label",
        "p",
        "q",
        "lhs",
        "rhs",
        "ratio",
        "bound",
        "slack",
        "converged",
        "skipped",
    ])
    .map_err(io)?;
    let f = |v: Option<f64>| v.map(crate::report::sig12_string).unwrap_or_default();
    for r in records {
        w.write_record([
            r.id.to_string(),
            r.label.clone(),
            crate::report::sig12_string(r.p),
            crate::report::sig12_string(r.q),
            f(r.lhs),
            f(r.rhs),
            f(r.ratio),
            f(r.bound),
            f(r.slack),
            r.converged.to_string(),
            r.skipped.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
