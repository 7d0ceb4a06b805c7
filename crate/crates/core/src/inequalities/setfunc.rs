// SPDX-License-Identifier: Apache-2.0

//! Sampled lower estimates of the capacity set function and its variation.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pullback_condenser, BBox, ImplicitSet, Point};
use crate::inequalities::evaluator::CapacityEvaluator;
use crate::inequalities::ring::distortion_constant;
use crate::inequalities::sampler::{Candidate, CondenserSampler};
use crate::mappings::MappingSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetFunctionEstimate {
    /// Max over accepted candidates of `ratio^{pq/(p−q)}`.
    pub psi_value: f64,
    /// Accepted candidates with a usable ratio.
    pub sampled_condensers: usize,
    pub best_witness: Option<usize>,
    pub witnesses: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationEstimate {
    pub per_set: Vec<SetFunctionEstimate>,
    pub total: f64,
    /// `K_{p,q}(φ;Ω)^{pq/(p−q)}`.
    pub bound_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub coarse: VariationEstimate,
    pub fine: VariationEstimate,
    /// Coarse total when each coarse set is probed by the union of its
    /// children's witnesses.
    pub nested_coarse_total: f64,
}

impl RefinementReport {
    pub fn superadditive(&self) -> bool {
        self.fine.total >= self.nested_coarse_total
    }
}

#[derive(Clone, Debug)]
enum Outcome {
    Ratio { ratio: f64, converged: bool },
    Unusable,
}

/// Mapping, exponents, candidate stream and evaluation policy for Ψ
/// estimates. Candidate outcomes are cached by stream index, so nested
/// regions never solve the same condenser twice.
pub struct PsiContext {
    pub phi: MappingSpec,
    pub p: f64,
    pub q: f64,
    pub sampler: CondenserSampler,
    /// Length of the candidate stream scanned per region.
    pub budget: usize,
    pub evaluator: CapacityEvaluator,
    pub quadrature_res: usize,
    candidates: Mutex<HashMap<usize, Option<Candidate>>>,
    outcomes: Mutex<HashMap<usize, Outcome>>,
    bound: OnceLock<Result<f64>>,
}

impl PsiContext {
    pub fn new(
        phi: MappingSpec,
        p: f64,
        q: f64,
        sampler: CondenserSampler,
        budget: usize,
        evaluator: CapacityEvaluator,
    ) -> Result<Self> {
        if !(q > 1.0 && q < p) {
            return Err(Error::ExponentRange(format!(
                "need 1 < q < p (p={p}, q={q})"
            )));
        }
        if budget < 10 {
            return Err(Error::InvalidParameter(format!(
                "budget must be ≥ 10 (got {budget})"
            )));
        }
        Ok(PsiContext {
            phi,
            p,
            q,
            sampler,
            budget,
            evaluator,
            quadrature_res: 256,
            candidates: Mutex::new(HashMap::new()),
            outcomes: Mutex::new(HashMap::new()),
            bound: OnceLock::new(),
        })
    }

    /// `pq/(p−q)`.
    pub fn exponent(&self) -> f64 {
        self.p * self.q / (self.p - self.q)
    }

    /// `M = K_{p,q}(φ;Ω)^{pq/(p−q)}`.
    pub fn bound_m(&self) -> Result<f64> {
        self.bound
            .get_or_init(|| {
                let k = distortion_constant(&self.phi, self.p, self.q, self.quadrature_res)?.k_pq;
                Ok(k.powf(self.exponent()))
            })
            .clone()
    }

    fn candidate(&self, k: usize) -> Option<Candidate> {
        if let Some(c) = self.candidates.lock().expect("poisoned").get(&k) {
            return c.clone();
        }
        let c = self
            .sampler
            .candidate(k, &self.phi, self.phi.codomain())
            .ok();
        self.candidates
            .lock()
            .expect("poisoned")
            .insert(k, c.clone());
        c
    }

    fn outcome(&self, cand: &Candidate) -> Outcome {
        if let Some(o) = self.outcomes.lock().expect("poisoned").get(&cand.index) {
            return o.clone();
        }
        let o = self.solve(cand).unwrap_or(Outcome::Unusable);
        self.outcomes
            .lock()
            .expect("poisoned")
            .insert(cand.index, o.clone());
        o
    }

    fn solve(&self, cand: &Candidate) -> Result<Outcome> {
        let base = self.evaluator.capacity(&cand.ring, self.p)?;
        if !(base.value > 0.0) {
            return Ok(Outcome::Unusable);
        }
        let pulled = pullback_condenser(&self.phi, &cand.ring)?;
        let top = self.evaluator.capacity(&pulled, self.q)?;
        Ok(Outcome::Ratio {
            ratio: top.value.powf(1.0 / self.q) / base.value.powf(1.0 / self.p),
            converged: base.converged && top.converged,
        })
    }
}

fn lattice_size(dim: usize) -> usize {
    if dim == 2 {
        33
    } else {
        11
    }
}

fn fits(g: &ImplicitSet, region: &ImplicitSet) -> bool {
    region.bbox().contains_box(g.bbox()) && g.sampled_subset_of(region, lattice_size(g.dim()))
}

/// Lower estimate of `Ψ(Ã) = sup (cp_q^{1/q}(φ⁻¹F;φ⁻¹G) / cp_p^{1/p}(F;G))^{pq/(p−q)}`
/// over the first `budget` candidates of the stream that fit inside `Ã`.
pub fn psi_estimate(ctx: &PsiContext, region: &ImplicitSet) -> Result<SetFunctionEstimate> {
    if region.dim() != ctx.phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.phi.dim(),
            got: region.dim(),
        });
    }
    let accepted: Vec<Candidate> = (0..ctx.budget)
        .into_par_iter()
        .filter_map(|k| ctx.candidate(k))
        .filter(|c| fits(&c.ring.g, region))
        .collect();
    let outcomes: Vec<(usize, Outcome)> = accepted
        .par_iter()
        .map(|c| (c.index, ctx.outcome(c)))
        .collect();
    let e = ctx.exponent();
    let mut best: Option<(usize, f64)> = None;
    let mut witnesses = Vec::new();
    for (k, o) in outcomes {
        if let Outcome::Ratio {
            ratio,
            converged: true,
        } = o
        {
            witnesses.push(k);
            let v = ratio.powf(e);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
    }
    let (best_witness, psi_value) = best.ok_or(Error::NoCondenserFits)?;
    Ok(SetFunctionEstimate {
        psi_value,
        sampled_condensers: witnesses.len(),
        best_witness: Some(best_witness),
        witnesses,
    })
}

fn check_disjoint(sets: &[ImplicitSet]) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            let dim = a.dim();
            let (ba, bb) = (a.bbox(), b.bbox());
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            let mut empty = false;
            for d in 0..dim {
                lo[d] = ba.lo[d].max(bb.lo[d]);
                hi[d] = ba.hi[d].min(bb.hi[d]);
                // faces shared up to rounding do not count as overlap
                let tol = 1e-9 * (ba.extent(d) + bb.extent(d));
                empty |= hi[d] - lo[d] <= tol;
            }
            if empty {
                continue;
            }
            let overlap = BBox::new(lo, hi, dim);
            if overlap
                .lattice(lattice_size(dim))
                .iter()
                .any(|x| a.contains(x) && b.contains(x))
            {
                return Err(Error::OverlappingPartition);
            }
        }
    }
    Ok(())
}

/// `Σ_k Ψ(Ã_k)` over a disjoint family, with the bound `M`.
pub fn variation_estimate(
    ctx: &PsiContext,
    partition: &[ImplicitSet],
) -> Result<VariationEstimate> {
    if partition.is_empty() {
        return Err(Error::InvalidParameter("empty partition".into()));
    }
    check_disjoint(partition)?;
    let per_set = partition
        .iter()
        .map(|a| psi_estimate(ctx, a))
        .collect::<Result<Vec<_>>>()?;
    let total = per_set.iter().map(|s| s.psi_value).sum();
    Ok(VariationEstimate {
        per_set,
        total,
        bound_m: ctx.bound_m()?,
    })
}

/// Variation totals before and after refining `coarse` into `fine`, each
/// fine set lying inside one coarse set.
pub fn variation_refinement(
    ctx: &PsiContext,
    coarse: &[ImplicitSet],
    fine: &[ImplicitSet],
) -> Result<RefinementReport> {
    let c = variation_estimate(ctx, coarse)?;
    let f = variation_estimate(ctx, fine)?;
    let m = lattice_size(ctx.phi.dim());
    let mut nested = 0.0;
    for (i, parent) in coarse.iter().enumerate() {
        let children: Vec<f64> = fine
            .iter()
            .zip(&f.per_set)
            .filter(|(s, _)| s.sampled_subset_of(parent, m))
            .map(|(_, e)| e.psi_value)
            .collect();
        nested += if children.is_empty() {
            c.per_set[i].psi_value
        } else {
            children.into_iter().fold(0.0, f64::max)
        };
    }
    Ok(RefinementReport {
        coarse: c,
        fine: f,
        nested_coarse_total: nested,
    })
}

/// `Ψ(B(x,r)) / |B(x,r)|` along strictly decreasing radii. Candidates are
/// drawn around the largest ball.
pub fn density_quotients(ctx: &PsiContext, x: &Point, radii: &[f64]) -> Result<Vec<f64>> {
    let dim = ctx.phi.dim();
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::RadiiNotDecreasing);
    }
    let outer = ImplicitSet::open_ball(*x, radii[0], dim)?;
    let m = if dim == 2 { 65 } else { 17 };
    if !outer.sampled_subset_of(ctx.phi.codomain(), m) {
        return Err(Error::BallEscapes);
    }
    let local = PsiContext::new(
        ctx.phi.clone(),
        ctx.p,
        ctx.q,
        CondenserSampler {
            reference: *outer.bbox(),
            ..ctx.sampler.clone()
        },
        ctx.budget,
        ctx.evaluator.clone(),
    )?;
    radii
        .iter()
        .map(|&r| {
            let ball = ImplicitSet::open_ball(*x, r, dim)?;
            let psi = psi_estimate(&local, &ball)?.psi_value;
            Ok(psi / (crate::geometry::unit_ball_volume(dim) * r.powi(dim as i32)))
        })
        .collect()
}
