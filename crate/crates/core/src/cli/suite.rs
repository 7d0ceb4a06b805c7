// SPDX-License-Identifier: Apache-2.0

//! The acceptance battery, one verdict per criterion.

use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{box_partition, RunConfig, Tolerances};
use crate::capacity::{cap_numeric, cap_radial_oracle, solve_grid, SolverOptions};
use crate::capmetric::{check_lipschitz, check_metric_axioms, AxiomTolerances, MetricOptions};
use crate::error::{Error, Result};
use crate::geometry::{
    make_ball_ring, make_box_condenser, point2, BoxCondenserParams, ImplicitSet, Point,
    RingCondenser, MAX_DIM,
};
use crate::inequalities::{
    parse_family, psi_estimate, variation_refinement, verify_ring_pp, verify_ring_pq,
    CapacityEvaluator, CapacityMode, CondenserSampler, PsiContext, VerifyOptions,
};
use crate::mappings::{MappingKind, MappingSpec};
use crate::report::to_json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    RadialOracle,
    NonConformal,
    BoundBracket,
    EqualityCase,
    OffCenter,
    PqSlack,
    PsiMonotone,
    Variation,
    MetricAxioms,
    Lipschitz,
    ZeroCapacity,
    Reproducibility,
}

impl Criterion {
    pub const ALL: [Criterion; 12] = [
        Criterion::RadialOracle,
        Criterion::NonConformal,
        Criterion::BoundBracket,
        Criterion::EqualityCase,
        Criterion::OffCenter,
        Criterion::PqSlack,
        Criterion::PsiMonotone,
        Criterion::Variation,
        Criterion::MetricAxioms,
        Criterion::Lipschitz,
        Criterion::ZeroCapacity,
        Criterion::Reproducibility,
    ];

    pub fn number(self) -> usize {
        Criterion::ALL.iter().position(|&c| c == self).unwrap() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::RadialOracle => "radial-oracle",
            Criterion::NonConformal => "non-conformal",
            Criterion::BoundBracket => "bound-bracket",
            Criterion::EqualityCase => "equality-case",
            Criterion::OffCenter => "off-center",
            Criterion::PqSlack => "pq-slack",
            Criterion::PsiMonotone => "psi-monotone",
            Criterion::Variation => "variation",
            Criterion::MetricAxioms => "metric-axioms",
            Criterion::Lipschitz => "lipschitz",
            Criterion::ZeroCapacity => "zero-capacity",
            Criterion::Reproducibility => "reproducibility",
        }
    }

    /// Smallest `res` at which the criterion's stated tolerance applies.
    fn min_res(self) -> usize {
        match self {
            Criterion::RadialOracle | Criterion::NonConformal => 256,
            Criterion::EqualityCase => 128,
            Criterion::BoundBracket => 32,
            _ => 64,
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    /// By number (`1`..`12`) or name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(n) = s.parse::<usize>() {
            if (1..=12).contains(&n) {
                return Ok(Criterion::ALL[n - 1]);
            }
        }
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "criterion",
                name: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionStatus {
    Pass,
    Fail,
    InsufficientResolution,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub number: usize,
    pub name: String,
    pub status: CriterionStatus,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub verdicts: Vec<CriterionVerdict>,
    /// Wall-clock per criterion, kept out of the verdicts so they stay
    /// reproducible.
    pub timings: Vec<Timing>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| {
            matches!(
                v.status,
                CriterionStatus::Pass | CriterionStatus::InsufficientResolution
            )
        })
    }

    pub fn verdicts_json(&self) -> Result<String> {
        Ok(to_json(&self.verdicts)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub criteria: Vec<Criterion>,
    /// Grid cells per unit length for the capacity criteria.
    pub res: usize,
    /// Grid cells per unit length for the metric criteria.
    pub metric_res: usize,
    pub budget: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            criteria: Criterion::ALL.to_vec(),
            res: 256,
            metric_res: 64,
            budget: 1000,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

impl SuiteConfig {
    pub fn from_run_config(cfg: &RunConfig) -> Result<Self> {
        let criteria = if cfg.criteria.is_empty() {
            Criterion::ALL.to_vec()
        } else {
            let mut v = cfg
                .criteria
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Criterion>>>()?;
            v.sort();
            v.dedup();
            v
        };
        let res = cfg.res.unwrap_or(256);
        Ok(SuiteConfig {
            criteria,
            res,
            metric_res: (res / 4).max(8),
            budget: cfg.budget.unwrap_or(1000),
            seed: cfg.seed,
            tolerances: cfg.tolerances,
        })
    }
}

/// Runs the selected criteria in order. The reproducibility criterion
/// re-runs every other selected criterion and compares serialized verdicts.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut verdicts = Vec::new();
    let mut timings = Vec::new();
    for &c in cfg
        .criteria
        .iter()
        .filter(|&&c| c != Criterion::Reproducibility)
    {
        let t = Instant::now();
        verdicts.push(run_criterion(c, cfg));
        timings.push(Timing {
            name: c.name().to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    if cfg.criteria.contains(&Criterion::Reproducibility) {
        let t = Instant::now();
        let others: Vec<Criterion> = cfg
            .criteria
            .iter()
            .copied()
            .filter(|&c| c != Criterion::Reproducibility)
            .collect();
        let again: Vec<CriterionVerdict> = others.iter().map(|&c| run_criterion(c, cfg)).collect();
        let (a, b) = (to_json(&verdicts)?, to_json(&again)?);
        verdicts.push(CriterionVerdict {
            number: Criterion::Reproducibility.number(),
            name: Criterion::Reproducibility.name().into(),
            status: if a == b && !others.is_empty() {
                CriterionStatus::Pass
            } else {
                CriterionStatus::Fail
            },
            detail: json!({ "criteria_rerun": others.len(), "bytes": a.len(), "identical": a == b }),
        });
        timings.push(Timing {
            name: Criterion::Reproducibility.name().to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    Ok(SuiteReport { verdicts, timings })
}

pub fn run_criterion(c: Criterion, cfg: &SuiteConfig) -> CriterionVerdict {
    let res = if c == Criterion::MetricAxioms || c == Criterion::Lipschitz {
        cfg.metric_res * 4
    } else {
        cfg.res
    };
    let (status, detail) = if res < c.min_res() {
        (
            CriterionStatus::InsufficientResolution,
            json!({ "res": res, "required": c.min_res() }),
        )
    } else {
        let out = match c {
            Criterion::RadialOracle => radial_oracle(cfg),
            Criterion::NonConformal => non_conformal(cfg),
            Criterion::BoundBracket => bound_bracket(cfg),
            Criterion::EqualityCase => equality_case(cfg),
            Criterion::OffCenter => off_center(cfg),
            Criterion::PqSlack => pq_slack(cfg),
            Criterion::PsiMonotone => psi_monotone(cfg),
            Criterion::Variation => variation(cfg),
            Criterion::MetricAxioms => metric_axioms(cfg),
            Criterion::Lipschitz => lipschitz(cfg),
            Criterion::ZeroCapacity => zero_capacity(cfg),
            Criterion::Reproducibility => Err(Error::InvalidParameter(
                "reproducibility runs through run_suite".into(),
            )),
        };
        match out {
            Ok((true, d)) => (CriterionStatus::Pass, d),
            Ok((false, d)) => (CriterionStatus::Fail, d),
            Err(e) => (CriterionStatus::Error, json!({ "error": e.to_string() })),
        }
    };
    CriterionVerdict {
        number: c.number(),
        name: c.name().to_string(),
        status,
        detail,
    }
}

type Outcome = Result<(bool, Value)>;

fn annulus(rf: f64, rg: f64, dim: usize) -> Result<RingCondenser> {
    let o = [0.0; MAX_DIM];
    make_ball_ring(o, rf, rg, &ImplicitSet::open_ball(o, rg, dim)?)
}

fn solve(
    ring: &RingCondenser,
    p: f64,
    res: usize,
    bounds: bool,
) -> Result<crate::capacity::CapacityResult> {
    let opts = SolverOptions {
        attach_bounds: bounds,
        ..SolverOptions::with_p(p)
    };
    cap_numeric(ring, &opts, &solve_grid(ring, res)?)
}

fn radial_oracle(cfg: &SuiteConfig) -> Outcome {
    let ladder = [cfg.res / 4, cfg.res / 2, cfg.res];
    let mut ok = true;
    let mut cases = Vec::new();
    for (rf, rg) in [(0.5, 1.0), (1.0, std::f64::consts::E)] {
        let ring = annulus(rf, rg, 2)?;
        let oracle = cap_radial_oracle(rf, rg, 2, 2.0)?;
        let mut errors = Vec::new();
        let mut values = Vec::new();
        let mut in_budget = true;
        for &res in &ladder {
            let t = Instant::now();
            let r = solve(&ring, 2.0, res, false)?;
            in_budget &= t.elapsed().as_secs_f64() <= 60.0;
            values.push(r.value);
            errors.push(((r.value - oracle) / oracle).abs());
        }
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        let close = errors[2] <= 0.02;
        ok &= monotone && close && in_budget;
        cases.push(json!({
            "r_f": rf, "r_g": rg, "oracle": oracle, "res": ladder, "values": values,
            "relative_errors": errors, "monotone": monotone, "within_2pct": close,
            "within_60s": in_budget,
        }));
    }
    Ok((ok, json!({ "cases": cases })))
}

fn non_conformal(cfg: &SuiteConfig) -> Outcome {
    let ring = annulus(0.5, 1.0, 2)?;
    let oracle = cap_radial_oracle(0.5, 1.0, 2, 1.5)?;
    let r = solve(&ring, 1.5, cfg.res, false)?;
    let err = ((r.value - oracle) / oracle).abs();
    Ok((
        err <= 0.03 && r.converged,
        json!({ "p": 1.5, "oracle": oracle, "value": r.value, "relative_error": err, "converged": r.converged }),
    ))
}

fn bound_bracket(cfg: &SuiteConfig) -> Outcome {
    let mut cases: Vec<(RingCondenser, f64, usize)> = Vec::new();
    let res2 = (cfg.res / 2).max(32);
    for p in [1.5, 2.0, 3.0] {
        cases.push((annulus(0.5, 1.0, 2)?, p, res2));
        cases.push((annulus(1.0, std::f64::consts::E, 2)?, p, res2));
    }
    for t in [0.1, 0.5, 1.0] {
        let ring = make_box_condenser(&BoxCondenserParams::new(vec![1.0, 1.0], 1.0, t)?)?;
        cases.push((ring, 2.0, res2));
    }
    cases.push((annulus(1.0, 2.0, 3)?, 2.0, (cfg.res * 3 / 32).max(8)));
    let mut ok = true;
    let mut rows = Vec::new();
    for (ring, p, res) in &cases {
        let r = solve(ring, *p, *res, true)?;
        let lo = r.lower_bound.unwrap_or(f64::NEG_INFINITY);
        let hi = r.upper_bound.unwrap_or(f64::INFINITY);
        let inside = lo <= r.value && r.value <= hi;
        ok &= inside;
        rows.push(json!({
            "condenser": ring.label, "p": p, "res": res, "lower": r.lower_bound,
            "value": r.value, "upper": r.upper_bound, "inside": inside,
        }));
    }
    Ok((
        ok,
        json!({ "violations": rows.iter().filter(|r| r["inside"] == false).count(), "cases": rows }),
    ))
}

fn unit_disk() -> Result<ImplicitSet> {
    ImplicitSet::open_ball([0.0; MAX_DIM], 1.0, 2)
}

fn unit_square() -> Result<ImplicitSet> {
    ImplicitSet::open_aabox([0.0; MAX_DIM], point2(1.0, 1.0), 2)
}

fn equality_case(cfg: &SuiteConfig) -> Outcome {
    let phi = MappingSpec::new(MappingKind::RadialStretch(4.0), unit_disk()?)?;
    let rings = parse_family("origin-centered:5", phi.codomain())?;
    let mut detail = serde_json::Map::new();
    let mut ok = true;
    for (mode, tol, key) in [
        (CapacityMode::OracleWhenRadial, 0.01, "oracle"),
        (CapacityMode::Numeric, 0.04, "grid"),
    ] {
        let opts = VerifyOptions {
            evaluator: CapacityEvaluator::new(cfg.res, mode),
            ..VerifyOptions::default()
        };
        let v = verify_ring_pp(&phi, &rings, 2.0, &opts)?;
        let ratios: Vec<f64> = v.records.iter().filter_map(|r| r.ratio).collect();
        let within = ratios.len() == rings.len()
            && ratios
                .iter()
                .all(|r| (r - v.constant).abs() <= tol * v.constant);
        ok &= within;
        detail.insert(
            key.into(),
            json!({ "k": v.constant, "ratios": ratios, "tolerance": tol, "within": within }),
        );
    }
    Ok((ok, Value::Object(detail)))
}

fn off_center(cfg: &SuiteConfig) -> Outcome {
    let phi = MappingSpec::new(MappingKind::diag(&[2.0, 1.0]), unit_square()?)?;
    let rings = parse_family("off-center:5", phi.codomain())?;
    let opts = VerifyOptions {
        evaluator: CapacityEvaluator::new(cfg.res, CapacityMode::Numeric),
        ..VerifyOptions::default()
    };
    let v = verify_ring_pp(&phi, &rings, 2.0, &opts)?;
    let ratios: Vec<f64> = v.records.iter().filter_map(|r| r.ratio).collect();
    let limit = v.constant * 1.03;
    let ok = ratios.len() == rings.len() && ratios.iter().all(|&r| r <= limit);
    Ok((
        ok,
        json!({ "k": v.constant, "limit": limit, "ratios": ratios }),
    ))
}

fn pq_slack(cfg: &SuiteConfig) -> Outcome {
    let phi = MappingSpec::new(MappingKind::diag(&[2.0, 1.0]), unit_square()?)?;
    let rings = parse_family("default", phi.codomain())?;
    let opts = VerifyOptions {
        evaluator: CapacityEvaluator::new(cfg.res, CapacityMode::Numeric),
        ..VerifyOptions::default()
    };
    let v = verify_ring_pq(&phi, &rings, 3.0, 2.0, &opts)?;
    let rel: Vec<f64> = v
        .records
        .iter()
        .filter_map(|r| Some(r.slack? / r.bound?))
        .collect();
    let ok = rel.len() == rings.len() && rel.iter().all(|&s| s >= -0.03);
    Ok((
        ok,
        json!({ "k": v.constant, "condensers": rings.len(), "relative_slacks": rel }),
    ))
}

fn psi_context(kind: MappingKind, cfg: &SuiteConfig) -> Result<PsiContext> {
    let phi = MappingSpec::new(kind, unit_square()?)?;
    let sampler = CondenserSampler::new(*phi.codomain().bbox(), cfg.seed);
    PsiContext::new(
        phi,
        3.0,
        2.0,
        sampler,
        cfg.budget,
        CapacityEvaluator::new(cfg.res, CapacityMode::OracleWhenRadial),
    )
}

/// Twenty random boxes in Ω̃, each with a random sub-box.
fn nested_pairs(b: &crate::geometry::BBox, seed: u64) -> Result<Vec<(ImplicitSet, ImplicitSet)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let dim = b.dim;
    (0..20)
        .map(|_| {
            let mut lo = [0.0; MAX_DIM];
            let mut hi = [0.0; MAX_DIM];
            let mut ilo = [0.0; MAX_DIM];
            let mut ihi = [0.0; MAX_DIM];
            for i in 0..dim {
                let e = b.extent(i);
                let w = e * rng.random_range(0.5..1.0);
                lo[i] = b.lo[i] + rng.random_range(0.0..=(e - w));
                hi[i] = lo[i] + w;
                let iw = w * rng.random_range(0.5..0.9);
                ilo[i] = lo[i] + rng.random_range(0.0..=(w - iw));
                ihi[i] = ilo[i] + iw;
            }
            Ok((
                ImplicitSet::open_aabox(ilo, ihi, dim)?,
                ImplicitSet::open_aabox(lo, hi, dim)?,
            ))
        })
        .collect()
}

fn psi_monotone(cfg: &SuiteConfig) -> Outcome {
    let ctx = psi_context(MappingKind::diag(&[2.0, 1.0]), cfg)?;
    let pairs = nested_pairs(ctx.phi.codomain().bbox(), cfg.seed)?;
    let mut rows = Vec::new();
    let (mut non_positive, mut non_monotone) = (0, 0);
    for (inner, outer) in &pairs {
        let value = |s: &ImplicitSet| match psi_estimate(&ctx, s) {
            Ok(e) => Ok(e.psi_value),
            Err(Error::NoCondenserFits) => Ok(0.0),
            Err(e) => Err(e),
        };
        let (a, b) = (value(inner)?, value(outer)?);
        non_positive += (!(a > 0.0)) as usize + (!(b > 0.0)) as usize;
        non_monotone += (a > b) as usize;
        rows.push(json!([a, b]));
    }
    Ok((
        non_positive == 0 && non_monotone == 0,
        json!({
            "pairs": pairs.len(), "non_positive": non_positive,
            "monotonicity_violations": non_monotone, "inner_outer": rows,
        }),
    ))
}

fn variation(cfg: &SuiteConfig) -> Outcome {
    let mut ok = true;
    let mut rows = Vec::new();
    for kind in [MappingKind::Identity, MappingKind::diag(&[2.0, 1.0])] {
        let ctx = psi_context(kind.clone(), cfg)?;
        let b = *ctx.phi.codomain().bbox();
        let r = variation_refinement(&ctx, &box_partition(&b, 2)?, &box_partition(&b, 4)?)?;
        let limit = r.fine.bound_m * (1.0 + cfg.tolerances.variation);
        let within = r.fine.total <= limit;
        ok &= within;
        rows.push(json!({
            "map": kind.to_string(), "bound_m": r.fine.bound_m, "total": r.fine.total,
            "limit": limit, "within": within, "nested_coarse_total": r.nested_coarse_total,
            "superadditive": r.superadditive(),
            "per_box": r.fine.per_set.iter().map(|s| s.psi_value).collect::<Vec<_>>(),
        }));
    }
    Ok((ok, json!({ "maps": rows })))
}

fn metric_opts(cfg: &SuiteConfig) -> MetricOptions {
    MetricOptions {
        res: cfg.metric_res,
        seed: cfg.seed,
        ..MetricOptions::default()
    }
}

fn metric_axioms(cfg: &SuiteConfig) -> Outcome {
    let points = super::default_points();
    let tol = AxiomTolerances {
        symmetry: cfg.tolerances.symmetry,
        triangle: cfg.tolerances.triangle,
        ..AxiomTolerances::default()
    };
    let mut ok = true;
    let mut rows = Vec::new();
    for p in [1.5, 2.0] {
        let r = check_metric_axioms(&unit_disk()?, p, &points, &metric_opts(cfg), &tol)?;
        ok &= r.passed();
        let worst_sym = r
            .symmetry
            .iter()
            .map(|e| e.relative_gap)
            .fold(0.0, f64::max);
        let worst_tri = r
            .triangle
            .iter()
            .map(|e| e.direct / e.detour)
            .fold(0.0, f64::max);
        rows.push(json!({
            "p": p, "passed": r.passed(), "distances": r.distances,
            "max_symmetry_gap": worst_sym, "max_triangle_ratio": worst_tri,
            "positivity_failures": r.positivity_failures.len(),
        }));
    }
    Ok((ok, json!({ "points": points.len(), "runs": rows })))
}

fn lipschitz(cfg: &SuiteConfig) -> Outcome {
    let base: [(Point, Point); 3] = [
        (point2(0.2, 0.0), point2(0.6, 0.0)),
        (point2(-0.3, 0.2), point2(0.3, 0.1)),
        (point2(0.0, -0.5), point2(0.1, 0.4)),
    ];
    let mut ok = true;
    let mut rows = Vec::new();
    for kind in [
        MappingKind::Identity,
        MappingKind::diag(&[2.0, 1.0]),
        MappingKind::RadialStretch(4.0),
    ] {
        let phi = MappingSpec::new(kind.clone(), unit_disk()?)?;
        let pairs: Vec<_> = base
            .iter()
            .map(|(x, y)| (phi.forward(x), phi.forward(y)))
            .collect();
        let r = check_lipschitz(
            &phi,
            &pairs,
            2.0,
            2.0,
            &metric_opts(cfg),
            cfg.tolerances.lipschitz,
        )?;
        let min_rel = r
            .entries
            .iter()
            .map(|e| e.slack / e.bound)
            .fold(f64::INFINITY, f64::min);
        let within = min_rel >= -cfg.tolerances.lipschitz;
        ok &= within;
        rows.push(json!({
            "map": kind.to_string(), "k": r.constant, "min_relative_slack": min_rel,
            "entries": r.entries,
        }));
    }
    Ok((ok, json!({ "maps": rows })))
}

fn zero_capacity(cfg: &SuiteConfig) -> Outcome {
    let res = (cfg.res / 2).max(32);
    let ks = [2usize, 3, 4, 6, 8, 12, 16];
    let mut ok = true;
    let mut rows = Vec::new();
    for p in [1.5, 2.0] {
        let mut values = Vec::new();
        for &k in &ks {
            values.push(solve(&annulus(1.0 / k as f64, 1.0, 2)?, p, res, false)?.value);
        }
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        ok &= decreasing;
        rows.push(json!({ "p": p, "k": ks, "values": values, "decreasing": decreasing }));
    }
    Ok((ok, json!({ "res": res, "runs": rows })))
}
