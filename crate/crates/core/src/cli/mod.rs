// SPDX-License-Identifier: Apache-2.0

//! Run configuration, subcommand pipelines and artifact output.

mod suite;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::{cap_numeric, cap_radial_oracle, solve_grid, SolverOptions};
use crate::capmetric::{
    check_lipschitz, check_metric_axioms, render_svg, AxiomTolerances, MetricOptions,
};
use crate::error::{Error, Result};
use crate::geometry::{
    make_ball_ring, make_box_condenser, point2, BBox, BoxCondenserParams, Grid, ImplicitSet, Point,
    RingCondenser, MAX_DIM,
};
use crate::inequalities::{
    parse_family, variation_refinement, verify_ring_pp, verify_ring_pq, write_ledger,
    CapacityEvaluator, CapacityMode, CondenserSampler, PsiContext, VerifyOptions,
};
use crate::mappings::{distortion_norm, parse_floats, MappingKind, MappingSpec};
use crate::report::to_json;

pub use suite::{
    run_suite, Criterion, CriterionStatus, CriterionVerdict, SuiteConfig, SuiteReport,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Cap,
    Distort,
    VerifyRing,
    Setfunc,
    Metric,
    #[default]
    Suite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative band on ring ratios above `K`.
    pub ring: f64,
    pub symmetry: f64,
    pub triangle: f64,
    pub lipschitz: f64,
    /// Relative band on the variation total above `M`.
    pub variation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ring: 0.03,
            symmetry: 0.02,
            triangle: 0.05,
            lipschitz: 0.05,
            variation: 0.05,
        }
    }
}

/// Everything a run needs. Loaded from TOML, then overridden by flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Grid cells per unit length.
    pub res: Option<usize>,
    /// Mapping, e.g. `radial:4` or `linear:2,1`.
    pub map: Option<String>,
    /// Ω, e.g. `unit-disk`, `unit-square`, `disk:cx,cy,r`.
    pub domain: Option<String>,
    /// Condenser for `cap`, e.g. `annulus:0.5,1`.
    pub shape: Option<String>,
    /// Condenser family for `verify-ring`.
    pub rings: Option<String>,
    pub mode: Option<CapacityMode>,
    /// `x,y;x,y;...`
    pub points: Option<String>,
    /// `x1,y1,x2,y2;...`
    pub pairs: Option<String>,
    /// Boxes per axis of the fine partition.
    pub partition: Option<usize>,
    pub budget: Option<usize>,
    /// Suite criteria by number or name; empty means all.
    pub criteria: Vec<String>,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Not echoed into summaries, so runs into different directories
    /// still compare equal.
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Exit status and the JSON summary of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Caps the worker pool from `RINGCAP_THREADS`, if set.
pub fn init_threads() {
    if let Some(n) = std::env::var("RINGCAP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

/// `unit-disk`, `unit-square`, `unit-ball`, `unit-cube`, `disk:cx,cy,r`,
/// `ball:cx,cy,cz,r`, `box:lo..,hi..` (open sets).
pub fn parse_domain(s: &str) -> Result<ImplicitSet> {
    let s = s.trim();
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let o = [0.0; MAX_DIM];
    match name {
        "unit-disk" => ImplicitSet::open_ball(o, 1.0, 2),
        "unit-ball" => ImplicitSet::open_ball(o, 1.0, 3),
        "unit-square" => ImplicitSet::open_aabox(o, [1.0, 1.0, 0.0], 2),
        "unit-cube" => ImplicitSet::open_aabox(o, [1.0; MAX_DIM], 3),
        "disk" | "ball" => {
            let v = parse_floats(args)?;
            let dim = v.len().saturating_sub(1);
            if !(dim == 2 || dim == 3) {
                return Err(Error::Parse(format!("'{s}': expected center and radius")));
            }
            ImplicitSet::open_ball(to_point(&v[..dim]), v[dim], dim)
        }
        "box" => {
            let v = parse_floats(args)?;
            let dim = v.len() / 2;
            if v.len() % 2 != 0 || !(dim == 2 || dim == 3) {
                return Err(Error::Parse(format!("'{s}': expected lo and hi corners")));
            }
            ImplicitSet::open_aabox(to_point(&v[..dim]), to_point(&v[dim..]), dim)
        }
        _ => Err(Error::Unknown {
            kind: "domain",
            name: s.to_string(),
        }),
    }
}

/// `annulus:rf,rg`, `shell:rf,rg`, `ball-ring:c..,rf,rg`,
/// `box:λ..,r,t` (λ sorted non-increasing).
pub fn parse_shape(s: &str) -> Result<RingCondenser> {
    let s = s.trim();
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let v = parse_floats(args)?;
    let o = [0.0; MAX_DIM];
    let bad = || Error::Parse(format!("bad condenser '{s}'"));
    match name {
        "annulus" | "shell" => {
            let dim = if name == "annulus" { 2 } else { 3 };
            let [rf, rg] = v[..] else { return Err(bad()) };
            let g = ImplicitSet::open_ball(o, rg, dim)?;
            make_ball_ring(o, rf, rg, &g)
        }
        "ball-ring" => {
            let dim = v.len().saturating_sub(2);
            if !(dim == 2 || dim == 3) {
                return Err(bad());
            }
            let c = to_point(&v[..dim]);
            let g = ImplicitSet::open_ball(c, v[dim + 1], dim)?;
            make_ball_ring(c, v[dim], v[dim + 1], &g)
        }
        "box" => {
            let dim = v.len().saturating_sub(2);
            if !(dim == 2 || dim == 3) {
                return Err(bad());
            }
            make_box_condenser(&BoxCondenserParams::new(
                v[..dim].to_vec(),
                v[dim],
                v[dim + 1],
            )?)
        }
        _ => Err(Error::Unknown {
            kind: "condenser",
            name: s.to_string(),
        }),
    }
}

fn to_point(v: &[f64]) -> Point {
    let mut p = [0.0; MAX_DIM];
    p[..v.len()].copy_from_slice(v);
    p
}

/// `x,y;x,y;...` with `dim` coordinates per point.
pub fn parse_points(s: &str, dim: usize) -> Result<Vec<Point>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let v = parse_floats(t)?;
            if v.len() != dim {
                return Err(Error::Parse(format!("point '{t}' needs {dim} coordinates")));
            }
            Ok(to_point(&v))
        })
        .collect()
}

pub fn parse_pairs(s: &str, dim: usize) -> Result<Vec<(Point, Point)>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let v = parse_floats(t)?;
            if v.len() != 2 * dim {
                return Err(Error::Parse(format!(
                    "pair '{t}' needs {} coordinates",
                    2 * dim
                )));
            }
            Ok((to_point(&v[..dim]), to_point(&v[dim..])))
        })
        .collect()
}

/// `k^n` congruent open boxes tiling `b`.
pub fn box_partition(b: &BBox, k: usize) -> Result<Vec<ImplicitSet>> {
    let dim = b.dim;
    let total = k.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut lo = [0.0; MAX_DIM];
            let mut hi = [0.0; MAX_DIM];
            for i in 0..dim {
                let j = idx % k;
                idx /= k;
                let w = b.extent(i) / k as f64;
                lo[i] = b.lo[i] + j as f64 * w;
                hi[i] = b.lo[i] + (j + 1) as f64 * w;
            }
            ImplicitSet::open_aabox(lo, hi, dim)
        })
        .collect()
}

fn default_domain(cfg: &RunConfig) -> Result<ImplicitSet> {
    parse_domain(cfg.domain.as_deref().unwrap_or("unit-disk"))
}

fn mapping(cfg: &RunConfig, domain: ImplicitSet) -> Result<MappingSpec> {
    let kind = MappingKind::parse(cfg.map.as_deref().unwrap_or("identity"), domain.dim())?;
    MappingSpec::new(kind, domain)
}

fn require_p(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ExponentTooSmall(p));
    }
    Ok(p)
}

/// Executes the configured pipeline. Errors map to exit code 2.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let (code, body, extra) = match cfg.command {
        Command::Cap => run_cap(cfg)?,
        Command::Distort => run_distort(cfg)?,
        Command::VerifyRing => run_verify_ring(cfg)?,
        Command::Setfunc => run_setfunc(cfg)?,
        Command::Metric => run_metric(cfg)?,
        Command::Suite => run_suite_cmd(cfg)?,
    };
    let summary = json!({
        "command": cfg.command,
        "seed": cfg.seed,
        "config": cfg,
        "passed": code == EXIT_PASS,
        "result": body,
    });
    let mut files = Vec::new();
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        let path = dir.join("summary.json");
        fs::write(&path, to_json(&summary)? + "\n")?;
        files.push(path);
        for (name, contents) in extra {
            let path = dir.join(name);
            fs::write(&path, contents)?;
            files.push(path);
        }
    }
    Ok(RunOutcome {
        exit_code: code,
        summary,
        files,
    })
}

type Pipeline = (i32, Value, Vec<(&'static str, String)>);

fn run_cap(cfg: &RunConfig) -> Result<Pipeline> {
    let p = require_p(cfg.p.unwrap_or(2.0))?;
    let ring = parse_shape(
        cfg.shape
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("cap needs --shape".into()))?,
    )?;
    let opts = SolverOptions::with_p(p);
    let grid = solve_grid(&ring, cfg.res.unwrap_or(128))?;
    let result = cap_numeric(&ring, &opts, &grid)?;
    let oracle = CapacityEvaluator::radial_radii(&ring)
        .map(|(rf, rg)| cap_radial_oracle(rf, rg, ring.dim(), p))
        .transpose()?;
    let body = json!({
        "condenser": ring.label,
        "capacity": result,
        "oracle": oracle,
        "relative_error": oracle.map(|o| (result.value - o) / o),
    });
    Ok((EXIT_PASS, body, vec![]))
}

fn run_distort(cfg: &RunConfig) -> Result<Pipeline> {
    let phi = mapping(cfg, default_domain(cfg)?)?;
    let p = require_p(cfg.p.unwrap_or(2.0))?;
    let q = cfg.q.unwrap_or(p);
    let grid = Grid::covering(phi.domain().bbox(), 1.0 / cfg.res.unwrap_or(256) as f64)?;
    let r = distortion_norm(&phi, p, q, &grid)?;
    let body = json!({
        "map": phi.kind().to_string(),
        "p": r.p,
        "q": r.q,
        "kappa": if r.kappa.is_finite() { Some(r.kappa) } else { None },
        "k_pq": r.k_pq,
        "refinement_delta": r.refinement_delta,
        "quadrature_nodes": r.kp_field.len(),
        "finite_distortion_ok": r.finite_distortion_ok,
    });
    let code = if r.finite_distortion_ok {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    };
    Ok((code, body, vec![]))
}

fn evaluator(cfg: &RunConfig, default_mode: CapacityMode) -> CapacityEvaluator {
    CapacityEvaluator::new(cfg.res.unwrap_or(256), cfg.mode.unwrap_or(default_mode))
}

fn run_verify_ring(cfg: &RunConfig) -> Result<Pipeline> {
    let phi = mapping(cfg, default_domain(cfg)?)?;
    let p = require_p(cfg.p.unwrap_or(2.0))?;
    let rings = parse_family(cfg.rings.as_deref().unwrap_or("default"), phi.codomain())?;
    let opts = VerifyOptions {
        evaluator: evaluator(cfg, CapacityMode::OracleWhenRadial),
        tol_total: cfg.tolerances.ring,
        ..VerifyOptions::default()
    };
    let v = match cfg.q {
        Some(q) if q != p => verify_ring_pq(&phi, &rings, p, q, &opts)?,
        _ => verify_ring_pp(&phi, &rings, p, &opts)?,
    };
    let mut ledger = Vec::new();
    write_ledger(&v.records, &mut ledger)?;
    let code = if v.passed() {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    };
    let body = serde_json::to_value(&v)?;
    Ok((
        code,
        body,
        vec![("ledger.csv", String::from_utf8_lossy(&ledger).into_owned())],
    ))
}

fn run_setfunc(cfg: &RunConfig) -> Result<Pipeline> {
    let phi = mapping(
        cfg,
        parse_domain(cfg.domain.as_deref().unwrap_or("unit-square"))?,
    )?;
    let p = require_p(cfg.p.unwrap_or(3.0))?;
    let q = cfg.q.unwrap_or(2.0);
    let k = cfg.partition.unwrap_or(4);
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(
            "partition must be even and >= 2".into(),
        ));
    }
    let b = *phi.codomain().bbox();
    let sampler = CondenserSampler::new(b, cfg.seed);
    let ctx = PsiContext::new(
        phi,
        p,
        q,
        sampler,
        cfg.budget.unwrap_or(1000),
        evaluator(cfg, CapacityMode::OracleWhenRadial),
    )?;
    let r = variation_refinement(&ctx, &box_partition(&b, k / 2)?, &box_partition(&b, k)?)?;
    let within = r.fine.total <= r.fine.bound_m * (1.0 + cfg.tolerances.variation);
    let code = if within { EXIT_PASS } else { EXIT_VIOLATION };
    let body = json!({
        "bound_m": r.fine.bound_m,
        "fine_total": r.fine.total,
        "coarse_total": r.coarse.total,
        "nested_coarse_total": r.nested_coarse_total,
        "superadditive": r.superadditive(),
        "within_bound": within,
        "refinement": r,
    });
    Ok((code, body, vec![]))
}

fn default_points() -> Vec<Point> {
    vec![
        point2(-0.4, -0.1),
        point2(0.35, -0.2),
        point2(0.1, 0.4),
        point2(-0.05, 0.05),
    ]
}

fn metric_options(cfg: &RunConfig) -> MetricOptions {
    MetricOptions {
        res: cfg.res.unwrap_or(64),
        seed: cfg.seed,
        ..MetricOptions::default()
    }
}

fn run_metric(cfg: &RunConfig) -> Result<Pipeline> {
    let omega = default_domain(cfg)?;
    let dim = omega.dim();
    let p = require_p(cfg.p.unwrap_or(2.0))?;
    let points = match &cfg.points {
        Some(s) => parse_points(s, dim)?,
        None => default_points(),
    };
    let opts = metric_options(cfg);
    let tol = AxiomTolerances {
        symmetry: cfg.tolerances.symmetry,
        triangle: cfg.tolerances.triangle,
        ..AxiomTolerances::default()
    };
    let axioms = check_metric_axioms(&omega, p, &points, &opts, &tol)?;
    let mut passed = axioms.passed();
    let mut lipschitz = None;
    if let Some(map) = &cfg.map {
        let phi = MappingSpec::new(MappingKind::parse(map, dim)?, omega.clone())?;
        let pairs = match &cfg.pairs {
            Some(s) => parse_pairs(s, dim)?,
            None => points
                .windows(2)
                .map(|w| (phi.forward(&w[0]), phi.forward(&w[1])))
                .collect(),
        };
        let q = cfg.q.unwrap_or(p);
        let l = check_lipschitz(&phi, &pairs, p, q, &opts, cfg.tolerances.lipschitz)?;
        passed &= l.passed();
        lipschitz = Some(l);
    }
    let mut extra = vec![];
    if dim == 2 {
        let curves: Vec<(String, _)> = axioms
            .queries
            .iter()
            .map(|q| (format!("{:?} -> {:?}", q.x, q.y), q.best_curve.clone()))
            .collect();
        extra.push(("metric.svg", render_svg(&omega, &curves)));
    }
    let body = json!({ "axioms": axioms, "lipschitz": lipschitz });
    let code = if passed { EXIT_PASS } else { EXIT_VIOLATION };
    Ok((code, body, extra))
}

fn run_suite_cmd(cfg: &RunConfig) -> Result<Pipeline> {
    let suite_cfg = SuiteConfig::from_run_config(cfg)?;
    let report = run_suite(&suite_cfg)?;
    let code = if report.passed() {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    };
    let timings = to_json(&report.timings)?;
    let body = serde_json::to_value(&report.verdicts)?;
    Ok((code, body, vec![("timings.json", timings + "\n")]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::from_toml_str(
            "command = \"verify-ring\"\np = 2.0\nmap = \"radial:4\"\nrings = \"origin-centered:5\"\n[tolerances]\nring = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.command, Command::VerifyRing);
        assert_eq!(cfg.tolerances.ring, 0.01);
        assert_eq!(cfg.tolerances.symmetry, 0.02);
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml()).unwrap(), cfg);
        assert!(RunConfig::from_toml_str("colour = 3").is_err());
    }

    #[test]
    fn small_p_is_a_config_error() {
        let cfg = RunConfig {
            command: Command::Cap,
            p: Some(0.5),
            shape: Some("annulus:0.5,1".into()),
            ..Default::default()
        };
        let e = run(&cfg).unwrap_err();
        assert!(e.to_string().starts_with("p must exceed 1"));
    }

    #[test]
    fn parsers() {
        assert_eq!(
            parse_domain("disk:0,0,2").unwrap().as_ball(),
            Some(([0.0; 3], 2.0))
        );
        assert!(matches!(parse_domain("torus"), Err(Error::Unknown { .. })));
        assert_eq!(parse_shape("shell:1,2").unwrap().dim(), 3);
        assert_eq!(parse_shape("box:1,1,1,0.5").unwrap().dim(), 2);
        assert_eq!(
            parse_points("0,0;0.5,0.25", 2).unwrap()[1],
            point2(0.5, 0.25)
        );
        assert!(parse_pairs("0,0,1", 2).is_err());
        let b = BBox::new([0.0; 3], [2.0, 1.0, 0.0], 2);
        let parts = box_partition(&b, 4).unwrap();
        assert_eq!(parts.len(), 16);
        assert_eq!(parts[5].bbox().lo, [0.5, 0.25, 0.0]);
    }
}
