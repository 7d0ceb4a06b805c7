// SPDX-License-Identifier: Apache-2.0

use ringcap::geometry::{point2, ImplicitSet};
use ringcap::inequalities::{
    density_quotients, parse_family, psi_estimate, variation_estimate, verify_ring_pp,
    verify_ring_pq, CapacityEvaluator, CapacityMode, CondenserSampler, PsiContext, VerifyOptions,
};
use ringcap::mappings::{MappingKind, MappingSpec};
use ringcap::Error;

fn square() -> ImplicitSet {
    ImplicitSet::open_aabox([0.0; 3], point2(1.0, 1.0), 2).unwrap()
}

fn oracle_opts(res: usize) -> VerifyOptions {
    VerifyOptions {
        evaluator: CapacityEvaluator::new(res, CapacityMode::OracleWhenRadial),
        ..VerifyOptions::default()
    }
}

#[test]
fn identity_ratios_are_one() {
    let phi = MappingSpec::identity(square()).unwrap();
    let rings = parse_family("off-center:3", phi.codomain()).unwrap();
    let v = verify_ring_pp(&phi, &rings, 2.0, &oracle_opts(64)).unwrap();
    assert!(v.passed());
    for r in &v.records {
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn radial_stretch_rings_attain_the_constant() {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2).unwrap();
    let phi = MappingSpec::new(MappingKind::RadialStretch(4.0), disk).unwrap();
    let rings = parse_family("origin-centered:3", phi.codomain()).unwrap();
    let v = verify_ring_pp(&phi, &rings, 2.0, &oracle_opts(64)).unwrap();
    assert!((v.sup_ratio.unwrap() - 2.0).abs() < 0.02);
    assert!(v.violations.is_empty());
}

#[test]
fn pq_requires_q_below_p() {
    let phi = MappingSpec::identity(square()).unwrap();
    let rings = parse_family("off-center:1", phi.codomain()).unwrap();
    assert!(verify_ring_pq(&phi, &rings, 2.0, 2.5, &oracle_opts(64)).is_err());
}

fn context(kind: MappingKind, budget: usize) -> PsiContext {
    let phi = MappingSpec::new(kind, square()).unwrap();
    let sampler = CondenserSampler::new(*phi.codomain().bbox(), 0);
    PsiContext::new(
        phi,
        3.0,
        2.0,
        sampler,
        budget,
        CapacityEvaluator::new(128, CapacityMode::OracleWhenRadial),
    )
    .unwrap()
}

#[test]
fn psi_is_monotone_and_positive() {
    let ctx = context(MappingKind::diag(&[2.0, 1.0]), 200);
    let outer = ImplicitSet::open_aabox(point2(0.1, 0.0), point2(1.9, 1.0), 2).unwrap();
    let inner = ImplicitSet::open_aabox(point2(0.3, 0.1), point2(1.2, 0.9), 2).unwrap();
    let a = psi_estimate(&ctx, &inner).unwrap();
    let b = psi_estimate(&ctx, &outer).unwrap();
    assert!(a.psi_value > 0.0 && a.psi_value <= b.psi_value);
    assert!(a.witnesses.iter().all(|k| b.witnesses.contains(k)));
}

#[test]
fn overlapping_partitions_are_rejected() {
    let ctx = context(MappingKind::Identity, 20);
    let a = ImplicitSet::open_aabox([0.0; 3], point2(0.6, 1.0), 2).unwrap();
    let b = ImplicitSet::open_aabox(point2(0.4, 0.0), point2(1.0, 1.0), 2).unwrap();
    assert_eq!(
        variation_estimate(&ctx, &[a, b]).unwrap_err(),
        Error::OverlappingPartition
    );
}

#[test]
fn density_radii_must_decrease() {
    let ctx = context(MappingKind::Identity, 20);
    assert_eq!(
        density_quotients(&ctx, &point2(0.5, 0.5), &[0.1, 0.2]).unwrap_err(),
        Error::RadiiNotDecreasing
    );
}
