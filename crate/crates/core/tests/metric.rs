// SPDX-License-Identifier: Apache-2.0

use ringcap::capmetric::{
    capacitary_distance, check_lipschitz, curve_capacity, MetricOptions, Polyline,
};
use ringcap::geometry::{point2, ImplicitSet};
use ringcap::mappings::MappingSpec;

fn opts() -> MetricOptions {
    MetricOptions {
        res: 32,
        max_evals: 12,
        ..MetricOptions::default()
    }
}

#[test]
fn larger_domain_gives_smaller_distance() {
    let x = point2(-0.3, 0.0);
    let y = point2(0.3, 0.1);
    let small = ImplicitSet::open_ball([0.0; 3], 1.0, 2).unwrap();
    let big = ImplicitSet::open_ball([0.0; 3], 1.5, 2).unwrap();
    let a = capacitary_distance(&x, &y, &small, 2.0, &opts()).unwrap();
    let b = capacitary_distance(&x, &y, &big, 2.0, &opts()).unwrap();
    assert!(b.d_value < a.d_value);
    assert!(a.d_value <= a.segment_value);
}

#[test]
fn tube_sensitivity_is_reported() {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2).unwrap();
    let seg = Polyline::segment(&point2(-0.3, 0.0), &point2(0.3, 0.0), 2, 2).unwrap();
    let o = opts();
    let c = curve_capacity(&seg, &disk, 2.0, o.tube_radius(), &o).unwrap();
    let half = c.half_radius_value.unwrap();
    assert!(half < c.value && half > 0.0);
}

#[test]
fn identity_lipschitz_is_exact() {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2).unwrap();
    let phi = MappingSpec::identity(disk).unwrap();
    let pairs = [(point2(-0.2, 0.1), point2(0.3, -0.1))];
    let r = check_lipschitz(&phi, &pairs, 2.0, 2.0, &opts(), 0.05).unwrap();
    assert_eq!(r.constant, 1.0);
    assert_eq!(r.entries[0].lhs, r.entries[0].rhs);
    assert!(r.passed());
}
