// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringcap::geometry::{
    make_ball_ring, make_box_condenser, measure, point2, pullback_condenser, BoxCondenserParams,
    ImplicitSet, MeasureMethod,
};
use ringcap::mappings::{MappingKind, MappingSpec};

fn samples(n: usize, lo: f64, hi: f64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|_| point2(rng.random_range(lo..hi), rng.random_range(lo..hi)))
        .collect()
}

#[test]
fn identity_pullback_keeps_membership() {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2).unwrap();
    let ring = make_ball_ring(point2(0.1, -0.2), 0.2, 0.6, &disk).unwrap();
    let phi = MappingSpec::identity(disk).unwrap();
    let back = pullback_condenser(&phi, &ring).unwrap();
    for x in samples(10_000, -1.0, 1.0) {
        assert_eq!(back.f.contains(&x), ring.f.contains(&x));
        assert_eq!(back.g.contains(&x), ring.g.contains(&x));
    }
}

#[test]
fn pullback_keeps_inclusion() {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2).unwrap();
    for kind in [
        MappingKind::diag(&[2.0, 1.0]),
        MappingKind::RadialStretch(4.0),
    ] {
        let phi = MappingSpec::new(kind, disk.clone()).unwrap();
        let ring = make_ball_ring(point2(0.05, 0.0), 0.15, 0.5, phi.codomain()).unwrap();
        let back = pullback_condenser(&phi, &ring).unwrap();
        for x in samples(10_000, -1.0, 1.0) {
            if back.f.contains(&x) {
                assert!(back.g.contains(&x));
            }
        }
    }
}

#[test]
fn measure_is_monotone() {
    let small = ImplicitSet::open_ball([0.0; 3], 0.5, 2).unwrap();
    let big = ImplicitSet::open_ball([0.0; 3], 0.6, 2).unwrap();
    let a = measure(
        &small,
        MeasureMethod::MonteCarlo {
            samples: 20_000,
            seed: 3,
        },
    )
    .unwrap();
    let b = measure(
        &big,
        MeasureMethod::MonteCarlo {
            samples: 20_000,
            seed: 3,
        },
    )
    .unwrap();
    assert!(a.value <= b.value + a.error + b.error);
}

#[test]
fn box_condenser_volume_matches_sampling() {
    let params = BoxCondenserParams::new(vec![2.0, 1.0], 0.5, 0.5).unwrap();
    let ring = make_box_condenser(&params).unwrap();
    let m = measure(
        &ring.g,
        MeasureMethod::MonteCarlo {
            samples: 40_000,
            seed: 11,
        },
    )
    .unwrap();
    assert!((m.value - params.g_volume()).abs() <= 4.0 * m.error.max(1e-3));
}
