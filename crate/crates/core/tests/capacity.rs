// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use ringcap::capacity::{
    cap_numeric, cap_radial_oracle, p_energy, solve_field, solve_grid, Method, NodeTag,
    ScalarField, SolverOptions,
};
use ringcap::geometry::{make_ball_ring, ImplicitSet, RingCondenser};

fn annulus(rf: f64, rg: f64) -> RingCondenser {
    let g = ImplicitSet::open_ball([0.0; 3], rg, 2).unwrap();
    make_ball_ring([0.0; 3], rf, rg, &g).unwrap()
}

fn cap(ring: &RingCondenser, p: f64, res: usize) -> f64 {
    cap_numeric(
        ring,
        &SolverOptions::with_p(p),
        &solve_grid(ring, res).unwrap(),
    )
    .unwrap()
    .value
}

#[test]
fn admissible_fields_never_beat_the_solver() {
    let ring = annulus(0.5, 1.0);
    let grid = solve_grid(&ring, 64).unwrap();
    let (best, field) = solve_field(&ring, &SolverOptions::with_p(2.0), &grid).unwrap();
    let lin = |r: f64| ((1.0 - r) / 0.5).clamp(0.0, 1.0);
    let log = |r: f64| (r.ln() / 0.5f64.ln()).clamp(0.0, 1.0);
    let wobble = |x: &[f64; 3]| 0.05 * (7.0 * x[0]).sin() * (5.0 * x[1]).cos();
    for trial in 0..3 {
        let mut f = field.clone();
        for (i, t) in field.mask.iter().enumerate() {
            if *t != NodeTag::Interior {
                continue;
            }
            let x = grid.node_point(i);
            let r = x[0].hypot(x[1]);
            f.values[i] = match trial {
                0 => lin(r),
                1 => log(r),
                _ => (log(r) + wobble(&x)).clamp(0.0, 1.0),
            };
        }
        assert!(p_energy(&f, 2.0, 0.0) >= best.value * (1.0 - 1e-9));
    }
}

#[test]
fn enlarging_f_or_shrinking_g_raises_capacity() {
    let base = cap(&annulus(0.5, 1.0), 2.0, 128);
    assert!(cap(&annulus(0.55, 1.0), 2.0, 128) >= base);
    assert!(cap(&annulus(0.5, 1.1), 2.0, 128) <= base);
}

#[test]
fn scaling_law() {
    // cap_p(sF; sG) = s^{n-p} cap_p(F; G) at matched relative resolution
    for p in [1.5, 3.0] {
        let a = cap(&annulus(0.5, 1.0), p, 128);
        let b = cap(&annulus(1.0, 2.0), p, 64);
        let expect = 2f64.powf(2.0 - p) * a;
        assert!(
            ((b - expect) / expect).abs() < 0.03,
            "p={p}: {b} vs {expect}"
        );
    }
}

#[test]
fn maximum_principle_without_upper_projection() {
    let ring = annulus(0.5, 1.0);
    let opts = SolverOptions {
        project_upper: false,
        ..SolverOptions::with_p(2.0)
    };
    let (_, f) = solve_field(&ring, &opts, &solve_grid(&ring, 64).unwrap()).unwrap();
    let max = f.values.iter().cloned().fold(f64::MIN, f64::max);
    let min = f.values.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max <= 1.0 + 1e-6 && min >= 0.0, "range [{min}, {max}]");
}

#[test]
fn both_methods_reach_the_same_energy() {
    let ring = annulus(0.5, 1.0);
    let grid = solve_grid(&ring, 64).unwrap();
    let cg = cap_numeric(&ring, &SolverOptions::with_p(3.0), &grid).unwrap();
    let spg = SolverOptions {
        method: Method::SpectralGradient,
        ..SolverOptions::with_p(3.0)
    };
    let sg = cap_numeric(&ring, &spg, &grid).unwrap();
    assert!(cg.converged && sg.converged);
    assert!(((cg.value - sg.value) / cg.value).abs() < 2e-3);
}

#[test]
fn shell_in_three_dimensions() {
    let g = ImplicitSet::open_ball([0.0; 3], 2.0, 3).unwrap();
    let ring = make_ball_ring([0.0; 3], 1.0, 2.0, &g).unwrap();
    let r = cap_numeric(
        &ring,
        &SolverOptions::with_p(2.0),
        &solve_grid(&ring, 16).unwrap(),
    )
    .unwrap();
    let oracle = cap_radial_oracle(1.0, 2.0, 3, 2.0).unwrap();
    assert!(r.value < oracle && r.value > 0.9 * oracle);
    assert!(r.lower_bound.unwrap() <= r.value && r.value <= r.upper_bound.unwrap());
}

#[test]
fn field_masks_follow_the_condenser() {
    let ring = annulus(0.5, 1.0);
    let grid = solve_grid(&ring, 32).unwrap();
    let f = ScalarField::for_condenser(&ring, &grid).unwrap();
    for (i, t) in f.mask.iter().enumerate() {
        let x = grid.node_point(i);
        let r = x[0].hypot(x[1]);
        match t {
            NodeTag::One => assert!(r <= 0.5 + 1e-12),
            NodeTag::Zero => assert!(r >= 1.0 - 1e-12),
            NodeTag::Interior => assert!(r > 0.5 - 1e-12 && r < 1.0 + 1e-12),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn random_annuli_are_bracketed(rf in 0.3f64..0.6, rg in 0.8f64..1.2, p in 1.5f64..3.0) {
        let ring = annulus(rf, rg);
        let r = cap_numeric(&ring, &SolverOptions::with_p(p), &solve_grid(&ring, 64).unwrap()).unwrap();
        let oracle = cap_radial_oracle(rf, rg, 2, p).unwrap();
        prop_assert!(r.lower_bound.unwrap() <= r.value && r.value <= r.upper_bound.unwrap());
        prop_assert!(((r.value - oracle) / oracle).abs() < 0.06);
    }
}
