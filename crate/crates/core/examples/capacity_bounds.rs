// SPDX-License-Identifier: Apache-2.0

//! Box condensers: grid value between the measure lower bound and the
//! distance upper bound.

use ringcap::capacity::{cap_lower_bound_diam, cap_numeric, solve_grid, SolverOptions};
use ringcap::geometry::{make_box_condenser, BoxCondenserParams};

fn main() -> ringcap::Result<()> {
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>10}",
        "t", "lower", "cap", "upper", "diam-est"
    );
    for t in [0.1, 0.25, 0.5, 1.0] {
        let ring = make_box_condenser(&BoxCondenserParams::new(vec![1.0, 1.0], 1.0, t)?)?;
        let r = cap_numeric(&ring, &SolverOptions::with_p(2.0), &solve_grid(&ring, 64)?)?;
        println!(
            "{t:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.lower_bound.unwrap_or(f64::NAN),
            r.value,
            r.upper_bound.unwrap_or(f64::NAN),
            cap_lower_bound_diam(&ring, 2.0)?
        );
    }
    Ok(())
}
