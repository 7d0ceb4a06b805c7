// SPDX-License-Identifier: Apache-2.0

//! Grid capacity of planar annuli against the radial oracle.
//!
//! cargo run --release --example capacity_annulus -- [p]

use ringcap::capacity::{cap_numeric, cap_radial_oracle, solve_grid, SolverOptions};
use ringcap::geometry::{make_ball_ring, ImplicitSet};

fn main() -> ringcap::Result<()> {
    let p: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("p is a number"))
        .unwrap_or(2.0);
    let o = [0.0; 3];
    for (rf, rg) in [(0.5, 1.0), (1.0, std::f64::consts::E)] {
        let ring = make_ball_ring(o, rf, rg, &ImplicitSet::open_ball(o, rg, 2)?)?;
        let oracle = cap_radial_oracle(rf, rg, 2, p)?;
        println!("annulus ({rf}, {rg:.4})  p = {p}  oracle {oracle:.6}");
        for res in [32, 64, 128] {
            let t = std::time::Instant::now();
            let r = cap_numeric(&ring, &SolverOptions::with_p(p), &solve_grid(&ring, res)?)?;
            println!(
                "  res {res:>3}  cap {:.6}  rel.err {:+.3}%  iters {:>5}  {:.2}s",
                r.value,
                100.0 * (r.value - oracle) / oracle,
                r.iterations,
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
