// SPDX-License-Identifier: Apache-2.0

//! Pointwise p-dilatation and the integrated distortion constant of the
//! catalog maps on the unit disk.

use ringcap::geometry::{point2, Grid, ImplicitSet};
use ringcap::mappings::{dilatation_p, distortion_norm, MappingKind, MappingSpec};

fn main() -> ringcap::Result<()> {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2)?;
    let grid = Grid::covering(disk.bbox(), 1.0 / 128.0)?;
    for name in [
        "identity",
        "linear:2,1",
        "linear:1,0.5,0,1",
        "radial:4",
        "radial:0.5",
    ] {
        let phi = MappingSpec::new(MappingKind::parse(name, 2)?, disk.clone())?;
        let at = dilatation_p(&phi, &point2(0.3, 0.4), 2.0)?;
        let pp = distortion_norm(&phi, 2.0, 2.0, &grid)?;
        let pq = distortion_norm(&phi, 3.0, 2.0, &grid)?;
        println!(
            "{name:<18} K_2(0.3,0.4) = {at:.4}  K_2,2 = {:.4}  K_3,2 = {:.4}  finite distortion: {}",
            pp.k_pq, pq.k_pq, pp.finite_distortion_ok
        );
    }
    Ok(())
}
