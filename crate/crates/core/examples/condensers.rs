// SPDX-License-Identifier: Apache-2.0

//! Building condensers, pulling them back through a map and measuring them.

use ringcap::geometry::{
    make_ball_ring, make_box_condenser, measure, point2, pullback_condenser, BoxCondenserParams,
    ImplicitSet, MeasureMethod,
};
use ringcap::mappings::{MappingKind, MappingSpec};

fn main() -> ringcap::Result<()> {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2)?;
    let phi = MappingSpec::new(MappingKind::diag(&[2.0, 1.0]), disk)?;
    let ring = make_ball_ring(point2(0.3, 0.1), 0.1, 0.4, phi.codomain())?;
    let back = pullback_condenser(&phi, &ring)?;
    let mc = MeasureMethod::MonteCarlo {
        samples: 50_000,
        seed: 0,
    };
    for (name, c) in [("ring", &ring), ("pullback", &back)] {
        let g = measure(&c.g, mc)?;
        println!(
            "{name:<9} |G| = {:.4} +- {:.4}  gap to boundary {:.4}",
            g.value,
            g.error,
            c.boundary_gap(1.0 / 256.0)?
        );
    }
    let params = BoxCondenserParams::new(vec![2.0, 1.0], 0.5, 0.5)?;
    let boxed = make_box_condenser(&params)?;
    println!(
        "box condenser |G| exact {:.4}, sampled {:.4}",
        params.g_volume(),
        measure(&boxed.g, mc)?.value
    );
    Ok(())
}
