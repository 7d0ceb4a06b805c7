// SPDX-License-Identifier: Apache-2.0

//! Sampled lower estimates of the capacity set function on boxes, and its
//! variation over a 4x4 partition compared with the bound M.

use ringcap::cli::box_partition;
use ringcap::geometry::{point2, ImplicitSet};
use ringcap::inequalities::{
    psi_estimate, variation_refinement, CapacityEvaluator, CapacityMode, CondenserSampler,
    PsiContext,
};
use ringcap::mappings::{MappingKind, MappingSpec};

fn main() -> ringcap::Result<()> {
    let square = ImplicitSet::open_aabox([0.0; 3], point2(1.0, 1.0), 2)?;
    let phi = MappingSpec::new(MappingKind::diag(&[2.0, 1.0]), square)?;
    let b = *phi.codomain().bbox();
    let ctx = PsiContext::new(
        phi,
        3.0,
        2.0,
        CondenserSampler::new(b, 0),
        1000,
        CapacityEvaluator::new(256, CapacityMode::OracleWhenRadial),
    )?;
    for hi in [0.4, 0.8, 1.6] {
        let region = ImplicitSet::open_aabox(point2(0.1, 0.1), point2(0.1 + hi, 0.9), 2)?;
        let e = psi_estimate(&ctx, &region)?;
        println!(
            "box width {hi}: psi >= {:.5} from {} condensers",
            e.psi_value, e.sampled_condensers
        );
    }
    let r = variation_refinement(&ctx, &box_partition(&b, 2)?, &box_partition(&b, 4)?)?;
    println!(
        "variation: 2x2 nested {:.4}, 4x4 {:.4}, bound M = {:.1}",
        r.nested_coarse_total, r.fine.total, r.fine.bound_m
    );
    Ok(())
}
