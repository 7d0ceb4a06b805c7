// SPDX-License-Identifier: Apache-2.0

//! Capacity ratios of pulled-back condensers against the distortion
//! constant, with the CSV ledger on stdout.

use ringcap::geometry::ImplicitSet;
use ringcap::inequalities::{
    parse_family, verify_ring_pp, verify_ring_pq, write_ledger, CapacityEvaluator, CapacityMode,
    VerifyOptions,
};
use ringcap::mappings::{MappingKind, MappingSpec};

fn main() -> ringcap::Result<()> {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2)?;
    let radial = MappingSpec::new(MappingKind::RadialStretch(4.0), disk)?;
    let rings = parse_family("origin-centered:5", radial.codomain())?;
    let opts = VerifyOptions {
        evaluator: CapacityEvaluator::new(128, CapacityMode::Numeric),
        ..VerifyOptions::default()
    };
    let v = verify_ring_pp(&radial, &rings, 2.0, &opts)?;
    println!(
        "radial:4, p = q = 2: K = {:.4}, sup ratio = {:.4}",
        v.constant,
        v.sup_ratio.unwrap_or(0.0)
    );
    write_ledger(&v.records, std::io::stdout())?;

    let square = ImplicitSet::open_aabox([0.0; 3], [1.0, 1.0, 0.0], 2)?;
    let linear = MappingSpec::new(MappingKind::diag(&[2.0, 1.0]), square)?;
    let rings = parse_family("default", linear.codomain())?;
    let v = verify_ring_pq(&linear, &rings, 3.0, 2.0, &opts)?;
    println!(
        "\nlinear:2,1, p = 3, q = 2: K = {:.4}, passed = {}",
        v.constant,
        v.passed()
    );
    write_ledger(&v.records, std::io::stdout())?;
    Ok(())
}
