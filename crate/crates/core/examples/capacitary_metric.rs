// SPDX-License-Identifier: Apache-2.0

//! Capacitary distances between three points of the unit disk, the axiom
//! checks, and an SVG of the optimized curves.
//!
//! cargo run --release --example capacitary_metric -- [out.svg]

use ringcap::capmetric::{check_metric_axioms, render_svg, AxiomTolerances, MetricOptions};
use ringcap::geometry::{point2, ImplicitSet};

fn main() -> ringcap::Result<()> {
    let disk = ImplicitSet::open_ball([0.0; 3], 1.0, 2)?;
    let points = [point2(-0.5, 0.0), point2(0.4, -0.3), point2(0.2, 0.5)];
    let opts = MetricOptions {
        res: 48,
        max_evals: 40,
        ..MetricOptions::default()
    };
    let r = check_metric_axioms(&disk, 2.0, &points, &opts, &AxiomTolerances::default())?;
    for q in &r.queries {
        println!(
            "d({:?}, {:?}) = {:.4}  (segment {:.4}, half tube {:.4}, {} solves)",
            q.x,
            q.y,
            q.d_value,
            q.segment_value,
            q.half_radius_value.unwrap_or(f64::NAN),
            q.evaluations
        );
    }
    println!("axioms hold: {}", r.passed());
    if let Some(path) = std::env::args().nth(1) {
        let curves: Vec<_> = r
            .queries
            .iter()
            .map(|q| (format!("{:?}-{:?}", q.x, q.y), q.best_curve.clone()))
            .collect();
        std::fs::write(&path, render_svg(&disk, &curves))?;
        println!("wrote {path}");
    }
    Ok(())
}
