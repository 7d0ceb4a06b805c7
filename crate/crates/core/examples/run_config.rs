// SPDX-License-Identifier: Apache-2.0

//! Driving a pipeline from a TOML configuration, as the binary does.

use ringcap::cli::{run, RunConfig};
use ringcap::report::to_json;

const CONFIG: &str = r#"
command = "verify-ring"
map = "radial:4"
p = 2.0
rings = "origin-centered:5"
res = 128
seed = 0

[tolerances]
ring = 0.03
"#;

fn main() -> ringcap::Result<()> {
    let cfg = RunConfig::from_toml_str(CONFIG)?;
    let out = run(&cfg)?;
    println!("{}", to_json(&out.summary["result"]["sup_ratio"])?);
    println!("exit code {}", out.exit_code);
    Ok(())
}
