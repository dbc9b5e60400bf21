//! Full staged run from a config file, then a resumed run on the same
//! output directory.
//!
//! `cargo run --release --example pipeline -- configs/percolation_small.toml /tmp/run`

use std::path::PathBuf;

use rheohom::bench::{run_pipeline, ExperimentConfig, RunOptions};

fn main() -> rheohom::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "configs/percolation_small.toml".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/pipeline-example".into()));
    let cfg = ExperimentConfig::load(&config)?;
    let manifest = run_pipeline(&cfg, &RunOptions::pipeline(&out))?;
    for g in &manifest.gates {
        println!("{} {:<26} {}", if g.passed { "PASS" } else { "FAIL" }, g.gate, g.detail);
    }
    let resumed = run_pipeline(
        &cfg,
        &RunOptions {
            resume: true,
            ..RunOptions::pipeline(&out)
        },
    )?;
    for s in &resumed.stages {
        println!("{:<10} {:?}", s.stage.name(), s.status);
    }
    Ok(())
}
