use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rheohom::bench::{run_pipeline, ExperimentConfig, RunManifest, RunOptions, Stage, StageStatus};

#[derive(Parser)]
#[command(
    name = "rheohom",
    version,
    about = "Stochastic homogenization of variable-exponent stress laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`, then `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip stages whose completion marker matches the config hash.
    #[arg(long)]
    resume: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the RVE ensemble (and the Birkhoff ensemble if configured).
    GenerateMedia(Common),
    /// Solve cell problems on the ξ-grid for both laws.
    SolveCell(Common),
    /// Estimate the effective law and the Orlicz integrand tables.
    EstimateAeff(Common),
    /// Run the growth check and every effective-law gate.
    Verify(Common),
    /// Integrate homogenized and fine flows with energy ledgers.
    MacroRun(Common),
    /// Run the ε-convergence study.
    Converge(Common),
    /// All stages in order.
    Pipeline(Common),
}

fn stages(cmd: &Command) -> (&Common, Vec<Stage>) {
    match cmd {
        Command::GenerateMedia(c) => (c, vec![Stage::Media]),
        Command::SolveCell(c) => (c, vec![Stage::Cell]),
        Command::EstimateAeff(c) => (c, vec![Stage::Effective]),
        Command::Verify(c) => (c, vec![Stage::Growth, Stage::Gates]),
        Command::MacroRun(c) => (c, vec![Stage::Macro]),
        Command::Converge(c) => (c, vec![Stage::Converge]),
        Command::Pipeline(c) => (c, Stage::PIPELINE.to_vec()),
    }
}

fn print_summary(m: &RunManifest, out: &std::path::Path) {
    println!("run {} (config {})", m.name, &m.config_hash[..12]);
    for s in &m.stages {
        let status = match &s.status {
            StageStatus::Completed => format!("completed in {:.2}s", s.wall_clock_s),
            StageStatus::Resumed => "resumed".to_string(),
            StageStatus::Failed { reason } => format!("FAILED: {reason}"),
            StageStatus::Skipped { reason } => format!("skipped: {reason}"),
        };
        println!("  stage {:<10} {status}", s.stage.name());
    }
    for g in &m.gates {
        println!(
            "  {} {:<26} {}",
            if g.passed { "PASS" } else { "FAIL" },
            g.gate,
            g.detail
        );
    }
    println!("outputs in {} ({} files)", out.display(), m.files.len());
}

fn run(cli: Cli) -> rheohom::Result<ExitCode> {
    let (common, targets) = stages(&cli.command);
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| rheohom::Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let opts = RunOptions {
        out: out.clone(),
        resume: common.resume,
        stages: targets,
    };
    let manifest = run_pipeline(&cfg, &opts)?;
    print_summary(&manifest, &out);
    Ok(if !manifest.complete() {
        ExitCode::FAILURE
    } else if !manifest.all_gates_passed() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
