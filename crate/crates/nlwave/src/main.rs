//! Thin command-line front end over the library: each subcommand names an
//! experiment kind, loads a TOML config, applies `--set` overrides, and
//! runs it. Exit codes: 0 verdict pass (or plain completion), 1 verdict
//! failure, 2 operational error.

use clap::{Parser, Subcommand};
use nlwave::config;
use nlwave::runner;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nlwave", version, about = "Spectral laboratory for nonlocally damped waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides of the form section.key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single trajectory and write its energy ledger.
    Simulate(RunArgs),
    /// Compute the stationary set with linearized spectra.
    Equilibria(RunArgs),
    /// Scan the structural conditions on the damping law and source term.
    CheckAssumptions(RunArgs),
    /// Absorbing-ball probe in the phase space.
    ProbeDissipativity(RunArgs),
    /// Absorbing-ball probe in the strong phase space.
    ProbeDissipativityE1(RunArgs),
    /// Trajectory-difference growth rate probe.
    ProbeLipschitz(RunArgs),
    /// Contraction-plus-tail probe of trajectory differences.
    ProbeQuasistability(RunArgs),
    /// Long-run probe of the limit set and velocity decay.
    ProbeAttractor(RunArgs),
    /// Distance between runs at consecutive mode counts.
    ProbeConvergence(RunArgs),
    /// Print the tool version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, kind) = match &cli.command {
        Command::Simulate(a) => (a, "simulate"),
        Command::Equilibria(a) => (a, "equilibria"),
        Command::CheckAssumptions(a) => (a, "check_assumptions"),
        Command::ProbeDissipativity(a) => (a, "dissipativity"),
        Command::ProbeDissipativityE1(a) => (a, "dissipativity_e1"),
        Command::ProbeLipschitz(a) => (a, "lipschitz"),
        Command::ProbeQuasistability(a) => (a, "quasistability"),
        Command::ProbeAttractor(a) => (a, "attractor"),
        Command::ProbeConvergence(a) => (a, "convergence"),
        Command::Version => {
            println!("nlwave {}", env!("CARGO_PKG_VERSION"));
            return ExitCode::SUCCESS;
        }
    };

    match dispatch(args, kind) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(true)) => ExitCode::SUCCESS,
        Ok(Some(false)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(args: &RunArgs, kind: &str) -> Result<Option<bool>, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let cfg = config::apply_overrides(&text, &args.set)?;
    if cfg.experiment.kind != kind {
        return Err(format!(
            "config declares experiment.kind = \"{}\" but the subcommand expects \"{kind}\"; \
             fix the config or pass --set experiment.kind={kind}",
            cfg.experiment.kind
        )
        .into());
    }
    let outcome = runner::run(&cfg)?;
    print_summary(&outcome.manifest);
    Ok(outcome.pass)
}

fn print_summary(manifest: &runner::RunManifest) {
    println!(
        "{} [{}] -> {}",
        manifest.experiment,
        manifest.phases.join(" + "),
        manifest
            .pass
            .map(|p| if p { "PASS" } else { "FAIL" })
            .unwrap_or("done")
    );
    for (k, v) in &manifest.verdicts {
        println!("  verdict {k}: {}", if *v { "pass" } else { "FAIL" });
    }
    for (k, v) in &manifest.scalars {
        println!("  {k} = {v:.6e}");
    }
    println!("  wall {:.2}s, files {}", manifest.wall_seconds, manifest.digests.len());
}
