use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trefftz_cli::{execute, resolve_output_dir, CliError, ExperimentConfig, ExperimentKind, Outcome};

#[derive(Parser)]
#[command(name = "trefftz", version, about = "Space-time Trefftz DG experiments for 1D Maxwell")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in `experiment.kind`.
    Run(Common),
    /// Check a configuration and list every problem found.
    Validate(Common),
    /// Convergence under uniform refinement.
    SweepH(Common),
    /// Convergence in the polynomial degree.
    SweepP(Common),
    /// Errors over the (alpha, beta) penalty grid.
    SweepFlux(Common),
    /// Eigenvalues and conditioning of the slab update matrix.
    Spectrum(Common),
    /// Discrete energy history and energy-identity audit.
    Energy(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used when omitted.
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set flux.alpha=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides the environment and `output.dir`).
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
}

fn load(common: &Common, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref(), &common.overrides)?;
    if let Some(kind) = kind {
        cfg.experiment.kind = kind;
    }
    cfg.output.dir = resolve_output_dir(&cfg, common.output_dir.as_deref());
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into())
}

fn summarize(outcome: &Outcome) {
    if !outcome.rows.is_empty() {
        println!(
            "{:>8} {:>8} {:>3} {:>6} {:>6} {:>12} {:>12} {:>12} {:>8}",
            "h_x", "h_t", "p", "alpha", "beta", "eps_q", "dg_error", "energy_t", "rate"
        );
        for r in &outcome.rows {
            println!(
                "{:>8.4} {:>8.4} {:>3} {:>6.2} {:>6.2} {:>12} {:>12} {:>12.6e} {:>8}",
                r.h_x,
                r.h_t,
                r.p,
                r.alpha,
                r.beta,
                fmt_opt(r.eps_q),
                fmt_opt(r.dg_error),
                r.energy_t,
                r.rate.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into()),
            );
        }
    }
    for f in &outcome.fits {
        if let Some((x, e)) = f.fit.excluded {
            println!("note: rate fit dropped the pre-asymptotic sample ({x}, {e:.3e})");
        }
    }
    for s in &outcome.spectra {
        println!(
            "p = {}: {} dofs, spectral radius {:.12}, condition number {:.4e}",
            s.p, s.n_dofs, s.spectral_radius, s.condition_number
        );
    }
    if let Some(e) = &outcome.energy {
        let a = &e.audit;
        println!(
            "energy: initial {:.10}, final {:.10}, dissipated {:.4e} (mismatch {:.3e}, horizontal {:.3e}, vertical {:.3e}, lateral {:.3e}), identity residual {:.2e}",
            a.initial,
            a.final_energy,
            a.initial - a.final_energy,
            a.mismatch,
            a.horizontal,
            a.vertical,
            a.lateral,
            a.residual
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");
    let (common, kind) = match &cli.command {
        Command::Validate(c) => {
            return match load(c, None) {
                Ok(cfg) => {
                    let diags = cfg.validate();
                    for d in &diags {
                        println!("{d}");
                    }
                    if diags.is_empty() {
                        println!("configuration is valid");
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
        Command::Run(c) => (c, None),
        Command::SweepH(c) => (c, Some(ExperimentKind::SweepH)),
        Command::SweepP(c) => (c, Some(ExperimentKind::SweepP)),
        Command::SweepFlux(c) => (c, Some(ExperimentKind::SweepFlux)),
        Command::Spectrum(c) => (c, Some(ExperimentKind::Spectrum)),
        Command::Energy(c) => (c, Some(ExperimentKind::Energy)),
    };
    let result = load(common, kind).and_then(|cfg| execute(&cfg, &command_line));
    match result {
        Ok((outcome, files)) => {
            summarize(&outcome);
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
