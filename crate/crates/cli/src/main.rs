//! `mutkit`: mutation pipelines, sampled Maskit checks and volume
//! verification from the command line.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on
//! unreadable or invalid input.

mod commands;
mod report;
mod svg;

use clap::{Args, Parser, Subcommand};
use commands::Settings;
use mutkit_core::LiftMode;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mutkit", version, about = "Mutation of hyperbolic 3-manifold groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// Override the main check tolerance of the subcommand.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for probe and decoration sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Word length for limit-set sampling.
    #[arg(long, global = true, default_value_t = 6)]
    max_word_length: usize,
    /// Require relators to evaluate to +1 instead of ±1.
    #[arg(long, global = true)]
    strict_sl_lift: bool,
    /// Continue with representations whose relator residuals exceed rep_tol.
    #[arg(long, global = true)]
    force: bool,
    /// Write an SVG of the sampled curves (check-maskit).
    #[arg(long, global = true, value_name = "SVG")]
    emit_image: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, global = true, default_value = "mutkit-reports")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the conjugator A of a mutation and certify its order.
    SolveConjugator { mutation: PathBuf },
    /// Build the extended and mutant representations of a mutation.
    BuildMutant { mutation: PathBuf },
    /// Run the sampled precise-invariance checks.
    CheckMaskit { config: PathBuf },
    /// Volume by the gluing equations and by the developed cycle.
    Volume { triangulation: PathBuf, representation: PathBuf },
    /// Compare the volumes of a manifold and its mutant.
    VerifyMutation {
        triangulation: PathBuf,
        representation: PathBuf,
        mutant_triangulation: PathBuf,
        mutant_representation: PathBuf,
    },
    /// Cover multiplicativity and product-cycle vanishing.
    CoverCheck {
        #[arg(long)]
        cover: Option<PathBuf>,
        #[arg(long)]
        surface: Option<PathBuf>,
    },
    /// Classify generator images and run the Jørgensen test on pairs.
    Classify { representation: PathBuf },
    /// Check files against their schema; prints line-anchored diagnostics.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn validate(files: &[PathBuf]) -> ExitCode {
    let mut clean = true;
    for path in files {
        match std::fs::read_to_string(path) {
            Ok(text) => {
                let diagnostics = mutkit_core::formats::validate(&text);
                if diagnostics.is_empty() {
                    println!("{}: ok", path.display());
                }
                for d in diagnostics {
                    clean = false;
                    println!("{}:{}: {}", path.display(), d.line, d.message);
                }
            }
            Err(e) => {
                clean = false;
                println!("{}: {e}", path.display());
            }
        }
    }
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(command: &Command, settings: &Settings) -> anyhow::Result<report::Report> {
    let p = PathBuf::as_path;
    match command {
        Command::SolveConjugator { mutation } => commands::solve_conjugator(settings, mutation),
        Command::BuildMutant { mutation } => commands::build_mutant(settings, mutation),
        Command::CheckMaskit { config } => commands::check_maskit(settings, config),
        Command::Volume {
            triangulation,
            representation,
        } => commands::volume(settings, triangulation, representation),
        Command::VerifyMutation {
            triangulation,
            representation,
            mutant_triangulation,
            mutant_representation,
        } => commands::verify_mutation(
            settings,
            triangulation,
            representation,
            mutant_triangulation,
            mutant_representation,
        ),
        Command::CoverCheck { cover, surface } => {
            commands::cover_check(settings, cover.as_ref().map(p), surface.as_ref().map(p))
        }
        Command::Classify { representation } => commands::classify_generators(settings, representation),
        Command::Validate { .. } => unreachable!("handled before dispatch"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Validate { files } = &cli.command {
        return validate(files);
    }
    let g = &cli.global;
    if let Some(t) = g.tol {
        if !(t > 0.0 && t.is_finite()) {
            eprintln!("error: --tol must be positive and finite, got {t}");
            return ExitCode::from(2);
        }
    }
    let settings = Settings {
        tol: g.tol,
        seed: g.seed,
        max_word_length: g.max_word_length,
        lift: if g.strict_sl_lift { LiftMode::Strict } else { LiftMode::Projective },
        force: g.force,
        emit_image: g.emit_image.clone(),
        rep_tol: 1e-8,
    };
    let report = match run(&cli.command, &settings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let path = match report.write(Path::new(&g.out)) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    for c in &report.checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    println!("report: {}", path.display());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
