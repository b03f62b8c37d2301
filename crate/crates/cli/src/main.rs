//! `fundom`: run verifications and constructions on scene files.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fundom::run::{run_text, Command};
use fundom::scene::Overrides;

#[derive(Parser)]
#[command(name = "fundom", version, about = "Proper actions, quotient metrics, Voronoi tiles and fundamental domains")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Transporter growth, dynamical witnesses and the wandering radius.
    CheckProperness(Flags),
    /// Margin, quotient distances and the local isometry check.
    QuotientDist(Flags),
    /// Voronoi tiles of a net, with starlike, covering and closure checks.
    Voronoi(Flags),
    /// Dirichlet tile of a center and its fundamental set checks.
    Dirichlet(Flags),
    /// Closed connected fundamental domain from an invariant net.
    FundamentalDomain(Flags),
}

#[derive(Args)]
struct Flags {
    /// Scene file (JSON).
    scene: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    window_radius: Option<f64>,
    #[arg(long)]
    band_width: Option<f64>,
    /// Write the figure to this file.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    /// Write report.json (and tiles.svg, when a figure applies) into this directory
    /// instead of printing the report.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::CheckProperness(f) => (Command::CheckProperness, f),
        Cmd::QuotientDist(f) => (Command::QuotientDist, f),
        Cmd::Voronoi(f) => (Command::Voronoi, f),
        Cmd::Dirichlet(f) => (Command::Dirichlet, f),
        Cmd::FundamentalDomain(f) => (Command::FundamentalDomain, f),
    };
    match execute(command, &flags) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("fundom: {message}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command, flags: &Flags) -> Result<u8, String> {
    let text = fs::read_to_string(&flags.scene).map_err(|e| format!("{}: {e}", flags.scene.display()))?;
    let overrides = Overrides {
        seed: flags.seed,
        samples: flags.samples,
        depth: flags.depth,
        window_radius: flags.window_radius,
        band_width: flags.band_width,
    };
    let want_svg = flags.svg.is_some() || flags.out.is_some();
    let outcome =
        run_text(command, &text, &overrides, want_svg).map_err(|e| format!("{}: {e}", flags.scene.display()))?;
    let write = |path: &PathBuf, data: &str| fs::write(path, data).map_err(|e| format!("{}: {e}", path.display()));
    match &flags.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            write(&dir.join("report.json"), &outcome.report)?;
            if let (Some(svg), None) = (&outcome.svg, &flags.svg) {
                write(&dir.join("tiles.svg"), svg)?;
            }
        }
        None => print!("{}", outcome.report),
    }
    if let (Some(path), Some(svg)) = (&flags.svg, &outcome.svg) {
        write(path, svg)?;
    }
    Ok(outcome.status.exit_code() as u8)
}
