use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use renorm_cli::{read_config, run, Command, Options};

/// Renormalized energies of circle-valued harmonic maps with prescribed
/// vortices on multiply connected planar domains.
#[derive(Parser)]
#[command(name = "renorm", version)]
struct Args {
    command: Command,
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress lines on standard error.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = read_config(&args.config).and_then(|cfg| run(args.command, &cfg, &Options { out: args.out, quiet: args.quiet }));
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
