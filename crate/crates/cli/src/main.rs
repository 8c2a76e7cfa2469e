use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use giantpolaron_cli::{parse, run, Mode, EXIT_NUMERICAL, EXIT_VALIDATION};

/// Polaron-method simulations of a giant atom in an Ohmic waveguide.
#[derive(Parser, Debug)]
#[command(name = "giantpolaron", version)]
struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    mode: Mode,
    /// Run configuration (TOML with dotted keys).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for sweeps; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Only check the configuration.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("--jobs: must be at least 1");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("--jobs: {e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    let spec = match parse(&text, cli.mode, cli.out.clone()) {
        Ok(s) => s,
        Err(diags) => {
            for d in &diags {
                eprintln!("{}: {d}", cli.config.display());
            }
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    if cli.check {
        println!("{}: ok", cli.config.display());
        return ExitCode::SUCCESS;
    }
    match run(&spec) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{} failed: {e}", spec.mode.name());
            ExitCode::from(EXIT_NUMERICAL as u8)
        }
    }
}
