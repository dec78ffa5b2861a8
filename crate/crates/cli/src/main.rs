use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcd_core::config::RunConfig;
use qcd_core::experiment::{describe, run};
use qcd_core::{Error, ErrorClass};

/// Screw-dislocation experiments in hexagonal quasi-crystals.
#[derive(Parser)]
#[command(name = "qcd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, env = "QCD_THREADS")]
        threads: Option<usize>,
    },
    /// Print the meshes and problem sizes a run would use, without solving.
    Describe { config: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Geometry => 3,
        ErrorClass::Solver => 4,
    }
}

fn fail(e: &Error) -> ExitCode {
    let code = exit_code(e);
    let body = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": code,
    });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Run { config, out, threads } => (|| {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?;
            }
            let cfg = RunConfig::load(&config)?;
            let done = run(&cfg, out.as_deref())?;
            println!("{}", done.result_path.display());
            if let Some(p) = done.sweep_path {
                println!("{}", p.display());
            }
            for p in done.mesh_paths {
                println!("{}", p.display());
            }
            Ok(())
        })(),
        Command::Describe { config } => RunConfig::load(&config).and_then(|cfg| describe(&cfg)).map(|text| print!("{text}")),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
