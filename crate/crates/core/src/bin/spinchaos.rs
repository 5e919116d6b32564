use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinchaos::runner::{self, ConfigSource, Overrides, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "spinchaos", version, about = "Run spin-glass chaos and superconcentration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config (a JSON file or `preset:<name>`).
    Run {
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, env = OUT_DIR_ENV)]
        out_dir: Option<PathBuf>,
    },
    /// List the bundled presets.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListPresets => {
            for p in runner::presets() {
                println!("{:<24} {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            threads,
            out_dir,
        } => {
            let overrides = Overrides { seed, threads, out_dir };
            let result = ConfigSource::load(&config).and_then(|src| runner::run(&src, &overrides));
            match result {
                Ok(summary) => {
                    for a in &summary.record.assertions {
                        let verdict = if a.passed { "PASS" } else { "FAIL" };
                        println!("{verdict} {} = {} (min {:?}, max {:?})", a.metric, a.value, a.min, a.max);
                    }
                    println!("wrote {}", summary.json_path.display());
                    if let Some(csv) = &summary.csv_path {
                        println!("wrote {}", csv.display());
                    }
                    ExitCode::from(summary.status.code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.status.code() as u8)
                }
            }
        }
    }
}
