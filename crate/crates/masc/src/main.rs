use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use masc::config;
use masc::figures::{self, FigureId};
use masc::Error;

#[derive(Parser)]
#[command(name = "masc", version, about = "Sensing and downlink simulations for a Mars orbiter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one figure sweep and write its CSV files and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        figure: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse and check a scenario file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the built-in presets.
    Presets,
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::Invalid(_) | Error::Parse { .. } | Error::UnknownFigure(_) | Error::OutOfView { .. } => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            print!("{}", config::describe_presets());
            ExitCode::SUCCESS
        }
        Command::Validate { config: path } => match config::load_config(&path) {
            Ok(cfg) => {
                println!("{}: ok (dust {}, {} RF chains)", path.display(), cfg.dust_label(), cfg.array.n_rf);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                exit_for(&e)
            }
        },
        Command::Run {
            config: path,
            figure,
            out,
            seed,
            workers,
        } => {
            let setup = config::load_config(&path).and_then(|mut cfg| {
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                Ok((cfg, figure.parse::<FigureId>()?))
            });
            let (cfg, fig) = match setup {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit_for(&e);
                }
            };
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
                .max(1);
            match figures::run_figure(&cfg, fig, &out, workers) {
                Ok(run) => {
                    for f in &run.files {
                        println!("{}", f.display());
                    }
                    if run.flagged_rows > 0 {
                        eprintln!("{} rows failed; see their status column", run.flagged_rows);
                        ExitCode::from(3)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for(&e)
                }
            }
        }
    }
}
