use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use olfactor_cli::{commands, config, CliError};

#[derive(Parser)]
#[command(name = "olfactor", version, about = "Odor descriptor prediction from SMILES")]
struct Cli {
    /// Run configuration file (key=value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Override any configuration key, e.g. `--set loss.lambda1=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a dataset and write descriptor statistics.
    Analyze {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Number of descriptors in the co-occurrence matrix.
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Write pooled molecule features (and per-atom features with --atoms).
    Featurize {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        atoms: bool,
    },
    /// Train a model and write the best checkpoint and a per-epoch log.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compare analytic gradients against central differences.
    Gradcheck,
    /// Generate a synthetic labelled dataset.
    Synth {
        #[arg(long, default_value_t = 200)]
        molecules: usize,
        #[arg(long, default_value_t = 10)]
        labels: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn path_override(key: &str, path: &Option<PathBuf>) -> Option<String> {
    path.as_ref().map(|p| format!("{key}={}", p.display()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut overrides: Vec<String> = Vec::new();
    overrides.extend(cli.seed.map(|s| format!("seed={s}")));
    overrides.extend(path_override("paths.out_dir", &cli.out_dir));
    match &cli.command {
        Command::Analyze { dataset, top_k } => {
            overrides.extend(path_override("paths.dataset", dataset));
            overrides.extend(top_k.map(|k| format!("analyze.top_k={k}")));
        }
        Command::Featurize { dataset, .. } => overrides.extend(path_override("paths.dataset", dataset)),
        Command::Train {
            dataset,
            checkpoint,
            epochs,
        } => {
            overrides.extend(path_override("paths.dataset", dataset));
            overrides.extend(path_override("paths.checkpoint", checkpoint));
            overrides.extend(epochs.map(|e| format!("train.epochs={e}")));
        }
        Command::Eval { dataset, checkpoint } => {
            overrides.extend(path_override("paths.dataset", dataset));
            overrides.extend(path_override("paths.checkpoint", checkpoint));
        }
        Command::Gradcheck | Command::Synth { .. } => {}
    }
    // --set wins over the dedicated flags
    overrides.extend(cli.overrides);
    let cfg = config::load(cli.config.as_deref(), &overrides)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Analyze { .. } => commands::analyze(&cfg, &mut out),
        Command::Featurize { atoms, .. } => commands::featurize(&cfg, atoms, &mut out),
        Command::Train { .. } => commands::train(&cfg, &mut out),
        Command::Eval { .. } => commands::eval(&cfg, &mut out),
        Command::Gradcheck => commands::gradcheck(&cfg, &mut out).map(drop),
        Command::Synth {
            molecules,
            labels,
            output,
        } => commands::synth(&cfg, molecules, labels, output, &mut out).map(drop),
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for line in e.to_string().lines() {
                eprintln!("error: {line}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
