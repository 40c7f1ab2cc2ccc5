use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kace::corpus::parse_species_list;
use kace::pipeline::{CommandOutcome, Pipeline, RunConfig};
use kace::{Error, Result};

#[derive(Parser)]
#[command(name = "kace", version, about = "Lysine acetylation site prediction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs, reduce redundancy, cut windows and split per species
    Prepare(Common),
    /// Train one LSTM per species (or one pooled model)
    Train(Common),
    /// Write LSTM feature vectors for both splits
    Extract(Common),
    /// Fit the ensembles and write report tables and ROC points
    Evaluate(Common),
    /// Embed the feature vectors in 2-D with t-SNE
    Visualize(Common),
    /// Print the full default configuration
    Defaults(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated species filter
    #[arg(long)]
    species: Option<String>,
    /// Global seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.species {
            config.species = parse_species_list(s).map_err(|e| Error::Usage(e.to_string()))?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn report(outcome: &CommandOutcome) {
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        println!("wrote {f}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let (common, action): (&Common, fn(&Pipeline<f64>) -> Result<CommandOutcome>) = match &cli.command {
        Command::Defaults(c) => {
            print!("{}", c.resolve()?.render());
            return Ok(());
        }
        Command::Prepare(c) => (c, Pipeline::prepare),
        Command::Train(c) => (c, Pipeline::train),
        Command::Extract(c) => (c, Pipeline::extract),
        Command::Evaluate(c) => (c, Pipeline::evaluate),
        Command::Visualize(c) => (c, Pipeline::visualize),
    };
    let pipeline = Pipeline::<f64>::new(common.resolve()?).with_logger(|m| eprintln!("{m}"));
    report(&action(&pipeline)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

