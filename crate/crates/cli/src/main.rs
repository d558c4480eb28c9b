//! `xling`: prepare corpora, link words across languages, train, evaluate
//! and export cross-lingual topic models.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::Settings;

/// An error caused by how the program was invoked or configured.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "xling",
    version,
    about = "Cross-lingual topic modeling with contrastive topic alignment",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the vocabulary from the training portion of both corpora.
    Prepare(Common),
    /// Build cross-lingual word links from the dictionary and embedding
    /// neighbors.
    Link(Common),
    /// Train a model and write its checkpoint and loss trace.
    Train(Common),
    /// Evaluate a checkpoint: topic uniqueness, coherence, classification.
    Eval(Common),
    /// Write the top words of every topic of a checkpoint.
    ExportTopics(Common),
    /// Run the dictionary coverage x linking mode grid into one CSV.
    Ablate(Common),
    /// Generate the planted-topic benchmark and a config that trains on it.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Document pairs to generate.
        #[arg(long, default_value_t = 2000)]
        docs: usize,
        /// Words per language.
        #[arg(long, default_value_t = 200)]
        vocab: usize,
    },
}

/// Settings shared by every subcommand; flags override the config file.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat TOML config file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Number of topics.
    #[arg(long, value_name = "K")]
    topics: Option<usize>,
    /// Critic temperature.
    #[arg(long, value_name = "F")]
    tau: Option<f64>,
    /// Weight of the alignment loss.
    #[arg(long, value_name = "F")]
    lambda_tami: Option<f64>,
    /// Alignment loss: tami or direct.
    #[arg(long, value_name = "NAME")]
    alignment: Option<String>,
    /// Embedding neighbors per word when extending links.
    #[arg(long, value_name = "N")]
    neighbors: Option<usize>,
    /// Fraction of dictionary entries to keep, in (0, 1].
    #[arg(long, value_name = "F")]
    dict_coverage: Option<f64>,
    /// Link with dictionary translations only.
    #[arg(long)]
    no_cvl: bool,
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Words per topic in reports.
    #[arg(long, value_name = "T")]
    top_words: Option<usize>,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        macro_rules! apply {
            ($($field:ident => $key:ident),*) => {
                $(if let Some(v) = &self.$field { s.$key = v.clone(); })*
            };
        }
        apply!(
            seed => seed,
            topics => topics,
            tau => tau,
            lambda_tami => lambda_tami,
            alignment => alignment,
            neighbors => neighbors,
            dict_coverage => dict_coverage,
            epochs => epochs,
            batch_size => batch_size,
            output => output,
            top_words => top_words
        );
        if self.no_cvl {
            s.no_cvl = true;
        }
        Ok(s)
    }
}

fn execute(command: Command) -> Result<()> {
    let (common, synth) = match &command {
        Command::Synth {
            common,
            docs,
            vocab,
        } => (common, Some((*docs, *vocab))),
        Command::Prepare(c)
        | Command::Link(c)
        | Command::Train(c)
        | Command::Eval(c)
        | Command::ExportTopics(c)
        | Command::Ablate(c) => (c, None),
    };
    let settings = common.settings()?;
    settings.validate()?;
    settings.check_inputs()?;

    match command {
        Command::Prepare(_) => commands::prepare_cmd(&settings)?,
        Command::Link(_) => commands::link_cmd(&settings)?,
        Command::Train(_) => commands::train_cmd(&settings)?,
        Command::Eval(_) => commands::eval_cmd(&settings)?,
        Command::ExportTopics(_) => commands::export_topics_cmd(&settings)?,
        Command::Ablate(_) => commands::ablate_cmd(&settings)?,
        Command::Synth { .. } => {
            let (docs, vocab) = synth.unwrap_or_default();
            commands::synth_cmd(&settings, docs, vocab)?
        }
    }
    let echo = settings.echo()?;
    log::info!("config written to {}", echo.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
