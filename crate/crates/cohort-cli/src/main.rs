//! `cohort` command line: run the pipeline over patient records, score system
//! output against gold, build or expand lexicons, generate the synthetic
//! corpus, and dump preprocessing layers for inspection.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cohort_core::record::CriterionId;

/// Exit codes: 0 success, 2 configuration error, 3 input parse error.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PARSE: u8 = 3;

#[derive(Parser)]
#[command(name = "cohort", version, about = "Cohort selection over clinical notes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide all 13 criteria for every patient record under --input.
    Run {
        /// Record file, directory of .xml records, or directory of
        /// <patient>_<seq>.txt notes.
        #[arg(long)]
        input: PathBuf,
        /// Directory for decision files and evidence reports.
        #[arg(long)]
        output: PathBuf,
        /// Resource directory (lexicons/, sections.tsv, triggers.tsv);
        /// embedded defaults are used when omitted.
        #[arg(long)]
        resources: Option<PathBuf>,
        /// Directory of trained model JSON files.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Flat key=value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker thread count.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Score system decisions against gold tags and print the track table.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        system: PathBuf,
        /// Also write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Lexicon curation commands.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Debugging helpers.
    #[command(subcommand)]
    Debug(DebugCommand),
    /// Write the synthetic 20-patient corpus (gold labels by construction).
    GenCorpus {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum LexiconCommand {
    /// Derive a criterion lexicon from labeled records.
    Build {
        /// Labeled records (gold tags required).
        #[arg(long)]
        input: PathBuf,
        /// Criterion name, e.g. "Major-diabetes".
        #[arg(long, value_parser = parse_criterion)]
        criterion: CriterionId,
        /// Output directory for the lexicon files and CV report.
        #[arg(long)]
        output: PathBuf,
        /// Embedding table (text or word2vec binary) for expansion.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Expand an existing lexicon through embedding neighborhoods.
    Expand {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        sim_threshold: f64,
        #[arg(long, default_value_t = 2)]
        iterations: usize,
    },
}

#[derive(Subcommand)]
enum DebugCommand {
    /// Dump tokens, sections, entities, labs, and timexes as JSON.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        resources: Option<PathBuf>,
    },
}

fn parse_criterion(s: &str) -> Result<CriterionId, String> {
    s.parse().map_err(|_| {
        format!(
            "unknown criterion {s:?}; expected one of: {}",
            CriterionId::ALL
                .iter()
                .map(|c| c.table_name())
                .collect::<Vec<_>>()
                .join(", ")
        )
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            input,
            output,
            resources,
            models,
            config,
            workers,
        } => commands::cmd_run(
            &input,
            &output,
            resources.as_deref(),
            models.as_deref(),
            config.as_deref(),
            workers,
        ),
        Command::Score { gold, system, json } => {
            commands::cmd_score(&gold, &system, json.as_deref())
        }
        Command::Lexicon(LexiconCommand::Build {
            input,
            criterion,
            output,
            embeddings,
            config,
        }) => commands::cmd_lexicon_build(
            &input,
            criterion,
            &output,
            embeddings.as_deref(),
            config.as_deref(),
        ),
        Command::Lexicon(LexiconCommand::Expand {
            lexicon,
            embeddings,
            output,
            sim_threshold,
            iterations,
        }) => commands::cmd_lexicon_expand(&lexicon, &embeddings, &output, sim_threshold, iterations),
        Command::Debug(DebugCommand::Preprocess { input, resources }) => {
            commands::cmd_debug_preprocess(&input, resources.as_deref())
        }
        Command::GenCorpus { output, seed } => commands::cmd_gen_corpus(&output, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
