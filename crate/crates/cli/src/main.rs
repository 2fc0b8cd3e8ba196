mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldseq::config::KvConfig;

/// Sememe prediction with label-distributed seq2seq models.
///
/// Settings come from an optional `key = value` file given with `--config`,
/// then from dotted overrides such as `--model.epochs=5` anywhere on the
/// command line.
#[derive(Debug, Parser)]
#[command(name = "ldseq", version)]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus and write train/dev/test files.
    Generate(GenerateArgs),
    /// Train a model, keeping the parameters of the best dev epoch.
    Train(TrainArgs),
    /// Score checkpoints and baselines on one split.
    Eval(EvalArgs),
    /// Predict labels for a single input.
    Predict(PredictArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Root seed; falls back to LDSEQ_SEED, then the `seed` config key.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory for train.jsonl, dev.jsonl and test.jsonl.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding train.jsonl and dev.jsonl.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint directory to write.
    #[arg(long)]
    pub out: PathBuf,
    /// ld-seq2seq, basic-seq2seq, rnn-mllr, ml-knn, lp, br or cc.
    #[arg(long, default_value = "ld-seq2seq")]
    pub model: String,
    /// paper or desk; overrides `model.preset`.
    #[arg(long)]
    pub preset: Option<String>,
    /// One-based resource numbers the encoder reads, e.g. `1,2`.
    #[arg(long)]
    pub resources: Option<String>,
    /// Training log, appended to; defaults to train_log.jsonl in `--out`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory holding the corpus splits.
    #[arg(long)]
    pub data: PathBuf,
    /// Split to score.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Trained checkpoints; repeatable.
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<PathBuf>,
    /// Classical baselines fitted on the train split: `all` or a comma list.
    #[arg(long)]
    pub baselines: Option<String>,
    /// Resource subsets for the ablation table, e.g. `--resources 1 --resources 1,2`.
    #[arg(long)]
    pub resources: Vec<String>,
    /// Add a row for the span oracle of the synthetic generator.
    #[arg(long)]
    pub oracle: bool,
    /// Report path prefix; writes `<prefix>.jsonl` and `<prefix>.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Description text, one per resource in order; repeatable.
    #[arg(long = "desc", required = true)]
    pub descriptions: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[command(flatten)]
    pub seed: SeedArg,
}

/// Exit status of a finished command.
pub enum Status {
    Ok,
    Usage,
    Data,
    Numerical,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(match s {
            Status::Ok => 0,
            Status::Usage => 1,
            Status::Data => 2,
            Status::Numerical => 3,
        })
    }
}

/// Splits dotted `--a.b=value` overrides from the arguments clap parses.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        match a.strip_prefix("--") {
            Some(body) if body.split_once('=').is_some_and(|(k, _)| k.contains('.')) => {
                overrides.push(body.to_string());
            }
            _ => rest.push(a),
        }
    }
    (rest, overrides)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage } else { Status::Ok }.into();
        }
    };
    let mut kv = match &cli.config {
        Some(path) => match KvConfig::load(path) {
            Ok(kv) => kv,
            Err(e) => {
                eprintln!("error: {e}");
                return Status::Usage.into();
            }
        },
        None => KvConfig::new(),
    };
    for o in &overrides {
        if let Err(e) = kv.apply_override(o) {
            eprintln!("error: {e}");
            return Status::Usage.into();
        }
    }
    match commands::run(cli.command, kv) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                Status::Numerical
            } else if e.is_data_error() {
                Status::Data
            } else {
                Status::Usage
            }
            .into()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_flags_become_overrides() {
        let args = ["ldseq", "train", "--model.epochs=3", "--out=x", "--seed", "4"].map(String::from);
        let (rest, over) = split_overrides(args.to_vec());
        assert_eq!(over, vec!["model.epochs=3"]);
        assert_eq!(rest, vec!["ldseq", "train", "--out=x", "--seed", "4"]);
    }
}
