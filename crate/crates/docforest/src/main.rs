use clap::{Parser, Subcommand};
use docforest::matcher::ExternalEmbeddings;
use docforest::{
    accuracy, compare_methods, generate_corpus, parse_hierarchy, train, Error, FeatureConfig,
    GenConfig, MatchModel, ParseOptions, PredictionRecord, Result, RuleConfig, TrainOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "docforest",
    version,
    about = "Recover the entity hierarchy of visually rich documents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus into a directory
    Gen {
        /// JSON generation config
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if absent)
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the parent matcher on a corpus directory
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Where to write the model JSON
        #[arg(long)]
        out: PathBuf,
        /// Cosine scale
        #[arg(long, default_value_t = 16.0)]
        s: f64,
        /// Additive angle margin in radians
        #[arg(long, default_value_t = 0.2)]
        m: f64,
        #[arg(long = "emb-dim", default_value_t = 64)]
        emb_dim: usize,
        #[arg(long = "hidden-dim", default_value_t = 128)]
        hidden_dim: usize,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Optional JSONL of precomputed text embeddings
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Predict a parent for every entity of the input documents
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// JSONL of documents
        #[arg(long)]
        input: PathBuf,
        /// Output JSONL of predictions
        #[arg(long)]
        out: PathBuf,
        /// Disable the rules and score every entity with the matcher
        #[arg(long = "no-rules")]
        no_rules: bool,
        /// Optional JSONL of precomputed text embeddings
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Score a prediction file against gold labels
    Eval {
        #[arg(long)]
        preds: PathBuf,
        /// JSONL of gold-labeled documents
        #[arg(long)]
        gold: PathBuf,
        /// Restrict scoring to these categories (comma separated)
        #[arg(long = "scored-categories", value_delimiter = ',')]
        scored_categories: Option<Vec<String>>,
    },
    /// Compare matcher-only against rules + matcher on a corpus
    Compare {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Inspect the deterministic rule configuration
    Rules {
        /// Print the full configuration as JSON
        #[arg(long)]
        dump: bool,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout with success; bad usage exits 1
            let code = i32::from(e.use_stderr());
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

/// Print one line to stdout. A closed pipe (the reader exited early) ends the
/// process quietly like any Unix filter instead of panicking.
fn say(msg: std::fmt::Arguments) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let res = out.write_fmt(msg).and_then(|()| out.write_all(b"\n"));
    match res {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        other => Ok(other?),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { config, out } => cmd_gen(&config, &out),
        Command::Train {
            corpus,
            out,
            s,
            m,
            emb_dim,
            hidden_dim,
            epochs,
            lr,
            seed,
            embeddings,
        } => cmd_train(
            &corpus, &out, s, m, emb_dim, hidden_dim, epochs, lr, seed, embeddings.as_deref(),
        ),
        Command::Predict {
            model,
            input,
            out,
            no_rules,
            embeddings,
        } => cmd_predict(&model, &input, &out, no_rules, embeddings.as_deref()),
        Command::Eval {
            preds,
            gold,
            scored_categories,
        } => cmd_eval(&preds, &gold, scored_categories),
        Command::Compare { corpus, model } => cmd_compare(&corpus, &model),
        Command::Rules { dump } => {
            let cfg = RuleConfig::standard();
            if dump {
                say(format_args!("{:#}", cfg.dump_json()))
            } else {
                say(format_args!(
                    "3 deterministic rule groups over {} known categories; \
                     use --dump for the full JSON configuration",
                    docforest::category::VOCAB.len()
                ))
            }
        }
    }
}

fn cmd_gen(config: &Path, out: &Path) -> Result<()> {
    let cfg = GenConfig::load(config)?;
    let (corpus, manifest) = generate_corpus(&cfg)?;
    docforest::corpus::save_corpus_dir(out, &corpus, &manifest)?;
    say(format_args!(
        "wrote {} documents ({} train / {} val / {} test) to {}",
        corpus.len(),
        corpus.train.len(),
        corpus.val.len(),
        corpus.test.len(),
        out.display()
    ))
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    corpus_dir: &Path,
    out: &Path,
    s: f64,
    m: f64,
    emb_dim: usize,
    hidden_dim: usize,
    epochs: usize,
    lr: f64,
    seed: u64,
    embeddings: Option<&Path>,
) -> Result<()> {
    let (corpus, _) = docforest::corpus::load_corpus_dir(corpus_dir)?;
    let feature_config = FeatureConfig::default();
    let external = embeddings
        .map(|p| ExternalEmbeddings::load(p, feature_config.text_hash_dim))
        .transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = MatchModel::new_random(feature_config, hidden_dim, emb_dim, s, m, &mut rng)?;
    let opts = TrainOptions {
        epochs,
        learning_rate: lr,
        seed,
    };
    let (model, log) = train(&corpus.train, &init, &opts, external.as_ref())?;
    // save before printing so a closed pipe cannot swallow the model file
    model.save(out)?;
    for (i, loss) in log.epoch_mean_loss.iter().enumerate() {
        say(format_args!("epoch {:>3}/{}  mean loss {loss:.6}", i + 1, epochs))?;
    }
    say(format_args!(
        "trained on {} documents ({} children); model written to {}",
        log.trainable_docs,
        log.trainable_children,
        out.display()
    ))
}

fn cmd_predict(
    model_path: &Path,
    input: &Path,
    out: &Path,
    no_rules: bool,
    embeddings: Option<&Path>,
) -> Result<()> {
    let model = MatchModel::load(model_path)?;
    let docs = docforest::corpus::load_jsonl(input)?;
    let external = embeddings
        .map(|p| ExternalEmbeddings::load(p, model.feature_config.text_hash_dim))
        .transpose()?;
    let opts = ParseOptions {
        rules_enabled: !no_rules,
    };
    let mut buf = String::new();
    for doc in &docs {
        let assignment = parse_hierarchy(doc, &model, &opts, external.as_ref())?;
        for rec in PredictionRecord::from_assignment(&doc.doc_id, &assignment) {
            buf.push_str(
                &serde_json::to_string(&rec)
                    .map_err(|e| Error::Internal(format!("serializing prediction: {e}")))?,
            );
            buf.push('\n');
        }
    }
    let mut f = std::fs::File::create(out)?;
    f.write_all(buf.as_bytes())?;
    say(format_args!(
        "wrote predictions for {} documents to {}",
        docs.len(),
        out.display()
    ))
}

fn cmd_eval(preds: &Path, gold: &Path, scored: Option<Vec<String>>) -> Result<()> {
    let predictions = load_predictions(preds)?;
    let gold_docs = docforest::corpus::load_jsonl(gold)?;
    let scored: Option<BTreeSet<String>> = scored.map(|v| v.into_iter().collect());
    let report = accuracy(&predictions, &gold_docs, &scored)?;
    say(format_args!(
        "accuracy {}/{} = {:.5}",
        report.correct,
        report.total,
        report.value()
    ))
}

fn cmd_compare(corpus_dir: &Path, model_path: &Path) -> Result<()> {
    let (corpus, _) = docforest::corpus::load_corpus_dir(corpus_dir)?;
    let model = MatchModel::load(model_path)?;
    let report = compare_methods(&corpus, &model)?;
    say(format_args!("{}", report.table().trim_end()))
}

fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let raw = std::fs::read_to_string(path)?;
    raw.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| {
                Error::Parse(format!("{}:{}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}
