use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use polarity_prop::dataset::{
    load_labeled_events, read_bundle, sample_per_class, write_bundle, write_labeled_events,
    BuildStats,
};
use polarity_prop::evaluation::{baseline_random, baseline_random_seed, score_events, EvalResult};
use polarity_prop::extraction::{
    last_clause, load_connective_table, stream_corpus, ExtractorConfig, PairRecord, Tokenizer,
    WhitespaceTokenizer,
};
use polarity_prop::io::{read_lines, write_atomic, write_json_line};
use polarity_prop::lexicon::load_lexicon_with_negation;
use polarity_prop::model::{export_text, load_checkpoint, read_checkpoint, save_checkpoint};
use polarity_prop::synthetic::{
    SyntheticConfig, SyntheticCorpus, CONNECTIVE_TABLE, NEGATION_MARKER,
};
use polarity_prop::training::init_model;
use polarity_prop::{
    build_bundle, evaluate, BalanceConfig, DiscourseRelation, EncoderKind, EventPair, LabeledEvent,
    ModelConfig, Objective, Polarity, PolarityModelF64, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "polarity-prop",
    version,
    about = "Event polarity learning from a seed lexicon and discourse pairs"
)]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat for more log output; POLARITY_PROP_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract discourse-linked event pairs from a one-sentence-per-line corpus.
    Extract(ExtractArgs),
    /// Sort pairs into AL / CA / CO and write a balanced training bundle.
    BuildDataset(BuildArgs),
    /// Train a polarity model on a bundle.
    Train(TrainArgs),
    /// Report sign accuracy of a checkpoint or a baseline on a labeled set.
    Evaluate(EvalArgs),
    /// Score events read from standard input, one per line.
    Score(ScoreArgs),
    /// Print a checkpoint header and optionally export its parameters as text.
    Inspect(InspectArgs),
    /// Write a synthetic corpus with known polarities and its fixture files.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Connective table: pattern<TAB>cause|concession<TAB>former_first|latter_first.
    #[arg(long)]
    connectives: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Read `score<TAB>sentence` lines and write the last clause of each as a labeled event.
    #[arg(long)]
    last_clause: bool,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    /// Negation markers, one per line.
    #[arg(long)]
    negation: Option<PathBuf>,
    /// CA and CO are each sampled to this multiple of |AL|.
    #[arg(long, default_value_t = 5)]
    multiplier: usize,
    #[arg(long)]
    max_al: Option<usize>,
    /// Labeled events added as the supervised part of the bundle.
    #[arg(long)]
    supervised: Option<PathBuf>,
    /// Keep only this many supervised events, half per class.
    #[arg(long, requires = "supervised")]
    subset: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch JSON Lines log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// TOML file with training settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_objective)]
    objective: Option<Objective>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    lambda_al: Option<f64>,
    #[arg(long)]
    lambda_ca: Option<f64>,
    #[arg(long)]
    lambda_co: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, value_parser = parse_encoder, default_value = "mean")]
    encoder: EncoderKind,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    min_frequency: usize,
    #[arg(long, default_value_t = 100_000)]
    max_vocab: usize,
    /// Initial embeddings: `token v_1 ... v_D` per line.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    None,
    Random,
    #[value(name = "random+seed")]
    RandomSeed,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    test: PathBuf,
    #[arg(long, required_if_eq("baseline", "none"))]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Baseline::None)]
    baseline: Baseline,
    #[arg(long, required_if_eq("baseline", "random+seed"))]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    negation: Option<PathBuf>,
    /// Per-event JSON Lines dump of scores and predictions.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    checkpoint: PathBuf,
    /// Write one `name<TAB>value` line per parameter.
    #[arg(long)]
    export_text: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Total pairs, split evenly between Cause and Concession.
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    #[arg(long, default_value_t = 200)]
    words: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0.0)]
    negation_rate: f64,
    /// Size of the labeled training file.
    #[arg(long, default_value_t = 60)]
    labeled: usize,
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse()
}

fn parse_encoder(s: &str) -> Result<EncoderKind, String> {
    s.parse()
}

fn main() {
    let cli = Cli::parse();
    let default_level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("POLARITY_PROP_LOG", default_level),
    )
    .format_timestamp(None)
    .init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::BuildDataset(a) => cmd_build(a, seed.unwrap_or(0)),
        Command::Train(a) => cmd_train(a, seed),
        Command::Evaluate(a) => cmd_evaluate(a, seed.unwrap_or(0)),
        Command::Score(a) => cmd_score(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Synth(a) => cmd_synth(a, seed.unwrap_or(0)),
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    ensure!(path.is_file(), "{what} {} does not exist", path.display());
    Ok(())
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    require_file(&a.corpus, "corpus")?;
    require_file(&a.connectives, "connective table")?;
    let table = load_connective_table(&a.connectives).context("reading connective table")?;
    if a.last_clause {
        return extract_last_clauses(&a, &table);
    }
    let mut stream = stream_corpus(&a.corpus, table)?;
    let (mut cause, mut concession) = (0usize, 0usize);
    write_atomic(&a.out, |w| {
        for pair in stream.by_ref() {
            let pair = pair.map_err(io::Error::other)?;
            match pair.relation {
                DiscourseRelation::Cause => cause += 1,
                DiscourseRelation::Concession => concession += 1,
            }
            write_json_line(w, &PairRecord::from(&pair))?;
        }
        Ok(())
    })
    .with_context(|| format!("writing {}", a.out.display()))?;
    if stream.skipped() > 0 {
        warn!(
            "skipped {} lines that are not valid UTF-8",
            stream.skipped()
        );
    }
    println!("lines\t{}", stream.lines_read());
    println!("skipped\t{}", stream.skipped());
    println!("cause\t{cause}");
    println!("concession\t{concession}");
    println!("total\t{}", cause + concession);
    Ok(())
}

fn extract_last_clauses(a: &ExtractArgs, table: &polarity_prop::ConnectiveTable) -> Result<()> {
    let config = ExtractorConfig::default();
    let mut events = Vec::new();
    for (line, text) in read_lines(&a.corpus)? {
        let (score, sentence) = text
            .split_once('\t')
            .with_context(|| format!("line {line}: expected score<TAB>sentence"))?;
        let score: f64 = score
            .trim()
            .parse()
            .with_context(|| format!("line {line}: bad score {score:?}"))?;
        let score = Polarity::from_f64(score)
            .with_context(|| format!("line {line}: score must be +1 or -1"))?;
        let tokens = WhitespaceTokenizer.tokenize(sentence);
        match last_clause(&tokens, table, &config) {
            Some(event) => events.push(LabeledEvent { event, score }),
            None => warn!("line {line}: no clause found"),
        }
    }
    write_atomic(&a.out, |w| write_labeled_events(w, &events))?;
    println!("events\t{}", events.len());
    Ok(())
}

fn load_pairs(path: &Path) -> Result<Vec<EventPair>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            let record: PairRecord = serde_json::from_str(&text)
                .with_context(|| format!("{}:{line}", path.display()))?;
            EventPair::try_from(record).with_context(|| format!("{}:{line}", path.display()))
        })
        .collect()
}

fn print_build_stats(stats: &BuildStats, supervised: usize) {
    println!("{:<12}{:>10}{:>10}", "", "raw", "kept");
    println!(
        "{:<12}{:>10}{:>10}",
        "AL",
        stats.raw_al_positive + stats.raw_al_negative,
        stats.al_positive + stats.al_negative
    );
    println!(
        "{:<12}{:>10}{:>10}",
        "  positive", stats.raw_al_positive, stats.al_positive
    );
    println!(
        "{:<12}{:>10}{:>10}",
        "  negative", stats.raw_al_negative, stats.al_negative
    );
    println!("{:<12}{:>10}{:>10}", "CA", stats.raw_ca, stats.ca);
    println!("{:<12}{:>10}{:>10}", "CO", stats.raw_co, stats.co);
    println!("{:<12}{:>10}", "discarded", stats.discarded);
    println!("{:<12}{:>10}", "input", stats.input_pairs);
    if supervised > 0 {
        println!("{:<12}{:>10}", "supervised", supervised);
    }
    if stats.ca_shortfall > 0 || stats.co_shortfall > 0 {
        println!(
            "shortfall: CA {} CO {} below multiplier x |AL|",
            stats.ca_shortfall, stats.co_shortfall
        );
    }
}

fn cmd_build(a: BuildArgs, seed: u64) -> Result<()> {
    require_file(&a.pairs, "pair file")?;
    require_file(&a.lexicon, "lexicon")?;
    if let Some(p) = &a.negation {
        require_file(p, "negation marker file")?;
    }
    let lexicon =
        load_lexicon_with_negation(&a.lexicon, a.negation.as_deref()).context("reading lexicon")?;
    let pairs = load_pairs(&a.pairs)?;
    let balance = BalanceConfig {
        max_al: a.max_al,
        multiplier: a.multiplier,
    };
    let (mut bundle, stats) = build_bundle(pairs, &lexicon, &balance, seed)?;
    if let Some(path) = &a.supervised {
        let mut events =
            load_labeled_events(path).with_context(|| format!("reading {}", path.display()))?;
        if let Some(n) = a.subset {
            events = sample_per_class(events, n, seed);
        }
        bundle.supervised = events;
    }
    write_atomic(&a.out, |w| write_bundle(w, &bundle))
        .with_context(|| format!("writing {}", a.out.display()))?;
    print_build_stats(&stats, bundle.supervised.len());
    Ok(())
}

fn train_config(a: &TrainArgs, seed: Option<u64>) -> Result<TrainConfig> {
    let mut config = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => TrainConfig::default(),
    };
    macro_rules! override_field {
        ($flag:expr, $field:ident) => {
            if let Some(v) = $flag {
                config.$field = v;
            }
        };
    }
    override_field!(a.objective, objective);
    override_field!(a.epochs, epochs);
    override_field!(a.batch_size, batch_size);
    override_field!(a.lr, learning_rate);
    override_field!(a.momentum, momentum);
    override_field!(a.lambda_al, lambda_al);
    override_field!(a.lambda_ca, lambda_ca);
    override_field!(a.lambda_co, lambda_co);
    override_field!(a.mu, mu);
    override_field!(seed, rng_seed);
    config.validate()?;
    Ok(config)
}

fn cmd_train(a: TrainArgs, seed: Option<u64>) -> Result<()> {
    require_file(&a.bundle, "bundle")?;
    require_file(&a.dev, "dev set")?;
    let config = train_config(&a, seed)?;
    let bundle =
        read_bundle(&a.bundle).with_context(|| format!("reading {}", a.bundle.display()))?;
    let dev =
        load_labeled_events(&a.dev).with_context(|| format!("reading {}", a.dev.display()))?;
    let model_config = ModelConfig {
        encoder: a.encoder,
        dim: a.dim,
        min_frequency: a.min_frequency,
        max_vocab: a.max_vocab,
    };
    ensure!(model_config.dim > 0, "--dim must be at least 1");
    let mut model: PolarityModelF64 = init_model(&bundle, &model_config, config.rng_seed);
    if let Some(path) = &a.embeddings {
        let replaced = model
            .import_embeddings(path)
            .with_context(|| format!("importing {}", path.display()))?;
        info!("imported {replaced} embedding rows");
    }
    info!(
        "training {} on {} AL / {} CA / {} CO / {} supervised, vocabulary {}",
        config.objective,
        bundle.al.len(),
        bundle.ca.len(),
        bundle.co.len(),
        bundle.supervised.len(),
        model.vocab().len()
    );
    let (model, log) = polarity_prop::train(model, &bundle, &dev, &config)?;
    save_checkpoint(&model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.log {
        write_atomic(path, |w| log.write_jsonl(w))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!("best_epoch\t{}", log.best_epoch);
    println!("dev_accuracy\t{:.4}", log.best_dev_accuracy);
    Ok(())
}

fn print_eval(result: &EvalResult) {
    println!("accuracy\t{:.4}", result.accuracy);
    println!("correct\t{}", result.n_correct);
    println!("total\t{}", result.n_total);
    let c = result.confusion;
    println!("confusion\tref+\tref-");
    println!("pred+\t{}\t{}", c[0][0], c[0][1]);
    println!("pred-\t{}\t{}", c[1][0], c[1][1]);
}

fn cmd_evaluate(a: EvalArgs, seed: u64) -> Result<()> {
    require_file(&a.test, "test set")?;
    let test =
        load_labeled_events(&a.test).with_context(|| format!("reading {}", a.test.display()))?;
    let result = match a.baseline {
        Baseline::None => {
            let path = a
                .checkpoint
                .as_deref()
                .context("--checkpoint is required")?;
            require_file(path, "checkpoint")?;
            let model: PolarityModelF64 =
                load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
            if let Some(dump) = &a.dump {
                let scored = score_events(&model, &test)?;
                write_atomic(dump, |w| {
                    scored.iter().try_for_each(|s| write_json_line(w, s))
                })
                .with_context(|| format!("writing {}", dump.display()))?;
            }
            evaluate(&model, &test)?
        }
        Baseline::Random => baseline_random(&test, seed)?,
        Baseline::RandomSeed => {
            let path = a.lexicon.as_deref().context("--lexicon is required")?;
            let lexicon = load_lexicon_with_negation(path, a.negation.as_deref())
                .context("reading lexicon")?;
            baseline_random_seed(&test, &lexicon, seed)?
        }
    };
    if a.baseline != Baseline::None && a.dump.is_some() {
        warn!("--dump applies only to model evaluation");
    }
    print_eval(&result);
    Ok(())
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    require_file(&a.checkpoint, "checkpoint")?;
    let model: PolarityModelF64 = load_checkpoint(&a.checkpoint)
        .with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let stdin = io::stdin().lock();
    let mut out = io::BufWriter::new(io::stdout().lock());
    for line in stdin.lines() {
        let line = line?;
        let tokens = WhitespaceTokenizer.tokenize(&line);
        writeln!(out, "{}\t{line}", model.polarity_tokens(&tokens))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> Result<()> {
    require_file(&a.checkpoint, "checkpoint")?;
    let mut reader = BufReader::new(File::open(&a.checkpoint)?);
    let (header, model) = read_checkpoint::<f64>(&mut reader)
        .with_context(|| format!("loading {}", a.checkpoint.display()))?;
    println!("format_version\t{}", header.version);
    println!("encoder\t{}", header.encoder);
    println!("vocab_size\t{}", header.vocab_size);
    println!("dim\t{}", header.dim);
    println!("parameters\t{}", header.num_params);
    println!("bias\t{}", model.params().bias());
    if let Some(path) = &a.export_text {
        write_atomic(path, |w| export_text(&model, w))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs, seed: u64) -> Result<()> {
    if a.pairs < 2 {
        bail!("--pairs must be at least 2");
    }
    let config = SyntheticConfig {
        n_words: a.words,
        n_cause: a.pairs / 2,
        n_concession: a.pairs - a.pairs / 2,
        noise: a.noise,
        negation_rate: a.negation_rate,
        seed,
        ..Default::default()
    };
    let corpus = SyntheticCorpus::generate(&config);
    let dir = &a.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write_text = |name: &str, text: String| {
        let path = dir.join(name);
        write_atomic(&path, |w| w.write_all(text.as_bytes()))
            .with_context(|| format!("writing {}", path.display()))
    };
    write_text("corpus.txt", corpus.sentences().join("\n") + "\n")?;
    write_text("connectives.tsv", CONNECTIVE_TABLE.to_owned())?;
    write_text("lexicon.tsv", corpus.lexicon.to_text())?;
    write_text("negation.txt", format!("{NEGATION_MARKER}\n"))?;
    let write_events = |name: &str, events: &[LabeledEvent]| {
        let path = dir.join(name);
        write_atomic(&path, |w| write_labeled_events(w, events))
            .with_context(|| format!("writing {}", path.display()))
    };
    write_events("dev.jsonl", &corpus.dev)?;
    write_events("test.jsonl", &corpus.test)?;
    write_events(
        "train.jsonl",
        &corpus.supervised_sample(a.labeled, seed.wrapping_add(1)),
    )?;
    println!("pairs\t{}", corpus.pairs.len());
    println!("seed_words\t{}", corpus.seed_words.len());
    println!("dev\t{}", corpus.dev.len());
    println!("test\t{}", corpus.test.len());
    Ok(())
}
