//! Command-line front end: `annotate`, `train`, `retrofit`, `eval`, `nearest`, `synth`.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on a data error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{build_vocabulary, tokenize_documents, EncodedCorpus, PhraseTable};
use crate::error::{read_file, Error, Result};
use crate::eval::{evaluate, nearest_neighbors, EvalPairSet};
use crate::io::{write_vectors, VectorSet};
use crate::knowledge::{
    assign_annotations, derive_predicates, render_annotated_text, AnnotationMap, KnowledgeGraph,
};
use crate::model::OutputKind;
use crate::retrofit::{retrofit, RetrofitGraph, DEFAULT_ITERATIONS};
use crate::synthetic::{generate, run_benchmark, SyntheticParams};
use crate::train::{Dis2VecParams, Mode, TrainConfig, Trainer};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "annembed",
    version,
    about = "Word and annotation embeddings from domain text and knowledge graphs"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Compile a knowledge graph into per-token annotations.
    Annotate(AnnotateArgs),
    /// Train embeddings on a corpus.
    Train(TrainArgs),
    /// Pull vectors toward their neighbours in a relation graph.
    Retrofit(RetrofitArgs),
    /// Score related pairs by normalized mean rank.
    Eval(EvalArgs),
    /// List the most similar tokens.
    Nearest(NearestArgs),
    /// Write the synthetic alias corpus, or run the JWAP vs Skip-Gram benchmark on it.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
struct CorpusArgs {
    /// Text corpus, one document per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Phrase table: `surface phrase<TAB>merged_token` per line.
    #[arg(long)]
    phrases: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_count: u64,
}

#[derive(Debug, Args, Serialize)]
struct AnnotateArgs {
    /// `subject<TAB>relation<TAB>object` triples.
    #[arg(long)]
    triples: PathBuf,
    /// `node<TAB>category` rows.
    #[arg(long)]
    node_types: Option<PathBuf>,
    /// Domain vocabulary, one concept per line.
    #[arg(long)]
    domain_vocab: Option<PathBuf>,
    /// Restrict annotations to this corpus's vocabulary and allow --render.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, requires = "corpus")]
    phrases: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_count: u64,
    /// Annotation TSV to write.
    #[arg(long, short)]
    output: PathBuf,
    /// Also write the predicate-argument structures, one per line.
    #[arg(long)]
    predicates: Option<PathBuf>,
    /// Also write the corpus with annotations inlined as `token[a1,a2]`.
    #[arg(long, requires = "corpus")]
    render: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Cbow,
    Sg,
    Aawp,
    Jwap,
    Dm,
    Dbow,
    Dis2vec,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Cbow => Mode::Cbow,
            ModeArg::Sg => Mode::Sg,
            ModeArg::Aawp => Mode::Aawp,
            ModeArg::Jwap => Mode::Jwap,
            ModeArg::Dm => Mode::Dm,
            ModeArg::Dbow => Mode::Dbow,
            ModeArg::Dis2vec => Mode::Dis2vec,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OutputArg {
    Hs,
    Ns,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Annotation TSV produced by `annotate`.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Domain vocabulary for dis2vec, one term per line.
    #[arg(long)]
    domain_vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Jwap)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = OutputArg::Hs)]
    output_layer: OutputArg,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    dim: u64,
    /// Maximum context offset on each side.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    window: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: u64,
    #[arg(long, default_value_t = 0.025)]
    lr: f64,
    /// Defaults to lr * 1e-4.
    #[arg(long)]
    min_lr: Option<f64>,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    /// Frequent-word subsampling threshold (off by default).
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pi_s: f64,
    #[arg(long, default_value_t = 0.5)]
    pi_o: f64,
    /// Smoothing exponent of the dis2vec context distributions.
    #[arg(long, default_value_t = 0.75)]
    dis2vec_alpha: f64,
    /// Sampled words per position in dbow.
    #[arg(long, default_value_t = 1)]
    dbow_samples: usize,
    #[arg(long, default_value_t = crate::model::DEFAULT_TABLE_SIZE)]
    table_size: usize,
    /// Word vectors to write (`.bin` for binary).
    #[arg(long)]
    output: PathBuf,
    /// Annotation vectors to write; defaults to `<output>.annotations` with the same extension.
    #[arg(long)]
    output_annotations: Option<PathBuf>,
    /// Document vectors to write (dm and dbow).
    #[arg(long)]
    output_documents: Option<PathBuf>,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            mode: self.mode.into(),
            output: match self.output_layer {
                OutputArg::Hs => OutputKind::Hs,
                OutputArg::Ns => OutputKind::Ns,
            },
            dim: self.dim as usize,
            window: self.window as usize,
            epochs: self.epochs as usize,
            lr0: self.lr,
            min_lr: self.min_lr.unwrap_or(self.lr * 1e-4),
            negatives: self.negatives,
            seed: self.seed,
            workers: self.workers as usize,
            subsample: self.subsample,
            dis2vec: Dis2VecParams {
                pi_s: self.pi_s,
                pi_o: self.pi_o,
                alpha: self.dis2vec_alpha,
            },
            dbow_samples: self.dbow_samples,
            table_size: self.table_size,
        }
    }

    fn annotations_path(&self) -> PathBuf {
        self.output_annotations.clone().unwrap_or_else(|| {
            let stem = self
                .output
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy();
            let name = match self.output.extension() {
                Some(ext) => format!("{stem}.annotations.{}", ext.to_string_lossy()),
                None => format!("{stem}.annotations"),
            };
            self.output.with_file_name(name)
        })
    }
}

#[derive(Debug, Args, Serialize)]
struct RetrofitArgs {
    /// Base vectors.
    #[arg(long)]
    vectors: PathBuf,
    /// Edge list `word<TAB>word`.
    #[arg(
        long,
        required_unless_present = "annotations",
        conflicts_with = "annotations"
    )]
    graph: Option<PathBuf>,
    /// Annotation TSV; tokens sharing an annotation become neighbours.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,
    /// Weight of each vertex's original vector.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    vectors: PathBuf,
    /// `token<TAB>token` pairs.
    #[arg(long)]
    pairs: PathBuf,
    /// Candidate universe, one token per line.
    #[arg(long)]
    universe: Option<PathBuf>,
    /// Annotation TSV; without --universe, tokens annotated `Voc` form the universe.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct NearestArgs {
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long)]
    token: String,
    #[arg(short, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Only consider tokens listed in this file.
    #[arg(long)]
    universe: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    /// Directory for corpus.txt, annotations.tsv, pairs.tsv and universe.txt.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Train JWAP and Skip-Gram on the corpus and print the comparison as JSON.
    #[arg(long)]
    benchmark: bool,
    /// Training seeds 1..=N for the benchmark.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Corpus generator seed.
    #[arg(long, default_value_t = SyntheticParams::default().seed)]
    corpus_seed: u64,
}

/// A failure mapped to its exit status.
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parse `argv` (program name first) and run the subcommand.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    let _ = writeln!(
        stderr,
        "config: {}",
        serde_json::to_string(&cli.command).expect("arguments serialize")
    );
    let result = match &cli.command {
        Command::Annotate(a) => annotate(a, stderr),
        Command::Train(a) => train_cmd(a, stderr),
        Command::Retrofit(a) => retrofit_cmd(a, stderr),
        Command::Eval(a) => eval_cmd(a, stdout),
        Command::Nearest(a) => nearest_cmd(a, stdout),
        Command::Synth(a) => synth_cmd(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_phrases(path: Option<&PathBuf>) -> Result<Option<PhraseTable>> {
    path.map(|p| PhraseTable::from_file(p)).transpose()
}

fn annotate(args: &AnnotateArgs, stderr: &mut dyn Write) -> Outcome {
    let graph = KnowledgeGraph::from_files(
        &args.triples,
        args.node_types.as_deref(),
        args.domain_vocab.as_deref(),
    )?;
    let pas = derive_predicates(&graph);
    let documents = match &args.corpus {
        Some(path) => {
            let phrases = load_phrases(args.phrases.as_ref())?;
            Some(tokenize_documents(&read_file(path)?, phrases.as_ref()))
        }
        None => None,
    };
    let vocab = match &documents {
        Some(docs) => Some(
            build_vocabulary(docs, args.min_count)
                .map_err(|e| Error::in_file(args.corpus.as_ref().unwrap(), e))?,
        ),
        None => None,
    };
    let map = assign_annotations(&pas, vocab.as_ref());
    if !map.skipped().is_empty() {
        log::warn!(
            "{} predicate arguments are not in the corpus vocabulary",
            map.skipped().len()
        );
    }
    write_file(&args.output, &map.to_tsv())?;
    if let Some(p) = &args.predicates {
        write_file(p, &pas.render())?;
    }
    if let (Some(p), Some(docs)) = (&args.render, &documents) {
        write_file(p, &render_annotated_text(docs, &map))?;
    }
    let _ = writeln!(
        stderr,
        "{} predicates, {} annotated tokens",
        pas.len(),
        map.tokens().count()
    );
    Ok(())
}

fn read_terms(path: &Path) -> Result<Vec<String>> {
    let mut g = KnowledgeGraph::new();
    g.load_domain_vocabulary(&read_file(path)?)
        .map_err(|e| Error::in_file(path, e))?;
    Ok(g.domain_vocabulary().map(str::to_owned).collect())
}

fn train_cmd(args: &TrainArgs, stderr: &mut dyn Write) -> Outcome {
    let config = args.config();
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let phrases = load_phrases(args.corpus.phrases.as_ref())?;
    let mut corpus =
        EncodedCorpus::from_file(&args.corpus.corpus, phrases.as_ref(), args.corpus.min_count)?;
    if let Some(p) = &args.annotations {
        let map = AnnotationMap::from_file(p)?;
        corpus.set_annotations(map.resolve(corpus.vocab()));
    }
    let _ = writeln!(
        stderr,
        "resolved: {}",
        serde_json::to_string(&config).expect("config serializes")
    );
    let mut trainer = Trainer::new(&corpus, config)?;
    if let Some(p) = &args.domain_vocab {
        trainer = trainer.with_domain_vocabulary(read_terms(p)?);
    }
    trainer.run();
    let annotation_names = trainer.annotations().names().to_vec();
    let model = trainer.into_model();
    if !model.is_finite() {
        return Err(
            Error::Invalid("training diverged (non-finite parameters); lower --lr".into()).into(),
        );
    }
    let surfaces: Vec<&str> = corpus
        .vocab()
        .entries()
        .iter()
        .map(|e| e.surface.as_str())
        .collect();
    let words = VectorSet::from_matrix(&surfaces, &model.words)?;
    let annotations = VectorSet::from_matrix(&annotation_names, &model.annotations)?;
    write_vectors(&words, &annotations, &args.output, &args.annotations_path())?;
    if let Some(p) = &args.output_documents {
        let ids: Vec<String> = (0..model.documents.rows())
            .map(|i| format!("doc{i}"))
            .collect();
        VectorSet::from_matrix(&ids, &model.documents)?.write(p)?;
    }
    let _ = writeln!(
        stderr,
        "{} words, {} annotations, {} tokens",
        words.len(),
        annotations.len(),
        corpus.num_tokens()
    );
    Ok(())
}

fn retrofit_cmd(args: &RetrofitArgs, stderr: &mut dyn Write) -> Outcome {
    if args.alpha.is_nan() || args.alpha < 0.0 {
        return Err(Failure::Usage("--alpha must be non-negative".into()));
    }
    let vectors = VectorSet::read(&args.vectors)?;
    let mut graph = match (&args.graph, &args.annotations) {
        (Some(p), _) => RetrofitGraph::from_edge_file(p)?,
        (None, Some(p)) => RetrofitGraph::from_annotations(&AnnotationMap::from_file(p)?),
        (None, None) => unreachable!("clap requires one relation source"),
    };
    graph.set_all_alpha(args.alpha);
    let out = retrofit(&vectors, &graph, args.iterations as usize)?;
    out.write(&args.output)?;
    let _ = writeln!(
        stderr,
        "{} vertices, {} edges, {} iterations",
        graph.vertices().len(),
        graph.num_edges(),
        args.iterations
    );
    Ok(())
}

fn eval_cmd(args: &EvalArgs, stdout: &mut dyn Write) -> Outcome {
    let vectors = VectorSet::read(&args.vectors)?;
    let pairs = EvalPairSet::parse_pairs(&read_file(&args.pairs)?)
        .map_err(|e| Error::in_file(&args.pairs, e))?;
    for (a, b) in &pairs {
        for t in [a, b] {
            if vectors.get(t).is_none() {
                return Err(Error::UnknownToken(t.clone()).into());
            }
        }
    }
    let universe = match (&args.universe, &args.annotations) {
        (Some(p), _) => EvalPairSet::parse_universe(&read_file(p)?),
        (None, Some(p)) => AnnotationMap::from_file(p)?
            .carriers("Voc")
            .into_iter()
            .map(str::to_owned)
            .collect(),
        (None, None) => {
            return Err(Failure::Usage(
                "eval needs --universe or --annotations".into(),
            ))
        }
    };
    let set = EvalPairSet::new(universe, pairs)?;
    let report = evaluate(&set, &vectors)?;
    let text = match args.format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Json => report.to_json() + "\n",
    };
    match &args.output {
        Some(p) => write_file(p, &text)?,
        None => {
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    Ok(())
}

fn nearest_cmd(args: &NearestArgs, stdout: &mut dyn Write) -> Outcome {
    let vectors = VectorSet::read(&args.vectors)?;
    let restrict = match &args.universe {
        Some(p) => Some(EvalPairSet::parse_universe(&read_file(p)?)),
        None => None,
    };
    for (token, cos) in
        nearest_neighbors(&args.token, args.k as usize, &vectors, restrict.as_deref())?
    {
        let _ = writeln!(stdout, "{token}\t{cos:.6}");
    }
    Ok(())
}

fn synth_cmd(args: &SynthArgs, stdout: &mut dyn Write) -> Outcome {
    if args.output_dir.is_none() && !args.benchmark {
        return Err(Failure::Usage(
            "synth needs --output-dir and/or --benchmark".into(),
        ));
    }
    let bench = generate(&SyntheticParams {
        seed: args.corpus_seed,
        ..SyntheticParams::default()
    });
    if let Some(dir) = &args.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("corpus.txt"), &bench.text)?;
        write_file(&dir.join("annotations.tsv"), &bench.annotations.to_tsv())?;
        let pairs: String = bench
            .pairs
            .pairs()
            .iter()
            .map(|(a, b)| format!("{a}\t{b}\n"))
            .collect();
        write_file(&dir.join("pairs.tsv"), &pairs)?;
        let universe: String = bench
            .pairs
            .universe()
            .iter()
            .map(|t| format!("{t}\n"))
            .collect();
        write_file(&dir.join("universe.txt"), &universe)?;
    }
    if args.benchmark {
        let seeds: Vec<u64> = (1..=args.seeds).collect();
        let result = run_benchmark(&bench, &seeds)?;
        let _ = writeln!(
            stdout,
            "{}",
            serde_json::json!({
                "mean_jwap": result.mean_jwap(),
                "mean_sg": result.mean_sg(),
                "relative_improvement": result.relative_improvement(),
                "runs": result,
            })
        );
    }
    Ok(())
}
