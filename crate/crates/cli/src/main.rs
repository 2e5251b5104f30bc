//! `softmatcha`: grep-like soft phrase search from the command line.
//!
//! Exit status: 0 when something matched, 1 when nothing did, 2 on error.

mod output;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use softmatcha_client::SoftMatchaClient;
use softmatcha_core::api::{InfoResponse, RankResponse};
use softmatcha_core::bench::bench_query;
use softmatcha_core::oracle::brute_force_match;
use softmatcha_core::{
    score_documents, tokenize_corpus, Bm25Params, DocumentMode, EmbeddingTable, Engine, IndexFile,
    Normalizer, SearchRequest, SearchResponse, Threshold, DEFAULT_ALPHA,
};

#[derive(Parser)]
#[command(name = "softmatcha", version, about = "Soft phrase search with word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize a corpus and write its inverted index.
    Index(IndexArgs),
    /// Find every soft occurrence of a phrase.
    Search(SearchArgs),
    /// Rank documents against patterns with soft BM25.
    Rank(RankArgs),
    /// Benchmark a query, optionally on document prefixes of the corpus.
    Bench(BenchArgs),
    /// Print corpus and embedding sizes.
    Info(SourceArgs),
    /// Brute-force matcher used to cross-check `search`.
    #[command(hide = true)]
    OracleMatch(OracleArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Corpus text file, one document per line.
    corpus: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Overwrite an existing output file.
    #[arg(long)]
    force: bool,
    /// Tokens are already space separated; keep them verbatim.
    #[arg(long)]
    pretokenized: bool,
    /// Documents are separated by blank lines instead of newlines.
    #[arg(long)]
    blank_line_docs: bool,
}

#[derive(Args)]
struct SourceArgs {
    /// Index written by `softmatcha index`.
    #[arg(long, requires = "embeddings", conflicts_with = "server")]
    index: Option<PathBuf>,
    /// Word vectors in word2vec text format, optionally gzipped.
    #[arg(long, requires = "index")]
    embeddings: Option<PathBuf>,
    /// Query a running softmatcha-server instead of local files.
    #[arg(long)]
    server: Option<String>,
}

#[derive(Args)]
struct SearchArgs {
    query: String,
    #[command(flatten)]
    source: SourceArgs,
    /// Cosine threshold in (0, 1].
    #[arg(short, long)]
    alpha: Option<Threshold>,
    #[arg(short = 'n', long)]
    limit: Option<usize>,
    #[arg(long, default_value_t = 0)]
    offset: usize,
    /// Context tokens shown on each side.
    #[arg(short = 'C', long, default_value_t = softmatcha_core::engine::DEFAULT_CONTEXT)]
    context: usize,
    /// Emit one JSON object per match, then a summary object.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RankArgs {
    /// File with one pattern per line.
    patterns: PathBuf,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(short, long)]
    alpha: Option<Threshold>,
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
    #[arg(short = 'n', long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    query: String,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(short, long, default_value_t = Threshold::default())]
    alpha: Threshold,
    #[arg(long, default_value_t = 10)]
    repeat: usize,
    /// Comma separated document fractions, e.g. 0.01,0.1,1.
    #[arg(long, value_delimiter = ',')]
    subsample: Vec<f64>,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct OracleArgs {
    query: String,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(short, long, default_value_t = Threshold::default())]
    alpha: Threshold,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SOFTMATCHA_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .with_context(|| format!("SOFTMATCHA_THREADS must be a thread count, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

/// Returns whether anything was found.
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Index(args) => index(args).map(|()| true),
        Command::Search(args) => search(args),
        Command::Rank(args) => rank(args),
        Command::Bench(args) => bench(args).map(|()| true),
        Command::Info(args) => info(args).map(|()| true),
        Command::OracleMatch(args) => oracle_match(args),
    }
}

fn index(args: IndexArgs) -> Result<()> {
    if args.output.exists() && !args.force {
        bail!("{} exists; pass --force to overwrite", args.output.display());
    }
    let start = Instant::now();
    let norm = if args.pretokenized {
        Normalizer::pretokenized()
    } else {
        Normalizer::default()
    };
    let mode = if args.blank_line_docs {
        DocumentMode::BlankLine
    } else {
        DocumentMode::Line
    };
    let file = File::open(&args.corpus).with_context(|| format!("cannot open {}", args.corpus.display()))?;
    let (mut corpus, vocab) = tokenize_corpus(BufReader::new(file), &norm, mode)
        .with_context(|| format!("cannot read {}", args.corpus.display()))?;
    corpus.source_name = args
        .corpus
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = IndexFile::build(&corpus, vocab, norm);
    file.save_path(&args.output)
        .with_context(|| format!("cannot write {}", args.output.display()))?;
    println!(
        "N={} L={} docs={} in {:.2}s -> {}",
        file.corpus_len(),
        file.vocab.len(),
        file.doc_count(),
        start.elapsed().as_secs_f64(),
        args.output.display()
    );
    Ok(())
}

fn load_engine(index: &Path, embeddings: &Path) -> Result<Engine> {
    let file = IndexFile::load_path(index).with_context(|| format!("cannot load index {}", index.display()))?;
    let table = EmbeddingTable::load_path(embeddings)
        .with_context(|| format!("cannot load embeddings {}", embeddings.display()))?;
    Ok(Engine::from_index_file(file, table))
}

enum Backend {
    Local(Engine),
    Remote(SoftMatchaClient, tokio::runtime::Runtime),
}

impl Backend {
    fn open(source: &SourceArgs) -> Result<Self> {
        match (&source.server, &source.index, &source.embeddings) {
            (Some(url), _, _) => {
                let rt = tokio::runtime::Runtime::new()?;
                Ok(Backend::Remote(SoftMatchaClient::new(url)?, rt))
            }
            (None, Some(index), Some(embeddings)) => Ok(Backend::Local(load_engine(index, embeddings)?)),
            _ => bail!("give either --index and --embeddings, or --server"),
        }
    }

    fn info(&self) -> Result<InfoResponse> {
        Ok(match self {
            Backend::Local(e) => InfoResponse {
                corpus_name: e.corpus().source_name.clone(),
                n: e.corpus().len(),
                l: e.vocab().len(),
                doc_count: e.corpus().doc_count(),
                embedding_dim: e.embeddings().dim(),
                default_alpha: DEFAULT_ALPHA,
            },
            Backend::Remote(c, rt) => rt.block_on(c.info())?,
        })
    }

    fn default_alpha(&self) -> Result<Threshold> {
        match self {
            Backend::Local(_) => Ok(Threshold::default()),
            Backend::Remote(..) => Ok(Threshold::new(self.info()?.default_alpha)?),
        }
    }

    fn search(&self, req: &SearchRequest) -> Result<SearchResponse> {
        Ok(match self {
            Backend::Local(e) => e.search(req)?,
            Backend::Remote(c, rt) => rt.block_on(c.search(req))?,
        })
    }

    fn rank(&self, patterns: &[String], alpha: Threshold, params: Bm25Params, limit: Option<usize>) -> Result<RankResponse> {
        Ok(match self {
            Backend::Local(e) => {
                let mut r = score_documents(e, patterns, alpha, params)?;
                if let Some(limit) = limit {
                    r.results.truncate(limit);
                }
                RankResponse {
                    results: r.results,
                    doc_count: e.corpus().doc_count(),
                    oov_words: r.oov_words,
                }
            }
            Backend::Remote(c, rt) => rt.block_on(c.rank(patterns, alpha, params, limit))?,
        })
    }
}

fn search(args: SearchArgs) -> Result<bool> {
    let backend = Backend::open(&args.source)?;
    let alpha = match args.alpha {
        Some(a) => a,
        None => backend.default_alpha()?,
    };
    let mut req = SearchRequest::new(args.query, alpha)
        .offset(args.offset)
        .context(args.context);
    if let Some(limit) = args.limit {
        req = req.limit(limit);
    }
    let resp = backend.search(&req)?;
    let mut out = BufWriter::new(io::stdout().lock());
    if args.json {
        output::search_json(&mut out, &resp)?;
    } else {
        output::search_human(&mut out, &resp)?;
        if !resp.oov_words.is_empty() {
            eprintln!("no embedding for: {}", resp.oov_words.join(", "));
        }
    }
    out.flush()?;
    Ok(resp.total_hits > 0)
}

fn read_patterns(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut patterns = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            patterns.push(line);
        }
    }
    if patterns.is_empty() {
        bail!("{} contains no patterns", path.display());
    }
    Ok(patterns)
}

fn rank(args: RankArgs) -> Result<bool> {
    let patterns = read_patterns(&args.patterns)?;
    let params = Bm25Params::new(args.k1, args.b)?;
    let backend = Backend::open(&args.source)?;
    let alpha = match args.alpha {
        Some(a) => a,
        None => backend.default_alpha()?,
    };
    let resp = backend.rank(&patterns, alpha, params, args.limit)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for doc in &resp.results {
        serde_json::to_writer(&mut out, doc)?;
        writeln!(out)?;
    }
    out.flush()?;
    if !resp.oov_words.is_empty() {
        eprintln!("no embedding for: {}", resp.oov_words.join(", "));
    }
    Ok(resp.results.iter().any(|d| d.score > 0.0))
}

fn info(args: SourceArgs) -> Result<()> {
    let info = Backend::open(&args)?.info()?;
    println!("{}", serde_json::to_string_pretty(&info)?);
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    if args.repeat == 0 {
        bail!("--repeat must be at least 1");
    }
    let engine = load_engine(&args.index, &args.embeddings)?;
    let pattern = engine.parse_query(&args.query);
    if pattern.is_empty() {
        bail!("query is empty after normalization");
    }
    let fractions = if args.subsample.is_empty() { vec![1.0] } else { args.subsample };
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        bail!("subsample fractions must lie in (0, 1], got {f}");
    }
    let mut out = BufWriter::new(io::stdout().lock());
    output::bench_header(&mut out, args.csv)?;
    for f in fractions {
        let sub;
        let e = if f == 1.0 {
            &engine
        } else {
            sub = engine.subsample(f);
            &sub
        };
        let report = bench_query(e, &pattern, args.alpha, args.repeat);
        output::bench_row(&mut out, args.csv, f, &report)?;
    }
    out.flush()?;
    Ok(())
}

fn oracle_match(args: OracleArgs) -> Result<bool> {
    let file = IndexFile::load_path(&args.index)
        .with_context(|| format!("cannot load index {}", args.index.display()))?;
    let table = EmbeddingTable::load_path(&args.embeddings)
        .with_context(|| format!("cannot load embeddings {}", args.embeddings.display()))?;
    let pattern = file.normalizer.tokenize(&args.query);
    if pattern.is_empty() {
        bail!("query is empty after normalization");
    }
    let refs: Vec<&str> = pattern.iter().map(String::as_str).collect();
    let corpus = file.corpus();
    let hits = brute_force_match(&corpus, &file.vocab, &table, &refs, args.alpha.get());
    let mut out = BufWriter::new(io::stdout().lock());
    for &start in &hits {
        let doc = corpus.doc_of(start);
        writeln!(out, "{}:{}", doc, start - corpus.doc_offsets[doc])?;
    }
    out.flush()?;
    Ok(!hits.is_empty())
}
