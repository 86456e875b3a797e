//! Command-line driver: configuration, the on-disk index container and the
//! `index`, `expand`, `search`, `evaluate` and `tune` commands.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus_index::{
    build_ngram_model, ingest, CollectionIndex, CorpusSource, NGramModel, DEFAULT_WINDOW_SIZE,
};
use crate::error::{Error, Result};
use crate::eval::{self, EvalRun, Topic};
use crate::expansion::{ExpandedQuery, Expander, ExpansionConfig, ExpansionTrace, Pattern};
use crate::ga_tuner::{evolve, evolve_per_topic, EvalContext, GAConfig, OperatorRate};
use crate::lexical_kb::{KnowledgeBase, PathSimilarity, DEFAULT_DEPTH};
use crate::linguistics::{NcpLexicon, QueryAnalyzer};
use crate::retrieval::{
    format_run, lm_search, rm_expand, search, QueryBag, RoleWeights, SatScope, SmoothingConfig,
    DEFAULT_MU,
};
use crate::text::{normalize, PipelineConfig, Stopwords};

const INDEX_MAGIC: &[u8; 8] = b"ROLEQEIX";
/// Bumped whenever the serialized layout changes.
pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Plain,
    Trec,
}

/// Which ranking a `search` produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum System {
    /// Role-weighted concept scoring with the configured expansion pattern.
    Roleqe,
    /// Query likelihood over the title's terms.
    Lm,
    /// Relevance-model feedback on top of query likelihood.
    Rm,
}

/// Settings shared by all commands, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub corpus_format: CorpusFormat,
    pub index: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub ncp: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub ngram_counts: Option<PathBuf>,
    pub stemming: bool,
    pub window: usize,
    pub mu: f64,
    pub k_stat: usize,
    pub k_lex: usize,
    pub kb_depth: usize,
    pub max_collection_fraction: f64,
    pub pattern: Pattern,
    pub sat_scope: SatScope,
    pub weights: [f64; 4],
    pub weights_file: Option<PathBuf>,
    pub seed: u64,
    pub depth: usize,
    pub eval_depth: usize,
    pub rm_docs: usize,
    pub rm_terms: usize,
    pub population: usize,
    pub iterations: usize,
    pub crossover: OperatorRate,
    pub mutation: OperatorRate,
    pub early_stop: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ga = GAConfig::default();
        Self {
            corpus: None,
            corpus_format: CorpusFormat::Plain,
            index: None,
            kb: None,
            ncp: None,
            stopwords: None,
            ngram_counts: None,
            stemming: true,
            window: DEFAULT_WINDOW_SIZE,
            mu: DEFAULT_MU,
            k_stat: 5,
            k_lex: 5,
            kb_depth: DEFAULT_DEPTH,
            max_collection_fraction: 0.10,
            pattern: Pattern::None,
            sat_scope: SatScope::Expanded,
            weights: [1.0; 4],
            weights_file: None,
            seed: ga.rng_seed,
            depth: eval::DEFAULT_DEPTH,
            eval_depth: eval::DEFAULT_DEPTH,
            rm_docs: 10,
            rm_terms: 10,
            population: ga.population_size,
            iterations: ga.max_iterations,
            crossover: ga.crossover,
            mutation: ga.mutation,
            early_stop: ga.early_stop,
        }
    }
}

fn parse_num<N: std::str::FromStr>(key: &str, value: &str) -> Result<N> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_rate(key: &str, value: &str) -> Result<OperatorRate> {
    if value.contains('.') {
        Ok(OperatorRate::Probability(parse_num(key, value)?))
    } else {
        Ok(OperatorRate::Events(parse_num(key, value)?))
    }
}

impl RunConfig {
    /// Relative paths are resolved against `base`.
    pub fn parse(text: &str, source: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, n + 1, "expected key = value"))?;
            cfg.set(k.trim(), v.trim(), base)
                .map_err(|e| Error::parse(source, n + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|_| Error::Config(format!("cannot read config {}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || Some(base.join(value));
        match key {
            "corpus" => self.corpus = path(),
            "corpus_format" => {
                self.corpus_format = match value {
                    "plain" => CorpusFormat::Plain,
                    "trec" => CorpusFormat::Trec,
                    _ => {
                        return Err(Error::Config(format!(
                            "corpus_format must be plain or trec, got {value:?}"
                        )))
                    }
                }
            }
            "index" => self.index = path(),
            "kb" => self.kb = path(),
            "ncp" => self.ncp = path(),
            "stopwords" => self.stopwords = path(),
            "ngram_counts" => self.ngram_counts = path(),
            "weights_file" => self.weights_file = path(),
            "stemming" => self.stemming = parse_num(key, value)?,
            "window" => self.window = parse_num(key, value)?,
            "mu" => self.mu = parse_num(key, value)?,
            "k_stat" => self.k_stat = parse_num(key, value)?,
            "k_lex" => self.k_lex = parse_num(key, value)?,
            "kb_depth" => self.kb_depth = parse_num(key, value)?,
            "max_collection_fraction" => self.max_collection_fraction = parse_num(key, value)?,
            "pattern" => self.pattern = value.parse()?,
            "sat_scope" => {
                self.sat_scope = match value {
                    "expanded" => SatScope::Expanded,
                    "original" => SatScope::Original,
                    _ => {
                        return Err(Error::Config(format!(
                            "sat_scope must be expanded or original, got {value:?}"
                        )))
                    }
                }
            }
            "w_coi" => self.weights[0] = parse_num(key, value)?,
            "w_dc" => self.weights[1] = parse_num(key, value)?,
            "w_rc" => self.weights[2] = parse_num(key, value)?,
            "w_ec" => self.weights[3] = parse_num(key, value)?,
            "w_sc" => {
                if parse_num::<f64>(key, value)? != 0.0 {
                    return Err(Error::Config("w_sc is fixed at 0".into()));
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "depth" => self.depth = parse_num(key, value)?,
            "eval_depth" => self.eval_depth = parse_num(key, value)?,
            "rm_docs" => self.rm_docs = parse_num(key, value)?,
            "rm_terms" => self.rm_terms = parse_num(key, value)?,
            "population" => self.population = parse_num(key, value)?,
            "iterations" => self.iterations = parse_num(key, value)?,
            "crossover" => self.crossover = parse_rate(key, value)?,
            "mutation" => self.mutation = parse_rate(key, value)?,
            "early_stop" => {
                self.early_stop = match value {
                    "none" | "0" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let stopwords = match &self.stopwords {
            Some(p) => Stopwords::load(&require(p, "stopwords")?)?,
            None => Stopwords::default(),
        };
        Ok(PipelineConfig {
            stopwords,
            stemming: self.stemming,
        })
    }

    pub fn smoothing(&self) -> Result<SmoothingConfig<f64>> {
        SmoothingConfig::new(self.mu)
    }

    pub fn role_weights(&self) -> Result<RoleWeights<f64>> {
        match &self.weights_file {
            Some(p) => RoleWeights::load(&require(p, "weights_file")?),
            None => {
                let [coi, dc, rc, ec] = self.weights;
                RoleWeights::new(coi, dc, rc, ec)
            }
        }
    }

    pub fn expansion(&self) -> ExpansionConfig {
        ExpansionConfig {
            k_stat: self.k_stat,
            k_lex: self.k_lex,
            depth: self.kb_depth,
            seed: self.seed,
            max_collection_fraction: self.max_collection_fraction,
        }
    }

    pub fn ga(&self) -> GAConfig {
        GAConfig {
            population_size: self.population,
            max_iterations: self.iterations,
            crossover: self.crossover,
            mutation: self.mutation,
            rng_seed: self.seed,
            early_stop: self.early_stop,
            ..GAConfig::default()
        }
    }
}

/// Referenced inputs must exist before a command starts; a missing one is
/// a configuration error.
fn require(path: &Path, what: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path.to_path_buf())
    } else {
        Err(Error::Config(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("no {what} configured")))
}

/// The persisted index: collection statistics plus the n-gram model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexArtifact {
    pub index: CollectionIndex,
    pub model: NGramModel,
}

impl IndexArtifact {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = INDEX_MAGIC.to_vec();
        out.extend_from_slice(&INDEX_FORMAT_VERSION.to_le_bytes());
        bincode::serialize_into(&mut out, self).map_err(|e| Error::Format(e.to_string()))?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != INDEX_MAGIC {
            return Err(Error::Format("not an index file".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != INDEX_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "index format version {version}, this build reads {INDEX_FORMAT_VERSION}"
            )));
        }
        bincode::deserialize(&bytes[12..]).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(require(path, "index")?).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "roleqe",
    version,
    about = "Role-typed query expansion and retrieval"
)]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override a configuration key, as `key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the index and n-gram model from the configured corpus.
    Index {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Where to write the index; defaults to the configured `index`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the expansion audit for a query or every topic of a file.
    Expand {
        #[command(flatten)]
        source: QuerySource,
        #[arg(long)]
        pattern: Option<String>,
    },
    /// Rank documents for every topic and write a TREC run.
    Search {
        #[arg(long)]
        topics: PathBuf,
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Result depth per topic.
        #[arg(short)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "roleqe")]
        system: System,
        #[arg(long)]
        tag: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare runs against baselines and print the CSV report.
    Evaluate {
        #[arg(long)]
        qrels: PathBuf,
        /// Baseline run; the first one is the improvement reference. Repeatable.
        #[arg(long)]
        baseline: Vec<PathBuf>,
        /// Run to compare. Repeatable.
        #[arg(long)]
        run: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune role weights with the genetic search.
    Tune {
        #[arg(long)]
        topics: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long)]
        pattern: Option<String>,
        /// Weights file, or a directory of `<topic>.weights` with `--per-topic`.
        #[arg(long)]
        out: PathBuf,
        /// Per-generation tuning report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        per_topic: bool,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct QuerySource {
    #[arg(long)]
    query: Option<String>,
    #[arg(long)]
    topics: Option<PathBuf>,
}

/// Process exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cwd = PathBuf::from(".");
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got {o:?}")))?;
        cfg.set(k.trim(), v.trim(), &cwd)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Index { corpus, out: dest } => {
            if corpus.is_some() {
                cfg.corpus = corpus;
            }
            let dest = dest
                .or_else(|| cfg.index.clone())
                .ok_or_else(|| Error::Config("no index output path".into()))?;
            let artifact = cmd_index(&cfg)?;
            artifact.save(&dest)?;
            log::info!(
                "indexed {} documents into {}",
                artifact.index.doc_count(),
                dest.display()
            );
        }
        Command::Expand { source, pattern } => {
            if let Some(p) = pattern {
                cfg.pattern = p.parse()?;
            }
            let queries = match (source.query, source.topics) {
                (Some(q), _) => vec![("query".to_string(), q)],
                (None, Some(t)) => titles(&eval::load_topics(&require(&t, "topics")?)?),
                (None, None) => unreachable!("clap enforces a source"),
            };
            let session = Session::open(&cfg)?;
            for (id, title) in queries {
                let trace = session.expand(&title, cfg.pattern)?;
                write_out(
                    &mut out,
                    &format!("#query\t{id}\t{title}\n{}", trace.dump()),
                )?;
            }
        }
        Command::Search {
            topics,
            pattern,
            weights,
            k,
            system,
            tag,
            out: dest,
        } => {
            if let Some(p) = pattern {
                cfg.pattern = p.parse()?;
            }
            if weights.is_some() {
                cfg.weights_file = weights;
            }
            if let Some(k) = k {
                cfg.depth = k;
            }
            let topics = eval::load_topics(&require(&topics, "topics")?)?;
            let tag = tag.unwrap_or_else(|| match system {
                System::Roleqe => format!("roleqe_{}", cfg.pattern),
                System::Lm => "lm".into(),
                System::Rm => "rm".into(),
            });
            let session = Session::open(&cfg)?;
            let run = session.run_topics(&topics, system, &tag)?;
            emit(dest.as_deref(), &mut out, &run)?;
        }
        Command::Evaluate {
            qrels,
            baseline,
            run,
            out: dest,
        } => {
            let csv = cmd_evaluate(&cfg, &qrels, &baseline, &run)?;
            emit(dest.as_deref(), &mut out, &csv)?;
        }
        Command::Tune {
            topics,
            qrels,
            pattern,
            out: dest,
            report,
            per_topic,
        } => {
            if let Some(p) = pattern {
                cfg.pattern = p.parse()?;
            }
            let topics = eval::load_topics(&require(&topics, "topics")?)?;
            let (qrels, warnings) = eval::load_qrels(&require(&qrels, "qrels")?)?;
            warnings.iter().for_each(|w| log::warn!("{w}"));
            let session = Session::open(&cfg)?;
            let ctx = session.eval_context(&topics, &qrels)?;
            if per_topic {
                fs::create_dir_all(&dest).map_err(|e| Error::io(&dest, e))?;
                let mut text = String::new();
                for (topic, outcome) in evolve_per_topic(&cfg.ga(), &ctx)? {
                    let path = dest.join(format!("{topic}.weights"));
                    fs::write(&path, outcome.best_weights().to_kv_string())
                        .map_err(|e| Error::io(&path, e))?;
                    for line in outcome.report().lines() {
                        text.push_str(&format!("{topic}\t{line}\n"));
                    }
                }
                if let Some(r) = report {
                    fs::write(&r, text).map_err(|e| Error::io(&r, e))?;
                }
            } else {
                let outcome = evolve(&cfg.ga(), &ctx)?;
                fs::write(&dest, outcome.best_weights().to_kv_string())
                    .map_err(|e| Error::io(&dest, e))?;
                if let Some(r) = report {
                    fs::write(&r, outcome.report()).map_err(|e| Error::io(&r, e))?;
                }
                log::info!("best training MAP {:.6}", outcome.best_map());
            }
        }
    }
    Ok(())
}

fn write_out(out: &mut impl std::io::Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn emit(dest: Option<&Path>, out: &mut impl std::io::Write, text: &str) -> Result<()> {
    match dest {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => write_out(out, text),
    }
}

fn titles(topics: &[Topic]) -> Vec<(String, String)> {
    topics
        .iter()
        .map(|t| (t.number.clone(), t.title.clone()))
        .collect()
}

/// Ingest the configured corpus and build its n-gram model, or load the
/// configured external counts.
pub fn cmd_index(cfg: &RunConfig) -> Result<IndexArtifact> {
    let corpus = require(required(&cfg.corpus, "corpus")?, "corpus")?;
    let pipeline = cfg.pipeline()?;
    let source = match cfg.corpus_format {
        CorpusFormat::Plain => CorpusSource::PlainDir(corpus),
        CorpusFormat::Trec => CorpusSource::Trec(corpus),
    };
    let outcome = ingest(&source, pipeline)?;
    for (path, msg) in &outcome.file_errors {
        log::warn!("skipped {}: {msg}", path.display());
    }
    let model = match &cfg.ngram_counts {
        Some(p) => {
            NGramModel::load_counts_file(&require(p, "ngram_counts")?, outcome.index.pipeline())?
        }
        None => build_ngram_model(&outcome.index, cfg.window)?,
    };
    Ok(IndexArtifact {
        index: outcome.index,
        model,
    })
}

/// Loaded resources for query-time commands.
pub struct Session {
    pub cfg: RunConfig,
    pub artifact: IndexArtifact,
    pub kb: Option<KnowledgeBase>,
    pub analyzer: QueryAnalyzer,
}

impl Session {
    pub fn open(cfg: &RunConfig) -> Result<Self> {
        let artifact = IndexArtifact::load(required(&cfg.index, "index")?)?;
        let kb = match &cfg.kb {
            Some(p) => Some(KnowledgeBase::load(&require(p, "kb")?)?),
            None => None,
        };
        let ncp = match &cfg.ncp {
            Some(p) => NcpLexicon::load(&require(p, "ncp")?)?,
            None => NcpLexicon::builtin(),
        };
        let analyzer = QueryAnalyzer::new(artifact.index.pipeline().clone(), ncp);
        Self::from_parts(cfg.clone(), artifact, kb, analyzer)
    }

    pub fn from_parts(
        cfg: RunConfig,
        artifact: IndexArtifact,
        kb: Option<KnowledgeBase>,
        analyzer: QueryAnalyzer,
    ) -> Result<Self> {
        if cfg.pattern != Pattern::None && kb.is_none() {
            return Err(Error::Config(format!("pattern {} needs a kb", cfg.pattern)));
        }
        cfg.role_weights()?;
        cfg.smoothing()?;
        Ok(Self {
            cfg,
            artifact,
            kb,
            analyzer,
        })
    }

    pub fn expand(&self, query: &str, pattern: Pattern) -> Result<ExpansionTrace> {
        let index = &self.artifact.index;
        let cq = self.analyzer.analyze(query, Some(index))?;
        match &self.kb {
            Some(kb) => Expander {
                index,
                model: &self.artifact.model,
                kb,
                measure: &PathSimilarity,
                config: self.cfg.expansion(),
            }
            .expand(&cq, pattern),
            None if pattern == Pattern::None => Ok(ExpansionTrace {
                base_pairs: Vec::new(),
                stat_pool: crate::expansion::TermPool::empty(
                    crate::expansion::PoolKind::Statistical,
                ),
                lex_pool: None,
                expanded: ExpandedQuery::unexpanded(cq.clone()),
                query: cq,
            }),
            None => Err(Error::Config(format!("pattern {pattern} needs a kb"))),
        }
    }

    pub fn query_bag(&self, title: &str) -> Result<QueryBag> {
        let trace = self.expand(title, self.cfg.pattern)?;
        QueryBag::from_expanded(&trace.expanded, self.cfg.sat_scope)
    }

    /// A TREC run over all topics. Topics with no candidate documents
    /// contribute no lines.
    pub fn run_topics(&self, topics: &[Topic], system: System, tag: &str) -> Result<String> {
        let index = &self.artifact.index;
        let smoothing = self.cfg.smoothing()?;
        let weights = self.cfg.role_weights()?;
        let mut text = String::new();
        for topic in topics {
            let terms = normalize(&topic.title, index.pipeline());
            let ranked = match system {
                System::Roleqe => search(
                    &self.query_bag(&topic.title)?,
                    index,
                    &weights,
                    &smoothing,
                    self.cfg.depth,
                )?,
                _ if terms.is_empty() => Vec::new(),
                System::Lm => lm_search(&terms, index, &smoothing, self.cfg.depth)?,
                System::Rm => {
                    let expanded = rm_expand(
                        &terms,
                        index,
                        &smoothing,
                        self.cfg.rm_docs,
                        self.cfg.rm_terms,
                    )?;
                    lm_search(&expanded, index, &smoothing, self.cfg.depth)?
                }
            };
            if ranked.is_empty() {
                log::warn!("topic {}: no candidate documents", topic.number);
            }
            text.push_str(&format_run(&topic.number, &ranked, tag));
        }
        Ok(text)
    }

    pub fn eval_context(&self, topics: &[Topic], qrels: &eval::Qrels) -> Result<EvalContext<f64>> {
        let queries = topics
            .iter()
            .map(|t| Ok((t.number.clone(), self.query_bag(&t.title)?)))
            .collect::<Result<Vec<_>>>()?;
        EvalContext::build(
            &queries,
            qrels,
            &self.artifact.index,
            &self.cfg.smoothing()?,
            self.cfg.eval_depth,
        )
    }
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    qrels: &Path,
    baselines: &[PathBuf],
    runs: &[PathBuf],
) -> Result<String> {
    let (qrels, warnings) = eval::load_qrels(&require(qrels, "qrels")?)?;
    warnings.iter().for_each(|w| log::warn!("{w}"));
    let load = |paths: &[PathBuf]| -> Result<Vec<EvalRun<f64>>> {
        paths
            .iter()
            .map(|p| {
                let run = eval::load_run(&require(p, "run")?)?;
                let (ev, warnings) = eval::evaluate_run(&run, &qrels, cfg.eval_depth)?;
                warnings.iter().for_each(|w| log::warn!("{w}"));
                Ok(ev)
            })
            .collect()
    };
    eval::report(&load(runs)?, &load(baselines)?)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = RunConfig::parse(
            "# comment\ncorpus = docs\nmu = 500\npattern = IE2\nw_dc = 0.25\ncrossover = 0.8\nmutation = 10\n",
            "c",
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.corpus, Some(PathBuf::from("/base/docs")));
        assert_eq!(cfg.mu, 500.0);
        assert_eq!(cfg.pattern, Pattern::Ie2);
        assert_eq!(cfg.weights[1], 0.25);
        assert_eq!(cfg.crossover, OperatorRate::Probability(0.8));
        assert_eq!(cfg.mutation, OperatorRate::Events(10));
        let err = RunConfig::parse("pattern = IE9\n", "c", Path::new(".")).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(RunConfig::parse("colour = red\n", "c", Path::new(".")).is_err());
        assert!(RunConfig::parse("w_sc = 0.3\n", "c", Path::new(".")).is_err());
    }

    #[test]
    fn index_container_checks_version() {
        let index =
            CollectionIndex::from_texts([("a", "alpha beta gamma")], PipelineConfig::default())
                .unwrap();
        let model = build_ngram_model(&index, 2).unwrap();
        let artifact = IndexArtifact { index, model };
        let bytes = artifact.to_bytes().unwrap();
        assert_eq!(IndexArtifact::from_bytes(&bytes).unwrap(), artifact);
        let mut stale = bytes.clone();
        stale[8] = 99;
        assert!(matches!(
            IndexArtifact::from_bytes(&stale),
            Err(Error::Format(_))
        ));
        assert!(IndexArtifact::from_bytes(b"garbage").is_err());
    }

    #[test]
    fn missing_inputs_are_config_errors() {
        let cfg = RunConfig {
            corpus: Some("/nonexistent/corpus".into()),
            ..Default::default()
        };
        assert_eq!(exit_code(&cmd_index(&cfg).unwrap_err()), 2);
        let err = cmd_evaluate(&cfg, Path::new("/nonexistent/qrels"), &[], &[]).unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }
}
