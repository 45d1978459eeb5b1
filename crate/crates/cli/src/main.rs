use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use evotree::corpus::Corpus;
use evotree::eval::{self, MetricsReport, MissingTargets};
use evotree::graph::TheTree;
use evotree::ingest::{self, references::Style, IngestOptions};
use evotree::oracle::{Backend, Fixtures, OracleConfig, OracleSession};
use evotree::ranli::{self, RanliConfig};
use evotree::retrospect::{self, Ranking, RetroQuery};
use evotree::search::{self, SearchConfig};
use serde::Deserialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "evotree",
    version,
    about = "Build, query and evaluate technology-evolution trees"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for the search and the mock oracle.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    oracle: Option<OracleKind>,
    /// JSON file of scripted mock-oracle answers.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// JSON file with optional `search`, `ranli`, `oracle` and `retrospect` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Mock,
    Remote,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Auto,
    Ieee,
    Apa,
}

#[derive(Clone, Copy, ValueEnum)]
enum RankingArg {
    TerminalSimilarity,
    CumulativeImportance,
}

#[derive(Subcommand)]
enum Command {
    /// Parse survey texts into a corpus JSONL file.
    Ingest {
        /// Directory of .txt/.md survey files.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        style: StyleArg,
        #[arg(long)]
        min_tokens: Option<usize>,
    },
    /// Attach importance scores to every paper of a corpus.
    Score {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        topic: String,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Search an evolution tree for a topic.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        topic: String,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        max_path_length: Option<usize>,
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Trace historical paths leading to a new paper.
    Retrospect {
        #[arg(long)]
        title: String,
        #[arg(long)]
        abstract_file: Option<PathBuf>,
        /// Directory of tree JSON files, one per topic.
        #[arg(long)]
        trees_dir: PathBuf,
        #[arg(long, value_enum, default_value = "terminal-similarity")]
        ranking: RankingArg,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        theta_sim: Option<f64>,
        #[arg(long)]
        year_cap: Option<i32>,
    },
    /// Check cited facts against their sources.
    VerifyFacts {
        /// JSONL of {claim, doc_id, evidence?}.
        #[arg(long)]
        facts: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Consult the LLM for every verdict, not just neutral ones.
        #[arg(long)]
        strict: bool,
    },
    /// Ranking metrics, temporal intervals and graph comparisons.
    Eval {
        /// JSONL of {target, candidates}.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Tree files to summarize.
        #[arg(long)]
        tree: Vec<PathBuf>,
        /// Reasoning tree then citation tree for the masked-year protocol.
        #[arg(long, num_args = 2, value_names = ["REASONING", "CITATION"])]
        compare: Option<Vec<PathBuf>>,
        #[arg(long, value_delimiter = ',')]
        years: Vec<i32>,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
        ks: Vec<usize>,
        /// Drop predictions whose target is not ranked instead of ranking it last.
        #[arg(long)]
        drop_missing: bool,
    },
    /// Summarize a tree, or export it as DOT.
    Inspect {
        #[arg(long)]
        tree: PathBuf,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    search: Option<SearchConfig>,
    ranli: Option<RanliConfig>,
    oracle: Option<OracleConfig>,
    retrospect: Option<RetroQuery>,
}

/// Bad flag combinations; reported like clap's own usage errors.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

struct Ctx {
    global: Global,
    file: FileConfig,
}

impl Ctx {
    fn format(&self, allowed: &[Format], default: Format) -> Result<Format> {
        let f = self.global.format.unwrap_or(default);
        if !allowed.contains(&f) {
            let name = f
                .to_possible_value()
                .expect("not skipped")
                .get_name()
                .to_string();
            return Err(usage(format!(
                "--format {name} is not supported by this subcommand"
            )));
        }
        Ok(f)
    }

    fn seed(&self) -> u64 {
        self.global
            .seed
            .or(self.file.search.as_ref().map(|s| s.seed))
            .unwrap_or(0)
    }

    fn oracle(&self) -> Result<OracleSession> {
        let mut config = self.file.oracle.clone().unwrap_or_default();
        match self.global.oracle {
            Some(OracleKind::Mock) => config.backend = Backend::Mock,
            Some(OracleKind::Remote) => config.backend = Backend::Remote,
            None => {}
        }
        if let Some(seed) = self.global.seed {
            config.seed = Some(seed);
        }
        let config = config.with_env()?;
        let fixtures = match &self.global.fixtures {
            Some(path) => Fixtures::from_json(&read(path)?)
                .with_context(|| format!("reading fixtures {}", path.display()))?,
            None => Fixtures::default(),
        };
        Ok(config.build(fixtures)?)
    }

    fn search_config(&self) -> SearchConfig {
        let mut config = self.file.search.clone().unwrap_or_default();
        config.seed = self.seed();
        config
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.global.out {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Corpus::read_jsonl(BufReader::new(file))
        .with_context(|| format!("reading corpus {}", path.display()))
}

fn load_tree(path: &Path) -> Result<TheTree> {
    let tree = TheTree::from_json(&read(path)?)
        .with_context(|| format!("parsing tree {}", path.display()))?;
    let report = tree.validate();
    if !report.is_valid() {
        bail!(
            "{} is not a valid tree: {:?}",
            path.display(),
            report.violations
        );
    }
    Ok(tree)
}

fn load_trees(dir: &Path) -> Result<Vec<TheTree>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no tree files in {}", dir.display());
    }
    paths.iter().map(|p| load_tree(p)).collect()
}

fn pretty(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.global.config {
        Some(path) => serde_json::from_str(&read(path)?)
            .with_context(|| format!("parsing config {}", path.display()))?,
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        global: cli.global,
        file,
    };
    match cli.command {
        Command::Ingest {
            input,
            style,
            min_tokens,
        } => {
            ctx.format(&[Format::Json], Format::Json)?;
            let mut options = IngestOptions {
                style: match style {
                    StyleArg::Auto => Style::Auto,
                    StyleArg::Ieee => Style::Ieee,
                    StyleArg::Apa => Style::Apa,
                },
                ..IngestOptions::default()
            };
            if let Some(n) = min_tokens {
                options.min_tokens = n;
            }
            let oracle = ctx.oracle()?;
            let files = ingest::survey_files(&input)?;
            let (corpus, diagnostics) = ingest::build_corpus(&files, &oracle, options)?;
            for d in &diagnostics {
                eprintln!("{d}");
            }
            ctx.emit(&corpus.to_jsonl())
        }
        Command::Score {
            corpus,
            topic,
            gamma,
        } => {
            ctx.format(&[Format::Json], Format::Json)?;
            let corpus = load_corpus(&corpus)?;
            let gamma = gamma.unwrap_or(ctx.search_config().gamma);
            let oracle = ctx.oracle()?;
            let papers = search::score_corpus(&corpus, &topic, gamma, &oracle)?;
            ctx.emit(&Corpus { papers, ..corpus }.to_jsonl())
        }
        Command::Build {
            corpus,
            topic,
            max_iterations,
            max_path_length,
            c0,
            lambda,
            tau,
            gamma,
        } => {
            let format = ctx.format(&[Format::Json, Format::Dot], Format::Json)?;
            let mut config = ctx.search_config();
            config.max_iterations = max_iterations.unwrap_or(config.max_iterations);
            config.max_path_length = max_path_length.unwrap_or(config.max_path_length);
            config.c0 = c0.unwrap_or(config.c0);
            config.lambda = lambda.unwrap_or(config.lambda);
            config.tau = tau.unwrap_or(config.tau);
            config.gamma = gamma.unwrap_or(config.gamma);
            let corpus = load_corpus(&corpus)?;
            let oracle = ctx.oracle()?;
            let tree = search::run(&corpus, &topic, &config, &oracle)?;
            match format {
                Format::Dot => ctx.emit(&tree.to_dot()),
                _ => ctx.emit(&(tree.to_json() + "\n")),
            }
        }
        Command::Retrospect {
            title,
            abstract_file,
            trees_dir,
            ranking,
            n_paths,
            theta_sim,
            year_cap,
        } => {
            let format = ctx.format(&[Format::Json, Format::Dot], Format::Json)?;
            let mut query = ctx.file.retrospect.clone().unwrap_or_default();
            query.title = title;
            if let Some(path) = abstract_file {
                query.abstract_text = read(&path)?.trim().to_string();
            }
            query.n_paths = n_paths.unwrap_or(query.n_paths);
            query.theta_sim = theta_sim.unwrap_or(query.theta_sim);
            query.year_cap = year_cap.or(query.year_cap);
            let ranking = match ranking {
                RankingArg::TerminalSimilarity => Ranking::TerminalSimilarity,
                RankingArg::CumulativeImportance => Ranking::CumulativeImportance,
            };
            let trees = load_trees(&trees_dir)?;
            let oracle = ctx.oracle()?;
            let paths = retrospect::retrospect(&query, &trees, ranking, &oracle)?;
            match format {
                Format::Dot => ctx.emit(&retrospect::paths_to_dot(&paths)),
                _ => ctx.emit(&pretty(&retrospect::paths_to_json(&paths))?),
            }
        }
        Command::VerifyFacts {
            facts,
            corpus,
            alpha,
            threshold,
            strict,
        } => {
            ctx.format(&[Format::Json], Format::Json)?;
            let mut config = ctx.file.ranli.unwrap_or_default();
            config.alpha = alpha.unwrap_or(config.alpha);
            config.attr_threshold = threshold.unwrap_or(config.attr_threshold);
            config.strict_formula |= strict;
            let corpus = load_corpus(&corpus)?;
            let file =
                File::open(&facts).with_context(|| format!("opening {}", facts.display()))?;
            let facts = ranli::read_facts(BufReader::new(file))?;
            let oracle = ctx.oracle()?;
            let (results, summary) = ranli::verify_facts(&facts, &corpus, &config, &oracle)?;
            eprintln!(
                "{} facts, {} missing ({:.4}), {} accepted",
                summary.total, summary.missing, summary.missing_rate, summary.accepted
            );
            let mut out = Vec::new();
            ranli::write_results(&results, &mut out)?;
            ctx.emit(&String::from_utf8(out)?)
        }
        Command::Eval {
            predictions,
            tree,
            compare,
            years,
            ks,
            drop_missing,
        } => {
            let format = ctx.format(&[Format::Json, Format::Csv], Format::Json)?;
            if predictions.is_none() && tree.is_empty() && compare.is_none() {
                return Err(usage("eval needs --predictions, --tree or --compare"));
            }
            if compare.is_some() && years.is_empty() {
                return Err(usage("--compare needs --years"));
            }
            let policy = if drop_missing {
                MissingTargets::Drop
            } else {
                MissingTargets::Pessimistic
            };
            let mut report = serde_json::Map::new();
            let mut rows: Vec<(String, MetricsReport)> = Vec::new();
            if let Some(path) = predictions {
                let file =
                    File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                let preds = eval::read_predictions(BufReader::new(file))?;
                let unranked = preds.iter().filter(|p| p.rank_of_target.is_none()).count();
                let metrics = eval::rank_metrics_with(&preds, &ks, policy)?;
                report.insert(
                    "predictions".into(),
                    json!({"metrics": metrics, "total": preds.len(), "unranked": unranked}),
                );
                rows.push(("predictions".into(), metrics));
            }
            if !tree.is_empty() {
                let mut summaries = Vec::new();
                for path in &tree {
                    let t = load_tree(path)?;
                    summaries.push(json!({
                        "file": path.display().to_string(),
                        "topic": t.topic,
                        "nodes": t.len(),
                        "edges": t.edges().len(),
                        "avg_temporal_interval": eval::avg_temporal_interval(&t).ok(),
                    }));
                }
                report.insert("trees".into(), summaries.into());
            }
            if let Some(pair) = compare {
                let reasoning = load_tree(&pair[0])?;
                let citation = load_tree(&pair[1])?;
                let comparison = eval::compare_graphs(
                    &reasoning,
                    &citation,
                    &eval::AdjacencyRanker,
                    &years,
                    &ks,
                )?;
                for row in &comparison {
                    rows.push((format!("reasoning {}", row.year), row.reasoning.clone()));
                    rows.push((format!("citation {}", row.year), row.citation.clone()));
                }
                report.insert("comparison".into(), serde_json::to_value(&comparison)?);
            }
            match format {
                Format::Csv => {
                    let refs: Vec<(String, &MetricsReport)> =
                        rows.iter().map(|(l, m)| (l.clone(), m)).collect();
                    ctx.emit(&eval::metrics_to_csv(&refs))
                }
                _ => ctx.emit(&pretty(&report)?),
            }
        }
        Command::Inspect { tree } => {
            let format = ctx.global.format;
            if format == Some(Format::Csv) {
                return Err(usage("--format csv is not supported by this subcommand"));
            }
            let tree = TheTree::from_json(&read(&tree)?)
                .with_context(|| format!("parsing tree {}", tree.display()))?;
            match format {
                Some(Format::Dot) => ctx.emit(&tree.to_dot()),
                Some(Format::Json) => ctx.emit(&pretty(&inspect_json(&tree))?),
                _ => ctx.emit(&inspect_text(&tree)),
            }
        }
    }
}

fn inspect_json(tree: &TheTree) -> serde_json::Value {
    let years: Vec<i32> = tree.nodes().map(|n| n.year).collect();
    let reasoning = tree
        .edges()
        .iter()
        .filter(|e| e.kind.is_reasoning())
        .count();
    json!({
        "topic": tree.topic,
        "nodes": tree.len(),
        "edges": tree.edges().len(),
        "reasoning_edges": reasoning,
        "first_year": years.iter().min(),
        "last_year": years.iter().max(),
        "avg_temporal_interval": eval::avg_temporal_interval(tree).ok(),
        "violations": tree.validate().violations.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>(),
    })
}

fn inspect_text(tree: &TheTree) -> String {
    let summary = inspect_json(tree);
    let mut out = format!(
        "topic: {}\nnodes: {}\nedges: {} ({} reasoning)\n",
        tree.topic,
        tree.len(),
        tree.edges().len(),
        summary["reasoning_edges"]
    );
    if let (Some(a), Some(b)) = (
        summary["first_year"].as_i64(),
        summary["last_year"].as_i64(),
    ) {
        out.push_str(&format!("years: {a}-{b}\n"));
    }
    if let Some(v) = summary["avg_temporal_interval"].as_f64() {
        out.push_str(&format!("mean edge interval: {v:.2} years\n"));
    }
    let mut ranked: Vec<_> = tree
        .nodes()
        .filter_map(|n| n.importance_value().map(|s| (s, n)))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.id.cmp(&b.1.id)));
    if !ranked.is_empty() {
        out.push_str("most important:\n");
        for (s, n) in ranked.iter().take(5) {
            out.push_str(&format!("  {s:.3}  {} ({}) {}\n", n.id, n.year, n.title));
        }
    }
    let report = tree.validate();
    if report.is_valid() {
        out.push_str("valid\n");
    } else {
        out.push_str(&format!("{} violations:\n", report.violations.len()));
        for v in &report.violations {
            out.push_str(&format!("  {v:?}\n"));
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
