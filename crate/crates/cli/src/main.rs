use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use chrono_rdf::benchgen::harness::{bench_run, HarnessConfig};
use chrono_rdf::benchgen::{generate, GenSpec};
use chrono_rdf::delta_query::{self, ChangeRecord};
use chrono_rdf::rdf::serialize_nquads;
use chrono_rdf::sources::{load_sources, SourceConfig};
use chrono_rdf::version_query::{self, QueryMode};
use chrono_rdf::{Cache, Context, Error, Iri, Snapshot, TimeInterval, Timestamp, VersionedGraph};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "chrono-rdf", version, about = "Time-travel queries over RDF datasets with change-tracking provenance")]
struct Cli {
    /// JSON source configuration.
    #[arg(long, global = true, env = "CHRONO_RDF_CONFIG")]
    config: Option<PathBuf>,
    #[command(flatten)]
    sources: SourceFlags,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Only errors on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

/// Override or replace the configuration file.
#[derive(Args)]
struct SourceFlags {
    /// Data file or SPARQL endpoint (repeatable).
    #[arg(long, global = true)]
    data: Vec<String>,
    /// Provenance file or SPARQL endpoint (repeatable).
    #[arg(long, global = true)]
    provenance: Vec<String>,
    /// Directory for materialized versions; caching is off without it
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Look up recorded updates through an in-memory index instead of scanning.
    #[arg(long, global = true)]
    text_index: bool,
    /// Most relevant entities a query may discover (default 10000)
    #[arg(long, global = true)]
    explosion_limit: Option<usize>,
    /// Seconds.
    #[arg(long, global = true)]
    http_timeout: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Nquads,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct an entity at a time, or every version of it.
    Materialize {
        entity: String,
        #[arg(long, value_parser = start_time, conflicts_with = "all")]
        at: Option<Timestamp>,
        #[arg(long, required_unless_present = "at")]
        all: bool,
        #[arg(long, value_parser = start_time, requires = "all")]
        from: Option<Timestamp>,
        #[arg(long, value_parser = end_time, requires = "all")]
        to: Option<Timestamp>,
    },
    /// Answer a SELECT query on one past state or on every state in an interval.
    Query {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_parser = start_time, conflicts_with_all = ["from", "to"])]
        at: Option<Timestamp>,
        #[arg(long, value_parser = start_time)]
        from: Option<Timestamp>,
        #[arg(long, value_parser = end_time)]
        to: Option<Timestamp>,
    },
    /// Report how the entities relevant to a query changed.
    Delta {
        #[arg(long)]
        file: PathBuf,
        /// Only changes touching these properties (comma separated IRIs).
        #[arg(long, value_delimiter = ',')]
        properties: Vec<String>,
        #[arg(long, value_parser = start_time)]
        from: Option<Timestamp>,
        #[arg(long, value_parser = end_time)]
        to: Option<Timestamp>,
    },
    /// Manage the on-disk cache of materialized versions.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
    /// Generate a synthetic dataset and time the retrieval workloads on it.
    Bench {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        entities: usize,
        /// Known subjects sampled for the known-subject workloads.
        #[arg(long, default_value_t = 20)]
        sample: usize,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        /// Directory for the dataset, its ledger and report.csv/report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Remove every cached version.
    Clear,
}

fn start_time(s: &str) -> Result<Timestamp, String> {
    Timestamp::parse_flexible(s, false).map_err(|e| e.to_string())
}

fn end_time(s: &str) -> Result<Timestamp, String> {
    Timestamp::parse_flexible(s, true).map_err(|e| e.to_string())
}

/// An error with its exit status and machine-readable code.
struct Failure {
    status: u8,
    code: String,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            status: if e.is_source_error() { 3 } else { 4 },
            code: e.code().to_string(),
            error: e.into(),
        }
    }
}

fn source_failure(code: &str, error: anyhow::Error) -> Failure {
    Failure {
        status: 3,
        code: code.to_string(),
        error,
    }
}

fn usage(message: String) -> Failure {
    Failure {
        status: 2,
        code: "UsageError".into(),
        error: anyhow::anyhow!(message),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.render().to_string();
            let detail = detail.lines().next().unwrap_or(&message).trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "UsageError", "message": detail}));
            return ExitCode::from(2);
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(doc) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(doc.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let doc = json!({"error": f.code, "message": format!("{:#}", f.error)});
            eprintln!("{doc}");
            ExitCode::from(f.status)
        }
    }
}

fn config(cli: &Cli) -> Result<SourceConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => SourceConfig::from_file(path).map_err(|e| source_failure(e.code(), e.into()))?,
        None => SourceConfig::default(),
    };
    let f = &cli.sources;
    if !f.data.is_empty() {
        config.data = f.data.clone();
    }
    if !f.provenance.is_empty() {
        config.provenance = f.provenance.clone();
    }
    if f.cache_dir.is_some() {
        config.cache_dir = f.cache_dir.clone();
    }
    config.text_index |= f.text_index;
    if let Some(n) = f.explosion_limit {
        config.explosion_limit = n;
    }
    if let Some(s) = f.http_timeout {
        config.http_timeout = s;
    }
    Ok(config)
}

fn context(cli: &Cli) -> Result<Context, Failure> {
    let config = config(cli)?;
    load_sources(&config).map_err(|e| source_failure(e.code(), e.into()))
}

fn report_warnings(cli: &Cli, ctx: &Context) {
    if !cli.quiet {
        for w in ctx.warnings() {
            log::warn!("{w}");
        }
    }
}

/// `SOURCE_DATE_EPOCH` when set, so that runs can be reproduced byte for byte.
fn generated_at() -> String {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .map_or_else(Timestamp::now, Timestamp::from_unix)
        .to_rfc3339()
}

fn document(mode: &str, fields: Map<String, Value>) -> String {
    let mut doc = fields;
    doc.insert("mode".into(), mode.into());
    doc.insert("generated_at".into(), generated_at().into());
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("documents serialize");
    text.push('\n');
    text
}

fn interval(from: Option<Timestamp>, to: Option<Timestamp>) -> Result<TimeInterval, Failure> {
    TimeInterval::new(from, to).map_err(|e| usage(e.to_string()))
}

fn parse_iri(s: &str) -> Result<Iri, Failure> {
    let s = s.trim().trim_start_matches('<').trim_end_matches('>');
    Iri::new(s).map_err(|e| usage(format!("{s}: {e}")))
}

fn read_query(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| source_failure("IoError", e))
}

fn run(cli: &Cli) -> Result<String, Failure> {
    if cli.format == Format::Nquads && !matches!(cli.command, Command::Materialize { .. }) {
        return Err(usage("--format nquads only applies to materialize".into()));
    }
    match &cli.command {
        Command::Materialize { entity, at, all: _, from, to } => {
            let entity = parse_iri(entity)?;
            let ctx = context(cli)?;
            let (versions, others) = match at {
                Some(t) => {
                    let (v, others) = ctx.materialize_at(&entity, *t)?;
                    (vec![(*t, v)], others)
                }
                None => {
                    let vs = ctx.materialize_all(&entity, interval(*from, *to)?)?;
                    (vs.into_iter().map(|v| (v.time(), v)).collect(), Vec::new())
                }
            };
            report_warnings(cli, &ctx);
            if cli.format == Format::Nquads {
                return Ok(versions_as_nquads(&versions));
            }
            let results: Map<String, Value> = versions.iter().map(|(t, v)| (t.to_rfc3339(), version_json(v))).collect();
            let mut doc = Map::new();
            doc.insert("entity".into(), entity.as_str().into());
            doc.insert("results".into(), results.into());
            if at.is_some() {
                doc.insert("other_snapshots".into(), others.iter().map(snapshot_json).collect());
            }
            Ok(document("materialization", doc))
        }
        Command::Query { file, at, from, to } => {
            let text = read_query(file)?;
            let ctx = context(cli)?;
            let mode = at.map_or(QueryMode::CrossVersion, QueryMode::SingleVersion);
            let out = version_query::run(&text, mode, interval(*from, *to)?, &ctx)?;
            report_warnings(cli, &ctx);
            let results: Map<String, Value> = out
                .results
                .iter()
                .map(|(t, s)| {
                    let rows: Vec<Value> = s
                        .rows
                        .iter()
                        .map(|row| row.iter().map(|(v, t)| (v.name().to_string(), Value::from(t.to_string()))).collect::<Map<_, _>>().into())
                        .collect();
                    (t.to_rfc3339(), rows.into())
                })
                .collect();
            let mut doc = Map::new();
            doc.insert("results".into(), results.into());
            doc.insert("relevant_entities".into(), out.relevant.iter().map(|e| Value::from(e.as_str())).collect());
            Ok(document("version_query", doc))
        }
        Command::Delta { file, properties, from, to } => {
            let text = read_query(file)?;
            let props: BTreeSet<Iri> = properties.iter().filter(|p| !p.trim().is_empty()).map(|p| parse_iri(p)).collect::<Result<_, _>>()?;
            let ctx = context(cli)?;
            let report = delta_query::run(&text, &props, interval(*from, *to)?, &ctx)?;
            report_warnings(cli, &ctx);
            let mut results: Map<String, Value> = Map::new();
            for r in &report.records {
                let entry = results.entry(r.time.to_rfc3339()).or_insert_with(|| Value::Array(Vec::new()));
                entry.as_array_mut().expect("arrays only").push(record_json(r));
            }
            let mut doc = Map::new();
            doc.insert("results".into(), results.into());
            doc.insert("relevant_entities".into(), report.relevant.iter().map(|e| Value::from(e.as_str())).collect());
            Ok(document("delta_query", doc))
        }
        Command::Cache { action: CacheAction::Clear } => {
            let config = config(cli)?;
            let dir = config
                .cache_dir
                .ok_or_else(|| usage("no cache directory configured (use --cache-dir or cache_dir in the config)".into()))?;
            let cache = Cache::open(&dir).map_err(|e| source_failure(e.code(), e.into()))?;
            let entries = cache.len();
            cache.clear().map_err(|e| source_failure(e.code(), e.into()))?;
            let mut doc = Map::new();
            doc.insert("cache_dir".into(), dir.display().to_string().into());
            doc.insert("removed_entries".into(), entries.into());
            Ok(document("cache_clear", doc))
        }
        Command::Bench {
            seed,
            entities,
            sample,
            repetitions,
            out,
        } => {
            let spec = GenSpec {
                seed: *seed,
                n_entities: *entities,
                ..GenSpec::default()
            };
            let generated = generate(&spec).map_err(|e| usage(e.to_string()))?;
            let config = config(cli)?;
            let harness = HarnessConfig {
                entities: *sample,
                repetitions: *repetitions,
                seed: *seed,
                cache_dir: config.cache_dir,
                text_index: config.text_index,
            };
            let report = bench_run(&generated, &harness)?;
            if let Some(dir) = out {
                let write = || -> std::io::Result<()> {
                    generated.write_to(dir)?;
                    std::fs::write(dir.join("report.csv"), report.to_csv())?;
                    std::fs::write(dir.join("report.json"), report.to_json())
                };
                write()
                    .with_context(|| format!("cannot write to {}", dir.display()))
                    .map_err(|e| source_failure("IoError", e))?;
            }
            let mut doc = Map::new();
            doc.insert("report".into(), serde_json::to_value(&report).expect("reports serialize"));
            Ok(document("bench", doc))
        }
    }
}

fn snapshot_json(s: &Snapshot) -> Value {
    json!({
        "snapshot": s.id.as_str(),
        "generated_at": s.generated_at.to_rfc3339(),
        "invalidated_at": s.invalidated_at.map(Timestamp::to_rfc3339),
        "attributed_to": s.attributed_to.as_ref().map(Iri::as_str),
        "primary_source": s.primary_source.as_ref().map(Iri::as_str),
        "description": s.description,
    })
}

fn version_json(v: &VersionedGraph) -> Value {
    let mut obj = snapshot_json(&v.snapshot);
    obj["graph"] = serialize_nquads(&v.graphs).into();
    obj["reconstructed"] = v.reconstructed.into();
    obj
}

fn record_json(r: &ChangeRecord) -> Value {
    json!({
        "entity": r.entity.as_str(),
        "snapshot": r.snapshot.as_str(),
        "time": r.time.to_rfc3339(),
        "kind": r.kind.as_str(),
        "description": r.description,
        "attributed_to": r.attributed_to.as_ref().map(Iri::as_str),
        "added": serialize_nquads(&r.delta.added),
        "removed": serialize_nquads(&r.delta.removed),
    })
}

fn versions_as_nquads(versions: &[(Timestamp, VersionedGraph)]) -> String {
    if let [(_, v)] = versions {
        return serialize_nquads(&v.graphs);
    }
    let mut out = String::new();
    for (t, v) in versions {
        out.push_str(&format!("# {} {}\n", t.to_rfc3339(), v.snapshot.id));
        out.push_str(&serialize_nquads(&v.graphs));
    }
    out
}
