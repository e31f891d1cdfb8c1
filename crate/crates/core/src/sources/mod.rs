//! Where data and provenance come from: local files, in-memory sets or SPARQL
//! endpoints, plus the per-run [`Context`] that memoizes what was fetched.

mod index;
mod local;
mod remote;

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use index::TextIndex;
pub use local::{LocalData, LocalProvenance};
pub use remote::{RemoteData, RemoteProvenance, SparqlClient};

use crate::cache::Cache;
use crate::error::Error;
use crate::materializer::{Materializer, VersionedGraph};
use crate::provenance::{history_from_quads, parse_snapshot_update, Delta, EntityHistory, ProvenanceError, Snapshot};
use crate::rdf::{parse_document, DocumentFormat, GraphSet, Iri, Quad, RdfError, Term};
use crate::time::{TimeInterval, Timestamp};

pub const DEFAULT_EXPLOSION_LIMIT: usize = 10_000;
pub const DEFAULT_HTTP_TIMEOUT_SECS: u64 = 30;

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("request to {url} failed{}: {message}", status.map(|s| format!(" with status {s}")).unwrap_or_default())]
    Network {
        url: String,
        status: Option<u16>,
        message: String,
    },
    #[error("{origin}: {source}")]
    Syntax {
        origin: String,
        #[source]
        source: RdfError,
    },
}

impl SourceError {
    pub fn code(&self) -> &'static str {
        match self {
            SourceError::Config(_) => "ConfigError",
            SourceError::Io { .. } => "IoError",
            SourceError::Network { .. } => "NetworkError",
            SourceError::Syntax { .. } => "SyntaxError",
        }
    }
}

/// Which data and provenance to read, and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// File paths or `http(s)://` SPARQL endpoint URLs.
    pub data: Vec<String>,
    pub provenance: Vec<String>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub text_index: bool,
    #[serde(default = "default_explosion_limit")]
    pub explosion_limit: usize,
    /// Seconds.
    #[serde(default = "default_http_timeout")]
    pub http_timeout: u64,
}

fn default_explosion_limit() -> usize {
    DEFAULT_EXPLOSION_LIMIT
}

fn default_http_timeout() -> u64 {
    DEFAULT_HTTP_TIMEOUT_SECS
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            data: Vec::new(),
            provenance: Vec::new(),
            cache_dir: None,
            text_index: false,
            explosion_limit: DEFAULT_EXPLOSION_LIMIT,
            http_timeout: DEFAULT_HTTP_TIMEOUT_SECS,
        }
    }
}

impl SourceConfig {
    pub fn from_json(text: &str) -> Result<Self, SourceError> {
        serde_json::from_str(text).map_err(|e| SourceError::Config(e.to_string()))
    }

    /// Reads a JSON config file. Relative source paths and `cache_dir` are
    /// resolved against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, SourceError> {
        let text = std::fs::read_to_string(path).map_err(|source| SourceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_json(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |s: &mut String| {
            if !is_url(s) && Path::new(s.as_str()).is_relative() {
                *s = dir.join(&*s).to_string_lossy().into_owned();
            }
        };
        config.data.iter_mut().for_each(resolve);
        config.provenance.iter_mut().for_each(resolve);
        if let Some(c) = &mut config.cache_dir {
            if c.is_relative() {
                *c = dir.join(&*c);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if self.data.is_empty() {
            return Err(SourceError::Config("at least one data source is required".into()));
        }
        if self.provenance.is_empty() {
            return Err(SourceError::Config("at least one provenance source is required".into()));
        }
        if self.http_timeout == 0 {
            return Err(SourceError::Config("http_timeout must be positive".into()));
        }
        if self.explosion_limit == 0 {
            return Err(SourceError::Config("explosion_limit must be positive".into()));
        }
        Ok(())
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

/// Reads an N-Quads or Turtle file, picking the syntax from its extension.
pub fn read_rdf_file(path: &Path) -> Result<GraphSet, SourceError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let format = DocumentFormat::from_extension(ext)
        .ok_or_else(|| SourceError::Config(format!("{}: unknown RDF file extension", path.display())))?;
    let text = std::fs::read_to_string(path).map_err(|source| SourceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_document(&text, format, None).map_err(|source| SourceError::Syntax {
        origin: path.display().to_string(),
        source,
    })
}

/// Current statements.
pub trait DataSource: Send + Sync {
    /// Every statement whose subject is `entity`.
    fn entity_quads(&self, entity: &Iri) -> Result<GraphSet, SourceError>;

    /// IRI subjects of statements with the given predicate and object (`None` = any).
    fn subjects_matching(&self, predicate: Option<&Iri>, object: Option<&Term>) -> Result<BTreeSet<Iri>, SourceError>;
}

/// An update string and where it was recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateRecord {
    pub entity: Iri,
    pub snapshot: Iri,
    pub text: String,
}

/// Provenance snapshots.
pub trait ProvenanceSource: Send + Sync {
    /// Statements about the snapshots of `entity`.
    fn snapshot_quads(&self, entity: &Iri) -> Result<Vec<Quad>, SourceError>;

    /// Update strings whose raw text contains every needle (all of them when
    /// `needles` is empty). May over-approximate; callers re-check.
    fn updates_containing(&self, needles: &[String]) -> Result<Vec<UpdateRecord>, SourceError>;
}

impl<T: DataSource + ?Sized> DataSource for Box<T> {
    fn entity_quads(&self, entity: &Iri) -> Result<GraphSet, SourceError> {
        (**self).entity_quads(entity)
    }

    fn subjects_matching(&self, predicate: Option<&Iri>, object: Option<&Term>) -> Result<BTreeSet<Iri>, SourceError> {
        (**self).subjects_matching(predicate, object)
    }
}

impl<T: ProvenanceSource + ?Sized> ProvenanceSource for Box<T> {
    fn snapshot_quads(&self, entity: &Iri) -> Result<Vec<Quad>, SourceError> {
        (**self).snapshot_quads(entity)
    }

    fn updates_containing(&self, needles: &[String]) -> Result<Vec<UpdateRecord>, SourceError> {
        (**self).updates_containing(needles)
    }
}

/// Several data sources read as their union.
pub struct MultiData(pub Vec<Box<dyn DataSource>>);

impl DataSource for MultiData {
    fn entity_quads(&self, entity: &Iri) -> Result<GraphSet, SourceError> {
        let mut out = GraphSet::new();
        for s in &self.0 {
            out.extend(s.entity_quads(entity)?);
        }
        Ok(out)
    }

    fn subjects_matching(&self, predicate: Option<&Iri>, object: Option<&Term>) -> Result<BTreeSet<Iri>, SourceError> {
        let mut out = BTreeSet::new();
        for s in &self.0 {
            out.extend(s.subjects_matching(predicate, object)?);
        }
        Ok(out)
    }
}

/// Several provenance sources read as their union.
pub struct MultiProvenance(pub Vec<Box<dyn ProvenanceSource>>);

impl ProvenanceSource for MultiProvenance {
    fn snapshot_quads(&self, entity: &Iri) -> Result<Vec<Quad>, SourceError> {
        let mut out = Vec::new();
        for s in &self.0 {
            out.extend(s.snapshot_quads(entity)?);
        }
        Ok(out)
    }

    fn updates_containing(&self, needles: &[String]) -> Result<Vec<UpdateRecord>, SourceError> {
        let mut out = Vec::new();
        for s in &self.0 {
            out.extend(s.updates_containing(needles)?);
        }
        Ok(out)
    }
}

/// A snapshot whose update matched a textual search.
#[derive(Debug, Clone)]
pub struct DeltaHit {
    pub entity: Iri,
    pub snapshot: Iri,
    pub delta: Arc<Delta>,
}

/// Counters describing the work done through a context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContextStats {
    pub histories_loaded: usize,
    pub delta_searches: usize,
    pub cache_rebuilds: u64,
    pub cache_hits: u64,
}

/// Everything a query needs: sources, optional cache and text index, and
/// memoized histories, current graphs and parsed updates.
pub struct Context {
    data: Box<dyn DataSource>,
    provenance: Box<dyn ProvenanceSource>,
    cache: Option<Cache>,
    text_index: bool,
    explosion_limit: usize,
    materializer: Materializer,
    index: OnceLock<Arc<TextIndex>>,
    histories: Mutex<HashMap<Iri, Option<Arc<EntityHistory>>>>,
    current: Mutex<HashMap<Iri, Arc<GraphSet>>>,
    parsed: Mutex<HashMap<Iri, Arc<Delta>>>,
    stats: Mutex<ContextStats>,
    warnings: Mutex<Vec<String>>,
}

impl Context {
    pub fn new(data: impl DataSource + 'static, provenance: impl ProvenanceSource + 'static) -> Self {
        Context {
            data: Box::new(data),
            provenance: Box::new(provenance),
            cache: None,
            text_index: false,
            explosion_limit: DEFAULT_EXPLOSION_LIMIT,
            materializer: Materializer::new(),
            index: OnceLock::new(),
            histories: Mutex::new(HashMap::new()),
            current: Mutex::new(HashMap::new()),
            parsed: Mutex::new(HashMap::new()),
            stats: Mutex::new(ContextStats::default()),
            warnings: Mutex::new(Vec::new()),
        }
    }

    /// A context over in-memory data and provenance.
    pub fn in_memory(data: &GraphSet, provenance: &GraphSet) -> Self {
        Context::new(LocalData::new(data), LocalProvenance::new(provenance))
    }

    pub fn with_cache(mut self, cache: Cache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_text_index(mut self, enabled: bool) -> Self {
        self.text_index = enabled;
        self
    }

    pub fn with_explosion_limit(mut self, limit: usize) -> Self {
        self.explosion_limit = limit;
        self
    }

    pub fn explosion_limit(&self) -> usize {
        self.explosion_limit
    }

    pub fn text_index_enabled(&self) -> bool {
        self.text_index
    }

    pub fn cache(&self) -> Option<&Cache> {
        self.cache.as_ref()
    }

    pub fn materializer(&self) -> &Materializer {
        &self.materializer
    }

    pub fn stats(&self) -> ContextStats {
        *lock(&self.stats)
    }

    /// Non-fatal problems met so far (for example cache write failures).
    pub fn warnings(&self) -> Vec<String> {
        lock(&self.warnings).clone()
    }

    pub(crate) fn warn(&self, message: String) {
        log::warn!("{message}");
        lock(&self.warnings).push(message);
    }

    pub(crate) fn count(&self, f: impl FnOnce(&mut ContextStats)) {
        f(&mut lock(&self.stats));
    }

    /// The entity's history, or `None` when the provenance has no snapshot for it.
    pub fn history(&self, entity: &Iri) -> Result<Option<Arc<EntityHistory>>, Error> {
        if let Some(h) = lock(&self.histories).get(entity) {
            return Ok(h.clone());
        }
        let quads = self.provenance.snapshot_quads(entity)?;
        let history = match history_from_quads(entity, &quads) {
            Ok(h) => Some(Arc::new(h)),
            Err(ProvenanceError::NoHistory(_)) => None,
            Err(e) => return Err(e.into()),
        };
        self.count(|s| s.histories_loaded += 1);
        lock(&self.histories).insert(entity.clone(), history.clone());
        Ok(history)
    }

    pub fn require_history(&self, entity: &Iri) -> Result<Arc<EntityHistory>, Error> {
        self.history(entity)?
            .ok_or_else(|| ProvenanceError::NoHistory(entity.as_str().to_string()).into())
    }

    /// Current statements about `entity`.
    pub fn current_graph(&self, entity: &Iri) -> Result<Arc<GraphSet>, Error> {
        if let Some(g) = lock(&self.current).get(entity) {
            return Ok(g.clone());
        }
        let g = Arc::new(self.data.entity_quads(entity)?);
        lock(&self.current).insert(entity.clone(), g.clone());
        Ok(g)
    }

    pub fn subjects_matching(&self, predicate: Option<&Iri>, object: Option<&Term>) -> Result<BTreeSet<Iri>, Error> {
        Ok(self.data.subjects_matching(predicate, object)?)
    }

    fn parse_record(&self, record: &UpdateRecord) -> Result<Arc<Delta>, Error> {
        if let Some(d) = lock(&self.parsed).get(&record.snapshot) {
            return Ok(d.clone());
        }
        let d = Arc::new(parse_snapshot_update(&record.text, &record.snapshot)?);
        lock(&self.parsed).insert(record.snapshot.clone(), d.clone());
        Ok(d)
    }

    /// The text index over every recorded update, built on first use.
    pub fn text_index(&self) -> Result<Arc<TextIndex>, Error> {
        if let Some(i) = self.index.get() {
            return Ok(i.clone());
        }
        let mut entries = Vec::new();
        for record in self.provenance.updates_containing(&[])? {
            let delta = self.parse_record(&record)?;
            entries.push(DeltaHit {
                entity: record.entity,
                snapshot: record.snapshot,
                delta,
            });
        }
        let built = Arc::new(TextIndex::build(entries));
        Ok(self.index.get_or_init(|| built).clone())
    }

    /// Snapshots whose canonical update text contains the N-Triples form of
    /// every term in `known`, ordered by (entity, snapshot).
    pub fn search_deltas(&self, known: &BTreeSet<Term>) -> Result<Vec<DeltaHit>, Error> {
        self.count(|s| s.delta_searches += 1);
        let forms: Vec<String> = known.iter().map(|t| t.to_string()).collect();
        let mut hits = if self.text_index {
            self.text_index()?.lookup(&forms)
        } else {
            let iri_needles: Vec<String> = known.iter().filter(|t| t.as_iri().is_some()).map(|t| t.to_string()).collect();
            let mut hits = Vec::new();
            for record in self.provenance.updates_containing(&iri_needles)? {
                let delta = self.parse_record(&record)?;
                if forms.iter().all(|f| delta.source_text().contains(f.as_str())) {
                    hits.push(DeltaHit {
                        entity: record.entity,
                        snapshot: record.snapshot,
                        delta,
                    });
                }
            }
            hits
        };
        hits.sort_by(|a, b| (&a.entity, &a.snapshot).cmp(&(&b.entity, &b.snapshot)));
        hits.dedup_by(|a, b| a.snapshot == b.snapshot && a.entity == b.entity);
        Ok(hits)
    }

    /// The entity's state at `time`, served from the cache when possible,
    /// plus the snapshots that were not materialized.
    pub fn materialize_at(&self, entity: &Iri, time: Timestamp) -> Result<(VersionedGraph, Vec<Snapshot>), Error> {
        let history = self.require_history(entity)?;
        let k = history.index_at(time).ok_or_else(|| Error::BeforeCreation {
            entity: entity.as_str().to_string(),
            time,
            created: history.snapshots()[0].generated_at,
        })?;
        let version = self
            .versions_by_index(&history, &[k])?
            .pop()
            .expect("one version per wanted index");
        let others = history
            .snapshots()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, s)| s.clone())
            .collect();
        Ok((version, others))
    }

    /// Versions generated inside `interval`, oldest first.
    pub fn materialize_all(&self, entity: &Iri, interval: TimeInterval) -> Result<Vec<VersionedGraph>, Error> {
        let history = self.require_history(entity)?;
        let wanted: Vec<usize> = (0..history.len())
            .filter(|&k| interval.contains(history.snapshots()[k].generated_at))
            .collect();
        self.versions_by_index(&history, &wanted)
    }

    /// Versions whose validity meets `interval`, oldest first.
    pub fn versions_overlapping(&self, history: &EntityHistory, interval: TimeInterval) -> Result<Vec<VersionedGraph>, Error> {
        let wanted = crate::materializer::overlapping_indices(history, interval);
        self.versions_by_index(history, &wanted)
    }

    /// Materializes the versions at `wanted` (ascending indices), going through
    /// the cache when one is configured.
    pub(crate) fn versions_by_index(&self, history: &EntityHistory, wanted: &[usize]) -> Result<Vec<VersionedGraph>, Error> {
        if wanted.is_empty() {
            return Ok(Vec::new());
        }
        let current = self.current_graph(history.entity())?;
        match &self.cache {
            None => Ok(self.materializer.chain(&current, history, wanted)),
            Some(cache) => crate::cache::get_or_materialize_many(cache, self, &current, history, wanted),
        }
    }
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Opens every configured source. Files are read eagerly; endpoints are
/// queried lazily.
pub fn load_sources(config: &SourceConfig) -> Result<Context, SourceError> {
    config.validate()?;
    let timeout = Duration::from_secs(config.http_timeout);

    let mut data: Vec<Box<dyn DataSource>> = Vec::new();
    let mut local = GraphSet::new();
    for s in &config.data {
        if is_url(s) {
            data.push(Box::new(RemoteData::new(SparqlClient::new(s, timeout))));
        } else {
            local.extend(read_rdf_file(Path::new(s))?);
        }
    }
    if !local.is_empty() || data.is_empty() {
        data.insert(0, Box::new(LocalData::new(&local)));
    }

    let mut prov: Vec<Box<dyn ProvenanceSource>> = Vec::new();
    let mut local = GraphSet::new();
    for s in &config.provenance {
        if is_url(s) {
            prov.push(Box::new(RemoteProvenance::new(SparqlClient::new(s, timeout))));
        } else {
            local.extend(read_rdf_file(Path::new(s))?);
        }
    }
    if !local.is_empty() || prov.is_empty() {
        prov.insert(0, Box::new(LocalProvenance::new(&local)));
    }

    let data: Box<dyn DataSource> = if data.len() == 1 {
        data.pop().expect("one source")
    } else {
        Box::new(MultiData(data))
    };
    let prov: Box<dyn ProvenanceSource> = if prov.len() == 1 {
        prov.pop().expect("one source")
    } else {
        Box::new(MultiProvenance(prov))
    };
    let mut ctx = Context::new(data, prov)
        .with_text_index(config.text_index)
        .with_explosion_limit(config.explosion_limit);
    if let Some(dir) = &config.cache_dir {
        let cache = Cache::open(dir).map_err(|e| SourceError::Config(format!("cache: {e}")))?;
        ctx = ctx.with_cache(cache);
    }
    Ok(ctx)
}
