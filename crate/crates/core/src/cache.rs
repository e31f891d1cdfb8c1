//! On-disk store of reconstructed entity versions.
//!
//! Layout: `index.jsonl` holds one JSON line per entry
//! (`{"entity", "time", "fingerprint", "file"}`); each entry's graphs live in
//! their own canonical N-Quads file. Entries are append-only: a changed
//! history produces a new fingerprint and thus a new entry.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::materializer::VersionedGraph;
use crate::provenance::EntityHistory;
use crate::rdf::{parse_document, serialize_nquads, DocumentFormat, GraphSet, Iri};
use crate::sources::Context;
use crate::time::Timestamp;

const INDEX_FILE: &str = "index.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache I/O on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache entry {}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
}

impl CacheError {
    pub fn code(&self) -> &'static str {
        "CacheIO"
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IndexLine {
    entity: String,
    time: String,
    fingerprint: String,
    file: String,
}

type Key = (String, Timestamp);

/// A cache directory. Cheap lookups go through an in-memory copy of the index.
#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    index: Mutex<HashMap<Key, Vec<IndexLine>>>,
    rebuilds: AtomicU64,
    hits: AtomicU64,
}

impl Cache {
    /// Opens (creating if needed) the cache rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CacheError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let cache = Cache {
            dir,
            index: Mutex::new(HashMap::new()),
            rebuilds: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        };
        cache.reload()?;
        Ok(cache)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Versions materialized because they were missing (or stale).
    pub fn rebuilds(&self) -> u64 {
        self.rebuilds.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Number of index entries, stale ones included.
    pub fn len(&self) -> usize {
        self.lock().values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<Key, Vec<IndexLine>>> {
        self.index.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Re-reads the index file, picking up entries written by other processes.
    pub fn reload(&self) -> Result<(), CacheError> {
        let path = self.dir.join(INDEX_FILE);
        let mut index: HashMap<Key, Vec<IndexLine>> = HashMap::new();
        match File::open(&path) {
            Ok(f) => {
                for line in BufReader::new(f).lines() {
                    let line = line.map_err(io(&path))?;
                    // A torn final line from a crashed writer is skipped.
                    let Ok(entry) = serde_json::from_str::<IndexLine>(&line) else {
                        continue;
                    };
                    let Ok(time) = Timestamp::parse(&entry.time) else {
                        continue;
                    };
                    index.entry((entry.entity.clone(), time)).or_default().push(entry);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io(&path)(e)),
        }
        *self.lock() = index;
        Ok(())
    }

    /// Removes every entry and the index.
    pub fn clear(&self) -> Result<(), CacheError> {
        for entry in fs::read_dir(&self.dir).map_err(io(&self.dir))? {
            let path = entry.map_err(io(&self.dir))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name == INDEX_FILE || name.ends_with(".nq") || name.ends_with(".tmp") {
                fs::remove_file(&path).map_err(io(&path))?;
            }
        }
        self.lock().clear();
        Ok(())
    }

    /// The stored graphs for `(entity, time)` under `fingerprint`, if any.
    pub fn get(&self, entity: &Iri, time: Timestamp, fingerprint: &str) -> Result<Option<GraphSet>, CacheError> {
        let file = {
            let index = self.lock();
            let Some(lines) = index.get(&(entity.as_str().to_string(), time)) else {
                return Ok(None);
            };
            match lines.iter().rev().find(|l| l.fingerprint == fingerprint) {
                Some(l) => l.file.clone(),
                None => return Ok(None),
            }
        };
        let path = self.dir.join(&file);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io(&path)(e)),
        };
        let graphs = parse_document(&text, DocumentFormat::NQuads, None).map_err(|e| CacheError::Corrupt {
            path: path.clone(),
            message: e.to_string(),
        })?;
        Ok(Some(graphs))
    }

    /// Stores a complete entry: the data file is written to a temporary name
    /// and renamed before the index line is appended under an exclusive lock.
    pub fn put(&self, entity: &Iri, time: Timestamp, fingerprint: &str, graphs: &GraphSet) -> Result<(), CacheError> {
        let file = entry_file_name(entity, time, fingerprint);
        let path = self.dir.join(&file);
        if !path.exists() {
            let tmp = self.dir.join(format!("{file}.{}.tmp", std::process::id()));
            fs::write(&tmp, serialize_nquads(graphs)).map_err(io(&tmp))?;
            fs::rename(&tmp, &path).map_err(io(&path))?;
        }
        let line = IndexLine {
            entity: entity.as_str().to_string(),
            time: time.to_string(),
            fingerprint: fingerprint.to_string(),
            file,
        };
        let index_path = self.dir.join(INDEX_FILE);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&index_path)
            .map_err(io(&index_path))?;
        f.lock().map_err(io(&index_path))?;
        let mut text = serde_json::to_string(&line).expect("index lines serialize");
        text.push('\n');
        let written = f.write_all(text.as_bytes()).map_err(io(&index_path));
        let _ = f.unlock();
        written?;
        self.lock().entry((line.entity.clone(), time)).or_default().push(line);
        Ok(())
    }
}

fn entry_file_name(entity: &Iri, time: Timestamp, fingerprint: &str) -> String {
    let mut h = Sha256::new();
    h.update(entity.as_str().as_bytes());
    h.update([0]);
    h.update(time.to_string().as_bytes());
    h.update([0]);
    h.update(fingerprint.as_bytes());
    format!("{}.nq", hex::encode(&h.finalize()[..16]))
}

/// The entity's state at `time`, served from the context's cache when one is
/// configured and materialized (then stored) otherwise.
pub fn get_or_materialize(entity: &Iri, time: Timestamp, ctx: &Context) -> Result<VersionedGraph, Error> {
    ctx.materialize_at(entity, time).map(|(v, _)| v)
}

/// Versions at the `wanted` (ascending) indices of `history`. Hits are read
/// from disk; misses are reconstructed in one rewind and stored. Storage
/// failures only produce warnings on the context.
pub(crate) fn get_or_materialize_many(
    cache: &Cache,
    ctx: &Context,
    current: &GraphSet,
    history: &EntityHistory,
    wanted: &[usize],
) -> Result<Vec<VersionedGraph>, Error> {
    let fingerprint = history.fingerprint();
    let snaps = history.snapshots();
    let n = snaps.len();
    let entity = history.entity();

    let mut found: HashMap<usize, GraphSet> = HashMap::new();
    let mut missing = Vec::new();
    for &k in wanted {
        if k + 1 == n {
            // The live state needs no reconstruction.
            found.insert(k, current.clone());
            continue;
        }
        match cache.get(entity, snaps[k].generated_at, &fingerprint) {
            Ok(Some(g)) => {
                found.insert(k, g);
            }
            Ok(None) => missing.push(k),
            Err(e) => {
                ctx.warn(format!("{e}; reconstructing instead"));
                missing.push(k);
            }
        }
    }
    let hits = (found.len() - usize::from(wanted.last() == Some(&(n - 1)))) as u64;
    cache.hits.fetch_add(hits, Ordering::Relaxed);
    cache.rebuilds.fetch_add(missing.len() as u64, Ordering::Relaxed);
    ctx.count(|s| {
        s.cache_hits += hits;
        s.cache_rebuilds += missing.len() as u64;
    });

    for v in ctx.materializer().chain(current, history, &missing) {
        let k = history
            .index_of_time(v.time())
            .expect("materialized versions come from the history");
        if let Err(e) = cache.put(entity, v.time(), &fingerprint, &v.graphs) {
            ctx.warn(format!("{e}; entry not stored"));
        }
        found.insert(k, v.graphs);
    }

    Ok(wanted
        .iter()
        .map(|&k| VersionedGraph {
            entity: entity.clone(),
            snapshot: snaps[k].clone(),
            graphs: found.remove(&k).expect("every wanted version resolved"),
            reconstructed: k + 1 < n,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Literal, Quad, Term, Triple};

    fn graphs() -> GraphSet {
        let t = Triple::new(Term::iri("http://e/x").unwrap(), Iri::new("http://e/p").unwrap(), Literal::string("v").into()).unwrap();
        [Quad::new(t, Some(Iri::new("http://e/g").unwrap()))].into_iter().collect()
    }

    #[test]
    fn put_then_get_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let e = Iri::new("http://e/x").unwrap();
        let t = Timestamp::from_unix(1_000);
        assert_eq!(cache.get(&e, t, "f1").unwrap(), None);
        cache.put(&e, t, "f1", &graphs()).unwrap();
        assert_eq!(cache.get(&e, t, "f1").unwrap(), Some(graphs()));
        assert_eq!(cache.get(&e, t, "f2").unwrap(), None);

        let reopened = Cache::open(dir.path()).unwrap();
        assert_eq!(reopened.get(&e, t, "f1").unwrap(), Some(graphs()));
        reopened.clear().unwrap();
        assert!(reopened.is_empty());
        assert_eq!(Cache::open(dir.path()).unwrap().get(&e, t, "f1").unwrap(), None);
    }

    #[test]
    fn torn_index_lines_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(INDEX_FILE), "{\"entity\":").unwrap();
        assert!(Cache::open(dir.path()).unwrap().is_empty());
    }
}
