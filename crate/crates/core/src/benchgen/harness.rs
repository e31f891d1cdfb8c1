//! Timing harness over a generated dataset: the ten retrieval workloads
//! (materialization of one or all versions, and single/cross version and
//! delta queries on known and unknown subjects), each reported with mean,
//! standard deviation, per-snapshot overhead and a latest-version baseline.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{queries, EntityKind, Generated};
use crate::cache::Cache;
use crate::error::Error;
use crate::rdf::Iri;
use crate::sources::Context;
use crate::sparql::{evaluate, parse_select};
use crate::time::{TimeInterval, Timestamp};
use crate::version_query::{self, QueryMode};
use crate::{delta_query, SolutionSet};

const DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarnessConfig {
    /// Known-subject workloads run once per sampled expression.
    pub entities: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub text_index: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            entities: 20,
            repetitions: 3,
            seed: 42,
            cache_dir: None,
            text_index: false,
        }
    }
}

/// One workload class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadRow {
    pub workload: String,
    pub runs: usize,
    pub mean_s: f64,
    pub stdev_s: f64,
    /// `mean_s / snapshots_involved`.
    pub overhead_s: f64,
    pub snapshots_involved: f64,
    pub entities_involved: f64,
    pub baseline_mean_s: f64,
    pub baseline_stdev_s: f64,
    /// Whether answers matched the ledger before timing; empty when unchecked.
    pub verified: Option<bool>,
    pub peak_rss_kb: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub notes: Vec<String>,
    pub config: HarnessConfig,
    pub rows: Vec<WorkloadRow>,
}

pub const WORKLOADS: [&str; 10] = [
    "1. Materialization of all versions",
    "2. Materialization of a single version",
    "3. Cross-version structured query SP?",
    "4. Single-version structured query SP?",
    "5. Cross-version structured query ?PO",
    "6. Single-version structured query ?PO",
    "7. Cross-delta structured query SP?",
    "8. Single-delta structured query SP?",
    "9. Cross-delta structured query ?PO",
    "10. Single-delta structured query ?PO",
];

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("rows serialize");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
        let mut out = String::new();
        for n in &self.notes {
            out.push_str("# ");
            out.push_str(n);
            out.push('\n');
        }
        out.push_str(&body);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs a closure once per repetition and returns the wall-clock samples.
struct Samples {
    times: Vec<f64>,
    baseline: Vec<f64>,
    snapshots: Vec<f64>,
    entities: Vec<f64>,
    verified: Option<bool>,
}

impl Samples {
    fn new() -> Self {
        Samples {
            times: Vec::new(),
            baseline: Vec::new(),
            snapshots: Vec::new(),
            entities: Vec::new(),
            verified: None,
        }
    }

    fn verify(&mut self, ok: bool) {
        self.verified = Some(self.verified.unwrap_or(true) && ok);
    }

    fn row(self, workload: &str) -> WorkloadRow {
        let (mean_s, stdev_s) = mean_stdev(&self.times);
        let (baseline_mean_s, baseline_stdev_s) = mean_stdev(&self.baseline);
        let snapshots_involved = mean_stdev(&self.snapshots).0;
        WorkloadRow {
            workload: workload.to_string(),
            runs: self.times.len(),
            mean_s,
            stdev_s,
            overhead_s: if snapshots_involved > 0.0 { mean_s / snapshots_involved } else { 0.0 },
            snapshots_involved,
            entities_involved: mean_stdev(&self.entities).0,
            baseline_mean_s,
            baseline_stdev_s,
            verified: self.verified,
            peak_rss_kb: peak_rss_kb(),
        }
    }
}

/// Mean and sample standard deviation.
pub fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Peak resident set size of this process, where the platform reports it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

struct Harness<'g> {
    generated: &'g Generated,
    config: &'g HarnessConfig,
}

impl Harness<'_> {
    fn context(&self) -> Result<Context, Error> {
        let mut ctx = Context::in_memory(&self.generated.data, &self.generated.provenance)
            .with_text_index(self.config.text_index);
        if let Some(dir) = &self.config.cache_dir {
            let cache = Cache::open(dir).map_err(|e| crate::sources::SourceError::Config(format!("cache: {e}")))?;
            ctx = ctx.with_cache(cache);
        }
        Ok(ctx)
    }

    /// Snapshots between the present and the oldest version an answer needs.
    fn snapshots_since(&self, entities: &BTreeSet<Iri>, interval: TimeInterval) -> usize {
        let ledger = &self.generated.ledger;
        entities
            .iter()
            .filter_map(|e| ledger.entities.get(e))
            .map(|l| {
                let oldest = match interval.start {
                    None => Some(0),
                    Some(s) => l.index_at(s).or_else(|| (!l.times.is_empty() && interval.contains(l.times[0])).then_some(0)),
                };
                oldest.map_or(0, |k| l.times.len() - k)
            })
            .sum()
    }

    fn snapshots_within(&self, entities: &BTreeSet<Iri>, interval: TimeInterval) -> usize {
        let ledger = &self.generated.ledger;
        entities
            .iter()
            .filter_map(|e| ledger.entities.get(e))
            .map(|l| l.times.iter().filter(|t| interval.contains(**t)).count())
            .sum()
    }

    fn baseline(&self, query: &str) -> Result<f64, Error> {
        let parsed = parse_select(query)?;
        let (r, secs) = timed(|| evaluate(&parsed, &self.generated.data));
        r?;
        Ok(secs)
    }

    /// Cross-version answers equal evaluation of the ledger's dataset at each
    /// key, restricted to the relevant entities.
    fn check_versions(&self, query: &str, results: &std::collections::BTreeMap<Timestamp, SolutionSet>, relevant: &BTreeSet<Iri>) -> Result<bool, Error> {
        let parsed = parse_select(query)?;
        for (t, got) in results {
            let expected = evaluate(&parsed, &self.generated.ledger.dataset_at_for(*t, relevant))?;
            if &expected != got {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Runs all ten workloads against `generated`.
pub fn bench_run(generated: &Generated, config: &HarnessConfig) -> Result<BenchReport, Error> {
    let h = Harness { generated, config };
    let ledger = &generated.ledger;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let expressions: Vec<&Iri> = ledger
        .of_kind(EntityKind::Expression)
        .into_iter()
        .filter(|e| !ledger.entities[*e].is_deleted())
        .collect();
    let sample: Vec<&Iri> = expressions
        .choose_multiple(&mut rng, config.entities.min(expressions.len()))
        .copied()
        .collect();
    let reps = config.repetitions.max(1);
    let all_times = ledger.all_times();
    let median = all_times.get(all_times.len() / 2).copied().unwrap_or(Timestamp::from_unix(0));
    let window = TimeInterval {
        start: Some(median),
        end: Some(Timestamp::from_unix(median.unix() + 7 * DAY)),
    };
    let mut rows = Vec::with_capacity(10);

    // 1-2: materialization of a known entity.
    let mut all = Samples::new();
    let mut single = Samples::new();
    for e in &sample {
        let l = &ledger.entities[*e];
        let n = l.times.len();
        let mid = l.times[n / 2];
        for _ in 0..reps {
            let ctx = h.context()?;
            let (r, secs) = timed(|| ctx.materialize_all(e, TimeInterval::UNBOUNDED));
            let versions = r?;
            all.verify(versions.iter().map(|v| &v.graphs).eq(l.versions.iter()));
            all.times.push(secs);
            all.snapshots.push(n as f64);
            all.entities.push(1.0);
            let ctx = h.context()?;
            let (r, secs) = timed(|| ctx.current_graph(e));
            r?;
            all.baseline.push(secs);

            let ctx = h.context()?;
            let (r, secs) = timed(|| ctx.materialize_at(e, mid));
            let (v, _) = r?;
            single.verify(Some(&v.graphs) == l.version_at(mid));
            single.times.push(secs);
            single.snapshots.push((n - n / 2) as f64);
            single.entities.push(1.0);
            single.baseline.push(secs_of(|| ctx.current_graph(e).map(drop))?);
        }
    }
    rows.push(all.row(WORKLOADS[0]));
    rows.push(single.row(WORKLOADS[1]));

    // 3-6: structured queries on versions.
    let known: Vec<(String, Timestamp)> = sample
        .iter()
        .map(|e| {
            let l = &ledger.entities[*e];
            (queries::known_subject(e), l.times[l.times.len() / 2])
        })
        .collect();
    let unknown = vec![(queries::unknown_subject(), median)];
    for (workloads, cases) in [((WORKLOADS[2], WORKLOADS[3]), &known), ((WORKLOADS[4], WORKLOADS[5]), &unknown)] {
        let mut cv = Samples::new();
        let mut sv = Samples::new();
        for (q, t) in cases {
            let baseline = h.baseline(q)?;
            for rep in 0..reps {
                let ctx = h.context()?;
                let (r, secs) = timed(|| version_query::run(q, QueryMode::CrossVersion, TimeInterval::UNBOUNDED, &ctx));
                let out = r?;
                if rep == 0 {
                    cv.verify(h.check_versions(q, &out.results, &out.relevant)?);
                }
                cv.times.push(secs);
                cv.baseline.push(baseline);
                cv.snapshots.push(h.snapshots_since(&out.relevant, TimeInterval::UNBOUNDED) as f64);
                cv.entities.push(out.relevant.len() as f64);

                let ctx = h.context()?;
                let (r, secs) = timed(|| version_query::run(q, QueryMode::SingleVersion(*t), TimeInterval::UNBOUNDED, &ctx));
                let out = r?;
                if rep == 0 {
                    sv.verify(h.check_versions(q, &out.results, &out.relevant)?);
                }
                sv.times.push(secs);
                sv.baseline.push(baseline);
                sv.snapshots.push(h.snapshots_since(&out.relevant, TimeInterval::instant(*t)) as f64);
                sv.entities.push(out.relevant.len() as f64);
            }
        }
        rows.push(cv.row(workloads.0));
        rows.push(sv.row(workloads.1));
    }

    // 7-10: structured queries on deltas.
    let no_props = BTreeSet::new();
    let known_windows: Vec<(String, TimeInterval)> = sample
        .iter()
        .map(|e| {
            let l = &ledger.entities[*e];
            let k = l.times.len() / 2;
            let end = l.times.get(k + 1).copied().unwrap_or(l.times[k]);
            (queries::known_subject(e), TimeInterval { start: Some(l.times[k]), end: Some(end) })
        })
        .collect();
    let unknown_windows = vec![(queries::unknown_subject(), window)];
    for (workloads, cases) in [((WORKLOADS[6], WORKLOADS[7]), &known_windows), ((WORKLOADS[8], WORKLOADS[9]), &unknown_windows)] {
        let mut cd = Samples::new();
        let mut sd = Samples::new();
        for (q, interval) in cases {
            let baseline = h.baseline(q)?;
            for (samples, scope) in [(&mut cd, TimeInterval::UNBOUNDED), (&mut sd, *interval)] {
                for _ in 0..reps {
                    let ctx = h.context()?;
                    let (r, secs) = timed(|| delta_query::run(q, &no_props, scope, &ctx));
                    let report = r?;
                    samples.times.push(secs);
                    samples.baseline.push(baseline);
                    samples.snapshots.push(h.snapshots_within(&report.relevant, scope) as f64);
                    samples.entities.push(report.relevant.len() as f64);
                }
            }
        }
        rows.push(cd.row(workloads.0));
        rows.push(sd.row(workloads.1));
    }

    Ok(BenchReport {
        notes: vec![
            format!(
                "dataset: seed {} with {} entities; {} sampled known subjects; {} repetitions",
                generated.spec.seed,
                generated.spec.n_entities,
                sample.len(),
                reps
            ),
            "overhead_s = mean_s / snapshots_involved".into(),
            "version workloads count the snapshots between the present and the oldest version needed".into(),
            "delta workloads count the in-interval snapshots of every entity found relevant, present or deleted".into(),
            "entities_involved counts the distinct entities reached while discovering relevant entities".into(),
            "baseline: the same query evaluated on the latest version only".into(),
        ],
        config: config.clone(),
        rows,
    })
}

fn secs_of(f: impl FnOnce() -> Result<(), Error>) -> Result<f64, Error> {
    let (r, secs) = timed(f);
    r.map(|_| secs)
}
