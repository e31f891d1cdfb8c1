//! The SPARQL endpoint backend against a small in-process endpoint that
//! answers the fixed query shapes the client sends.

mod common;

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use chrono_rdf::benchgen::queries;
use chrono_rdf::delta_query;
use chrono_rdf::sources::{load_sources, SourceConfig, SparqlClient};
use chrono_rdf::version_query::{self, QueryMode};
use chrono_rdf::{GraphSet, Term, TimeInterval};
use common::*;
use regex::Regex;
use serde_json::{json, Value};

const SPECIALIZATION_OF: &str = "http://www.w3.org/ns/prov#specializationOf";
const HAS_UPDATE_QUERY: &str = "https://w3id.org/oc/ontology/hasUpdateQuery";

#[derive(Clone, Copy)]
enum Behaviour {
    Answer,
    Fail(u16),
    /// Stalls the first request past the client timeout.
    StallOnce(Duration),
}

struct Endpoint {
    url: String,
    requests: Arc<AtomicUsize>,
}

fn serve(graph: GraphSet, behaviour: Behaviour) -> Endpoint {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/sparql", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = requests.clone();
    let graph = Arc::new(graph);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let graph = graph.clone();
            std::thread::spawn(move || handle(stream, &graph, behaviour, n));
        }
    });
    Endpoint { url, requests }
}

fn handle(mut stream: TcpStream, graph: &GraphSet, behaviour: Behaviour, n: usize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut length = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        if line == "\r\n" {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            length = v.trim().parse().unwrap();
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let query = String::from_utf8(body).unwrap();
    let (status, payload) = match behaviour {
        Behaviour::Fail(code) => (code, "endpoint exploded".to_string()),
        Behaviour::StallOnce(d) if n == 0 => {
            std::thread::sleep(d);
            (200, answer(graph, &query).to_string())
        }
        _ => (200, answer(graph, &query).to_string()),
    };
    let head = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/sparql-results+json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        payload.len()
    );
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(payload.as_bytes());
}

fn binding(t: &Term) -> Value {
    match t {
        Term::Iri(i) => json!({"type": "uri", "value": i.as_str()}),
        Term::Blank(b) => json!({"type": "bnode", "value": b.label()}),
        Term::Literal(l) => match (l.language(), l.datatype()) {
            (Some(lang), _) => json!({"type": "literal", "value": l.value(), "xml:lang": lang}),
            (None, Some(dt)) => json!({"type": "literal", "value": l.value(), "datatype": dt.as_str()}),
            (None, None) => json!({"type": "literal", "value": l.value()}),
        },
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}

/// Evaluates the handful of shapes the client produces.
fn answer(graph: &GraphSet, query: &str) -> Value {
    let rows: Vec<Value> = if let Some(c) = Regex::new(r"^SELECT \?p \?o \?g WHERE \{ GRAPH \?g \{ <([^>]+)> \?p \?o \} \}$").unwrap().captures(query) {
        graph
            .iter()
            .filter(|q| q.subject().as_iri().is_some_and(|s| s.as_str() == &c[1]))
            .map(|q| json!({"p": binding(&Term::Iri(q.predicate().clone())), "o": binding(q.object()), "g": binding(&Term::Iri(q.graph.clone().unwrap()))}))
            .collect()
    } else if let Some(c) = Regex::new(r"^SELECT DISTINCT \?s WHERE \{ GRAPH \?g \{ \?s (\S+) (.+) \} \}$").unwrap().captures(query) {
        let subjects: BTreeSet<&Term> = graph
            .iter()
            .filter(|q| &c[1] == "?p" || q.predicate().to_string() == c[1])
            .filter(|q| &c[2] == "?o" || q.object().to_string() == c[2])
            .map(|q| q.subject())
            .collect();
        subjects.into_iter().map(|s| json!({"s": binding(s)})).collect()
    } else if let Some(c) = Regex::new(r"^SELECT \?s \?p \?o \?g WHERE \{ GRAPH \?g \{ \?s <[^>]+> <([^>]+)> \. \?s \?p \?o \} \}$").unwrap().captures(query) {
        let snapshots: BTreeSet<&Term> = graph
            .iter()
            .filter(|q| q.predicate().as_str() == SPECIALIZATION_OF && q.object().as_iri().is_some_and(|o| o.as_str() == &c[1]))
            .map(|q| q.subject())
            .collect();
        graph
            .iter()
            .filter(|q| snapshots.contains(q.subject()))
            .map(|q| json!({"s": binding(q.subject()), "p": binding(&Term::Iri(q.predicate().clone())), "o": binding(q.object()), "g": binding(&Term::Iri(q.graph.clone().unwrap()))}))
            .collect()
    } else if query.starts_with("SELECT ?s ?e ?u WHERE") {
        let needles: Vec<String> = Regex::new(r#"CONTAINS\(STR\(\?u\), "((?:[^"\\]|\\.)*)"\)"#)
            .unwrap()
            .captures_iter(query)
            .map(|c| unescape(&c[1]))
            .collect();
        graph
            .iter()
            .filter(|q| q.predicate().as_str() == HAS_UPDATE_QUERY)
            .filter(|q| needles.iter().all(|n| q.object().as_literal().unwrap().value().contains(n.as_str())))
            .map(|u| {
                let e = graph
                    .iter()
                    .find(|q| q.subject() == u.subject() && q.predicate().as_str() == SPECIALIZATION_OF)
                    .unwrap();
                json!({"s": binding(u.subject()), "e": binding(e.object()), "u": binding(u.object())})
            })
            .collect()
    } else {
        panic!("unexpected query shape: {query}");
    };
    json!({"head": {"vars": []}, "results": {"bindings": rows}})
}

#[test]
fn endpoint_backend_matches_local_files() {
    let g = small(21, 60);
    let data = serve(g.data.clone(), Behaviour::Answer);
    let prov = serve(g.provenance.clone(), Behaviour::Answer);
    let config = SourceConfig {
        data: vec![data.url.clone()],
        provenance: vec![prov.url.clone()],
        ..SourceConfig::default()
    };
    let mut corpus = cv_corpus(&g);
    corpus.truncate(10);
    for (q, interval) in &corpus {
        let remote = load_sources(&config).unwrap();
        let a = version_query::run(q, QueryMode::CrossVersion, *interval, &ctx(&g)).unwrap();
        let b = version_query::run(q, QueryMode::CrossVersion, *interval, &remote).unwrap();
        assert!(a.results == b.results, "{q}");
        assert_eq!(a.relevant, b.relevant, "{q}");
        let props = BTreeSet::new();
        let a = delta_query::run(q, &props, *interval, &ctx(&g)).unwrap();
        let b = delta_query::run(q, &props, *interval, &remote).unwrap();
        assert_eq!(a, b, "{q}");
    }
    assert!(data.requests.load(Ordering::SeqCst) > 0);
    assert!(prov.requests.load(Ordering::SeqCst) > 0);
}

#[test]
fn endpoint_error_status_is_reported() {
    let g = small(22, 10);
    let data = serve(g.data.clone(), Behaviour::Fail(500));
    let config = SourceConfig {
        data: vec![data.url.clone()],
        provenance: vec![data.url.clone()],
        ..SourceConfig::default()
    };
    let ctx = load_sources(&config).unwrap();
    let err = version_query::run(&queries::unknown_subject(), QueryMode::CrossVersion, TimeInterval::UNBOUNDED, &ctx).unwrap_err();
    assert_eq!(err.code(), "NetworkError");
    assert!(err.to_string().contains("status 500"), "{err}");
}

#[test]
fn a_timed_out_request_is_retried_once() {
    let g = small(23, 10);
    let endpoint = serve(g.data.clone(), Behaviour::StallOnce(Duration::from_millis(600)));
    let client = SparqlClient::new(&endpoint.url, Duration::from_millis(200));
    let rows = client.select("SELECT DISTINCT ?s WHERE { GRAPH ?g { ?s ?p ?o } }").unwrap();
    assert!(!rows.is_empty());
    assert_eq!(endpoint.requests.load(Ordering::SeqCst), 2);
}
