use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

use serde_json::Value;

use super::{DataSource, ProvenanceSource, SourceError, UpdateRecord};
use crate::provenance::{OCO_HAS_UPDATE_QUERY, PROV_SPECIALIZATION_OF};
use crate::rdf::{BlankNode, GraphSet, Iri, Literal, Quad, Term, Triple};

pub type Row = HashMap<String, Term>;

/// A SPARQL 1.1 protocol client: queries are POSTed, results read as SPARQL-JSON.
pub struct SparqlClient {
    url: String,
    agent: ureq::Agent,
}

impl SparqlClient {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        SparqlClient { url: url.into(), agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Runs a SELECT query, retrying once on timeout.
    pub fn select(&self, query: &str) -> Result<Vec<Row>, SourceError> {
        match self.select_once(query) {
            Err(Attempt::Timeout) => {
                log::debug!("{}: timed out, retrying once", self.url);
                self.select_once(query).map_err(|e| e.into_error(&self.url))
            }
            other => other.map_err(|e| e.into_error(&self.url)),
        }
    }

    fn select_once(&self, query: &str) -> Result<Vec<Row>, Attempt> {
        log::debug!("POST {}: {query}", self.url);
        let mut response = self
            .agent
            .post(&self.url)
            .header("Content-Type", "application/sparql-query")
            .header("Accept", "application/sparql-results+json")
            .send(query)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => Attempt::Timeout,
                other => Attempt::Failed(None, other.to_string()),
            })?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .with_config()
            .limit(u64::MAX)
            .read_to_string()
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => Attempt::Timeout,
                other => Attempt::Failed(Some(status), other.to_string()),
            })?;
        if !(200..300).contains(&status) {
            let excerpt: String = body.chars().take(200).collect();
            return Err(Attempt::Failed(Some(status), excerpt));
        }
        parse_results(&body).map_err(|m| Attempt::Failed(Some(status), m))
    }
}

enum Attempt {
    Timeout,
    Failed(Option<u16>, String),
}

impl Attempt {
    fn into_error(self, url: &str) -> SourceError {
        let (status, message) = match self {
            Attempt::Timeout => (None, "timed out".to_string()),
            Attempt::Failed(status, message) => (status, message),
        };
        SourceError::Network {
            url: url.to_string(),
            status,
            message,
        }
    }
}

/// Parses a SPARQL-JSON results document.
pub fn parse_results(body: &str) -> Result<Vec<Row>, String> {
    let doc: Value = serde_json::from_str(body).map_err(|e| format!("invalid results document: {e}"))?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or("results document without results.bindings")?;
    bindings
        .iter()
        .map(|b| {
            let obj = b.as_object().ok_or("binding is not an object")?;
            obj.iter()
                .map(|(var, v)| Ok((var.clone(), json_term(v)?)))
                .collect::<Result<Row, String>>()
        })
        .collect()
}

fn json_term(v: &Value) -> Result<Term, String> {
    let kind = v.get("type").and_then(Value::as_str).ok_or("term without type")?;
    let value = v.get("value").and_then(Value::as_str).ok_or("term without value")?;
    match kind {
        "uri" => Iri::new(value).map(Term::Iri).map_err(|e| e.to_string()),
        "bnode" => {
            let label: String = value
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
                .collect();
            BlankNode::new(label).map(Term::Blank).map_err(|e| e.to_string())
        }
        "literal" | "typed-literal" => {
            if let Some(lang) = v.get("xml:lang").and_then(Value::as_str) {
                Literal::lang(value, lang).map(Term::Literal).map_err(|e| e.to_string())
            } else if let Some(dt) = v.get("datatype").and_then(Value::as_str) {
                let dt = Iri::new(dt).map_err(|e| e.to_string())?;
                Ok(Literal::typed(value, dt).into())
            } else {
                Ok(Literal::string(value).into())
            }
        }
        other => Err(format!("unknown term type {other:?}")),
    }
}

/// A string literal in SPARQL syntax.
fn sparql_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn take<'r>(row: &'r Row, var: &str) -> Result<&'r Term, SourceError> {
    row.get(var).ok_or_else(|| SourceError::Network {
        url: String::new(),
        status: None,
        message: format!("result row without ?{var}"),
    })
}

fn with_url(url: &str, e: SourceError) -> SourceError {
    match e {
        SourceError::Network {
            url: u,
            status,
            message,
        } if u.is_empty() => SourceError::Network {
            url: url.to_string(),
            status,
            message,
        },
        other => other,
    }
}

fn quad_from(url: &str, s: &Term, p: &Term, o: &Term, g: Option<&Term>) -> Result<Quad, SourceError> {
    let bad = |message: String| SourceError::Network {
        url: url.to_string(),
        status: None,
        message,
    };
    let predicate = p.as_iri().ok_or_else(|| bad(format!("non-IRI predicate {p}")))?.clone();
    let triple = Triple::new(s.clone(), predicate, o.clone()).map_err(|e| bad(e.to_string()))?;
    Ok(Quad::new(triple, g.and_then(Term::as_iri).cloned()))
}

/// Current data behind a SPARQL endpoint. Entity statements are read from
/// named graphs so that graph names survive.
pub struct RemoteData {
    client: SparqlClient,
}

impl RemoteData {
    pub fn new(client: SparqlClient) -> Self {
        RemoteData { client }
    }
}

impl DataSource for RemoteData {
    fn entity_quads(&self, entity: &Iri) -> Result<GraphSet, SourceError> {
        let query = format!("SELECT ?p ?o ?g WHERE {{ GRAPH ?g {{ {entity} ?p ?o }} }}");
        let url = self.client.url();
        self.client
            .select(&query)?
            .iter()
            .map(|row| {
                let (p, o) = (take(row, "p"), take(row, "o"));
                let (p, o) = (p.map_err(|e| with_url(url, e))?, o.map_err(|e| with_url(url, e))?);
                quad_from(url, &Term::Iri(entity.clone()), p, o, row.get("g"))
            })
            .collect()
    }

    fn subjects_matching(&self, predicate: Option<&Iri>, object: Option<&Term>) -> Result<BTreeSet<Iri>, SourceError> {
        let p = predicate.map_or_else(|| "?p".to_string(), |p| p.to_string());
        let o = object.map_or_else(|| "?o".to_string(), |o| o.to_string());
        let query = format!("SELECT DISTINCT ?s WHERE {{ GRAPH ?g {{ ?s {p} {o} }} }}");
        Ok(self
            .client
            .select(&query)?
            .iter()
            .filter_map(|row| row.get("s").and_then(Term::as_iri).cloned())
            .collect())
    }
}

/// Provenance behind a SPARQL endpoint.
pub struct RemoteProvenance {
    client: SparqlClient,
}

impl RemoteProvenance {
    pub fn new(client: SparqlClient) -> Self {
        RemoteProvenance { client }
    }
}

impl ProvenanceSource for RemoteProvenance {
    fn snapshot_quads(&self, entity: &Iri) -> Result<Vec<Quad>, SourceError> {
        let query = format!(
            "SELECT ?s ?p ?o ?g WHERE {{ GRAPH ?g {{ ?s <{PROV_SPECIALIZATION_OF}> {entity} . ?s ?p ?o }} }}"
        );
        let url = self.client.url();
        self.client
            .select(&query)?
            .iter()
            .map(|row| {
                let s = take(row, "s").map_err(|e| with_url(url, e))?;
                let p = take(row, "p").map_err(|e| with_url(url, e))?;
                let o = take(row, "o").map_err(|e| with_url(url, e))?;
                quad_from(url, s, p, o, row.get("g"))
            })
            .collect()
    }

    fn updates_containing(&self, needles: &[String]) -> Result<Vec<UpdateRecord>, SourceError> {
        let filter = if needles.is_empty() {
            String::new()
        } else {
            let tests: Vec<String> = needles
                .iter()
                .map(|n| format!("CONTAINS(STR(?u), {})", sparql_string(n)))
                .collect();
            format!(" FILTER({})", tests.join(" && "))
        };
        let query = format!(
            "SELECT ?s ?e ?u WHERE {{ GRAPH ?g {{ ?s <{PROV_SPECIALIZATION_OF}> ?e . ?s <{OCO_HAS_UPDATE_QUERY}> ?u }}{filter} }}"
        );
        let mut out = Vec::new();
        for row in self.client.select(&query)? {
            if let (Some(Term::Iri(s)), Some(Term::Iri(e)), Some(Term::Literal(u))) = (row.get("s"), row.get("e"), row.get("u")) {
                out.push(UpdateRecord {
                    entity: e.clone(),
                    snapshot: s.clone(),
                    text: u.value().to_string(),
                });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sparql_json() {
        let body = r#"{"head":{"vars":["s","o"]},"results":{"bindings":[
            {"s":{"type":"uri","value":"http://e/a"},"o":{"type":"literal","value":"x","xml:lang":"en"}},
            {"s":{"type":"bnode","value":"b0"},"o":{"type":"literal","value":"1","datatype":"http://www.w3.org/2001/XMLSchema#integer"}}
        ]}}"#;
        let rows = parse_results(body).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["o"].to_string(), "\"x\"@en");
        assert_eq!(rows[1]["s"].to_string(), "_:b0");
        assert!(parse_results("{}").is_err());
    }

    #[test]
    fn escapes_filter_strings() {
        assert_eq!(sparql_string("a\"b\\c"), r#""a\"b\\c""#);
    }
}
