//! Candidate retrieval from scholarly indexes.
//!
//! Each parsed citation gets up to three lookups: a Crossref DOI lookup when
//! the citation carries a DOI, then a Semantic Scholar title search and a
//! Crossref title search (each up to `k` records). Results are normalized to
//! [`CandidateRecord`] and de-duplicated on DOI.

mod fixture;
mod live;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::refparse::{is_valid_doi, ParsedCitation};

pub use fixture::{FixtureBackend, FixtureEntry};
pub use live::{
    CachedResponse, Clock, HttpResponse, HttpTransport, LiveBackend, LiveEndpoints, RateLimiter,
    ResponseCache, RetryPolicy, SystemClock, TransportError, UreqTransport,
};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("request to {url} failed after {attempts} attempt(s): {message}")]
    Transport {
        url: String,
        attempts: u32,
        message: String,
    },
    #[error("unexpected HTTP status {status} from {url}")]
    HttpStatus { url: String, status: u16 },
    #[error("could not decode response from {url}: {message}")]
    Decode { url: String, message: String },
    #[error("DOI lookup for {doi} failed: {source}")]
    Doi {
        doi: String,
        #[source]
        source: Box<RetrievalError>,
    },
    #[error("every lookup failed: {}", fmt_failures(.0))]
    AllLookupsFailed(Vec<LookupFailure>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fixture {path}: {message}")]
    Fixture { path: String, message: String },
    #[error("cache {path}: {message}")]
    Cache { path: String, message: String },
}

fn fmt_failures(f: &[LookupFailure]) -> String {
    f.iter()
        .map(|l| format!("{}: {}", l.lookup, l.message))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Crossref,
    SemanticScholar,
    Fixture,
}

/// A live index that can be searched by title.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Service {
    Crossref,
    SemanticScholar,
}

impl Service {
    pub fn key(self) -> &'static str {
        match self {
            Service::Crossref => "crossref",
            Service::SemanticScholar => "semantic_scholar",
        }
    }
}

impl fmt::Display for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lookup {
    Doi,
    S2Title,
    CrossrefTitle,
}

impl fmt::Display for Lookup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lookup::Doi => "doi",
            Lookup::S2Title => "s2_title",
            Lookup::CrossrefTitle => "crossref_title",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupFailure {
    pub lookup: Lookup,
    pub message: String,
}

/// One record retrieved from an index, in the common shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub source: Source,
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub venue: Option<String>,
    #[serde(default)]
    pub year: Option<i32>,
    #[serde(default)]
    pub doi: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    /// Maximum candidates per title search.
    pub k: usize,
    /// Requests per second to Crossref.
    pub crossref_rate: f64,
    /// Requests per second to Semantic Scholar.
    pub s2_rate: f64,
    pub cache_dir: Option<PathBuf>,
    /// Contact address for Crossref's polite pool.
    pub mailto: Option<String>,
    pub s2_api_key: Option<String>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            crossref_rate: 5.0,
            s2_rate: 1.0,
            cache_dir: None,
            mailto: None,
            s2_api_key: None,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.k == 0 {
            return Err(RetrievalError::InvalidInput("k must be at least 1".into()));
        }
        for (name, rate) in [("crossref", self.crossref_rate), ("semantic scholar", self.s2_rate)] {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(RetrievalError::InvalidInput(format!(
                    "{name} rate limit must be positive, got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Anything that can answer the two kinds of lookup.
pub trait IndexBackend: Send + Sync {
    /// `Ok(None)` when the DOI does not resolve.
    fn lookup_doi(&self, doi: &str) -> Result<Option<CandidateRecord>, RetrievalError>;

    /// Records in the service's own relevance order, at most `limit`.
    fn search_title(
        &self,
        service: Service,
        title: &str,
        limit: usize,
    ) -> Result<Vec<CandidateRecord>, RetrievalError>;
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<CandidateRecord>,
    pub lookups_attempted: Vec<Lookup>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lookups_failed: Vec<LookupFailure>,
}

pub fn lookup_doi(
    doi: &str,
    backend: &dyn IndexBackend,
) -> Result<Option<CandidateRecord>, RetrievalError> {
    if !is_valid_doi(doi) {
        return Err(RetrievalError::InvalidInput(format!("not a DOI: {doi}")));
    }
    backend.lookup_doi(doi.trim()).map_err(|e| RetrievalError::Doi {
        doi: doi.to_string(),
        source: Box::new(e),
    })
}

pub fn search_title(
    title: &str,
    service: Service,
    cfg: &RetrievalConfig,
    backend: &dyn IndexBackend,
) -> Result<Vec<CandidateRecord>, RetrievalError> {
    if title.trim().is_empty() {
        return Err(RetrievalError::InvalidInput("empty title".into()));
    }
    let mut records = backend.search_title(service, title, cfg.k)?;
    records.truncate(cfg.k);
    Ok(records)
}

/// Run every applicable lookup and merge the results.
///
/// A failing lookup is recorded and the others still count; the call only
/// errors when every attempted lookup failed.
pub fn retrieve_candidates(
    parsed: &ParsedCitation,
    cfg: &RetrievalConfig,
    backend: &dyn IndexBackend,
) -> Result<CandidateSet, RetrievalError> {
    if !parsed.parse_ok {
        return Err(RetrievalError::InvalidInput(format!(
            "citation {} did not parse",
            parsed.citation_index
        )));
    }
    let mut set = CandidateSet::default();
    let mut gathered: Vec<CandidateRecord> = Vec::new();

    if let Some(doi) = parsed.doi.as_deref().filter(|d| is_valid_doi(d)) {
        set.lookups_attempted.push(Lookup::Doi);
        match lookup_doi(doi, backend) {
            Ok(hit) => gathered.extend(hit),
            Err(e) => set.lookups_failed.push(LookupFailure {
                lookup: Lookup::Doi,
                message: e.to_string(),
            }),
        }
    }
    if let Some(title) = parsed.title.as_deref().filter(|t| !t.trim().is_empty()) {
        for (lookup, service) in [
            (Lookup::S2Title, Service::SemanticScholar),
            (Lookup::CrossrefTitle, Service::Crossref),
        ] {
            set.lookups_attempted.push(lookup);
            match search_title(title, service, cfg, backend) {
                Ok(found) => gathered.extend(found),
                Err(e) => set.lookups_failed.push(LookupFailure {
                    lookup,
                    message: e.to_string(),
                }),
            }
        }
    }

    if !set.lookups_attempted.is_empty() && set.lookups_failed.len() == set.lookups_attempted.len() {
        return Err(RetrievalError::AllLookupsFailed(set.lookups_failed));
    }
    set.candidates = dedup_by_doi(gathered);
    Ok(set)
}

/// Drop later records whose lowercase DOI matches an earlier one.
pub fn dedup_by_doi(records: Vec<CandidateRecord>) -> Vec<CandidateRecord> {
    let mut seen = std::collections::HashSet::new();
    records
        .into_iter()
        .filter(|r| match &r.doi {
            Some(d) => seen.insert(d.trim().to_lowercase()),
            None => true,
        })
        .collect()
}

/// Raised by [`normalize_record`] for records that should be skipped.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("record has no title")]
pub struct SkipRecord;

fn first_string(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => items.iter().find_map(|i| i.as_str().map(str::to_string)),
        _ => None,
    }
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|s| !s.is_empty())
}

fn coerce_year(v: Option<&Value>) -> Option<i32> {
    let y = match v? {
        Value::Number(n) => n.as_i64()? as i32,
        Value::String(s) => s.trim().get(..4)?.parse().ok()?,
        _ => return None,
    };
    (crate::claimset::MIN_YEAR..=crate::claimset::MAX_YEAR)
        .contains(&y)
        .then_some(y)
}

fn crossref_year(raw: &Value) -> Option<i32> {
    ["issued", "published", "published-print", "published-online", "created"]
        .iter()
        .find_map(|field| coerce_year(raw.get(field)?.get("date-parts")?.get(0)?.get(0)))
}

/// Convert one service-specific JSON record into a [`CandidateRecord`].
pub fn normalize_record(raw: &Value, source: Source) -> Result<CandidateRecord, SkipRecord> {
    let record = match source {
        Source::Crossref => {
            let authors = raw
                .get("author")
                .and_then(Value::as_array)
                .map(|list| {
                    list.iter()
                        .filter_map(|a| {
                            let family = a.get("family").and_then(Value::as_str).map(str::trim);
                            let given = a.get("given").and_then(Value::as_str).map(str::trim);
                            match (family, given) {
                                (Some(f), Some(g)) if !f.is_empty() && !g.is_empty() => {
                                    Some(format!("{f}, {g}"))
                                }
                                (Some(f), _) if !f.is_empty() => Some(f.to_string()),
                                _ => a.get("name").and_then(Value::as_str).map(str::to_string),
                            }
                        })
                        .collect()
                })
                .unwrap_or_default();
            CandidateRecord {
                source,
                title: non_empty(first_string(raw.get("title"))).ok_or(SkipRecord)?,
                authors,
                venue: non_empty(first_string(raw.get("container-title"))),
                year: crossref_year(raw),
                doi: non_empty(first_string(raw.get("DOI"))),
            }
        }
        Source::SemanticScholar => {
            let authors = raw
                .get("authors")
                .and_then(Value::as_array)
                .map(|list| {
                    list.iter()
                        .filter_map(|a| a.get("name").and_then(Value::as_str))
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            let doi = raw
                .get("externalIds")
                .and_then(|ids| ids.get("DOI"))
                .and_then(Value::as_str)
                .map(str::to_string);
            CandidateRecord {
                source,
                title: non_empty(first_string(raw.get("title"))).ok_or(SkipRecord)?,
                authors,
                venue: non_empty(first_string(raw.get("venue"))),
                year: coerce_year(raw.get("year")),
                doi: non_empty(doi),
            }
        }
        Source::Fixture => {
            let authors = raw
                .get("authors")
                .and_then(Value::as_array)
                .map(|list| {
                    list.iter()
                        .filter_map(|a| match a {
                            Value::String(s) => Some(s.clone()),
                            other => other.get("name").and_then(Value::as_str).map(str::to_string),
                        })
                        .collect()
                })
                .unwrap_or_default();
            CandidateRecord {
                source,
                title: non_empty(first_string(raw.get("title"))).ok_or(SkipRecord)?,
                authors,
                venue: non_empty(first_string(raw.get("venue"))),
                year: coerce_year(raw.get("year")),
                doi: non_empty(first_string(raw.get("doi"))),
            }
        }
    };
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn rec(title: &str, doi: Option<&str>) -> CandidateRecord {
        CandidateRecord {
            source: Source::Fixture,
            title: title.into(),
            authors: vec![],
            venue: None,
            year: None,
            doi: doi.map(str::to_string),
        }
    }

    #[test]
    fn crossref_shape() {
        let raw = json!({
            "DOI": "10.1038/nature14539",
            "title": ["Deep learning"],
            "author": [{"given": "Yann", "family": "LeCun"}, {"name": "Consortium X"}],
            "container-title": ["Nature"],
            "issued": {"date-parts": [[2015, 5, 27]]}
        });
        let r = normalize_record(&raw, Source::Crossref).unwrap();
        assert_eq!(r.title, "Deep learning");
        assert_eq!(r.authors, ["LeCun, Yann", "Consortium X"]);
        assert_eq!(r.venue.as_deref(), Some("Nature"));
        assert_eq!(r.year, Some(2015));
        assert_eq!(r.doi.as_deref(), Some("10.1038/nature14539"));
    }

    #[test]
    fn s2_shape() {
        let raw = json!({
            "paperId": "abc",
            "title": "Deep learning",
            "authors": [{"authorId": "1", "name": "Yann LeCun"}],
            "venue": "Nature",
            "year": 2015,
            "externalIds": {"DOI": "10.1038/nature14539"}
        });
        let r = normalize_record(&raw, Source::SemanticScholar).unwrap();
        assert_eq!(r.authors, ["Yann LeCun"]);
        assert_eq!(r.year, Some(2015));
        assert_eq!(
            crate::matcher::author_overlap(&["LeCun, Y."], &r.authors),
            1.0
        );
    }

    #[test]
    fn missing_year_and_title() {
        let raw = json!({"title": "No year here", "authors": [], "venue": ""});
        let r = normalize_record(&raw, Source::SemanticScholar).unwrap();
        assert_eq!(r.year, None);
        assert_eq!(r.venue, None);
        assert_eq!(
            normalize_record(&json!({"title": []}), Source::Crossref),
            Err(SkipRecord)
        );
        assert_eq!(
            normalize_record(&json!({"year": 2020}), Source::SemanticScholar),
            Err(SkipRecord)
        );
        let r = normalize_record(&json!({"title": "T", "year": "2019"}), Source::Fixture).unwrap();
        assert_eq!(r.year, Some(2019));
    }

    #[test]
    fn dedup_keeps_first_and_doi_less_records() {
        let out = dedup_by_doi(vec![
            rec("a", Some("10.1/X")),
            rec("b", None),
            rec("c", Some("10.1/x")),
            rec("d", None),
        ]);
        let titles: Vec<_> = out.iter().map(|r| r.title.as_str()).collect();
        assert_eq!(titles, ["a", "b", "d"]);
    }

    struct Flaky {
        fail_doi: bool,
        fail_s2: bool,
        fail_crossref: bool,
        calls: AtomicUsize,
    }

    impl IndexBackend for Flaky {
        fn lookup_doi(&self, doi: &str) -> Result<Option<CandidateRecord>, RetrievalError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.fail_doi {
                return Err(RetrievalError::InvalidInput("boom".into()));
            }
            Ok(Some(rec("doi hit", Some(doi))))
        }

        fn search_title(
            &self,
            service: Service,
            _title: &str,
            limit: usize,
        ) -> Result<Vec<CandidateRecord>, RetrievalError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let fail = match service {
                Service::Crossref => self.fail_crossref,
                Service::SemanticScholar => self.fail_s2,
            };
            if fail {
                return Err(RetrievalError::InvalidInput("boom".into()));
            }
            Ok((0..limit + 3).map(|i| rec(&format!("{service} {i}"), None)).collect())
        }
    }

    fn parsed(title: Option<&str>, doi: Option<&str>) -> ParsedCitation {
        ParsedCitation {
            title: title.map(str::to_string),
            doi: doi.map(str::to_string),
            parse_ok: true,
            ..ParsedCitation::empty(0)
        }
    }

    fn flaky(fail_doi: bool, fail_s2: bool, fail_crossref: bool) -> Flaky {
        Flaky {
            fail_doi,
            fail_s2,
            fail_crossref,
            calls: AtomicUsize::new(0),
        }
    }

    #[test]
    fn degrade_when_some_lookups_fail() {
        let cfg = RetrievalConfig::default();
        let b = flaky(true, false, true);
        let set = retrieve_candidates(&parsed(Some("t"), Some("10.1000/a")), &cfg, &b).unwrap();
        assert_eq!(set.lookups_attempted, [Lookup::Doi, Lookup::S2Title, Lookup::CrossrefTitle]);
        assert_eq!(set.lookups_failed.len(), 2);
        assert_eq!(set.candidates.len(), 5);
        assert!(set.candidates.len() <= 1 + 2 * cfg.k);

        let b = flaky(true, true, true);
        assert!(matches!(
            retrieve_candidates(&parsed(Some("t"), Some("10.1000/a")), &cfg, &b),
            Err(RetrievalError::AllLookupsFailed(f)) if f.len() == 3
        ));
    }

    #[test]
    fn title_only_skips_doi() {
        let cfg = RetrievalConfig::default();
        let b = flaky(false, false, false);
        let set = retrieve_candidates(&parsed(Some("t"), None), &cfg, &b).unwrap();
        assert_eq!(set.lookups_attempted, [Lookup::S2Title, Lookup::CrossrefTitle]);
        assert_eq!(b.calls.load(Ordering::SeqCst), 2);
        assert_eq!(set.candidates.len(), 10);
    }

    #[test]
    fn unparsed_citation_rejected() {
        let cfg = RetrievalConfig::default();
        let b = flaky(false, false, false);
        let p = ParsedCitation::empty(0);
        assert!(retrieve_candidates(&p, &cfg, &b).is_err());
        assert_eq!(b.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn config_validation() {
        assert!(RetrievalConfig::default().validate().is_ok());
        let bad = RetrievalConfig { k: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RetrievalConfig { s2_rate: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
