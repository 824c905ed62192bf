//! HTTP-backed Crossref and Semantic Scholar lookups with an on-disk
//! response cache, per-service rate limiting and bounded retries.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;
use url::Url;

use super::{
    normalize_record, CandidateRecord, IndexBackend, RetrievalConfig, RetrievalError, Service,
    Source,
};
use crate::matcher::normalize_text;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// Minimal blocking GET; swapped for a mock in tests.
pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(user_agent: &str, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .user_agent(user_agent)
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<HttpResponse, TransportError> {
        let mut req = self.agent.get(url);
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req.call().map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Time source for rate limiting and backoff.
pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Spaces requests at least `1 / rate` apart.
///
/// Callers reserve the next free slot under the lock and sleep outside it,
/// so concurrent callers queue up instead of bursting.
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Duration>>,
}

impl RateLimiter {
    pub fn per_second(rate: f64) -> Self {
        Self {
            interval: Duration::from_secs_f64(1.0 / rate),
            next_slot: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    pub fn acquire(&self, clock: &dyn Clock) {
        let now = clock.now();
        let slot = {
            let mut next = self.next_slot.lock().unwrap();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        if slot > now {
            clock.sleep(slot - now);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub key: String,
    pub status: u16,
    pub body: String,
}

/// One immutable JSON file per query key, named by the key's SHA-256.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResponseCache {
    pub fn open(dir: &Path) -> Result<Self, RetrievalError> {
        fs::create_dir_all(dir).map_err(|e| RetrievalError::Cache {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        let digest = Sha256::digest(key.as_bytes());
        self.dir.join(format!("{}.json", hex::encode(digest)))
    }

    pub fn get(&self, key: &str) -> Option<CachedResponse> {
        let text = fs::read_to_string(self.path_for(key)).ok()?;
        let entry: CachedResponse = serde_json::from_str(&text).ok()?;
        (entry.key == key).then_some(entry)
    }

    /// Write once; an existing entry is never replaced.
    pub fn put(&self, entry: &CachedResponse) -> Result<(), RetrievalError> {
        let path = self.path_for(&entry.key);
        if path.exists() {
            return Ok(());
        }
        let cache_err = |e: std::io::Error| RetrievalError::Cache {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            path.file_stem().and_then(|s| s.to_str()).unwrap_or("entry"),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let body = serde_json::to_vec(entry).expect("cache entry serializes");
        let mut f = fs::File::create(&tmp).map_err(cache_err)?;
        f.write_all(&body).map_err(cache_err)?;
        f.sync_all().map_err(cache_err)?;
        drop(f);
        fs::rename(&tmp, &path).map_err(cache_err)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiveEndpoints {
    pub crossref: String,
    pub semantic_scholar: String,
}

impl Default for LiveEndpoints {
    fn default() -> Self {
        Self {
            crossref: "https://api.crossref.org".into(),
            semantic_scholar: "https://api.semanticscholar.org".into(),
        }
    }
}

const S2_FIELDS: &str = "title,authors,venue,year,externalIds";

pub struct LiveBackend {
    transport: Box<dyn HttpTransport>,
    clock: Arc<dyn Clock>,
    cache: Option<ResponseCache>,
    crossref_limiter: RateLimiter,
    s2_limiter: RateLimiter,
    endpoints: LiveEndpoints,
    retry: RetryPolicy,
    mailto: Option<String>,
    s2_api_key: Option<String>,
}

impl LiveBackend {
    pub fn new(
        cfg: &RetrievalConfig,
        transport: Box<dyn HttpTransport>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, RetrievalError> {
        cfg.validate()?;
        let cache = cfg.cache_dir.as_deref().map(ResponseCache::open).transpose()?;
        Ok(Self {
            transport,
            clock,
            cache,
            crossref_limiter: RateLimiter::per_second(cfg.crossref_rate),
            s2_limiter: RateLimiter::per_second(cfg.s2_rate),
            endpoints: LiveEndpoints::default(),
            retry: RetryPolicy::default(),
            mailto: cfg.mailto.clone(),
            s2_api_key: cfg.s2_api_key.clone(),
        })
    }

    /// Real network transport and wall clock.
    pub fn with_defaults(cfg: &RetrievalConfig) -> Result<Self, RetrievalError> {
        let ua = match &cfg.mailto {
            Some(m) => format!("citeverify/{} (mailto:{m})", env!("CARGO_PKG_VERSION")),
            None => format!("citeverify/{}", env!("CARGO_PKG_VERSION")),
        };
        Self::new(
            cfg,
            Box::new(UreqTransport::new(&ua, Duration::from_secs(30))),
            Arc::new(SystemClock::default()),
        )
    }

    pub fn with_endpoints(mut self, endpoints: LiveEndpoints) -> Self {
        self.endpoints = endpoints;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn limiter(&self, service: Service) -> &RateLimiter {
        match service {
            Service::Crossref => &self.crossref_limiter,
            Service::SemanticScholar => &self.s2_limiter,
        }
    }

    fn headers(&self, service: Service) -> Vec<(String, String)> {
        match service {
            Service::SemanticScholar => self
                .s2_api_key
                .iter()
                .map(|k| ("x-api-key".to_string(), k.clone()))
                .collect(),
            // Crossref gets its contact address as a query parameter and in the user agent.
            Service::Crossref => Vec::new(),
        }
    }

    /// Cached GET with rate limiting, retrying transport errors, 429 and 5xx.
    fn fetch(&self, service: Service, key: &str, url: &str) -> Result<HttpResponse, RetrievalError> {
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(key)) {
            return Ok(HttpResponse {
                status: hit.status,
                body: hit.body,
            });
        }
        let headers = self.headers(service);
        let mut last_error = String::new();
        for attempt in 0..self.retry.attempts {
            if attempt > 0 {
                self.clock
                    .sleep(self.retry.initial_backoff * 2u32.pow(attempt - 1));
            }
            self.limiter(service).acquire(self.clock.as_ref());
            match self.transport.get(url, &headers) {
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last_error = format!("HTTP {}", resp.status);
                }
                Ok(resp) => {
                    if let (Some(cache), 200 | 404) = (&self.cache, resp.status) {
                        cache.put(&CachedResponse {
                            key: key.to_string(),
                            status: resp.status,
                            body: resp.body.clone(),
                        })?;
                    }
                    return Ok(resp);
                }
                Err(e) => last_error = e.0,
            }
        }
        Err(RetrievalError::Transport {
            url: url.to_string(),
            attempts: self.retry.attempts,
            message: last_error,
        })
    }

    fn build_url(&self, base: &str, segments: &[&str], query: &[(&str, &str)]) -> Result<String, RetrievalError> {
        let mut url = Url::parse(base).map_err(|e| RetrievalError::InvalidInput(e.to_string()))?;
        url.path_segments_mut()
            .map_err(|_| RetrievalError::InvalidInput(format!("bad base url {base}")))?
            .pop_if_empty()
            .extend(segments);
        if !query.is_empty() {
            url.query_pairs_mut().extend_pairs(query);
        }
        Ok(url.to_string())
    }

    fn decode(url: &str, body: &str) -> Result<Value, RetrievalError> {
        serde_json::from_str(body).map_err(|e| RetrievalError::Decode {
            url: url.to_string(),
            message: e.to_string(),
        })
    }
}

pub(crate) fn title_query(title: &str) -> String {
    normalize_text(title).join(" ")
}

fn collect_records(items: Option<&Value>, source: Source, limit: usize) -> Vec<CandidateRecord> {
    items
        .and_then(Value::as_array)
        .map(|list| {
            list.iter()
                .filter_map(|raw| normalize_record(raw, source).ok())
                .take(limit)
                .collect()
        })
        .unwrap_or_default()
}

impl IndexBackend for LiveBackend {
    fn lookup_doi(&self, doi: &str) -> Result<Option<CandidateRecord>, RetrievalError> {
        let doi = doi.trim().to_lowercase();
        let key = format!("crossref|doi|{doi}");
        let mut query = Vec::new();
        if let Some(m) = &self.mailto {
            query.push(("mailto", m.as_str()));
        }
        let url = self.build_url(&self.endpoints.crossref, &["works", &doi], &query)?;
        let resp = self.fetch(Service::Crossref, &key, &url)?;
        match resp.status {
            200 => {
                let v = Self::decode(&url, &resp.body)?;
                Ok(v.get("message")
                    .and_then(|m| normalize_record(m, Source::Crossref).ok()))
            }
            404 => Ok(None),
            status => Err(RetrievalError::HttpStatus { url, status }),
        }
    }

    fn search_title(
        &self,
        service: Service,
        title: &str,
        limit: usize,
    ) -> Result<Vec<CandidateRecord>, RetrievalError> {
        let q = title_query(title);
        if q.is_empty() {
            return Ok(Vec::new());
        }
        let rows = limit.to_string();
        let key = format!("{}|title|rows={rows}|{q}", service.key());
        let url = match service {
            Service::Crossref => {
                let mut query = vec![("query.title", q.as_str()), ("rows", rows.as_str())];
                if let Some(m) = &self.mailto {
                    query.push(("mailto", m.as_str()));
                }
                self.build_url(&self.endpoints.crossref, &["works"], &query)?
            }
            Service::SemanticScholar => self.build_url(
                &self.endpoints.semantic_scholar,
                &["graph", "v1", "paper", "search"],
                &[("query", q.as_str()), ("limit", rows.as_str()), ("fields", S2_FIELDS)],
            )?,
        };
        let resp = self.fetch(service, &key, &url)?;
        if resp.status != 200 {
            return Err(RetrievalError::HttpStatus {
                url,
                status: resp.status,
            });
        }
        let v = Self::decode(&url, &resp.body)?;
        Ok(match service {
            Service::Crossref => collect_records(
                v.get("message").and_then(|m| m.get("items")),
                Source::Crossref,
                limit,
            ),
            Service::SemanticScholar => collect_records(v.get("data"), Source::SemanticScholar, limit),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexclient::{retrieve_candidates, Lookup};
    use crate::refparse::ParsedCitation;
    use std::collections::VecDeque;

    #[derive(Default)]
    pub(crate) struct MockClock {
        now: Mutex<Duration>,
    }

    impl Clock for MockClock {
        fn now(&self) -> Duration {
            *self.now.lock().unwrap()
        }

        fn sleep(&self, d: Duration) {
            *self.now.lock().unwrap() += d;
        }
    }

    type Script = Mutex<VecDeque<Result<HttpResponse, TransportError>>>;

    /// Scripted responses keyed by URL prefix; logs every call with the mock time.
    struct MockTransport {
        clock: Arc<MockClock>,
        routes: Vec<(String, Script, HttpResponse)>,
        log: Arc<Mutex<Vec<(String, Duration)>>>,
    }

    impl MockTransport {
        fn new(clock: Arc<MockClock>) -> Self {
            Self {
                clock,
                routes: Vec::new(),
                log: Arc::default(),
            }
        }

        /// `script` is consumed first, then `fallback` repeats.
        fn route(
            mut self,
            prefix: &str,
            script: Vec<Result<HttpResponse, TransportError>>,
            fallback: HttpResponse,
        ) -> Self {
            self.routes
                .push((prefix.to_string(), Mutex::new(script.into()), fallback));
            self
        }
    }

    impl HttpTransport for MockTransport {
        fn get(&self, url: &str, _headers: &[(String, String)]) -> Result<HttpResponse, TransportError> {
            self.log.lock().unwrap().push((url.to_string(), self.clock.now()));
            for (prefix, script, fallback) in &self.routes {
                if url.starts_with(prefix.as_str()) {
                    return script
                        .lock()
                        .unwrap()
                        .pop_front()
                        .unwrap_or_else(|| Ok(fallback.clone()));
                }
            }
            Ok(HttpResponse {
                status: 404,
                body: String::new(),
            })
        }
    }

    fn ok(body: &str) -> HttpResponse {
        HttpResponse {
            status: 200,
            body: body.to_string(),
        }
    }

    const CROSSREF_WORK: &str = r#"{"status":"ok","message":{"DOI":"10.1038/nature14539","title":["Deep learning"],"author":[{"given":"Yann","family":"LeCun"},{"given":"Yoshua","family":"Bengio"},{"given":"Geoffrey","family":"Hinton"}],"container-title":["Nature"],"issued":{"date-parts":[[2015,5,27]]}}}"#;
    const CROSSREF_SEARCH: &str = r#"{"status":"ok","message":{"items":[{"DOI":"10.1038/nature14539","title":["Deep learning"],"author":[{"given":"Yann","family":"LeCun"}],"container-title":["Nature"],"issued":{"date-parts":[[2015]]}},{"title":[]},{"DOI":"10.1/other","title":["Deep learning in practice"]}]}}"#;
    const S2_SEARCH: &str = r#"{"total":2,"offset":0,"data":[{"paperId":"a","title":"Deep learning","authors":[{"name":"Yann LeCun"}],"venue":"Nature","year":2015,"externalIds":{"DOI":"10.1038/nature14539"}},{"paperId":"b","title":"Deep Learning Book","authors":[],"venue":"","year":2016,"externalIds":{}}]}"#;

    fn backend(
        transport: MockTransport,
        clock: Arc<MockClock>,
        cache_dir: Option<&Path>,
    ) -> LiveBackend {
        let cfg = RetrievalConfig {
            cache_dir: cache_dir.map(Path::to_path_buf),
            mailto: Some("someone@example.org".into()),
            crossref_rate: 2.0,
            s2_rate: 1.0,
            ..Default::default()
        };
        LiveBackend::new(&cfg, Box::new(transport), clock)
            .unwrap()
            .with_endpoints(LiveEndpoints {
                crossref: "http://crossref.test".into(),
                semantic_scholar: "http://s2.test".into(),
            })
    }

    fn standard_transport(clock: Arc<MockClock>) -> MockTransport {
        MockTransport::new(clock)
            .route("http://crossref.test/works/10.1038", vec![], ok(CROSSREF_WORK))
            .route(
                "http://crossref.test/works/10.1000",
                vec![],
                HttpResponse {
                    status: 404,
                    body: "Resource not found.".into(),
                },
            )
            .route("http://crossref.test/works?", vec![], ok(CROSSREF_SEARCH))
            .route("http://s2.test/graph/v1/paper/search", vec![], ok(S2_SEARCH))
    }

    #[test]
    fn doi_and_searches_normalize() {
        let clock = Arc::new(MockClock::default());
        let t = standard_transport(clock.clone());
        let log = t.log.clone();
        let b = backend(t, clock, None);

        let hit = b.lookup_doi("10.1038/NATURE14539").unwrap().unwrap();
        assert_eq!(hit.title, "Deep learning");
        assert_eq!(hit.source, Source::Crossref);
        assert_eq!(hit.authors.len(), 3);
        assert!(b.lookup_doi("10.1000/absent").unwrap().is_none());

        let cr = b.search_title(Service::Crossref, "Deep Learning!", 5).unwrap();
        assert_eq!(cr.len(), 2, "titleless item skipped");
        let s2 = b.search_title(Service::SemanticScholar, "Deep Learning", 5).unwrap();
        assert_eq!(s2.len(), 2);
        assert_eq!(s2[1].venue, None);
        let s2_one = b.search_title(Service::SemanticScholar, "Deep Learning", 1).unwrap();
        assert_eq!(s2_one.len(), 1);

        let urls: Vec<String> = log.lock().unwrap().iter().map(|(u, _)| u.clone()).collect();
        assert!(urls[0].contains("/works/10.1038%2Fnature14539"));
        assert!(urls[0].contains("mailto=someone%40example.org"));
        assert!(urls[2].contains("query.title=deep+learning") && urls[2].contains("rows=5"));
        assert!(urls[3].contains("limit=5") && urls[3].contains("fields=title%2Cauthors%2Cvenue%2Cyear%2CexternalIds"));
    }

    #[test]
    fn cache_hit_means_no_network() {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(MockClock::default());
        let t = standard_transport(clock.clone());
        let log = t.log.clone();
        let b = backend(t, clock.clone(), Some(dir.path()));
        let p = ParsedCitation {
            title: Some("Deep learning".into()),
            doi: Some("10.1038/nature14539".into()),
            parse_ok: true,
            ..ParsedCitation::empty(0)
        };
        let cfg = RetrievalConfig::default();
        let first = retrieve_candidates(&p, &cfg, &b).unwrap();
        assert_eq!(log.lock().unwrap().len(), 3);
        assert_eq!(first.lookups_attempted, [Lookup::Doi, Lookup::S2Title, Lookup::CrossrefTitle]);
        // duplicates of the DOI hit are merged
        assert_eq!(first.candidates.len(), 3);

        // A fresh backend on the same cache directory issues no requests.
        let t2 = standard_transport(clock.clone());
        let log2 = t2.log.clone();
        let b2 = backend(t2, clock, Some(dir.path()));
        let second = retrieve_candidates(&p, &cfg, &b2).unwrap();
        assert_eq!(log2.lock().unwrap().len(), 0);
        assert_eq!(first, second);

        // 404s are cached too
        assert!(b2.lookup_doi("10.1000/absent").unwrap().is_none());
        assert!(b2.lookup_doi("10.1000/absent").unwrap().is_none());
        assert_eq!(log2.lock().unwrap().len(), 1);
    }

    #[test]
    fn rate_limit_spacing() {
        let clock = Arc::new(MockClock::default());
        let t = standard_transport(clock.clone());
        let log = t.log.clone();
        let b = backend(t, clock, None);
        for i in 0..6 {
            b.search_title(Service::Crossref, &format!("query {i}"), 5).unwrap();
            b.search_title(Service::SemanticScholar, &format!("query {i}"), 5).unwrap();
        }
        let log = log.lock().unwrap();
        let times = |prefix: &str| -> Vec<Duration> {
            log.iter().filter(|(u, _)| u.starts_with(prefix)).map(|(_, t)| *t).collect()
        };
        for (prefix, min_gap) in [
            ("http://crossref.test", Duration::from_millis(500)),
            ("http://s2.test", Duration::from_secs(1)),
        ] {
            let ts = times(prefix);
            assert_eq!(ts.len(), 6);
            for w in ts.windows(2) {
                assert!(w[1] - w[0] >= min_gap, "{prefix}: {:?}", w);
            }
        }
    }

    #[test]
    fn retries_with_backoff_then_succeeds() {
        let clock = Arc::new(MockClock::default());
        let t = MockTransport::new(clock.clone()).route(
            "http://s2.test",
            vec![
                Ok(HttpResponse { status: 429, body: String::new() }),
                Err(TransportError("connection reset".into())),
            ],
            ok(S2_SEARCH),
        );
        let log = t.log.clone();
        let b = backend(t, clock, None);
        let found = b.search_title(Service::SemanticScholar, "deep learning", 5).unwrap();
        assert_eq!(found.len(), 2);
        let log = log.lock().unwrap();
        assert_eq!(log.len(), 3);
        // 1 s then 2 s of backoff
        assert!(log[1].1 - log[0].1 >= Duration::from_secs(1));
        assert!(log[2].1 - log[1].1 >= Duration::from_secs(2));
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let clock = Arc::new(MockClock::default());
        let t = MockTransport::new(clock.clone()).route(
            "http://crossref.test",
            vec![],
            HttpResponse { status: 503, body: String::new() },
        );
        let log = t.log.clone();
        let dir = tempfile::tempdir().unwrap();
        let b = backend(t, clock, Some(dir.path()));
        match b.lookup_doi("10.1038/x") {
            Err(RetrievalError::Transport { attempts, message, .. }) => {
                assert_eq!(attempts, 3);
                assert_eq!(message, "HTTP 503");
            }
            other => panic!("expected transport error, got {other:?}"),
        }
        assert_eq!(log.lock().unwrap().len(), 3);
        // failures are not cached
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn unexpected_status_is_error() {
        let clock = Arc::new(MockClock::default());
        let t = MockTransport::new(clock.clone()).route(
            "http://crossref.test",
            vec![],
            HttpResponse { status: 400, body: String::new() },
        );
        let b = backend(t, clock, None);
        assert!(matches!(
            b.lookup_doi("10.1038/x"),
            Err(RetrievalError::HttpStatus { status: 400, .. })
        ));
        assert!(matches!(
            b.search_title(Service::Crossref, "x y", 5),
            Err(RetrievalError::HttpStatus { status: 400, .. })
        ));
    }

    #[test]
    fn cache_files_are_immutable_and_hash_named() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let entry = CachedResponse { key: "k|1".into(), status: 200, body: "first".into() };
        cache.put(&entry).unwrap();
        cache
            .put(&CachedResponse { body: "second".into(), ..entry.clone() })
            .unwrap();
        assert_eq!(cache.get("k|1").unwrap().body, "first");
        let name = cache.path_for("k|1").file_name().unwrap().to_string_lossy().to_string();
        assert_eq!(name.len(), 64 + ".json".len());
        assert!(cache.get("k|2").is_none());
    }

    #[test]
    fn concurrent_cache_writes() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Arc::new(ResponseCache::open(dir.path()).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let cache = cache.clone();
                std::thread::spawn(move || {
                    for j in 0..20 {
                        let key = format!("key-{}", (i + j) % 10);
                        cache
                            .put(&CachedResponse { key: key.clone(), status: 200, body: key.clone() })
                            .unwrap();
                        if let Some(hit) = cache.get(&key) {
                            assert_eq!(hit.body, key);
                        }
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 10);
    }

    #[test]
    #[ignore = "needs network access to api.crossref.org"]
    fn live_doi_lookup() {
        let b = LiveBackend::with_defaults(&RetrievalConfig::default()).unwrap();
        let hit = b.lookup_doi("10.1038/nature14539").unwrap().unwrap();
        assert_eq!(hit.title, "Deep learning");
        assert_eq!(hit.year, Some(2015));
    }
}
