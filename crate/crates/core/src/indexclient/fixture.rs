use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CandidateRecord, IndexBackend, RetrievalError, Service, Source};
use crate::matcher::normalize_text;

/// Share of query tokens a fixture title must contain to count as a hit.
const MIN_QUERY_OVERLAP: f64 = 0.5;

/// One line of a fixture index file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub venue: Option<String>,
    #[serde(default)]
    pub year: Option<i32>,
    #[serde(default)]
    pub doi: Option<String>,
    /// Services that index this record; both when omitted.
    #[serde(default = "both_services")]
    pub services: Vec<Service>,
}

fn both_services() -> Vec<Service> {
    vec![Service::Crossref, Service::SemanticScholar]
}

impl FixtureEntry {
    fn record(&self) -> CandidateRecord {
        CandidateRecord {
            source: Source::Fixture,
            title: self.title.clone(),
            authors: self.authors.clone(),
            venue: self.venue.clone(),
            year: self.year,
            doi: self.doi.clone(),
        }
    }
}

/// Offline index backed by a JSON-lines file (`index.jsonl` in a fixture directory).
///
/// Title search returns entries containing at least half of the query's
/// distinct tokens, ordered by that share (file order breaks ties). DOI
/// lookup matches case-insensitively among Crossref-indexed entries.
#[derive(Debug, Clone, Default)]
pub struct FixtureBackend {
    entries: Vec<FixtureEntry>,
    tokens: Vec<HashSet<String>>,
}

impl FixtureBackend {
    pub fn new(entries: Vec<FixtureEntry>) -> Self {
        let tokens = entries
            .iter()
            .map(|e| normalize_text(&e.title).into_iter().collect())
            .collect();
        Self { entries, tokens }
    }

    pub fn load_dir(dir: &Path) -> Result<Self, RetrievalError> {
        Self::load_file(&dir.join("index.jsonl"))
    }

    pub fn load_file(path: &Path) -> Result<Self, RetrievalError> {
        let fixture_err = |message: String| RetrievalError::Fixture {
            path: path.display().to_string(),
            message,
        };
        let content = fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
        let mut entries = Vec::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: FixtureEntry = serde_json::from_str(line)
                .map_err(|e| fixture_err(format!("line {}: {e}", i + 1)))?;
            if entry.title.trim().is_empty() {
                return Err(fixture_err(format!("line {}: empty title", i + 1)));
            }
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl IndexBackend for FixtureBackend {
    fn lookup_doi(&self, doi: &str) -> Result<Option<CandidateRecord>, RetrievalError> {
        let wanted = doi.trim().to_lowercase();
        Ok(self
            .entries
            .iter()
            .filter(|e| e.services.contains(&Service::Crossref))
            .find(|e| e.doi.as_deref().map(|d| d.to_lowercase()) == Some(wanted.clone()))
            .map(FixtureEntry::record))
    }

    fn search_title(
        &self,
        service: Service,
        title: &str,
        limit: usize,
    ) -> Result<Vec<CandidateRecord>, RetrievalError> {
        let query: HashSet<String> = normalize_text(title).into_iter().collect();
        if query.is_empty() {
            return Ok(Vec::new());
        }
        let mut hits: Vec<(f64, usize)> = self
            .entries
            .iter()
            .zip(&self.tokens)
            .enumerate()
            .filter(|(_, (e, _))| e.services.contains(&service))
            .filter_map(|(i, (_, toks))| {
                let share = query.intersection(toks).count() as f64 / query.len() as f64;
                (share >= MIN_QUERY_OVERLAP).then_some((share, i))
            })
            .collect();
        // Stable: equal shares keep file order.
        hits.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(hits
            .into_iter()
            .take(limit)
            .map(|(_, i)| self.entries[i].record())
            .collect())
    }
}
