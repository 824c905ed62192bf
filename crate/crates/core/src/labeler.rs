//! Three-way verdicts from the best candidate score.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claimset::YearWindow;
use crate::indexclient::CandidateSet;
use crate::matcher::{score_candidate, MatchScore};
use crate::refparse::{is_valid_doi, ParsedCitation};

pub const DEFAULT_EXIST_THRESHOLD: f64 = 0.85;
pub const DEFAULT_UNRESOLVED_THRESHOLD: f64 = 0.60;

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("thresholds must satisfy 0 < unresolved ({unresolved}) < exist ({exist}) <= 1")]
    Thresholds { exist: f64, unresolved: f64 },
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Existing,
    Unresolved,
    Fabricated,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Existing, Label::Unresolved, Label::Fabricated];

    pub fn index(self) -> usize {
        match self {
            Label::Existing => 0,
            Label::Unresolved => 1,
            Label::Fabricated => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Existing => "Existing",
            Label::Unresolved => "Unresolved",
            Label::Fabricated => "Fabricated",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "existing" | "exist" | "e" => Ok(Label::Existing),
            "unresolved" | "unres" | "u" => Ok(Label::Unresolved),
            "fabricated" | "fabric" | "f" => Ok(Label::Fabricated),
            _ => Err(LabelError::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelerConfig {
    exist_threshold: f64,
    unresolved_threshold: f64,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        Self {
            exist_threshold: DEFAULT_EXIST_THRESHOLD,
            unresolved_threshold: DEFAULT_UNRESOLVED_THRESHOLD,
        }
    }
}

impl LabelerConfig {
    pub fn new(exist_threshold: f64, unresolved_threshold: f64) -> Result<Self, LabelError> {
        let ok = unresolved_threshold > 0.0
            && unresolved_threshold < exist_threshold
            && exist_threshold <= 1.0;
        if !ok {
            return Err(LabelError::Thresholds {
                exist: exist_threshold,
                unresolved: unresolved_threshold,
            });
        }
        Ok(Self {
            exist_threshold,
            unresolved_threshold,
        })
    }

    pub fn exist_threshold(&self) -> f64 {
        self.exist_threshold
    }

    pub fn unresolved_threshold(&self) -> f64 {
        self.unresolved_threshold
    }

    /// `[exist, 1]` Existing, `[unresolved, exist)` Unresolved, below that Fabricated.
    pub fn label_for_score(&self, s: f64) -> Label {
        if s >= self.exist_threshold {
            Label::Existing
        } else if s >= self.unresolved_threshold {
            Label::Unresolved
        } else {
            Label::Fabricated
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub citation_index: usize,
    pub label: Label,
    pub best_score: Option<MatchScore>,
    pub temporal_violation: bool,
    pub doi_present: bool,
    /// Year of the best candidate, kept for temporal checks.
    #[serde(skip)]
    pub matched_year: Option<i32>,
    #[serde(skip)]
    pub parsed_year: Option<i32>,
}

impl Verdict {
    /// Year checked against the window: the matched record's year for
    /// Existing citations, otherwise the year the citation claims.
    pub fn year_for_window(&self) -> Option<i32> {
        match self.label {
            Label::Existing => self.matched_year.or(self.parsed_year),
            _ => self.parsed_year,
        }
    }

    pub fn with_window(mut self, window: Option<&YearWindow>) -> Self {
        self.temporal_violation = flag_temporal(self.year_for_window(), window);
        self
    }
}

pub fn label_citation(
    parsed: &ParsedCitation,
    candidates: &CandidateSet,
    cfg: &LabelerConfig,
) -> Verdict {
    let doi_present = doi_presence(parsed);
    if !parsed.parse_ok {
        return Verdict {
            citation_index: parsed.citation_index,
            label: Label::Unresolved,
            best_score: None,
            temporal_violation: false,
            doi_present,
            matched_year: None,
            parsed_year: parsed.year,
        };
    }

    // Strictly-greater keeps the earliest candidate on ties.
    let mut best: Option<(usize, MatchScore)> = None;
    for (i, cand) in candidates.candidates.iter().enumerate() {
        let score = score_candidate(parsed, cand);
        if best.as_ref().is_none_or(|(_, b)| score.s > b.s) {
            best = Some((i, score));
        }
    }

    let (label, best_score, matched_year) = match best {
        None => (Label::Fabricated, None, None),
        Some((i, mut score)) => {
            score.candidate = Some(i);
            (
                cfg.label_for_score(score.s),
                Some(score),
                candidates.candidates[i].year,
            )
        }
    };
    Verdict {
        citation_index: parsed.citation_index,
        label,
        best_score,
        temporal_violation: false,
        doi_present,
        matched_year,
        parsed_year: parsed.year,
    }
}

/// Year outside an inclusive window; never flagged without both a year and a window.
pub fn flag_temporal(year: Option<i32>, window: Option<&YearWindow>) -> bool {
    match (year, window) {
        (Some(y), Some(w)) => !w.contains(y),
        _ => false,
    }
}

pub fn doi_presence(parsed: &ParsedCitation) -> bool {
    parsed.doi.as_deref().is_some_and(is_valid_doi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexclient::{CandidateRecord, Source};

    fn parsed() -> ParsedCitation {
        ParsedCitation {
            title: Some("Sparse Widget Theory".into()),
            authors: Some(vec!["Doe, J.".into()]),
            year: Some(2020),
            venue: Some("Widget Letters".into()),
            parse_ok: true,
            ..ParsedCitation::empty(0)
        }
    }

    fn cand(title: &str, author: &str, year: i32, venue: Option<&str>) -> CandidateRecord {
        CandidateRecord {
            source: Source::Fixture,
            title: title.into(),
            authors: vec![author.into()],
            venue: venue.map(str::to_string),
            year: Some(year),
            doi: None,
        }
    }

    fn set(c: Vec<CandidateRecord>) -> CandidateSet {
        CandidateSet {
            candidates: c,
            ..Default::default()
        }
    }

    #[test]
    fn threshold_boundaries() {
        let cfg = LabelerConfig::default();
        assert_eq!(cfg.label_for_score(1.0), Label::Existing);
        assert_eq!(cfg.label_for_score(0.85), Label::Existing);
        assert_eq!(cfg.label_for_score(0.849), Label::Unresolved);
        assert_eq!(cfg.label_for_score(0.60), Label::Unresolved);
        assert_eq!(cfg.label_for_score(0.599), Label::Fabricated);
        assert_eq!(cfg.label_for_score(0.0), Label::Fabricated);
    }

    #[test]
    fn config_invariants() {
        assert!(LabelerConfig::new(0.85, 0.60).is_ok());
        assert!(LabelerConfig::new(0.6, 0.85).is_err());
        assert!(LabelerConfig::new(1.1, 0.6).is_err());
        assert!(LabelerConfig::new(0.85, 0.0).is_err());
        assert!(LabelerConfig::new(1.0, 0.99).is_ok());
    }

    #[test]
    fn empty_candidates_fabricated() {
        let v = label_citation(&parsed(), &set(vec![]), &LabelerConfig::default());
        assert_eq!(v.label, Label::Fabricated);
        assert!(v.best_score.is_none());
    }

    #[test]
    fn parse_failure_unresolved_without_score() {
        let p = ParsedCitation::empty(4);
        let c = set(vec![cand("Anything", "Doe", 2020, None)]);
        let v = label_citation(&p, &c, &LabelerConfig::default());
        assert_eq!(v.label, Label::Unresolved);
        assert!(v.best_score.is_none());
        assert_eq!(v.citation_index, 4);
    }

    #[test]
    fn picks_best_candidate_and_first_on_ties() {
        let c = set(vec![
            cand("Unrelated Topic Entirely", "Roe", 1990, None),
            cand("Sparse Widget Theory", "Doe", 2020, Some("Widget Letters")),
            cand("Sparse Widget Theory", "Doe", 2020, Some("Widget Letters")),
        ]);
        let v = label_citation(&parsed(), &c, &LabelerConfig::default());
        assert_eq!(v.label, Label::Existing);
        let best = v.best_score.unwrap();
        assert_eq!(best.candidate, Some(1));
        assert!((best.s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn title_only_match_is_unresolved() {
        let c = set(vec![cand("Sparse Widget Theory", "Nguyen", 2011, None)]);
        let v = label_citation(&parsed(), &c, &LabelerConfig::default());
        assert_eq!(v.best_score.unwrap().s, 0.60);
        assert_eq!(v.label, Label::Unresolved);
    }

    #[test]
    fn temporal_flags() {
        let w = YearWindow::new(2020, 2025).unwrap();
        assert!(flag_temporal(Some(2018), Some(&w)));
        assert!(!flag_temporal(Some(2020), Some(&w)));
        assert!(!flag_temporal(Some(2025), Some(&w)));
        assert!(flag_temporal(Some(2026), Some(&w)));
        assert!(!flag_temporal(Some(1900), None));
        assert!(!flag_temporal(None, Some(&w)));
    }

    #[test]
    fn temporal_uses_matched_year_for_existing() {
        let w = YearWindow::new(2020, 2025).unwrap();
        // claims 2020, record says 2019: Existing (year off by one), flagged via record year
        let c = set(vec![cand("Sparse Widget Theory", "Doe", 2019, Some("Widget Letters"))]);
        let v = label_citation(&parsed(), &c, &LabelerConfig::default()).with_window(Some(&w));
        assert_eq!(v.label, Label::Existing);
        assert!(v.temporal_violation);

        // not Existing: the claimed year is used
        let mut p = parsed();
        p.year = Some(2017);
        let v = label_citation(&p, &set(vec![]), &LabelerConfig::default()).with_window(Some(&w));
        assert_eq!(v.label, Label::Fabricated);
        assert!(v.temporal_violation);
        let v = v.with_window(None);
        assert!(!v.temporal_violation);
    }

    #[test]
    fn doi_presence_flags() {
        let mut p = parsed();
        assert!(!doi_presence(&p));
        p.doi = Some("10.1000/x".into());
        assert!(doi_presence(&p));
        p.doi = Some("n/a".into());
        assert!(!doi_presence(&p));
    }

    #[test]
    fn label_names_round_trip() {
        for l in Label::ALL {
            assert_eq!(l.name().parse::<Label>().unwrap(), l);
        }
        assert!("maybe".parse::<Label>().is_err());
    }
}
