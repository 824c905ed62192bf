//! Field similarity between a parsed citation and a candidate record.
//!
//! The total score is a fixed linear blend of four components:
//! title similarity (token-set ratio), author last-name overlap, year
//! agreement and venue similarity (partial ratio). All components and the
//! total lie in `[0, 1]`.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::indexclient::CandidateRecord;
use crate::refparse::ParsedCitation;

pub const TITLE_WEIGHT: f64 = 0.60;
pub const AUTHOR_WEIGHT: f64 = 0.20;
pub const YEAR_WEIGHT: f64 = 0.15;
pub const VENUE_WEIGHT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    /// Weighted total.
    pub s: f64,
    /// Title similarity.
    pub t: f64,
    /// Author overlap.
    pub a: f64,
    /// Year agreement.
    pub y: f64,
    /// Venue similarity.
    pub v: f64,
    /// Position of the scored candidate in its candidate set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<usize>,
}

impl MatchScore {
    pub fn from_components(t: f64, a: f64, y: f64, v: f64) -> Self {
        Self {
            s: weighted_total(t, a, y, v),
            t,
            a,
            y,
            v,
            candidate: None,
        }
    }
}

pub fn weighted_total(t: f64, a: f64, y: f64, v: f64) -> f64 {
    TITLE_WEIGHT * t + AUTHOR_WEIGHT * a + YEAR_WEIGHT * y + VENUE_WEIGHT * v
}

/// Lowercase, NFC, punctuation to spaces, whitespace split.
pub fn normalize_text(s: &str) -> Vec<String> {
    let cleaned: String = s
        .nfc()
        .flat_map(char::to_lowercase)
        .map(|c| {
            if c.is_alphanumeric() || is_combining_mark(c) {
                c
            } else {
                ' '
            }
        })
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

fn normalized_joined(s: &str) -> Vec<char> {
    normalize_text(s).join(" ").chars().collect()
}

/// Levenshtein distance over chars, two-row DP.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max(len)`; two empty strings are identical.
pub fn edit_ratio(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

fn join_tokens<'a>(parts: impl IntoIterator<Item = &'a String>) -> Vec<char> {
    let mut out = String::new();
    for p in parts {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(p);
    }
    out.chars().collect()
}

/// Token-set ratio over normalized tokens.
///
/// With sorted token sets, builds `inter`, `inter + diff(x)` and
/// `inter + diff(z)` and returns the best pairwise edit ratio among them.
pub fn token_set_ratio(x: &str, z: &str) -> f64 {
    let xs: BTreeSet<String> = normalize_text(x).into_iter().collect();
    let zs: BTreeSet<String> = normalize_text(z).into_iter().collect();
    if xs == zs {
        return 1.0;
    }
    if xs.is_empty() || zs.is_empty() {
        return 0.0;
    }
    let inter: Vec<&String> = xs.intersection(&zs).collect();
    let only_x: Vec<&String> = xs.difference(&zs).collect();
    let only_z: Vec<&String> = zs.difference(&xs).collect();

    let sect = join_tokens(inter.iter().copied());
    let with_x = join_tokens(inter.iter().copied().chain(only_x.iter().copied()));
    let with_z = join_tokens(inter.iter().copied().chain(only_z.iter().copied()));

    edit_ratio(&sect, &with_x)
        .max(edit_ratio(&sect, &with_z))
        .max(edit_ratio(&with_x, &with_z))
}

/// Best edit ratio of the shorter normalized string against every
/// equal-length window of the longer one.
pub fn partial_ratio(x: &str, z: &str) -> f64 {
    let a = normalized_joined(x);
    let b = normalized_joined(z);
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return if long.is_empty() { 1.0 } else { 0.0 };
    }
    let m = short.len();
    let mut best = 0.0f64;
    for window in long.windows(m) {
        let r = 1.0 - levenshtein(&short, window) as f64 / m as f64;
        if r > best {
            best = r;
            if best >= 1.0 {
                break;
            }
        }
    }
    best
}

const NAME_SUFFIXES: [&str; 6] = ["jr", "sr", "ii", "iii", "iv", "phd"];

/// Normalized surname of a name written either "Family, Given" or "Given Family".
///
/// Diacritics are folded and punctuation removed; for multi-word family
/// names the final word is used, so "van der Berg, J." and "J. van der Berg"
/// agree.
pub fn last_name(name: &str) -> Option<String> {
    let family = match name.split_once(',') {
        Some((before, _)) if !before.trim().is_empty() => before,
        _ => name,
    };
    let words: Vec<String> = family
        .split_whitespace()
        .map(fold_name)
        .filter(|w| !w.is_empty())
        .collect();
    let mut iter = words.iter().rev();
    let mut last = iter.next()?;
    if NAME_SUFFIXES.contains(&last.as_str()) {
        if let Some(prev) = iter.next() {
            last = prev;
        }
    }
    Some(last.clone())
}

fn fold_name(word: &str) -> String {
    word.nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric())
        .collect()
}

/// Share of the parsed citation's distinct surnames found among the candidate's.
pub fn author_overlap<S: AsRef<str>, T: AsRef<str>>(parsed: &[S], candidate: &[T]) -> f64 {
    let parsed_set: HashSet<String> = parsed.iter().filter_map(|n| last_name(n.as_ref())).collect();
    if parsed_set.is_empty() {
        return 0.0;
    }
    let cand_set: HashSet<String> = candidate
        .iter()
        .filter_map(|n| last_name(n.as_ref()))
        .collect();
    let shared = parsed_set.intersection(&cand_set).count();
    shared as f64 / parsed_set.len() as f64
}

pub fn year_agreement(parsed: Option<i32>, candidate: Option<i32>) -> f64 {
    match (parsed, candidate) {
        (Some(p), Some(c)) if p == c => 1.0,
        (Some(p), Some(c)) if (p - c).abs() == 1 => 0.5,
        _ => 0.0,
    }
}

pub fn score_candidate(parsed: &ParsedCitation, candidate: &CandidateRecord) -> MatchScore {
    let t = parsed
        .title
        .as_deref()
        .map_or(0.0, |title| token_set_ratio(title, &candidate.title));
    let a = author_overlap(parsed.authors.as_deref().unwrap_or(&[]), &candidate.authors);
    let y = year_agreement(parsed.year, candidate.year);
    let v = match (&parsed.venue, &candidate.venue) {
        (Some(pv), Some(cv)) => partial_ratio(pv, cv),
        _ => 0.0,
    };
    MatchScore::from_components(t, a, y, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize_text("Attention Is All You Need!"),
            ["attention", "is", "all", "you", "need"]
        );
        assert!(normalize_text("").is_empty());
        assert_eq!(
            normalize_text("LLMs\u{2014}and Hallucination"),
            ["llms", "and", "hallucination"]
        );
        // decomposed e + combining acute composes to a single char
        assert_eq!(normalize_text("Caf\u{65}\u{301}"), ["caf\u{e9}"]);
    }

    #[test]
    fn levenshtein_basics() {
        let c = |s: &str| s.chars().collect::<Vec<_>>();
        assert_eq!(levenshtein(&c("kitten"), &c("sitting")), 3);
        assert_eq!(levenshtein(&c(""), &c("abc")), 3);
        assert_eq!(levenshtein(&c("flaw"), &c("lawn")), 2);
    }

    #[test]
    fn token_set_examples() {
        assert_eq!(token_set_ratio("Deep Learning", "deep LEARNING."), 1.0);
        assert_eq!(token_set_ratio("", "anything"), 0.0);
        assert_eq!(token_set_ratio("anything", ""), 0.0);
        assert_eq!(token_set_ratio("", ""), 1.0);
        // every token of the first is in the second
        assert_eq!(
            token_set_ratio("graph neural networks survey", "a survey of graph neural networks"),
            1.0
        );
    }

    #[test]
    fn partial_examples() {
        assert_eq!(partial_ratio("ICSE", "Proceedings of ICSE"), 1.0);
        assert_eq!(partial_ratio("", ""), 1.0);
        assert_eq!(partial_ratio("", "ICSE"), 0.0);
        let r = partial_ratio("IEEE TSE", "IEEE Transactions on Software Engineering");
        assert!(r > 0.0 && r < 1.0);
    }

    #[test]
    fn last_names() {
        assert_eq!(last_name("Smith, J.").as_deref(), Some("smith"));
        assert_eq!(last_name("Jane Doe").as_deref(), Some("doe"));
        assert_eq!(last_name("J. van der Berg").as_deref(), Some("berg"));
        assert_eq!(last_name("van der Berg, J.").as_deref(), Some("berg"));
        assert_eq!(last_name("Martin Luther King Jr.").as_deref(), Some("king"));
        assert_eq!(last_name("Gödel, K.").as_deref(), Some("godel"));
        assert_eq!(last_name("  "), None);
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(author_overlap(&["Doe", "Smith"], &["Smith, J.", "Doe, A."]), 1.0);
        assert_eq!(author_overlap(&["Doe"], &["Nguyen"]), 0.0);
        assert_abs_diff_eq!(
            author_overlap(&["Doe", "Smith", "Lee"], &["Doe", "Lee"]),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(author_overlap::<&str, &str>(&[], &["Doe"]), 0.0);
        assert_eq!(author_overlap(&["Müller"], &["Muller, H."]), 1.0);
    }

    #[test]
    fn year_examples() {
        assert_eq!(year_agreement(Some(2020), Some(2020)), 1.0);
        assert_eq!(year_agreement(Some(2020), Some(2021)), 0.5);
        assert_eq!(year_agreement(Some(2021), Some(2020)), 0.5);
        assert_eq!(year_agreement(Some(2020), Some(2022)), 0.0);
        assert_eq!(year_agreement(Some(2020), None), 0.0);
        assert_eq!(year_agreement(None, None), 0.0);
    }

    #[test]
    fn weighted_arithmetic() {
        assert_abs_diff_eq!(weighted_total(1.0, 1.0, 1.0, 1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(weighted_total(1.0, 1.0, 0.5, 1.0), 0.925, epsilon = 1e-12);
        assert_eq!(weighted_total(1.0, 0.0, 0.0, 0.0), 0.60);
        assert_abs_diff_eq!(
            TITLE_WEIGHT + AUTHOR_WEIGHT + YEAR_WEIGHT + VENUE_WEIGHT,
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn score_missing_venue_is_zero() {
        let parsed = ParsedCitation {
            title: Some("Deep Learning".into()),
            authors: Some(vec!["LeCun, Y.".into(), "Bengio, Y.".into()]),
            year: Some(2015),
            ..ParsedCitation::empty(0)
        };
        let cand = CandidateRecord {
            source: crate::indexclient::Source::Fixture,
            title: "Deep learning".into(),
            authors: vec!["Yann LeCun".into(), "Yoshua Bengio".into(), "Geoffrey Hinton".into()],
            venue: Some("Nature".into()),
            year: Some(2015),
            doi: Some("10.1038/nature14539".into()),
        };
        let s = score_candidate(&parsed, &cand);
        assert_eq!((s.t, s.a, s.y, s.v), (1.0, 1.0, 1.0, 0.0));
        assert_abs_diff_eq!(s.s, 0.95, epsilon = 1e-12);
        assert_eq!(s, score_candidate(&parsed, &cand));
    }
}
