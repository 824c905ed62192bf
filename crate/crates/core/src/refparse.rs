//! Reference-list extraction and rule-based field parsing of model outputs.
//!
//! Accepted layouts, tried in order:
//! 1. labeled fields (`Title: ...`, `Authors: ...`, one per line or separated by `|`)
//! 2. author-year strings (`Doe, J. (2021). Title. Venue.`, `Doe J. 2021. Title. Venue.`)
//! 3. quoted-title strings (`J. Doe, "Title," Venue, 2021.`)
//! 4. a sentence-split fallback for anything else
//!
//! Parsing never fails: a reference with no recoverable title comes back
//! with `parse_ok = false`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claimset::{Condition, MAX_YEAR, MIN_YEAR};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed model output: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate output for ({claim_id}, {model_id}, {condition})")]
    Duplicate {
        line: usize,
        claim_id: String,
        model_id: String,
        condition: Condition,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOutput {
    pub claim_id: String,
    pub model_id: String,
    pub condition: Condition,
    pub output_text: String,
}

pub fn parse_outputs(content: &str) -> Result<Vec<ModelOutput>, CorpusError> {
    let mut outputs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let out: ModelOutput = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        let key = (out.claim_id.clone(), out.model_id.clone(), out.condition);
        if !seen.insert(key) {
            return Err(CorpusError::Duplicate {
                line: i + 1,
                claim_id: out.claim_id,
                model_id: out.model_id,
                condition: out.condition,
            });
        }
        outputs.push(out);
    }
    Ok(outputs)
}

pub fn load_outputs(path: &Path) -> Result<Vec<ModelOutput>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_outputs(&content)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedCitation {
    pub citation_index: usize,
    pub title: Option<String>,
    pub authors: Option<Vec<String>>,
    pub venue: Option<String>,
    pub year: Option<i32>,
    pub doi: Option<String>,
    pub url: Option<String>,
    pub parse_ok: bool,
}

impl ParsedCitation {
    pub fn empty(citation_index: usize) -> Self {
        Self {
            citation_index,
            title: None,
            authors: None,
            venue: None,
            year: None,
            doi: None,
            url: None,
            parse_ok: false,
        }
    }

    /// Normalized surnames of the parsed authors, in order.
    pub fn surnames(&self) -> Vec<String> {
        self.authors
            .iter()
            .flatten()
            .filter_map(|a| crate::matcher::last_name(a))
            .collect()
    }

    /// Canonical labeled-field rendering; parses back to the same fields.
    pub fn to_labeled_block(&self) -> String {
        let mut lines = Vec::new();
        if let Some(t) = &self.title {
            lines.push(format!("Title: {t}"));
        }
        if let Some(a) = &self.authors {
            lines.push(format!("Authors: {}", a.join("; ")));
        }
        if let Some(v) = &self.venue {
            lines.push(format!("Venue: {v}"));
        }
        if let Some(y) = self.year {
            lines.push(format!("Year: {y}"));
        }
        if let Some(d) = &self.doi {
            lines.push(format!("DOI: {d}"));
        }
        if let Some(u) = &self.url {
            lines.push(format!("URL: {u}"));
        }
        lines.join("\n")
    }
}

static HEADER_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?i)^\s*(?:#{1,6}\s*)?[*_]*\s*(?:references?|reference list|bibliography|works cited|sources|citations|cited works)\s*[*_]*\s*:?\s*[*_]*\s*$",
    )
    .unwrap()
});
static MARKER_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\s*(?:\[(\d{1,3})\]|(\d{1,3})[.)])\s+(\S.*)$").unwrap());
static BULLET_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\s*[-*\u{2022}]\s+(\S.*)$").unwrap());
static FIELD_LINE_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)^\s*[-*]*\s*(title|authors?|venue|journal|conference|published in|year|doi|url|link)\s*:")
        .unwrap()
});
static TITLE_LINE_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)^\s*[-*]*\s*title\s*:").unwrap());

/// Pull the enumerated reference entries out of a model output, in order.
///
/// The block starts after the last reference-section heading; without a
/// heading, at the first numbered entry. No heading and no numbered entry
/// means no references.
pub fn extract_reference_block(output_text: &str) -> Vec<String> {
    let lines: Vec<&str> = output_text.lines().collect();
    let start = match lines.iter().rposition(|l| HEADER_RE.is_match(l)) {
        Some(h) => h + 1,
        None => match lines.iter().position(|l| MARKER_RE.is_match(l)) {
            Some(first) => first,
            None => return Vec::new(),
        },
    };
    let block = &lines[start..];
    let numbered = block.iter().any(|l| MARKER_RE.is_match(l));

    let mut entries: Vec<String> = Vec::new();
    let mut open = false;
    let mut after_blank = false;
    for line in block {
        if line.trim().is_empty() {
            after_blank = true;
            if !numbered {
                open = false;
            }
            continue;
        }
        if numbered {
            if let Some(caps) = MARKER_RE.captures(line) {
                entries.push(caps[3].trim().to_string());
                open = true;
            } else if open {
                let indented = line.starts_with(char::is_whitespace);
                if after_blank && !indented && !FIELD_LINE_RE.is_match(line) {
                    // Unindented prose after the list closes the block.
                    break;
                }
                push_continuation(entries.last_mut().unwrap(), line);
            }
        } else {
            let text = BULLET_RE
                .captures(line)
                .map_or_else(|| line.trim().to_string(), |c| c[1].trim().to_string());
            let is_field = FIELD_LINE_RE.is_match(&text);
            let starts_entry =
                !open || TITLE_LINE_RE.is_match(&text) || (!is_field && BULLET_RE.is_match(line));
            let continues = open && is_field && !TITLE_LINE_RE.is_match(&text);
            if continues {
                push_continuation(entries.last_mut().unwrap(), &text);
            } else if starts_entry || !is_field {
                entries.push(text);
                open = true;
            }
        }
        after_blank = false;
    }
    entries.retain(|e| !e.trim().is_empty());
    entries
}

fn push_continuation(entry: &mut String, line: &str) {
    entry.push('\n');
    entry.push_str(line.trim());
}

static DOI_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"10\.\d{4,9}/[^\s\x22'<>]+").unwrap());
static DOI_VALID_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^10\.\d{4,9}/\S+$").unwrap());
static URL_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"https?://[^\s<>\x22]+").unwrap());
static YEAR_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b(\d{4})\b").unwrap());

/// Syntactic DOI check: `10.<registrant>/<suffix>`.
pub fn is_valid_doi(s: &str) -> bool {
    DOI_VALID_RE.is_match(s.trim())
}

fn trim_trailing_punct(s: &str) -> &str {
    let mut s = s.trim_end_matches(['.', ',', ';', ':']);
    // Drop closing brackets that have no opening partner inside the match.
    loop {
        let unbalanced = |open: char, close: char| {
            s.ends_with(close) && s.matches(open).count() < s.matches(close).count()
        };
        if unbalanced('(', ')') || unbalanced('[', ']') {
            s = &s[..s.len() - 1];
            s = s.trim_end_matches(['.', ',', ';', ':']);
        } else {
            break;
        }
    }
    s
}

/// First DOI-shaped substring, without trailing punctuation.
pub fn find_doi(s: &str) -> Option<String> {
    DOI_RE
        .find(s)
        .map(|m| trim_trailing_punct(m.as_str()).to_string())
        .filter(|d| is_valid_doi(d))
}

fn find_url(s: &str) -> Option<String> {
    URL_RE
        .find(s)
        .map(|m| trim_trailing_punct(m.as_str()).to_string())
}

fn valid_year(s: &str) -> Option<i32> {
    s.parse::<i32>()
        .ok()
        .filter(|y| (MIN_YEAR..=MAX_YEAR).contains(y))
}

fn first_year(s: &str) -> Option<i32> {
    YEAR_RE.captures_iter(s).find_map(|c| valid_year(&c[1]))
}

fn has_title_content(s: &str) -> bool {
    s.chars().any(char::is_alphabetic) && s.chars().filter(|c| c.is_alphanumeric()).count() >= 2
}

static INITIALS_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^(?:\p{Lu}\.?[\s-]*)+$").unwrap());
static AND_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i),?\s+and\s+").unwrap());
static ET_AL_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i),?\s*et\s+al\.?").unwrap());

/// Split an author string into names.
///
/// Separators are `;`, `, and`, ` and ` and `&`. Comma-separated segments
/// made only of initials are attached to the preceding surname, so
/// `Doe, J., Smith, A.` becomes `["Doe, J.", "Smith, A."]`.
pub fn split_authors(s: &str) -> Vec<String> {
    let s = ET_AL_RE.replace_all(s, "");
    let s = AND_RE.replace_all(&s, ";");
    let s = s.replace('&', ";");
    let mut names = Vec::new();
    for part in s.split(';') {
        let mut pending: Option<String> = None;
        for seg in part.split(',') {
            let seg = seg.trim().trim_end_matches(['.', ',']).trim();
            let raw_seg = seg;
            if seg.is_empty() {
                continue;
            }
            let initials = INITIALS_RE.is_match(raw_seg) || INITIALS_RE.is_match(&format!("{raw_seg}."));
            match (&mut pending, initials) {
                (Some(prev), true) => {
                    prev.push_str(", ");
                    prev.push_str(&restore_initial_dot(part, raw_seg));
                    names.push(pending.take().unwrap());
                }
                _ => {
                    if let Some(prev) = pending.take() {
                        names.push(prev);
                    }
                    pending = Some(seg.to_string());
                }
            }
        }
        if let Some(prev) = pending {
            names.push(prev);
        }
    }
    names.retain(|n| n.chars().any(char::is_alphabetic));
    names
}

fn ends_with_initial(name: &str) -> bool {
    let mut tail = name.rsplit([' ', ',', '.', '-']).filter(|w| !w.is_empty());
    tail.next().is_some_and(|w| w.chars().count() == 1 && w.chars().all(char::is_uppercase))
        && !name.ends_with('.')
}

/// The segment trimmer drops a final `.`; put it back for initials written with one.
fn restore_initial_dot(part: &str, seg: &str) -> String {
    let dotted = format!("{seg}.");
    if part.contains(&dotted) {
        dotted
    } else {
        seg.to_string()
    }
}

static FIELD_LABEL_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?im)(?:^|\||;|\.[ \t])\s*-?\s*(title|authors?|venue|journal|conference|published in|year|doi|url|link)\s*:\s*",
    )
    .unwrap()
});
static NA_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b(?:doi|url|link)\s*:?\s*(?:n/?a|none|not available|unavailable|unknown|-+)(?:\s|$|[.,;)])")
        .unwrap()
});
static DOI_PREFIX_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)(?:\bdoi\s*[:=]?\s*|https?://(?:dx\.)?doi\.org/)?10\.\d{4,9}/[^\s\x22'<>]+")
        .unwrap()
});
static ACCESS_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)\b(?:available at|retrieved from|url)\s*:?\s*$").unwrap());
static LEADING_MARKER_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\s*(?:\[\d{1,3}\]|\d{1,3}[.)])\s+").unwrap());

/// Decompose one raw reference into fields.
pub fn parse_reference(raw: &str, index: usize) -> ParsedCitation {
    let cleaned: String = raw
        .chars()
        .filter(|&c| c != '*')
        .map(|c| match c {
            '\u{201c}' | '\u{201d}' => '"',
            other => other,
        })
        .collect();
    let cleaned = LEADING_MARKER_RE.replace(&cleaned, "").to_string();

    let mut parsed = if FIELD_LABEL_RE
        .captures_iter(&cleaned)
        .any(|c| c[1].eq_ignore_ascii_case("title"))
    {
        parse_labeled(&cleaned, index)
    } else {
        parse_inline(&cleaned, index)
    };

    if parsed.doi.is_none() {
        parsed.doi = find_doi(&NA_RE.replace_all(&cleaned, " "));
    }
    if parsed.url.is_none() {
        parsed.url = find_url(&cleaned);
    }
    parsed.title = parsed
        .title
        .map(|t| tidy(&t).to_string())
        .filter(|t| has_title_content(t));
    parsed.venue = parsed
        .venue
        .map(|v| tidy(&v).to_string())
        .filter(|v| v.chars().any(char::is_alphabetic));
    parsed.authors = parsed.authors.filter(|a| !a.is_empty());
    parsed.parse_ok = parsed.title.is_some();
    parsed
}

fn tidy(s: &str) -> &str {
    s.trim()
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '|')
        .trim()
        .trim_end_matches([',', ';', '.', ':', '|'])
        .trim()
        .trim_matches('"')
        .trim()
}

fn parse_labeled(text: &str, index: usize) -> ParsedCitation {
    let mut parsed = ParsedCitation::empty(index);
    let labels: Vec<(usize, usize, String)> = FIELD_LABEL_RE
        .captures_iter(text)
        .map(|c| {
            let whole = c.get(0).unwrap();
            (whole.start(), whole.end(), c[1].to_ascii_lowercase())
        })
        .collect();
    for (i, (_, value_start, label)) in labels.iter().enumerate() {
        let value_end = labels.get(i + 1).map_or(text.len(), |next| next.0);
        // A separator matched by the next label starts with `.`, `|` or `;`
        // which belongs between fields, not inside this value.
        let value = text[*value_start..value_end].trim();
        if value.is_empty() {
            continue;
        }
        let dot_taken = text[value_end..].starts_with('.');
        match label.as_str() {
            "title" => parsed.title = Some(value.to_string()),
            "author" | "authors" => {
                let mut names = split_authors(value);
                if let Some(last) = names.last_mut().filter(|n| dot_taken && ends_with_initial(n)) {
                    last.push('.');
                }
                parsed.authors = Some(names);
            }
            "venue" | "journal" | "conference" | "published in" => {
                parsed.venue = Some(value.to_string())
            }
            "year" => parsed.year = first_year(value),
            "doi" => parsed.doi = find_doi(value),
            "url" | "link" => parsed.url = find_url(value),
            _ => {}
        }
    }
    parsed
}

static APA_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"^(?P<auth>.+?)\s*\(\s*(?P<year>\d{4})[a-z]?(?:,[^)]*)?\)\s*[.,:]?\s*(?P<rest>.+)$")
        .unwrap()
});
static ACM_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"^(?P<auth>.+?)\.\s+(?P<year>\d{4})[a-z]?\.\s+(?P<rest>.+)$").unwrap()
});
static QUOTED_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r#"^(?P<auth>[^"]*?)[,.]?\s*"(?P<title>[^"]+?)[,.]?"\s*[,.]?\s*(?P<rest>.*)$"#).unwrap()
});
static SENTENCE_END_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"[.?!](?:\s+|$)").unwrap());
static VENUE_TAIL_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)(?:,\s*|\s+)(?:vol\.?|volume|no\.?|pp\.?|pages|issue|\d).*$").unwrap()
});
static IN_PREFIX_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)^in\s*:?\s+").unwrap());

fn strip_identifiers(text: &str) -> String {
    let t = NA_RE.replace_all(text, " ");
    let t = DOI_PREFIX_RE.replace_all(&t, " ");
    let t = URL_RE.replace_all(&t, " ");
    let t = ACCESS_RE.replace_all(t.trim_end(), " ");
    let collapsed: Vec<&str> = t.split_whitespace().collect();
    collapsed.join(" ")
}

fn parse_inline(text: &str, index: usize) -> ParsedCitation {
    let mut parsed = ParsedCitation::empty(index);
    let text = strip_identifiers(text);
    if text.is_empty() {
        return parsed;
    }

    if let Some(c) = QUOTED_RE.captures(&text) {
        let rest = c.name("rest").unwrap().as_str();
        parsed.title = Some(c["title"].to_string());
        let auth = c["auth"].trim();
        if !auth.is_empty() {
            parsed.authors = Some(split_authors(auth));
        }
        parsed.venue = quoted_venue(rest);
        parsed.year = first_year(rest).or_else(|| first_year(auth));
        return parsed;
    }

    for re in [&*APA_RE, &*ACM_RE] {
        if let Some(c) = re.captures(&text) {
            let auth = c["auth"].trim();
            if auth.is_empty() || !auth.chars().any(char::is_alphabetic) {
                continue;
            }
            parsed.authors = Some(split_authors(auth));
            parsed.year = valid_year(&c["year"]);
            let (title, venue) = split_title_venue(&c["rest"]);
            parsed.title = title;
            parsed.venue = venue;
            return parsed;
        }
    }

    parse_fallback(&text, index)
}

fn quoted_venue(rest: &str) -> Option<String> {
    let rest = IN_PREFIX_RE.replace(rest.trim(), "");
    let head = rest
        .split([',', '('])
        .next()
        .unwrap_or("")
        .trim()
        .trim_end_matches('.');
    let head = YEAR_RE.replace_all(head, "");
    let head = head.trim();
    (!head.is_empty()).then(|| head.to_string())
}

/// `Title. Venue, 12(3), 1-9.` -> (title, venue)
fn split_title_venue(rest: &str) -> (Option<String>, Option<String>) {
    let rest = rest.trim();
    if let Some(stripped) = rest.strip_prefix('"') {
        if let Some((title, after)) = stripped.split_once('"') {
            return (Some(title.to_string()), clean_venue(after));
        }
    }
    match SENTENCE_END_RE.find(rest) {
        Some(m) => {
            let punct = &rest[m.start()..m.start() + 1];
            let mut title = rest[..m.start()].to_string();
            if punct != "." {
                title.push_str(punct);
            }
            (Some(title), clean_venue(&rest[m.end()..]))
        }
        None => (Some(rest.to_string()), None),
    }
}

fn clean_venue(s: &str) -> Option<String> {
    let s = s.trim().trim_start_matches([',', '.']).trim();
    let s = IN_PREFIX_RE.replace(s, "");
    let s = VENUE_TAIL_RE.replace(&s, "");
    let s = SENTENCE_END_RE
        .find(&s)
        .map_or(s.as_ref(), |m| &s[..m.start()])
        .trim()
        .to_string();
    (!s.is_empty() && s.chars().any(char::is_alphabetic)).then_some(s)
}

fn looks_like_authors(seg: &str) -> bool {
    let words: Vec<&str> = seg.split_whitespace().collect();
    if words.is_empty() || words.len() > 30 {
        return false;
    }
    let has_sep = seg.contains(',') || seg.contains('&') || AND_RE.is_match(seg);
    let capitalized = words
        .iter()
        .filter(|w| w.chars().next().is_some_and(char::is_uppercase))
        .count();
    has_sep && capitalized * 2 >= words.len()
}

fn parse_fallback(text: &str, index: usize) -> ParsedCitation {
    let mut parsed = ParsedCitation::empty(index);
    let segments: Vec<&str> = text
        .split(". ")
        .map(|s| s.trim().trim_end_matches('.'))
        .filter(|s| !s.is_empty())
        .collect();
    let mut cursor = 0;
    if segments.len() >= 2 && looks_like_authors(segments[0]) {
        parsed.authors = Some(split_authors(segments[0]));
        cursor = 1;
    }
    let title_pos = segments[cursor..]
        .iter()
        .position(|s| has_title_content(s) && valid_year(s.trim()).is_none())
        .map(|p| p + cursor);
    if let Some(tp) = title_pos {
        parsed.title = Some(segments[tp].to_string());
        parsed.venue = segments.get(tp + 1).and_then(|v| clean_venue(v));
        // Year from anywhere except the title span.
        let outside: Vec<&str> = segments
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != tp)
            .map(|(_, s)| *s)
            .collect();
        parsed.year = first_year(&outside.join(" "));
    } else {
        parsed.year = first_year(text);
    }
    parsed
}

/// Realized citation count; parse failures included.
pub fn count_citations(parsed: &[ParsedCitation]) -> usize {
    parsed.len()
}

/// Extract and parse every reference of one output.
pub fn parse_output(output_text: &str) -> Vec<ParsedCitation> {
    extract_reference_block(output_text)
        .iter()
        .enumerate()
        .map(|(i, raw)| parse_reference(raw, i))
        .collect()
}
