//! Claim corpus, prompting conditions, run-grid expansion and prompt rendering.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_YEAR: i32 = 1000;
pub const MAX_YEAR: i32 = 3000;

#[derive(Debug, Error)]
pub enum ClaimError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed claim record{}: {message}", fmt_claim_id(.claim_id))]
    Malformed {
        line: usize,
        claim_id: Option<String>,
        message: String,
    },
    #[error("line {line}: duplicate claim_id '{claim_id}'")]
    DuplicateId { line: usize, claim_id: String },
    #[error("unknown domain group '{0}'")]
    UnknownDomain(String),
    #[error("unknown condition '{0}'")]
    UnknownCondition(String),
    #[error("invalid year window [{start}, {end}]")]
    InvalidWindow { start: i32, end: i32 },
    #[error("cannot expand runs: {0} is empty")]
    EmptyInput(&'static str),
    #[error("claim '{claim_id}' has no year window but condition {condition} requires one")]
    MissingWindow {
        claim_id: String,
        condition: Condition,
    },
    #[error("template for {condition}: {message}")]
    Template {
        condition: Condition,
        message: String,
    },
}

fn fmt_claim_id(id: &Option<String>) -> String {
    id.as_ref().map(|id| format!(" '{id}'")).unwrap_or_default()
}

/// The six domain groups claims are stratified by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Domain {
    SeCs,
    NaturalSciences,
    MedicineHealth,
    SocialSciences,
    Humanities,
    Interdisciplinary,
}

impl Domain {
    pub const ALL: [Domain; 6] = [
        Domain::SeCs,
        Domain::NaturalSciences,
        Domain::MedicineHealth,
        Domain::SocialSciences,
        Domain::Humanities,
        Domain::Interdisciplinary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::SeCs => "SE & CS",
            Domain::NaturalSciences => "Natural Sciences",
            Domain::MedicineHealth => "Medicine & Health",
            Domain::SocialSciences => "Social Sciences",
            Domain::Humanities => "Humanities",
            Domain::Interdisciplinary => "Interdisciplinary",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Lowercased alphanumerics only, so "SE & CS", "se_cs" and "SE/CS" compare equal.
fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

impl FromStr for Domain {
    type Err = ClaimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = squash(s);
        let domain = match key.as_str() {
            "secs" | "seandcs" | "softwareengineeringcomputerscience" => Domain::SeCs,
            "naturalsciences" | "naturalscience" => Domain::NaturalSciences,
            "medicinehealth" | "medicineandhealth" | "medicine" => Domain::MedicineHealth,
            "socialsciences" | "socialscience" => Domain::SocialSciences,
            "humanities" => Domain::Humanities,
            "interdisciplinary" => Domain::Interdisciplinary,
            _ => return Err(ClaimError::UnknownDomain(s.to_string())),
        };
        Ok(domain)
    }
}

impl Serialize for Domain {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive publication-year window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "[i32; 2]")]
pub struct YearWindow {
    start: i32,
    end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self, ClaimError> {
        let in_range = |y: i32| (MIN_YEAR..=MAX_YEAR).contains(&y);
        if start > end || !in_range(start) || !in_range(end) {
            return Err(ClaimError::InvalidWindow { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> i32 {
        self.start
    }

    pub fn end(&self) -> i32 {
        self.end
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }
}

impl From<YearWindow> for [i32; 2] {
    fn from(w: YearWindow) -> Self {
        [w.start, w.end]
    }
}

impl<'de> Deserialize<'de> for YearWindow {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [start, end] = <[i32; 2]>::deserialize(deserializer)?;
        YearWindow::new(start, end).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim_id: String,
    pub domain: Domain,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<YearWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<String>>,
}

/// An ordered collection of claims with unique ids.
#[derive(Debug, Clone, Default)]
pub struct ClaimSet {
    claims: Vec<ClaimRecord>,
}

impl ClaimSet {
    pub fn new(claims: Vec<ClaimRecord>) -> Result<Self, ClaimError> {
        let mut seen = HashSet::new();
        for (i, claim) in claims.iter().enumerate() {
            if !seen.insert(claim.claim_id.as_str()) {
                return Err(ClaimError::DuplicateId {
                    line: i + 1,
                    claim_id: claim.claim_id.clone(),
                });
            }
        }
        Ok(Self { claims })
    }

    pub fn len(&self) -> usize {
        self.claims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.claims.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ClaimRecord> {
        self.claims.iter()
    }

    pub fn get(&self, claim_id: &str) -> Option<&ClaimRecord> {
        self.claims.iter().find(|c| c.claim_id == claim_id)
    }

    pub fn domain_counts(&self) -> BTreeMap<Domain, usize> {
        let mut counts = BTreeMap::new();
        for c in &self.claims {
            *counts.entry(c.domain).or_insert(0) += 1;
        }
        counts
    }

    /// Map of claim id to claim, for repeated lookups.
    pub fn index(&self) -> std::collections::HashMap<&str, &ClaimRecord> {
        self.claims.iter().map(|c| (c.claim_id.as_str(), c)).collect()
    }
}

impl<'a> IntoIterator for &'a ClaimSet {
    type Item = &'a ClaimRecord;
    type IntoIter = std::slice::Iter<'a, ClaimRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.claims.iter()
    }
}

/// Parse a JSON-lines claims file. Blank lines are skipped.
pub fn parse_claims(content: &str) -> Result<ClaimSet, ClaimError> {
    let mut claims = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: ClaimRecord = serde_json::from_str(line).map_err(|e| {
            // Recover the id, if any, so the error names the offending claim.
            let claim_id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("claim_id")?.as_str().map(str::to_string));
            ClaimError::Malformed {
                line: line_no,
                claim_id,
                message: e.to_string(),
            }
        })?;
        if record.claim_id.trim().is_empty() {
            return Err(ClaimError::Malformed {
                line: line_no,
                claim_id: None,
                message: "empty claim_id".into(),
            });
        }
        if !seen.insert(record.claim_id.clone()) {
            return Err(ClaimError::DuplicateId {
                line: line_no,
                claim_id: record.claim_id,
            });
        }
        claims.push(record);
    }
    Ok(ClaimSet { claims })
}

pub fn load_claims(path: &Path) -> Result<ClaimSet, ClaimError> {
    let content = fs::read_to_string(path).map_err(|source| ClaimError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_claims(&content)
}

/// The five prompting regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    Baseline,
    Temporal,
    Survey,
    NonDisclosure,
    Combo,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Baseline,
        Condition::Temporal,
        Condition::Survey,
        Condition::NonDisclosure,
        Condition::Combo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Baseline => "Baseline",
            Condition::Temporal => "Temporal",
            Condition::Survey => "Survey",
            Condition::NonDisclosure => "NonDisclosure",
            Condition::Combo => "Combo",
        }
    }

    /// File-name friendly lowercase form.
    pub fn slug(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Temporal => "temporal",
            Condition::Survey => "survey",
            Condition::NonDisclosure => "nondisclosure",
            Condition::Combo => "combo",
        }
    }

    pub fn spec(self) -> ConditionSpec {
        ConditionSpec::standard(self)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = ClaimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let c = match squash(s).as_str() {
            "baseline" | "base" => Condition::Baseline,
            "temporal" | "temp" => Condition::Temporal,
            "survey" | "surv" => Condition::Survey,
            "nondisclosure" | "nondisc" | "nd" => Condition::NonDisclosure,
            "combo" | "combined" => Condition::Combo,
            _ => return Err(ClaimError::UnknownCondition(s.to_string())),
        };
        Ok(c)
    }
}

impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What a condition asks of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionSpec {
    pub name: Condition,
    /// Requested number of citations (k).
    pub requested_citations: u32,
    pub uses_window: bool,
    pub survey_structure: bool,
    pub nondisclosure_clause: bool,
}

impl ConditionSpec {
    pub fn standard(name: Condition) -> Self {
        let (k, uses_window, survey_structure, nondisclosure_clause) = match name {
            Condition::Baseline => (5, false, false, false),
            Condition::Temporal => (5, true, false, false),
            Condition::Survey => (8, false, true, false),
            Condition::NonDisclosure => (5, false, false, true),
            Condition::Combo => (8, true, true, true),
        };
        Self {
            name,
            requested_citations: k,
            uses_window,
            survey_structure,
            nondisclosure_clause,
        }
    }

    pub fn all() -> Vec<ConditionSpec> {
        Condition::ALL.iter().map(|&c| Self::standard(c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunSpec {
    pub claim_id: String,
    pub condition: Condition,
    pub model_id: String,
}

/// Cartesian product of claims, conditions and models in claim-major order.
pub fn expand_runs(
    claims: &ClaimSet,
    conditions: &[ConditionSpec],
    models: &[String],
) -> Result<Vec<RunSpec>, ClaimError> {
    if claims.is_empty() {
        return Err(ClaimError::EmptyInput("claims"));
    }
    if conditions.is_empty() {
        return Err(ClaimError::EmptyInput("conditions"));
    }
    if models.is_empty() {
        return Err(ClaimError::EmptyInput("models"));
    }
    let mut runs = Vec::with_capacity(claims.len() * conditions.len() * models.len());
    for claim in claims {
        for cond in conditions {
            for model in models {
                runs.push(RunSpec {
                    claim_id: claim.claim_id.clone(),
                    condition: cond.name,
                    model_id: model.clone(),
                });
            }
        }
    }
    Ok(runs)
}

const DEFAULT_BASELINE: &str = "\
{claim}

Write one concise academic paragraph that answers the question above, followed by a reference list.
Topic hints (keywords only): {anchors}
Cite exactly {k} scholarly works. List them under a heading \"References\" as a numbered list, one entry per work, using these fields: Title, Authors, Venue, Year, DOI, and URL when available.
";

const DEFAULT_TEMPORAL: &str = "\
{claim}

Write one concise academic paragraph that answers the question above, followed by a reference list.
Topic hints (keywords only): {anchors}
Cite exactly {k} scholarly works. Every cited work must have been published between {start} and {end} inclusive; do not cite anything outside that window.
List them under a heading \"References\" as a numbered list, one entry per work, using these fields: Title, Authors, Venue, Year, DOI, and URL when available.
";

const DEFAULT_SURVEY: &str = "\
{claim}

Write a related-work synthesis that answers the question above, organized into 3-4 categories of approaches, each introduced by a short category heading.
Topic hints (keywords only): {anchors}
Cite exactly {k} scholarly works. List them under a heading \"References\" as a numbered list, one entry per work, using these fields: Title, Authors, Venue, Year, DOI, and URL when available.
";

const DEFAULT_NONDISCLOSURE: &str = "\
{claim}

Write one concise academic paragraph that answers the question above, followed by a reference list.
Topic hints (keywords only): {anchors}
Do not state or imply that you have access to memorized training documents or to any specific documents from your training data.
Cite exactly {k} scholarly works. List them under a heading \"References\" as a numbered list, one entry per work, using these fields: Title, Authors, Venue, Year, DOI, and URL when available.
";

const DEFAULT_COMBO: &str = "\
{claim}

Write a related-work synthesis that answers the question above, organized into 3-4 categories of approaches, each introduced by a short category heading.
Topic hints (keywords only): {anchors}
Do not state or imply that you have access to memorized training documents or to any specific documents from your training data.
Cite exactly {k} scholarly works. Every cited work must have been published between {start} and {end} inclusive; do not cite anything outside that window.
List them under a heading \"References\" as a numbered list, one entry per work, using these fields: Title, Authors, Venue, Year, DOI, and URL when available.
";

/// One prompt template per condition.
///
/// Placeholders: `{claim}`, `{k}`, `{start}`, `{end}`, `{anchors}`. Lines that
/// contain `{anchors}` are dropped when a claim has no anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<Condition, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let templates = [
            (Condition::Baseline, DEFAULT_BASELINE),
            (Condition::Temporal, DEFAULT_TEMPORAL),
            (Condition::Survey, DEFAULT_SURVEY),
            (Condition::NonDisclosure, DEFAULT_NONDISCLOSURE),
            (Condition::Combo, DEFAULT_COMBO),
        ]
        .into_iter()
        .map(|(c, t)| (c, t.to_string()))
        .collect();
        Self { templates }
    }
}

impl TemplateSet {
    /// Replace the template for one condition after checking its placeholders.
    pub fn set(&mut self, condition: Condition, template: String) -> Result<(), ClaimError> {
        validate_template(condition, &template)?;
        self.templates.insert(condition, template);
        Ok(())
    }

    pub fn get(&self, condition: Condition) -> &str {
        &self.templates[&condition]
    }

    /// Load `<slug>.txt` files from a directory; conditions without a file keep the default.
    pub fn load_dir(dir: &Path) -> Result<Self, ClaimError> {
        let mut set = Self::default();
        for cond in Condition::ALL {
            let path = dir.join(format!("{}.txt", cond.slug()));
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|source| ClaimError::Io {
                path: path.display().to_string(),
                source,
            })?;
            set.set(cond, text)?;
        }
        Ok(set)
    }
}

fn validate_template(condition: Condition, template: &str) -> Result<(), ClaimError> {
    let spec = condition.spec();
    let err = |message: &str| ClaimError::Template {
        condition,
        message: message.to_string(),
    };
    for required in ["{claim}", "{k}", "{anchors}"] {
        if !template.contains(required) {
            return Err(err(&format!("missing placeholder {required}")));
        }
    }
    let has_bounds = template.contains("{start}") && template.contains("{end}");
    let any_bound = template.contains("{start}") || template.contains("{end}");
    if spec.uses_window && !has_bounds {
        return Err(err("window conditions need both {start} and {end}"));
    }
    if !spec.uses_window && any_bound {
        return Err(err("conditions without a window must not reference {start}/{end}"));
    }
    Ok(())
}

/// Fill the condition's template for one claim.
pub fn render_prompt(
    claim: &ClaimRecord,
    condition: &ConditionSpec,
    templates: &TemplateSet,
) -> Result<String, ClaimError> {
    let window = match (condition.uses_window, claim.window) {
        (true, None) => {
            return Err(ClaimError::MissingWindow {
                claim_id: claim.claim_id.clone(),
                condition: condition.name,
            })
        }
        (true, Some(w)) => Some(w),
        (false, _) => None,
    };
    let anchors = claim
        .anchors
        .as_ref()
        .filter(|a| !a.is_empty())
        .map(|a| a.join(", "));

    let template = templates.get(condition.name);
    let mut out = String::with_capacity(template.len() + claim.text.len());
    for line in template.split_inclusive('\n') {
        if line.contains("{anchors}") && anchors.is_none() {
            continue;
        }
        out.push_str(line);
    }

    // {claim} is substituted last so claim text containing braces is left untouched.
    let mut out = out
        .replace("{k}", &condition.requested_citations.to_string())
        .replace("{anchors}", anchors.as_deref().unwrap_or(""));
    if let Some(w) = window {
        out = out
            .replace("{start}", &w.start().to_string())
            .replace("{end}", &w.end().to_string());
    }
    Ok(out.replace("{claim}", &claim.text))
}
