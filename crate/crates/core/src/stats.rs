//! Aggregation of verdicts into cell metrics, bootstrap intervals and audit checks.
//!
//! Every statistic here is a ratio of citation counts summed over claims, so
//! the unit of work is [`ClaimCounts`]: one claim's tallies within one
//! model and condition cell. Bootstrap routines resample whole claims.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claimset::{Condition, Domain};
use crate::labeler::{Label, Verdict};
use crate::matcher::MatchScore;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_SEED: u64 = 20_240_601;
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cell has no citations")]
    EmptyCell,
    #[error("claim '{0}' has no citations")]
    EmptyClaim(String),
    #[error("bootstrap needs at least 2 claims, got {0}")]
    TooFewClaims(usize),
    #[error("resample count must be at least 1")]
    ZeroResamples,
    #[error("claim '{0}' appears more than once in a cell")]
    DuplicateClaim(String),
    #[error("paired resampling needs identical claim sets: {0}")]
    MismatchedClaims(String),
    #[error("every resample had an empty denominator")]
    DegenerateResamples,
    #[error("kappa undefined: chance agreement is 1 but observed agreement is {0}")]
    KappaUndefined(f64),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("audit fractions must be non-negative and sum to 1, got {0:?}")]
    InvalidAudit([f64; 3]),
    #[error("unknown group key '{0}'")]
    UnknownGroupKey(String),
    #[error("no domain known for claim '{0}'")]
    MissingDomain(String),
    #[error("unknown resampling mode '{0}'")]
    UnknownResampling(String),
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("run {model_id}/{condition}/{claim_id} declares {declared} citations but has {found} verdicts")]
    RunMismatch {
        claim_id: String,
        model_id: String,
        condition: Condition,
        declared: usize,
        found: usize,
    },
}

/// One verdict line of a verdicts file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub claim_id: String,
    pub model_id: String,
    pub condition: Condition,
    pub citation_index: usize,
    pub label: Label,
    pub best_score: Option<MatchScore>,
    pub temporal_violation: bool,
    pub doi_present: bool,
}

impl VerdictRecord {
    pub fn from_verdict(claim_id: &str, model_id: &str, condition: Condition, v: &Verdict) -> Self {
        Self {
            claim_id: claim_id.to_string(),
            model_id: model_id.to_string(),
            condition,
            citation_index: v.citation_index,
            label: v.label,
            best_score: v.best_score,
            temporal_violation: v.temporal_violation,
            doi_present: v.doi_present,
        }
    }

    pub fn cell(&self) -> CellKey {
        CellKey {
            model_id: self.model_id.clone(),
            condition: self.condition,
        }
    }
}

/// One run line: how many citations a (claim, model, condition) output yielded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub claim_id: String,
    pub model_id: String,
    pub condition: Condition,
    pub n_citations: usize,
}

pub fn parse_verdicts(content: &str) -> Result<Vec<VerdictRecord>, StatsError> {
    parse_jsonl(content)
}

pub fn parse_runs(content: &str) -> Result<Vec<RunRecord>, StatsError> {
    parse_jsonl(content)
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(content: &str) -> Result<Vec<T>, StatsError> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StatsError::MalformedRow {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub model_id: String,
    pub condition: Condition,
}

/// Quantity whose citation-weighted rate is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    Label(Label),
    TemporalViolation,
    DoiPresent,
}

impl Statistic {
    pub const EXISTING: Statistic = Statistic::Label(Label::Existing);
}

/// Tallies of one claim's citations inside one cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCounts {
    pub claim_id: String,
    pub total: usize,
    /// Indexed by [`Label::index`].
    pub labels: [usize; 3],
    pub temporal: usize,
    pub doi: usize,
}

impl ClaimCounts {
    pub fn new(claim_id: impl Into<String>) -> Self {
        Self {
            claim_id: claim_id.into(),
            ..Default::default()
        }
    }

    /// Counts with the given label tallies and no flags set.
    pub fn from_labels(claim_id: impl Into<String>, existing: usize, unresolved: usize, fabricated: usize) -> Self {
        Self {
            claim_id: claim_id.into(),
            total: existing + unresolved + fabricated,
            labels: [existing, unresolved, fabricated],
            temporal: 0,
            doi: 0,
        }
    }

    pub fn add(&mut self, label: Label, temporal: bool, doi: bool) {
        self.total += 1;
        self.labels[label.index()] += 1;
        self.temporal += usize::from(temporal);
        self.doi += usize::from(doi);
    }

    pub fn merge(&mut self, other: &ClaimCounts) {
        self.total += other.total;
        for i in 0..3 {
            self.labels[i] += other.labels[i];
        }
        self.temporal += other.temporal;
        self.doi += other.doi;
    }

    pub fn count(&self, stat: Statistic) -> usize {
        match stat {
            Statistic::Label(l) => self.labels[l.index()],
            Statistic::TemporalViolation => self.temporal,
            Statistic::DoiPresent => self.doi,
        }
    }
}

/// Per-claim counts of a set of verdicts, sorted by claim id.
pub fn cluster_counts<'a>(verdicts: impl IntoIterator<Item = &'a VerdictRecord>) -> Vec<ClaimCounts> {
    let mut by_claim: BTreeMap<&str, ClaimCounts> = BTreeMap::new();
    for v in verdicts {
        by_claim
            .entry(v.claim_id.as_str())
            .or_insert_with(|| ClaimCounts::new(v.claim_id.clone()))
            .add(v.label, v.temporal_violation, v.doi_present);
    }
    by_claim.into_values().collect()
}

/// Groups verdicts into cells. Runs, when given, contribute claims whose output
/// had no citations and must agree with the verdict counts.
pub fn cells(
    verdicts: &[VerdictRecord],
    runs: &[RunRecord],
) -> Result<BTreeMap<CellKey, Vec<ClaimCounts>>, StatsError> {
    let mut grouped: BTreeMap<CellKey, BTreeMap<String, ClaimCounts>> = BTreeMap::new();
    for v in verdicts {
        grouped
            .entry(v.cell())
            .or_default()
            .entry(v.claim_id.clone())
            .or_insert_with(|| ClaimCounts::new(v.claim_id.clone()))
            .add(v.label, v.temporal_violation, v.doi_present);
    }
    for r in runs {
        let key = CellKey {
            model_id: r.model_id.clone(),
            condition: r.condition,
        };
        let counts = grouped
            .entry(key)
            .or_default()
            .entry(r.claim_id.clone())
            .or_insert_with(|| ClaimCounts::new(r.claim_id.clone()));
        if counts.total != r.n_citations {
            return Err(StatsError::RunMismatch {
                claim_id: r.claim_id.clone(),
                model_id: r.model_id.clone(),
                condition: r.condition,
                declared: r.n_citations,
                found: counts.total,
            });
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(k, m)| (k, m.into_values().collect()))
        .collect())
}

/// Sums counts per claim across several cells (e.g. models of one group).
pub fn pool_clusters<'a>(groups: impl IntoIterator<Item = &'a [ClaimCounts]>) -> Vec<ClaimCounts> {
    let mut pooled: BTreeMap<String, ClaimCounts> = BTreeMap::new();
    for group in groups {
        for c in group {
            pooled
                .entry(c.claim_id.clone())
                .or_insert_with(|| ClaimCounts::new(c.claim_id.clone()))
                .merge(c);
        }
    }
    pooled.into_values().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellIntervals {
    pub existing: Interval,
    pub fabricated: Interval,
    pub unresolved: Interval,
    pub temporal_violation: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub model_id: String,
    pub condition: Condition,
    pub n_claims: usize,
    pub n_citations: usize,
    pub existing_rate: f64,
    pub fabricated_rate: f64,
    pub unresolved_rate: f64,
    pub temporal_violation_rate: f64,
    pub doi_rate: f64,
    pub avg_citations: f64,
    pub ci: Option<CellIntervals>,
}

impl CellMetrics {
    pub fn rate(&self, label: Label) -> f64 {
        match label {
            Label::Existing => self.existing_rate,
            Label::Unresolved => self.unresolved_rate,
            Label::Fabricated => self.fabricated_rate,
        }
    }

    pub fn rate_sum(&self) -> f64 {
        self.existing_rate + self.fabricated_rate + self.unresolved_rate
    }
}

fn totals(clusters: &[ClaimCounts]) -> ClaimCounts {
    let mut t = ClaimCounts::new("");
    for c in clusters {
        t.merge(c);
    }
    t
}

/// Citation-weighted point estimates for one cell.
pub fn cell_metrics(
    model_id: &str,
    condition: Condition,
    clusters: &[ClaimCounts],
) -> Result<CellMetrics, StatsError> {
    let t = totals(clusters);
    if t.total == 0 {
        return Err(StatsError::EmptyCell);
    }
    let n = t.total as f64;
    let rate = |k: usize| k as f64 / n;
    Ok(CellMetrics {
        model_id: model_id.to_string(),
        condition,
        n_claims: clusters.len(),
        n_citations: t.total,
        existing_rate: rate(t.labels[Label::Existing.index()]),
        fabricated_rate: rate(t.labels[Label::Fabricated.index()]),
        unresolved_rate: rate(t.labels[Label::Unresolved.index()]),
        temporal_violation_rate: rate(t.temporal),
        doi_rate: rate(t.doi),
        avg_citations: n / clusters.len() as f64,
        ci: None,
    })
}

/// Point estimates plus cluster-bootstrap intervals for each rate.
pub fn cell_metrics_with_ci(
    model_id: &str,
    condition: Condition,
    clusters: &[ClaimCounts],
    boot: &BootstrapConfig,
) -> Result<CellMetrics, StatsError> {
    let mut m = cell_metrics(model_id, condition, clusters)?;
    let ci = |s| cluster_bootstrap_ci(clusters, s, boot);
    m.ci = Some(CellIntervals {
        existing: ci(Statistic::Label(Label::Existing))?,
        fabricated: ci(Statistic::Label(Label::Fabricated))?,
        unresolved: ci(Statistic::Label(Label::Unresolved))?,
        temporal_violation: ci(Statistic::TemporalViolation)?,
    });
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimFraction {
    pub claim_id: String,
    pub f: f64,
}

pub fn per_claim_fraction(counts: &ClaimCounts) -> Result<ClaimFraction, StatsError> {
    if counts.total == 0 {
        return Err(StatsError::EmptyClaim(counts.claim_id.clone()));
    }
    Ok(ClaimFraction {
        claim_id: counts.claim_id.clone(),
        f: counts.labels[Label::Existing.index()] as f64 / counts.total as f64,
    })
}

/// Fractions for every claim that produced citations.
pub fn claim_fractions(clusters: &[ClaimCounts]) -> Vec<ClaimFraction> {
    clusters.iter().filter_map(|c| per_claim_fraction(c).ok()).collect()
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Five-number box summary; whiskers reach the most extreme data within 1.5 IQR of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub mean: f64,
}

impl BoxStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let s = sorted(values);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let fence = 1.5 * (q3 - q1);
    let whisker_low = s.iter().copied().find(|&x| x >= q1 - fence).unwrap_or(s[0]);
    let whisker_high = s
        .iter()
        .rev()
        .copied()
        .find(|&x| x <= q3 + fence)
        .unwrap_or(s[s.len() - 1]);
    Some(BoxStats {
        n: s.len(),
        min: s[0],
        q1,
        median,
        q3,
        max: s[s.len() - 1],
        whisker_low,
        whisker_high,
        mean: s.iter().sum::<f64>() / s.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: DEFAULT_RESAMPLES,
            seed: DEFAULT_SEED,
            parallel: true,
        }
    }
}

impl BootstrapConfig {
    pub fn new(resamples: usize, seed: u64) -> Result<Self, StatsError> {
        if resamples == 0 {
            return Err(StatsError::ZeroResamples);
        }
        Ok(Self {
            resamples,
            seed,
            parallel: true,
        })
    }

    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }

    /// Generator for resample `b`; independent of how resamples are scheduled.
    fn stream(&self, b: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(b as u64);
        rng
    }

    /// Replicate values in resample order; `None` entries are dropped.
    fn replicates<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&mut ChaCha8Rng) -> Option<f64> + Sync,
    {
        let one = |b: usize| f(&mut self.stream(b));
        let reps: Vec<Option<f64>> = if self.parallel {
            (0..self.resamples).into_par_iter().map(one).collect()
        } else {
            (0..self.resamples).map(one).collect()
        };
        reps.into_iter().flatten().collect()
    }
}

fn sorted_unique(clusters: &[ClaimCounts]) -> Result<Vec<&ClaimCounts>, StatsError> {
    let mut v: Vec<&ClaimCounts> = clusters.iter().collect();
    v.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    if let Some(w) = v.windows(2).find(|w| w[0].claim_id == w[1].claim_id) {
        return Err(StatsError::DuplicateClaim(w[0].claim_id.clone()));
    }
    Ok(v)
}

fn resampled_rate(clusters: &[&ClaimCounts], idx: &[usize], stat: Statistic) -> Option<f64> {
    let (mut num, mut den) = (0usize, 0usize);
    for &i in idx {
        num += clusters[i].count(stat);
        den += clusters[i].total;
    }
    (den > 0).then(|| num as f64 / den as f64)
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn percentile_interval(mut reps: Vec<f64>) -> Result<Interval, StatsError> {
    if reps.is_empty() {
        return Err(StatsError::DegenerateResamples);
    }
    reps.sort_by(f64::total_cmp);
    Ok(Interval {
        low: quantile_sorted(&reps, 0.025),
        high: quantile_sorted(&reps, 0.975),
    })
}

/// 95% percentile interval of a citation-weighted rate, resampling claims.
///
/// Claims without citations carry no weight and are left out. The result does
/// not depend on the order of `clusters` or on `boot.parallel`.
pub fn cluster_bootstrap_ci(
    clusters: &[ClaimCounts],
    stat: Statistic,
    boot: &BootstrapConfig,
) -> Result<Interval, StatsError> {
    if boot.resamples == 0 {
        return Err(StatsError::ZeroResamples);
    }
    let all = sorted_unique(clusters)?;
    let used: Vec<&ClaimCounts> = all.into_iter().filter(|c| c.total > 0).collect();
    if used.len() < 2 {
        return Err(StatsError::TooFewClaims(used.len()));
    }
    let n = used.len();
    let reps = boot.replicates(|rng| resampled_rate(&used, &draw(rng, n), stat));
    percentile_interval(reps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampling {
    /// One claim draw shared by both groups.
    #[default]
    Paired,
    /// Separate draws per group.
    Independent,
}

impl FromStr for Resampling {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paired" => Ok(Resampling::Paired),
            "independent" | "unpaired" => Ok(Resampling::Independent),
            _ => Err(StatsError::UnknownResampling(s.to_string())),
        }
    }
}

impl fmt::Display for Resampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resampling::Paired => "paired",
            Resampling::Independent => "independent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDifference {
    pub delta: f64,
    pub ci: Interval,
    pub excludes_zero: bool,
}

fn rate_of(clusters: &[&ClaimCounts], stat: Statistic) -> Option<f64> {
    let idx: Vec<usize> = (0..clusters.len()).collect();
    resampled_rate(clusters, &idx, stat)
}

/// Difference `rate(a) - rate(b)` with a 95% cluster-bootstrap interval.
///
/// Paired mode demands identical claim sets and aligns the draws on claim id;
/// resamples where either side has no citations are dropped.
pub fn rate_difference_ci(
    a: &[ClaimCounts],
    b: &[ClaimCounts],
    stat: Statistic,
    boot: &BootstrapConfig,
    resampling: Resampling,
) -> Result<RateDifference, StatsError> {
    if boot.resamples == 0 {
        return Err(StatsError::ZeroResamples);
    }
    let a = sorted_unique(a)?;
    let b = sorted_unique(b)?;
    let delta = match (rate_of(&a, stat), rate_of(&b, stat)) {
        (Some(x), Some(y)) => x - y,
        _ => return Err(StatsError::EmptyCell),
    };

    let reps = match resampling {
        Resampling::Paired => {
            let ids_a: Vec<&str> = a.iter().map(|c| c.claim_id.as_str()).collect();
            let ids_b: Vec<&str> = b.iter().map(|c| c.claim_id.as_str()).collect();
            if ids_a != ids_b {
                let sa: BTreeSet<&str> = ids_a.iter().copied().collect();
                let sb: BTreeSet<&str> = ids_b.iter().copied().collect();
                let only: Vec<&str> = sa.symmetric_difference(&sb).copied().take(5).collect();
                return Err(StatsError::MismatchedClaims(format!("differing claims {only:?}")));
            }
            if a.len() < 2 {
                return Err(StatsError::TooFewClaims(a.len()));
            }
            let n = a.len();
            boot.replicates(|rng| {
                let idx = draw(rng, n);
                Some(resampled_rate(&a, &idx, stat)? - resampled_rate(&b, &idx, stat)?)
            })
        }
        Resampling::Independent => {
            let a: Vec<&ClaimCounts> = a.into_iter().filter(|c| c.total > 0).collect();
            let b: Vec<&ClaimCounts> = b.into_iter().filter(|c| c.total > 0).collect();
            if a.len() < 2 || b.len() < 2 {
                return Err(StatsError::TooFewClaims(a.len().min(b.len())));
            }
            boot.replicates(|rng| {
                let ia = draw(rng, a.len());
                let ib = draw(rng, b.len());
                Some(resampled_rate(&a, &ia, stat)? - resampled_rate(&b, &ib, stat)?)
            })
        }
    };
    let ci = percentile_interval(reps)?;
    Ok(RateDifference {
        delta,
        ci,
        excludes_zero: !ci.contains(0.0),
    })
}

/// Pipeline labels in rows, human labels in columns, both in [`Label::index`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix3 {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix3 {
    pub fn new(counts: [[u64; 3]; 3]) -> Result<Self, StatsError> {
        let m = Self { counts };
        if m.total() == 0 {
            return Err(StatsError::EmptyMatrix);
        }
        Ok(m)
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Result<Self, StatsError> {
        let mut counts = [[0u64; 3]; 3];
        for (pipeline, human) in pairs {
            counts[pipeline.index()][human.index()] += 1;
        }
        Self::new(counts)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, pipeline: Label) -> u64 {
        self.counts[pipeline.index()].iter().sum()
    }

    pub fn col_sum(&self, human: Label) -> u64 {
        self.counts.iter().map(|r| r[human.index()]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    /// Share of pipeline `label` verdicts the humans agreed with.
    pub fn precision(&self, label: Label) -> Option<f64> {
        let row = self.row_sum(label);
        (row > 0).then(|| self.counts[label.index()][label.index()] as f64 / row as f64)
    }

    pub fn recall(&self, label: Label) -> Option<f64> {
        let col = self.col_sum(label);
        (col > 0).then(|| self.counts[label.index()][label.index()] as f64 / col as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub agreement: f64,
    pub kappa: f64,
}

pub fn cohens_kappa(m: &ConfusionMatrix3) -> Result<Agreement, StatsError> {
    let n = m.total();
    if n == 0 {
        return Err(StatsError::EmptyMatrix);
    }
    let n = n as f64;
    let p_o = m.trace() as f64 / n;
    let p_e: f64 = Label::ALL
        .iter()
        .map(|&l| (m.row_sum(l) as f64 / n) * (m.col_sum(l) as f64 / n))
        .sum();
    let kappa = if (1.0 - p_e).abs() < f64::EPSILON {
        if (1.0 - p_o).abs() < f64::EPSILON {
            1.0
        } else {
            return Err(StatsError::KappaUndefined(p_o));
        }
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };
    Ok(Agreement {
        agreement: p_o,
        kappa,
    })
}

/// Where audited Unresolved citations actually belong.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRates {
    pub existing: f64,
    pub unresolved: f64,
    pub fabricated: f64,
}

impl AuditRates {
    pub fn new(existing: f64, unresolved: f64, fabricated: f64) -> Result<Self, StatsError> {
        let parts = [existing, unresolved, fabricated];
        let valid = parts.iter().all(|p| p.is_finite() && *p >= 0.0)
            && ((existing + unresolved + fabricated) - 1.0).abs() <= SUM_TOLERANCE;
        if !valid {
            return Err(StatsError::InvalidAudit(parts));
        }
        Ok(Self {
            existing,
            unresolved,
            fabricated,
        })
    }

    /// Human labels of the citations the pipeline called Unresolved.
    pub fn from_confusion(m: &ConfusionMatrix3) -> Result<Self, StatsError> {
        let row = m.counts[Label::Unresolved.index()];
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Err(StatsError::EmptyMatrix);
        }
        let f = |l: Label| row[l.index()] as f64 / total as f64;
        Self::new(f(Label::Existing), f(Label::Unresolved), f(Label::Fabricated))
    }
}

/// Moves each cell's Unresolved mass to the three labels in audit proportions.
pub fn sensitivity_reassign(cm: &CellMetrics, audit: &AuditRates) -> CellMetrics {
    let u = cm.unresolved_rate;
    CellMetrics {
        existing_rate: cm.existing_rate + u * audit.existing,
        fabricated_rate: cm.fabricated_rate + u * audit.fabricated,
        unresolved_rate: u * audit.unresolved,
        ci: None,
        ..cm.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKey {
    Domain,
    Model,
    Condition,
}

impl FromStr for GroupKey {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "domain" => Ok(GroupKey::Domain),
            "model" => Ok(GroupKey::Model),
            "condition" => Ok(GroupKey::Condition),
            _ => Err(StatsError::UnknownGroupKey(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRate {
    pub group: String,
    pub n_claims: usize,
    pub n_citations: usize,
    pub existing_rate: f64,
}

/// Citation-weighted existence rate per group, in group-name order.
/// Domain grouping needs the claim-to-domain map.
pub fn group_rates(
    verdicts: &[VerdictRecord],
    key: GroupKey,
    domains: Option<&BTreeMap<String, Domain>>,
) -> Result<Vec<GroupRate>, StatsError> {
    let mut groups: BTreeMap<String, (BTreeSet<&str>, usize, usize)> = BTreeMap::new();
    for v in verdicts {
        let group = match key {
            GroupKey::Model => v.model_id.clone(),
            GroupKey::Condition => v.condition.name().to_string(),
            GroupKey::Domain => domains
                .and_then(|d| d.get(&v.claim_id))
                .ok_or_else(|| StatsError::MissingDomain(v.claim_id.clone()))?
                .name()
                .to_string(),
        };
        let entry = groups.entry(group).or_default();
        entry.0.insert(v.claim_id.as_str());
        entry.1 += 1;
        entry.2 += usize::from(v.label == Label::Existing);
    }
    Ok(groups
        .into_iter()
        .map(|(group, (claims, total, existing))| GroupRate {
            group,
            n_claims: claims.len(),
            n_citations: total,
            existing_rate: existing as f64 / total as f64,
        })
        .collect())
}

pub fn doi_completeness_rate(verdicts: &[VerdictRecord]) -> Result<f64, StatsError> {
    if verdicts.is_empty() {
        return Err(StatsError::EmptyCell);
    }
    Ok(verdicts.iter().filter(|v| v.doi_present).count() as f64 / verdicts.len() as f64)
}
