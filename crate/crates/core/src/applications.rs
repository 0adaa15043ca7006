//! Label assignment, similar-column search and outlier detection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::comparison::{compare_with_regex, compare_xtructures, ComparisonConfig, SimilarityPair};
use crate::error::{Error, Result};
use crate::minhash::{lsh_index, signature, DEFAULT_BANDS, DEFAULT_ROWS, DEFAULT_SIGNATURE_LEN};
use crate::model::{mix, Xtructure};
use crate::regex::{parse_regex, FiniteRegex};
use crate::score::{branch_distances, normalize};

pub const DEFAULT_ASSIGNMENT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 0.5;

/// One entry of a label library file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub label: String,
    pub regex: String,
}

#[derive(Debug, Clone)]
pub struct LabelRule {
    pub label: String,
    pub regex: FiniteRegex,
}

impl LabelRule {
    pub fn new(label: impl Into<String>, regex: &str) -> Result<Self> {
        Ok(LabelRule { label: label.into(), regex: parse_regex(regex)? })
    }
}

pub fn parse_library(json: &str) -> Result<Vec<LabelRule>> {
    let entries: Vec<LabelEntry> =
        serde_json::from_str(json).map_err(|e| Error::Model(format!("label library: {e}")))?;
    entries.iter().map(|e| LabelRule::new(&e.label, &e.regex)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelAssignment {
    pub column_id: String,
    pub label: String,
    pub regex: String,
    pub score: f64,
}

/// Scores every column against every rule and keeps the best rule per
/// column if its mean fit reaches `threshold`.
pub fn assign_labels(
    models: &[(String, Xtructure)],
    library: &[LabelRule],
    threshold: f64,
    cfg: &ComparisonConfig,
    seed: u64,
) -> Result<Vec<LabelAssignment>> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let mut out = Vec::new();
    for (column_id, x) in models {
        let mut best: Option<(SimilarityPair, &LabelRule)> = None;
        for (ri, rule) in library.iter().enumerate() {
            let s = compare_with_regex(x, &rule.regex, cfg, mix(seed, ri as u64))?;
            let better = match &best {
                None => true,
                Some((b, br)) => {
                    s.mean()
                        .total_cmp(&b.mean())
                        .then(s.fit_a_in_b.total_cmp(&b.fit_a_in_b))
                        .then_with(|| br.label.cmp(&rule.label))
                        == Ordering::Greater
                }
            };
            if better {
                best = Some((s, rule));
            }
        }
        if let Some((s, rule)) = best {
            if s.mean() >= threshold {
                out.push(LabelAssignment {
                    column_id: column_id.clone(),
                    label: rule.label.clone(),
                    regex: rule.regex.source().to_string(),
                    score: s.mean(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMethod {
    AllPairs,
    Lsh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityConfig {
    pub comparison: ComparisonConfig,
    pub signature_len: usize,
    pub bands: usize,
    pub rows: usize,
    pub seed: u64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            comparison: ComparisonConfig::default(),
            signature_len: DEFAULT_SIGNATURE_LEN,
            bands: DEFAULT_BANDS,
            rows: DEFAULT_ROWS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub a: usize,
    pub b: usize,
    /// Mean bidirectional fit, or estimated Jaccard in LSH mode.
    pub score: f64,
    /// Directional fits; present for all-pairs comparison only.
    pub fits: Option<SimilarityPair>,
}

/// Every unordered pair with its bidirectional fit.
pub fn all_pairs_scores(models: &[Xtructure], cfg: &SimilarityConfig) -> Result<Vec<ScoredPair>> {
    let mut out = Vec::new();
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            let s = compare_xtructures(
                &models[i],
                &models[j],
                &cfg.comparison,
                mix(cfg.seed, (i * models.len() + j) as u64),
            )?;
            out.push(ScoredPair { a: i, b: j, score: s.mean(), fits: Some(s) });
        }
    }
    Ok(out)
}

/// LSH candidate pairs with their estimated Jaccard similarity.
pub fn lsh_scores(models: &[Xtructure], cfg: &SimilarityConfig) -> Result<Vec<ScoredPair>> {
    let sigs = models.iter().map(|x| signature(x, cfg.signature_len, cfg.seed)).collect::<Result<Vec<_>>>()?;
    lsh_index(&sigs, cfg.bands, cfg.rows)?
        .into_iter()
        .map(|(a, b)| Ok(ScoredPair { a, b, score: sigs[a].estimate_jaccard(&sigs[b])?, fits: None }))
        .collect()
}

pub fn find_similar(
    models: &[Xtructure],
    method: SimilarityMethod,
    threshold: f64,
    cfg: &SimilarityConfig,
) -> Result<Vec<ScoredPair>> {
    if models.len() < 2 {
        return Err(Error::TooFewModels);
    }
    let scored = match method {
        SimilarityMethod::AllPairs => all_pairs_scores(models, cfg)?,
        SimilarityMethod::Lsh => lsh_scores(models, cfg)?,
    };
    Ok(scored.into_iter().filter(|p| p.score >= threshold).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierScoring {
    /// Support-weighted mean of the per-branch normalized distances.
    #[default]
    WeightedSum,
    /// Normalized distance to the closest branch.
    MinBranch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierEntry {
    pub row: usize,
    pub value: String,
    pub score: f64,
    pub is_outlier: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierReport {
    pub column_id: String,
    pub entries: Vec<OutlierEntry>,
}

pub fn outlier_score(x: &Xtructure, tuple: &str, scoring: OutlierScoring) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyXtructure);
    }
    let len = tuple.chars().count();
    let dists = branch_distances(tuple, x, &x.scoring());
    Ok(match scoring {
        OutlierScoring::WeightedSum => {
            let total = x.total_support() as f64;
            x.branches()
                .iter()
                .zip(dists)
                .map(|(b, d)| b.support() as f64 / total * normalize(d, len))
                .sum::<f64>()
                .min(1.0)
        }
        OutlierScoring::MinBranch => normalize(dists.into_iter().fold(f64::INFINITY, f64::min), len),
    })
}

pub fn detect_outliers<S: AsRef<str>>(
    column_id: &str,
    x: &Xtructure,
    tuples: &[(usize, S)],
    threshold: f64,
    scoring: OutlierScoring,
) -> Result<OutlierReport> {
    if x.is_empty() {
        return Err(Error::EmptyXtructure);
    }
    let entries = tuples
        .iter()
        .map(|(row, v)| {
            let score = outlier_score(x, v.as_ref(), scoring)?;
            Ok(OutlierEntry { row: *row, value: v.as_ref().to_string(), score, is_outlier: score > threshold })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutlierReport { column_id: column_id.to_string(), entries })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Every distinct flag set reachable by a threshold `t >= 0` under the rule
/// `score > t`, from strictest to loosest. Each point reports the largest
/// such threshold.
pub fn pr_curve(scores: &[f64], truth: &[bool]) -> Vec<PrPoint> {
    assert_eq!(scores.len(), truth.len());
    let positives = truth.iter().filter(|&&t| t).count();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut flagged) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let level = scores[order[i]];
        while i < order.len() && scores[order[i]] == level {
            tp += truth[order[i]] as usize;
            flagged += 1;
            i += 1;
        }
        let threshold = if i < order.len() { scores[order[i]] } else { 0.0 };
        if level <= threshold {
            break;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / flagged as f64,
            recall: if positives == 0 { 0.0 } else { tp as f64 / positives as f64 },
        });
    }
    points
}

/// Step-wise area under the PR curve.
pub fn average_precision(scores: &[f64], truth: &[bool]) -> f64 {
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for p in pr_curve(scores, truth) {
        area += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    area
}
