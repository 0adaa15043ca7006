//! Scoring fit: how far a tuple deviates from a layer, token, branch or
//! whole `Xtructure`.

use crate::charclass::CharClass;
use crate::error::{Error, Result};
use crate::layer::{CompressionParams, LayerSummary, SymbolLayer};
use crate::model::{Branch, DelimiterSet, Hyperparameters, TokenStructure, Xtructure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    /// Cost of a same-class character the layer has never seen.
    pub alpha: f64,
    pub normalize: bool,
    pub compression: CompressionParams,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig { alpha: 0.2, normalize: true, compression: CompressionParams::default() }
    }
}

impl From<&Hyperparameters> for ScoringConfig {
    fn from(p: &Hyperparameters) -> Self {
        ScoringConfig { alpha: p.alpha, normalize: p.normalize, compression: p.compression() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitScore {
    pub raw_distance: f64,
    /// `min(1, raw / max(1, tuple_length))`
    pub normalized: f64,
}

impl FitScore {
    pub fn new(raw_distance: f64, tuple_len: usize) -> Self {
        FitScore { raw_distance, normalized: normalize(raw_distance, tuple_len) }
    }

    /// Similarity in [0, 1].
    pub fn similarity(&self) -> f64 {
        1.0 - self.normalized
    }
}

pub fn normalize(raw: f64, tuple_len: usize) -> f64 {
    (raw / tuple_len.max(1) as f64).min(1.0)
}

pub fn symbol_distance(c: char, layer: &SymbolLayer, summary: &LayerSummary, cfg: &ScoringConfig) -> f64 {
    if CharClass::of_char_lossy(c) != summary.majority {
        1.0
    } else if !summary.rep.is_class() && !layer.contains(c) {
        cfg.alpha
    } else {
        0.0
    }
}

fn layer_cost(c: char, layer: &SymbolLayer, cfg: &ScoringConfig) -> f64 {
    match layer.cached_summary() {
        Some(s) => symbol_distance(c, layer, s, cfg),
        None => match layer.summary(&cfg.compression) {
            Ok(s) => symbol_distance(c, layer, &s, cfg),
            // a layer with no observations matches nothing
            Err(_) => 1.0,
        },
    }
}

pub fn token_distance(token: &str, k: &TokenStructure, cfg: &ScoringConfig) -> f64 {
    let mut cost = 0.0;
    let mut len = 0usize;
    for (c, layer) in token.chars().zip(k.layers()) {
        cost += layer_cost(c, layer, cfg);
    }
    for _ in token.chars() {
        len += 1;
    }
    cost + len.abs_diff(k.len()) as f64
}

/// Tokenizes like [`crate::model::tokenize`] but accepts the empty string.
pub(crate) fn split<'a>(tuple: &'a str, delimiters: &DelimiterSet) -> (Vec<&'a str>, Vec<char>) {
    let mut tokens = Vec::new();
    let mut delims = Vec::new();
    let mut start = 0;
    for (i, c) in tuple.char_indices() {
        if delimiters.contains(c) {
            tokens.push(&tuple[start..i]);
            delims.push(c);
            start = i + c.len_utf8();
        }
    }
    tokens.push(&tuple[start..]);
    (tokens, delims)
}

pub(crate) fn branch_distance_split(tokens: &[&str], delims: &[char], b: &Branch, cfg: &ScoringConfig) -> f64 {
    let mut cost = 0.0;
    let structures = b.tokens();
    for (i, tok) in tokens.iter().enumerate() {
        match structures.get(i) {
            Some(k) => cost += token_distance(tok, k, cfg),
            None => cost += tok.chars().count() as f64,
        }
    }
    for k in structures.iter().skip(tokens.len()) {
        cost += k.len() as f64;
    }
    let hinges = b.delimiters();
    for i in 0..delims.len().max(hinges.len()) {
        match (delims.get(i), hinges.get(i)) {
            (Some(&d), Some(&h)) if d == h as char => {}
            _ => cost += 1.0,
        }
    }
    cost
}

pub fn branch_distance(tuple: &str, b: &Branch, delimiters: &DelimiterSet, cfg: &ScoringConfig) -> f64 {
    let (tokens, delims) = split(tuple, delimiters);
    branch_distance_split(&tokens, &delims, b, cfg)
}

/// Raw distance to each branch, in branch order.
pub fn branch_distances(tuple: &str, x: &Xtructure, cfg: &ScoringConfig) -> Vec<f64> {
    let (tokens, delims) = split(tuple, &x.params().delimiters);
    x.branches().iter().map(|b| branch_distance_split(&tokens, &delims, b, cfg)).collect()
}

pub fn xtructure_distance(tuple: &str, x: &Xtructure, cfg: &ScoringConfig) -> Result<FitScore> {
    if x.is_empty() {
        return Err(Error::EmptyXtructure);
    }
    let raw = branch_distances(tuple, x, cfg).into_iter().fold(f64::INFINITY, f64::min);
    Ok(FitScore::new(raw, tuple.chars().count()))
}

impl Xtructure {
    pub fn scoring(&self) -> ScoringConfig {
        ScoringConfig::from(self.params())
    }

    pub fn distance(&self, tuple: &str) -> Result<FitScore> {
        xtructure_distance(tuple, self, &self.scoring())
    }
}
