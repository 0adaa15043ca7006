//! Per-position character histograms and their compressed form.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::charclass::CharClass;
use crate::error::{Error, Result};

/// A class whose share of a layer exceeds this is tested on its own bins.
pub const MAJORITY_CUTOFF: f64 = 0.95;

/// Minimum expected count per bin for the chi-squared test to be trusted.
const MIN_EXPECTED_PER_BIN: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionParams {
    pub capture_threshold: f64,
    pub chi_sq_p: f64,
}

impl Default for CompressionParams {
    fn default() -> Self {
        CompressionParams { capture_threshold: 0.85, chi_sq_p: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepKind {
    Class,
    OrList,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerRepresentation {
    Class(CharClass),
    /// Characters in decreasing order of observed frequency.
    OrList(Vec<u8>),
    Literal(u8),
}

impl LayerRepresentation {
    pub fn kind(&self) -> RepKind {
        match self {
            LayerRepresentation::Class(_) => RepKind::Class,
            LayerRepresentation::OrList(_) => RepKind::OrList,
            LayerRepresentation::Literal(_) => RepKind::Literal,
        }
    }

    pub fn is_class(&self) -> bool {
        matches!(self, LayerRepresentation::Class(_))
    }

    pub fn render(&self, out: &mut String) {
        match self {
            LayerRepresentation::Class(c) => out.push_str(c.escape()),
            LayerRepresentation::Literal(b) => push_escaped(out, *b),
            LayerRepresentation::OrList(chars) => {
                out.push('(');
                for (i, b) in chars.iter().enumerate() {
                    if i > 0 {
                        out.push('|');
                    }
                    push_escaped(out, *b);
                }
                out.push(')');
            }
        }
    }
}

pub(crate) fn push_escaped(out: &mut String, b: u8) {
    if matches!(b, b'|' | b'\\' | b'(' | b')') {
        out.push('\\');
    }
    out.push(b as char);
}

/// What scoring needs to know about a layer, cached after each update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSummary {
    pub majority: CharClass,
    pub rep: LayerRepresentation,
}

#[derive(Clone)]
pub struct SymbolLayer {
    counts: [u64; 128],
    total: u64,
    summary: Option<LayerSummary>,
}

impl Default for SymbolLayer {
    fn default() -> Self {
        SymbolLayer { counts: [0; 128], total: 0, summary: None }
    }
}

impl std::fmt::Debug for SymbolLayer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let counts: Vec<(char, u64)> = self.observed().map(|(b, n)| (b as char, n)).collect();
        f.debug_struct("SymbolLayer").field("counts", &counts).field("total", &self.total).finish()
    }
}

impl PartialEq for SymbolLayer {
    fn eq(&self, other: &Self) -> bool {
        self.counts == other.counts
    }
}

impl SymbolLayer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I: IntoIterator<Item = (u8, u64)>>(counts: I) -> Result<Self> {
        let mut layer = SymbolLayer::new();
        for (b, n) in counts {
            if !b.is_ascii() {
                return Err(Error::NonAsciiInput(b as char));
            }
            layer.counts[b as usize] += n;
            layer.total += n;
        }
        Ok(layer)
    }

    pub fn fit_char(&mut self, c: char) -> Result<()> {
        if !c.is_ascii() {
            return Err(Error::NonAsciiInput(c));
        }
        self.fit_byte(c as u8);
        Ok(())
    }

    pub(crate) fn fit_byte(&mut self, b: u8) {
        self.counts[b as usize] += 1;
        self.total += 1;
        self.summary = None;
    }

    pub(crate) fn add(&mut self, other: &SymbolLayer) {
        for (mine, theirs) in self.counts.iter_mut().zip(other.counts.iter()) {
            *mine += theirs;
        }
        self.total += other.total;
        self.summary = None;
    }

    pub fn count(&self, b: u8) -> u64 {
        if b.is_ascii() {
            self.counts[b as usize]
        } else {
            0
        }
    }

    pub fn contains(&self, c: char) -> bool {
        c.is_ascii() && self.counts[c as usize] > 0
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Observed characters with their counts, in byte order.
    pub fn observed(&self) -> impl Iterator<Item = (u8, u64)> + '_ {
        self.counts.iter().enumerate().filter(|(_, n)| **n > 0).map(|(b, n)| (b as u8, *n))
    }

    fn class_counts(&self) -> [u64; 5] {
        let mut per_class = [0u64; 5];
        for (b, n) in self.observed() {
            per_class[CharClass::of_byte(b).index()] += n;
        }
        per_class
    }

    /// Class holding the largest share of observations; ties go to the
    /// class listed first in `CharClass::ALL`.
    pub fn majority_class(&self) -> Result<CharClass> {
        if self.total == 0 {
            return Err(Error::EmptyLayer);
        }
        let per_class = self.class_counts();
        let mut best = CharClass::Digit;
        for class in CharClass::ALL {
            if per_class[class.index()] > per_class[best.index()] {
                best = class;
            }
        }
        Ok(best)
    }

    pub fn summary(&self, params: &CompressionParams) -> Result<LayerSummary> {
        match &self.summary {
            Some(s) => Ok(s.clone()),
            None => self.compute_summary(params),
        }
    }

    fn compute_summary(&self, params: &CompressionParams) -> Result<LayerSummary> {
        Ok(LayerSummary { majority: self.majority_class()?, rep: compress_layer(self, params)? })
    }

    pub(crate) fn cached_summary(&self) -> Option<&LayerSummary> {
        self.summary.as_ref()
    }

    pub(crate) fn refresh(&mut self, params: &CompressionParams) {
        if self.summary.is_none() && self.total > 0 {
            self.summary = self.compute_summary(params).ok();
        }
    }

    /// Draw a character of the majority class, proportionally to the
    /// observed counts. Minority-class characters are never drawn.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Option<u8> {
        let class = self.majority_class().ok()?;
        let total = self.class_counts()[class.index()];
        let mut pick = rng.gen_range(0..total);
        for (b, n) in self.observed().filter(|&(b, _)| CharClass::of_byte(b) == class) {
            if pick < n {
                return Some(b);
            }
            pick -= n;
        }
        unreachable!("pick is below the class total")
    }
}

/// p-value of a chi-squared goodness-of-fit test against the uniform
/// distribution over `histogram`'s bins. `None` when the test is not valid
/// (fewer than two bins or expected counts under five).
pub fn uniform_chi_squared_pvalue(histogram: &[u64]) -> Option<f64> {
    let bins = histogram.len();
    if bins < 2 {
        return None;
    }
    let n: u64 = histogram.iter().sum();
    if n < MIN_EXPECTED_PER_BIN * bins as u64 {
        return None;
    }
    let expected = n as f64 / bins as f64;
    let stat: f64 = histogram
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((bins - 1) as f64).ok()?;
    Some(dist.sf(stat))
}

pub fn compress_layer(layer: &SymbolLayer, params: &CompressionParams) -> Result<LayerRepresentation> {
    if layer.total == 0 {
        return Err(Error::EmptyLayer);
    }
    let per_class = layer.class_counts();
    let max_class = layer.majority_class()?;
    let max_proportion = per_class[max_class.index()] as f64 / layer.total as f64;

    let histogram: Vec<u64> = if max_proportion > MAJORITY_CUTOFF {
        max_class.members().iter().map(|&b| layer.counts[b as usize]).collect()
    } else {
        CharClass::ALL
            .iter()
            .filter(|c| per_class[c.index()] > 0)
            .flat_map(|c| c.members().iter())
            .map(|&b| layer.counts[b as usize])
            .collect()
    };

    if let Some(p) = uniform_chi_squared_pvalue(&histogram) {
        if p > params.chi_sq_p {
            return Ok(LayerRepresentation::Class(max_class));
        }
    }

    let mut by_freq: Vec<(u8, u64)> = layer.observed().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let target = params.capture_threshold * layer.total as f64;
    let mut captured = 0u64;
    let mut chars = Vec::new();
    for (b, n) in by_freq {
        if captured as f64 >= target {
            break;
        }
        chars.push(b);
        captured += n;
    }
    if chars.len() == 1 {
        Ok(LayerRepresentation::Literal(chars[0]))
    } else {
        Ok(LayerRepresentation::OrList(chars))
    }
}
