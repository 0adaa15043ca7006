//! Token structures, branches and the `Xtructure` itself.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::layer::{push_escaped, CompressionParams, LayerSummary, SymbolLayer};

pub const DEFAULT_DELIMITERS: &str = "-/#.;:,_ @";

/// Set of ASCII delimiter characters.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct DelimiterSet([bool; 128]);

impl DelimiterSet {
    pub fn new(chars: &str) -> Result<Self> {
        let mut set = [false; 128];
        for c in chars.chars() {
            if !c.is_ascii() {
                return Err(Error::NonAsciiInput(c));
            }
            set[c as usize] = true;
        }
        Ok(DelimiterSet(set))
    }

    pub fn contains(&self, c: char) -> bool {
        c.is_ascii() && self.0[c as usize]
    }

    pub fn chars(&self) -> String {
        (0u8..128).filter(|&b| self.0[b as usize]).map(char::from).collect()
    }
}

impl Default for DelimiterSet {
    fn default() -> Self {
        DelimiterSet::new(DEFAULT_DELIMITERS).expect("ascii")
    }
}

impl fmt::Debug for DelimiterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DelimiterSet({:?})", self.chars())
    }
}

/// Split `tuple` on delimiter characters. Adjacent delimiters produce empty
/// tokens so that tokens and delimiters always interleave back to the input.
pub fn tokenize<'a>(tuple: &'a str, delimiters: &DelimiterSet) -> Result<(Vec<&'a str>, Vec<char>)> {
    if tuple.is_empty() {
        return Err(Error::EmptyTuple);
    }
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
    Ok((tokens, delims))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub max_branches: usize,
    /// Initial branching threshold (epsilon).
    pub branching_threshold: f64,
    pub capture_threshold: f64,
    pub alpha: f64,
    pub chi_sq_p: f64,
    pub delimiters: DelimiterSet,
    pub sample_cap: usize,
    pub rng_seed: u64,
    /// Compare normalized (per character) distances against the threshold.
    pub normalize: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            max_branches: 3,
            branching_threshold: 0.1,
            capture_threshold: 0.85,
            alpha: 0.2,
            chi_sq_p: 0.05,
            delimiters: DelimiterSet::default(),
            sample_cap: 64,
            rng_seed: 0,
            normalize: true,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.max_branches == 0 {
            return bad("max_branches must be positive");
        }
        if !(self.branching_threshold >= 0.0) {
            return bad("branching_threshold must be non-negative");
        }
        if !(self.capture_threshold > 0.0 && self.capture_threshold <= 1.0) {
            return bad("capture_threshold must lie in (0, 1]");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.chi_sq_p > 0.0 && self.chi_sq_p < 1.0) {
            return bad("chi_sq_p must lie in (0, 1)");
        }
        if self.sample_cap == 0 {
            return bad("sample_cap must be positive");
        }
        Ok(())
    }

    pub fn compression(&self) -> CompressionParams {
        CompressionParams { capture_threshold: self.capture_threshold, chi_sq_p: self.chi_sq_p }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenStructure {
    pub(crate) layers: Vec<SymbolLayer>,
}

impl TokenStructure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_layers(layers: Vec<SymbolLayer>) -> Self {
        TokenStructure { layers }
    }

    pub fn layers(&self) -> &[SymbolLayer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Fit an ASCII token position by position, growing layers at the tail.
    pub(crate) fn fit(&mut self, token: &[u8]) {
        if token.len() > self.layers.len() {
            self.layers.resize_with(token.len(), SymbolLayer::new);
        }
        for (layer, &b) in self.layers.iter_mut().zip(token) {
            layer.fit_byte(b);
        }
    }

    pub(crate) fn add(&mut self, other: &TokenStructure) {
        if other.layers.len() > self.layers.len() {
            self.layers.resize_with(other.layers.len(), SymbolLayer::new);
        }
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            mine.add(theirs);
        }
    }

    pub(crate) fn refresh(&mut self, params: &CompressionParams) {
        for layer in &mut self.layers {
            layer.refresh(params);
        }
    }

    pub fn summaries(&self, params: &CompressionParams) -> Result<Vec<LayerSummary>> {
        self.layers.iter().map(|l| l.summary(params)).collect()
    }

    pub fn render(&self, params: &CompressionParams, out: &mut String) -> Result<()> {
        for layer in &self.layers {
            match layer.cached_summary() {
                Some(s) => s.rep.render(out),
                None => layer.summary(params)?.rep.render(out),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub(crate) tokens: Vec<TokenStructure>,
    pub(crate) delimiters: Vec<u8>,
    pub(crate) support: u64,
    pub(crate) sample_words: Vec<String>,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

impl Branch {
    pub(crate) fn empty() -> Self {
        Branch { tokens: Vec::new(), delimiters: Vec::new(), support: 0, sample_words: Vec::new() }
    }

    pub fn from_parts(
        tokens: Vec<TokenStructure>,
        delimiters: Vec<u8>,
        support: u64,
        sample_words: Vec<String>,
    ) -> Self {
        Branch { tokens, delimiters, support, sample_words }
    }

    pub fn tokens(&self) -> &[TokenStructure] {
        &self.tokens
    }

    pub fn delimiters(&self) -> &[u8] {
        &self.delimiters
    }

    pub fn support(&self) -> u64 {
        self.support
    }

    pub fn sample_words(&self) -> &[String] {
        &self.sample_words
    }

    /// Fit an ASCII tuple. Tokens beyond the branch's current shape are
    /// appended along with their delimiters; existing delimiters are kept.
    pub(crate) fn fit(&mut self, tuple: &str, params: &Hyperparameters) -> Result<()> {
        let (tokens, delims) = tokenize(tuple, &params.delimiters)?;
        for (i, tok) in tokens.iter().enumerate() {
            if i == self.tokens.len() {
                self.tokens.push(TokenStructure::new());
            }
            self.tokens[i].fit(tok.as_bytes());
        }
        for (i, d) in delims.iter().enumerate() {
            if i == self.delimiters.len() {
                self.delimiters.push(*d as u8);
            }
        }
        self.support += 1;
        self.remember(tuple, params);
        let compression = params.compression();
        for tok in &mut self.tokens {
            tok.refresh(&compression);
        }
        Ok(())
    }

    /// Reservoir-sample the tuple into `sample_words`. Replacement slots come
    /// from a hash of (seed, support, tuple) so learning stays reproducible.
    fn remember(&mut self, tuple: &str, params: &Hyperparameters) {
        if self.sample_words.len() < params.sample_cap {
            self.sample_words.push(tuple.to_string());
            return;
        }
        let slot = mix(params.rng_seed ^ self.support, fnv1a(tuple.as_bytes())) % self.support;
        if (slot as usize) < params.sample_cap {
            self.sample_words[slot as usize] = tuple.to_string();
        }
    }

    /// Add another branch's histograms into this one. Equivalent to
    /// re-fitting every word the other branch has learned.
    pub(crate) fn absorb(&mut self, other: &Branch, params: &Hyperparameters) {
        for (i, tok) in other.tokens.iter().enumerate() {
            if i == self.tokens.len() {
                self.tokens.push(TokenStructure::new());
            }
            self.tokens[i].add(tok);
        }
        if other.delimiters.len() > self.delimiters.len() {
            self.delimiters.extend_from_slice(&other.delimiters[self.delimiters.len()..]);
        }
        self.sample_words =
            merge_samples(&self.sample_words, self.support, &other.sample_words, other.support, params.sample_cap);
        self.support += other.support;
        let compression = params.compression();
        for tok in &mut self.tokens {
            tok.refresh(&compression);
        }
    }

    pub(crate) fn refresh(&mut self, params: &CompressionParams) {
        for tok in &mut self.tokens {
            tok.refresh(params);
        }
    }

    pub fn render(&self, params: &CompressionParams) -> Result<String> {
        let mut out = String::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            tok.render(params, &mut out)?;
            if let Some(&d) = self.delimiters.get(i) {
                push_escaped(&mut out, d);
            }
        }
        // delimiters past the last token (only possible after merges)
        for &d in self.delimiters.iter().skip(self.tokens.len()) {
            push_escaped(&mut out, d);
        }
        Ok(out)
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let mut out = String::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            for layer in &tok.layers {
                if let Some(b) = layer.sample(rng) {
                    out.push(b as char);
                }
            }
            if let Some(&d) = self.delimiters.get(i) {
                out.push(d as char);
            }
        }
        out
    }
}

/// Combine two sample lists, keeping each side's share proportional to its
/// support when the cap forces a cut.
fn merge_samples(a: &[String], a_support: u64, b: &[String], b_support: u64, cap: usize) -> Vec<String> {
    if a.len() + b.len() <= cap {
        return a.iter().chain(b).cloned().collect();
    }
    let total = (a_support + b_support).max(1) as f64;
    let mut take_a = ((cap as f64) * a_support as f64 / total).round() as usize;
    take_a = take_a.min(a.len());
    let mut take_b = (cap - take_a).min(b.len());
    if take_a + take_b < cap {
        take_a = (cap - take_b).min(a.len());
        take_b = (cap - take_a).min(b.len());
    }
    a.iter().take(take_a).chain(b.iter().take(take_b)).cloned().collect()
}

/// The learned pattern of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct Xtructure {
    pub(crate) params: Hyperparameters,
    pub(crate) branching_threshold: f64,
    pub(crate) branches: Vec<Branch>,
}

impl Xtructure {
    pub fn new(params: Hyperparameters) -> Result<Self> {
        params.validate()?;
        Ok(Xtructure { branching_threshold: params.branching_threshold, params, branches: Vec::new() })
    }

    /// Rebuild from persisted parts; refreshes cached layer summaries.
    pub fn from_parts(params: Hyperparameters, branching_threshold: f64, mut branches: Vec<Branch>) -> Result<Self> {
        params.validate()?;
        let compression = params.compression();
        for b in &mut branches {
            b.refresh(&compression);
        }
        Ok(Xtructure { params, branching_threshold, branches })
    }

    pub fn params(&self) -> &Hyperparameters {
        &self.params
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branching_threshold(&self) -> f64 {
        self.branching_threshold
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn total_support(&self) -> u64 {
        self.branches.iter().map(|b| b.support).sum()
    }

    /// Branch renderings ordered by decreasing support, then lexicographically.
    pub fn branch_patterns(&self) -> Result<Vec<(u64, String)>> {
        let compression = self.params.compression();
        let mut rendered =
            self.branches.iter().map(|b| Ok((b.support, b.render(&compression)?))).collect::<Result<Vec<_>>>()?;
        rendered.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        Ok(rendered)
    }

    /// Human-readable pattern: branches joined by `|`.
    pub fn serialize(&self) -> Result<String> {
        if self.branches.is_empty() {
            return Err(Error::EmptyXtructure);
        }
        let parts: Vec<String> = self.branch_patterns()?.into_iter().map(|(_, s)| s).collect();
        Ok(parts.join("|"))
    }

    /// Draw one tuple: a branch weighted by support, then one character per
    /// layer from that layer's observed distribution.
    pub fn generate_tuple<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<String> {
        let total = self.total_support();
        if self.branches.is_empty() || total == 0 {
            return Err(Error::EmptyXtructure);
        }
        let mut pick = rng.gen_range(0..total);
        for b in &self.branches {
            if pick < b.support {
                return Ok(b.generate(rng));
            }
            pick -= b.support;
        }
        unreachable!("pick is below total support")
    }
}

pub fn serialize(x: &Xtructure) -> Result<String> {
    x.serialize()
}

pub fn generate_tuple<R: Rng + ?Sized>(x: &Xtructure, rng: &mut R) -> Result<String> {
    x.generate_tuple(rng)
}
