//! Sampling-based similarity between two xtructures, and between an
//! xtructure and a finite regex.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::learner::sample_std;
use crate::model::Xtructure;
use crate::regex::{regex_match, xeger_sample, FiniteRegex};
use crate::score::xtructure_distance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonConfig {
    pub confidence: f64,
    /// Target half-width of the confidence interval on the mean fit.
    pub precision: f64,
    pub group_size: usize,
    pub max_draws: usize,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig { confidence: 0.95, precision: 0.05, group_size: 30, max_draws: 10_000 }
    }
}

impl ComparisonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidParameter(format!("confidence {} not in (0,1)", self.confidence)));
        }
        if !(self.precision > 0.0) {
            return Err(Error::InvalidParameter(format!("precision {} must be positive", self.precision)));
        }
        if self.group_size < 2 || self.max_draws < 2 * self.group_size {
            return Err(Error::InvalidParameter("need group_size >= 2 and room for two groups".into()));
        }
        Ok(())
    }

    /// Two-sided normal quantile for the configured confidence.
    pub fn z(&self) -> f64 {
        Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - (1.0 - self.confidence) / 2.0)
    }

    /// Draws for a Bernoulli proportion at worst-case variance 1/4.
    pub fn bernoulli_draws(&self) -> usize {
        (self.z() / (2.0 * self.precision)).powi(2).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityPair {
    pub fit_a_in_b: f64,
    pub fit_b_in_a: f64,
    pub ci_halfwidth: f64,
}

impl SimilarityPair {
    pub fn mean(&self) -> f64 {
        (self.fit_a_in_b + self.fit_b_in_a) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci_halfwidth: f64,
    pub draws: usize,
}

/// Draws in groups until the CLT interval on the group means is narrow
/// enough or the draw cap is hit.
pub fn estimate_mean<F: FnMut() -> f64>(mut draw: F, cfg: &ComparisonConfig) -> Estimate {
    let z = cfg.z();
    let mut sum = 0.0;
    let mut draws = 0;
    let mut group_means = Vec::new();
    loop {
        let mut group = 0.0;
        for _ in 0..cfg.group_size {
            group += draw();
        }
        sum += group;
        draws += cfg.group_size;
        group_means.push(group / cfg.group_size as f64);
        if group_means.len() < 2 {
            continue;
        }
        let std = sample_std(&group_means).unwrap_or(0.0);
        let half = z * std / (group_means.len() as f64).sqrt();
        if half <= cfg.precision || draws + cfg.group_size > cfg.max_draws {
            return Estimate { mean: sum / draws as f64, ci_halfwidth: half, draws };
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Mean similarity of tuples generated from `from` when scored against `into`.
pub fn directional_fit(from: &Xtructure, into: &Xtructure, cfg: &ComparisonConfig, seed: u64) -> Result<Estimate> {
    if from.is_empty() || into.is_empty() {
        return Err(Error::EmptyXtructure);
    }
    cfg.validate()?;
    let mut rng = stream(seed, 0);
    let scoring = into.scoring();
    Ok(estimate_mean(
        || {
            let t = from.generate_tuple(&mut rng).expect("non-empty model");
            xtructure_distance(&t, into, &scoring).expect("non-empty model").similarity()
        },
        cfg,
    ))
}

pub fn compare_xtructures(a: &Xtructure, b: &Xtructure, cfg: &ComparisonConfig, seed: u64) -> Result<SimilarityPair> {
    let ab = directional_fit(a, b, cfg, seed)?;
    let ba = directional_fit(b, a, cfg, seed.wrapping_add(1))?;
    Ok(SimilarityPair { fit_a_in_b: ab.mean, fit_b_in_a: ba.mean, ci_halfwidth: ab.ci_halfwidth.max(ba.ci_halfwidth) })
}

/// `fit_a_in_b` is the share of model-generated tuples the regex accepts;
/// `fit_b_in_a` is the mean similarity of regex samples scored by the model.
pub fn compare_with_regex(x: &Xtructure, r: &FiniteRegex, cfg: &ComparisonConfig, seed: u64) -> Result<SimilarityPair> {
    if x.is_empty() {
        return Err(Error::EmptyXtructure);
    }
    cfg.validate()?;
    let n = cfg.bernoulli_draws();
    let mut rng = stream(seed, 0);
    let mut hits = 0usize;
    for _ in 0..n {
        if regex_match(r, &x.generate_tuple(&mut rng)?) {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let bernoulli_half = cfg.z() * (p * (1.0 - p) / n as f64).sqrt();

    let mut rng = stream(seed, 1);
    let scoring = x.scoring();
    let rx = estimate_mean(
        || {
            let t = xeger_sample(r, &mut rng);
            xtructure_distance(&t, x, &scoring).expect("non-empty model").similarity()
        },
        cfg,
    );
    Ok(SimilarityPair { fit_a_in_b: p, fit_b_in_a: rx.mean, ci_halfwidth: bernoulli_half.max(rx.ci_halfwidth) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::learn_column;
    use crate::model::Hyperparameters;
    use crate::regex::parse_regex;
    use crate::synth::{synth_generate, SynthKind};

    fn learn(values: &[String]) -> Xtructure {
        learn_column(values, &Hyperparameters::default(), false).unwrap()
    }

    fn synth(kind: SynthKind, n: usize, seed: u64) -> Xtructure {
        learn(&synth_generate(kind, n, 0.0, seed).unwrap().values)
    }

    #[test]
    fn bernoulli_sample_size() {
        assert_eq!(ComparisonConfig::default().bernoulli_draws(), 385);
        assert!((ComparisonConfig::default().z() - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn estimate_stops_early_on_constant_draws() {
        let e = estimate_mean(|| 1.0, &ComparisonConfig::default());
        assert_eq!(e.draws, 60);
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.ci_halfwidth, 0.0);
    }

    #[test]
    fn estimate_respects_cap() {
        let cfg = ComparisonConfig { precision: 1e-9, ..Default::default() };
        let mut flip = false;
        let e = estimate_mean(
            || {
                flip = !flip;
                if flip {
                    0.0
                } else {
                    1.0
                }
            },
            &cfg,
        );
        assert!(e.draws <= cfg.max_draws);
    }

    #[test]
    fn self_comparison_is_near_one() {
        for kind in [SynthKind::Zip, SynthKind::DateYmd, SynthKind::MixedNaId] {
            let x = synth(kind, 300, 5);
            let s = compare_xtructures(&x, &x, &ComparisonConfig::default(), 9).unwrap();
            assert!(s.fit_a_in_b >= 0.99 && s.fit_b_in_a >= 0.99, "{kind}: {s:?}");
        }
    }

    #[test]
    fn zip_versus_ten_digit_ids() {
        // every generated tuple has a fixed length, so the exact mean distance
        // is a length-penalty computation
        let zips = learn(&["02139".into(), "12345".into(), "90210".into()]);
        let ids = learn(&["1234567890".into(), "0987654321".into(), "5555555555".into()]);
        let s = compare_xtructures(&zips, &ids, &ComparisonConfig::default(), 1).unwrap();
        assert!(s.fit_a_in_b < 0.6 && s.fit_b_in_a < 0.6, "{s:?}");
    }

    #[test]
    fn disjoint_values_same_shape() {
        let col = synth_generate(SynthKind::ChemblId, 400, 0.0, 11).unwrap().values;
        let (a, b) = col.split_at(200);
        let s = compare_xtructures(&learn(a), &learn(b), &ComparisonConfig::default(), 2).unwrap();
        assert!(s.mean() >= 0.8, "{s:?}");
    }

    #[test]
    fn regex_learned_from_its_own_samples() {
        let r = parse_regex(r"\d{5}").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let values: Vec<String> = (0..500).map(|_| xeger_sample(&r, &mut rng)).collect();
        let s = compare_with_regex(&learn(&values), &r, &ComparisonConfig::default(), 3).unwrap();
        assert!(s.fit_a_in_b >= 0.95, "{s:?}");
    }

    #[test]
    fn exact_regex_brittleness() {
        let r = parse_regex("ABCD").unwrap();
        let x = learn(&["ABCE".into()]);
        let s = compare_with_regex(&x, &r, &ComparisonConfig::default(), 3).unwrap();
        assert_eq!(s.fit_a_in_b, 0.0);
        // one literal mismatch out of four characters
        assert!((s.fit_b_in_a - 0.95).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn empty_model_rejected() {
        let x = Xtructure::new(Hyperparameters::default()).unwrap();
        let r = parse_regex("a").unwrap();
        assert!(matches!(compare_with_regex(&x, &r, &ComparisonConfig::default(), 0), Err(Error::EmptyXtructure)));
        assert!(matches!(compare_xtructures(&x, &x, &ComparisonConfig::default(), 0), Err(Error::EmptyXtructure)));
    }
}
