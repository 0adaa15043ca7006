//! Positional triples, minhash signatures and LSH banding.

use std::collections::{BTreeSet, HashMap};

use crate::charclass::CharClass;
use crate::error::{Error, Result};
use crate::layer::LayerRepresentation;
use crate::model::{fnv1a, mix, splitmix64, Xtructure};

pub const DEFAULT_SIGNATURE_LEN: usize = 128;
pub const DEFAULT_BANDS: usize = 32;
pub const DEFAULT_ROWS: usize = 4;
const MIN_SIGNATURE_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TripleSymbol {
    Char(u8),
    Class(CharClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PositionalTriple {
    pub symbol: TripleSymbol,
    /// Token index within the branch.
    pub last_hinge: usize,
    /// Position within the token.
    pub index: usize,
}

impl PositionalTriple {
    pub fn new(symbol: TripleSymbol, last_hinge: usize, index: usize) -> Self {
        PositionalTriple { symbol, last_hinge, index }
    }

    fn encode(&self) -> [u8; 18] {
        let mut out = [0u8; 18];
        match self.symbol {
            TripleSymbol::Char(c) => out[1] = c,
            TripleSymbol::Class(k) => {
                out[0] = 1;
                out[1] = k.tag();
            }
        }
        out[2..10].copy_from_slice(&(self.last_hinge as u64).to_le_bytes());
        out[10..18].copy_from_slice(&(self.index as u64).to_le_bytes());
        out
    }
}

/// Triples of the compressed representation: a CLASS layer contributes one
/// character triple per class member, other layers one per listed character.
pub fn triple_set(x: &Xtructure) -> Result<BTreeSet<PositionalTriple>> {
    if x.is_empty() {
        return Err(Error::EmptyXtructure);
    }
    let params = x.params().compression();
    let mut set = BTreeSet::new();
    for branch in x.branches() {
        for (h, token) in branch.tokens().iter().enumerate() {
            for (i, summary) in token.summaries(&params)?.into_iter().enumerate() {
                match summary.rep {
                    LayerRepresentation::Class(k) => {
                        set.extend(k.members().iter().map(|&c| PositionalTriple::new(TripleSymbol::Char(c), h, i)));
                    }
                    LayerRepresentation::OrList(chars) => {
                        set.extend(chars.into_iter().map(|c| PositionalTriple::new(TripleSymbol::Char(c), h, i)));
                    }
                    LayerRepresentation::Literal(c) => {
                        set.insert(PositionalTriple::new(TripleSymbol::Char(c), h, i));
                    }
                }
            }
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinhashSignature {
    values: Vec<u64>,
}

impl MinhashSignature {
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Fraction of equal slots.
    pub fn estimate_jaccard(&self, other: &MinhashSignature) -> Result<f64> {
        if self.k() != other.k() {
            return Err(Error::SignatureLengthMismatch(self.k(), other.k()));
        }
        let same = self.values.iter().zip(&other.values).filter(|(a, b)| a == b).count();
        Ok(same as f64 / self.k() as f64)
    }
}

pub fn minhash<'a, I>(triples: I, k: usize, seed: u64) -> Result<MinhashSignature>
where
    I: IntoIterator<Item = &'a PositionalTriple>,
{
    if k < MIN_SIGNATURE_LEN {
        return Err(Error::SignatureTooShort(k));
    }
    let keys: Vec<u64> = (0..k as u64).map(|j| mix(seed, j)).collect();
    let mut values = vec![u64::MAX; k];
    let mut any = false;
    for t in triples {
        any = true;
        let base = fnv1a(&t.encode());
        for (v, key) in values.iter_mut().zip(&keys) {
            *v = (*v).min(splitmix64(base ^ key));
        }
    }
    if !any {
        return Err(Error::EmptyTripleSet);
    }
    Ok(MinhashSignature { values })
}

pub fn signature(x: &Xtructure, k: usize, seed: u64) -> Result<MinhashSignature> {
    minhash(&triple_set(x)?, k, seed)
}

/// Candidate pairs `(i, j)`, `i < j`, by input position: items that agree on
/// every row of at least one band.
pub fn lsh_index(signatures: &[MinhashSignature], bands: usize, rows: usize) -> Result<BTreeSet<(usize, usize)>> {
    for s in signatures {
        if bands == 0 || rows == 0 || bands * rows != s.k() {
            return Err(Error::BandShapeMismatch { bands, rows, k: s.k() });
        }
    }
    let mut pairs = BTreeSet::new();
    for band in 0..bands {
        let mut buckets: HashMap<&[u64], Vec<usize>> = HashMap::new();
        for (i, s) in signatures.iter().enumerate() {
            buckets.entry(&s.values[band * rows..(band + 1) * rows]).or_default().push(i);
        }
        for members in buckets.values() {
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    pairs.insert((i, j));
                }
            }
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::learn_column;
    use crate::model::Hyperparameters;
    use proptest::prelude::*;

    fn chars(h: usize, n: usize) -> BTreeSet<PositionalTriple> {
        (0..n).map(|i| PositionalTriple::new(TripleSymbol::Char(b'a' + (i % 26) as u8), h, i)).collect()
    }

    /// Two sets sharing `shared` of `total` distinct triples.
    fn overlapping(shared: usize, total: usize) -> (BTreeSet<PositionalTriple>, BTreeSet<PositionalTriple>) {
        let all = chars(0, total);
        let only = (total - shared) / 2;
        let a = all.iter().take(shared + only).copied().collect();
        let b = all.iter().take(shared).chain(all.iter().skip(shared + only)).copied().collect();
        (a, b)
    }

    fn exact_jaccard(a: &BTreeSet<PositionalTriple>, b: &BTreeSet<PositionalTriple>) -> f64 {
        a.intersection(b).count() as f64 / a.union(b).count() as f64
    }

    #[test]
    fn semicolon_example() {
        let x = learn_column(["AB;CD"], &Hyperparameters::default(), false).unwrap();
        let got = triple_set(&x).unwrap();
        let c = |ch: u8, h, i| PositionalTriple::new(TripleSymbol::Char(ch), h, i);
        let want: BTreeSet<_> = [c(b'A', 0, 0), c(b'B', 0, 1), c(b'C', 1, 0), c(b'D', 1, 1)].into();
        assert_eq!(got, want);
    }

    #[test]
    fn class_layers_expand_to_members() {
        use crate::layer::SymbolLayer;
        use crate::model::{Branch, TokenStructure};
        let uniform = || SymbolLayer::from_counts((b'0'..=b'9').map(|d| (d, 50))).unwrap();
        let token = TokenStructure::from_layers((0..5).map(|_| uniform()).collect());
        let branch = Branch::from_parts(vec![token], vec![], 500, vec!["02139".into()]);
        let x = Xtructure::from_parts(Hyperparameters::default(), 0.1, vec![branch]).unwrap();
        assert_eq!(x.serialize().unwrap(), r"\d\d\d\d\d");
        let want: BTreeSet<_> = (0..5)
            .flat_map(|i| (b'0'..=b'9').map(move |d| PositionalTriple::new(TripleSymbol::Char(d), 0, i)))
            .collect();
        assert_eq!(triple_set(&x).unwrap(), want);
        // nine digits at one position: chi-squared rejects, the 0.85 capture keeps eight
        let mut layers: Vec<SymbolLayer> = (0..5).map(|_| uniform()).collect();
        layers[2] = SymbolLayer::from_counts((b'0'..=b'8').map(|d| (d, 50))).unwrap();
        let y = Xtructure::from_parts(
            Hyperparameters::default(),
            0.1,
            vec![Branch::from_parts(vec![TokenStructure::from_layers(layers)], vec![], 450, vec![])],
        )
        .unwrap();
        let (a, b) = (triple_set(&x).unwrap(), triple_set(&y).unwrap());
        assert_eq!(a.intersection(&b).count(), 48);
        assert_eq!(a.union(&b).count(), 50);
    }

    #[test]
    fn errors() {
        let x = Xtructure::new(Hyperparameters::default()).unwrap();
        assert!(matches!(triple_set(&x), Err(Error::EmptyXtructure)));
        assert!(matches!(minhash(&BTreeSet::new(), 32, 0), Err(Error::EmptyTripleSet)));
        assert!(matches!(minhash(&chars(0, 3), 8, 0), Err(Error::SignatureTooShort(8))));
        let s = minhash(&chars(0, 3), 32, 0).unwrap();
        assert!(matches!(lsh_index(std::slice::from_ref(&s), 5, 5), Err(Error::BandShapeMismatch { .. })));
        let t = minhash(&chars(0, 3), 16, 0).unwrap();
        assert!(matches!(s.estimate_jaccard(&t), Err(Error::SignatureLengthMismatch(32, 16))));
    }

    #[test]
    fn half_overlap_estimate() {
        let (a, b) = overlapping(40, 120);
        assert!((exact_jaccard(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        let (a, b) = overlapping(60, 120);
        assert_eq!(exact_jaccard(&a, &b), 0.5);
        let est = minhash(&a, 128, 7).unwrap().estimate_jaccard(&minhash(&b, 128, 7).unwrap()).unwrap();
        // 3 sigma of a binomial(128, 0.5) proportion
        assert!((est - 0.5).abs() <= 3.0 * (0.25f64 / 128.0).sqrt(), "{est}");
    }

    #[test]
    fn unbiased_over_seed_families() {
        let (a, b) = overlapping(30, 90);
        let truth = exact_jaccard(&a, &b);
        let mean: f64 = (0..100)
            .map(|s| minhash(&a, 128, s).unwrap().estimate_jaccard(&minhash(&b, 128, s).unwrap()).unwrap())
            .sum::<f64>()
            / 100.0;
        assert!((mean - truth).abs() <= 0.02, "{mean} vs {truth}");
    }

    #[test]
    fn disjoint_sets_estimate_zero() {
        let a = chars(0, 50);
        let b = chars(1, 50);
        let est = minhash(&a, 128, 3).unwrap().estimate_jaccard(&minhash(&b, 128, 3).unwrap()).unwrap();
        assert!(est <= 0.02);
    }

    fn brute_force_banding(sigs: &[MinhashSignature], bands: usize, rows: usize) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for i in 0..sigs.len() {
            for j in i + 1..sigs.len() {
                let hit = (0..bands)
                    .any(|band| (band * rows..(band + 1) * rows).all(|r| sigs[i].values()[r] == sigs[j].values()[r]));
                if hit {
                    out.insert((i, j));
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn identical_sets_identical_signatures(n in 1usize..40, seed in any::<u64>()) {
            let s = chars(2, n);
            prop_assert_eq!(minhash(&s, 64, seed).unwrap(), minhash(&s.clone(), 64, seed).unwrap());
        }

        #[test]
        fn banding_matches_brute_force(
            sets in prop::collection::vec(prop::collection::btree_set(0usize..12, 1..8), 2..12),
            seed in any::<u64>(),
        ) {
            let sigs: Vec<_> = sets
                .iter()
                .map(|s| {
                    let t: BTreeSet<_> = s.iter().map(|&i| PositionalTriple::new(TripleSymbol::Char(b'x'), 0, i)).collect();
                    minhash(&t, 32, seed).unwrap()
                })
                .collect();
            let mut last = usize::MAX;
            for (bands, rows) in [(32, 1), (16, 2), (8, 4), (4, 8), (2, 16), (1, 32)] {
                let got = lsh_index(&sigs, bands, rows).unwrap();
                prop_assert_eq!(&got, &brute_force_banding(&sigs, bands, rows));
                prop_assert!(got.len() <= last);
                last = got.len();
                for i in 0..sigs.len() {
                    for j in i + 1..sigs.len() {
                        if sigs[i] == sigs[j] {
                            prop_assert!(got.contains(&(i, j)));
                        }
                    }
                }
            }
        }
    }
}
