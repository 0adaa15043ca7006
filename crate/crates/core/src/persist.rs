//! JSON model files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layer::SymbolLayer;
use crate::model::{Branch, DelimiterSet, Hyperparameters, TokenStructure, Xtructure};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    hyperparameters: HyperparametersFile,
    /// Adaptive threshold at save time; absent means the initial one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    branching_threshold: Option<f64>,
    branches: Vec<BranchFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperparametersFile {
    max_branches: usize,
    branching_threshold: f64,
    capture_threshold: f64,
    alpha: f64,
    chi_sq_p: f64,
    delimiters: String,
    sample_cap: usize,
    rng_seed: u64,
    normalize: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchFile {
    support: u64,
    delimiters: Vec<String>,
    tokens: Vec<TokenFile>,
    sample_words: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenFile {
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    counts: BTreeMap<String, u64>,
}

fn single_ascii(s: &str, what: &str) -> Result<u8> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii() => Ok(c as u8),
        _ => Err(Error::Model(format!("{what} {s:?} is not a single ASCII character"))),
    }
}

fn to_file(x: &Xtructure) -> ModelFile {
    let p = x.params();
    ModelFile {
        version: FORMAT_VERSION,
        hyperparameters: HyperparametersFile {
            max_branches: p.max_branches,
            branching_threshold: p.branching_threshold,
            capture_threshold: p.capture_threshold,
            alpha: p.alpha,
            chi_sq_p: p.chi_sq_p,
            delimiters: p.delimiters.chars(),
            sample_cap: p.sample_cap,
            rng_seed: p.rng_seed,
            normalize: p.normalize,
        },
        branching_threshold: (x.branching_threshold() != p.branching_threshold).then_some(x.branching_threshold()),
        branches: x
            .branches()
            .iter()
            .map(|b| BranchFile {
                support: b.support(),
                delimiters: b.delimiters().iter().map(|&d| (d as char).to_string()).collect(),
                tokens: b
                    .tokens()
                    .iter()
                    .map(|t| TokenFile {
                        layers: t
                            .layers()
                            .iter()
                            .map(|l| LayerFile {
                                counts: l.observed().map(|(c, n)| ((c as char).to_string(), n)).collect(),
                            })
                            .collect(),
                    })
                    .collect(),
                sample_words: b.sample_words().to_vec(),
            })
            .collect(),
    }
}

fn from_file(f: ModelFile) -> Result<Xtructure> {
    if f.version != FORMAT_VERSION {
        return Err(Error::Model(format!("unsupported version {}", f.version)));
    }
    let h = f.hyperparameters;
    let params = Hyperparameters {
        max_branches: h.max_branches,
        branching_threshold: h.branching_threshold,
        capture_threshold: h.capture_threshold,
        alpha: h.alpha,
        chi_sq_p: h.chi_sq_p,
        delimiters: DelimiterSet::new(&h.delimiters)?,
        sample_cap: h.sample_cap,
        rng_seed: h.rng_seed,
        normalize: h.normalize,
    };
    let mut branches = Vec::with_capacity(f.branches.len());
    for b in f.branches {
        let delimiters = b.delimiters.iter().map(|d| single_ascii(d, "delimiter")).collect::<Result<Vec<_>>>()?;
        let mut tokens = Vec::with_capacity(b.tokens.len());
        for t in b.tokens {
            let mut layers = Vec::with_capacity(t.layers.len());
            for l in t.layers {
                if l.counts.is_empty() || l.counts.values().any(|&n| n == 0) {
                    return Err(Error::Model("layer counts must be non-empty and positive".into()));
                }
                let counts = l
                    .counts
                    .iter()
                    .map(|(k, &n)| Ok((single_ascii(k, "count key")?, n)))
                    .collect::<Result<Vec<_>>>()?;
                layers.push(SymbolLayer::from_counts(counts)?);
            }
            tokens.push(TokenStructure::from_layers(layers));
        }
        if let Some(w) = b.sample_words.iter().find(|w| !w.is_ascii()) {
            return Err(Error::Model(format!("sample word {w:?} is not ASCII")));
        }
        branches.push(Branch::from_parts(tokens, delimiters, b.support, b.sample_words));
    }
    let threshold = f.branching_threshold.unwrap_or(params.branching_threshold);
    Xtructure::from_parts(params, threshold, branches)
}

pub fn to_json(x: &Xtructure) -> String {
    let mut s = serde_json::to_string_pretty(&to_file(x)).expect("model serializes");
    s.push('\n');
    s
}

pub fn from_json(json: &str) -> Result<Xtructure> {
    let f: ModelFile = serde_json::from_str(json).map_err(|e| Error::Model(e.to_string()))?;
    from_file(f)
}

pub fn save_model(x: &Xtructure, path: &Path) -> Result<()> {
    fs::write(path, to_json(x)).map_err(|source| Error::WriteFailure { path: path.to_path_buf(), source })
}

pub fn load_model(path: &Path) -> Result<Xtructure> {
    let json = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    from_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::learn_column;
    use crate::minhash::triple_set;
    use crate::synth::{synth_generate, SynthKind};
    use proptest::prelude::*;

    fn check_round_trip(x: &Xtructure, probes: &[&str]) {
        let json = to_json(x);
        let y = from_json(&json).unwrap();
        assert_eq!(to_json(&y), json);
        assert_eq!(y.serialize().unwrap(), x.serialize().unwrap());
        assert_eq!(triple_set(&y).unwrap(), triple_set(x).unwrap());
        assert_eq!(y.branching_threshold(), x.branching_threshold());
        for p in probes {
            assert_eq!(y.distance(p).unwrap(), x.distance(p).unwrap());
        }
    }

    #[test]
    fn layout() {
        let x = learn_column(["AB;C"], &Hyperparameters::default(), false).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&x)).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["branches"][0]["delimiters"], serde_json::json!([";"]));
        assert_eq!(v["branches"][0]["tokens"][0]["layers"][1]["counts"], serde_json::json!({"B": 1}));
        assert_eq!(v["branches"][0]["sample_words"], serde_json::json!(["AB;C"]));
        assert_eq!(v["hyperparameters"]["delimiters"], " #,-./:;@_");
        assert!(v.get("branching_threshold").is_none());
    }

    #[test]
    fn synth_round_trips() {
        for kind in SynthKind::ALL {
            let col = synth_generate(kind, 300, 0.05, 2).unwrap();
            let x = learn_column(&col.values, &Hyperparameters::default(), false).unwrap();
            let probes: Vec<&str> = col.values.iter().take(20).map(String::as_str).collect();
            check_round_trip(&x, &probes);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let good = to_json(&learn_column(["A1"], &Hyperparameters::default(), false).unwrap());
        for (from, to) in [
            ("\"version\": 1", "\"version\": 2"),
            ("\"A\": 1", "\"AB\": 1"),
            ("\"A\": 1", "\"A\": 0"),
            ("\"support\": 1", "\"support\": 1, \"extra\": 0"),
        ] {
            let bad = good.replacen(from, to, 1);
            assert_ne!(bad, good);
            assert!(matches!(from_json(&bad), Err(Error::Model(_))), "{to}");
        }
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let x = learn_column(["02139", "12345"], &Hyperparameters::default(), false).unwrap();
        save_model(&x, &path).unwrap();
        assert_eq!(load_model(&path).unwrap().serialize().unwrap(), x.serialize().unwrap());
        assert!(matches!(load_model(&dir.path().join("none.json")), Err(Error::FileNotFound(_))));
        assert!(matches!(save_model(&x, &dir.path().join("no/such/dir.json")), Err(Error::WriteFailure { .. })));
    }

    proptest! {
        #[test]
        fn arbitrary_columns_round_trip(
            col in prop::collection::vec("[ -~]{1,12}", 1..40),
            max_branches in 1usize..5,
        ) {
            let params = Hyperparameters { max_branches, ..Default::default() };
            let x = learn_column(&col, &params, false).unwrap();
            let json = to_json(&x);
            let y = from_json(&json).unwrap();
            prop_assert_eq!(to_json(&y), json);
            prop_assert_eq!(&y, &x);
        }
    }
}
