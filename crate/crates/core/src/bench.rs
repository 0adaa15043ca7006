//! Timing sweeps over synthetic columns.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::statistics::{Data, Median, OrderStatistics};

use crate::applications::{all_pairs_scores, lsh_scores, SimilarityConfig};
use crate::error::{Error, Result};
use crate::learner::{learn_column, learn_parallel};
use crate::model::{Hyperparameters, Xtructure};
use crate::synth::{synth_generate, SynthKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchScenario {
    Tuples,
    Hinges,
    Length,
    Parallel,
    AllPairsVsLsh,
}

impl BenchScenario {
    pub const ALL: [BenchScenario; 5] = [
        BenchScenario::Tuples,
        BenchScenario::Hinges,
        BenchScenario::Length,
        BenchScenario::Parallel,
        BenchScenario::AllPairsVsLsh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchScenario::Tuples => "TUPLES",
            BenchScenario::Hinges => "HINGES",
            BenchScenario::Length => "LENGTH",
            BenchScenario::Parallel => "PARALLEL",
            BenchScenario::AllPairsVsLsh => "ALLPAIRS_VS_LSH",
        }
    }

    /// Default sweep values.
    pub fn default_sweep(self) -> Vec<usize> {
        match self {
            BenchScenario::Tuples => vec![100, 1_000, 10_000],
            BenchScenario::Hinges => vec![1, 2, 4, 8],
            BenchScenario::Length => vec![5, 10, 20, 40, 80],
            BenchScenario::Parallel => vec![1, 2, 4, 8],
            BenchScenario::AllPairsVsLsh => vec![2, 5, 10, 20, 40],
        }
    }
}

impl fmt::Display for BenchScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        BenchScenario::ALL
            .into_iter()
            .find(|b| b.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown bench scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub scenario: BenchScenario,
    pub sweep: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
    /// Column size for every sweep except TUPLES, whose sweep is the size.
    pub tuples: usize,
}

impl BenchParams {
    pub fn new(scenario: BenchScenario) -> Self {
        BenchParams {
            scenario,
            sweep: scenario.default_sweep(),
            repetitions: 10,
            seed: 0,
            hyperparameters: Hyperparameters::default(),
            tuples: match scenario {
                BenchScenario::Parallel => 20_000,
                BenchScenario::AllPairsVsLsh => 200,
                _ => 1_000,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub scenario: BenchScenario,
    pub variant: &'static str,
    pub x: usize,
    pub repetition: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub scenario: BenchScenario,
    pub variant: &'static str,
    pub x: usize,
    pub median: f64,
    pub p95: f64,
    pub p99: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub runs: Vec<BenchRun>,
    pub summaries: Vec<BenchSummary>,
}

impl BenchReport {
    pub fn runs_csv(&self) -> String {
        let mut s = String::from("scenario,variant,x,repetition,seconds\n");
        for r in &self.runs {
            s.push_str(&format!("{},{},{},{},{:.6}\n", r.scenario, r.variant, r.x, r.repetition, r.seconds));
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("scenario,variant,x,median,p95,p99\n");
        for r in &self.summaries {
            s.push_str(&format!("{},{},{},{:.6},{:.6},{:.6}\n", r.scenario, r.variant, r.x, r.median, r.p95, r.p99));
        }
        s
    }
}

/// Median and the 95th and 99th percentiles.
pub fn percentiles(samples: &[f64]) -> (f64, f64, f64) {
    let mut data = Data::new(samples.to_vec());
    (data.median(), data.percentile(95), data.percentile(99))
}

pub fn time<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn digits_column(n: usize, len: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..len).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect()).collect()
}

/// `k` dates joined by '-', giving `3k - 1` hinges per tuple.
fn hinged_column(n: usize, k: usize, seed: u64) -> Vec<String> {
    let dates = synth_generate(SynthKind::DateYmd, n * k, 0.0, seed).expect("valid synth").values;
    dates.chunks(k).map(|c| c.join("-")).collect()
}

fn similarity_models(columns: usize, rows: usize, seed: u64, params: &Hyperparameters) -> Result<Vec<Xtructure>> {
    (0..columns)
        .map(|i| {
            let kind = SynthKind::ALL[i % SynthKind::ALL.len()];
            let col = synth_generate(kind, rows, 0.0, seed.wrapping_add(i as u64))?;
            learn_column(&col.values, params, false)
        })
        .collect()
}

pub fn run_bench(p: &BenchParams) -> Result<BenchReport> {
    if p.repetitions == 0 || p.sweep.is_empty() {
        return Err(Error::InvalidParameter("need at least one repetition and sweep value".into()));
    }
    let mut report = BenchReport::default();
    let mut record = |variant: &'static str, x: usize, times: Vec<f64>| {
        let (median, p95, p99) = percentiles(&times);
        report.summaries.push(BenchSummary { scenario: p.scenario, variant, x, median, p95, p99 });
        for (repetition, seconds) in times.into_iter().enumerate() {
            report.runs.push(BenchRun { scenario: p.scenario, variant, x, repetition, seconds });
        }
    };
    let hp = &p.hyperparameters;
    for &x in &p.sweep {
        match p.scenario {
            BenchScenario::Tuples | BenchScenario::Hinges | BenchScenario::Length => {
                let col = match p.scenario {
                    BenchScenario::Tuples => synth_generate(SynthKind::CurrencyCode, x, 0.0, p.seed)?.values,
                    BenchScenario::Hinges => hinged_column(p.tuples, x, p.seed),
                    _ => digits_column(p.tuples, x, p.seed),
                };
                let mut times = Vec::with_capacity(p.repetitions);
                for _ in 0..p.repetitions {
                    let (res, t) = time(|| learn_column(&col, hp, false));
                    res?;
                    times.push(t);
                }
                record("learn", x, times);
            }
            BenchScenario::Parallel => {
                let col = synth_generate(SynthKind::ProductId, p.tuples, 0.0, p.seed)?.values;
                let mut times = Vec::with_capacity(p.repetitions);
                for _ in 0..p.repetitions {
                    let (res, t) = time(|| learn_parallel(&col, hp, x, false));
                    res?;
                    times.push(t);
                }
                record("learn", x, times);
            }
            BenchScenario::AllPairsVsLsh => {
                let models = similarity_models(x, p.tuples, p.seed, hp)?;
                let cfg = SimilarityConfig { seed: p.seed, ..Default::default() };
                let mut all = Vec::with_capacity(p.repetitions);
                let mut lsh = Vec::with_capacity(p.repetitions);
                for _ in 0..p.repetitions {
                    let (res, t) = time(|| all_pairs_scores(&models, &cfg));
                    res?;
                    all.push(t);
                    let (res, t) = time(|| lsh_scores(&models, &cfg));
                    res?;
                    lsh.push(t);
                }
                record("all_pairs", x, all);
                record("lsh", x, lsh);
            }
        }
    }
    Ok(report)
}
