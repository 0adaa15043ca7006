use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use xtructure::applications::{
    assign_labels, detect_outliers, find_similar, parse_library, pr_curve, OutlierScoring, SimilarityConfig,
    SimilarityMethod,
};
use xtructure::bench::{run_bench, BenchParams, BenchScenario};
use xtructure::comparison::{compare_with_regex, compare_xtructures, ComparisonConfig};
use xtructure::ingest::{read_column, ColumnSelector, ColumnSource};
use xtructure::learner::{learn_column_with_stats, learn_parallel};
use xtructure::model::{DelimiterSet, Hyperparameters, Xtructure};
use xtructure::persist::{load_model, save_model};
use xtructure::regex::parse_regex;
use xtructure::synth::{synth_generate, SynthKind};

#[derive(Parser)]
#[command(name = "xtruct", version, about = "Learn and apply syntactic column patterns")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[arg(long, global = true, default_value_t = 3)]
    max_branches: usize,
    /// Initial branching threshold on normalized distance.
    #[arg(long, global = true, default_value_t = 0.1)]
    branch_threshold: f64,
    /// Share of a layer an OR-list must capture.
    #[arg(long, global = true, default_value_t = 0.85)]
    capture: f64,
    /// Cost of a same-class character missing from an OR-list.
    #[arg(long, global = true, default_value_t = 0.2)]
    alpha: f64,
    /// Significance level of the uniformity test.
    #[arg(long, global = true, default_value_t = 0.05)]
    chi_sq_p: f64,
    #[arg(long, global = true, default_value = "-/#.;:,_ @")]
    delimiters: String,
    /// Stop learning once the sampled fit scores have converged.
    #[arg(long, global = true)]
    early_stop: bool,
}

impl Global {
    fn hyperparameters(&self) -> Result<Hyperparameters> {
        let p = Hyperparameters {
            max_branches: self.max_branches,
            branching_threshold: self.branch_threshold,
            capture_threshold: self.capture,
            alpha: self.alpha,
            chi_sq_p: self.chi_sq_p,
            delimiters: DelimiterSet::new(&self.delimiters)?,
            rng_seed: self.seed,
            ..Hyperparameters::default()
        };
        p.validate()?;
        if self.workers == 0 {
            bail!("--workers must be at least 1");
        }
        Ok(p)
    }
}

#[derive(Args)]
struct Input {
    /// CSV file to read.
    #[arg(long)]
    input: PathBuf,
    /// Zero-based column index or header name.
    #[arg(long, default_value = "0")]
    column: String,
    /// Treat the first row as a header.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    max_rows: Option<usize>,
}

impl Input {
    fn source(&self) -> ColumnSource {
        ColumnSource {
            path: self.input.clone(),
            column: ColumnSelector::parse(&self.column),
            header: self.header,
            max_rows: self.max_rows,
        }
    }
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Target confidence-interval half-width.
    #[arg(long, default_value_t = 0.05)]
    precision: f64,
}

impl Sampling {
    fn config(&self) -> ComparisonConfig {
        ComparisonConfig { confidence: self.confidence, precision: self.precision, ..Default::default() }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    AllPairs,
    Lsh,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scoring {
    Weighted,
    Min,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a model from one CSV column and print its pattern.
    Learn {
        #[command(flatten)]
        input: Input,
        /// Where to write the JSON model.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the pattern of a saved model.
    Show {
        model: PathBuf,
        /// One line per branch with its support.
        #[arg(long)]
        branches: bool,
    },
    /// Compare two saved models.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a saved model with a finite regex.
    MatchRegex {
        model: PathBuf,
        regex: String,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign library labels to saved models.
    Label {
        /// JSON array of {label, regex}.
        #[arg(long)]
        library: PathBuf,
        #[arg(required = true)]
        models: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report pairs of similar models.
    Similar {
        #[arg(required = true, num_args = 2..)]
        models: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "all-pairs")]
        method: Method,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score every row of a column against a frozen model.
    Outliers {
        #[command(flatten)]
        input: Input,
        /// Saved model; without it a model is learned from the column with
        /// early stopping (or from the first --train-rows rows).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, conflicts_with = "model")]
        train_rows: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "weighted")]
        scoring: Scoring,
        /// Column holding true/false ground truth, for a PR sweep.
        #[arg(long, requires = "pr_out")]
        truth_column: Option<String>,
        /// Where to write the threshold,precision,recall sweep.
        #[arg(long, requires = "truth_column")]
        pr_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic column as value,is_corrupt CSV.
    Synth {
        #[arg(long)]
        kind: SynthKind,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        corrupt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a timing sweep.
    Bench {
        #[arg(long)]
        scenario: BenchScenario,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        /// Comma-separated sweep values; defaults depend on the scenario.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<usize>>,
        /// Column size, for scenarios that do not sweep it.
        #[arg(long)]
        tuples: Option<usize>,
        /// Where to write median/p95/p99 per sweep point (default stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn csv_report<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn model_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn load(path: &Path) -> Result<Xtructure> {
    load_model(path).with_context(|| format!("loading {}", path.display()))
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Learn { input, out } => {
            let params = g.hyperparameters()?;
            let data = read_column(&input.source())?;
            let empty = data.empty_cells();
            let x = if g.workers > 1 {
                learn_parallel(&data.values, &params, g.workers, g.early_stop)?
            } else {
                let (x, stats) = learn_column_with_stats(&data.values, &params, g.early_stop)?;
                if stats.stopped_early {
                    eprintln!("early stop after {} tuples", stats.consumed);
                }
                x
            };
            if empty > 0 {
                eprintln!("skipped {empty} empty cells");
            }
            if data.sanitized_cells > 0 {
                eprintln!("replaced non-ASCII characters in {} cells", data.sanitized_cells);
            }
            save_model(&x, &out)?;
            println!("{}", x.serialize()?);
        }
        Command::Show { model, branches } => {
            let x = load(&model)?;
            if branches {
                for (support, pattern) in x.branch_patterns()? {
                    println!("{support}\t{pattern}");
                }
            } else {
                println!("{}", x.serialize()?);
            }
        }
        Command::Compare { a, b, sampling, out } => {
            let s = compare_xtructures(&load(&a)?, &load(&b)?, &sampling.config(), g.seed)?;
            let row = [model_id(&a), model_id(&b), f(s.fit_a_in_b), f(s.fit_b_in_a)];
            emit(out.as_deref(), &csv_report(&["id_a", "id_b", "fit_ab", "fit_ba"], [row])?)?;
        }
        Command::MatchRegex { model, regex, sampling, out } => {
            let r = parse_regex(&regex)?;
            let s = compare_with_regex(&load(&model)?, &r, &sampling.config(), g.seed)?;
            let row = [model_id(&model), regex, f(s.fit_a_in_b), f(s.fit_b_in_a)];
            emit(out.as_deref(), &csv_report(&["id", "regex", "fit_xr", "fit_rx"], [row])?)?;
        }
        Command::Label { library, models, threshold, sampling, out } => {
            let text = fs::read_to_string(&library).with_context(|| format!("reading {}", library.display()))?;
            let library = parse_library(&text)?;
            let named = models.iter().map(|p| Ok((model_id(p), load(p)?))).collect::<Result<Vec<_>>>()?;
            let got = assign_labels(&named, &library, threshold, &sampling.config(), g.seed)?;
            let rows = got.into_iter().map(|a| [a.column_id, a.label, f(a.score)]);
            emit(out.as_deref(), &csv_report(&["column_id", "label", "score"], rows)?)?;
        }
        Command::Similar { models, method, threshold, sampling, out } => {
            let xs = models.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
            let ids: Vec<String> = models.iter().map(|p| model_id(p)).collect();
            let cfg = SimilarityConfig { comparison: sampling.config(), seed: g.seed, ..Default::default() };
            let method = match method {
                Method::AllPairs => SimilarityMethod::AllPairs,
                Method::Lsh => SimilarityMethod::Lsh,
            };
            let pairs = find_similar(&xs, method, threshold, &cfg)?;
            let text = match method {
                SimilarityMethod::AllPairs => csv_report(
                    &["id_a", "id_b", "fit_ab", "fit_ba"],
                    pairs.iter().map(|p| {
                        let s = p.fits.expect("all-pairs fits");
                        vec![ids[p.a].clone(), ids[p.b].clone(), f(s.fit_a_in_b), f(s.fit_b_in_a)]
                    }),
                )?,
                SimilarityMethod::Lsh => csv_report(
                    &["id_a", "id_b", "est_jaccard"],
                    pairs.iter().map(|p| vec![ids[p.a].clone(), ids[p.b].clone(), f(p.score)]),
                )?,
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Outliers { input, model, train_rows, threshold, scoring, truth_column, pr_out, out } => {
            let params = g.hyperparameters()?;
            let data = read_column(&input.source())?;
            let x = match (model, train_rows) {
                (Some(path), _) => load(&path)?,
                (None, Some(n)) => learn_column_with_stats(data.values.iter().take(n), &params, false)?.0,
                (None, None) => learn_column_with_stats(&data.values, &params, true)?.0,
            };
            let scoring = match scoring {
                Scoring::Weighted => OutlierScoring::WeightedSum,
                Scoring::Min => OutlierScoring::MinBranch,
            };
            let rows: Vec<(usize, &str)> = data.values.iter().map(String::as_str).enumerate().collect();
            let report = detect_outliers(&input.column, &x, &rows, threshold, scoring)?;
            let text = csv_report(
                &["row", "value", "score", "flag"],
                report
                    .entries
                    .iter()
                    .map(|e| [e.row.to_string(), e.value.clone(), f(e.score), e.is_outlier.to_string()]),
            )?;
            emit(out.as_deref(), &text)?;
            if let (Some(truth_column), Some(pr_out)) = (truth_column, pr_out) {
                let truth_src = ColumnSource { column: ColumnSelector::parse(&truth_column), ..input.source() };
                let truth = read_column(&truth_src)?
                    .values
                    .iter()
                    .map(|v| match v.trim().to_ascii_lowercase().as_str() {
                        "true" | "1" | "yes" => Ok(true),
                        "false" | "0" | "no" | "" => Ok(false),
                        other => bail!("ground truth value {other:?} is not a boolean"),
                    })
                    .collect::<Result<Vec<bool>>>()?;
                let scores: Vec<f64> = report.entries.iter().map(|e| e.score).collect();
                let points = pr_curve(&scores, &truth);
                let text = csv_report(
                    &["threshold", "precision", "recall"],
                    points.iter().map(|p| [f(p.threshold), f(p.precision), f(p.recall)]),
                )?;
                emit(Some(&pr_out), &text)?;
            }
        }
        Command::Synth { kind, n, corrupt, out } => {
            let col = synth_generate(kind, n, corrupt, g.seed)?;
            let rows = col.values.iter().zip(&col.ground_truth).map(|(v, t)| [v.clone(), t.to_string()]);
            emit(out.as_deref(), &csv_report(&["value", "is_corrupt"], rows)?)?;
        }
        Command::Bench { scenario, repetitions, sweep, tuples, summary, out } => {
            let mut p = BenchParams::new(scenario);
            p.repetitions = repetitions;
            p.seed = g.seed;
            p.hyperparameters = g.hyperparameters()?;
            if let Some(s) = sweep {
                p.sweep = s;
            }
            if let Some(t) = tuples {
                p.tuples = t;
            }
            let report = run_bench(&p)?;
            emit(out.as_deref(), &report.runs_csv())?;
            match summary {
                Some(path) => emit(Some(&path), &report.summary_csv())?,
                None => eprint!("{}", report.summary_csv()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
