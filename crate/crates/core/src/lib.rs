//! Learn layered syntactic patterns ("xtructures") from column values,
//! compare them with each other and with finite regexes, and use them for
//! label assignment, similarity search and outlier detection.

pub mod applications;
pub mod bench;
pub mod charclass;
pub mod comparison;
pub mod error;
pub mod ingest;
pub mod layer;
pub mod learner;
pub mod minhash;
pub mod model;
pub mod persist;
pub mod regex;
pub mod score;
pub mod synth;

pub use applications::{
    assign_labels, average_precision, detect_outliers, find_similar, pr_curve, LabelAssignment, LabelRule,
    OutlierReport, OutlierScoring, SimilarityMethod,
};
pub use charclass::{get_ascii_class, CharClass};
pub use comparison::{compare_with_regex, compare_xtructures, ComparisonConfig, SimilarityPair};
pub use error::{Error, Result};
pub use ingest::{read_column, ColumnData, ColumnSelector, ColumnSource};
pub use layer::{compress_layer, CompressionParams, LayerRepresentation, RepKind, SymbolLayer};
pub use learner::{
    learn_column, learn_column_with_stats, learn_parallel, merge_xtructures, EarlyStopState, LearnOutcome, LearnStats,
};
pub use minhash::{lsh_index, minhash, triple_set, MinhashSignature, PositionalTriple, TripleSymbol};
pub use model::{
    generate_tuple, serialize, tokenize, Branch, DelimiterSet, Hyperparameters, TokenStructure, Xtructure,
};
pub use persist::{from_json, load_model, save_model, to_json};
pub use regex::{parse_regex, regex_match, xeger_sample, FiniteRegex};
pub use score::{branch_distance, symbol_distance, token_distance, xtructure_distance, FitScore, ScoringConfig};
