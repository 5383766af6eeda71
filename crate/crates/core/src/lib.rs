//! Check-worthiness ranking for debate transcripts.
//!
//! The crate turns transcript sentences into feature vectors (sentence
//! embeddings, lexicon sentiment proportions, LDA topic-word scores and
//! discriminative bigram counts), fits a pointwise gradient-boosted
//! regression-tree ranker, and scores ranked runs with MAP, MRR,
//! R-Precision and Precision@N.
//!
//! Numeric code is generic over [`Real`]; the aliases below fix the scalar
//! to `f64`, which is what the pipeline and the CLI use.

pub mod augment;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod ranker;
pub mod scalar;
pub mod sentiment;
pub mod synth;
pub mod textproc;
pub mod topics;

pub use error::{Error, Result};
pub use scalar::Real;

pub use corpus::{Debate, RunEntry, SentenceRecord, ValidationReport};
pub use embeddings::{EmbeddingBackend, EmbeddingVector, VectorStore};
pub use eval::{QueryJudgments, ReportTable};
pub use pipeline::{FeatureBlock, FeatureSet, PipelineSettings};
pub use ranker::{FeatureVector, Manifest, RerankRule};
pub use textproc::{BigramSet, Stoplist, TokenList};
pub use topics::{Dictionary, TopicFeatureVocab};

/// Boosted tree ensemble over `f64`.
pub type GbrtModel = ranker::GbrtModel<f64>;
/// Single regression tree over `f64`.
pub type RegressionTree = ranker::RegressionTree<f64>;
/// Per-run metric means over `f64`.
pub type MetricsReport = eval::MetricsReport<f64>;
/// Per-query metric values over `f64`.
pub type QueryMetrics = eval::QueryMetrics<f64>;
/// Sentiment proportions over `f64`.
pub type SentimentScores = sentiment::SentimentScores<f64>;
/// Valence lexicon over `f64`.
pub type SentimentLexicon = sentiment::SentimentLexicon<f64>;
/// LDA topic-word model over `f64`.
pub type TopicModel = topics::TopicModel<f64>;
