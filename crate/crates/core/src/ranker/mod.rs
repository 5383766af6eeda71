//! Feature assembly, the boosted tree ranker, its model file and the
//! post-scoring demotion rules.

pub mod bundle;
pub mod features;
pub mod gbrt;
pub mod rerank;
pub mod tree;

pub use bundle::{ModelBundle, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use features::{
    BlockSpan, EmbeddingSettings, ExtractorState, FeatureBlock, FeatureSet, FeatureVector, Manifest,
};
pub use gbrt::{fit, GbrtConfig, GbrtModel};
pub use rerank::{apply_rules, RerankRule, RuleContext, DEMOTION_EPSILON};
pub use tree::{Node, RegressionTree};
