//! Pipeline configuration file (TOML) and flag overrides.
//!
//! Precedence is command-line flag, then config file, then built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use checkworthy::augment::DEFAULT_MIN_SIM;
use checkworthy::pipeline::{BackendKind, EmbeddingConfig, Resources};
use checkworthy::textproc::Stoplist;
use checkworthy::{Error, FeatureSet, PipelineSettings, Result, SentimentLexicon};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub train_dir: Option<PathBuf>,
    pub test_dir: Option<PathBuf>,
    /// `word<TAB>valence` file; the bundled demo lexicon when unset.
    pub lexicon: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub pipeline: PipelineSettings,
    pub embedding: EmbeddingConfig,
    pub augment: AugmentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Word vector file used for neighbour lookup.
    pub word_vectors: Option<PathBuf>,
    /// Sidecar POS tags; the rule-based tagger is used when unset.
    pub pos_sidecar: Option<PathBuf>,
    pub min_sim: f64,
    pub max_copies: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            word_vectors: None,
            pos_sidecar: None,
            min_sim: DEFAULT_MIN_SIM,
            max_copies: 1,
        }
    }
}

/// Flags shared by every subcommand that builds a pipeline.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonFlags {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every seeded component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Feature blocks, e.g. `sbert,sf,tmf,bigrams`.
    #[arg(long, global = true)]
    pub features: Option<String>,
    /// Embedding backend: fallback, store or http.
    #[arg(long, global = true)]
    pub embed_backend: Option<String>,
    /// Embedding service base URL (selects the http backend).
    #[arg(long, global = true, env = "CHECKWORTHY_EMBED_URL")]
    pub embed_url: Option<String>,
    /// Embedding dimension for the fallback and http backends.
    #[arg(long, global = true)]
    pub embed_dim: Option<usize>,
    /// Sentence vector file for the store backend.
    #[arg(long, global = true)]
    pub embed_store: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn parse(content: &str, origin: &Path) -> Result<Self> {
        toml::from_str(content)
            .map_err(|e| Error::Config(format!("{}: {}", origin.display(), e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, path)
    }

    /// File contents (or defaults) with command-line overrides applied.
    pub fn resolve(flags: &CommonFlags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(seed) = flags.seed {
            cfg.seed = Some(seed);
        }
        if let Some(f) = &flags.features {
            cfg.pipeline.blocks = f.parse::<FeatureSet>().map_err(as_config)?;
        }
        if let Some(d) = flags.embed_dim {
            cfg.embedding.dim = d;
            cfg.embedding.http.dim = d;
        }
        if let Some(p) = &flags.embed_store {
            cfg.embedding.store_path = Some(p.clone());
            cfg.embedding.backend = BackendKind::Store;
        }
        if let Some(u) = &flags.embed_url {
            cfg.embedding.http.url = u.clone();
            cfg.embedding.backend = BackendKind::Http;
        }
        if let Some(b) = &flags.embed_backend {
            cfg.embedding.backend = parse_backend(b)?;
        }
        if let Some(seed) = cfg.seed {
            cfg.pipeline = cfg.pipeline.clone().with_seed(seed);
        }
        Ok(cfg)
    }

    pub fn resources(&self) -> Result<Resources> {
        let stoplist = match &self.stoplist {
            Some(p) => Stoplist::load(p)?,
            None => Stoplist::default(),
        };
        let lexicon = match &self.lexicon {
            Some(p) => SentimentLexicon::load(p)?,
            None => SentimentLexicon::demo(),
        };
        Ok(Resources { stoplist, lexicon })
    }
}

fn parse_backend(s: &str) -> Result<BackendKind> {
    match s {
        "fallback" => Ok(BackendKind::Fallback),
        "store" => Ok(BackendKind::Store),
        "http" => Ok(BackendKind::Http),
        other => Err(Error::Config(format!(
            "unknown embedding backend {other:?} (expected fallback, store or http)"
        ))),
    }
}

/// Bad flag values are configuration errors whatever the parser reported.
fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}
