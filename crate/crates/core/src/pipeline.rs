//! End-to-end orchestration: fit extractor state and the ranker on a labeled
//! corpus, score and rank debates, evaluate runs, and run block ablations.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::{Debate, RunEntry};
use crate::embeddings::{
    load_vector_file, EmbeddingBackend, FallbackEmbedder, HttpBackend, HttpConfig, StoreBackend,
    DEFAULT_DIM,
};
use crate::error::{Error, Result};
use crate::eval::{ablation_report, evaluate_run, MetricsReport, QueryJudgments, ReportTable};
use crate::ranker::{
    apply_rules, fit, EmbeddingSettings, ExtractorState, GbrtConfig, ModelBundle, RerankRule,
    RuleContext,
};
use crate::sentiment::SentimentLexicon;
use crate::textproc::{
    select_discriminative_bigrams, Stoplist, Tokenizer, DEFAULT_BIGRAM_THRESHOLD,
};
use crate::topics::{build_dictionary, fit_lda, LdaConfig, TopicFeatureVocab};

pub use crate::ranker::{FeatureBlock, FeatureSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Fallback,
    Store,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub backend: BackendKind,
    /// Dimension for the fallback backend.
    pub dim: usize,
    /// Sentence vector file for the store backend.
    pub store_path: Option<PathBuf>,
    pub http: HttpConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            backend: BackendKind::Fallback,
            dim: DEFAULT_DIM,
            store_path: None,
            http: HttpConfig::default(),
        }
    }
}

impl EmbeddingConfig {
    pub fn build_backend(&self) -> Result<Box<dyn EmbeddingBackend>> {
        Ok(match self.backend {
            BackendKind::Fallback => Box::new(FallbackEmbedder::new(self.dim)),
            BackendKind::Store => {
                let path = self.store_path.as_ref().ok_or_else(|| {
                    Error::Config("store backend selected but no vector file given".into())
                })?;
                Box::new(StoreBackend::new(load_vector_file(path)?))
            }
            BackendKind::Http => Box::new(HttpBackend::new(self.http.clone())?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub blocks: FeatureSet,
    pub bigram_threshold: usize,
    pub lda: LdaConfig,
    pub gbrt: GbrtConfig,
    pub rules: Vec<RerankRule>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            blocks: FeatureSet::all(),
            bigram_threshold: DEFAULT_BIGRAM_THRESHOLD,
            lda: LdaConfig::default(),
            gbrt: GbrtConfig::default(),
            rules: Vec::new(),
        }
    }
}

impl PipelineSettings {
    /// Uses one seed for every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.lda.seed = seed;
        self.gbrt.seed = seed;
        self
    }
}

/// Non-learned resources the extractors need.
#[derive(Debug, Clone)]
pub struct Resources {
    pub stoplist: Stoplist,
    pub lexicon: SentimentLexicon<f64>,
}

impl Default for Resources {
    fn default() -> Self {
        Resources {
            stoplist: Stoplist::default(),
            lexicon: SentimentLexicon::demo(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: ModelBundle<f64>,
    /// (block short name, slot count) in manifest order.
    pub block_dims: Vec<(String, usize)>,
    pub final_mse: f64,
    pub rows: usize,
}

/// Fits extractor state (bigram set, topic model) and the ranker.
pub fn train(
    debates: &[Debate],
    settings: &PipelineSettings,
    resources: &Resources,
    embedder: Option<&dyn EmbeddingBackend>,
) -> Result<TrainOutcome> {
    if let Some(d) = debates.iter().find(|d| !d.is_labeled()) {
        return Err(Error::Contract(format!(
            "training debate {} is empty or not fully labeled",
            d.debate_id
        )));
    }
    if debates.is_empty() {
        return Err(Error::Contract("no training debates".into()));
    }
    let blocks = &settings.blocks;
    let tokenizer = Tokenizer::new(resources.stoplist.clone());

    let bigrams = if blocks.contains(FeatureBlock::Bigrams) {
        Some(select_discriminative_bigrams(
            debates,
            settings.bigram_threshold,
        )?)
    } else {
        None
    };

    let (topic_model, topic_vocab) = if blocks.contains(FeatureBlock::Topics) {
        let docs: Vec<_> = debates
            .iter()
            .flat_map(|d| &d.records)
            .filter(|r| r.label == Some(true))
            .map(|r| tokenizer.tokenize(&r.text, true))
            .collect();
        let dict = build_dictionary(&docs);
        let bows: Vec<_> = docs.iter().map(|d| dict.doc2bow(d)).collect();
        let model = fit_lda::<f64>(&bows, &dict, &settings.lda)?;
        let vocab = TopicFeatureVocab::from_model(&model, settings.lda.top_n);
        (Some(model), Some(vocab))
    } else {
        (None, None)
    };

    let embedding = if blocks.contains(FeatureBlock::Embedding) {
        let backend = embedder.ok_or_else(|| {
            Error::Config("embedding block enabled but no embedding backend configured".into())
        })?;
        Some(EmbeddingSettings {
            backend: backend.name().to_string(),
            dim: backend.dim(),
        })
    } else {
        None
    };

    let extractors = ExtractorState {
        blocks: blocks.clone(),
        stopwords: resources.stoplist.words().map(str::to_string).collect(),
        embedding,
        lexicon: blocks
            .contains(FeatureBlock::Sentiment)
            .then(|| resources.lexicon.clone()),
        topic_model,
        topic_vocab,
        bigrams,
    };
    let manifest = extractors.manifest()?;
    let records: Vec<_> = debates
        .iter()
        .flat_map(|d| d.records.iter().cloned())
        .collect();
    let rows = extractors.assemble(&records, embedder)?;
    let labels: Vec<f64> = records
        .iter()
        .map(|r| r.label_value().expect("checked labeled"))
        .collect();
    let model = fit(&rows, &labels, manifest, &settings.gbrt)?;

    let block_dims = model
        .manifest
        .blocks
        .iter()
        .map(|b| (b.block.short_name().to_string(), b.len))
        .collect();
    let final_mse = model.final_training_mse().unwrap_or(0.0);
    Ok(TrainOutcome {
        bundle: ModelBundle { model, extractors },
        block_dims,
        final_mse,
        rows: records.len(),
    })
}

/// Model scores for every sentence of a debate, in record order.
pub fn score_debate(
    bundle: &ModelBundle<f64>,
    debate: &Debate,
    embedder: Option<&dyn EmbeddingBackend>,
) -> Result<Vec<f64>> {
    let rows = bundle.extractors.assemble(&debate.records, embedder)?;
    rows.iter().map(|r| bundle.model.predict(r)).collect()
}

/// Scores a debate and applies the demotion rules.
pub fn rank_debate(
    bundle: &ModelBundle<f64>,
    debate: &Debate,
    rules: &[RerankRule],
    embedder: Option<&dyn EmbeddingBackend>,
) -> Result<Vec<RunEntry>> {
    let scores = score_debate(bundle, debate, embedder)?;
    let tokenizer = bundle.extractors.tokenizer();
    let ctx = RuleContext {
        tokenizer: &tokenizer,
        topic_vocab: bundle.extractors.topic_vocab.as_ref(),
        bigrams: bundle.extractors.bigrams.as_ref(),
    };
    apply_rules(debate, &scores, rules, &ctx)
}

/// Line numbers ordered by descending score, ties by line number.
pub fn ranking_from_run(entries: &[RunEntry]) -> Vec<u32> {
    let mut sorted = entries.to_vec();
    crate::corpus::sort_run(&mut sorted);
    sorted.into_iter().map(|e| e.line_number).collect()
}

pub fn evaluate_runs(gold: &[Debate], runs: &Runs) -> Result<MetricsReport<f64>> {
    let judgments: BTreeMap<String, QueryJudgments> = gold
        .iter()
        .map(|d| (d.debate_id.clone(), QueryJudgments::from_debate(d)))
        .collect();
    let rankings: BTreeMap<String, Vec<u32>> = runs
        .iter()
        .map(|(id, entries)| (id.clone(), ranking_from_run(entries)))
        .collect();
    evaluate_run(&rankings, &judgments)
}

/// Per-debate runs keyed by debate id.
pub type Runs = BTreeMap<String, Vec<RunEntry>>;

/// Trains on `train`, ranks `test`, and evaluates against `test` labels.
pub fn train_and_evaluate(
    train_set: &[Debate],
    test_set: &[Debate],
    settings: &PipelineSettings,
    resources: &Resources,
    embedder: Option<&dyn EmbeddingBackend>,
) -> Result<(TrainOutcome, Runs, MetricsReport<f64>)> {
    let outcome = train(train_set, settings, resources, embedder)?;
    let mut runs = BTreeMap::new();
    for d in test_set {
        runs.insert(
            d.debate_id.clone(),
            rank_debate(&outcome.bundle, d, &settings.rules, embedder)?,
        );
    }
    let report = evaluate_runs(test_set, &runs)?;
    Ok((outcome, runs, report))
}

/// One train/evaluate round per block subset; the first subset is the
/// baseline row.
pub fn ablate(
    train_set: &[Debate],
    test_set: &[Debate],
    subsets: &[FeatureSet],
    settings: &PipelineSettings,
    resources: &Resources,
    embedder: Option<&dyn EmbeddingBackend>,
) -> Result<ReportTable> {
    if subsets.is_empty() {
        return Err(Error::Config(
            "ablation needs at least one feature subset".into(),
        ));
    }
    let mut rows = Vec::with_capacity(subsets.len());
    for subset in subsets {
        let s = PipelineSettings {
            blocks: subset.clone(),
            ..settings.clone()
        };
        let emb = if subset.contains(FeatureBlock::Embedding) {
            embedder
        } else {
            None
        };
        let (_, _, report) = train_and_evaluate(train_set, test_set, &s, resources, emb)?;
        rows.push((subset.to_string(), report));
    }
    ablation_report(&rows, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, SynthConfig};

    fn small_settings(blocks: &str) -> PipelineSettings {
        PipelineSettings {
            blocks: blocks.parse().unwrap(),
            bigram_threshold: 3,
            lda: LdaConfig {
                topics: 4,
                iterations: 30,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn corpus(seed: u64) -> Vec<Debate> {
        generate_corpus(&SynthConfig {
            debates: 2,
            sentences: 40,
            seed,
            ..Default::default()
        })
    }

    #[test]
    fn sf_only_manifest() {
        let out = train(
            &corpus(1),
            &small_settings("sf"),
            &Resources::default(),
            None,
        )
        .unwrap();
        assert_eq!(out.bundle.model.manifest.len(), 3);
        assert_eq!(out.block_dims, vec![("sf".to_string(), 3)]);
    }

    #[test]
    fn all_blocks_manifest() {
        let emb = FallbackEmbedder::new(8);
        let out = train(
            &corpus(2),
            &small_settings("sbert,sf,tmf,bigrams"),
            &Resources::default(),
            Some(&emb),
        )
        .unwrap();
        let vocab = out.bundle.extractors.topic_vocab.as_ref().unwrap().len();
        assert!(vocab > 0);
        assert_eq!(out.bundle.model.manifest.len(), 8 + 3 + vocab + 2);
        out.bundle.check().unwrap();
    }

    #[test]
    fn embedding_needs_backend() {
        let r = train(
            &corpus(3),
            &small_settings("sbert"),
            &Resources::default(),
            None,
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn unlabeled_training_rejected() {
        let mut c = corpus(4);
        c[0].records[0].label = None;
        assert!(train(&c, &small_settings("sf"), &Resources::default(), None).is_err());
    }

    #[test]
    fn ranking_covers_every_line() {
        let train_set = corpus(5);
        let test_set = corpus(6);
        let (_, runs, report) = train_and_evaluate(
            &train_set,
            &test_set,
            &small_settings("sf,tmf,bigrams"),
            &Resources::default(),
            None,
        )
        .unwrap();
        for d in &test_set {
            crate::corpus::check_coverage(d, &runs[&d.debate_id]).unwrap();
        }
        assert!(report.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn ablation_rows_follow_subsets() {
        let subsets: Vec<FeatureSet> = vec!["sf".parse().unwrap(), "sf".parse().unwrap()];
        let t = ablate(
            &corpus(7),
            &corpus(8),
            &subsets,
            &small_settings("sf"),
            &Resources::default(),
            None,
        )
        .unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].values, t.rows[1].values);
    }
}
