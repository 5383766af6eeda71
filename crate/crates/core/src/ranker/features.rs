//! Feature-vector assembly from the trained extractor state.
//!
//! Blocks are concatenated in a fixed order: embedding, sentiment, topic
//! vocabulary slots, bigram counts. Disabled blocks are left out and the
//! manifest records where each enabled block starts.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::SentenceRecord;
use crate::embeddings::EmbeddingBackend;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sentiment::{score_sentence, SentimentLexicon, SENTIMENT_FEATURES};
use crate::textproc::{BigramSet, Stoplist, Tokenizer};
use crate::topics::{topic_feature_vector, TopicFeatureVocab, TopicModel};

pub const BIGRAM_FEATURES: [&str; 2] = ["bigram_cw_count", "bigram_ncw_count"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureBlock {
    #[serde(alias = "sbert")]
    Embedding,
    #[serde(alias = "sf")]
    Sentiment,
    #[serde(alias = "tmf")]
    Topics,
    Bigrams,
}

impl FeatureBlock {
    pub const ALL: [FeatureBlock; 4] = [
        FeatureBlock::Embedding,
        FeatureBlock::Sentiment,
        FeatureBlock::Topics,
        FeatureBlock::Bigrams,
    ];

    /// Short name used on the command line and in ablation tables.
    pub fn short_name(self) -> &'static str {
        match self {
            FeatureBlock::Embedding => "sbert",
            FeatureBlock::Sentiment => "sf",
            FeatureBlock::Topics => "tmf",
            FeatureBlock::Bigrams => "bigrams",
        }
    }
}

impl FromStr for FeatureBlock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sbert" | "embedding" | "emb" => Ok(FeatureBlock::Embedding),
            "sf" | "sentiment" => Ok(FeatureBlock::Sentiment),
            "tmf" | "topics" | "topic" => Ok(FeatureBlock::Topics),
            "bigrams" | "bigram" => Ok(FeatureBlock::Bigrams),
            other => Err(Error::Config(format!("unknown feature block {other:?}"))),
        }
    }
}

/// Enabled feature blocks, always iterated in assembly order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureBlock>", into = "Vec<FeatureBlock>")]
pub struct FeatureSet(BTreeSet<FeatureBlock>);

impl FeatureSet {
    pub fn new(blocks: impl IntoIterator<Item = FeatureBlock>) -> Result<Self> {
        let set: BTreeSet<_> = blocks.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Config(
                "at least one feature block must be enabled".into(),
            ));
        }
        Ok(FeatureSet(set))
    }

    pub fn all() -> Self {
        FeatureSet(FeatureBlock::ALL.into_iter().collect())
    }

    pub fn contains(&self, block: FeatureBlock) -> bool {
        self.0.contains(&block)
    }

    pub fn iter(&self) -> impl Iterator<Item = FeatureBlock> + '_ {
        self.0.iter().copied()
    }
}

impl TryFrom<Vec<FeatureBlock>> for FeatureSet {
    type Error = Error;

    fn try_from(v: Vec<FeatureBlock>) -> Result<Self> {
        FeatureSet::new(v)
    }
}

impl From<FeatureSet> for Vec<FeatureBlock> {
    fn from(s: FeatureSet) -> Self {
        s.0.into_iter().collect()
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    /// Comma-separated block names, e.g. `sbert,sf,tmf,bigrams`.
    fn from_str(s: &str) -> Result<Self> {
        let blocks = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        FeatureSet::new(blocks)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(FeatureBlock::short_name).collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpan {
    pub block: FeatureBlock,
    pub start: usize,
    pub len: usize,
}

/// Ordered feature names plus the span of each enabled block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub names: Vec<String>,
    pub blocks: Vec<BlockSpan>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Unnamed manifest for `n` columns, for models fitted on raw matrices.
    pub fn anonymous(n: usize) -> Self {
        Manifest {
            names: (0..n).map(|i| format!("f{i}")).collect(),
            blocks: Vec::new(),
        }
    }

    fn push_block(&mut self, block: FeatureBlock, names: impl IntoIterator<Item = String>) {
        let start = self.names.len();
        self.names.extend(names);
        self.blocks.push(BlockSpan {
            block,
            start,
            len: self.names.len() - start,
        });
    }

    pub fn block_len(&self, block: FeatureBlock) -> Option<usize> {
        self.blocks.iter().find(|b| b.block == block).map(|b| b.len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub values: Vec<T>,
}

impl<T: Real> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract(
                "feature vector has a non-finite value".into(),
            ));
        }
        Ok(FeatureVector { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSettings {
    /// Backend the model was trained with: `fallback`, `store` or `http`.
    pub backend: String,
    pub dim: usize,
}

/// Everything needed to turn a sentence into a feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct ExtractorState<T> {
    pub blocks: FeatureSet,
    pub stopwords: Vec<String>,
    pub embedding: Option<EmbeddingSettings>,
    pub lexicon: Option<SentimentLexicon<T>>,
    pub topic_model: Option<TopicModel<T>>,
    pub topic_vocab: Option<TopicFeatureVocab<T>>,
    pub bigrams: Option<BigramSet>,
}

impl<T: Real> ExtractorState<T> {
    pub fn tokenizer(&self) -> Tokenizer {
        Tokenizer::new(Stoplist::from_words(&self.stopwords))
    }

    fn missing(block: FeatureBlock) -> Error {
        Error::Contract(format!(
            "feature block {} is enabled but its extractor state is missing",
            block.short_name()
        ))
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let mut m = Manifest::default();
        for block in self.blocks.iter() {
            match block {
                FeatureBlock::Embedding => {
                    let e = self
                        .embedding
                        .as_ref()
                        .ok_or_else(|| Self::missing(block))?;
                    m.push_block(block, (0..e.dim).map(|i| format!("emb_{i}")));
                }
                FeatureBlock::Sentiment => {
                    m.push_block(block, SENTIMENT_FEATURES.iter().map(|s| s.to_string()));
                }
                FeatureBlock::Topics => {
                    let v = self
                        .topic_vocab
                        .as_ref()
                        .ok_or_else(|| Self::missing(block))?;
                    m.push_block(block, v.words().map(|w| format!("topic_{w}")));
                }
                FeatureBlock::Bigrams => {
                    m.push_block(block, BIGRAM_FEATURES.iter().map(|s| s.to_string()));
                }
            }
        }
        Ok(m)
    }

    /// Feature vectors for a batch of sentences. The embedding backend is
    /// required only when the embedding block is enabled.
    pub fn assemble(
        &self,
        records: &[SentenceRecord],
        embedder: Option<&dyn EmbeddingBackend>,
    ) -> Result<Vec<FeatureVector<T>>> {
        let tokenizer = self.tokenizer();
        let embeddings = if self.blocks.contains(FeatureBlock::Embedding) {
            let settings = self
                .embedding
                .as_ref()
                .ok_or_else(|| Self::missing(FeatureBlock::Embedding))?;
            let backend = embedder.ok_or_else(|| {
                Error::Contract("embedding block enabled but no embedding backend given".into())
            })?;
            if backend.dim() != settings.dim {
                return Err(Error::Contract(format!(
                    "embedding backend dimension {} does not match model dimension {}",
                    backend.dim(),
                    settings.dim
                )));
            }
            let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
            let vectors = backend.embed_batch(&texts)?;
            if vectors.len() != records.len() || vectors.iter().any(|v| v.len() != settings.dim) {
                return Err(Error::Contract(
                    "embedding backend returned vectors of the wrong shape".into(),
                ));
            }
            Some(vectors)
        } else {
            None
        };

        let mut out = Vec::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            let raw = tokenizer.tokenize(&record.text, false);
            let mut values: Vec<T> = Vec::new();
            for block in self.blocks.iter() {
                match block {
                    FeatureBlock::Embedding => {
                        let v = &embeddings.as_ref().expect("computed above")[i];
                        values.extend(v.iter().map(|&x| T::from_f64_lossy(x)));
                    }
                    FeatureBlock::Sentiment => {
                        let lex = self.lexicon.as_ref().ok_or_else(|| Self::missing(block))?;
                        values.extend(score_sentence(&raw, lex).to_array());
                    }
                    FeatureBlock::Topics => {
                        let vocab = self
                            .topic_vocab
                            .as_ref()
                            .ok_or_else(|| Self::missing(block))?;
                        let filtered = tokenizer.tokenize(&record.text, true);
                        values.extend(topic_feature_vector(&filtered, vocab));
                    }
                    FeatureBlock::Bigrams => {
                        let set = self.bigrams.as_ref().ok_or_else(|| Self::missing(block))?;
                        let (cw, ncw) = set.hits(&raw);
                        values.push(T::from_usize_lossy(cw));
                        values.push(T::from_usize_lossy(ncw));
                    }
                }
            }
            out.push(FeatureVector::new(values)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::FallbackEmbedder;
    use crate::textproc::BigramSide;

    fn record(text: &str) -> SentenceRecord {
        SentenceRecord {
            debate_id: "d".into(),
            line_number: 1,
            speaker: "X".into(),
            text: text.into(),
            label: None,
        }
    }

    fn state(blocks: &str, dim: usize, vocab_words: usize) -> ExtractorState<f64> {
        let vocab = TopicFeatureVocab {
            entries: (0..vocab_words)
                .map(|i| (format!("w{i}"), 0.1 * (i + 1) as f64))
                .collect(),
        };
        let mut bigrams = BigramSet {
            threshold: 1,
            ..Default::default()
        };
        bigrams
            .bigrams
            .insert(("build".into(), "wall".into()), BigramSide::CheckworthyOnly);
        ExtractorState {
            blocks: blocks.parse().unwrap(),
            stopwords: vec!["the".into()],
            embedding: Some(EmbeddingSettings {
                backend: "fallback".into(),
                dim,
            }),
            lexicon: Some(SentimentLexicon::demo()),
            topic_model: None,
            topic_vocab: Some(vocab),
            bigrams: Some(bigrams),
        }
    }

    #[test]
    fn block_sizes() {
        let sf = state("sf", 8, 10);
        assert_eq!(sf.manifest().unwrap().len(), 3);
        let v = sf.assemble(&[record("a good day")], None).unwrap();
        assert_eq!(v[0].len(), 3);

        let sbert_sf = state("sbert,sf", 768, 10);
        assert_eq!(sbert_sf.manifest().unwrap().len(), 771);

        let all = state("sbert,sf,tmf,bigrams", 8, 10);
        let m = all.manifest().unwrap();
        assert_eq!(m.len(), 23);
        assert_eq!(m.block_len(FeatureBlock::Topics), Some(10));
        assert_eq!(m.names[8], "sent_neg");
        assert_eq!(m.names[21], "bigram_cw_count");
        let emb = FallbackEmbedder::new(8);
        let v = all
            .assemble(
                &[record("We build wall w3 w3, the good"), record("")],
                Some(&emb),
            )
            .unwrap();
        assert_eq!(v[0].len(), 23);
        assert_eq!(v[0].values[11 + 3], 0.4);
        assert_eq!(&v[0].values[21..], &[1.0, 0.0]);
        assert_eq!(&v[1].values[8..11], &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn order_is_fixed_regardless_of_spelling() {
        let a: FeatureSet = "bigrams,sf".parse().unwrap();
        let b: FeatureSet = "sentiment , bigram".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "sf,bigrams");
        assert!("".parse::<FeatureSet>().is_err());
        assert!("sbert,ner".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn embedding_block_needs_matching_backend() {
        let s = state("sbert", 8, 0);
        assert!(s.assemble(&[record("x")], None).is_err());
        let wrong = FallbackEmbedder::new(4);
        assert!(s.assemble(&[record("x")], Some(&wrong)).is_err());
    }
}
