//! LDA topic model fitted by collapsed Gibbs sampling, and the topic-word
//! score features derived from it.
//!
//! The sampler integrates out the document-topic and topic-word mixtures and
//! resamples one token assignment at a time from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk + alpha) · (n_kw + beta) / (n_k + V·beta)
//! ```
//!
//! After the last sweep the topic-word matrix is read off the counts as
//! `phi[k][w] = (n_kw + beta) / (n_k + V·beta)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::textproc::TokenList;

/// Word ↔ dense id mapping, ids assigned in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    word_of: Vec<String>,
    id_of: HashMap<String, u32>,
}

impl Dictionary {
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut id_of = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if id_of.insert(w.clone(), i as u32).is_some() {
                return Err(Error::Contract(format!("duplicate dictionary word {w:?}")));
            }
        }
        Ok(Dictionary {
            word_of: words,
            id_of,
        })
    }

    pub fn len(&self) -> usize {
        self.word_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_of.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.id_of.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.word_of.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.word_of
    }

    /// Bag of words over known words; unknown words are dropped.
    pub fn doc2bow(&self, tokens: &[String]) -> BowDocument {
        let mut counts = BTreeMap::new();
        for t in tokens {
            if let Some(id) = self.id(t) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        BowDocument { counts }
    }
}

pub fn build_dictionary(docs: &[TokenList]) -> Dictionary {
    let mut dict = Dictionary::default();
    for doc in docs {
        for t in doc.iter() {
            if !dict.id_of.contains_key(t) {
                dict.id_of.insert(t.clone(), dict.word_of.len() as u32);
                dict.word_of.push(t.clone());
            }
        }
    }
    dict
}

/// Sparse word-id → count map; every count is at least 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BowDocument {
    pub counts: BTreeMap<u32, u32>,
}

impl BowDocument {
    pub fn len(&self) -> usize {
        self.counts.values().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaConfig {
    pub topics: usize,
    /// Document-topic smoothing; `None` means 50 / topics.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Words per topic kept for the feature vocabulary.
    pub top_n: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 40,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
            top_n: 5,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel<T> {
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    /// Vocabulary, indexed by word id.
    pub words: Vec<String>,
    /// `topics × words`, each row a probability distribution.
    pub phi: Vec<Vec<T>>,
}

impl<T: Real> TopicModel<T> {
    pub fn topics(&self) -> usize {
        self.phi.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    /// The `n` most probable words of `topic`, descending, ties by word id.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<(String, T)>> {
        Ok(self
            .top_word_ids(topic, n)?
            .into_iter()
            .map(|(id, p)| (self.words[id].clone(), p))
            .collect())
    }

    fn top_word_ids(&self, topic: usize, n: usize) -> Result<Vec<(usize, T)>> {
        let row = self.phi.get(topic).ok_or_else(|| {
            Error::Contract(format!(
                "topic {topic} out of range (K = {})",
                self.topics()
            ))
        })?;
        let mut ids: Vec<usize> = (0..row.len()).collect();
        ids.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
        ids.truncate(n);
        Ok(ids.into_iter().map(|id| (id, row[id])).collect())
    }

    /// Plain-text `topic: word (score) ...` table, one topic per line.
    pub fn render_table(&self, top_n: usize) -> String {
        let mut out = String::new();
        for k in 0..self.topics() {
            let words = self.top_words(k, top_n).expect("topic in range");
            let cells: Vec<String> = words
                .iter()
                .map(|(w, p)| format!("{w} ({:.4})", p.to_f64_lossy()))
                .collect();
            writeln!(out, "{k:>3}: {}", cells.join("  ")).unwrap();
        }
        out
    }
}

pub fn fit_lda<T: Real>(
    docs: &[BowDocument],
    dictionary: &Dictionary,
    config: &LdaConfig,
) -> Result<TopicModel<T>> {
    let k_topics = config.topics;
    let alpha = config.alpha();
    let beta = config.beta;
    if k_topics == 0 {
        return Err(Error::Config("LDA needs at least one topic".into()));
    }
    if config.iterations == 0 {
        return Err(Error::Config("LDA needs at least one iteration".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!(
            "LDA smoothing must be positive (alpha {alpha}, beta {beta})"
        )));
    }
    if docs.is_empty() {
        return Err(Error::Contract("LDA needs at least one document".into()));
    }
    let v = dictionary.len();
    if v == 0 {
        return Err(Error::Contract("LDA vocabulary is empty".into()));
    }
    if let Some(bad) = docs
        .iter()
        .flat_map(|d| d.counts.keys())
        .find(|&&id| id as usize >= v)
    {
        return Err(Error::Contract(format!(
            "word id {bad} outside vocabulary of {v}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Flattened token stream: (doc, word) in document order, word ids in
    // ascending order within a document.
    let mut tokens: Vec<(usize, usize)> = Vec::new();
    for (d, doc) in docs.iter().enumerate() {
        for (&w, &c) in &doc.counts {
            tokens.extend(std::iter::repeat_n((d, w as usize), c as usize));
        }
    }

    let mut n_dk = vec![0u32; docs.len() * k_topics];
    let mut n_kw = vec![0u32; k_topics * v];
    let mut n_k = vec![0u32; k_topics];
    let mut z = Vec::with_capacity(tokens.len());
    for &(d, w) in &tokens {
        let k = rng.random_range(0..k_topics);
        z.push(k);
        n_dk[d * k_topics + k] += 1;
        n_kw[k * v + w] += 1;
        n_k[k] += 1;
    }

    let v_beta = v as f64 * beta;
    let mut weights = vec![0.0f64; k_topics];
    for _ in 0..config.iterations {
        for (i, &(d, w)) in tokens.iter().enumerate() {
            let old = z[i];
            n_dk[d * k_topics + old] -= 1;
            n_kw[old * v + w] -= 1;
            n_k[old] -= 1;

            let mut total = 0.0;
            for (k, weight) in weights.iter_mut().enumerate() {
                let p = (n_dk[d * k_topics + k] as f64 + alpha) * (n_kw[k * v + w] as f64 + beta)
                    / (n_k[k] as f64 + v_beta);
                total += p;
                *weight = total;
            }
            let u = rng.random::<f64>() * total;
            let new = weights.iter().position(|&c| u < c).unwrap_or(k_topics - 1);

            z[i] = new;
            n_dk[d * k_topics + new] += 1;
            n_kw[new * v + w] += 1;
            n_k[new] += 1;
        }
    }

    let beta_t = T::from_f64_lossy(beta);
    let v_beta_t = T::from_usize_lossy(v) * beta_t;
    let phi = (0..k_topics)
        .map(|k| {
            let denom = T::from_usize_lossy(n_k[k] as usize) + v_beta_t;
            (0..v)
                .map(|w| (T::from_usize_lossy(n_kw[k * v + w] as usize) + beta_t) / denom)
                .collect()
        })
        .collect();

    Ok(TopicModel {
        alpha,
        beta,
        seed: config.seed,
        words: dictionary.words().to_vec(),
        phi,
    })
}

/// Words that are top words of some topic, each with its largest
/// probability among those topics, ordered by word id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicFeatureVocab<T> {
    pub entries: Vec<(String, T)>,
}

impl<T: Real> TopicFeatureVocab<T> {
    pub fn from_model(model: &TopicModel<T>, top_n: usize) -> Self {
        let mut best: BTreeMap<usize, T> = BTreeMap::new();
        for k in 0..model.topics() {
            for (id, p) in model.top_word_ids(k, top_n).expect("topic in range") {
                best.entry(id)
                    .and_modify(|cur| {
                        if p > *cur {
                            *cur = p;
                        }
                    })
                    .or_insert(p);
            }
        }
        TopicFeatureVocab {
            entries: best
                .into_iter()
                .map(|(id, p)| (model.words[id].clone(), p))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.iter().any(|(w, _)| w == word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(w, _)| w.as_str())
    }
}

/// Slot `i` holds the score of vocabulary word `i` when it occurs in the
/// sentence, zero otherwise. Repeated occurrences count once.
pub fn topic_feature_vector<T: Real>(tokens: &[String], vocab: &TopicFeatureVocab<T>) -> Vec<T> {
    let present: std::collections::HashSet<&str> = tokens.iter().map(String::as_str).collect();
    vocab
        .entries
        .iter()
        .map(|(w, s)| {
            if present.contains(w.as_str()) {
                *s
            } else {
                T::zero()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(words: &[&str]) -> TokenList {
        TokenList::new(words.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn dictionary_first_occurrence_order() {
        let d = build_dictionary(&[tl(&["a", "b"]), tl(&["b", "c"])]);
        assert_eq!(d.words(), &["a", "b", "c"]);
        assert_eq!(d.id("c"), Some(2));
        assert!(build_dictionary(&[]).is_empty());
        assert_eq!(build_dictionary(&[tl(&["a", "a", "a"])]).len(), 1);
    }

    #[test]
    fn doc2bow_counts() {
        let d = build_dictionary(&[tl(&["a", "b"])]);
        let bow = d.doc2bow(&tl(&["b", "b", "x", "a"]));
        assert_eq!(bow.counts, BTreeMap::from([(0, 1), (1, 2)]));
        assert_eq!(bow.len(), 3);
    }

    fn corpus(texts: &[&[&str]]) -> (Dictionary, Vec<BowDocument>) {
        let docs: Vec<TokenList> = texts.iter().map(|t| tl(t)).collect();
        let dict = build_dictionary(&docs);
        let bows = docs.iter().map(|d| dict.doc2bow(d)).collect();
        (dict, bows)
    }

    #[test]
    fn single_topic_is_smoothed_frequency() {
        let (dict, bows) = corpus(&[&["tax", "tax", "wall"], &["tax", "jobs"], &["jobs", "tax"]]);
        let cfg = LdaConfig {
            topics: 1,
            iterations: 3,
            ..Default::default()
        };
        let m: TopicModel<f64> = fit_lda(&bows, &dict, &cfg).unwrap();
        let total = 7.0;
        let expected = [4.0, 1.0, 2.0].map(|c| (c + 0.01) / (total + 3.0 * 0.01));
        for (got, want) in m.phi[0].iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        let top = m.top_words(0, 2).unwrap();
        assert_eq!(top[0].0, "tax");
        assert_eq!(top[1].0, "jobs");
    }

    #[test]
    fn top_words_edges() {
        let m = TopicModel {
            alpha: 1.0,
            beta: 0.1,
            seed: 0,
            words: vec!["x".into(), "y".into(), "z".into()],
            phi: vec![vec![0.25f64, 0.5, 0.25]],
        };
        assert!(m.top_words(0, 0).unwrap().is_empty());
        let all = m.top_words(0, 10).unwrap();
        assert_eq!(
            all.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>(),
            vec!["y", "x", "z"]
        );
        assert!(m.top_words(1, 1).is_err());
    }

    #[test]
    fn fit_errors() {
        let (dict, bows) = corpus(&[&["a"]]);
        let bad_k = LdaConfig {
            topics: 0,
            ..Default::default()
        };
        assert!(matches!(
            fit_lda::<f64>(&bows, &dict, &bad_k),
            Err(Error::Config(_))
        ));
        let bad_iter = LdaConfig {
            iterations: 0,
            ..Default::default()
        };
        assert!(matches!(
            fit_lda::<f64>(&bows, &dict, &bad_iter),
            Err(Error::Config(_))
        ));
        let empty = Dictionary::default();
        assert!(matches!(
            fit_lda::<f64>(&[BowDocument::default()], &empty, &LdaConfig::default()),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            fit_lda::<f64>(&[], &dict, &LdaConfig::default()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn rows_sum_to_one_and_fit_is_reproducible() {
        let (dict, bows) = corpus(&[
            &["a", "b", "c", "a"],
            &["d", "e", "d"],
            &["a", "e", "f", "g"],
            &["g", "g", "b"],
        ]);
        let cfg = LdaConfig {
            topics: 3,
            iterations: 50,
            seed: 11,
            ..Default::default()
        };
        let m1: TopicModel<f64> = fit_lda(&bows, &dict, &cfg).unwrap();
        let m2: TopicModel<f64> = fit_lda(&bows, &dict, &cfg).unwrap();
        assert_eq!(m1, m2);
        for row in &m1.phi {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p > 0.0));
        }
        let m32: TopicModel<f32> = fit_lda(&bows, &dict, &cfg).unwrap();
        assert_eq!(m32.topics(), 3);
    }

    #[test]
    fn vocab_keeps_max_score_and_word_order() {
        let m = TopicModel {
            alpha: 1.0,
            beta: 0.1,
            seed: 0,
            words: vec!["w0".into(), "w1".into(), "w2".into(), "w3".into()],
            phi: vec![vec![0.1f64, 0.2, 0.3, 0.4], vec![0.05, 0.05, 0.5, 0.4]],
        };
        let vocab = TopicFeatureVocab::from_model(&m, 2);
        assert_eq!(
            vocab.entries,
            vec![("w2".to_string(), 0.5), ("w3".to_string(), 0.4)]
        );
    }

    #[test]
    fn feature_vector_presence() {
        let vocab = TopicFeatureVocab {
            entries: vec![
                ("a".to_string(), 0.1f64),
                ("b".to_string(), 0.2),
                ("c".to_string(), 0.3),
                ("d".to_string(), 0.4),
            ],
        };
        assert_eq!(topic_feature_vector(&tl(&["x", "y"]), &vocab), vec![0.0; 4]);
        assert_eq!(
            topic_feature_vector(&tl(&["x", "d"]), &vocab),
            vec![0.0, 0.0, 0.0, 0.4]
        );
        assert_eq!(
            topic_feature_vector(&tl(&["b", "b", "b"]), &vocab),
            topic_feature_vector(&tl(&["b"]), &vocab)
        );
    }
}
