//! Training-set expansion by swapping nouns and adjectives for their nearest
//! neighbours in a word-vector store.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::{Debate, SentenceRecord};
use crate::embeddings::VectorStore;
use crate::error::{Error, Result};
use crate::scalar::cosine;
use crate::textproc::{split_words, Stoplist, TokenList, Tokenizer};

pub const DEFAULT_MIN_SIM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PosTag {
    Noun,
    Adj,
    Other,
}

impl PosTag {
    pub fn is_content(self) -> bool {
        matches!(self, PosTag::Noun | PosTag::Adj)
    }
}

impl FromStr for PosTag {
    type Err = Error;

    /// Coarse tags (`NOUN`, `ADJ`, `OTHER`) or Penn Treebank tags.
    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        Ok(match up.as_str() {
            "NOUN" | "NN" | "NNS" | "NNP" | "NNPS" | "PROPN" => PosTag::Noun,
            "ADJ" | "JJ" | "JJR" | "JJS" => PosTag::Adj,
            "" => return Err(Error::Contract("empty POS tag".into())),
            _ => PosTag::Other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosTaggedSentence {
    pub tokens: TokenList,
    pub tags: Vec<PosTag>,
}

/// Externally produced tags keyed by (debate id, line number). File rows are
/// `debate_id \t line_number \t space-joined tags`.
#[derive(Debug, Clone, Default)]
pub struct SidecarTags {
    rows: HashMap<(String, u32), Vec<PosTag>>,
}

impl SidecarTags {
    pub fn parse(content: &str, origin: &Path) -> Result<Self> {
        let mut rows = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    "expected 3 tab-separated fields",
                ));
            }
            let line_number = fields[1].trim().parse().map_err(|_| {
                Error::parse(
                    origin,
                    idx + 1,
                    format!("invalid line number {:?}", fields[1]),
                )
            })?;
            let tags = fields[2]
                .split_whitespace()
                .map(PosTag::from_str)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::parse(origin, idx + 1, e.to_string()))?;
            rows.insert((fields[0].to_string(), line_number), tags);
        }
        Ok(SidecarTags { rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, path)
    }

    pub fn insert(&mut self, debate_id: &str, line_number: u32, tags: Vec<PosTag>) {
        self.rows.insert((debate_id.to_string(), line_number), tags);
    }

    pub fn get(&self, debate_id: &str, line_number: u32) -> Option<&[PosTag]> {
        self.rows
            .get(&(debate_id.to_string(), line_number))
            .map(Vec::as_slice)
    }
}

const NOUNS: &[&str] = &[
    "america",
    "country",
    "people",
    "money",
    "job",
    "jobs",
    "tax",
    "wall",
    "border",
    "president",
    "government",
    "war",
    "economy",
    "world",
    "year",
    "years",
    "percent",
    "dollars",
    "million",
    "billion",
    "state",
    "states",
    "plan",
    "deal",
    "law",
    "health",
    "care",
    "trade",
    "school",
    "police",
    "family",
    "families",
    "business",
    "company",
    "companies",
    "military",
    "city",
];

const ADJECTIVES: &[&str] = &[
    "good", "bad", "great", "big", "small", "new", "old", "high", "low", "strong", "weak", "rich",
    "poor", "american", "national", "federal", "economic", "huge", "terrible", "best", "worst",
    "real", "true", "false", "free", "safe", "illegal", "legal", "many", "few",
];

const NOUN_SUFFIXES: &[&str] = &[
    "tion", "sion", "ment", "ness", "ity", "ship", "ism", "ist", "ance", "ence", "es", "s",
];

const ADJ_SUFFIXES: &[&str] = &[
    "ous", "ful", "ive", "able", "ible", "ical", "al", "ic", "less", "ish",
];

/// Lexicon-plus-suffix tagger for running without external annotations.
#[derive(Debug, Clone, Default)]
pub struct FallbackTagger {
    stoplist: Stoplist,
}

impl FallbackTagger {
    pub fn new(stoplist: Stoplist) -> Self {
        FallbackTagger { stoplist }
    }

    pub fn tag(&self, token: &str) -> PosTag {
        if self.stoplist.contains(token) || token.chars().any(|c| c.is_numeric()) {
            return PosTag::Other;
        }
        if NOUNS.contains(&token) {
            return PosTag::Noun;
        }
        if ADJECTIVES.contains(&token) {
            return PosTag::Adj;
        }
        if token.chars().count() < 4 {
            return PosTag::Other;
        }
        if ADJ_SUFFIXES.iter().any(|s| token.ends_with(s)) {
            return PosTag::Adj;
        }
        // "ss" words (e.g. "congress") are nouns too, but "less" and "ness"
        // are handled above.
        if NOUN_SUFFIXES.iter().any(|s| token.ends_with(s)) {
            return PosTag::Noun;
        }
        PosTag::Other
    }
}

pub enum TagSource<'a> {
    Sidecar(&'a SidecarTags),
    Fallback(&'a FallbackTagger),
}

pub fn tag_tokens(
    tokens: TokenList,
    source: &TagSource<'_>,
    debate_id: &str,
    line_number: u32,
) -> Result<PosTaggedSentence> {
    let tags = match source {
        TagSource::Fallback(tagger) => tokens.iter().map(|t| tagger.tag(t)).collect(),
        TagSource::Sidecar(sidecar) => {
            let tags =
                sidecar
                    .get(debate_id, line_number)
                    .ok_or_else(|| Error::MissingAnnotation {
                        debate_id: debate_id.to_string(),
                        line_number,
                    })?;
            if tags.len() != tokens.len() {
                return Err(Error::Contract(format!(
                    "{debate_id} line {line_number}: {} tags for {} tokens",
                    tags.len(),
                    tokens.len()
                )));
            }
            tags.to_vec()
        }
    };
    Ok(PosTaggedSentence { tokens, tags })
}

/// Stored words other than `word` that are single tokens, most similar
/// first; ties in similarity by word.
fn neighbours(word: &str, store: &VectorStore) -> Vec<(String, f64)> {
    let Some(query) = store.get(word) else {
        return Vec::new();
    };
    let query: Vec<f64> = query.iter().map(|&x| f64::from(x)).collect();
    let mut out: Vec<(String, f64)> = store
        .iter()
        .filter(|(k, _)| *k != word && split_words(k) == [*k])
        .map(|(k, v)| {
            let v: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
            (k.to_string(), cosine(&query, &v))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

fn augment_with_rank(
    s: &PosTaggedSentence,
    store: &VectorStore,
    min_sim: f64,
    rank: usize,
    cache: &mut HashMap<String, Vec<(String, f64)>>,
) -> Option<TokenList> {
    let mut replaced = 0;
    let mut out = Vec::with_capacity(s.tokens.len());
    for (token, tag) in s.tokens.iter().zip(&s.tags) {
        let swap = if tag.is_content() {
            let list = cache
                .entry(token.clone())
                .or_insert_with(|| neighbours(token, store));
            list.get(rank)
                .filter(|(_, sim)| *sim >= min_sim)
                .map(|(w, _)| w.clone())
        } else {
            None
        };
        match swap {
            Some(w) => {
                replaced += 1;
                out.push(w);
            }
            None => out.push(token.clone()),
        }
    }
    (replaced > 0).then(|| TokenList::new(out).expect("neighbours are single tokens"))
}

/// Replaces each noun/adjective that has a stored neighbour with similarity
/// at least `min_sim`. `None` when nothing was replaced.
pub fn augment_sentence(
    s: &PosTaggedSentence,
    store: &VectorStore,
    min_sim: f64,
) -> Option<TokenList> {
    augment_with_rank(s, store, min_sim, 0, &mut HashMap::new())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentedRecord {
    pub record: SentenceRecord,
    /// Line number of the sentence this copy was derived from.
    pub source_line: u32,
    /// 0 for the nearest-neighbour copy, 1 for the second nearest, ...
    pub copy: usize,
}

/// Up to `max_copies` augmented records per original; copy `c` uses each
/// word's `c+1`-th nearest neighbour. New records get line numbers after the
/// debate's last line, in source order.
pub fn augment_corpus(
    debates: &[Debate],
    tokenizer: &Tokenizer,
    source: &TagSource<'_>,
    store: &VectorStore,
    min_sim: f64,
    max_copies: usize,
) -> Result<Vec<AugmentedRecord>> {
    let mut out = Vec::new();
    let mut cache = HashMap::new();
    for debate in debates {
        let mut next_line = debate.max_line_number();
        for r in &debate.records {
            if r.label.is_none() {
                return Err(Error::Contract(format!(
                    "augmentation needs labels; {} line {} is unlabeled",
                    r.debate_id, r.line_number
                )));
            }
            if max_copies == 0 {
                continue;
            }
            let tagged = tag_tokens(
                tokenizer.tokenize(&r.text, false),
                source,
                &r.debate_id,
                r.line_number,
            )?;
            for copy in 0..max_copies {
                let Some(tokens) = augment_with_rank(&tagged, store, min_sim, copy, &mut cache)
                else {
                    break;
                };
                next_line += 1;
                out.push(AugmentedRecord {
                    record: SentenceRecord {
                        debate_id: r.debate_id.clone(),
                        line_number: next_line,
                        speaker: r.speaker.clone(),
                        text: tokens.join(),
                        label: r.label,
                    },
                    source_line: r.line_number,
                    copy,
                });
            }
        }
    }
    Ok(out)
}

/// The debate with its augmented records appended.
pub fn expand_debate(debate: &Debate, augmented: &[AugmentedRecord]) -> Debate {
    let mut records = debate.records.clone();
    records.extend(
        augmented
            .iter()
            .filter(|a| a.record.debate_id == debate.debate_id)
            .map(|a| a.record.clone()),
    );
    Debate::new(debate.debate_id.clone(), records)
}
