//! Lexicon-based sentence sentiment as negative/neutral/positive proportions.
//!
//! For a token list, positive mass is the sum of positive valences, negative
//! mass the sum of absolute negative valences, and neutral mass one per token
//! that is missing from the lexicon or has zero valence. The three masses are
//! normalized to proportions. An empty sentence is fully neutral.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAX_VALENCE: f64 = 4.0;

const DEMO_LEXICON: &str = include_str!("../resources/lexicon.tsv");

/// Feature names of the three sentiment slots.
pub const SENTIMENT_FEATURES: [&str; 3] = ["sent_neg", "sent_neu", "sent_pos"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(
    into = "Vec<(String, T)>",
    from = "Vec<(String, T)>",
    bound(
        serialize = "T: Real + Serialize",
        deserialize = "T: Real + Deserialize<'de>"
    )
)]
pub struct SentimentLexicon<T> {
    entries: HashMap<String, T>,
}

impl<T: Real> From<SentimentLexicon<T>> for Vec<(String, T)> {
    fn from(lex: SentimentLexicon<T>) -> Self {
        lex.sorted_entries()
    }
}

impl<T: Real> From<Vec<(String, T)>> for SentimentLexicon<T> {
    fn from(entries: Vec<(String, T)>) -> Self {
        SentimentLexicon {
            entries: entries.into_iter().collect(),
        }
    }
}

impl<T: Real> SentimentLexicon<T> {
    /// Small built-in lexicon for tests and demos.
    pub fn demo() -> Self {
        Self::parse(DEMO_LEXICON, Path::new("<demo lexicon>")).expect("demo lexicon is valid")
    }

    /// `word \t valence` rows; blank lines and `#` comments are skipped. A
    /// later row for the same word overwrites the earlier one.
    pub fn parse(content: &str, origin: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((word, valence)) = line.split_once('\t') else {
                return Err(Error::parse(origin, idx + 1, "expected `word\\tvalence`"));
            };
            let v: f64 = valence.trim().parse().map_err(|_| {
                Error::parse(origin, idx + 1, format!("invalid valence {valence:?}"))
            })?;
            if !v.is_finite() || v.abs() > MAX_VALENCE {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    format!("valence {v} outside [-4, 4]"),
                ));
            }
            entries.insert(word.trim().to_lowercase(), T::from_f64_lossy(v));
        }
        Ok(SentimentLexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, path)
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
    {
        let mut map = HashMap::new();
        for (w, v) in entries {
            let w = w.into().to_lowercase();
            if !v.is_finite() || v.abs() > T::from_f64_lossy(MAX_VALENCE) {
                return Err(Error::Contract(format!(
                    "valence {v} for {w:?} outside [-4, 4]"
                )));
            }
            map.insert(w, v);
        }
        Ok(SentimentLexicon { entries: map })
    }

    pub fn get(&self, word: &str) -> Option<T> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by word.
    pub fn sorted_entries(&self) -> Vec<(String, T)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, &v)| (k.clone(), v)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    /// Same lexicon with every valence negated.
    pub fn negated(&self) -> Self {
        SentimentLexicon {
            entries: self.entries.iter().map(|(k, &v)| (k.clone(), -v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores<T> {
    pub neg: T,
    pub neu: T,
    pub pos: T,
}

impl<T: Real> SentimentScores<T> {
    pub fn neutral() -> Self {
        SentimentScores {
            neg: T::zero(),
            neu: T::one(),
            pos: T::zero(),
        }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.neg, self.neu, self.pos]
    }
}

pub fn score_sentence<T: Real>(
    tokens: &[String],
    lexicon: &SentimentLexicon<T>,
) -> SentimentScores<T> {
    if tokens.is_empty() {
        return SentimentScores::neutral();
    }
    let mut pos = T::zero();
    let mut neg = T::zero();
    let mut neu = T::zero();
    for t in tokens {
        match lexicon.get(t) {
            Some(v) if v > T::zero() => pos = pos + v,
            Some(v) if v < T::zero() => neg = neg - v,
            _ => neu = neu + T::one(),
        }
    }
    // pos + neg is commutative in IEEE arithmetic, so negating the lexicon
    // swaps neg and pos exactly.
    let total = (pos + neg) + neu;
    SentimentScores {
        neg: neg / total,
        neu: neu / total,
        pos: pos / total,
    }
}
