//! Tokenization, stopword filtering and discriminative bigram selection.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Debate;
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../resources/stopwords.txt");

/// Bigrams must reach this many occurrences in one class to be selected.
pub const DEFAULT_BIGRAM_THRESHOLD: usize = 50;

/// Lowercase word tokens. No token is empty or contains whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::Contract(format!("invalid token {bad:?}")));
        }
        Ok(TokenList(tokens))
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenList {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '\u{02BC}')
}

/// Splits `text` into maximal runs of letters and digits, lowercased.
/// Apostrophes inside a word are dropped, so "don't" becomes "dont".
pub fn split_words(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            // Some lowercase mappings emit combining marks; keep only the
            // alphanumeric part so tokenizing a token is a no-op.
            current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
        } else if is_apostrophe(c) {
            continue;
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stoplist {
    words: BTreeSet<String>,
}

impl Default for Stoplist {
    fn default() -> Self {
        Stoplist::parse(DEFAULT_STOPWORDS)
    }
}

impl Stoplist {
    pub fn empty() -> Self {
        Stoplist {
            words: BTreeSet::new(),
        }
    }

    /// One word per line; blank lines and `#` comments are ignored. Entries
    /// are normalized with the tokenizer so "Don't" matches the token "dont".
    pub fn parse(content: &str) -> Self {
        let words = content
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .flat_map(split_words)
            .collect();
        Stoplist { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Stoplist::parse(&content))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stoplist {
            words: words
                .into_iter()
                .flat_map(|w| split_words(w.as_ref()))
                .collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    pub stoplist: Stoplist,
}

impl Tokenizer {
    pub fn new(stoplist: Stoplist) -> Self {
        Tokenizer { stoplist }
    }

    pub fn tokenize(&self, text: &str, drop_stopwords: bool) -> TokenList {
        let mut tokens = split_words(text);
        if drop_stopwords {
            tokens.retain(|t| !self.stoplist.contains(t));
        }
        TokenList(tokens)
    }
}

pub type Bigram = (String, String);

/// Adjacent token pairs, in order, duplicates kept.
pub fn extract_bigrams(tokens: &[String]) -> Vec<Bigram> {
    tokens
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigramSide {
    CheckworthyOnly,
    NonCheckworthyOnly,
}

/// Bigrams that occur often enough in exactly one label class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigramSet {
    pub threshold: usize,
    #[serde(with = "bigram_entries")]
    pub bigrams: BTreeMap<Bigram, BigramSide>,
}

impl BigramSet {
    pub fn len(&self) -> usize {
        self.bigrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bigrams.is_empty()
    }

    pub fn side(&self, a: &str, b: &str) -> Option<BigramSide> {
        self.bigrams.get(&(a.to_string(), b.to_string())).copied()
    }

    /// Occurrences of (check-worthy-only, non-check-worthy-only) bigrams in
    /// a token sequence.
    pub fn hits(&self, tokens: &[String]) -> (usize, usize) {
        let mut cw = 0;
        let mut ncw = 0;
        for w in tokens.windows(2) {
            match self.side(&w[0], &w[1]) {
                Some(BigramSide::CheckworthyOnly) => cw += 1,
                Some(BigramSide::NonCheckworthyOnly) => ncw += 1,
                None => {}
            }
        }
        (cw, ncw)
    }
}

mod bigram_entries {
    use super::{Bigram, BigramSide};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<Bigram, BigramSide>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let entries: Vec<(&str, &str, BigramSide)> = map
            .iter()
            .map(|((a, b), side)| (a.as_str(), b.as_str(), *side))
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Bigram, BigramSide>, D::Error> {
        let entries: Vec<(String, String, BigramSide)> = Vec::deserialize(d)?;
        Ok(entries.into_iter().map(|(a, b, s)| ((a, b), s)).collect())
    }
}

/// Selects bigrams occurring at least `threshold` times in one label class
/// and never in the other. Counts are over raw (not stopword-filtered)
/// lowercased tokens.
pub fn select_discriminative_bigrams(debates: &[Debate], threshold: usize) -> Result<BigramSet> {
    if threshold == 0 {
        return Err(Error::Contract("bigram threshold must be positive".into()));
    }
    let mut counts: BTreeMap<Bigram, [usize; 2]> = BTreeMap::new();
    for debate in debates {
        for r in &debate.records {
            let label = r.label.ok_or_else(|| {
                Error::Contract(format!(
                    "bigram selection needs labels; {} line {} is unlabeled",
                    r.debate_id, r.line_number
                ))
            })?;
            for bigram in extract_bigrams(&split_words(&r.text)) {
                counts.entry(bigram).or_default()[usize::from(label)] += 1;
            }
        }
    }
    let bigrams = counts
        .into_iter()
        .filter_map(|(bigram, [neg, pos])| match (neg, pos) {
            (0, p) if p >= threshold => Some((bigram, BigramSide::CheckworthyOnly)),
            (n, 0) if n >= threshold => Some((bigram, BigramSide::NonCheckworthyOnly)),
            _ => None,
        })
        .collect();
    Ok(BigramSet { threshold, bigrams })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SentenceRecord;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        let t = Tokenizer::default();
        assert_eq!(
            *t.tokenize("Thank you, America!", false),
            toks(&["thank", "you", "america"])[..]
        );
        assert_eq!(
            *t.tokenize("Thank you, America!", true),
            toks(&["thank", "america"])[..]
        );
        assert!(t.tokenize("", true).is_empty());
        assert_eq!(
            *t.tokenize("I don't know 42%", false),
            toks(&["i", "dont", "know", "42"])[..]
        );
        assert_eq!(*t.tokenize("Café—Über", false), toks(&["café", "über"])[..]);
    }

    #[test]
    fn stoplist_file_format() {
        let s = Stoplist::parse("# comment\nThe\n\n  don't \n");
        assert_eq!(s.words().collect::<Vec<_>>(), vec!["dont", "the"]);
        assert!(Stoplist::default().contains("you"));
        assert!(Stoplist::default().len() > 100);
    }

    #[test]
    fn bigram_examples() {
        assert_eq!(
            extract_bigrams(&toks(&["a", "b", "c"])),
            vec![("a".into(), "b".into()), ("b".into(), "c".into())]
        );
        assert!(extract_bigrams(&toks(&["a"])).is_empty());
        assert!(extract_bigrams(&[]).is_empty());
        assert_eq!(extract_bigrams(&toks(&["a", "a", "a"])).len(), 2);
    }

    fn record(line: u32, text: &str, label: bool) -> SentenceRecord {
        SentenceRecord {
            debate_id: "d".into(),
            line_number: line,
            speaker: String::new(),
            text: text.into(),
            label: Some(label),
        }
    }

    /// Debate where "build wall" appears `cw` times in positives and `ncw`
    /// times in negatives, plus filler.
    fn fixture(cw: usize, ncw: usize) -> Debate {
        let mut records = Vec::new();
        let mut line = 1;
        for _ in 0..cw {
            records.push(record(line, "We will build wall now", true));
            line += 1;
        }
        for _ in 0..ncw {
            records.push(record(line, "They build wall too", false));
            line += 1;
        }
        records.push(record(line, "thank you", false));
        Debate::new("d", records)
    }

    /// Exhaustive per-class occurrence count, independent of the selector.
    fn brute_counts(debate: &Debate, a: &str, b: &str) -> [usize; 2] {
        let mut out = [0, 0];
        for r in &debate.records {
            let t = split_words(&r.text);
            for i in 0..t.len().saturating_sub(1) {
                if t[i] == a && t[i + 1] == b {
                    out[usize::from(r.label.unwrap())] += 1;
                }
            }
        }
        out
    }

    #[test]
    fn selection_threshold_and_exclusivity() {
        let d = fixture(50, 0);
        let set = select_discriminative_bigrams(&[d], 50).unwrap();
        assert_eq!(set.side("build", "wall"), Some(BigramSide::CheckworthyOnly));

        let d = fixture(49, 0);
        let set = select_discriminative_bigrams(&[d], 50).unwrap();
        assert_eq!(set.side("build", "wall"), None);

        let d = fixture(60, 1);
        assert_eq!(brute_counts(&d, "build", "wall"), [1, 60]);
        let set = select_discriminative_bigrams(&[d], 50).unwrap();
        assert_eq!(set.side("build", "wall"), None);
        // "will build" is exclusive to positives with 60 hits.
        assert_eq!(set.side("will", "build"), Some(BigramSide::CheckworthyOnly));
    }

    #[test]
    fn negative_side_and_hits() {
        let d = fixture(0, 3);
        let set = select_discriminative_bigrams(&[d], 3).unwrap();
        assert_eq!(
            set.side("they", "build"),
            Some(BigramSide::NonCheckworthyOnly)
        );
        assert_eq!(set.hits(&toks(&["they", "build", "wall", "too"])), (0, 3));
    }

    #[test]
    fn selection_needs_labels() {
        let mut d = fixture(1, 0);
        d.records[0].label = None;
        assert!(matches!(
            select_discriminative_bigrams(&[d], 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn bigram_set_serde() {
        let set = select_discriminative_bigrams(&[fixture(3, 2)], 2).unwrap();
        let json = serde_json::to_string(&set).unwrap();
        let back: BigramSet = serde_json::from_str(&json).unwrap();
        assert_eq!(set, back);
    }

    fn arb_corpus() -> impl Strategy<Value = Debate> {
        let sentence = prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..8);
        prop::collection::vec((sentence, any::<bool>()), 1..40).prop_map(|rows| {
            let records = rows
                .into_iter()
                .enumerate()
                .map(|(i, (words, label))| record(i as u32 + 1, &words.join(" "), label))
                .collect();
            Debate::new("d", records)
        })
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,60}") {
            let t = Tokenizer::new(Stoplist::empty());
            let once = t.tokenize(&text, false);
            let twice = t.tokenize(&once.join(), false);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tokens_are_valid(text in "\\PC{0,60}") {
            let tokens = Tokenizer::default().tokenize(&text, true);
            prop_assert!(TokenList::new(tokens.into_inner()).is_ok());
        }

        #[test]
        fn bigram_count_is_len_minus_one(words in prop::collection::vec("[a-z]{1,3}", 0..10)) {
            prop_assert_eq!(extract_bigrams(&words).len(), words.len().saturating_sub(1));
        }

        #[test]
        fn selection_is_monotone_and_exclusive(d in arb_corpus(), t1 in 1usize..6, dt in 0usize..4) {
            let t2 = t1 + dt;
            let low = select_discriminative_bigrams(std::slice::from_ref(&d), t1).unwrap();
            let high = select_discriminative_bigrams(std::slice::from_ref(&d), t2).unwrap();
            for (bigram, side) in &high.bigrams {
                prop_assert_eq!(low.bigrams.get(bigram), Some(side));
            }
            for ((a, b), side) in &low.bigrams {
                let [neg, pos] = brute_counts(&d, a, b);
                match side {
                    BigramSide::CheckworthyOnly => prop_assert!(neg == 0 && pos >= t1),
                    BigramSide::NonCheckworthyOnly => prop_assert!(pos == 0 && neg >= t1),
                }
            }
        }
    }
}
