//! Demotion rules applied after scoring: sentences matching a rule are moved
//! below every unmatched sentence of the debate.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{sort_run, Debate, RunEntry};
use crate::error::{Error, Result};
use crate::textproc::{BigramSet, Tokenizer};
use crate::topics::TopicFeatureVocab;

/// Spacing between demoted scores of different rule priorities.
pub const DEMOTION_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum RerankRule {
    /// Fewer than `min_tokens` word tokens.
    ShortSentence { min_tokens: usize },
    /// No digit, no topic-vocabulary word and no selected bigram.
    NoInformation,
}

impl RerankRule {
    pub fn name(&self) -> &'static str {
        match self {
            RerankRule::ShortSentence { .. } => "short",
            RerankRule::NoInformation => "no-info",
        }
    }

    pub fn matches(&self, text: &str, ctx: &RuleContext<'_>) -> bool {
        let tokens = ctx.tokenizer.tokenize(text, false);
        match *self {
            RerankRule::ShortSentence { min_tokens } => tokens.len() < min_tokens,
            RerankRule::NoInformation => {
                let has_digit = text.chars().any(|c| c.is_ascii_digit());
                let has_topic_word = ctx
                    .topic_vocab
                    .is_some_and(|v| tokens.iter().any(|t| v.contains(t)));
                let has_bigram = ctx.bigrams.is_some_and(|b| {
                    let (cw, ncw) = b.hits(&tokens);
                    cw + ncw > 0
                });
                !(has_digit || has_topic_word || has_bigram)
            }
        }
    }
}

impl FromStr for RerankRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "short" => Ok(RerankRule::ShortSentence { min_tokens: 3 }),
            "no-info" | "no_info" => Ok(RerankRule::NoInformation),
            other => Err(Error::Config(format!("unknown rerank rule {other:?}"))),
        }
    }
}

pub struct RuleContext<'a> {
    pub tokenizer: &'a Tokenizer,
    pub topic_vocab: Option<&'a TopicFeatureVocab<f64>>,
    pub bigrams: Option<&'a BigramSet>,
}

/// Turns per-sentence scores into a run. A sentence matching rule `p`
/// (first match, zero-based) gets `min_score - 1 - p·ε`, placing it after
/// all unmatched sentences. Order is descending score, then ascending line
/// number.
pub fn apply_rules(
    debate: &Debate,
    scores: &[f64],
    rules: &[RerankRule],
    ctx: &RuleContext<'_>,
) -> Result<Vec<RunEntry>> {
    if scores.len() != debate.len() {
        return Err(Error::Contract(format!(
            "{} scores for {} sentences",
            scores.len(),
            debate.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Contract("scores must be finite".into()));
    }
    let floor = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let mut entries: Vec<RunEntry> = debate
        .records
        .iter()
        .zip(scores)
        .map(|(r, &s)| {
            let score = match rules.iter().position(|rule| rule.matches(&r.text, ctx)) {
                Some(p) => floor - 1.0 - p as f64 * DEMOTION_EPSILON,
                None => s,
            };
            RunEntry::new(r.line_number, score)
        })
        .collect();
    sort_run(&mut entries);
    Ok(entries)
}
