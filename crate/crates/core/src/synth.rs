//! Seeded synthetic debates for tests and demos. Check-worthy sentences carry
//! numbers and words from a dedicated claim vocabulary; the rest is chatter.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_debate_tsv, Debate, SentenceRecord};
use crate::error::{Error, Result};

pub const CLAIM_WORDS: [&str; 20] = [
    "unemployment",
    "deficit",
    "billion",
    "percent",
    "taxes",
    "immigrants",
    "tariffs",
    "medicare",
    "pension",
    "revenue",
    "inflation",
    "wages",
    "manufacturing",
    "exports",
    "borders",
    "healthcare",
    "budget",
    "spending",
    "debt",
    "factories",
];

const CHATTER_WORDS: [&str; 20] = [
    "thank",
    "folks",
    "tonight",
    "wonderful",
    "everybody",
    "audience",
    "question",
    "moderator",
    "applause",
    "friends",
    "great",
    "honor",
    "really",
    "believe",
    "going",
    "know",
    "think",
    "look",
    "said",
    "nice",
];

const FILLER_WORDS: [&str; 12] = [
    "we", "the", "and", "is", "that", "a", "to", "of", "have", "our", "they", "it",
];

const SPEAKERS: [&str; 3] = ["CANDIDATE_A", "CANDIDATE_B", "MODERATOR"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub debates: usize,
    pub sentences: usize,
    /// Probability that a sentence is check-worthy.
    pub positive_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            debates: 5,
            sentences: 100,
            positive_rate: 0.2,
            seed: 0,
        }
    }
}

fn sentence(rng: &mut ChaCha8Rng, positive: bool) -> String {
    let len = rng.random_range(6..=13);
    let mut words: Vec<String> = Vec::with_capacity(len + 2);
    for _ in 0..len {
        let r: f64 = rng.random();
        let pool: &[&str] = if positive && r < 0.45 {
            &CLAIM_WORDS
        } else if !positive && r < 0.45 {
            &CHATTER_WORDS
        } else {
            &FILLER_WORDS
        };
        words.push(pool.choose(rng).unwrap().to_string());
    }
    let numbers = if positive {
        rng.random_range(1..=2)
    } else {
        usize::from(rng.random_bool(0.05))
    };
    for _ in 0..numbers {
        let at = rng.random_range(0..=words.len());
        words.insert(at, rng.random_range(2..2030u32).to_string());
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        text = first.to_uppercase() + &text[1..];
    }
    text.push('.');
    text
}

pub fn generate_corpus(config: &SynthConfig) -> Vec<Debate> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.debates)
        .map(|d| {
            let id = format!("debate_{d:02}");
            let records = (0..config.sentences)
                .map(|i| {
                    let positive = rng.random_bool(config.positive_rate.clamp(0.0, 1.0));
                    SentenceRecord {
                        debate_id: id.clone(),
                        line_number: i as u32 + 1,
                        speaker: SPEAKERS.choose(&mut rng).unwrap().to_string(),
                        text: sentence(&mut rng, positive),
                        label: Some(positive),
                    }
                })
                .collect();
            Debate::new(id, records)
        })
        .collect()
}

/// Writes one labeled `<debate_id>.tsv` per debate into `dir`.
pub fn write_corpus_dir(debates: &[Debate], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for d in debates {
        write_debate_tsv(d, &dir.join(format!("{}.tsv", d.debate_id)), true)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let cfg = SynthConfig {
            debates: 2,
            sentences: 30,
            seed: 9,
            ..Default::default()
        };
        let a = generate_corpus(&cfg);
        assert_eq!(a, generate_corpus(&cfg));
        assert_eq!(a.len(), 2);
        let report = crate::corpus::validate_corpus(&a);
        assert!(report.is_clean());
        assert_eq!(report.sentences, 60);
        assert!(report.positives > 0 && report.negatives > 0);
    }
}
