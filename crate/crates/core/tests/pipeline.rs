//! Training and ranking through the library entry points.

use checkworthy::corpus::check_coverage;
use checkworthy::embeddings::FallbackEmbedder;
use checkworthy::pipeline::{ablate, rank_debate, train, train_and_evaluate, Resources};
use checkworthy::synth::{generate_corpus, SynthConfig};
use checkworthy::topics::LdaConfig;
use checkworthy::{Debate, Error, FeatureSet, PipelineSettings, RerankRule, SentenceRecord};

fn settings(blocks: &str) -> PipelineSettings {
    PipelineSettings {
        blocks: blocks.parse().unwrap(),
        bigram_threshold: 4,
        lda: LdaConfig {
            topics: 5,
            iterations: 60,
            ..Default::default()
        },
        ..Default::default()
    }
    .with_seed(17)
}

fn corpus(seed: u64) -> Vec<Debate> {
    generate_corpus(&SynthConfig {
        debates: 3,
        sentences: 50,
        seed,
        ..Default::default()
    })
}

#[test]
fn manifest_length_is_the_sum_of_block_sizes() {
    let embedder = FallbackEmbedder::new(8);
    let out = train(
        &corpus(1),
        &settings("sbert,sf,tmf,bigrams"),
        &Resources::default(),
        Some(&embedder),
    )
    .unwrap();
    let vocab = out.bundle.extractors.topic_vocab.as_ref().unwrap().len();
    assert!(vocab > 0);
    assert_eq!(out.bundle.model.manifest.len(), 8 + 3 + vocab + 2);
    let names: Vec<&str> = out.block_dims.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["sbert", "sf", "tmf", "bigrams"]);

    let sf = train(&corpus(1), &settings("sf"), &Resources::default(), None).unwrap();
    assert_eq!(sf.bundle.model.manifest.len(), 3);
}

#[test]
fn same_seed_gives_byte_identical_bundles() {
    let embedder = FallbackEmbedder::new(16);
    let s = settings("sbert,sf,tmf,bigrams");
    let a = train(&corpus(2), &s, &Resources::default(), Some(&embedder)).unwrap();
    let b = train(&corpus(2), &s, &Resources::default(), Some(&embedder)).unwrap();
    assert_eq!(a.bundle.to_bytes().unwrap(), b.bundle.to_bytes().unwrap());
}

#[test]
fn rankings_cover_every_line_and_rules_push_matches_last() {
    let train_set = corpus(3);
    let out = train(
        &train_set,
        &settings("sf,tmf,bigrams"),
        &Resources::default(),
        None,
    )
    .unwrap();
    let test = &corpus(4)[0];
    let plain = rank_debate(&out.bundle, test, &[], None).unwrap();
    check_coverage(test, &plain).unwrap();

    // Append one short sentence and check the short-sentence rule sinks it.
    let mut records = test.records.clone();
    let line = test.max_line_number() + 1;
    records.push(SentenceRecord {
        debate_id: test.debate_id.clone(),
        line_number: line,
        speaker: "A".into(),
        text: "Taxes 2019.".into(),
        label: Some(false),
    });
    let extended = Debate::new(test.debate_id.clone(), records);
    let rules = [RerankRule::ShortSentence { min_tokens: 3 }];
    let ranked = rank_debate(&out.bundle, &extended, &rules, None).unwrap();
    let min_other = ranked
        .iter()
        .filter(|e| e.line_number != line)
        .map(|e| e.score)
        .fold(f64::INFINITY, f64::min);
    let demoted = ranked.iter().find(|e| e.line_number == line).unwrap();
    assert!(demoted.score < min_other);
}

#[test]
fn embedding_block_without_backend_is_rejected() {
    let err = train(
        &corpus(5),
        &settings("sbert,sf"),
        &Resources::default(),
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err:?}");
}

#[test]
fn ranking_with_a_different_dimension_is_a_contract_error() {
    let out = train(
        &corpus(6),
        &settings("sbert"),
        &Resources::default(),
        Some(&FallbackEmbedder::new(8)),
    )
    .unwrap();
    let err = rank_debate(
        &out.bundle,
        &corpus(7)[0],
        &[],
        Some(&FallbackEmbedder::new(9)),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Contract(_)), "{err:?}");
}

#[test]
fn ablation_rows_follow_subsets() {
    let train_set = corpus(8);
    let test_set = corpus(9);
    let s = settings("sf");
    let subsets: Vec<FeatureSet> = ["sf", "sf"].iter().map(|x| x.parse().unwrap()).collect();
    let table = ablate(
        &train_set,
        &test_set,
        &subsets,
        &s,
        &Resources::default(),
        None,
    )
    .unwrap();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.rows[0].values, table.rows[1].values);

    let one = ablate(
        &train_set,
        &test_set,
        &subsets[..1],
        &s,
        &Resources::default(),
        None,
    )
    .unwrap();
    assert_eq!(one.rows.len(), 1);

    let (_, _, report) =
        train_and_evaluate(&train_set, &test_set, &s, &Resources::default(), None).unwrap();
    assert_eq!(table.rows[0].values, report.values());
}
