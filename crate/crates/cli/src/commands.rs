use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use checkworthy::augment::{augment_corpus, expand_debate, FallbackTagger, SidecarTags, TagSource};
use checkworthy::corpus::{
    check_coverage, debate_id_for, load_corpus_dir, load_corpus_dir_auto, read_run, tsv_files,
    validate_corpus, write_debate_tsv, write_run,
};
use checkworthy::embeddings::{build_sentence_store, load_vector_file, save_vector_file};
use checkworthy::eval::{format_metric, METRIC_NAMES};
use checkworthy::pipeline::{ablate, evaluate_runs, rank_debate, train};
use checkworthy::ranker::{ModelBundle, RerankRule};
use checkworthy::synth::{generate_corpus, write_corpus_dir, SynthConfig};
use checkworthy::textproc::Tokenizer;
use checkworthy::{Debate, EmbeddingBackend, Error, FeatureBlock, FeatureSet, Result, RunEntry};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::{Cli, Command, EmbedCommand, TopicsCommand};

pub fn run(cli: Cli) -> Result<()> {
    let cfg = PipelineConfig::resolve(&cli.common)?;
    match cli.command {
        Command::Validate { dirs, json } => validate(&dirs, json.as_deref()),
        Command::Train { train_dir, model } => cmd_train(&cfg, train_dir, &model),
        Command::Rank {
            model,
            input_dir,
            out_dir,
            rules,
        } => cmd_rank(&cfg, &model, input_dir, &out_dir, rules.as_deref()),
        Command::Evaluate {
            gold_dir,
            run_dir,
            json,
        } => cmd_evaluate(&gold_dir, &run_dir, json.as_deref()),
        Command::Ablate {
            train_dir,
            test_dir,
            subsets,
            json,
        } => cmd_ablate(&cfg, train_dir, test_dir, &subsets, json.as_deref()),
        Command::Augment {
            train_dir,
            out_dir,
            word_vectors,
            pos_sidecar,
            min_sim,
            max_copies,
        } => {
            let mut aug = cfg.augment.clone();
            aug.word_vectors = word_vectors.or(aug.word_vectors);
            aug.pos_sidecar = pos_sidecar.or(aug.pos_sidecar);
            aug.min_sim = min_sim.unwrap_or(aug.min_sim);
            aug.max_copies = max_copies.unwrap_or(aug.max_copies);
            let cfg = PipelineConfig {
                augment: aug,
                ..cfg
            };
            cmd_augment(&cfg, train_dir, &out_dir)
        }
        Command::Topics {
            action: TopicsCommand::Show { model, top_n },
        } => {
            let bundle = ModelBundle::<f64>::load(&model)?;
            let topics = bundle.extractors.topic_model.as_ref().ok_or_else(|| {
                Error::Contract(format!("{} has no topic block", model.display()))
            })?;
            print!("{}", topics.render_table(top_n));
            Ok(())
        }
        Command::Embed {
            action: EmbedCommand::Cache { dirs, out },
        } => cmd_embed_cache(&cfg, &dirs, &out),
        Command::Synth {
            out_dir,
            debates,
            sentences,
            positive_rate,
        } => {
            let config = SynthConfig {
                debates,
                sentences,
                positive_rate,
                seed: cfg.seed.unwrap_or(0),
            };
            let corpus = generate_corpus(&config);
            write_corpus_dir(&corpus, &out_dir)?;
            println!("wrote {} debates to {}", corpus.len(), out_dir.display());
            Ok(())
        }
    }
}

fn required_dir(flag: Option<PathBuf>, file: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| Error::Config(format!("no {what} given (flag or config file)")))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("cannot serialize report: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn validate(dirs: &[PathBuf], json: Option<&Path>) -> Result<()> {
    let mut debates = Vec::new();
    for d in dirs {
        debates.extend(load_corpus_dir_auto(d)?);
    }
    let report = validate_corpus(&debates);
    print!("{}", report.render());
    if let Some(p) = json {
        write_json(&report, p)?;
    }
    Ok(())
}

fn embedder_for(
    cfg: &PipelineConfig,
    blocks: &FeatureSet,
) -> Result<Option<Box<dyn EmbeddingBackend>>> {
    if blocks.contains(FeatureBlock::Embedding) {
        cfg.embedding.build_backend().map(Some)
    } else {
        Ok(None)
    }
}

fn cmd_train(cfg: &PipelineConfig, train_dir: Option<PathBuf>, model: &Path) -> Result<()> {
    let dir = required_dir(train_dir, &cfg.train_dir, "training directory")?;
    let debates = load_corpus_dir(&dir, true)?;
    let embedder = embedder_for(cfg, &cfg.pipeline.blocks)?;
    let outcome = train(
        &debates,
        &cfg.pipeline,
        &cfg.resources()?,
        embedder.as_deref(),
    )?;
    outcome.bundle.save(model)?;
    println!(
        "trained on {} sentences from {} debates",
        outcome.rows,
        debates.len()
    );
    for (name, len) in &outcome.block_dims {
        println!("  {name:<8} {len}");
    }
    println!("  {:<8} {}", "total", outcome.bundle.model.manifest.len());
    println!("final training MSE: {:.6}", outcome.final_mse);
    println!("model written to {}", model.display());
    Ok(())
}

fn parse_rules(s: &str) -> Result<Vec<RerankRule>> {
    s.split(',')
        .filter(|r| !r.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn cmd_rank(
    cfg: &PipelineConfig,
    model: &Path,
    input_dir: Option<PathBuf>,
    out_dir: &Path,
    rules: Option<&str>,
) -> Result<()> {
    let bundle = ModelBundle::<f64>::load(model)?;
    let rules = match rules {
        Some(s) => parse_rules(s)?,
        None => cfg.pipeline.rules.clone(),
    };
    let dir = required_dir(input_dir, &cfg.test_dir, "input directory")?;
    let debates = load_corpus_dir_auto(&dir)?;
    if debates.is_empty() {
        log::warn!("no transcripts found in {}; nothing ranked", dir.display());
        return Ok(());
    }
    let embedder = embedder_for(cfg, &bundle.extractors.blocks)?;
    if let (Some(e), Some(settings)) = (&embedder, &bundle.extractors.embedding) {
        if e.name() != settings.backend {
            log::warn!(
                "model embeddings came from the {} backend, ranking with {}",
                settings.backend,
                e.name()
            );
        }
    }
    let runs = rank_all(&bundle, &debates, &rules, embedder.as_deref())?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (debate, entries) in debates.iter().zip(&runs) {
        write_run(
            debate,
            entries,
            &out_dir.join(format!("{}.tsv", debate.debate_id)),
        )?;
    }
    println!("wrote {} run files to {}", runs.len(), out_dir.display());
    Ok(())
}

/// Ranks debates on a few worker threads; results come back in input order.
fn rank_all(
    bundle: &ModelBundle<f64>,
    debates: &[Debate],
    rules: &[RerankRule],
    embedder: Option<&dyn EmbeddingBackend>,
) -> Result<Vec<Vec<RunEntry>>> {
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(debates.len())
        .max(1);
    let chunk = debates.len().div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = debates
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|d| rank_debate(bundle, d, rules, embedder))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(debates.len());
        for h in handles {
            out.extend(h.join().expect("ranking worker panicked")?);
        }
        Ok(out)
    })
}

fn cmd_evaluate(gold_dir: &Path, run_dir: &Path, json: Option<&Path>) -> Result<()> {
    let gold = load_corpus_dir(gold_dir, true)?;
    let mut runs = BTreeMap::new();
    for path in tsv_files(run_dir)? {
        runs.insert(debate_id_for(&path), read_run(&path)?);
    }
    let gold_ids: Vec<&str> = gold.iter().map(|d| d.debate_id.as_str()).collect();
    let run_ids: Vec<&str> = runs.keys().map(String::as_str).collect();
    if gold_ids != run_ids {
        return Err(Error::Contract(format!(
            "gold and run file sets differ: gold {gold_ids:?}, runs {run_ids:?}"
        )));
    }
    for d in &gold {
        check_coverage(d, &runs[&d.debate_id])?;
    }
    let report = evaluate_runs(&gold, &runs)?;
    for id in &report.no_relevant {
        log::warn!("{id} has no check-worthy lines; AP and R-P counted as 0");
    }
    let header: Vec<String> = METRIC_NAMES.iter().map(|n| format!("{n:>6}")).collect();
    let row: Vec<String> = report
        .values()
        .iter()
        .map(|&v| format!("{:>6}", format_metric(v)))
        .collect();
    println!("{}", header.join(" "));
    println!("{}", row.join(" "));
    if let Some(p) = json {
        write_json(&report, p)?;
    }
    Ok(())
}

fn cmd_ablate(
    cfg: &PipelineConfig,
    train_dir: Option<PathBuf>,
    test_dir: Option<PathBuf>,
    subsets: &str,
    json: Option<&Path>,
) -> Result<()> {
    let subsets: Vec<FeatureSet> = subsets
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse().map_err(|e: Error| Error::Config(e.to_string())))
        .collect::<Result<_>>()?;
    let train_set = load_corpus_dir(
        &required_dir(train_dir, &cfg.train_dir, "training directory")?,
        true,
    )?;
    let test_set = load_corpus_dir(
        &required_dir(test_dir, &cfg.test_dir, "test directory")?,
        true,
    )?;
    let needs_embedding = subsets.iter().any(|s| s.contains(FeatureBlock::Embedding));
    let embedder = if needs_embedding {
        Some(cfg.embedding.build_backend()?)
    } else {
        None
    };
    let table = ablate(
        &train_set,
        &test_set,
        &subsets,
        &cfg.pipeline,
        &cfg.resources()?,
        embedder.as_deref(),
    )?;
    print!("{}", table.render());
    if let Some(p) = json {
        write_json(&table, p)?;
    }
    Ok(())
}

fn cmd_augment(cfg: &PipelineConfig, train_dir: Option<PathBuf>, out_dir: &Path) -> Result<()> {
    let dir = required_dir(train_dir, &cfg.train_dir, "training directory")?;
    let vectors = cfg
        .augment
        .word_vectors
        .as_ref()
        .ok_or_else(|| Error::Config("augmentation needs a word vector file".into()))?;
    let store = load_vector_file(vectors)?;
    let debates = load_corpus_dir(&dir, true)?;
    let resources = cfg.resources()?;
    let tokenizer = Tokenizer::new(resources.stoplist.clone());
    let sidecar = cfg
        .augment
        .pos_sidecar
        .as_ref()
        .map(|p| SidecarTags::load(p))
        .transpose()?;
    let tagger = FallbackTagger::new(resources.stoplist.clone());
    let source = match &sidecar {
        Some(s) => TagSource::Sidecar(s),
        None => TagSource::Fallback(&tagger),
    };
    let augmented = augment_corpus(
        &debates,
        &tokenizer,
        &source,
        &store,
        cfg.augment.min_sim,
        cfg.augment.max_copies,
    )?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for d in &debates {
        let expanded = expand_debate(d, &augmented);
        write_debate_tsv(
            &expanded,
            &out_dir.join(format!("{}.tsv", d.debate_id)),
            true,
        )?;
    }
    println!(
        "added {} augmented sentences across {} debates in {}",
        augmented.len(),
        debates.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_embed_cache(cfg: &PipelineConfig, dirs: &[PathBuf], out: &Path) -> Result<()> {
    let backend = cfg.embedding.build_backend()?;
    let mut texts = Vec::new();
    for d in dirs {
        for debate in load_corpus_dir_auto(d)? {
            texts.extend(debate.records.into_iter().map(|r| r.text));
        }
    }
    texts.sort();
    texts.dedup();
    let store = build_sentence_store(&texts, backend.as_ref())?;
    save_vector_file(&store, out)?;
    println!(
        "cached {} sentence vectors (D={}) from the {} backend in {}",
        store.len(),
        store.dim(),
        backend.name(),
        out.display()
    );
    Ok(())
}
