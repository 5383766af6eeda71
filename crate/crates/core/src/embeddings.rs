//! Sentence vectors and word-vector lookups behind interchangeable backends.
//!
//! Three backends share one contract (one vector of length `dim` per input,
//! input order preserved):
//!
//! * [`FallbackEmbedder`]: deterministic pseudo-random unit vectors seeded by
//!   a SHA-256 of the normalized text. Runs offline.
//! * [`StoreBackend`]: lookups in a precomputed [`VectorStore`].
//! * [`HttpBackend`]: `POST /embed` with `{"texts": [...]}`, expecting
//!   `{"vectors": [[...], ...]}`.
//!
//! Vector files are little-endian: magic `CLRK`, `u32` version, `u32`
//! dimension, `u64` record count, then per record a `u16` key length, the
//! UTF-8 key, and `dim` `f32` values.

use std::collections::BTreeMap;
use std::fs;
use std::ops::Deref;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::cosine;

pub const VECTOR_FILE_MAGIC: &[u8; 4] = b"CLRK";
pub const VECTOR_FILE_VERSION: u32 = 1;
pub const DEFAULT_DIM: usize = 768;
/// Environment variable holding the embedding service base URL.
pub const SERVICE_URL_ENV: &str = "CHECKWORTHY_EMBED_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract(
                "embedding contains a non-finite value".into(),
            ));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Deref for EmbeddingVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Trim, collapse internal whitespace, lowercase.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Store key for a sentence: hex SHA-256 of its normalized text.
pub fn sentence_key(text: &str) -> String {
    let digest = Sha256::digest(normalize_text(text).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Keyed vectors of a fixed dimension, stored as `f32` like the file format.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f32>>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        VectorStore {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, values: Vec<f32>) -> Result<()> {
        let key = key.into();
        if values.len() != self.dim {
            return Err(Error::Contract(format!(
                "vector for {key:?} has length {}, store dimension is {}",
                values.len(),
                self.dim
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("vector for {key:?} is not finite")));
        }
        if key.len() > u16::MAX as usize {
            return Err(Error::Contract(
                "store keys are limited to 65535 bytes".into(),
            ));
        }
        self.vectors.insert(key, values);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.len() * (2 + 64 + 4 * self.dim));
        out.extend_from_slice(VECTOR_FILE_MAGIC);
        out.extend_from_slice(&VECTOR_FILE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (key, values) in &self.vectors {
            out.extend_from_slice(&(key.len() as u16).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != VECTOR_FILE_MAGIC {
            return Err(Error::Format("not a vector file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VECTOR_FILE_VERSION {
            return Err(Error::Format(format!(
                "unsupported vector file version {version}"
            )));
        }
        let dim = r.u32()? as usize;
        let count = r.u64()?;
        let mut store = VectorStore::new(dim);
        for i in 0..count {
            let key_len = r.u16()? as usize;
            let key = std::str::from_utf8(r.take(key_len)?)
                .map_err(|_| Error::Format(format!("record {i}: key is not UTF-8")))?
                .to_string();
            let raw = r.take(dim * 4)?;
            let values: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if store.vectors.contains_key(&key) {
                return Err(Error::Format(format!("record {i}: duplicate key {key:?}")));
            }
            store
                .insert(key, values)
                .map_err(|e| Error::Format(format!("record {i}: {e}")))?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after {count} records",
                bytes.len() - r.pos
            )));
        }
        Ok(store)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::Format(format!("truncated at byte {}", self.pos)));
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_vector_file(path: &Path) -> Result<VectorStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    VectorStore::from_bytes(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_vector_file(store: &VectorStore, path: &Path) -> Result<()> {
    fs::write(path, store.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Stored word most similar to `word` by cosine similarity. Ties go to the
/// lexicographically smallest word.
pub fn nearest_word(word: &str, store: &VectorStore, exclude_self: bool) -> Result<(String, f64)> {
    let query = store
        .get(word)
        .ok_or_else(|| Error::MissingKey(vec![word.to_string()]))?;
    if exclude_self && store.len() < 2 {
        return Err(Error::Contract(
            "nearest_word with exclude_self needs at least two stored words".into(),
        ));
    }
    let query: Vec<f64> = query.iter().map(|&x| f64::from(x)).collect();
    let mut best: Option<(&str, f64)> = None;
    for (key, values) in store.iter() {
        if exclude_self && key == word {
            continue;
        }
        let candidate: Vec<f64> = values.iter().map(|&x| f64::from(x)).collect();
        let sim = cosine(&query, &candidate);
        // Keys iterate in ascending order, so strict `>` keeps the smallest
        // word among equals.
        if best.is_none_or(|(_, s)| sim > s) {
            best = Some((key, sim));
        }
    }
    let (w, s) = best.expect("store is non-empty");
    Ok((w.to_string(), s))
}

pub trait EmbeddingBackend: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &'static str;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FallbackEmbedder {
    dim: usize,
}

impl FallbackEmbedder {
    pub fn new(dim: usize) -> Self {
        FallbackEmbedder { dim }
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let digest = Sha256::digest(normalize_text(text).as_bytes());
        let seed: [u8; 32] = digest.into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        loop {
            let raw: Vec<f64> = (0..self.dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 || self.dim == 0 {
                let values = raw
                    .into_iter()
                    .map(|x| if norm > 0.0 { x / norm } else { x });
                return EmbeddingVector(values.collect());
            }
        }
    }
}

impl EmbeddingBackend for FallbackEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "fallback"
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.embed(t)).collect())
    }
}

/// Sentence vectors looked up by [`sentence_key`].
#[derive(Debug, Clone)]
pub struct StoreBackend {
    store: VectorStore,
}

impl StoreBackend {
    pub fn new(store: VectorStore) -> Self {
        StoreBackend { store }
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }
}

impl EmbeddingBackend for StoreBackend {
    fn dim(&self) -> usize {
        self.store.dim()
    }

    fn name(&self) -> &'static str {
        "store"
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let mut out = Vec::with_capacity(texts.len());
        let mut missing = Vec::new();
        for t in texts {
            match self.store.get(&sentence_key(t)) {
                Some(v) => out.push(EmbeddingVector(v.iter().map(|&x| f64::from(x)).collect())),
                None => missing.push(t.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingKey(missing));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Base URL; `/embed` is appended unless already present.
    pub url: String,
    pub dim: usize,
    pub parallelism: usize,
    pub batch_size: usize,
    pub retries: u32,
    pub timeout_secs: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            url: String::new(),
            dim: DEFAULT_DIM,
            parallelism: 4,
            batch_size: 32,
            retries: 2,
            timeout_secs: 30,
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

pub struct HttpBackend {
    config: HttpConfig,
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self> {
        if config.url.is_empty() {
            return Err(Error::Config(format!(
                "embedding service URL not set (use --embed-url or {SERVICE_URL_ENV})"
            )));
        }
        if config.parallelism == 0 || config.batch_size == 0 {
            return Err(Error::Config(
                "parallelism and batch_size must be positive".into(),
            ));
        }
        let trimmed = config.url.trim_end_matches('/');
        let endpoint = if trimmed.ends_with("/embed") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/embed")
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpBackend {
            config,
            endpoint,
            agent,
        })
    }

    fn request_once(&self, texts: &[String]) -> std::result::Result<Vec<EmbeddingVector>, String> {
        let body = serde_json::to_string(&EmbedRequest { texts }).map_err(|e| e.to_string())?;
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(format!("HTTP status {status}"));
        }
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        let parsed: EmbedResponse =
            serde_json::from_str(&text).map_err(|e| format!("malformed response: {e}"))?;
        if parsed.vectors.len() != texts.len() {
            return Err(format!(
                "expected {} vectors, got {}",
                texts.len(),
                parsed.vectors.len()
            ));
        }
        parsed
            .vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.config.dim {
                    Err(format!("vector length {} != {}", v.len(), self.config.dim))
                } else {
                    EmbeddingVector::new(v).map_err(|e| e.to_string())
                }
            })
            .collect()
    }

    fn request(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            match self.request_once(texts) {
                Ok(v) => return Ok(v),
                Err(msg) => {
                    log::warn!("embedding request attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(Error::Transport {
            msg: last,
            retries: self.config.retries,
        })
    }
}

impl EmbeddingBackend for HttpBackend {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn name(&self) -> &'static str {
        "http"
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let chunks: Vec<&[String]> = texts.chunks(self.config.batch_size).collect();
        let results: Mutex<Vec<Option<Result<Vec<EmbeddingVector>>>>> =
            Mutex::new((0..chunks.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.config.parallelism.min(chunks.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= chunks.len() {
                        break;
                    }
                    let r = self.request(chunks[i]);
                    results.lock().unwrap()[i] = Some(r);
                });
            }
        });
        let mut out = Vec::with_capacity(texts.len());
        for r in results.into_inner().unwrap() {
            out.extend(r.expect("every chunk was processed")?);
        }
        Ok(out)
    }
}

/// Embeds `texts` and stores the vectors under their [`sentence_key`]s.
pub fn build_sentence_store(
    texts: &[String],
    backend: &dyn EmbeddingBackend,
) -> Result<VectorStore> {
    let vectors = backend.embed_batch(texts)?;
    let mut store = VectorStore::new(backend.dim());
    for (t, v) in texts.iter().zip(vectors) {
        store.insert(sentence_key(t), v.iter().map(|&x| x as f32).collect())?;
    }
    Ok(store)
}
