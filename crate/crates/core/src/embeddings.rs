//! SkipGram word vectors with negative sampling, cosine queries and
//! binary/CSV storage.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::Corpus;
use crate::seeded_rng;

const MAGIC: &[u8; 4] = b"EEWV";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("{0:?} is not in the vocabulary")]
    Oov(String),
    #[error("vocabulary is empty after applying min_count = {0}")]
    EmptyVocabulary(usize),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("row {row}: expected {expected} values, got {got}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("non-finite value in vector for {0:?}")]
    NonFinite(String),
    #[error("duplicate vocabulary entry {0:?}")]
    DuplicateWord(String),
    #[error("bad embedding file: {0}")]
    Format(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Pairs in the fixed sample used to track the loss.
    pub loss_sample: usize,
}

impl Default for SkipGramParams {
    fn default() -> Self {
        SkipGramParams {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 5,
            seed: 0,
            learning_rate: 0.025,
            loss_sample: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub label: String,
    pub params: Option<SkipGramParams>,
    pub trained: bool,
    /// Mean SGNS loss on a fixed pair sample, before training then after
    /// each epoch.
    pub loss_history: Vec<f64>,
    pub workers: usize,
}

impl Default for EmbeddingMeta {
    fn default() -> Self {
        EmbeddingMeta { label: "loaded".into(), params: None, trained: true, loss_history: Vec::new(), workers: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    vectors: Vec<f32>,
    pub meta: EmbeddingMeta,
}

impl EmbeddingTable {
    pub fn new(vocab: Vec<String>, dim: usize, vectors: Vec<f32>, meta: EmbeddingMeta) -> Result<Self, EmbeddingError> {
        if vectors.len() != vocab.len() * dim {
            return Err(EmbeddingError::Format(format!(
                "{} values for {} words of dimension {dim}",
                vectors.len(),
                vocab.len()
            )));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, w) in vocab.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(EmbeddingError::DuplicateWord(w.clone()));
            }
            if vectors[i * dim..(i + 1) * dim].iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite(w.clone()));
            }
        }
        Ok(EmbeddingTable { vocab, index, dim, vectors, meta })
    }

    pub fn from_rows(rows: Vec<(String, Vec<f32>)>) -> Result<Self, EmbeddingError> {
        let dim = rows.first().map_or(0, |r| r.1.len());
        let mut vocab = Vec::with_capacity(rows.len());
        let mut vectors = Vec::with_capacity(rows.len() * dim);
        for (row, (w, v)) in rows.into_iter().enumerate() {
            if v.len() != dim {
                return Err(EmbeddingError::RaggedRow { row, expected: dim, got: v.len() });
            }
            vocab.push(w);
            vectors.extend(v);
        }
        Self::new(vocab, dim, vectors, EmbeddingMeta::default())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.meta.label = label.into();
        self
    }

    pub fn cosine(&self, w1: &str, w2: &str) -> Result<f64, EmbeddingError> {
        let a = self.get(w1).ok_or_else(|| EmbeddingError::Oov(w1.to_string()))?;
        let b = self.get(w2).ok_or_else(|| EmbeddingError::Oov(w2.to_string()))?;
        Ok(cosine_slices(a, b))
    }

    /// The `k` most similar other words, most similar first.
    pub fn neighbors(&self, word: &str, k: usize) -> Result<Vec<(String, f64)>, EmbeddingError> {
        let i = *self.index.get(word).ok_or_else(|| EmbeddingError::Oov(word.to_string()))?;
        let a = self.row(i);
        let mut scored: Vec<(usize, f64)> =
            (0..self.len()).filter(|&j| j != i).map(|j| (j, cosine_slices(a, self.row(j)))).collect();
        scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        Ok(scored.into_iter().take(k).map(|(j, c)| (self.vocab[j].clone(), c)).collect())
    }

    pub fn write_binary(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(MAGIC)?;
        w.write_all(&(self.vocab.len() as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for word in &self.vocab {
            w.write_all(&(word.len() as u32).to_le_bytes())?;
            w.write_all(word.as_bytes())?;
        }
        for v in &self.vectors {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_binary(r: impl Read) -> Result<Self, EmbeddingError> {
        let mut r = BufReader::new(r);
        let fmt = |e: std::io::Error| EmbeddingError::Format(e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(fmt)?;
        if &magic != MAGIC {
            return Err(EmbeddingError::Format("bad magic".into()));
        }
        let mut u32_buf = [0u8; 4];
        let mut read_u32 = |r: &mut BufReader<_>| -> Result<u32, EmbeddingError> {
            r.read_exact(&mut u32_buf).map_err(fmt)?;
            Ok(u32::from_le_bytes(u32_buf))
        };
        let n = read_u32(&mut r)? as usize;
        let dim = read_u32(&mut r)? as usize;
        let mut vocab = Vec::with_capacity(n);
        for _ in 0..n {
            let len = read_u32(&mut r)? as usize;
            let mut bytes = vec![0u8; len];
            r.read_exact(&mut bytes).map_err(fmt)?;
            vocab.push(String::from_utf8(bytes).map_err(|e| EmbeddingError::Format(e.to_string()))?);
        }
        let mut raw = vec![0u8; n * dim * 4];
        r.read_exact(&mut raw).map_err(fmt)?;
        let vectors = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Self::new(vocab, dim, vectors, EmbeddingMeta::default())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(io_err(path))?;
        self.write_binary(f).map_err(io_err(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(io_err(path))?;
        Self::read_binary(f)
    }

    /// `token,d0,...` header, then one row per word.
    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let header: Vec<String> = std::iter::once("token".to_string()).chain((0..self.dim).map(|d| format!("d{d}"))).collect();
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for (i, word) in self.vocab.iter().enumerate() {
            let rec: Vec<String> = std::iter::once(word.clone()).chain(self.row(i).iter().map(|v| v.to_string())).collect();
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(io_err(path))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let word = rec.get(0).unwrap_or_default().to_string();
            let values = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f32>().map_err(|e| EmbeddingError::Format(format!("{word}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push((word, values));
        }
        Self::from_rows(rows)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmbeddingError + '_ {
    move |source| EmbeddingError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> EmbeddingError {
    EmbeddingError::Format(format!("{}: {e}", path.display()))
}

pub fn cosine_slices(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        log::warn!("cosine with a zero vector");
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Vocabulary with counts ≥ `min_count`, most frequent first (ties by token).
pub fn build_vocab(corpus: &Corpus, min_count: usize) -> Vec<(String, u64)> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in &corpus.sentences {
        for t in s {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut vocab: Vec<(String, u64)> =
        counts.into_iter().filter(|(_, c)| *c as usize >= min_count).map(|(w, c)| (w.to_string(), c)).collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    vocab
}

/// Sampler for negative words, proportional to count^0.75.
pub fn negative_table(counts: &[u64]) -> Result<WeightedIndex<f64>, EmbeddingError> {
    WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| EmbeddingError::InvalidParameter(e.to_string()))
}

fn sigmoid(x: f32) -> f32 {
    if x > 20.0 {
        1.0
    } else if x < -20.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

struct Sgns {
    dim: usize,
    input: Vec<f32>,
    output: Vec<f32>,
}

impl Sgns {
    fn dot(&self, center: usize, ctx: usize) -> f32 {
        let (a, b) = (&self.input[center * self.dim..][..self.dim], &self.output[ctx * self.dim..][..self.dim]);
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// One SGD step for (center, context) plus negatives.
    fn step(&mut self, center: usize, ctx: usize, negs: &[usize], lr: f32, grad: &mut [f32]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let d = self.dim;
        for (target, label) in std::iter::once((ctx, 1.0f32)).chain(negs.iter().map(|&n| (n, 0.0))) {
            if label == 0.0 && target == ctx {
                continue;
            }
            let g = (label - sigmoid(self.dot(center, target))) * lr;
            let (inp, out) = (&self.input[center * d..][..d], &mut self.output[target * d..][..d]);
            for k in 0..d {
                grad[k] += g * out[k];
                out[k] += g * inp[k];
            }
        }
        for (v, g) in self.input[center * d..][..d].iter_mut().zip(grad.iter()) {
            *v += g;
        }
    }

    fn loss(&self, sample: &[(usize, usize, Vec<usize>)]) -> f64 {
        if sample.is_empty() {
            return 0.0;
        }
        let mut total = 0.0f64;
        for (c, o, negs) in sample {
            total -= (sigmoid(self.dot(*c, *o)) as f64).max(1e-12).ln();
            for &n in negs {
                total -= (1.0 - sigmoid(self.dot(*c, n)) as f64).max(1e-12).ln();
            }
        }
        total / sample.len() as f64
    }
}

/// Trains SGNS vectors single-threaded, so the result depends only on the
/// corpus and `params`. The learning rate decays linearly to 1e-4 of its
/// start over all epochs; each center word uses a window shrunk by a
/// random amount, as in word2vec.
pub fn train_skipgram(corpus: &Corpus, params: &SkipGramParams) -> Result<EmbeddingTable, EmbeddingError> {
    if corpus.token_count() == 0 {
        return Err(EmbeddingError::EmptyCorpus);
    }
    if params.dim == 0 || params.window == 0 {
        return Err(EmbeddingError::InvalidParameter("dim and window must be positive".into()));
    }
    let vocab = build_vocab(corpus, params.min_count);
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary(params.min_count));
    }
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (w, _))| (w.as_str(), i)).collect();
    let counts: Vec<u64> = vocab.iter().map(|v| v.1).collect();
    let table = negative_table(&counts)?;
    let d = params.dim;
    let mut rng = seeded_rng(params.seed, 0xE3B);
    let mut model = Sgns {
        dim: d,
        input: (0..vocab.len() * d).map(|_| (rng.gen::<f32>() - 0.5) / d as f32).collect(),
        output: vec![0.0; vocab.len() * d],
    };
    let sentences: Vec<Vec<usize>> = corpus
        .sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .collect();

    let mut sample_rng = seeded_rng(params.seed, 0x1055);
    let sample = loss_sample(&sentences, params, &table, &mut sample_rng);
    let mut loss_history = vec![model.loss(&sample)];

    let words: usize = sentences.iter().map(Vec::len).sum();
    let total = (params.epochs * words).max(1) as f64;
    let lr0 = params.learning_rate as f32;
    let mut seen = 0usize;
    let mut grad = vec![0.0f32; d];
    let mut negs = vec![0usize; params.negatives];
    for _ in 0..params.epochs {
        for s in &sentences {
            for (i, &center) in s.iter().enumerate() {
                let lr = (lr0 * (1.0 - seen as f32 / total as f32)).max(lr0 * 1e-4);
                seen += 1;
                let w = params.window - rng.gen_range(0..params.window);
                let lo = i.saturating_sub(w);
                let hi = (i + w).min(s.len() - 1);
                for (j, &context) in s.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    for n in negs.iter_mut() {
                        *n = table.sample(&mut rng);
                    }
                    model.step(center, context, &negs, lr, &mut grad);
                }
            }
        }
        loss_history.push(model.loss(&sample));
    }
    let meta = EmbeddingMeta {
        label: "skipgram".into(),
        params: Some(*params),
        trained: params.epochs > 0,
        loss_history,
        workers: 1,
    };
    EmbeddingTable::new(vocab.into_iter().map(|v| v.0).collect(), d, model.input, meta)
}

fn loss_sample(
    sentences: &[Vec<usize>],
    params: &SkipGramParams,
    table: &WeightedIndex<f64>,
    rng: &mut impl Rng,
) -> Vec<(usize, usize, Vec<usize>)> {
    let usable: Vec<&Vec<usize>> = sentences.iter().filter(|s| s.len() >= 2).collect();
    if usable.is_empty() {
        return Vec::new();
    }
    (0..params.loss_sample)
        .map(|_| {
            let s = usable[rng.gen_range(0..usable.len())];
            let i = rng.gen_range(0..s.len());
            let mut j = rng.gen_range(i.saturating_sub(params.window)..=(i + params.window).min(s.len() - 1));
            if j == i {
                j = if i + 1 < s.len() { i + 1 } else { i - 1 };
            }
            let negs = (0..params.negatives).map(|_| table.sample(rng)).collect();
            (s[i], s[j], negs)
        })
        .collect()
}
