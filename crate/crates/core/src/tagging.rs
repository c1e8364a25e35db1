//! EE detection in running text: the rule cascade baseline, a windowed
//! log-linear tagger, repair of ill-formed predictions and evaluation.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{downsample_negatives, Corpus, DatasetError, EeSpan, Label, OrderedPairExample, Tag, TaggedCorpus, TaggedSentence};
use crate::embeddings::EmbeddingTable;
use crate::phonology::{parse_syllable, LanguageProfile, PhonemeClass, Syllable};
use crate::scales::{rule_decide, Decision, Scale};
use crate::seeded_rng;

#[derive(Debug, Error)]
pub enum TaggingError {
    #[error("the similarity stage needs an embedding table")]
    MissingEmbeddings,
    #[error("the scale stage needs a scale")]
    MissingScale,
    #[error("training corpus has no sentences")]
    EmptyTrain,
    #[error("tag set mismatch: {0}")]
    TagSetMismatch(String),
    #[error("sentence {sentence}: prediction and gold are not aligned")]
    Misaligned { sentence: usize },
    #[error("corpora have {pred} and {gold} sentences")]
    SentenceCount { pred: usize, gold: usize },
    #[error("no B/B-fake entries in the confusion matrix")]
    ZeroDenominator,
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// A 4-gram w1 w2 w1 w4 with w2 ≠ w4, and what the filters said about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpan {
    pub sentence: usize,
    pub start: usize,
    pub tokens: [String; 4],
    pub parsable: bool,
    pub cos_sim: Option<f64>,
    pub scale_ok: Option<bool>,
}

/// Start offsets i with tokens[i] = tokens[i+2]. Overlapping matches are
/// all returned; `exclude_identical` drops those with tokens[i+1] = tokens[i+3].
pub fn find_candidates_with(tokens: &[String], exclude_identical: bool) -> Vec<usize> {
    (0..tokens.len().saturating_sub(3))
        .filter(|&i| tokens[i] == tokens[i + 2] && !(exclude_identical && tokens[i + 1] == tokens[i + 3]))
        .collect()
}

pub fn find_candidates(tokens: &[String]) -> Vec<usize> {
    find_candidates_with(tokens, true)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stages {
    pub parsable: bool,
    pub similarity: bool,
    pub scale: bool,
}

impl Stages {
    pub const NONE: Stages = Stages { parsable: false, similarity: false, scale: false };
    pub const ALL: Stages = Stages { parsable: true, similarity: true, scale: true };

    /// The cumulative settings none, +parsable, +similarity, +scale.
    pub fn cascade() -> [Stages; 4] {
        [
            Stages::NONE,
            Stages { parsable: true, ..Stages::NONE },
            Stages { parsable: true, similarity: true, scale: false },
            Stages::ALL,
        ]
    }
}

impl std::str::FromStr for Stages {
    type Err = TaggingError;
    fn from_str(s: &str) -> Result<Self, TaggingError> {
        let mut out = Stages::NONE;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "none" => {}
                "all" => out = Stages::ALL,
                "parsable" | "parse" => out.parsable = true,
                "sim" | "similarity" => out.similarity = true,
                "scale" => out.scale = true,
                other => return Err(TaggingError::UnknownStage(other.to_string())),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Stages {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.parsable {
            parts.push("parsable");
        }
        if self.similarity {
            parts.push("sim");
        }
        if self.scale {
            parts.push("scale");
        }
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub stages: Stages,
    pub alpha: f64,
    pub exclude_identical: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { stages: Stages::NONE, alpha: 0.4, exclude_identical: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub candidates: usize,
    pub failed_parsable: usize,
    pub failed_similarity: usize,
    pub failed_scale: usize,
    pub overlaps_skipped: usize,
    pub tagged: usize,
}

fn candidate_for(
    sentence: usize,
    tokens: &[String],
    start: usize,
    profile: &LanguageProfile,
    emb: Option<&EmbeddingTable>,
    scale: Option<&Scale>,
) -> CandidateSpan {
    let t: [String; 4] = std::array::from_fn(|k| tokens[start + k].clone());
    let parse = |w: &str| parse_syllable(&profile.inventory, w).ok();
    let (a, b1, b2) = (parse(&t[0]), parse(&t[1]), parse(&t[3]));
    let parsable = a.is_some() && b1.is_some() && b2.is_some();
    let cos_sim = emb.and_then(|e| e.cosine(&t[1], &t[3]).ok());
    let scale_ok = scale.map(|s| match (b1, b2) {
        (Some(x), Some(y)) => {
            let pair = OrderedPairExample {
                id: 0,
                b1: t[1].clone(),
                b2: t[3].clone(),
                b1_syll: x,
                b2_syll: y,
                label: Label::Attested,
                source_id: 0,
            };
            // ties, unranked and unknown symbols cannot contradict the scale
            !matches!(rule_decide(s, &pair), Ok(Decision::Unattested))
        }
        _ => false,
    });
    CandidateSpan { sentence, start, tokens: t, parsable, cos_sim, scale_ok }
}

/// Tags B I I I on every candidate that survives the enabled filters:
/// parsable A/B1/B2, cosine(B1, B2) > α (OOV fails), and B1 not after B2
/// on the scale. Overlaps among survivors go to the leftmost.
pub fn baseline_tag(
    corpus: &Corpus,
    profile: &LanguageProfile,
    emb: Option<&EmbeddingTable>,
    scale: Option<&Scale>,
    cfg: &BaselineConfig,
) -> Result<(TaggedCorpus, BaselineReport), TaggingError> {
    if cfg.stages.similarity && emb.is_none() {
        return Err(TaggingError::MissingEmbeddings);
    }
    if cfg.stages.scale && scale.is_none() {
        return Err(TaggingError::MissingScale);
    }
    let per_sentence: Vec<(TaggedSentence, BaselineReport)> = corpus
        .sentences
        .par_iter()
        .enumerate()
        .map(|(si, tokens)| {
            let mut report = BaselineReport::default();
            let mut sentence = TaggedSentence::untagged(tokens.clone());
            let mut next_free = 0;
            for start in find_candidates_with(tokens, cfg.exclude_identical) {
                report.candidates += 1;
                let c = candidate_for(si, tokens, start, profile, emb, scale);
                if cfg.stages.parsable && !c.parsable {
                    report.failed_parsable += 1;
                    continue;
                }
                if cfg.stages.similarity && c.cos_sim.is_none_or(|v| v <= cfg.alpha) {
                    report.failed_similarity += 1;
                    continue;
                }
                if cfg.stages.scale && c.scale_ok != Some(true) {
                    report.failed_scale += 1;
                    continue;
                }
                if start < next_free {
                    report.overlaps_skipped += 1;
                    continue;
                }
                sentence.set_span(start, false);
                next_free = start + 4;
                report.tagged += 1;
            }
            (sentence, report)
        })
        .collect();
    let mut report = BaselineReport::default();
    let mut out = TaggedCorpus::default();
    for (s, r) in per_sentence {
        report.candidates += r.candidates;
        report.failed_parsable += r.failed_parsable;
        report.failed_similarity += r.failed_similarity;
        report.failed_scale += r.failed_scale;
        report.overlaps_skipped += r.overlaps_skipped;
        report.tagged += r.tagged;
        out.sentences.push(s);
    }
    Ok((out, report))
}

/// All candidates of a corpus with their filter diagnostics.
pub fn candidate_diagnostics(
    corpus: &Corpus,
    profile: &LanguageProfile,
    emb: Option<&EmbeddingTable>,
    scale: Option<&Scale>,
) -> Vec<CandidateSpan> {
    corpus
        .sentences
        .iter()
        .enumerate()
        .flat_map(|(si, tokens)| {
            find_candidates(tokens).into_iter().map(move |start| candidate_for(si, tokens, start, profile, emb, scale))
        })
        .collect()
}

const WINDOW: i64 = 2;
const PAD: &str = "<pad>";
const N_FIXED: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerParams {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Share of negative (EE-free) sentences in each epoch's training set.
    pub neg_frac: f64,
    pub phoneme_features: bool,
}

impl Default for TaggerParams {
    fn default() -> Self {
        TaggerParams { learning_rate: 0.05, max_epochs: 60, patience: 10, seed: 0, neg_frac: 0.9, phoneme_features: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
struct Registry {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Registry {
    fn from(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Registry { names, index }
    }
}

impl From<Registry> for Vec<String> {
    fn from(r: Registry) -> Self {
        r.names
    }
}

impl Registry {
    fn intern(&mut self, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.names.len() - 1
    }

    fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub dev_span_f1: Vec<f64>,
    pub stopped_early: bool,
}

/// Softmax regression over window features of each token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTagger {
    pub tags: Vec<Tag>,
    registry: Registry,
    /// Row-major: tags × features.
    weights: Vec<f64>,
    pub params: TaggerParams,
    pub profile: Option<LanguageProfile>,
    pub log: TrainingLog,
}

fn offset_token(tokens: &[String], i: usize, o: i64) -> Option<&str> {
    let k = i as i64 + o;
    (k >= 0 && (k as usize) < tokens.len()).then(|| tokens[k as usize].as_str())
}

/// Names of the sparse features of token `i`; the first `N_FIXED` are
/// positional indicators handled by index.
fn feature_names(tokens: &[String], sylls: Option<&[Option<Syllable>]>, i: usize) -> (Vec<usize>, Vec<String>) {
    let mut fixed = vec![0];
    for (k, o) in (-3..=0).enumerate() {
        if let (Some(a), Some(b)) = (offset_token(tokens, i, o), offset_token(tokens, i, o + 2)) {
            if a == b {
                fixed.push(1 + k);
            }
        }
        if let (Some(a), Some(b)) = (offset_token(tokens, i, o + 1), offset_token(tokens, i, o + 3)) {
            if a == b {
                fixed.push(5 + k);
            }
        }
    }
    let mut named = Vec::with_capacity(12);
    for o in -WINDOW..=WINDOW {
        named.push(format!("w[{o}]={}", offset_token(tokens, i, o).unwrap_or(PAD)));
        if let Some(sylls) = sylls {
            let k = i as i64 + o;
            if k < 0 || k as usize >= tokens.len() {
                continue;
            }
            match &sylls[k as usize] {
                Some(s) => {
                    for class in PhonemeClass::ALL {
                        named.push(format!("p[{o}].{}={}", class.name(), s.get(class).symbol));
                    }
                }
                None => named.push(format!("p[{o}]=unparsable")),
            }
        }
    }
    (fixed, named)
}

fn log_softmax(scores: &mut [f64]) {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z = scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln() + m;
    scores.iter_mut().for_each(|s| *s -= z);
}

impl WindowTagger {
    fn n_features(&self) -> usize {
        N_FIXED + self.registry.names.len()
    }

    fn parse_sentence(&self, tokens: &[String]) -> Option<Vec<Option<Syllable>>> {
        let profile = self.profile.as_ref().filter(|_| self.params.phoneme_features)?;
        Some(tokens.iter().map(|t| parse_syllable(&profile.inventory, t).ok()).collect())
    }

    fn features(&self, tokens: &[String], sylls: Option<&[Option<Syllable>]>, i: usize) -> Vec<usize> {
        let (mut idx, named) = feature_names(tokens, sylls, i);
        idx.extend(named.iter().filter_map(|n| self.registry.get(n)).map(|k| N_FIXED + k));
        idx
    }

    fn log_probs(&self, feats: &[usize]) -> Vec<f64> {
        let nf = self.n_features();
        let mut scores: Vec<f64> = (0..self.tags.len()).map(|t| feats.iter().map(|&f| self.weights[t * nf + f]).sum()).collect();
        log_softmax(&mut scores);
        scores
    }

    /// Per-token log-probabilities over `self.tags`.
    pub fn sentence_log_probs(&self, tokens: &[String]) -> Vec<Vec<f64>> {
        let sylls = self.parse_sentence(tokens);
        (0..tokens.len()).map(|i| self.log_probs(&self.features(tokens, sylls.as_deref(), i))).collect()
    }

    pub fn tag_sentence(&self, tokens: &[String]) -> (TaggedSentence, RepairCounts) {
        let lp = self.sentence_log_probs(tokens);
        let raw: Vec<Tag> = lp
            .iter()
            .map(|row| {
                let best = (0..row.len()).fold(0, |b, t| if row[t] > row[b] { t } else { b });
                self.tags[best]
            })
            .collect();
        repair(tokens.to_vec(), &raw, &lp, &self.tags)
    }

    /// Word-identity weights as vectors: for each word, its weight for
    /// every (offset, tag), giving dimension 5 × |tags|.
    pub fn word_embeddings(&self) -> EmbeddingTable {
        let nf = self.n_features();
        let mut rows: HashMap<&str, Vec<f32>> = HashMap::new();
        let dim = (2 * WINDOW as usize + 1) * self.tags.len();
        for (k, name) in self.registry.names.iter().enumerate() {
            let Some(rest) = name.strip_prefix("w[") else { continue };
            let Some((o, word)) = rest.split_once("]=") else { continue };
            if word == PAD {
                continue;
            }
            let slot = (o.parse::<i64>().unwrap_or(0) + WINDOW) as usize;
            let v = rows.entry(word).or_insert_with(|| vec![0.0; dim]);
            for t in 0..self.tags.len() {
                v[slot * self.tags.len() + t] = self.weights[t * nf + N_FIXED + k] as f32;
            }
        }
        let mut words: Vec<(&str, Vec<f32>)> = rows.into_iter().collect();
        words.sort_by(|a, b| a.0.cmp(b.0));
        let table = EmbeddingTable::from_rows(words.into_iter().map(|(w, v)| (w.to_string(), v)).collect())
            .expect("finite weights");
        table.with_label("wv-tagger-standin")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCounts {
    pub orphan_inside: usize,
    pub dropped_spans: usize,
    pub relabeled_spans: usize,
}

impl std::ops::AddAssign for RepairCounts {
    fn add_assign(&mut self, o: Self) {
        self.orphan_inside += o.orphan_inside;
        self.dropped_spans += o.dropped_spans;
        self.relabeled_spans += o.relabeled_spans;
    }
}

/// Makes a raw tag sequence well formed. A B/B-fake followed by three
/// I/I-fake becomes one span whose real-or-fake type maximizes the summed
/// log-probability; any other B is dropped along with the I's after it,
/// and remaining I's become O.
pub fn repair(tokens: Vec<String>, raw: &[Tag], log_probs: &[Vec<f64>], tagset: &[Tag]) -> (TaggedSentence, RepairCounts) {
    let n = raw.len();
    let mut counts = RepairCounts::default();
    let mut out = TaggedSentence::untagged(tokens);
    let pos = |t: Tag| tagset.iter().position(|&x| x == t);
    let mut i = 0;
    while i < n {
        if raw[i].is_begin() {
            if i + 3 < n && raw[i + 1..=i + 3].iter().all(|t| t.is_inside()) {
                let score = |b: Tag, inside: Tag| -> Option<f64> {
                    let (b, inside) = (pos(b)?, pos(inside)?);
                    Some(log_probs[i][b] + (1..=3).map(|k| log_probs[i + k][inside]).sum::<f64>())
                };
                let real = score(Tag::B, Tag::I).unwrap_or(f64::NEG_INFINITY);
                let fake = score(Tag::BFake, Tag::IFake).unwrap_or(f64::NEG_INFINITY);
                let is_fake = fake > real;
                let consistent = raw[i..=i + 3].iter().all(|t| t.is_fake() == is_fake);
                if !consistent {
                    counts.relabeled_spans += 1;
                }
                out.set_span(i, is_fake);
                i += 4;
            } else {
                counts.dropped_spans += 1;
                i += 1;
                while i < n && raw[i].is_inside() {
                    i += 1;
                }
            }
        } else {
            if raw[i].is_inside() {
                counts.orphan_inside += 1;
            }
            i += 1;
        }
    }
    (out, counts)
}

/// Trains the window tagger with SGD, resampling negative sentences each
/// epoch, and keeps the weights of the epoch with the best dev span-F1
/// (stopping after `patience` epochs without improvement).
pub fn train_window_tagger(
    train: &TaggedCorpus,
    dev: &TaggedCorpus,
    profile: Option<&LanguageProfile>,
    params: &TaggerParams,
) -> Result<WindowTagger, TaggingError> {
    if train.sentences.is_empty() {
        return Err(TaggingError::EmptyTrain);
    }
    train.validate()?;
    dev.validate()?;
    let five = train.uses_fake_tags();
    if dev.uses_fake_tags() && !five {
        return Err(TaggingError::TagSetMismatch("dev uses fake tags but train does not".into()));
    }
    if params.phoneme_features && profile.is_none() {
        return Err(TaggingError::TagSetMismatch("phoneme features need a language profile".into()));
    }
    let tags: Vec<Tag> = if five { Tag::ALL.to_vec() } else { vec![Tag::O, Tag::B, Tag::I] };
    let mut model = WindowTagger {
        tags,
        registry: Registry::default(),
        weights: Vec::new(),
        params: params.clone(),
        profile: profile.filter(|_| params.phoneme_features).cloned(),
        log: TrainingLog::default(),
    };

    // feature indices and gold tag ids per training token, computed once
    let mut encoded: Vec<Vec<(Vec<usize>, usize)>> = Vec::with_capacity(train.sentences.len());
    for s in &train.sentences {
        let sylls = model.parse_sentence(&s.tokens);
        let mut rows = Vec::with_capacity(s.tokens.len());
        for i in 0..s.tokens.len() {
            let (mut idx, named) = feature_names(&s.tokens, sylls.as_deref(), i);
            idx.extend(named.into_iter().map(|n| N_FIXED + model.registry.intern(n)));
            let gold = model.tags.iter().position(|&t| t == s.tags[i]).expect("tag in set");
            rows.push((idx, gold));
        }
        encoded.push(rows);
    }
    let nf = model.n_features();
    let nt = model.tags.len();
    model.weights = vec![0.0; nt * nf];

    let mut rng = seeded_rng(params.seed, 0x7A6);
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_weights = model.weights.clone();
    let mut since_best = 0;
    let mut scores = vec![0.0; nt];
    for epoch in 0..params.max_epochs {
        let mut order = downsample_negatives(train, params.neg_frac, &mut rng);
        order.shuffle(&mut rng);
        let lr = params.learning_rate / (1.0 + 0.05 * epoch as f64);
        for &si in &order {
            for (idx, gold) in &encoded[si] {
                for (t, s) in scores.iter_mut().enumerate() {
                    *s = idx.iter().map(|&f| model.weights[t * nf + f]).sum();
                }
                log_softmax(&mut scores);
                for (t, s) in scores.iter().enumerate() {
                    let g = s.exp() - (t == *gold) as u8 as f64;
                    if g == 0.0 {
                        continue;
                    }
                    for &f in idx {
                        model.weights[t * nf + f] -= lr * g;
                    }
                }
            }
        }
        model.log.epochs_run = epoch + 1;
        let f1 = if dev.sentences.is_empty() {
            0.0
        } else {
            let (pred, _) = tag_with_model(&model, &dev.to_corpus());
            evaluate_tags(&pred, dev)?.span.f1
        };
        model.log.dev_span_f1.push(f1);
        if f1 > best_f1 {
            best_f1 = f1;
            best_weights.clone_from(&model.weights);
            model.log.best_epoch = epoch + 1;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= params.patience {
                model.log.stopped_early = true;
                break;
            }
        }
    }
    model.weights = best_weights;
    Ok(model)
}

pub fn tag_with_model(model: &WindowTagger, corpus: &Corpus) -> (TaggedCorpus, RepairCounts) {
    let tagged: Vec<(TaggedSentence, RepairCounts)> = corpus.sentences.par_iter().map(|s| model.tag_sentence(s)).collect();
    let mut counts = RepairCounts::default();
    let mut out = TaggedCorpus::default();
    for (s, c) in tagged {
        counts += c;
        out.sentences.push(s);
    }
    (out, counts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Prf {
    /// Empty prediction on empty gold scores 1; empty prediction otherwise 0.
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Prf {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                if predicted == 0 && gold == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                num as f64 / den as f64
            }
        };
        let (p, r) = (ratio(tp, predicted), ratio(tp, gold));
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Prf { precision: p, recall: r, f1, tp, predicted, gold }
    }
}

/// Counts indexed [gold][predicted] in `Tag::ALL` order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[usize; 5]; 5]);

impl ConfusionMatrix {
    pub fn get(&self, gold: Tag, pred: Tag) -> usize {
        self.0[gold.index()][pred.index()]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for t in Tag::ALL {
            out.push_str(&format!(",{t}"));
        }
        out.push('\n');
        for g in Tag::ALL {
            out.push_str(g.as_str());
            for p in Tag::ALL {
                out.push_str(&format!(",{}", self.get(g, p)));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagMetrics {
    /// Micro-averaged over tokens whose gold or predicted tag is not O.
    pub token: Prf,
    /// Exact span and type match.
    pub span: Prf,
    pub confusion: ConfusionMatrix,
}

impl TagMetrics {
    pub fn table(&self, label: &str) -> String {
        let mut out = format!("{:<24} {:>9} {:>9} {:>9}\n", "", "Precision", "Recall", "F1");
        for (name, m) in [("token", &self.token), ("span", &self.span)] {
            out.push_str(&format!(
                "{:<24} {:>9.2} {:>9.2} {:>9.2}\n",
                format!("{label} ({name})"),
                100.0 * m.precision,
                100.0 * m.recall,
                100.0 * m.f1
            ));
        }
        out
    }
}

pub fn evaluate_tags(pred: &TaggedCorpus, gold: &TaggedCorpus) -> Result<TagMetrics, TaggingError> {
    if pred.sentences.len() != gold.sentences.len() {
        return Err(TaggingError::SentenceCount { pred: pred.sentences.len(), gold: gold.sentences.len() });
    }
    let mut cm = ConfusionMatrix::default();
    let (mut tok_tp, mut tok_pred, mut tok_gold) = (0, 0, 0);
    let (mut span_tp, mut span_pred, mut span_gold) = (0, 0, 0);
    for (k, (p, g)) in pred.sentences.iter().zip(&gold.sentences).enumerate() {
        if p.tags.len() != g.tags.len() || p.tokens != g.tokens {
            return Err(TaggingError::Misaligned { sentence: k });
        }
        for (&pt, &gt) in p.tags.iter().zip(&g.tags) {
            cm.0[gt.index()][pt.index()] += 1;
            tok_pred += (pt != Tag::O) as usize;
            tok_gold += (gt != Tag::O) as usize;
            tok_tp += (pt == gt && gt != Tag::O) as usize;
        }
        let ps: HashSet<EeSpan> = p.spans().into_iter().collect();
        let gs: HashSet<EeSpan> = g.spans().into_iter().collect();
        span_pred += ps.len();
        span_gold += gs.len();
        span_tp += ps.intersection(&gs).count();
    }
    Ok(TagMetrics {
        token: Prf::from_counts(tok_tp, tok_pred, tok_gold),
        span: Prf::from_counts(span_tp, span_pred, span_gold),
        confusion: cm,
    })
}

/// Among begin tokens tagged B or B-fake on both sides, the share whose
/// real-versus-swapped type is right.
pub fn in_context_accuracy(cm: &ConfusionMatrix) -> Result<f64, TaggingError> {
    let bb = cm.get(Tag::B, Tag::B);
    let ff = cm.get(Tag::BFake, Tag::BFake);
    let bf = cm.get(Tag::B, Tag::BFake);
    let fb = cm.get(Tag::BFake, Tag::B);
    let den = bb + ff + bf + fb;
    if den == 0 {
        return Err(TaggingError::ZeroDenominator);
    }
    Ok((bb + ff) as f64 / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    fn sentence(words: &str, tags: &str) -> TaggedSentence {
        TaggedSentence { tokens: toks(words), tags: tags.split(' ').map(|t| t.parse().unwrap()).collect() }
    }

    #[test]
    fn candidates() {
        assert_eq!(find_candidates(&toks("a b a c d")), vec![0]);
        assert!(find_candidates(&toks("a b c d")).is_empty());
        assert!(find_candidates(&toks("a b a b")).is_empty());
        assert_eq!(find_candidates_with(&toks("a b a b"), false), vec![0]);
        assert_eq!(find_candidates(&toks("a b a c a d")), vec![0, 2]);
    }

    #[test]
    fn stages_parse() {
        assert_eq!("none".parse::<Stages>().unwrap(), Stages::NONE);
        assert_eq!("parsable,sim,scale".parse::<Stages>().unwrap(), Stages::ALL);
        assert!("bogus".parse::<Stages>().is_err());
        assert_eq!(Stages::ALL.to_string(), "parsable,sim,scale");
    }

    #[test]
    fn baseline_no_stages_and_overlaps() {
        let p = LanguageProfile::builtin("hmong").unwrap();
        let corpus = Corpus::parse("x sib ntxhais sib tub y\nsib a sib b sib c\n");
        let (tagged, report) = baseline_tag(&corpus, &p, None, None, &BaselineConfig::default()).unwrap();
        assert_eq!(tagged.sentences[0].tags.iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["O", "B", "I", "I", "I", "O"]);
        assert_eq!(tagged.sentences[1].spans().len(), 1);
        assert_eq!(report.overlaps_skipped, 1);
        tagged.validate().unwrap();
    }

    #[test]
    fn baseline_requires_resources() {
        let p = LanguageProfile::builtin("hmong").unwrap();
        let cfg = BaselineConfig { stages: Stages::ALL, ..BaselineConfig::default() };
        assert!(matches!(baseline_tag(&Corpus::default(), &p, None, None, &cfg), Err(TaggingError::MissingEmbeddings)));
    }

    #[test]
    fn baseline_filters() {
        let p = LanguageProfile::builtin("hmong").unwrap();
        let scale = Scale::parse(include_str!("../../../data/hmong_table2.scale")).unwrap();
        let emb = EmbeddingTable::from_rows(vec![
            ("ntxhais".into(), vec![1.0, 0.0]),
            ("tub".into(), vec![0.9, 0.1]),
            ("qaib".into(), vec![0.0, 1.0]),
        ])
        .unwrap();
        // sib ntxhais sib tub: s before b on the scale? tones s then b; b < s so this order is reversed
        let corpus = Corpus::parse("sib tub sib ntxhais\nsib ntxhais sib tub\nsib tub sib qaib\nsib q9 sib tub\n");
        let run = |stages: Stages| {
            let cfg = BaselineConfig { stages, ..BaselineConfig::default() };
            baseline_tag(&corpus, &p, Some(&emb), Some(&scale), &cfg).unwrap().1
        };
        assert_eq!(run(Stages::NONE).tagged, 4);
        assert_eq!(run(Stages::cascade()[1]).tagged, 3);
        assert_eq!(run(Stages::cascade()[2]).tagged, 2);
        assert_eq!(run(Stages::ALL).tagged, 1);
    }

    #[test]
    fn repair_rules() {
        let tags = [Tag::O, Tag::B, Tag::I];
        let lp = vec![vec![0.0; 3]; 4];
        let (s, c) = repair(toks("a b a c"), &[Tag::B, Tag::I, Tag::I, Tag::O], &lp, &tags);
        assert!(s.tags.iter().all(|t| *t == Tag::O));
        assert_eq!(c.dropped_spans, 1);
        let (s, _) = repair(toks("a b a c"), &[Tag::B, Tag::I, Tag::I, Tag::I], &lp, &tags);
        assert_eq!(s.tags, vec![Tag::B, Tag::I, Tag::I, Tag::I]);
        let lp5 = vec![vec![0.0; 3]; 5];
        let (s, c) = repair(toks("q a b a c"), &[Tag::I, Tag::B, Tag::I, Tag::I, Tag::I], &lp5, &tags);
        assert_eq!(s.tags[0], Tag::O);
        assert_eq!(c.orphan_inside, 1);
    }

    #[test]
    fn repair_chooses_type_jointly() {
        let tags = Tag::ALL;
        let mut lp = vec![vec![-5.0; 5]; 4];
        lp[0][Tag::B.index()] = -0.1;
        for row in &mut lp[1..] {
            row[Tag::IFake.index()] = -0.2;
            row[Tag::I.index()] = -2.0;
        }
        let (s, c) = repair(toks("a b a c"), &[Tag::B, Tag::IFake, Tag::IFake, Tag::IFake], &lp, &tags);
        assert_eq!(s.tags, vec![Tag::BFake, Tag::IFake, Tag::IFake, Tag::IFake]);
        assert_eq!(c.relabeled_spans, 1);
    }

    #[test]
    fn metrics_identity_and_harmonic_mean() {
        let gold = TaggedCorpus { sentences: vec![sentence("z a b a c", "O B I I I"), sentence("q", "O")] };
        let m = evaluate_tags(&gold, &gold).unwrap();
        assert_eq!((m.token.f1, m.span.f1), (1.0, 1.0));
        let empty = TaggedCorpus { sentences: vec![sentence("q", "O")] };
        assert_eq!(evaluate_tags(&empty, &empty).unwrap().span.f1, 1.0);
        let prf = Prf::from_counts(1, 2, 1);
        assert!((prf.f1 - 2.0 / 3.0).abs() < 1e-12);
        let short = TaggedCorpus { sentences: vec![sentence("z a b a", "O O O O"), sentence("q", "O")] };
        assert!(evaluate_tags(&short, &gold).is_err());
    }

    #[test]
    fn in_context() {
        let mut cm = ConfusionMatrix::default();
        cm.0[Tag::B.index()][Tag::B.index()] = 439;
        cm.0[Tag::BFake.index()][Tag::BFake.index()] = 447;
        cm.0[Tag::B.index()][Tag::BFake.index()] = 4;
        assert!((in_context_accuracy(&cm).unwrap() - 0.9955).abs() < 1e-4);
        assert!(in_context_accuracy(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn tagger_learns_pattern() {
        let mut sentences = Vec::new();
        for k in 0..60 {
            sentences.push(sentence(&format!("n{k} a{} b{} a{} c{} m", k % 7, k % 5, k % 7, k % 3), "O B I I I O"));
            sentences.push(sentence(&format!("n{k} m o p"), "O O O O"));
        }
        let train = TaggedCorpus { sentences: sentences[..80].to_vec() };
        let dev = TaggedCorpus { sentences: sentences[80..].to_vec() };
        let params = TaggerParams { max_epochs: 15, ..TaggerParams::default() };
        let model = train_window_tagger(&train, &dev, None, &params).unwrap();
        let (pred, _) = tag_with_model(&model, &dev.to_corpus());
        assert!(evaluate_tags(&pred, &dev).unwrap().span.f1 > 0.9);
        let again = train_window_tagger(&train, &dev, None, &params).unwrap();
        assert_eq!(again, model);
        assert_eq!(model.word_embeddings().dim(), 15);
    }
}
