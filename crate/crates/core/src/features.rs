//! Feature spaces over ordered pairs, sparse encoding, χ² scoring, top-K
//! selection and linear-weight importance.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::LinearModel;
use crate::datasets::{Label, OrderedPairExample};
use crate::embeddings::EmbeddingTable;
use crate::phonology::{LanguageProfile, PhonemeClass, PhonemeInventory};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("{class} {symbol:?} at {position} is not in the feature space")]
    UnknownSymbol { position: Position, class: &'static str, symbol: String },
    #[error("feature space has embedding dimensions but no embedding table was given")]
    MissingEmbeddings,
    #[error("embedding table has dimension {got}, feature space expects {expected}")]
    EmbeddingDim { expected: usize, got: usize },
    #[error("feature {feature} has non-binary value {value}; chi-square needs one-hot features")]
    NonBinary { feature: usize, value: f64 },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("k = {k} exceeds the {n} available features")]
    KTooLarge { k: usize, n: usize },
    #[error("empty K grid")]
    EmptyGrid,
    #[error("dimension mismatch: model has {model}, space has {space}")]
    DimensionMismatch { model: usize, space: usize },
    #[error("training failed for k = {k}: {msg}")]
    Trainer { k: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    B1,
    B2,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Position::B1 => "B1",
            Position::B2 => "B2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureId {
    OneHot { position: Position, class: PhonemeClass, symbol: String },
    EmbeddingDim { position: Position, dim: usize },
}

impl FeatureId {
    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureId::OneHot { class: PhonemeClass::Onset, .. } => FeatureKind::Onset,
            FeatureId::OneHot { class: PhonemeClass::Rhyme, .. } => FeatureKind::Rhyme,
            FeatureId::OneHot { class: PhonemeClass::Tone, .. } => FeatureKind::Tone,
            FeatureId::EmbeddingDim { .. } => FeatureKind::Embedding,
        }
    }

    pub fn position(&self) -> Position {
        match self {
            FeatureId::OneHot { position, .. } | FeatureId::EmbeddingDim { position, .. } => *position,
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureId::OneHot { position, class, symbol } => write!(f, "{position}.{}={symbol}", class.name()),
            FeatureId::EmbeddingDim { position, dim } => write!(f, "{position}.wv{dim}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Tone,
    Rhyme,
    Onset,
    Embedding,
}

/// Which blocks a classification experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSet {
    Focal,
    #[serde(alias = "all-constituents")]
    All,
    #[serde(alias = "all+embeddings", alias = "all+emb")]
    AllEmbeddings,
    #[serde(alias = "embeddings", alias = "emb")]
    EmbeddingsOnly,
}

impl FeatureSet {
    pub fn uses_embeddings(self) -> bool {
        matches!(self, FeatureSet::AllEmbeddings | FeatureSet::EmbeddingsOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Focal => "focal",
            FeatureSet::All => "all",
            FeatureSet::AllEmbeddings => "all+embeddings",
            FeatureSet::EmbeddingsOnly => "embeddings-only",
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "focal" => Ok(FeatureSet::Focal),
            "all" | "all-constituents" => Ok(FeatureSet::All),
            "all+embeddings" | "all+emb" | "all-embeddings" => Ok(FeatureSet::AllEmbeddings),
            "embeddings-only" | "embeddings" | "emb" => Ok(FeatureSet::EmbeddingsOnly),
            other => Err(format!("unknown feature set {other:?}")),
        }
    }
}

/// Ordered, duplicate-free list of features.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "Vec<FeatureId>", into = "Vec<FeatureId>")]
pub struct FeatureSpace {
    entries: Vec<FeatureId>,
    index: HashMap<FeatureId, usize>,
}

impl PartialEq for FeatureSpace {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl From<Vec<FeatureId>> for FeatureSpace {
    fn from(list: Vec<FeatureId>) -> Self {
        let mut entries = Vec::with_capacity(list.len());
        let mut index = HashMap::with_capacity(list.len());
        for id in list {
            if !index.contains_key(&id) {
                index.insert(id.clone(), entries.len());
                entries.push(id);
            }
        }
        FeatureSpace { entries, index }
    }
}

impl From<FeatureSpace> for Vec<FeatureId> {
    fn from(s: FeatureSpace) -> Self {
        s.entries
    }
}

impl FeatureSpace {
    /// One-hot blocks for `classes` at B1 then B2, followed by `emb_dim`
    /// embedding dimensions for B1 then B2.
    pub fn build(inv: &PhonemeInventory, classes: &[PhonemeClass], emb_dim: Option<usize>) -> Self {
        let mut list = Vec::new();
        for position in [Position::B1, Position::B2] {
            for &class in classes {
                for p in inv.class(class) {
                    list.push(FeatureId::OneHot { position, class, symbol: p.symbol.clone() });
                }
            }
        }
        if let Some(d) = emb_dim {
            for position in [Position::B1, Position::B2] {
                list.extend((0..d).map(|dim| FeatureId::EmbeddingDim { position, dim }));
            }
        }
        list.into()
    }

    pub fn for_set(profile: &LanguageProfile, set: FeatureSet, emb_dim: Option<usize>) -> Self {
        let focal = [profile.focal.class()];
        let classes: &[PhonemeClass] = match set {
            FeatureSet::Focal => &focal,
            FeatureSet::All | FeatureSet::AllEmbeddings => &PhonemeClass::ALL,
            FeatureSet::EmbeddingsOnly => &[],
        };
        let emb = if set.uses_embeddings() { emb_dim } else { None };
        Self::build(&profile.inventory, classes, emb)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[FeatureId] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> Option<&FeatureId> {
        self.entries.get(i)
    }

    pub fn index_of(&self, id: &FeatureId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Embedding dimension per position, if the space has embedding blocks.
    pub fn embedding_dim(&self) -> Option<usize> {
        let n = self.entries.iter().filter(|e| matches!(e, FeatureId::EmbeddingDim { position: Position::B1, .. })).count();
        (n > 0).then_some(n)
    }

    pub fn has_one_hot(&self) -> bool {
        self.entries.iter().any(|e| matches!(e, FeatureId::OneHot { .. }))
    }

    /// Sub-space keeping the selected features in mask order.
    pub fn restrict(&self, mask: &FeatureMask) -> FeatureSpace {
        mask.selected.iter().map(|&i| self.entries[i].clone()).collect::<Vec<_>>().into()
    }
}

/// Sparse row with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        debug_assert!(entries.last().is_none_or(|e| e.0 < dim));
        SparseVec { dim, entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVec {
            dim: values.len(),
            entries: values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| w[i] * v).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum()
    }

    /// ‖self − other‖², merging the two index lists.
    pub fn squared_distance(&self, other: &SparseVec) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
                acc += a[i].1 * a[i].1;
                i += 1;
            } else if i >= a.len() || b[j].0 < a[i].0 {
                acc += b[j].1 * b[j].1;
                j += 1;
            } else {
                let d = a[i].1 - b[j].1;
                acc += d * d;
                i += 1;
                j += 1;
            }
        }
        acc
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries.binary_search_by_key(&i, |e| e.0).map_or(0.0, |k| self.entries[k].1)
    }

    /// Appends zero-valued dimensions.
    pub fn padded(&self, extra: usize) -> SparseVec {
        SparseVec { dim: self.dim + extra, entries: self.entries.clone() }
    }
}

pub type DenseVec = Vec<f64>;

/// Encodes one ordered pair. OOV words get an all-zero embedding block.
pub fn encode(
    pair: &OrderedPairExample,
    space: &FeatureSpace,
    emb: Option<&EmbeddingTable>,
) -> Result<SparseVec, FeatureError> {
    let mut entries = Vec::new();
    let mut classes = Vec::new();
    for e in &space.entries {
        if let FeatureId::OneHot { class, .. } = e {
            if !classes.contains(class) {
                classes.push(*class);
            }
        }
    }
    for (position, syll) in [(Position::B1, &pair.b1_syll), (Position::B2, &pair.b2_syll)] {
        for &class in &classes {
            let symbol = syll.get(class).symbol.clone();
            let id = FeatureId::OneHot { position, class, symbol };
            let i = space.index_of(&id).ok_or_else(|| {
                let FeatureId::OneHot { symbol, .. } = id else { unreachable!() };
                FeatureError::UnknownSymbol { position, class: class.name(), symbol }
            })?;
            entries.push((i, 1.0));
        }
    }
    if let Some(d) = space.embedding_dim() {
        let emb = emb.ok_or(FeatureError::MissingEmbeddings)?;
        if emb.dim() != d {
            return Err(FeatureError::EmbeddingDim { expected: d, got: emb.dim() });
        }
        for (position, word) in [(Position::B1, &pair.b1), (Position::B2, &pair.b2)] {
            let Some(v) = emb.get(word) else { continue };
            let start = space.index_of(&FeatureId::EmbeddingDim { position, dim: 0 }).expect("embedding block");
            entries.extend(v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(k, x)| (start + k, *x as f64)));
        }
    }
    Ok(SparseVec::new(space.len(), entries))
}

pub fn encode_all(
    pairs: &[OrderedPairExample],
    space: &FeatureSpace,
    emb: Option<&EmbeddingTable>,
) -> Result<(Vec<SparseVec>, Vec<Label>), FeatureError> {
    let xs = pairs.iter().map(|p| encode(p, space, emb)).collect::<Result<Vec<_>, _>>()?;
    Ok((xs, pairs.iter().map(|p| p.label).collect()))
}

/// 2×2 χ² per feature, attested/unattested against present/absent.
pub fn chi2_scores(xs: &[SparseVec], ys: &[Label]) -> Result<Vec<f64>, FeatureError> {
    if xs.len() != ys.len() {
        return Err(FeatureError::LengthMismatch { rows: xs.len(), labels: ys.len() });
    }
    let dim = xs.iter().map(|x| x.dim).max().unwrap_or(0);
    let mut present = vec![[0u64; 2]; dim];
    let mut totals = [0u64; 2];
    for (x, y) in xs.iter().zip(ys) {
        let col = (*y == Label::Unattested) as usize;
        totals[col] += 1;
        for &(i, v) in &x.entries {
            if v == 1.0 {
                present[i][col] += 1;
            } else if v != 0.0 {
                return Err(FeatureError::NonBinary { feature: i, value: v });
            }
        }
    }
    Ok(present.iter().map(|&[a, b]| chi2_cell(a, b, totals[0] - a, totals[1] - b)).collect())
}

/// N(ad − bc)² / ((a+b)(c+d)(a+c)(b+d)), 0 when any margin is empty.
pub fn chi2_cell(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return 0.0;
    }
    let n = a + b + c + d;
    n * (a * d - b * c).powi(2) / denom
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    /// Ascending feature indices.
    pub selected: Vec<usize>,
    pub k: usize,
    pub dim: usize,
}

impl FeatureMask {
    pub fn identity(dim: usize) -> Self {
        FeatureMask { selected: (0..dim).collect(), k: dim, dim }
    }

    /// Projects `x` onto the selected features, re-indexed 0..k.
    pub fn apply(&self, x: &SparseVec) -> SparseVec {
        let mut entries = Vec::with_capacity(self.k.min(x.entries.len()));
        let (mut i, mut j) = (0, 0);
        while i < x.entries.len() && j < self.selected.len() {
            match x.entries[i].0.cmp(&self.selected[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    entries.push((j, x.entries[i].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        SparseVec { dim: self.k, entries }
    }

    pub fn apply_all(&self, xs: &[SparseVec]) -> Vec<SparseVec> {
        xs.iter().map(|x| self.apply(x)).collect()
    }
}

/// Feature indices by descending score; equal scores keep the lower index first.
pub fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order
}

pub fn select_top_k(scores: &[f64], k: usize) -> Result<FeatureMask, FeatureError> {
    if k > scores.len() {
        return Err(FeatureError::KTooLarge { k, n: scores.len() });
    }
    let mut selected = rank_by_score(scores)[..k].to_vec();
    selected.sort_unstable();
    Ok(FeatureMask { selected, k, dim: scores.len() })
}

/// A K value in a selection grid; serialized as `"12"` or `"all"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "KRepr", into = "String")]
pub enum KChoice {
    Top(usize),
    All,
}

impl KChoice {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            KChoice::Top(k) => k.min(n),
            KChoice::All => n,
        }
    }

    pub fn default_grid() -> Vec<KChoice> {
        vec![
            KChoice::Top(6),
            KChoice::Top(12),
            KChoice::Top(25),
            KChoice::Top(50),
            KChoice::Top(100),
            KChoice::All,
        ]
    }
}

impl fmt::Display for KChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KChoice::Top(k) => write!(f, "{k}"),
            KChoice::All => f.write_str("all"),
        }
    }
}

impl std::str::FromStr for KChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(KChoice::All);
        }
        s.parse().map(KChoice::Top).map_err(|_| format!("bad K value {s:?}"))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum KRepr {
    Num(usize),
    Text(String),
}

impl TryFrom<KRepr> for KChoice {
    type Error = String;
    fn try_from(r: KRepr) -> Result<Self, String> {
        match r {
            KRepr::Num(k) => Ok(KChoice::Top(k)),
            KRepr::Text(s) => s.parse(),
        }
    }
}

impl From<KChoice> for String {
    fn from(k: KChoice) -> String {
        k.to_string()
    }
}

pub fn parse_k_grid(s: &str) -> Result<Vec<KChoice>, String> {
    let grid = s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<Vec<_>, _>>()?;
    if grid.is_empty() {
        return Err("empty K grid".into());
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    pub mask: FeatureMask,
    /// (k, dev accuracy) for every distinct grid value tried.
    pub tried: Vec<(usize, f64)>,
}

/// Trains on the top-k features of `train` for each grid value and keeps
/// the k with the best dev accuracy (ties go to the smaller k). Grid values
/// above the feature count are clamped to it.
pub fn choose_k<M, P>(
    ranking: &[usize],
    grid: &[KChoice],
    train: (&[SparseVec], &[Label]),
    dev: (&[SparseVec], &[Label]),
    mut trainer: M,
) -> Result<KSelection, FeatureError>
where
    M: FnMut(&[SparseVec], &[Label]) -> Result<P, String>,
    P: Fn(&SparseVec) -> Label,
{
    if grid.is_empty() {
        return Err(FeatureError::EmptyGrid);
    }
    let n = ranking.len();
    let mut ks: Vec<usize> = grid.iter().map(|g| g.resolve(n)).filter(|&k| k > 0).collect();
    ks.sort_unstable();
    ks.dedup();
    let mask_for = |k: usize| {
        let mut selected = ranking[..k].to_vec();
        selected.sort_unstable();
        FeatureMask { selected, k, dim: n }
    };
    let mut best: Option<(usize, f64)> = None;
    let mut tried = Vec::new();
    for &k in &ks {
        let mask = mask_for(k);
        let model = trainer(&mask.apply_all(train.0), train.1).map_err(|msg| FeatureError::Trainer { k, msg })?;
        let acc = if dev.0.is_empty() {
            0.0
        } else {
            dev.0.iter().zip(dev.1).filter(|(x, y)| model(&mask.apply(x)) == **y).count() as f64 / dev.0.len() as f64
        };
        tried.push((k, acc));
        if best.is_none_or(|(_, b)| acc > b) {
            best = Some((k, acc));
        }
    }
    let k = best.map_or(n, |b| b.0);
    Ok(KSelection { k, mask: mask_for(k), tried })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub index: usize,
    pub id: FeatureId,
    pub magnitude: f64,
}

/// Features by descending |weight|; ties keep the lower index first.
pub fn linear_importance(model: &LinearModel, space: &FeatureSpace) -> Result<Vec<RankedFeature>, FeatureError> {
    if model.weights.len() != space.len() {
        return Err(FeatureError::DimensionMismatch { model: model.weights.len(), space: space.len() });
    }
    let mags: Vec<f64> = model.weights.iter().map(|w| w.abs()).collect();
    Ok(rank_by_score(&mags)
        .into_iter()
        .map(|i| RankedFeature { index: i, id: space.entries[i].clone(), magnitude: mags[i] })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub tone: f64,
    pub rhyme: f64,
    pub onset: f64,
    pub embedding: f64,
}

impl Proportions {
    fn of<'a>(ids: impl Iterator<Item = &'a FeatureId>) -> Proportions {
        let mut counts = [0usize; 4];
        for id in ids {
            counts[match id.kind() {
                FeatureKind::Tone => 0,
                FeatureKind::Rhyme => 1,
                FeatureKind::Onset => 2,
                FeatureKind::Embedding => 3,
            }] += 1;
        }
        let n = counts.iter().sum::<usize>().max(1) as f64;
        Proportions {
            tone: counts[0] as f64 / n,
            rhyme: counts[1] as f64 / n,
            onset: counts[2] as f64 / n,
            embedding: counts[3] as f64 / n,
        }
    }

    pub fn get(&self, kind: FeatureKind) -> f64 {
        match kind {
            FeatureKind::Tone => self.tone,
            FeatureKind::Rhyme => self.rhyme,
            FeatureKind::Onset => self.onset,
            FeatureKind::Embedding => self.embedding,
        }
    }
}

/// Share of each feature kind among the top `k` ranked features.
pub fn importance_proportions(ranked: &[RankedFeature], k: usize) -> Proportions {
    Proportions::of(ranked.iter().take(k).map(|r| &r.id))
}

/// Share of each feature kind in the whole space.
pub fn natural_proportions(space: &FeatureSpace) -> Proportions {
    Proportions::of(space.entries.iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::Syllable;

    fn hmong() -> LanguageProfile {
        LanguageProfile::builtin("hmong").unwrap()
    }

    fn pair(b1: Syllable, b2: Syllable) -> OrderedPairExample {
        OrderedPairExample {
            id: 0,
            b1: "x".into(),
            b2: "y".into(),
            b1_syll: b1,
            b2_syll: b2,
            label: Label::Attested,
            source_id: 0,
        }
    }

    #[test]
    fn space_sizes() {
        let p = hmong();
        assert_eq!(FeatureSpace::for_set(&p, FeatureSet::Focal, None).len(), 16);
        assert_eq!(FeatureSpace::for_set(&p, FeatureSet::All, None).len(), 160);
        assert_eq!(FeatureSpace::for_set(&p, FeatureSet::AllEmbeddings, Some(100)).len(), 360);
        assert_eq!(FeatureSpace::for_set(&p, FeatureSet::EmbeddingsOnly, Some(100)).len(), 200);
    }

    #[test]
    fn encodes_one_per_block() {
        let p = hmong();
        let x = pair(Syllable::new("nt", "u", "j"), Syllable::new("l", "o", "0"));
        let focal = FeatureSpace::for_set(&p, FeatureSet::Focal, None);
        assert_eq!(encode(&x, &focal, None).unwrap().entries.len(), 2);
        let all = FeatureSpace::for_set(&p, FeatureSet::All, None);
        let v = encode(&x, &all, None).unwrap();
        assert_eq!(v.entries.len(), 6);
        assert!(v.entries.windows(2).all(|w| w[0].0 < w[1].0));
        let bad = pair(Syllable::new("nt", "u", "q"), Syllable::new("l", "o", "0"));
        assert!(matches!(encode(&bad, &all, None), Err(FeatureError::UnknownSymbol { .. })));
        let emb = FeatureSpace::for_set(&p, FeatureSet::AllEmbeddings, Some(4));
        assert_eq!(encode(&x, &emb, None), Err(FeatureError::MissingEmbeddings));
    }

    #[test]
    fn encodes_embeddings_with_oov_zero_block() {
        let p = hmong();
        let table = EmbeddingTable::from_rows(vec![("x".into(), vec![1.0, 2.0, 3.0])]).unwrap();
        let space = FeatureSpace::for_set(&p, FeatureSet::AllEmbeddings, Some(3));
        let v = encode(&pair(Syllable::new("nt", "u", "j"), Syllable::new("l", "o", "0")), &space, Some(&table)).unwrap();
        assert_eq!(v.entries.len(), 9);
        assert_eq!(v.get(space.len() - 6), 1.0);
        assert_eq!(v.get(space.len() - 1), 0.0);
    }

    #[test]
    fn chi2_closed_forms() {
        assert_eq!(chi2_cell(5, 0, 0, 5), 10.0);
        assert!((chi2_cell(4, 1, 1, 4) - 3.6).abs() < 1e-12);
        assert_eq!(chi2_cell(2, 2, 3, 3), 0.0);
        assert_eq!(chi2_cell(0, 0, 3, 3), 0.0);
    }

    #[test]
    fn chi2_from_rows() {
        let xs: Vec<SparseVec> = [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]].iter().map(|r| SparseVec::from_dense(r)).collect();
        let ys = [Label::Attested, Label::Attested, Label::Unattested, Label::Unattested];
        let s = chi2_scores(&xs, &ys).unwrap();
        assert_eq!(s, vec![4.0, 0.0]);
        let bad = vec![SparseVec::from_dense(&[0.5])];
        assert!(matches!(chi2_scores(&bad, &[Label::Attested]), Err(FeatureError::NonBinary { .. })));
    }

    #[test]
    fn top_k() {
        assert_eq!(select_top_k(&[3.0, 1.0, 2.0], 2).unwrap().selected, vec![0, 2]);
        assert_eq!(select_top_k(&[1.0, 1.0, 1.0], 1).unwrap().selected, vec![0]);
        assert!(select_top_k(&[1.0], 2).is_err());
        let m = FeatureMask { selected: vec![1, 3], k: 2, dim: 4 };
        assert_eq!(m.apply(&SparseVec::from_dense(&[1.0, 2.0, 3.0, 4.0])).entries, vec![(0, 2.0), (1, 4.0)]);
    }

    #[test]
    fn k_grid_parsing() {
        assert_eq!(parse_k_grid("6,12,all").unwrap(), vec![KChoice::Top(6), KChoice::Top(12), KChoice::All]);
        assert!(parse_k_grid("").is_err());
        assert!(parse_k_grid("x").is_err());
    }

    #[test]
    fn importance_order() {
        let space: FeatureSpace = (0..3)
            .map(|d| FeatureId::EmbeddingDim { position: Position::B1, dim: d })
            .collect::<Vec<_>>()
            .into();
        let model = LinearModel { weights: vec![0.5, -2.0, 1.0], bias: 0.0, lambda: 0.1 };
        let order: Vec<usize> = linear_importance(&model, &space).unwrap().iter().map(|r| r.index).collect();
        assert_eq!(order, vec![1, 2, 0]);
    }

    #[test]
    fn full_proportions_equal_natural() {
        let p = hmong();
        let space = FeatureSpace::for_set(&p, FeatureSet::AllEmbeddings, Some(100));
        let model = LinearModel { weights: (0..space.len()).map(|i| i as f64).collect(), bias: 0.0, lambda: 0.1 };
        let ranked = linear_importance(&model, &space).unwrap();
        let all = importance_proportions(&ranked, space.len());
        assert_eq!(all, natural_proportions(&space));
        assert!((all.tone - 16.0 / 360.0).abs() < 1e-12);
        assert!((all.tone + all.rhyme + all.onset + all.embedding - 1.0).abs() < 1e-12);
    }

    #[test]
    fn space_json_roundtrip() {
        let space = FeatureSpace::for_set(&hmong(), FeatureSet::Focal, None);
        let json = serde_json::to_string(&space).unwrap();
        let back: FeatureSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, space);
        assert_eq!(back.index_of(&space.entries()[5]), Some(5));
    }
}
