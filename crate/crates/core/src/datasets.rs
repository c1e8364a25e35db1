//! EE/CC lists, swap-augmented labeled datasets, splits, subsamples, tagged
//! corpora and the corpus-level swap/split machinery.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phonology::{parse_syllable, LanguageProfile, McReading, Syllable};
use crate::seeded_rng;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },
    #[error("row {row}: unknown form code {code:?}")]
    UnknownForm { row: usize, code: String },
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),
    #[error("{0} partition is empty")]
    EmptyPartition(&'static str),
    #[error("sentence {sentence}: {msg}")]
    IllFormedTags { sentence: usize, msg: String },
    #[error("tagged corpus line {line}: {msg}")]
    MalformedCorpus { line: usize, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Attested,
    Unattested,
}

impl Label {
    /// +1 for attested, -1 for unattested.
    pub fn sign(self) -> f64 {
        match self {
            Label::Attested => 1.0,
            Label::Unattested => -1.0,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Attested => Label::Unattested,
            Label::Unattested => Label::Attested,
        }
    }

    pub fn from_sign(v: f64) -> Label {
        if v >= 0.0 {
            Label::Attested
        } else {
            Label::Unattested
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EeForm {
    AB1AB2,
    B1AB2A,
}

impl std::str::FromStr for EeForm {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AB1AB2" | "ABAC" => Ok(EeForm::AB1AB2),
            "B1AB2A" | "BACA" => Ok(EeForm::B1AB2A),
            _ => Err(()),
        }
    }
}

impl fmt::Display for EeForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EeForm::AB1AB2 => "AB1AB2",
            EeForm::B1AB2A => "B1AB2A",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EERecord {
    pub id: usize,
    pub language: String,
    pub form: EeForm,
    pub a: String,
    pub b1: String,
    pub b2: String,
    pub a_syll: Syllable,
    pub b1_syll: Syllable,
    pub b2_syll: Syllable,
}

impl EERecord {
    /// The four surface words in running order.
    pub fn surface(&self) -> [&str; 4] {
        match self.form {
            EeForm::AB1AB2 => [&self.a, &self.b1, &self.a, &self.b2],
            EeForm::B1AB2A => [&self.b1, &self.a, &self.b2, &self.a],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CCRecord {
    pub id: usize,
    pub language: String,
    pub b1: String,
    pub b2: String,
    pub b1_syll: Syllable,
    pub b2_syll: Syllable,
}

/// Anything that contributes one attested (B1, B2) ordering.
pub trait AttestedPair {
    fn source_id(&self) -> usize;
    fn b1(&self) -> &str;
    fn b2(&self) -> &str;
    fn b1_syll(&self) -> &Syllable;
    fn b2_syll(&self) -> &Syllable;
    /// The repeated word, for elaborate expressions.
    fn a(&self) -> Option<&str> {
        None
    }

    fn unordered_key(&self) -> (String, String) {
        unordered(self.b1(), self.b2())
    }
}

fn unordered(x: &str, y: &str) -> (String, String) {
    if x <= y {
        (x.to_string(), y.to_string())
    } else {
        (y.to_string(), x.to_string())
    }
}

impl AttestedPair for EERecord {
    fn source_id(&self) -> usize {
        self.id
    }
    fn b1(&self) -> &str {
        &self.b1
    }
    fn b2(&self) -> &str {
        &self.b2
    }
    fn b1_syll(&self) -> &Syllable {
        &self.b1_syll
    }
    fn b2_syll(&self) -> &Syllable {
        &self.b2_syll
    }
    fn a(&self) -> Option<&str> {
        Some(&self.a)
    }
}

impl AttestedPair for CCRecord {
    fn source_id(&self) -> usize {
        self.id
    }
    fn b1(&self) -> &str {
        &self.b1
    }
    fn b2(&self) -> &str {
        &self.b2
    }
    fn b1_syll(&self) -> &Syllable {
        &self.b1_syll
    }
    fn b2_syll(&self) -> &Syllable {
        &self.b2_syll
    }
}

/// One ordering of a (B1, B2) pair with its attestation label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedPairExample {
    pub id: usize,
    pub b1: String,
    pub b2: String,
    pub b1_syll: Syllable,
    pub b2_syll: Syllable,
    pub label: Label,
    pub source_id: usize,
}

impl OrderedPairExample {
    pub fn mirrored(&self) -> OrderedPairExample {
        OrderedPairExample {
            id: self.id,
            b1: self.b2.clone(),
            b2: self.b1.clone(),
            b1_syll: self.b2_syll.clone(),
            b2_syll: self.b1_syll.clone(),
            label: self.label.flip(),
            source_id: self.source_id,
        }
    }
}

/// Records kept after loading, with counts of what was set aside.
#[derive(Debug, Clone)]
pub struct Loaded<R> {
    pub records: Vec<R>,
    pub dropped_unparsable: usize,
    pub rejected_identical: usize,
    pub duplicates: usize,
}

/// How syllables are obtained for a word in a list.
#[derive(Clone, Copy)]
pub enum SyllableSource<'a> {
    /// Parse the orthographic token with the profile inventory.
    Parse(&'a LanguageProfile),
    /// Look up a Middle Chinese reading per character.
    Readings(&'a HashMap<String, McReading>),
}

impl SyllableSource<'_> {
    fn resolve(&self, token: &str, preseg: Option<[&str; 3]>) -> Option<Syllable> {
        if let Some([on, rh, tn]) = preseg {
            let s = Syllable::new(on, rh, tn);
            return match self {
                SyllableSource::Parse(p) => p.inventory.check(&s).ok().map(|_| s),
                SyllableSource::Readings(_) => Some(s),
            };
        }
        match self {
            SyllableSource::Parse(p) => parse_syllable(&p.inventory, token).ok(),
            SyllableSource::Readings(map) => map.get(token).and_then(|r| r.syllable().ok()),
        }
    }
}

fn tsv_rows(text: &str) -> Vec<(usize, Vec<String>)> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<String> = trimmed.split('\t').map(|c| c.trim().to_string()).collect();
        if rows.is_empty() && cols.first().is_some_and(|c| c.eq_ignore_ascii_case("language")) {
            continue;
        }
        rows.push((i + 1, cols));
    }
    rows
}

fn preseg(cols: &[String], start: usize) -> Option<[&str; 3]> {
    let get = |k: usize| cols.get(start + k).map(String::as_str).filter(|s| !s.is_empty());
    // tone may legitimately be "0"; onset and rhyme must be present
    match (get(0), get(1), cols.get(start + 2).map(String::as_str)) {
        (Some(on), Some(rh), Some(tn)) => Some([on, rh, tn]),
        _ => None,
    }
}

/// Parses an EE list: `language, form, a, b1, b2 [, a_on, a_rh, a_tn,
/// b1_on, b1_rh, b1_tn, b2_on, b2_rh, b2_tn]`.
pub fn parse_ee_list(text: &str, source: SyllableSource<'_>) -> Result<Loaded<EERecord>, DatasetError> {
    let mut out = Loaded { records: Vec::new(), dropped_unparsable: 0, rejected_identical: 0, duplicates: 0 };
    let mut seen = HashSet::new();
    for (row, cols) in tsv_rows(text) {
        if cols.len() < 5 {
            return Err(DatasetError::MalformedRow { row, msg: format!("expected at least 5 columns, got {}", cols.len()) });
        }
        let form: EeForm = cols[1]
            .parse()
            .map_err(|_| DatasetError::UnknownForm { row, code: cols[1].clone() })?;
        let (a, b1, b2) = (&cols[2], &cols[3], &cols[4]);
        if a.is_empty() || b1.is_empty() || b2.is_empty() {
            return Err(DatasetError::MalformedRow { row, msg: "empty word".into() });
        }
        if b1 == b2 {
            out.rejected_identical += 1;
            continue;
        }
        if !seen.insert((a.clone(), b1.clone(), b2.clone())) {
            out.duplicates += 1;
            continue;
        }
        let sylls = (
            source.resolve(a, preseg(&cols, 5)),
            source.resolve(b1, preseg(&cols, 8)),
            source.resolve(b2, preseg(&cols, 11)),
        );
        let (Some(a_syll), Some(b1_syll), Some(b2_syll)) = sylls else {
            out.dropped_unparsable += 1;
            continue;
        };
        out.records.push(EERecord {
            id: out.records.len(),
            language: cols[0].clone(),
            form,
            a: a.clone(),
            b1: b1.clone(),
            b2: b2.clone(),
            a_syll,
            b1_syll,
            b2_syll,
        });
    }
    if out.dropped_unparsable > 0 {
        log::warn!("dropped {} EE rows with unparsable syllables", out.dropped_unparsable);
    }
    Ok(out)
}

pub fn load_ee_list(path: impl AsRef<Path>, profile: &LanguageProfile) -> Result<Loaded<EERecord>, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_ee_list(&text, SyllableSource::Parse(profile))
}

/// Parses a CC list: `language, b1, b2 [, b1_on, b1_rh, b1_tn, b2_on,
/// b2_rh, b2_tn]`. Duplicate rows are kept.
pub fn parse_cc_list(text: &str, source: SyllableSource<'_>) -> Result<Loaded<CCRecord>, DatasetError> {
    let mut out = Loaded { records: Vec::new(), dropped_unparsable: 0, rejected_identical: 0, duplicates: 0 };
    for (row, cols) in tsv_rows(text) {
        if cols.len() < 3 {
            return Err(DatasetError::MalformedRow { row, msg: format!("expected at least 3 columns, got {}", cols.len()) });
        }
        let (b1, b2) = (&cols[1], &cols[2]);
        if b1.is_empty() || b2.is_empty() {
            return Err(DatasetError::MalformedRow { row, msg: "empty word".into() });
        }
        if b1 == b2 {
            out.rejected_identical += 1;
            continue;
        }
        let (Some(b1_syll), Some(b2_syll)) = (source.resolve(b1, preseg(&cols, 3)), source.resolve(b2, preseg(&cols, 6)))
        else {
            out.dropped_unparsable += 1;
            continue;
        };
        out.records.push(CCRecord {
            id: out.records.len(),
            language: cols[0].clone(),
            b1: b1.clone(),
            b2: b2.clone(),
            b1_syll,
            b2_syll,
        });
    }
    if out.dropped_unparsable > 0 {
        log::warn!("dropped {} CC rows with unparsable syllables", out.dropped_unparsable);
    }
    Ok(out)
}

pub fn load_cc_list(path: impl AsRef<Path>, source: SyllableSource<'_>) -> Result<Loaded<CCRecord>, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_cc_list(&text, source)
}

pub fn write_ee_list(path: impl AsRef<Path>, records: &[EERecord]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut out = String::from("language\tform\ta\tb1\tb2\n");
    for r in records {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.language, r.form, r.a, r.b1, r.b2));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// One attested example per record plus its mirror as unattested, except
/// when the reversed order is itself attested somewhere in `attested`.
/// Output order is shuffled with `seed`; ids are positions in the output.
pub fn augment_with_swaps<R: AttestedPair>(attested: &[R], seed: u64) -> Vec<OrderedPairExample> {
    let ordered: HashSet<(&str, &str)> = attested.iter().map(|r| (r.b1(), r.b2())).collect();
    let mut out = Vec::with_capacity(attested.len() * 2);
    for r in attested {
        let example = OrderedPairExample {
            id: 0,
            b1: r.b1().to_string(),
            b2: r.b2().to_string(),
            b1_syll: r.b1_syll().clone(),
            b2_syll: r.b2_syll().clone(),
            label: Label::Attested,
            source_id: r.source_id(),
        };
        if !ordered.contains(&(r.b2(), r.b1())) {
            out.push(example.mirrored());
        }
        out.push(example);
    }
    out.shuffle(&mut seeded_rng(seed, 0xA06));
    for (i, e) in out.iter_mut().enumerate() {
        e.id = i;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub dev_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    pub repetitions: usize,
}

impl Default for SplitSpec {
    /// 70/30 train/test with 20% of the train side held out as dev.
    fn default() -> Self {
        SplitSpec { train_frac: 0.56, dev_frac: 0.14, test_frac: 0.30, seed: 0, repetitions: 10 }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let fr = [self.train_frac, self.dev_frac, self.test_frac];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f) || f.is_nan()) {
            return Err(DatasetError::InvalidSplit(format!("fractions out of range: {fr:?}")));
        }
        if (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidSplit(format!("fractions must sum to 1: {fr:?}")));
        }
        if self.repetitions == 0 {
            return Err(DatasetError::InvalidSplit("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SplitData {
    pub train: Vec<OrderedPairExample>,
    pub dev: Vec<OrderedPairExample>,
    pub test: Vec<OrderedPairExample>,
    pub train_attested: usize,
    pub dev_attested: usize,
    pub test_attested: usize,
    /// Unordered (B1, B2) pairs whose records landed on both sides of the
    /// train/test boundary (different A words).
    pub straddling_pairs: usize,
}

/// Shuffles attested records, partitions them, then augments each
/// partition on its own so that no record contributes to two partitions.
pub fn split_then_augment<R: AttestedPair>(attested: &[R], spec: &SplitSpec) -> Result<SplitData, DatasetError> {
    spec.validate()?;
    let n = attested.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(spec.seed, 0x5917));
    let n_test = (n as f64 * spec.test_frac).round() as usize;
    let n_pool = n - n_test.min(n);
    let dev_share = if spec.train_frac + spec.dev_frac > 0.0 {
        spec.dev_frac / (spec.train_frac + spec.dev_frac)
    } else {
        0.0
    };
    let n_dev = (n_pool as f64 * dev_share).round() as usize;
    let test_idx = &order[..n_test.min(n)];
    let dev_idx = &order[n_test.min(n)..n_test.min(n) + n_dev];
    let train_idx = &order[n_test.min(n) + n_dev..];
    if train_idx.is_empty() {
        return Err(DatasetError::EmptyPartition("train"));
    }
    if test_idx.is_empty() {
        return Err(DatasetError::EmptyPartition("test"));
    }
    if spec.dev_frac > 0.0 && dev_idx.is_empty() {
        return Err(DatasetError::EmptyPartition("dev"));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| &attested[i]).collect::<Vec<_>>();
    let (train_r, dev_r, test_r) = (pick(train_idx), pick(dev_idx), pick(test_idx));

    let seen: HashSet<(String, String)> = train_r.iter().chain(&dev_r).map(|r| r.unordered_key()).collect();
    let straddling_pairs = test_r
        .iter()
        .map(|r| r.unordered_key())
        .filter(|k| seen.contains(k))
        .collect::<HashSet<_>>()
        .len();
    if straddling_pairs > 0 {
        log::info!("{straddling_pairs} (B1, B2) pairs occur in both train and test with different A");
    }

    Ok(SplitData {
        train: augment_refs(&train_r, spec.seed.wrapping_add(1)),
        dev: augment_refs(&dev_r, spec.seed.wrapping_add(2)),
        test: augment_refs(&test_r, spec.seed.wrapping_add(3)),
        train_attested: train_r.len(),
        dev_attested: dev_r.len(),
        test_attested: test_r.len(),
        straddling_pairs,
    })
}

struct Ref<'a, R>(&'a R);

impl<R: AttestedPair> AttestedPair for Ref<'_, R> {
    fn source_id(&self) -> usize {
        self.0.source_id()
    }
    fn b1(&self) -> &str {
        self.0.b1()
    }
    fn b2(&self) -> &str {
        self.0.b2()
    }
    fn b1_syll(&self) -> &Syllable {
        self.0.b1_syll()
    }
    fn b2_syll(&self) -> &Syllable {
        self.0.b2_syll()
    }
    fn a(&self) -> Option<&str> {
        self.0.a()
    }
}

fn augment_refs<R: AttestedPair>(records: &[&R], seed: u64) -> Vec<OrderedPairExample> {
    let wrapped: Vec<Ref<'_, R>> = records.iter().map(|r| Ref(*r)).collect();
    augment_with_swaps(&wrapped, seed)
}

/// `repetitions` subsets, each keeping one uniformly chosen record per
/// distinct unordered {B1, B2}. Groups appear in first-occurrence order.
pub fn sample_unique_pairs<R: AttestedPair + Clone>(
    records: &[R],
    seed: u64,
    repetitions: usize,
) -> Result<Vec<Vec<R>>, DatasetError> {
    if repetitions == 0 {
        return Err(DatasetError::InvalidSplit("repetitions must be at least 1".into()));
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<(String, String), usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let g = *slot.entry(r.unordered_key()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    Ok((0..repetitions)
        .map(|rep| {
            let mut rng = seeded_rng(seed, 0x0417 + rep as u64);
            groups.iter().map(|g| records[g[rng.gen_range(0..g.len())]].clone()).collect()
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub b1: String,
    pub b2: String,
    pub same_order_ee: usize,
    pub reversed_ee: usize,
    pub same_order_cc: usize,
    pub reversed_cc: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapCounts {
    pub same_order_ee: usize,
    pub reversed_ee: usize,
    pub same_order_cc: usize,
    pub reversed_cc: usize,
    pub per_test: Vec<PairOverlap>,
}

/// For every test pair (B1, B2) counts how often the training EEs contain
/// X B1 X B2 versus X B2 X B1 (X different from the test A), and how often
/// the CC list or the corpus has the bigram B1 B2 versus B2 B1.
pub fn component_overlap_analysis<R: AttestedPair, T: AttestedPair>(
    train: &[R],
    test: &[T],
    ccs: Option<&[CCRecord]>,
    corpus: Option<&Corpus>,
) -> OverlapCounts {
    let mut ee_index: HashMap<(&str, &str), Vec<Option<&str>>> = HashMap::new();
    for r in train {
        ee_index.entry((r.b1(), r.b2())).or_default().push(r.a());
    }
    let mut bigrams: HashMap<(&str, &str), usize> = HashMap::new();
    for c in ccs.unwrap_or(&[]) {
        *bigrams.entry((c.b1.as_str(), c.b2.as_str())).or_default() += 1;
    }
    if let Some(corpus) = corpus {
        for s in &corpus.sentences {
            for w in s.windows(2) {
                *bigrams.entry((w[0].as_str(), w[1].as_str())).or_default() += 1;
            }
        }
    }
    let mut counts = OverlapCounts::default();
    for t in test {
        let other_a = |key: (&str, &str)| {
            ee_index.get(&key).map_or(0, |xs| xs.iter().filter(|x| x.is_none() || *x != &t.a()).count())
        };
        let row = PairOverlap {
            b1: t.b1().to_string(),
            b2: t.b2().to_string(),
            same_order_ee: other_a((t.b1(), t.b2())),
            reversed_ee: other_a((t.b2(), t.b1())),
            same_order_cc: bigrams.get(&(t.b1(), t.b2())).copied().unwrap_or(0),
            reversed_cc: bigrams.get(&(t.b2(), t.b1())).copied().unwrap_or(0),
        };
        counts.same_order_ee += row.same_order_ee;
        counts.reversed_ee += row.reversed_ee;
        counts.same_order_cc += row.same_order_cc;
        counts.reversed_cc += row.reversed_cc;
        counts.per_test.push(row);
    }
    counts
}

/// Untagged running text, one tokenized sentence per entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub sentences: Vec<Vec<String>>,
}

impl Corpus {
    pub fn parse(text: &str) -> Corpus {
        Corpus {
            sentences: text
                .lines()
                .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Corpus, DatasetError> {
        let path = path.as_ref();
        Ok(Corpus::parse(&std::fs::read_to_string(path).map_err(io_err(path))?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&s.join(" "));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(io_err(path))
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    O,
    B,
    I,
    #[serde(rename = "B-fake")]
    BFake,
    #[serde(rename = "I-fake")]
    IFake,
}

impl Tag {
    pub const ALL: [Tag; 5] = [Tag::O, Tag::B, Tag::I, Tag::BFake, Tag::IFake];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::O => "O",
            Tag::B => "B",
            Tag::I => "I",
            Tag::BFake => "B-fake",
            Tag::IFake => "I-fake",
        }
    }

    pub fn is_begin(self) -> bool {
        matches!(self, Tag::B | Tag::BFake)
    }

    pub fn is_inside(self) -> bool {
        matches!(self, Tag::I | Tag::IFake)
    }

    pub fn is_fake(self) -> bool {
        matches!(self, Tag::BFake | Tag::IFake)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Tag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "O" | "0" => Ok(Tag::O),
            "B" | "B-EE" => Ok(Tag::B),
            "I" | "I-EE" => Ok(Tag::I),
            "B-fake" | "B-FAKE" => Ok(Tag::BFake),
            "I-fake" | "I-FAKE" => Ok(Tag::IFake),
            other => Err(format!("unknown tag {other:?}")),
        }
    }
}

/// A tagged EE occurrence: four tokens starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EeSpan {
    pub start: usize,
    pub fake: bool,
}

/// Identity of an EE by its four surface tokens.
pub type EeKey = [String; 4];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
}

impl TaggedSentence {
    pub fn untagged(tokens: Vec<String>) -> Self {
        let tags = vec![Tag::O; tokens.len()];
        TaggedSentence { tokens, tags }
    }

    /// Checks that every B/B-fake starts a run of exactly three matching
    /// I/I-fake tags and that no I appears anywhere else.
    pub fn check(&self) -> Result<(), String> {
        if self.tokens.len() != self.tags.len() {
            return Err(format!("{} tokens but {} tags", self.tokens.len(), self.tags.len()));
        }
        let n = self.tags.len();
        let mut i = 0;
        while i < n {
            let t = self.tags[i];
            if t.is_inside() {
                return Err(format!("orphan {t} at {i}"));
            }
            if t.is_begin() {
                let inside = if t.is_fake() { Tag::IFake } else { Tag::I };
                if i + 3 >= n || self.tags[i + 1..=i + 3].iter().any(|&x| x != inside) {
                    return Err(format!("{t} at {i} is not followed by three {inside}"));
                }
                i += 4;
            } else {
                i += 1;
            }
        }
        Ok(())
    }

    pub fn spans(&self) -> Vec<EeSpan> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.tags.len() {
            if self.tags[i].is_begin() && i + 3 < self.tags.len() {
                out.push(EeSpan { start: i, fake: self.tags[i].is_fake() });
                i += 4;
            } else {
                i += 1;
            }
        }
        out
    }

    /// The span's tokens, unswapped back to the attested order when the
    /// span is tagged fake.
    pub fn canonical_key(&self, span: EeSpan) -> EeKey {
        let s = span.start;
        let mut key: EeKey = std::array::from_fn(|k| self.tokens[s + k].clone());
        if span.fake {
            key.swap(1, 3);
        }
        key
    }

    pub fn set_span(&mut self, start: usize, fake: bool) {
        let (b, i) = if fake { (Tag::BFake, Tag::IFake) } else { (Tag::B, Tag::I) };
        self.tags[start] = b;
        for t in &mut self.tags[start + 1..start + 4] {
            *t = i;
        }
    }

    pub fn clear_span(&mut self, start: usize) {
        for t in &mut self.tags[start..start + 4] {
            *t = Tag::O;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedCorpus {
    pub sentences: Vec<TaggedSentence>,
}

impl TaggedCorpus {
    pub fn from_corpus(corpus: &Corpus) -> TaggedCorpus {
        TaggedCorpus { sentences: corpus.sentences.iter().cloned().map(TaggedSentence::untagged).collect() }
    }

    pub fn to_corpus(&self) -> Corpus {
        Corpus { sentences: self.sentences.iter().map(|s| s.tokens.clone()).collect() }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for (i, s) in self.sentences.iter().enumerate() {
            s.check().map_err(|msg| DatasetError::IllFormedTags { sentence: i, msg })?;
        }
        Ok(())
    }

    pub fn uses_fake_tags(&self) -> bool {
        self.sentences.iter().any(|s| s.tags.iter().any(|t| t.is_fake()))
    }

    pub fn positive_count(&self) -> usize {
        self.sentences.iter().filter(|s| s.tags.iter().any(|t| *t != Tag::O)).count()
    }

    /// Distinct EEs in first-occurrence order (canonical, unswapped keys).
    pub fn ee_catalog(&self) -> Vec<EeKey> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in &self.sentences {
            for span in s.spans() {
                let key = s.canonical_key(span);
                if seen.insert(key.clone()) {
                    out.push(key);
                }
            }
        }
        out
    }

    /// Two-column `token<TAB>tag` lines, blank line between sentences.
    pub fn parse(text: &str) -> Result<TaggedCorpus, DatasetError> {
        Self::read(BufReader::new(text.as_bytes()))
    }

    pub fn read(reader: impl BufRead) -> Result<TaggedCorpus, DatasetError> {
        let mut sentences = Vec::new();
        let mut cur = TaggedSentence::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| DatasetError::Io { path: "<tagged corpus>".into(), source })?;
            let line = line.trim_end();
            if line.is_empty() {
                if !cur.tokens.is_empty() {
                    sentences.push(std::mem::take(&mut cur));
                }
                continue;
            }
            let (tok, tag) = line
                .rsplit_once('\t')
                .ok_or_else(|| DatasetError::MalformedCorpus { line: i + 1, msg: "expected token<TAB>tag".into() })?;
            let tag: Tag = tag.parse().map_err(|msg| DatasetError::MalformedCorpus { line: i + 1, msg })?;
            cur.tokens.push(tok.to_string());
            cur.tags.push(tag);
        }
        if !cur.tokens.is_empty() {
            sentences.push(cur);
        }
        Ok(TaggedCorpus { sentences })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TaggedCorpus, DatasetError> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(io_err(path))?;
        Self::read(BufReader::new(f))
    }

    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        for s in &self.sentences {
            for (tok, tag) in s.tokens.iter().zip(&s.tags) {
                writeln!(w, "{tok}\t{tag}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(io_err(path))?;
        let mut w = std::io::BufWriter::new(f);
        self.write(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapReport {
    pub swapped_ees: Vec<EeKey>,
    pub swapped_occurrences: usize,
    pub kept_occurrences: usize,
}

/// Partitions the EE catalog into swap/keep with proportion `swap_frac`
/// and rewrites every occurrence of a swapped EE: tokens 2 and 4 of the span
/// are exchanged and the tags become B-fake/I-fake. Every occurrence of an
/// EE shares its status. `catalog` defaults to the EEs tagged in `tagged`.
pub fn generate_swap_corpus(
    tagged: &TaggedCorpus,
    catalog: Option<&[EeKey]>,
    swap_frac: f64,
    seed: u64,
) -> Result<(TaggedCorpus, SwapReport), DatasetError> {
    tagged.validate()?;
    if !(0.0..=1.0).contains(&swap_frac) {
        return Err(DatasetError::InvalidSplit(format!("swap fraction {swap_frac} outside [0, 1]")));
    }
    let mut keys = match catalog {
        Some(c) => c.to_vec(),
        None => tagged.ee_catalog(),
    };
    keys.shuffle(&mut seeded_rng(seed, 0x5AA9));
    let n_swap = (keys.len() as f64 * swap_frac).round() as usize;
    let swapped: HashSet<EeKey> = keys[..n_swap].iter().cloned().collect();

    let mut out = tagged.clone();
    let mut report = SwapReport::default();
    for s in &mut out.sentences {
        for span in s.spans() {
            if span.fake {
                continue;
            }
            if swapped.contains(&s.canonical_key(span)) {
                s.tokens.swap(span.start + 1, span.start + 3);
                s.set_span(span.start, true);
                report.swapped_occurrences += 1;
            } else {
                report.kept_occurrences += 1;
            }
        }
    }
    let mut swapped_ees: Vec<EeKey> = swapped.into_iter().collect();
    swapped_ees.sort();
    report.swapped_ees = swapped_ees;
    Ok((out, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Part {
    Train = 0,
    Dev = 1,
    Test = 2,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusSplit {
    pub train: TaggedCorpus,
    pub dev: TaggedCorpus,
    pub test: TaggedCorpus,
    /// Distinct EEs assigned to train/dev/test.
    pub ee_counts: [usize; 3],
    /// Sentences holding EEs from more than one partition.
    pub conflicts: usize,
    /// Spans whose annotation was removed to resolve conflicts.
    pub cleared_spans: usize,
}

/// Produces `n_splits` independent EE-disjoint splits. Distinct EEs are
/// partitioned by `ratios` (train, dev, test); a positive sentence follows
/// its EEs, negative sentences are split by the same ratios. A sentence
/// with EEs from several partitions goes to the highest of test > dev >
/// train, and the spans belonging elsewhere are un-annotated there.
pub fn split_corpus_by_ee(
    tagged: &TaggedCorpus,
    ratios: [f64; 3],
    n_splits: usize,
    seed: u64,
) -> Result<Vec<CorpusSplit>, DatasetError> {
    if ratios.iter().any(|r| *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatasetError::InvalidSplit(format!("ratios must be non-negative and sum to 1: {ratios:?}")));
    }
    tagged.validate()?;
    let catalog = tagged.ee_catalog();
    let negatives: Vec<usize> = (0..tagged.sentences.len())
        .filter(|&i| tagged.sentences[i].tags.iter().all(|t| *t == Tag::O))
        .collect();

    let cut = |n: usize| {
        let test = (n as f64 * ratios[2]).round() as usize;
        let dev = (n as f64 * ratios[1]).round() as usize;
        (test.min(n), dev.min(n - test.min(n)))
    };

    let mut splits = Vec::with_capacity(n_splits);
    for split in 0..n_splits {
        let mut rng = seeded_rng(seed, 0xC0 + split as u64);
        let mut keys = catalog.clone();
        keys.shuffle(&mut rng);
        let (n_test, n_dev) = cut(keys.len());
        let mut part_of: HashMap<&EeKey, Part> = HashMap::new();
        for (i, k) in keys.iter().enumerate() {
            let p = if i < n_test {
                Part::Test
            } else if i < n_test + n_dev {
                Part::Dev
            } else {
                Part::Train
            };
            part_of.insert(k, p);
        }
        let mut result = CorpusSplit::default();
        for p in part_of.values() {
            result.ee_counts[*p as usize] += 1;
        }

        let mut assigned: Vec<(usize, Part, TaggedSentence)> = Vec::new();
        for (idx, s) in tagged.sentences.iter().enumerate() {
            let spans = s.spans();
            if spans.is_empty() {
                continue;
            }
            let parts: BTreeSet<Part> = spans.iter().map(|sp| part_of[&s.canonical_key(*sp)]).collect();
            let target = *parts.iter().next_back().expect("non-empty");
            let mut sentence = s.clone();
            if parts.len() > 1 {
                result.conflicts += 1;
                for sp in &spans {
                    if part_of[&s.canonical_key(*sp)] != target {
                        sentence.clear_span(sp.start);
                        result.cleared_spans += 1;
                    }
                }
            }
            assigned.push((idx, target, sentence));
        }
        let mut negs = negatives.clone();
        negs.shuffle(&mut rng);
        let (neg_test, neg_dev) = cut(negs.len());
        for (i, &idx) in negs.iter().enumerate() {
            let p = if i < neg_test {
                Part::Test
            } else if i < neg_test + neg_dev {
                Part::Dev
            } else {
                Part::Train
            };
            assigned.push((idx, p, tagged.sentences[idx].clone()));
        }
        assigned.sort_by_key(|(idx, _, _)| *idx);
        for (_, p, s) in assigned {
            match p {
                Part::Train => result.train.sentences.push(s),
                Part::Dev => result.dev.sentences.push(s),
                Part::Test => result.test.sentences.push(s),
            }
        }
        if result.conflicts > 0 {
            log::warn!("split {split}: {} sentences had EEs from two partitions", result.conflicts);
        }
        splits.push(result);
    }
    Ok(splits)
}

/// Indices of the sentences used for one training epoch: every positive
/// sentence plus a fresh sample of negatives sized so that negatives make
/// up at most `neg_frac` of the result.
pub fn downsample_negatives<G: Rng>(corpus: &TaggedCorpus, neg_frac: f64, rng: &mut G) -> Vec<usize> {
    let (mut pos, neg): (Vec<usize>, Vec<usize>) =
        (0..corpus.sentences.len()).partition(|&i| corpus.sentences[i].tags.iter().any(|t| *t != Tag::O));
    let target = if neg_frac >= 1.0 || pos.is_empty() {
        neg.len()
    } else {
        ((pos.len() as f64 * neg_frac / (1.0 - neg_frac)).floor() as usize).min(neg.len())
    };
    let picked = rand::seq::index::sample(rng, neg.len(), target);
    pos.extend(picked.iter().map(|k| neg[k]));
    pos.sort_unstable();
    pos
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::LanguageProfile;

    fn hmong() -> LanguageProfile {
        LanguageProfile::builtin("hmong").unwrap()
    }

    fn cc(id: usize, b1: &str, b2: &str) -> CCRecord {
        CCRecord {
            id,
            language: "toy".into(),
            b1: b1.into(),
            b2: b2.into(),
            b1_syll: Syllable::new("p", b1, "0"),
            b2_syll: Syllable::new("p", b2, "0"),
        }
    }

    fn ee(id: usize, a: &str, b1: &str, b2: &str) -> EERecord {
        EERecord {
            id,
            language: "toy".into(),
            form: EeForm::AB1AB2,
            a: a.into(),
            b1: b1.into(),
            b2: b2.into(),
            a_syll: Syllable::new("p", a, "0"),
            b1_syll: Syllable::new("p", b1, "0"),
            b2_syll: Syllable::new("p", b2, "0"),
        }
    }

    #[test]
    fn loads_ee_rows() {
        let p = hmong();
        let text = "language\tform\ta\tb1\tb2\nhmong\tAB1AB2\tsib\tntxhais\ttub\n";
        let l = parse_ee_list(text, SyllableSource::Parse(&p)).unwrap();
        assert_eq!(l.records.len(), 1);
        assert_eq!(l.records[0].b1_syll, Syllable::new("ntxh", "ai", "s"));
        assert_eq!(l.records[0].surface(), ["sib", "ntxhais", "sib", "tub"]);
    }

    #[test]
    fn keeps_b1ab2a_form_and_presegmented_columns() {
        let p = LanguageProfile::builtin("lahu").unwrap();
        let text = "lahu\tB1AB2A\tcho\tpho^?\tdi\t\t\t\tph\to\t^?\td\ti\t0\n";
        let l = parse_ee_list(text, SyllableSource::Parse(&p)).unwrap();
        assert_eq!(l.records[0].form, EeForm::B1AB2A);
        assert_eq!(l.records[0].b2_syll, Syllable::new("d", "i", "0"));
        assert_eq!(l.records[0].surface(), ["pho^?", "cho", "di", "cho"]);
    }

    #[test]
    fn rejects_bad_rows() {
        let p = hmong();
        let src = SyllableSource::Parse(&p);
        let l = parse_ee_list("hmong\tAB1AB2\tsib\ttub\ttub\n", src).unwrap();
        assert!(l.records.is_empty());
        assert_eq!(l.rejected_identical, 1);
        assert!(matches!(parse_ee_list("hmong\tABCD\ta\tb\tc\n", src), Err(DatasetError::UnknownForm { .. })));
        assert!(matches!(parse_ee_list("hmong\tAB1AB2\ta\n", src), Err(DatasetError::MalformedRow { .. })));
        let l = parse_ee_list("hmong\tAB1AB2\tsib\tq9\ttub\nhmong\tAB1AB2\tsib\tnam\ttub\nhmong\tAB1AB2\tsib\tnam\ttub\n", src)
            .unwrap();
        assert_eq!((l.records.len(), l.dropped_unparsable, l.duplicates), (1, 1, 1));
    }

    #[test]
    fn mc_cc_list_uses_readings() {
        let readings = crate::phonology::parse_mc_readings(include_str!("../../../data/middle_chinese_sample.tsv")).unwrap();
        let l = parse_cc_list("mc\t父\t母\nmc\t天\t地\nmc\t父\t龍\n", SyllableSource::Readings(&readings)).unwrap();
        assert_eq!(l.records.len(), 2);
        assert_eq!(l.dropped_unparsable, 1);
        assert_eq!(l.records[1].b2_syll.tone.symbol, "qu");
    }

    #[test]
    fn single_swap() {
        let out = augment_with_swaps(&[cc(0, "x", "y")], 1);
        assert_eq!(out.len(), 2);
        let att = out.iter().find(|e| e.label == Label::Attested).unwrap();
        let un = out.iter().find(|e| e.label == Label::Unattested).unwrap();
        assert_eq!((att.b1.as_str(), att.b2.as_str()), ("x", "y"));
        assert_eq!((un.b1.as_str(), un.b2.as_str()), ("y", "x"));
    }

    #[test]
    fn both_orders_attested_yield_no_unattested() {
        let out = augment_with_swaps(&[ee(0, "A", "x", "y"), ee(1, "C", "y", "x")], 1);
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|e| e.label == Label::Attested));
    }

    #[test]
    fn split_ratio_and_determinism() {
        let recs: Vec<CCRecord> = (0..100).map(|i| cc(i, &format!("a{i}"), &format!("b{i}"))).collect();
        let spec = SplitSpec { train_frac: 0.7, dev_frac: 0.0, test_frac: 0.3, seed: 7, repetitions: 1 };
        let s = split_then_augment(&recs, &spec).unwrap();
        assert_eq!((s.train_attested, s.test_attested), (70, 30));
        assert_eq!(s.train.len(), 140);
        let again = split_then_augment(&recs, &spec).unwrap();
        assert_eq!(s.train, again.train);
        assert_eq!(s.test, again.test);

        let s = split_then_augment(&recs, &SplitSpec::with_seed(7)).unwrap();
        assert_eq!((s.train_attested, s.dev_attested, s.test_attested), (56, 14, 30));
    }

    #[test]
    fn split_flags_straddling_pairs() {
        let recs: Vec<EERecord> = (0..40).map(|i| ee(i, &format!("a{i}"), "x", "y")).collect();
        let s = split_then_augment(&recs, &SplitSpec::with_seed(3)).unwrap();
        assert_eq!(s.straddling_pairs, 1);
        assert!(s.test.iter().all(|e| e.label == Label::Attested || e.b1 == "y"));
    }

    #[test]
    fn split_errors() {
        let recs = vec![cc(0, "a", "b")];
        assert!(matches!(split_then_augment(&recs, &SplitSpec::with_seed(0)), Err(DatasetError::EmptyPartition(_))));
        let bad = SplitSpec { train_frac: 0.5, dev_frac: 0.0, test_frac: 0.3, seed: 0, repetitions: 1 };
        assert!(matches!(bad.validate(), Err(DatasetError::InvalidSplit(_))));
    }

    #[test]
    fn unique_pair_sampling() {
        let recs = vec![ee(0, "A", "x", "y"), ee(1, "B", "y", "x"), ee(2, "C", "u", "v")];
        let subsets = sample_unique_pairs(&recs, 5, 10).unwrap();
        assert_eq!(subsets.len(), 10);
        assert!(subsets.iter().all(|s| s.len() == 2));
        assert!(subsets.iter().all(|s| s[1].id == 2));
        let firsts: HashSet<usize> = subsets.iter().map(|s| s[0].id).collect();
        assert_eq!(firsts, HashSet::from([0, 1]));
        assert!(sample_unique_pairs(&recs, 5, 0).is_err());
    }

    #[test]
    fn overlap_counts() {
        let test = [ee(0, "A", "x", "y")];
        let same = [ee(1, "Q", "x", "y"), ee(2, "A", "x", "y")];
        let c = component_overlap_analysis(&same, &test, None, None);
        assert_eq!((c.same_order_ee, c.reversed_ee), (1, 0));
        let rev = [ee(1, "Q", "y", "x")];
        let corpus = Corpus::parse("x y z\ny x\nx y");
        let c = component_overlap_analysis(&rev, &test, Some(&[cc(0, "y", "x")]), Some(&corpus));
        assert_eq!((c.same_order_ee, c.reversed_ee, c.same_order_cc, c.reversed_cc), (0, 1, 2, 2));
    }

    fn sentence(words: &str, tags: &str) -> TaggedSentence {
        TaggedSentence {
            tokens: words.split(' ').map(str::to_string).collect(),
            tags: tags.split(' ').map(|t| t.parse().unwrap()).collect(),
        }
    }

    #[test]
    fn tag_well_formedness() {
        assert!(sentence("z A x A y", "O B I I I").check().is_ok());
        assert!(sentence("A x A y q", "B I I I I").check().is_err());
        assert!(sentence("A x A", "B I I").check().is_err());
        assert!(sentence("A x", "O I").check().is_err());
        assert!(sentence("A x A y", "B I-fake I-fake I-fake").check().is_err());
        assert!(sentence("A x A y", "B-fake I-fake I-fake I-fake").check().is_ok());
    }

    #[test]
    fn tagged_corpus_roundtrip() {
        let text = "z\tO\nA\tB\nx\tI\nA\tI\ny\tI\n\nq\tO\n";
        let c = TaggedCorpus::parse(text).unwrap();
        assert_eq!(c.sentences.len(), 2);
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        assert_eq!(TaggedCorpus::parse(std::str::from_utf8(&buf).unwrap()).unwrap(), c);
        assert!(TaggedCorpus::parse("A\tX\n").is_err());
    }

    #[test]
    fn swap_corpus_rewrites_spans() {
        let c = TaggedCorpus { sentences: vec![sentence("k A x A y m", "O B I I I O"), sentence("A x A y", "B I I I")] };
        let (out, report) = generate_swap_corpus(&c, None, 1.0, 0).unwrap();
        assert_eq!(out.sentences[0], sentence("k A y A x m", "O B-fake I-fake I-fake I-fake O"));
        assert_eq!(report.swapped_occurrences, 2);
        let (same, _) = generate_swap_corpus(&c, None, 0.0, 0).unwrap();
        assert_eq!(same, c);
        let bad = TaggedCorpus { sentences: vec![sentence("A x A", "B I I")] };
        assert!(generate_swap_corpus(&bad, None, 0.5, 0).is_err());
    }

    #[test]
    fn corpus_split_partitions_ees() {
        let mut sentences = Vec::new();
        for e in 0..20 {
            for _ in 0..2 {
                sentences.push(sentence(&format!("w{e} a{e} w{e} b{e}"), "B I I I"));
            }
        }
        for n in 0..40 {
            sentences.push(sentence(&format!("n{n} m"), "O O"));
        }
        let c = TaggedCorpus { sentences };
        let splits = split_corpus_by_ee(&c, [0.9, 0.05, 0.05], 3, 11).unwrap();
        assert_eq!(splits.len(), 3);
        for s in &splits {
            assert_eq!(s.ee_counts, [18, 1, 1]);
            let train: HashSet<EeKey> = s.train.ee_catalog().into_iter().collect();
            assert!(s.test.ee_catalog().iter().all(|k| !train.contains(k)));
            assert_eq!(s.train.sentences.len() + s.dev.sentences.len() + s.test.sentences.len(), 80);
        }
        assert_ne!(splits[0].test, splits[1].test);
    }

    #[test]
    fn corpus_split_resolves_conflicts_toward_test() {
        let mut sentences = vec![sentence("A x A y B u B v", "B I I I B I I I")];
        for e in 0..8 {
            sentences.push(sentence(&format!("w{e} a{e} w{e} b{e}"), "B I I I"));
        }
        sentences.push(sentence("A x A y", "B I I I"));
        sentences.push(sentence("B u B v", "B I I I"));
        let c = TaggedCorpus { sentences };
        for seed in 0..20 {
            let s = &split_corpus_by_ee(&c, [0.5, 0.0, 0.5], 1, seed).unwrap()[0];
            let train: HashSet<EeKey> = s.train.ee_catalog().into_iter().collect();
            assert!(s.test.ee_catalog().iter().all(|k| !train.contains(k)));
            s.train.validate().unwrap();
            s.test.validate().unwrap();
        }
    }

    #[test]
    fn negative_downsampling() {
        let mut sentences = vec![sentence("A x A y", "B I I I"); 10];
        sentences.extend(vec![sentence("n", "O"); 500]);
        let c = TaggedCorpus { sentences };
        let mut rng = seeded_rng(1, 0);
        let idx = downsample_negatives(&c, 0.9, &mut rng);
        assert_eq!(idx.len(), 100);
        assert_eq!(idx.iter().filter(|&&i| i < 10).count(), 10);
        let again = downsample_negatives(&c, 0.9, &mut rng);
        assert_ne!(idx, again);
    }
}
