//! Python bindings: languages, scales, embeddings, classification
//! experiments and the tagging baseline.

use std::path::PathBuf;

use eeorder_core::classifiers::{run_classification_experiment, ClassifierKind, ExperimentConfig, ExperimentReport};
use eeorder_core::datasets::{augment_with_swaps, load_ee_list, Corpus, EERecord, SplitSpec, Tag, TaggedCorpus};
use eeorder_core::embeddings::{train_skipgram, EmbeddingTable, SkipGramParams};
use eeorder_core::features::{chi2_cell, FeatureSet, FeatureSpace};
use eeorder_core::phonology::{parse_syllable, LanguageProfile};
use eeorder_core::scales::{self, TiePolicy};
use eeorder_core::tagging::{self, BaselineConfig, ConfusionMatrix, Stages};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON into plain Python containers.
fn to_py<'py, T: serde::Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn ee_records(lang: &Language, path: &str) -> PyResult<Vec<EERecord>> {
    Ok(load_ee_list(path, &lang.profile).map_err(err)?.records)
}

/// A language profile: phoneme inventory and focal constituent.
#[pyclass(module = "eeorder", frozen)]
pub struct Language {
    profile: LanguageProfile,
}

#[pymethods]
impl Language {
    /// Uses `$EEORDER_DATA` when set, the bundled inventories otherwise.
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Language { profile: LanguageProfile::resolve(name).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.profile.language.clone()
    }

    #[getter]
    fn focal(&self) -> &'static str {
        self.profile.focal.class().name()
    }

    /// (onsets, rhymes, tones)
    fn sizes(&self) -> (usize, usize, usize) {
        self.profile.inventory.sizes()
    }

    /// (onset, rhyme, tone), or None when the token does not parse.
    fn parse(&self, token: &str) -> Option<(String, String, String)> {
        parse_syllable(&self.profile.inventory, token).ok().map(|s| (s.onset.symbol, s.rhyme.symbol, s.tone.symbol))
    }

    fn __repr__(&self) -> String {
        format!("Language({:?})", self.profile.language)
    }
}

#[pyclass(module = "eeorder", frozen)]
pub struct Scale {
    inner: scales::Scale,
}

#[pymethods]
impl Scale {
    /// From the text format, e.g. "j < b < m".
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Scale { inner: scales::Scale::parse(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Scale { inner: scales::Scale::load(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    fn ranked_symbols(&self) -> Vec<String> {
        self.inner.ranked_symbols().into_iter().map(String::from).collect()
    }

    /// Rank of a symbol; None when it is unranked. Raises for unknown symbols.
    fn rank(&self, symbol: &str) -> PyResult<Option<usize>> {
        self.inner.rank(symbol).ok_or_else(|| err(format!("unknown symbol {symbol:?}")))
    }

    /// "attested", "unattested" or "tie" for focal symbols in B1, B2 order.
    fn compare(&self, b1: &str, b2: &str) -> PyResult<&'static str> {
        Ok(match scales::compare(&self.inner, b1, b2).map_err(err)? {
            scales::Decision::Attested => "attested",
            scales::Decision::Unattested => "unattested",
            scales::Decision::Tie => "tie",
        })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Scale({:?})", self.inner.to_string())
    }
}

#[pyclass(module = "eeorder", frozen)]
pub struct Embeddings {
    inner: EmbeddingTable,
}

#[pymethods]
impl Embeddings {
    /// Binary table, or CSV when the path ends in `.csv`.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = if path.ends_with(".csv") { EmbeddingTable::load_csv(path) } else { EmbeddingTable::load(path) };
        Ok(Embeddings { inner: inner.map_err(err)? })
    }

    /// Skip-gram with negative sampling on a whitespace-tokenized corpus file.
    #[staticmethod]
    #[pyo3(signature = (corpus, dim=100, window=5, negatives=5, epochs=5, min_count=5, seed=0))]
    fn train(corpus: &str, dim: usize, window: usize, negatives: usize, epochs: usize, min_count: usize, seed: u64) -> PyResult<Self> {
        let corpus = Corpus::load(corpus).map_err(err)?;
        let params = SkipGramParams { dim, window, negatives, epochs, min_count, seed, ..SkipGramParams::default() };
        Ok(Embeddings { inner: train_skipgram(&corpus, &params).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn loss_history(&self) -> Vec<f64> {
        self.inner.meta.loss_history.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, word: &str) -> bool {
        self.inner.contains(word)
    }

    fn vector(&self, word: &str) -> Option<Vec<f32>> {
        self.inner.get(word).map(<[f32]>::to_vec)
    }

    fn cosine(&self, w1: &str, w2: &str) -> PyResult<f64> {
        self.inner.cosine(w1, w2).map_err(err)
    }

    #[pyo3(signature = (word, k=10))]
    fn neighbors(&self, word: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
        self.inner.neighbors(word, k).map_err(err)
    }
}

/// Best total order of the observed focal symbols and its accuracy on the
/// augmented EE list.
#[pyfunction]
#[pyo3(signature = (language, path, seed=0))]
fn search_best_scale(language: &Language, path: &str, seed: u64) -> PyResult<(Scale, f64)> {
    let pairs = augment_with_swaps(&ee_records(language, path)?, seed);
    let class = language.profile.focal.class();
    let symbols: Vec<&str> = language
        .profile
        .inventory
        .class(class)
        .iter()
        .map(|p| p.symbol.as_str())
        .filter(|s| pairs.iter().any(|p| p.b1_syll.get(class).symbol == *s || p.b2_syll.get(class).symbol == *s))
        .collect();
    let (inner, acc) = scales::search_best_scale(&pairs, &symbols, class).map_err(err)?;
    Ok((Scale { inner }, acc))
}

/// Rule accuracy of a scale on the augmented EE list, ties scored 1/2.
#[pyfunction]
#[pyo3(signature = (language, path, scale, seed=0))]
fn rule_accuracy(language: &Language, path: &str, scale: &Scale, seed: u64) -> PyResult<f64> {
    let pairs = augment_with_swaps(&ee_records(language, path)?, seed);
    scales::rule_accuracy(&scale.inner, &pairs, TiePolicy::ExpectedHalf).map_err(err)
}

/// Scale read off a JSON decision tree over the focal or full feature space.
#[pyfunction]
fn induce_scale(language: &Language, tree_json: &str) -> PyResult<Scale> {
    let tree = eeorder_core::classifiers::DecisionTree::from_json(tree_json).map_err(err)?;
    let space = [FeatureSet::Focal, FeatureSet::All]
        .into_iter()
        .map(|f| FeatureSpace::for_set(&language.profile, f, None))
        .find(|s| s.len() == tree.n_features)
        .ok_or_else(|| err(format!("tree has {} features", tree.n_features)))?;
    let inner = scales::induce_scale_from_tree(&tree, &space, language.profile.focal.class()).map_err(err)?;
    Ok(Scale { inner })
}

/// One classification row on an EE list; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (language, path, classifier="rules", features="focal", seed=0, unique_pairs=false, reps=10, scale=None, embeddings=None))]
#[allow(clippy::too_many_arguments)]
fn classify<'py>(
    py: Python<'py>,
    language: &Language,
    path: &str,
    classifier: &str,
    features: &str,
    seed: u64,
    unique_pairs: bool,
    reps: usize,
    scale: Option<&Scale>,
    embeddings: Option<&Embeddings>,
) -> PyResult<Bound<'py, PyAny>> {
    let records = ee_records(language, path)?;
    let mut cfg = ExperimentConfig {
        language: language.profile.language.clone(),
        classifier: classifier.parse::<ClassifierKind>().map_err(err)?,
        feature_set: features.parse::<FeatureSet>().map_err(err)?,
        split: SplitSpec { seed, repetitions: reps, ..SplitSpec::default() },
        unique_pairs,
        embedding_label: embeddings.map(|e| e.inner.meta.label.clone()),
        ..ExperimentConfig::default()
    };
    cfg.params.linear.seed = seed;
    let row = py
        .detach(|| {
            run_classification_experiment(
                &records,
                &language.profile,
                scale.map(|s| &s.inner),
                embeddings.map(|e| &e.inner),
                &cfg,
            )
        })
        .map_err(err)?;
    to_py(py, &ExperimentReport::new(vec![cfg], vec![row]))
}

#[pyfunction]
fn chi2(a: u64, b: u64, c: u64, d: u64) -> f64 {
    chi2_cell(a, b, c, d)
}

/// Runs the baseline cascade over a corpus file and writes the tagged
/// corpus to `out`. `stages` is e.g. "none" or "parsable,sim,scale".
#[pyfunction]
#[pyo3(signature = (language, corpus, out, stages="none", alpha=0.4, embeddings=None, scale=None))]
#[allow(clippy::too_many_arguments)]
fn baseline_tag<'py>(
    py: Python<'py>,
    language: &Language,
    corpus: &str,
    out: PathBuf,
    stages: &str,
    alpha: f64,
    embeddings: Option<&Embeddings>,
    scale: Option<&Scale>,
) -> PyResult<Bound<'py, PyAny>> {
    let corpus = Corpus::load(corpus).map_err(err)?;
    let cfg = BaselineConfig { stages: stages.parse::<Stages>().map_err(err)?, alpha, exclude_identical: true };
    let (tagged, report) =
        tagging::baseline_tag(&corpus, &language.profile, embeddings.map(|e| &e.inner), scale.map(|s| &s.inner), &cfg)
            .map_err(err)?;
    tagged.save(&out).map_err(err)?;
    to_py(py, &report)
}

/// Token and span P/R/F1 plus the confusion matrix of two tagged files.
#[pyfunction]
fn evaluate_tags<'py>(py: Python<'py>, pred: &str, gold: &str) -> PyResult<Bound<'py, PyAny>> {
    let pred = TaggedCorpus::load(pred).map_err(err)?;
    let gold = TaggedCorpus::load(gold).map_err(err)?;
    to_py(py, &tagging::evaluate_tags(&pred, &gold).map_err(err)?)
}

/// (BB + FF) / (BB + FF + BF + FB) from the four begin-tag counts.
#[pyfunction]
fn in_context_accuracy(bb: usize, ff: usize, bf: usize, fb: usize) -> PyResult<f64> {
    let mut cm = ConfusionMatrix::default();
    let (b, f) = (Tag::B.index(), Tag::BFake.index());
    cm.0[b][b] = bb;
    cm.0[f][f] = ff;
    cm.0[b][f] = bf;
    cm.0[f][b] = fb;
    tagging::in_context_accuracy(&cm).map_err(err)
}

/// Writes the synthetic datasets and returns their paths.
#[pyfunction]
fn write_fixtures(dir: PathBuf, seed: u64) -> PyResult<Vec<String>> {
    let paths = eeorder_core::fixtures::write_fixtures(&dir, seed).map_err(err)?;
    Ok(paths.into_iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
pub fn eeorder(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Language>()?;
    m.add_class::<Scale>()?;
    m.add_class::<Embeddings>()?;
    m.add_function(wrap_pyfunction!(search_best_scale, m)?)?;
    m.add_function(wrap_pyfunction!(rule_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(induce_scale, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(chi2, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_tag, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_tags, m)?)?;
    m.add_function(wrap_pyfunction!(in_context_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(write_fixtures, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
