//! Split → select → train → test runs laid out as accuracy tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{train_model, ClassifierError, ClassifierKind, ModelParams, TrainedModel};
use crate::datasets::{sample_unique_pairs, split_then_augment, AttestedPair, DatasetError, Label, OrderedPairExample, SplitSpec};
use crate::embeddings::EmbeddingTable;
use crate::features::{
    chi2_scores, choose_k, encode_all, rank_by_score, FeatureError, FeatureSet, FeatureSpace, KChoice, SparseVec,
};
use crate::phonology::LanguageProfile;
use crate::scales::{rule_accuracy, search_best_scale, Scale, ScaleError, TiePolicy};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("split: {0}")]
    Split(#[from] DatasetError),
    #[error("features: {0}")]
    Features(#[from] FeatureError),
    #[error("scale: {0}")]
    Scale(#[from] ScaleError),
    #[error("training: {0}")]
    Training(#[from] ClassifierError),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub language: String,
    pub feature_set: FeatureSet,
    pub classifier: ClassifierKind,
    pub split: SplitSpec,
    pub k_grid: Vec<KChoice>,
    /// Average over subsets with one record per unordered (B1, B2).
    pub unique_pairs: bool,
    pub params: ModelParams,
    pub tie_policy: TiePolicy,
    /// Label for the embedding source in reports.
    pub embedding_label: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            language: "hmong".into(),
            feature_set: FeatureSet::Focal,
            classifier: ClassifierKind::Rules,
            split: SplitSpec::default(),
            k_grid: KChoice::default_grid(),
            unique_pairs: false,
            params: ModelParams::default(),
            tie_policy: TiePolicy::ExpectedHalf,
            embedding_label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub accuracy: f64,
    /// Augmented examples across train, dev and test.
    pub n_examples: usize,
    pub k: Option<usize>,
    pub straddling_pairs: usize,
    pub scale: Option<String>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub language: String,
    pub classifier: ClassifierKind,
    pub feature_set: FeatureSet,
    pub embeddings: Option<String>,
    pub mode: String,
    pub runs: Vec<RunResult>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_examples: f64,
}

impl ExperimentRow {
    fn from_runs(cfg: &ExperimentConfig, runs: Vec<RunResult>) -> Self {
        let n = runs.len().max(1) as f64;
        let mean = runs.iter().map(|r| r.accuracy).sum::<f64>() / n;
        let var = runs.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n;
        ExperimentRow {
            language: cfg.language.clone(),
            classifier: cfg.classifier,
            feature_set: cfg.feature_set,
            embeddings: if cfg.feature_set.uses_embeddings() { cfg.embedding_label.clone() } else { None },
            mode: if cfg.unique_pairs { "unique".into() } else { "full".into() },
            mean_examples: runs.iter().map(|r| r.n_examples as f64).sum::<f64>() / n,
            runs,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
        }
    }

    pub fn features_label(&self) -> String {
        match (&self.embeddings, self.classifier) {
            (_, ClassifierKind::Rules) => "focal scale".into(),
            (Some(e), _) => format!("{} ({e})", self.feature_set.name()),
            (None, _) => self.feature_set.name().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub toolkit_version: String,
    pub seed: u64,
    pub configs: Vec<ExperimentConfig>,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    pub fn new(configs: Vec<ExperimentConfig>, rows: Vec<ExperimentRow>) -> Self {
        ExperimentReport {
            toolkit_version: env!("CARGO_PKG_VERSION").into(),
            seed: configs.first().map_or(0, |c| c.split.seed),
            configs,
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("language,classifier,features,mode,runs,n,accuracy,std\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.1},{:.6},{:.6}\n",
                r.language,
                r.classifier.name(),
                r.features_label(),
                r.mode,
                r.runs.len(),
                r.mean_examples,
                r.mean_accuracy,
                r.std_accuracy
            ));
        }
        out
    }

    /// Aligned text: one row per classifier/feature set, accuracy in percent.
    pub fn to_table(&self) -> String {
        let header = ["Language", "Classifier", "Features", "Mode", "N", "Accuracy"];
        let body: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.language.clone(),
                    r.classifier.name().into(),
                    r.features_label(),
                    r.mode.clone(),
                    format!("{:.0}", r.mean_examples),
                    format!("{:.1}%", 100.0 * r.mean_accuracy),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let fmt_row = |cells: &[String]| {
            cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
        };
        let mut out = fmt_row(&header.map(String::from));
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for row in &body {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        out
    }
}

/// One configuration over attested records. `scale` is used by the rules
/// classifier; without it the best scale is searched on train + dev.
pub fn run_classification_experiment<R: AttestedPair + Clone + Sync>(
    records: &[R],
    profile: &LanguageProfile,
    scale: Option<&Scale>,
    embeddings: Option<&EmbeddingTable>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentRow, ExperimentError> {
    cfg.split.validate()?;
    if cfg.feature_set.uses_embeddings() && embeddings.is_none() && cfg.classifier != ClassifierKind::Rules {
        return Err(ExperimentError::Config(format!("feature set {} needs embeddings", cfg.feature_set.name())));
    }
    let runs = if cfg.unique_pairs {
        let subsets = sample_unique_pairs(records, cfg.split.seed, cfg.split.repetitions)?;
        subsets
            .par_iter()
            .enumerate()
            .map(|(rep, subset)| {
                let spec = SplitSpec { seed: cfg.split.seed.wrapping_add(rep as u64), ..cfg.split };
                run_once(subset, profile, scale, embeddings, cfg, &spec)
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        vec![run_once(records, profile, scale, embeddings, cfg, &cfg.split)?]
    };
    Ok(ExperimentRow::from_runs(cfg, runs))
}

fn run_once<R: AttestedPair>(
    records: &[R],
    profile: &LanguageProfile,
    scale: Option<&Scale>,
    embeddings: Option<&EmbeddingTable>,
    cfg: &ExperimentConfig,
    spec: &SplitSpec,
) -> Result<RunResult, ExperimentError> {
    let split = split_then_augment(records, spec)?;
    let n_examples = split.train.len() + split.dev.len() + split.test.len();
    let train_dev: Vec<OrderedPairExample> = split.train.iter().chain(&split.dev).cloned().collect();

    if cfg.classifier == ClassifierKind::Rules {
        let scale = match scale {
            Some(s) => s.clone(),
            None => {
                let symbols: Vec<&str> =
                    profile.inventory.class(profile.focal.class()).iter().map(|p| p.symbol.as_str()).collect();
                search_best_scale(&train_dev, &symbols, profile.focal.class())?.0
            }
        };
        let accuracy = rule_accuracy(&scale, &split.test, cfg.tie_policy)?;
        return Ok(RunResult {
            accuracy,
            n_examples,
            k: None,
            straddling_pairs: split.straddling_pairs,
            scale: Some(scale.to_string()),
            converged: true,
        });
    }

    let space = FeatureSpace::for_set(profile, cfg.feature_set, embeddings.map(EmbeddingTable::dim));
    let (train_x, train_y) = encode_all(&split.train, &space, embeddings)?;
    let (dev_x, dev_y) = encode_all(&split.dev, &space, embeddings)?;
    let (test_x, test_y) = encode_all(&split.test, &space, embeddings)?;

    let ranking = feature_ranking(&space, &train_x, &train_y, &cfg.params)?;
    let params = cfg.params;
    let kind = cfg.classifier;
    let selection = choose_k(&ranking, &cfg.k_grid, (&train_x, &train_y), (&dev_x, &dev_y), |xs, ys| {
        let model = train_model(kind, xs, ys, &params).map_err(|e| e.to_string())?;
        Ok(move |x: &SparseVec| model.predict(x).unwrap_or(Label::Attested))
    })?;
    let mask = selection.mask;
    let final_x: Vec<SparseVec> = mask.apply_all(&train_x).into_iter().chain(mask.apply_all(&dev_x)).collect();
    let final_y: Vec<Label> = train_y.iter().chain(&dev_y).copied().collect();
    let model = train_model(kind, &final_x, &final_y, &params)?;
    let accuracy = model.accuracy(&mask.apply_all(&test_x), &test_y)?;
    Ok(RunResult {
        accuracy,
        n_examples,
        k: Some(selection.k),
        straddling_pairs: split.straddling_pairs,
        scale: None,
        converged: !matches!(&model, TrainedModel::Rbf(m) if !m.converged),
    })
}

/// χ² ranking for purely one-hot spaces, linear-SVM |weight| otherwise.
fn feature_ranking(
    space: &FeatureSpace,
    xs: &[SparseVec],
    ys: &[Label],
    params: &ModelParams,
) -> Result<Vec<usize>, ExperimentError> {
    if space.embedding_dim().is_none() {
        return Ok(rank_by_score(&chi2_scores(xs, ys)?));
    }
    let lp = &params.linear;
    let model = super::train_linear_svm(xs, ys, lp.lambda, lp.epochs, lp.seed)?;
    let mags: Vec<f64> = model.weights.iter().map(|w| w.abs()).collect();
    Ok(rank_by_score(&mags))
}
