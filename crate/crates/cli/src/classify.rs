use std::path::{Path, PathBuf};

use clap::Args;
use eeorder::classifiers::{run_classification_experiment, ClassifierKind, ExperimentConfig, ExperimentReport, ModelParams};
use eeorder::datasets::SplitSpec;
use eeorder::features::{parse_k_grid, FeatureSet, KChoice};
use eeorder::scales::TiePolicy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Stage};
use crate::inputs::{self, ListKind, Records};

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// TOML experiment file; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lang: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Attested EE or CC list.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<ListKind>,
    /// Comma-separated classifiers: rules, tree, linear-svm, rbf-svm.
    #[arg(long, value_delimiter = ',')]
    pub classifiers: Vec<ClassifierKind>,
    /// Comma-separated feature sets: focal, all, all+embeddings, embeddings-only.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<FeatureSet>,
    /// e.g. "6,12,25,50,100,all".
    #[arg(long)]
    pub k_grid: Option<String>,
    #[arg(long)]
    pub unique_pairs: bool,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Fixed scale for the rules classifier (searched on train + dev otherwise).
    #[arg(long)]
    pub scale: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ties {
    Half,
    Coin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub classifier: ClassifierKind,
    pub features: FeatureSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

/// The experiment file. Paths are relative to the file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyFile {
    pub seed: Option<u64>,
    pub language: Option<String>,
    pub data: Option<PathBuf>,
    pub kind: Option<ListKind>,
    pub scale: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub unique_pairs: Option<bool>,
    pub reps: Option<usize>,
    pub k_grid: Option<Vec<KChoice>>,
    pub split: Option<Fractions>,
    pub ties: Option<Ties>,
    pub params: Option<ModelParams>,
    pub classifiers: Vec<ClassifierKind>,
    pub features: Vec<FeatureSet>,
    pub rows: Vec<RowSpec>,
}

/// Everything a run needs, after merging file and flags.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub language: String,
    pub data: PathBuf,
    pub kind: Option<ListKind>,
    pub scale: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub unique_pairs: bool,
    pub reps: usize,
    pub k_grid: Vec<KChoice>,
    pub split: Fractions,
    pub ties: Ties,
    pub params: ModelParams,
    pub rows: Vec<RowSpec>,
}

const STAGE: &str = "classify/config";

pub fn resolve(args: &ClassifyArgs) -> CliResult<Resolved> {
    let (file, base) = match &args.config {
        Some(p) => {
            inputs::existing(STAGE, p)?;
            let text = std::fs::read_to_string(p).invalid(STAGE)?;
            let file: ClassifyFile = toml::from_str(&text).invalid(STAGE)?;
            (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (ClassifyFile::default(), PathBuf::new()),
    };
    let from_file = |p: &Option<PathBuf>| p.as_ref().map(|p| inputs::relative_to(&base, p));

    let seed = args.seed.or(file.seed).ok_or_else(|| CliError::invalid(STAGE, "a seed is required (--seed or `seed`)"))?;
    let data = args
        .data
        .clone()
        .or_else(|| from_file(&file.data))
        .ok_or_else(|| CliError::invalid(STAGE, "no data file (--data or `data`)"))?;
    let k_grid = match &args.k_grid {
        Some(s) => parse_k_grid(s).invalid(STAGE)?,
        None => file.k_grid.clone().unwrap_or_else(KChoice::default_grid),
    };
    let defaults = SplitSpec::default();
    let split = file.split.unwrap_or(Fractions { train: defaults.train_frac, dev: defaults.dev_frac, test: defaults.test_frac });

    let mut rows = file.rows.clone();
    let classifiers = if args.classifiers.is_empty() { file.classifiers.clone() } else { args.classifiers.clone() };
    let features = if args.features.is_empty() { file.features.clone() } else { args.features.clone() };
    if !args.classifiers.is_empty() || !args.features.is_empty() {
        rows.clear();
    }
    if rows.is_empty() {
        let classifiers = if classifiers.is_empty() { vec![ClassifierKind::Rules] } else { classifiers };
        let features = if features.is_empty() { vec![FeatureSet::Focal] } else { features };
        for &c in &classifiers {
            for &f in &features {
                rows.push(RowSpec { classifier: c, features: f });
            }
        }
    }

    let resolved = Resolved {
        seed,
        language: args.lang.clone().or(file.language.clone()).unwrap_or_else(|| "hmong".into()),
        data,
        kind: args.kind.or(file.kind),
        scale: args.scale.clone().or_else(|| from_file(&file.scale)),
        embeddings: args.embeddings.clone().or_else(|| from_file(&file.embeddings)),
        out: args.out.clone().or_else(|| from_file(&file.out)),
        unique_pairs: args.unique_pairs || file.unique_pairs.unwrap_or(false),
        reps: args.reps.or(file.reps).unwrap_or(defaults.repetitions),
        k_grid,
        split,
        ties: file.ties.unwrap_or(Ties::Half),
        params: file.params.unwrap_or_default(),
        rows,
    };
    validate(&resolved)?;
    Ok(resolved)
}

fn validate(r: &Resolved) -> CliResult<()> {
    inputs::existing(STAGE, &r.data)?;
    for p in r.scale.iter().chain(&r.embeddings) {
        inputs::existing(STAGE, p)?;
    }
    if r.reps == 0 {
        return Err(CliError::invalid(STAGE, "reps must be at least 1"));
    }
    if r.embeddings.is_none() {
        if let Some(row) = r.rows.iter().find(|row| row.features.uses_embeddings() && row.classifier != ClassifierKind::Rules) {
            return Err(CliError::invalid(
                STAGE,
                format!("row {}/{} needs an embedding table", row.classifier.name(), row.features.name()),
            ));
        }
    }
    r.split_spec().validate().invalid(STAGE)
}

impl Resolved {
    fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_frac: self.split.train,
            dev_frac: self.split.dev,
            test_frac: self.split.test,
            seed: self.seed,
            repetitions: self.reps,
        }
    }

    fn experiment_config(&self, row: RowSpec, embedding_label: Option<String>) -> ExperimentConfig {
        let mut params = self.params;
        params.linear.seed = self.seed;
        ExperimentConfig {
            language: self.language.clone(),
            feature_set: row.features,
            classifier: row.classifier,
            split: self.split_spec(),
            k_grid: self.k_grid.clone(),
            unique_pairs: self.unique_pairs,
            params,
            tie_policy: match self.ties {
                Ties::Half => TiePolicy::ExpectedHalf,
                Ties::Coin => TiePolicy::RandomCoin(self.seed),
            },
            embedding_label,
        }
    }
}

pub fn run(args: &ClassifyArgs) -> CliResult<()> {
    let cfg = resolve(args)?;
    let profile = inputs::profile("classify/load", &cfg.language)?;
    let records = inputs::records("classify/load", &cfg.data, cfg.kind, &profile)?;
    let scale = cfg.scale.as_deref().map(|p| inputs::scale("classify/load", p)).transpose()?;
    let emb = cfg.embeddings.as_deref().map(|p| inputs::embeddings("classify/load", p)).transpose()?;
    let label = emb.as_ref().map(|e| e.meta.label.clone());
    let configs: Vec<ExperimentConfig> = cfg.rows.iter().map(|&row| cfg.experiment_config(row, label.clone())).collect();

    let rows = configs
        .par_iter()
        .map(|c| match &records {
            Records::Ee(r) => run_classification_experiment(r, &profile, scale.as_ref(), emb.as_ref(), c),
            Records::Cc(r) => run_classification_experiment(r, &profile, scale.as_ref(), emb.as_ref(), c),
        })
        .collect::<Result<Vec<_>, _>>()
        .failed("classify/run")?;
    let report = ExperimentReport::new(configs, rows);
    let table = report.to_table();
    print!("{table}");

    if let Some(out) = &cfg.out {
        let stage = "classify/write";
        std::fs::create_dir_all(out).failed(stage)?;
        inputs::write_text(stage, &out.join("report.csv"), &report.to_csv())?;
        inputs::write_text(stage, &out.join("report.txt"), &table)?;
        let echo = serde_json::json!({
            "config": &cfg,
            "workers": rayon::current_num_threads(),
            "report": &report,
        });
        inputs::write_text(stage, &out.join("report.json"), &serde_json::to_string_pretty(&echo).failed(stage)?)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}
