use std::path::{Path, PathBuf};

use clap::Subcommand;
use eeorder::datasets::{generate_swap_corpus, split_corpus_by_ee, Corpus};
use eeorder::tagging::{
    baseline_tag, evaluate_tags, in_context_accuracy, tag_with_model, train_window_tagger, BaselineConfig, Stages, TaggerParams,
    WindowTagger,
};

use crate::error::{CliError, CliResult, Stage};
use crate::inputs;

#[derive(Debug, Subcommand)]
pub enum TagCmd {
    /// Tag every AB1AB2 candidate that survives the enabled filters.
    Baseline {
        /// Running text, or a tagged corpus whose tags are ignored.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "hmong")]
        lang: String,
        /// Comma-separated subset of parsable, sim, scale; or none / all.
        #[arg(long, default_value = "none")]
        stages: Stages,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        /// Embedding table for the similarity filter.
        #[arg(long)]
        emb: Option<PathBuf>,
        /// Scale for the scale filter.
        #[arg(long)]
        scale: Option<PathBuf>,
        /// Also consider candidates with B1 = B2.
        #[arg(long)]
        keep_identical: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the window tagger on a training corpus with early stopping on dev.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add onset/rhyme/tone indicators of the window words.
        #[arg(long)]
        phonemes: bool,
        #[arg(long, default_value = "hmong")]
        lang: String,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        neg_frac: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tag a corpus with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Token and span precision/recall/F1 of a tagging against gold.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Print the confusion matrix and in-context accuracy.
        #[arg(long)]
        swap: bool,
        #[arg(long, default_value = "tagger")]
        label: String,
        /// Write the confusion matrix as CSV.
        #[arg(long)]
        confusion_out: Option<PathBuf>,
        /// Write all metrics as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Swap B1/B2 in a share of the distinct EEs and retag them as fake.
    Swap {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// EE-disjoint train/dev/test splits of a tagged corpus.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        /// Train, dev and test shares.
        #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.1, 0.1])]
        ratios: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        n_splits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Untagged text, or the tokens of a `.tagged` file.
fn running_text(stage: &'static str, path: &Path) -> CliResult<Corpus> {
    if path.extension().is_some_and(|e| e == "tagged") {
        Ok(inputs::tagged(stage, path)?.to_corpus())
    } else {
        inputs::corpus(stage, path)
    }
}

pub fn run(cmd: TagCmd) -> CliResult<()> {
    match cmd {
        TagCmd::Baseline { corpus, lang, stages, alpha, emb, scale, keep_identical, out } => {
            let stage = "tag/baseline";
            let corpus = running_text(stage, &corpus)?;
            let profile = inputs::profile(stage, &lang)?;
            if stages.similarity && emb.is_none() {
                return Err(CliError::invalid(stage, "the sim stage needs --emb"));
            }
            if stages.scale && scale.is_none() {
                return Err(CliError::invalid(stage, "the scale stage needs --scale"));
            }
            let emb = emb.as_deref().map(|p| inputs::embeddings(stage, p)).transpose()?;
            let scale = scale.as_deref().map(|p| inputs::scale(stage, p)).transpose()?;
            let cfg = BaselineConfig { stages, alpha, exclude_identical: !keep_identical };
            let (tagged, report) = baseline_tag(&corpus, &profile, emb.as_ref(), scale.as_ref(), &cfg).failed(stage)?;
            tagged.save(&out).failed(stage)?;
            println!("stages: {stages} (alpha {alpha})");
            println!("candidates: {}", report.candidates);
            println!("failed parsable: {}", report.failed_parsable);
            println!("failed similarity: {}", report.failed_similarity);
            println!("failed scale: {}", report.failed_scale);
            println!("overlaps skipped: {}", report.overlaps_skipped);
            println!("tagged: {}", report.tagged);
            Ok(())
        }
        TagCmd::Train { train, dev, seed, phonemes, lang, max_epochs, patience, learning_rate, neg_frac, out } => {
            let stage = "tag/train";
            let train = inputs::tagged(stage, &train)?;
            let dev = inputs::tagged(stage, &dev)?;
            let profile = if phonemes { Some(inputs::profile(stage, &lang)?) } else { None };
            let d = TaggerParams::default();
            let params = TaggerParams {
                learning_rate: learning_rate.unwrap_or(d.learning_rate),
                max_epochs: max_epochs.unwrap_or(d.max_epochs),
                patience: patience.unwrap_or(d.patience),
                seed,
                neg_frac: neg_frac.unwrap_or(d.neg_frac),
                phoneme_features: phonemes,
            };
            let model = train_window_tagger(&train, &dev, profile.as_ref(), &params).invalid(stage)?;
            let log = &model.log;
            println!(
                "epochs {}, best epoch {}, best dev span F1 {:.4}{}",
                log.epochs_run,
                log.best_epoch,
                log.dev_span_f1.get(log.best_epoch).copied().unwrap_or(0.0),
                if log.stopped_early { " (stopped early)" } else { "" }
            );
            inputs::write_text(stage, &out, &serde_json::to_string(&model).failed(stage)?)
        }
        TagCmd::Predict { model, corpus, out } => {
            let stage = "tag/predict";
            inputs::existing(stage, &model)?;
            let text = std::fs::read_to_string(&model).invalid(stage)?;
            let model: WindowTagger = serde_json::from_str(&text).invalid(stage)?;
            let corpus = running_text(stage, &corpus)?;
            let (tagged, repairs) = tag_with_model(&model, &corpus);
            tagged.save(&out).failed(stage)?;
            println!(
                "spans: {}; repairs: {} orphan I, {} dropped spans, {} relabeled spans",
                tagged.positive_count(),
                repairs.orphan_inside,
                repairs.dropped_spans,
                repairs.relabeled_spans
            );
            Ok(())
        }
        TagCmd::Eval { pred, gold, swap, label, confusion_out, json } => {
            let stage = "tag/eval";
            let pred = inputs::tagged(stage, &pred)?;
            let gold = inputs::tagged(stage, &gold)?;
            let m = evaluate_tags(&pred, &gold).invalid(stage)?;
            print!("{}", m.table(&label));
            let mut ica = None;
            if swap {
                print!("\n{}", m.confusion.to_csv());
                match in_context_accuracy(&m.confusion) {
                    Ok(a) => {
                        println!("in-context accuracy: {:.2}%", 100.0 * a);
                        ica = Some(a);
                    }
                    Err(e) => println!("in-context accuracy: undefined ({e})"),
                }
            }
            if let Some(p) = confusion_out {
                inputs::write_text(stage, &p, &m.confusion.to_csv())?;
            }
            if let Some(p) = json {
                let value = serde_json::json!({ "label": label, "metrics": m, "in_context_accuracy": ica });
                inputs::write_text(stage, &p, &serde_json::to_string_pretty(&value).failed(stage)?)?;
            }
            Ok(())
        }
        TagCmd::Swap { corpus, frac, seed, out } => {
            let stage = "tag/swap";
            let tagged = inputs::tagged(stage, &corpus)?;
            let (swapped, report) = generate_swap_corpus(&tagged, None, frac, seed).invalid(stage)?;
            swapped.save(&out).failed(stage)?;
            println!(
                "swapped {} EEs ({} occurrences), kept {} occurrences",
                report.swapped_ees.len(),
                report.swapped_occurrences,
                report.kept_occurrences
            );
            Ok(())
        }
        TagCmd::Split { corpus, ratios, n_splits, seed, out_dir } => {
            let stage = "tag/split";
            let tagged = inputs::tagged(stage, &corpus)?;
            let ratios: [f64; 3] = ratios.try_into().map_err(|_| CliError::invalid(stage, "three ratios expected"))?;
            let splits = split_corpus_by_ee(&tagged, ratios, n_splits, seed).invalid(stage)?;
            for (i, s) in splits.iter().enumerate() {
                let dir = if n_splits == 1 { out_dir.clone() } else { out_dir.join(format!("split{i}")) };
                std::fs::create_dir_all(&dir).failed(stage)?;
                for (name, part) in [("train", &s.train), ("dev", &s.dev), ("test", &s.test)] {
                    part.save(dir.join(format!("{name}.tagged"))).failed(stage)?;
                }
                println!(
                    "{}: EEs train/dev/test {}/{}/{}, {} conflicting sentences, {} spans cleared",
                    dir.display(),
                    s.ee_counts[0],
                    s.ee_counts[1],
                    s.ee_counts[2],
                    s.conflicts,
                    s.cleared_spans
                );
            }
            Ok(())
        }
    }
}
