use std::path::{Path, PathBuf};

use clap::ValueEnum;
use eeorder::datasets::{
    augment_with_swaps, load_cc_list, load_ee_list, CCRecord, Corpus, EERecord, Loaded, OrderedPairExample, SyllableSource,
    TaggedCorpus,
};
use eeorder::embeddings::EmbeddingTable;
use eeorder::phonology::{resolve_mc_readings, LanguageProfile};
use eeorder::scales::Scale;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ListKind {
    Ee,
    Cc,
}

impl ListKind {
    /// Middle Chinese lists are compounds, everything else is EEs.
    pub fn default_for(profile: &LanguageProfile) -> ListKind {
        if profile.mc_mode {
            ListKind::Cc
        } else {
            ListKind::Ee
        }
    }
}

pub enum Records {
    Ee(Vec<EERecord>),
    Cc(Vec<CCRecord>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Ee(r) => r.len(),
            Records::Cc(r) => r.len(),
        }
    }

    pub fn augmented(&self, seed: u64) -> Vec<OrderedPairExample> {
        match self {
            Records::Ee(r) => augment_with_swaps(r, seed),
            Records::Cc(r) => augment_with_swaps(r, seed),
        }
    }
}

pub fn existing(stage: &'static str, path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::invalid(stage, format!("{} does not exist", path.display())))
    }
}

pub fn profile(stage: &'static str, lang: &str) -> CliResult<LanguageProfile> {
    LanguageProfile::resolve(lang).invalid(stage)
}

fn report_loaded<R>(path: &Path, loaded: &Loaded<R>) {
    eprintln!(
        "{}: {} records ({} unparsable dropped, {} identical rejected, {} duplicates)",
        path.display(),
        loaded.records.len(),
        loaded.dropped_unparsable,
        loaded.rejected_identical,
        loaded.duplicates
    );
}

pub fn records(stage: &'static str, path: &Path, kind: Option<ListKind>, profile: &LanguageProfile) -> CliResult<Records> {
    existing(stage, path)?;
    let out = match kind.unwrap_or_else(|| ListKind::default_for(profile)) {
        ListKind::Ee => {
            let loaded = load_ee_list(path, profile).invalid(stage)?;
            report_loaded(path, &loaded);
            Records::Ee(loaded.records)
        }
        ListKind::Cc => {
            let loaded = if profile.mc_mode {
                let readings = resolve_mc_readings().invalid(stage)?;
                load_cc_list(path, SyllableSource::Readings(&readings))
            } else {
                load_cc_list(path, SyllableSource::Parse(profile))
            }
            .invalid(stage)?;
            report_loaded(path, &loaded);
            Records::Cc(loaded.records)
        }
    };
    if out.len() == 0 {
        return Err(CliError::invalid(stage, format!("{} holds no usable records", path.display())));
    }
    Ok(out)
}

pub fn scale(stage: &'static str, path: &Path) -> CliResult<Scale> {
    existing(stage, path)?;
    Scale::load(path).invalid(stage)
}

/// Binary tables by default, CSV for `.csv` files.
pub fn embeddings(stage: &'static str, path: &Path) -> CliResult<EmbeddingTable> {
    existing(stage, path)?;
    if path.extension().is_some_and(|e| e == "csv") {
        EmbeddingTable::load_csv(path).invalid(stage)
    } else {
        EmbeddingTable::load(path).invalid(stage)
    }
}

pub fn corpus(stage: &'static str, path: &Path) -> CliResult<Corpus> {
    existing(stage, path)?;
    Corpus::load(path).invalid(stage)
}

pub fn tagged(stage: &'static str, path: &Path) -> CliResult<TaggedCorpus> {
    existing(stage, path)?;
    TaggedCorpus::load(path).invalid(stage)
}

pub fn write_text(stage: &'static str, path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).failed(stage)?;
    }
    std::fs::write(path, text).map_err(|e| CliError::failed(stage, format!("{}: {e}", path.display())))
}

/// `path` relative to `base` unless absolute.
pub fn relative_to(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
