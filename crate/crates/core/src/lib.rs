//! Phonological and distributional models of word order in coordinate
//! compounds and elaborate expressions.

pub mod classifiers;
pub mod datasets;
pub mod embeddings;
pub mod features;
pub mod fixtures;
pub mod phonology;
pub mod scales;
pub mod tagging;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A ChaCha8 generator for `seed`, on an independent stream per call site.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Phonology(#[from] phonology::PhonologyError),
    #[error(transparent)]
    Dataset(#[from] datasets::DatasetError),
    #[error(transparent)]
    Features(#[from] features::FeatureError),
    #[error(transparent)]
    Scale(#[from] scales::ScaleError),
    #[error(transparent)]
    Classifier(#[from] classifiers::ClassifierError),
    #[error(transparent)]
    Experiment(#[from] classifiers::ExperimentError),
    #[error(transparent)]
    Embedding(#[from] embeddings::EmbeddingError),
    #[error(transparent)]
    Tagging(#[from] tagging::TaggingError),
    #[error("fixture: {0}")]
    Fixture(String),
}
