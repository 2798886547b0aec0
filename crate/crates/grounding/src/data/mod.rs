//! Ingestion of embedding tables, caption manifests, image vectors and
//! benchmark files; vocabularies and training batches.

pub mod benchmarks;
pub mod dataset;
pub mod embeddings;
pub mod text;
pub mod vocab;

pub use benchmarks::{
    load_bless, load_categories, load_similarity, BlessDataset, BlessRelation, BlessTuple,
    CategorySet, SimilarityBenchmark,
};
pub use dataset::{
    load_dataset, load_image_vectors, Batch, Batches, CaptionDataset, CaptionSample,
    DatasetOptions, ImageVectors, IngestStats, Split, Standardization, TokenBatch,
};
pub use embeddings::{load_embeddings, EmbeddingTable, LoadedEmbeddings, Space};
pub use text::{normalize_word, tokenize, LanguageTag};
pub use vocab::{build_vocabulary, Vocabulary};
