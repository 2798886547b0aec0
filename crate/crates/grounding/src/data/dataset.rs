//! Caption dataset ingestion: a JSONL manifest pairing image ids with
//! per-language caption text, plus a text file of precomputed image vectors.
//! Produces token-id samples with a deterministic train/validation split and
//! optional per-dimension image-vector standardization.

use crate::data::embeddings::EmbeddingTable;
use crate::data::text::{tokenize, LanguageTag};
use crate::data::vocab::{build_vocabulary, Vocabulary};
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

#[derive(Debug, Deserialize)]
struct ManifestRecord {
    image_id: String,
    captions: BTreeMap<String, String>,
}

/// One training sample: an image vector and one token-id sequence per
/// configured language.
#[derive(Clone, Debug)]
pub struct CaptionSample {
    pub image_id: String,
    pub image_vector: Vec<f64>,
    pub captions: BTreeMap<LanguageTag, Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

#[derive(Clone, Debug, Default)]
pub struct IngestStats {
    pub records_total: usize,
    /// Records dropped because some language had no embedding-covered token.
    pub dropped_uncovered: usize,
    /// Records dropped after the vocabulary cut emptied some caption.
    pub dropped_post_vocab: usize,
    pub oov_tokens_dropped: usize,
    pub tokens_total: usize,
}

/// Per-dimension affine transform fitted on the training split.
#[derive(Clone, Debug)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    fn fit(vectors: &[&[f64]], dim: usize) -> Self {
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(*v) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for v in vectors {
            for ((s, x), m) in var.iter_mut().zip(*v).zip(&mean) {
                let d = x - m;
                *s += d * d;
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < 1e-12 {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, v: &mut [f64]) {
        for ((x, m), s) in v.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = (*x - m) / s;
        }
    }
}

#[derive(Clone, Debug)]
pub struct CaptionDataset {
    languages: Vec<LanguageTag>,
    image_dim: usize,
    vocabularies: BTreeMap<LanguageTag, Vocabulary>,
    train: Vec<CaptionSample>,
    validation: Vec<CaptionSample>,
    stats: IngestStats,
    standardization: Option<Standardization>,
}

pub struct DatasetOptions<'a> {
    pub languages: Vec<LanguageTag>,
    pub tables: &'a BTreeMap<LanguageTag, EmbeddingTable>,
    pub vocab_limits: BTreeMap<LanguageTag, usize>,
    pub validation_count: usize,
    pub seed: u64,
    pub standardize_images: bool,
}

impl CaptionDataset {
    pub fn languages(&self) -> &[LanguageTag] {
        &self.languages
    }

    pub fn image_dim(&self) -> usize {
        self.image_dim
    }

    pub fn vocabulary(&self, language: &LanguageTag) -> Option<&Vocabulary> {
        self.vocabularies.get(language)
    }

    pub fn vocabularies(&self) -> &BTreeMap<LanguageTag, Vocabulary> {
        &self.vocabularies
    }

    pub fn split(&self, split: Split) -> &[CaptionSample] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
        }
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Assemble a dataset from already-encoded samples (synthetic data,
    /// tests, generators). Languages are sorted; every sample must carry
    /// every language with a non-empty sequence.
    pub fn from_parts(
        mut languages: Vec<LanguageTag>,
        image_dim: usize,
        vocabularies: BTreeMap<LanguageTag, Vocabulary>,
        train: Vec<CaptionSample>,
        validation: Vec<CaptionSample>,
    ) -> Result<Self> {
        languages.sort();
        languages.dedup();
        for sample in train.iter().chain(&validation) {
            if sample.image_vector.len() != image_dim {
                return Err(Error::Contract(format!(
                    "sample {} has image dim {}, expected {image_dim}",
                    sample.image_id,
                    sample.image_vector.len()
                )));
            }
            for lang in &languages {
                match sample.captions.get(lang) {
                    Some(seq) if !seq.is_empty() => {}
                    _ => {
                        return Err(Error::Contract(format!(
                            "sample {} is missing a non-empty '{lang}' caption",
                            sample.image_id
                        )))
                    }
                }
            }
        }
        Ok(Self {
            languages,
            image_dim,
            vocabularies,
            train,
            validation,
            stats: IngestStats::default(),
            standardization: None,
        })
    }

    /// Seeded-permutation batch stream over a split. The final short batch
    /// is kept.
    pub fn batches(&self, split: Split, batch_size: usize, seed: u64) -> Batches<'_> {
        let samples = self.split(split);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        Batches::new(samples, &self.languages, self.image_dim, batch_size, order)
    }

    /// Batch stream in stored sample order, for deterministic evaluation.
    pub fn batches_in_order(&self, split: Split, batch_size: usize) -> Batches<'_> {
        let samples = self.split(split);
        let order: Vec<usize> = (0..samples.len()).collect();
        Batches::new(samples, &self.languages, self.image_dim, batch_size, order)
    }
}

/// Padded token ids for one language within a batch, row-major
/// `size x t_max`, with a validity mask.
#[derive(Clone, Debug)]
pub struct TokenBatch {
    pub size: usize,
    pub t_max: usize,
    pub ids: Vec<usize>,
    pub mask: Vec<bool>,
}

impl TokenBatch {
    pub fn id(&self, row: usize, t: usize) -> usize {
        self.ids[row * self.t_max + t]
    }

    pub fn valid(&self, row: usize, t: usize) -> bool {
        self.mask[row * self.t_max + t]
    }

    /// Build from per-row sequences, padding with token id 0.
    pub fn from_sequences(sequences: &[&[usize]]) -> Self {
        let size = sequences.len();
        let t_max = sequences.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut ids = vec![0usize; size * t_max];
        let mut mask = vec![false; size * t_max];
        for (r, seq) in sequences.iter().enumerate() {
            for (t, &id) in seq.iter().enumerate() {
                ids[r * t_max + t] = id;
                mask[r * t_max + t] = true;
            }
        }
        Self {
            size,
            t_max,
            ids,
            mask,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Batch {
    pub size: usize,
    pub image_vectors: Matrix,
    pub tokens: BTreeMap<LanguageTag, TokenBatch>,
}

pub struct Batches<'a> {
    samples: &'a [CaptionSample],
    languages: &'a [LanguageTag],
    image_dim: usize,
    batch_size: usize,
    order: Vec<usize>,
    cursor: usize,
}

impl<'a> Batches<'a> {
    fn new(
        samples: &'a [CaptionSample],
        languages: &'a [LanguageTag],
        image_dim: usize,
        batch_size: usize,
        order: Vec<usize>,
    ) -> Self {
        assert!(batch_size >= 1, "batch size must be >= 1");
        Self {
            samples,
            languages,
            image_dim,
            batch_size,
            order,
            cursor: 0,
        }
    }
}

impl Iterator for Batches<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let chunk = &self.order[self.cursor..end];
        self.cursor = end;

        let n = chunk.len();
        let mut image_data = Vec::with_capacity(n * self.image_dim);
        for &idx in chunk {
            image_data.extend_from_slice(&self.samples[idx].image_vector);
        }
        let image_vectors = Matrix::from_vec(n, self.image_dim, image_data)
            .expect("validated image vectors");

        let mut tokens = BTreeMap::new();
        for lang in self.languages {
            let sequences: Vec<&[usize]> = chunk
                .iter()
                .map(|&idx| self.samples[idx].captions[lang].as_slice())
                .collect();
            tokens.insert(lang.clone(), TokenBatch::from_sequences(&sequences));
        }
        Some(Batch {
            size: n,
            image_vectors,
            tokens,
        })
    }
}

/// Image vectors file: a "#dim N" header line, then "image_id v1 .. vN"
/// per line.
pub struct ImageVectors {
    pub dim: usize,
    pub by_id: HashMap<String, Vec<f64>>,
}

pub fn load_image_vectors(path: impl AsRef<Path>) -> Result<ImageVectors> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| {
        Error::Ingestion(format!("cannot read image vectors {}: {e}", path.display()))
    })?;
    let display = path.display().to_string();

    let mut dim: Option<usize> = None;
    let mut by_id = HashMap::new();
    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#dim") {
            let n: usize = rest.trim().parse().map_err(|_| Error::Format {
                path: display.clone(),
                line: lineno,
                msg: format!("bad dimension header '{line}'"),
            })?;
            dim = Some(n);
            continue;
        }
        let d = dim.ok_or_else(|| Error::Format {
            path: display.clone(),
            line: lineno,
            msg: "missing '#dim N' header before data lines".into(),
        })?;
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("non-empty line").to_string();
        let mut values = Vec::with_capacity(d);
        for field in fields {
            let v: f64 = field.parse().map_err(|_| Error::Format {
                path: display.clone(),
                line: lineno,
                msg: format!("unparsable real '{field}'"),
            })?;
            values.push(v);
        }
        if values.len() != d {
            return Err(Error::Format {
                path: display,
                line: lineno,
                msg: format!("expected {d} values, found {}", values.len()),
            });
        }
        by_id.insert(id, values);
    }
    let dim = dim.ok_or_else(|| Error::Format {
        path: display,
        line: 0,
        msg: "empty image vectors file".into(),
    })?;
    Ok(ImageVectors { dim, by_id })
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let content = fs::read_to_string(path)
        .map_err(|e| Error::Ingestion(format!("cannot read manifest {}: {e}", path.display())))?;
    let display = path.display().to_string();
    let mut records = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(line).map_err(|e| Error::Format {
            path: display.clone(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Ingest manifest + image vectors into an encoded, split dataset.
///
/// Pipeline: tokenize, keep tokens covered by the language's embedding
/// table, drop records left with an empty caption, split with a seeded
/// shuffle (validation size honored exactly), build per-language
/// vocabularies from the training split, encode to token ids, and
/// optionally standardize image vectors with training-split statistics.
pub fn load_dataset(
    manifest_path: impl AsRef<Path>,
    vectors_path: impl AsRef<Path>,
    options: &DatasetOptions<'_>,
) -> Result<CaptionDataset> {
    let mut languages = options.languages.clone();
    languages.sort();
    languages.dedup();
    if languages.is_empty() {
        return Err(Error::Contract("at least one language is required".into()));
    }
    for lang in &languages {
        if !options.tables.contains_key(lang) {
            return Err(Error::Ingestion(format!(
                "no embedding table provided for language '{lang}'"
            )));
        }
    }

    let records = read_manifest(manifest_path.as_ref())?;
    let vectors = load_image_vectors(vectors_path.as_ref())?;
    let mut stats = IngestStats {
        records_total: records.len(),
        ..IngestStats::default()
    };

    // Check image coverage up front so the error can list every missing id.
    let missing: Vec<&str> = records
        .iter()
        .filter(|r| !vectors.by_id.contains_key(&r.image_id))
        .map(|r| r.image_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Ingestion(format!(
            "image ids missing from vectors file: {}",
            missing.join(", ")
        )));
    }

    // Tokenize and keep only embedding-covered tokens.
    struct Tokenized {
        image_id: String,
        captions: BTreeMap<LanguageTag, Vec<String>>,
    }
    let mut tokenized: Vec<Tokenized> = Vec::new();
    for record in &records {
        let mut captions = BTreeMap::new();
        let mut covered = true;
        for lang in &languages {
            let text = record.captions.get(lang.as_str()).ok_or_else(|| {
                Error::Ingestion(format!(
                    "sample {} has no '{lang}' caption",
                    record.image_id
                ))
            })?;
            let table = &options.tables[lang];
            let tokens = tokenize(text, lang);
            stats.tokens_total += tokens.len();
            let kept: Vec<String> = tokens
                .into_iter()
                .filter(|t| {
                    let keep = table.contains(t);
                    if !keep {
                        stats.oov_tokens_dropped += 1;
                    }
                    keep
                })
                .collect();
            if kept.is_empty() {
                covered = false;
            }
            captions.insert(lang.clone(), kept);
        }
        if covered {
            tokenized.push(Tokenized {
                image_id: record.image_id.clone(),
                captions,
            });
        } else {
            stats.dropped_uncovered += 1;
        }
    }

    if options.validation_count > tokenized.len() {
        return Err(Error::Contract(format!(
            "validation size {} exceeds usable sample count {}",
            options.validation_count,
            tokenized.len()
        )));
    }

    // Deterministic split: seeded shuffle, first chunk is validation.
    let mut order: Vec<usize> = (0..tokenized.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    order.shuffle(&mut rng);
    let (val_idx, train_idx) = order.split_at(options.validation_count);

    // Vocabularies over the training captions only.
    let mut vocabularies = BTreeMap::new();
    for lang in &languages {
        let corpus: Vec<&[String]> = train_idx
            .iter()
            .map(|&i| tokenized[i].captions[lang].as_slice())
            .collect();
        let limit = options.vocab_limits.get(lang).copied().unwrap_or(usize::MAX);
        let vocab = build_vocabulary(corpus.into_iter(), limit)?;
        vocabularies.insert(lang.clone(), vocab);
    }

    let encode = |indices: &[usize], stats: &mut IngestStats| -> Vec<CaptionSample> {
        let mut out = Vec::with_capacity(indices.len());
        'records: for &i in indices {
            let rec = &tokenized[i];
            let mut captions = BTreeMap::new();
            for lang in &languages {
                let vocab = &vocabularies[lang];
                let ids: Vec<usize> = rec.captions[lang]
                    .iter()
                    .filter_map(|t| {
                        let id = vocab.id(t);
                        if id.is_none() {
                            stats.oov_tokens_dropped += 1;
                        }
                        id
                    })
                    .collect();
                if ids.is_empty() {
                    stats.dropped_post_vocab += 1;
                    continue 'records;
                }
                captions.insert(lang.clone(), ids);
            }
            out.push(CaptionSample {
                image_id: rec.image_id.clone(),
                image_vector: vectors.by_id[&rec.image_id].clone(),
                captions,
            });
        }
        out
    };

    let mut train = encode(train_idx, &mut stats);
    let mut validation = encode(val_idx, &mut stats);

    let standardization = if options.standardize_images {
        let rows: Vec<&[f64]> = train.iter().map(|s| s.image_vector.as_slice()).collect();
        if rows.is_empty() {
            return Err(Error::Contract(
                "cannot standardize image vectors with an empty training split".into(),
            ));
        }
        let st = Standardization::fit(&rows, vectors.dim);
        for s in train.iter_mut().chain(validation.iter_mut()) {
            st.apply(&mut s.image_vector);
        }
        Some(st)
    } else {
        None
    };

    Ok(CaptionDataset {
        languages,
        image_dim: vectors.dim,
        vocabularies,
        train,
        validation,
        stats,
        standardization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embeddings::{EmbeddingTable, Space};

    fn table(lang: &str, words: &[&str], dim: usize) -> EmbeddingTable {
        let vectors = Matrix::from_fn(words.len(), dim, |r, c| (r * dim + c) as f64 * 0.1 + 0.1);
        EmbeddingTable::from_parts(
            LanguageTag::new(lang),
            Space::Textual,
            words.iter().map(|w| w.to_string()).collect(),
            vectors,
        )
        .unwrap()
    }

    fn write_fixture(dir: &Path, n: usize) -> (std::path::PathBuf, std::path::PathBuf) {
        let manifest = dir.join("manifest.jsonl");
        let vectors = dir.join("vectors.txt");
        let mut mlines = String::new();
        let mut vlines = String::from("#dim 3\n");
        for i in 0..n {
            mlines.push_str(&format!(
                "{{\"image_id\":\"img{i}\",\"captions\":{{\"en\":\"a cat {w}\",\"de\":\"eine katze {w}\"}}}}\n",
                w = if i % 2 == 0 { "sits" } else { "runs" }
            ));
            vlines.push_str(&format!("img{i} {} {} {}\n", i, i * 2, i * 3));
        }
        fs::write(&manifest, mlines).unwrap();
        fs::write(&vectors, vlines).unwrap();
        (manifest, vectors)
    }

    fn base_options(tables: &BTreeMap<LanguageTag, EmbeddingTable>) -> DatasetOptions<'_> {
        DatasetOptions {
            languages: vec![LanguageTag::new("en"), LanguageTag::new("de")],
            tables,
            vocab_limits: BTreeMap::new(),
            validation_count: 2,
            seed: 7,
            standardize_images: false,
        }
    }

    fn en_de_tables() -> BTreeMap<LanguageTag, EmbeddingTable> {
        let mut tables = BTreeMap::new();
        tables.insert(
            LanguageTag::new("en"),
            table("en", &["a", "cat", "sits", "runs"], 4),
        );
        tables.insert(
            LanguageTag::new("de"),
            table("de", &["eine", "katze", "sits", "runs"], 4),
        );
        tables
    }

    #[test]
    fn split_is_deterministic_for_fixed_seed() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, vectors) = write_fixture(dir.path(), 10);
        let tables = en_de_tables();
        let options = base_options(&tables);

        let d1 = load_dataset(&manifest, &vectors, &options).unwrap();
        let d2 = load_dataset(&manifest, &vectors, &options).unwrap();
        assert_eq!(d1.split(Split::Train).len(), 8);
        assert_eq!(d1.split(Split::Validation).len(), 2);
        let ids = |d: &CaptionDataset, s| -> Vec<String> {
            d.split(s).iter().map(|x| x.image_id.clone()).collect()
        };
        assert_eq!(ids(&d1, Split::Train), ids(&d2, Split::Train));
        assert_eq!(ids(&d1, Split::Validation), ids(&d2, Split::Validation));
    }

    #[test]
    fn fully_oov_sample_is_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.jsonl");
        let vectors = dir.path().join("vectors.txt");
        fs::write(
            &manifest,
            concat!(
                "{\"image_id\":\"img0\",\"captions\":{\"en\":\"a cat\"}}\n",
                "{\"image_id\":\"img1\",\"captions\":{\"en\":\"zzz qqq\"}}\n"
            ),
        )
        .unwrap();
        fs::write(&vectors, "#dim 2\nimg0 1 2\nimg1 3 4\n").unwrap();
        let mut tables = BTreeMap::new();
        tables.insert(LanguageTag::new("en"), table("en", &["a", "cat"], 4));
        let options = DatasetOptions {
            languages: vec![LanguageTag::new("en")],
            tables: &tables,
            vocab_limits: BTreeMap::new(),
            validation_count: 0,
            seed: 1,
            standardize_images: false,
        };
        let d = load_dataset(&manifest, &vectors, &options).unwrap();
        assert_eq!(d.split(Split::Train).len(), 1);
        assert_eq!(d.stats().dropped_uncovered, 1);
        assert_eq!(d.stats().oov_tokens_dropped, 2);
    }

    #[test]
    fn missing_image_id_lists_the_ids() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.jsonl");
        let vectors = dir.path().join("vectors.txt");
        fs::write(
            &manifest,
            "{\"image_id\":\"ghost\",\"captions\":{\"en\":\"a cat\"}}\n",
        )
        .unwrap();
        fs::write(&vectors, "#dim 2\nimg0 1 2\n").unwrap();
        let mut tables = BTreeMap::new();
        tables.insert(LanguageTag::new("en"), table("en", &["a", "cat"], 4));
        let options = DatasetOptions {
            languages: vec![LanguageTag::new("en")],
            tables: &tables,
            vocab_limits: BTreeMap::new(),
            validation_count: 0,
            seed: 1,
            standardize_images: false,
        };
        let err = load_dataset(&manifest, &vectors, &options).unwrap_err();
        assert_eq!(err.category(), "ingestion");
        assert!(err.to_string().contains("ghost"));
    }

    #[test]
    fn missing_language_is_an_ingestion_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.jsonl");
        let vectors = dir.path().join("vectors.txt");
        fs::write(
            &manifest,
            "{\"image_id\":\"img0\",\"captions\":{\"en\":\"a cat\"}}\n",
        )
        .unwrap();
        fs::write(&vectors, "#dim 2\nimg0 1 2\n").unwrap();
        let tables = en_de_tables();
        let options = base_options(&tables);
        let err = load_dataset(&manifest, &vectors, &options).unwrap_err();
        assert_eq!(err.category(), "ingestion");
        assert!(err.to_string().contains("de"));
    }

    #[test]
    fn token_ids_decode_back_to_post_oov_tokens() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, vectors) = write_fixture(dir.path(), 100);
        let tables = en_de_tables();
        let mut options = base_options(&tables);
        options.validation_count = 10;
        let d = load_dataset(&manifest, &vectors, &options).unwrap();

        let en = LanguageTag::new("en");
        let vocab = d.vocabulary(&en).unwrap();
        for sample in d.split(Split::Train).iter().chain(d.split(Split::Validation)) {
            let decoded: Vec<&str> = sample.captions[&en]
                .iter()
                .map(|&id| vocab.word(id))
                .collect();
            // Independently recompute the post-OOV token stream.
            let i: usize = sample.image_id[3..].parse().unwrap();
            let raw = format!("a cat {}", if i % 2 == 0 { "sits" } else { "runs" });
            let expected: Vec<String> = tokenize(&raw, &en)
                .into_iter()
                .filter(|t| tables[&en].contains(t) && vocab.id(t).is_some())
                .collect();
            assert_eq!(decoded, expected.iter().map(String::as_str).collect::<Vec<_>>());
        }
    }

    #[test]
    fn batch_sizes_keep_final_short_batch() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, vectors) = write_fixture(dir.path(), 5);
        let tables = en_de_tables();
        let mut options = base_options(&tables);
        options.validation_count = 0;
        let d = load_dataset(&manifest, &vectors, &options).unwrap();
        let sizes: Vec<usize> = d.batches(Split::Train, 2, 3).map(|b| b.size).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
    }

    #[test]
    fn batch_order_is_seeded() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, vectors) = write_fixture(dir.path(), 12);
        let tables = en_de_tables();
        let mut options = base_options(&tables);
        options.validation_count = 0;
        let d = load_dataset(&manifest, &vectors, &options).unwrap();

        let order_for = |seed: u64| -> Vec<f64> {
            d.batches(Split::Train, 4, seed)
                .flat_map(|b| b.image_vectors.as_slice().to_vec())
                .collect()
        };
        assert_eq!(order_for(5), order_for(5));
        let mut any_diff = false;
        for seed in 0..10 {
            if order_for(seed) != order_for(seed + 100) {
                any_diff = true;
                break;
            }
        }
        assert!(any_diff, "10 seed pairs all produced identical orders");
    }

    #[test]
    fn mask_sums_equal_true_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.jsonl");
        let vectors = dir.path().join("vectors.txt");
        let mut mlines = String::new();
        let mut vlines = String::from("#dim 2\n");
        let captions = ["a", "a cat", "a cat sits", "cat", "a cat sits runs"];
        for (i, c) in captions.iter().enumerate() {
            mlines.push_str(&format!(
                "{{\"image_id\":\"img{i}\",\"captions\":{{\"en\":\"{c}\"}}}}\n"
            ));
            vlines.push_str(&format!("img{i} {i} {i}\n"));
        }
        fs::write(&manifest, mlines).unwrap();
        fs::write(&vectors, vlines).unwrap();
        let mut tables = BTreeMap::new();
        tables.insert(
            LanguageTag::new("en"),
            table("en", &["a", "cat", "sits", "runs"], 4),
        );
        let options = DatasetOptions {
            languages: vec![LanguageTag::new("en")],
            tables: &tables,
            vocab_limits: BTreeMap::new(),
            validation_count: 0,
            seed: 9,
            standardize_images: false,
        };
        let d = load_dataset(&manifest, &vectors, &options).unwrap();
        let en = LanguageTag::new("en");
        for batch in d.batches(Split::Train, 2, 1) {
            let tb = &batch.tokens[&en];
            for r in 0..tb.size {
                let mask_sum: usize = (0..tb.t_max).filter(|&t| tb.valid(r, t)).count();
                // Recover the sample by image vector (first component = index).
                let idx = batch.image_vectors.get(r, 0) as usize;
                let true_len = tokenize(captions[idx], &en).len();
                assert_eq!(mask_sum, true_len);
            }
        }
    }

    #[test]
    fn standardization_centers_training_split() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, vectors) = write_fixture(dir.path(), 10);
        let tables = en_de_tables();
        let mut options = base_options(&tables);
        options.validation_count = 0;
        options.standardize_images = true;
        let d = load_dataset(&manifest, &vectors, &options).unwrap();
        let n = d.split(Split::Train).len() as f64;
        for dim in 0..3 {
            let mean: f64 = d
                .split(Split::Train)
                .iter()
                .map(|s| s.image_vector[dim])
                .sum::<f64>()
                / n;
            let var: f64 = d
                .split(Split::Train)
                .iter()
                .map(|s| (s.image_vector[dim] - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-10);
        }
    }
}
