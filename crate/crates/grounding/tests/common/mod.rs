//! Shared fixture generators for the integration suites: synthetic caption
//! datasets, embedding files and run configs small enough to train in
//! seconds.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub const WORDS: [&str; 12] = [
    "bike", "boy", "cat", "dog", "girl", "grass", "man", "sky", "street", "tree", "water", "woman",
];

pub fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grounding"))
}

/// Write a whitespace-separated embedding file over `words`.
pub fn write_embeddings(path: &Path, words: &[&str], dim: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for word in words {
        out.push_str(word);
        for _ in 0..dim {
            let v: f64 = rng.random_range(-1.0..1.0);
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    fs::write(path, out).unwrap();
}

pub struct DatasetFiles {
    pub manifest: PathBuf,
    pub vectors: PathBuf,
    pub embeddings: Vec<(String, PathBuf)>,
}

/// Generate a manifest + image vectors + per-language embeddings for `n`
/// samples with 2-4 word captions. Image values stay inside the encoder's
/// reachable range.
pub fn write_dataset(dir: &Path, languages: &[&str], n: usize, d: usize, h: usize, seed: u64) -> DatasetFiles {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let manifest = dir.join("captions.jsonl");
    let vectors = dir.join("image_vectors.txt");

    let mut mlines = String::new();
    let mut vlines = format!("#dim {h}\n");
    for i in 0..n {
        let mut captions = Vec::new();
        for lang in languages {
            let len = rng.random_range(2..=4);
            let caption: Vec<&str> = (0..len)
                .map(|_| WORDS[rng.random_range(0..WORDS.len())])
                .collect();
            captions.push(format!("\"{}\":\"{}\"", lang, caption.join(" ")));
        }
        let _ = writeln!(
            mlines,
            "{{\"image_id\":\"img{i:03}\",\"captions\":{{{}}}}}",
            captions.join(",")
        );
        let _ = write!(vlines, "img{i:03}");
        for _ in 0..h {
            let v: f64 = rng.random_range(-0.8..0.8);
            let _ = write!(vlines, " {v}");
        }
        vlines.push('\n');
    }
    fs::write(&manifest, mlines).unwrap();
    fs::write(&vectors, vlines).unwrap();

    let mut embeddings = Vec::new();
    for (li, lang) in languages.iter().enumerate() {
        let path = dir.join(format!("embeddings.{lang}.txt"));
        write_embeddings(&path, &WORDS, d, seed ^ (li as u64 + 1) * 7919);
        embeddings.push((lang.to_string(), path));
    }
    DatasetFiles {
        manifest,
        vectors,
        embeddings,
    }
}

/// Write a run config pointing at generated dataset files.
#[allow(clippy::too_many_arguments)]
pub fn write_config(
    dir: &Path,
    files: &DatasetFiles,
    languages: &[&str],
    dims: (usize, usize, usize),
    seed: u64,
    max_epochs: usize,
    validation_count: usize,
    out_dir: &Path,
) -> PathBuf {
    let (d, c, h) = dims;
    let mut embeddings = String::new();
    for (lang, path) in &files.embeddings {
        let _ = writeln!(embeddings, "{lang} = {:?}", path.display().to_string());
    }
    let config = format!(
        r#"[run]
seed = {seed}
output_dir = {out:?}
languages = [{langs}]

[model]
textual_dim = {d}
grounded_dim = {c}
hidden_dim = {h}

[train]
batch_size = 4
max_epochs = {max_epochs}
patience = {max_epochs}
learning_rate = 0.01
standardize_images = false

[data]
manifest = {manifest:?}
image_vectors = {vectors:?}
validation_count = {validation_count}

[data.embeddings]
{embeddings}
"#,
        out = out_dir.display().to_string(),
        langs = languages
            .iter()
            .map(|l| format!("{l:?}"))
            .collect::<Vec<_>>()
            .join(", "),
        manifest = files.manifest.display().to_string(),
        vectors = files.vectors.display().to_string(),
    );
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    path
}
