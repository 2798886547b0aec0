//! Command implementations behind the binary: config-driven training,
//! grounded-table extraction, and the evaluation commands. Every command is
//! a pure function of (config, input files, seed); all emitted artifacts are
//! byte-identical across reruns, with wall-clock timings kept in a separate
//! sidecar file.

use crate::data::{
    load_bless, load_categories, load_dataset, load_embeddings, load_similarity, DatasetOptions,
    EmbeddingTable, LanguageTag, Split,
};
use crate::error::{Error, Result};
use crate::eval::report::{
    render_bless_flat, render_bless_summary, render_neighbor_diff, render_score_table,
};
use crate::eval::{bless_profile, categorize, evaluate_similarity, neighbor_diff};
use crate::model::checkpoint::{load_model, save_model};
use crate::model::{GroundingModel, ModelDims};
use crate::seeding;
use crate::train::{train_with_hooks, EpochRecord, TrainConfig, TrainHooks};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

// ── run configuration ───────────────────────────────────────────────

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub data: DataSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSection {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub languages: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSection {
    pub textual_dim: usize,
    pub grounded_dim: usize,
    pub hidden_dim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainSection {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    #[serde(default = "default_standardize")]
    pub standardize_images: bool,
    #[serde(default)]
    pub grad_clip_norm: Option<f64>,
}

fn default_standardize() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DataSection {
    pub manifest: PathBuf,
    pub image_vectors: PathBuf,
    pub validation_count: usize,
    pub embeddings: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub vocab_limits: BTreeMap<String, usize>,
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Check structure and the existence of every referenced path before
    /// any compute starts.
    pub fn validate(&self) -> Result<()> {
        if self.run.languages.is_empty() {
            return Err(Error::Config("run.languages must not be empty".into()));
        }
        for lang in &self.run.languages {
            if !self.data.embeddings.contains_key(lang) {
                return Err(Error::Config(format!(
                    "no data.embeddings entry for language '{lang}'"
                )));
            }
        }
        let mut paths: Vec<&PathBuf> = vec![&self.data.manifest, &self.data.image_vectors];
        for lang in &self.run.languages {
            paths.push(&self.data.embeddings[lang]);
        }
        for path in paths {
            if !path.exists() {
                return Err(Error::Ingestion(format!(
                    "input file not found: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            textual: self.model.textual_dim,
            grounded: self.model.grounded_dim,
            hidden: self.model.hidden_dim,
        }
    }

    pub fn languages(&self) -> Vec<LanguageTag> {
        self.run.languages.iter().map(LanguageTag::new).collect()
    }
}

// ── shared helpers ──────────────────────────────────────────────────

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Io(e))
        .map(|_| ())
}

/// Parse "name=path" (or a bare path, named by its file stem).
fn parse_named(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) => (name.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (name, path)
        }
    }
}

fn load_named_tables(
    specs: &[String],
    language: &LanguageTag,
) -> Result<Vec<(String, EmbeddingTable)>> {
    let mut out = Vec::new();
    for spec in specs {
        let (name, path) = parse_named(spec);
        let loaded = load_embeddings(&path, language.clone(), None, language.folds_case())?;
        out.push((name, loaded.table));
    }
    Ok(out)
}

fn write_jsonl(path: &Path, records: &[serde_json::Value]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        let _ = writeln!(out, "{record}");
    }
    fs::write(path, out)?;
    Ok(())
}

// ── train ───────────────────────────────────────────────────────────

pub struct TrainArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub languages: Option<Vec<String>>,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut config = RunConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if let Some(out) = &args.out {
        config.run.output_dir = out.clone();
    }
    if let Some(languages) = &args.languages {
        config.run.languages = languages.clone();
    }
    config.validate()?;

    let out_dir = config.run.output_dir.clone();
    ensure_dir(&out_dir)?;
    // Provenance: the effective configuration, master seed included.
    let provenance =
        toml::to_string(&config).map_err(|e| Error::Config(format!("serialize config: {e}")))?;
    fs::write(out_dir.join("config.toml"), provenance)?;

    let master = config.run.seed;
    let languages = config.languages();
    let dims = config.dims();

    let mut tables = BTreeMap::new();
    let mut duplicate_words = 0usize;
    for lang in &languages {
        let path = &config.data.embeddings[lang.as_str()];
        let loaded = load_embeddings(path, lang.clone(), Some(dims.textual), lang.folds_case())?;
        duplicate_words += loaded.duplicate_words;
        tables.insert(lang.clone(), loaded.table);
    }

    let vocab_limits: BTreeMap<LanguageTag, usize> = config
        .data
        .vocab_limits
        .iter()
        .map(|(k, v)| (LanguageTag::new(k), *v))
        .collect();
    let dataset = load_dataset(
        &config.data.manifest,
        &config.data.image_vectors,
        &DatasetOptions {
            languages: languages.clone(),
            tables: &tables,
            vocab_limits,
            validation_count: config.data.validation_count,
            seed: seeding::derive(master, "split"),
            standardize_images: config.train.standardize_images,
        },
    )?;
    if dataset.image_dim() != dims.hidden {
        return Err(Error::shape(
            "image_vectors",
            (1, dataset.image_dim()),
            (1, dims.hidden),
        ));
    }

    let mut model = GroundingModel::new(
        tables,
        dataset.vocabularies(),
        dims,
        seeding::derive(master, "init"),
    )?;

    let train_config = TrainConfig {
        batch_size: config.train.batch_size,
        max_epochs: config.train.max_epochs,
        patience: config.train.patience,
        learning_rate: config.train.learning_rate,
        seed: seeding::derive(master, "train"),
        languages: languages.clone(),
        dims,
        grad_clip_norm: config.train.grad_clip_norm,
    };

    let report_path = out_dir.join("report.jsonl");
    let checkpoint_path = out_dir.join("checkpoint.bin");
    let mut report_file = fs::File::create(&report_path)?;
    let hooks = TrainHooks {
        on_epoch: Some(Box::new(|record: &EpochRecord| {
            let mut value = serde_json::to_value(record).expect("serializable record");
            value["record"] = json!("epoch");
            let _ = writeln!(report_file, "{value}");
        })),
        on_best: Some(Box::new(|params, _epoch| {
            save_model(params, &checkpoint_path)
        })),
    };
    let report = train_with_hooks(&mut model, &dataset, &train_config, hooks)?;

    let stats = dataset.stats();
    let summary = json!({
        "record": "summary",
        "best_epoch": report.best_epoch,
        "best_validation_loss": report.best_validation_loss,
        "final_validation_loss": report.final_validation_loss,
        "stopped_early": report.stopped_early,
        "epochs_run": report.epochs.len(),
        "train_samples": dataset.split(Split::Train).len(),
        "validation_samples": dataset.split(Split::Validation).len(),
        "dropped_uncovered_samples": stats.dropped_uncovered,
        "dropped_post_vocab_samples": stats.dropped_post_vocab,
        "oov_tokens_dropped": stats.oov_tokens_dropped,
        "tokens_total": stats.tokens_total,
        "duplicate_embedding_words": duplicate_words,
    });
    let mut report_file = fs::OpenOptions::new().append(true).open(&report_path)?;
    writeln!(report_file, "{summary}")?;

    // Wall-clock timings vary run to run; they live outside the
    // deterministic artifacts.
    let timings: Vec<serde_json::Value> = report
        .wall_time_per_epoch
        .iter()
        .enumerate()
        .map(|(i, t)| json!({"epoch": i + 1, "seconds": t}))
        .collect();
    write_jsonl(&out_dir.join("timings.jsonl"), &timings)?;

    println!(
        "trained {} epochs, best epoch {} (validation loss {:.6}); artifacts in {}",
        report.epochs.len(),
        report.best_epoch,
        report.best_validation_loss,
        out_dir.display()
    );
    Ok(())
}

// ── extract ─────────────────────────────────────────────────────────

pub struct ExtractArgs {
    pub checkpoint: PathBuf,
    pub embeddings: PathBuf,
    pub out: PathBuf,
    pub language: String,
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<()> {
    let params = load_model(&args.checkpoint)?;
    let lang = LanguageTag::new(&args.language);
    let loaded = load_embeddings(&args.embeddings, lang.clone(), None, lang.folds_case())?;
    if loaded.table.dim() != params.dims.textual {
        return Err(Error::shape(
            "extract",
            (loaded.table.len(), loaded.table.dim()),
            (loaded.table.len(), params.dims.textual),
        ));
    }
    let grounded = params.alignment.extract(&loaded.table)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    grounded.save(&args.out)?;
    println!(
        "grounded {} words ({} -> {} dims) into {}",
        grounded.len(),
        params.dims.textual,
        params.dims.grounded,
        args.out.display()
    );
    Ok(())
}

// ── eval-sim ────────────────────────────────────────────────────────

pub struct EvalSimArgs {
    pub embeddings: Vec<String>,
    pub benchmarks: Vec<String>,
    pub language: String,
    pub out: Option<PathBuf>,
}

pub fn cmd_eval_sim(args: &EvalSimArgs) -> Result<()> {
    let lang = LanguageTag::new(&args.language);
    let tables = load_named_tables(&args.embeddings, &lang)?;
    let mut benchmarks = Vec::new();
    for spec in &args.benchmarks {
        let (name, path) = parse_named(spec);
        benchmarks.push(load_similarity(&path, &name, lang.folds_case())?);
    }

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (table_name, table) in &tables {
        let mut cells = Vec::new();
        for benchmark in &benchmarks {
            let result = evaluate_similarity(table, benchmark)?;
            let mut value = serde_json::to_value(&result).expect("serializable result");
            value["record"] = json!("similarity");
            value["table"] = json!(table_name);
            records.push(value);
            cells.push(Some(result.score_x100));
        }
        rows.push((table_name.clone(), cells));
    }

    let row_names: Vec<String> = rows.iter().map(|(n, _)| n.clone()).collect();
    let col_names: Vec<String> = benchmarks.iter().map(|b| b.name.clone()).collect();
    let cells: Vec<Vec<Option<f64>>> = rows.into_iter().map(|(_, c)| c).collect();
    let text = render_score_table(&row_names, &col_names, &cells);
    print!("{text}");

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        fs::write(out.join("similarity.txt"), &text)?;
        write_jsonl(&out.join("similarity.jsonl"), &records)?;
    }
    Ok(())
}

// ── eval-cat ────────────────────────────────────────────────────────

pub struct EvalCatArgs {
    pub embeddings: Vec<String>,
    pub categories: Vec<String>,
    pub seed: u64,
    pub restarts: usize,
    pub language: String,
    pub out: Option<PathBuf>,
}

pub fn cmd_eval_cat(args: &EvalCatArgs) -> Result<()> {
    let lang = LanguageTag::new(&args.language);
    let tables = load_named_tables(&args.embeddings, &lang)?;
    let mut sets = Vec::new();
    for spec in &args.categories {
        let (name, path) = parse_named(spec);
        sets.push(load_categories(&path, &name, lang.folds_case())?);
    }

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (table_name, table) in &tables {
        let mut cells = Vec::new();
        for set in &sets {
            let result = categorize(table, set, args.seed, args.restarts)?;
            let mut value = serde_json::to_value(&result).expect("serializable result");
            value["record"] = json!("categorization");
            value["table"] = json!(table_name);
            records.push(value);
            cells.push(Some(result.score_x100));
        }
        rows.push((table_name.clone(), cells));
    }

    let row_names: Vec<String> = rows.iter().map(|(n, _)| n.clone()).collect();
    let col_names: Vec<String> = sets.iter().map(|s| s.name.clone()).collect();
    let cells: Vec<Vec<Option<f64>>> = rows.into_iter().map(|(_, c)| c).collect();
    let text = render_score_table(&row_names, &col_names, &cells);
    print!("{text}");

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        fs::write(out.join("categorization.txt"), &text)?;
        write_jsonl(&out.join("categorization.jsonl"), &records)?;
    }
    Ok(())
}

// ── eval-bless ──────────────────────────────────────────────────────

pub struct EvalBlessArgs {
    pub embeddings: Vec<String>,
    pub bless: PathBuf,
    pub language: String,
    pub out: Option<PathBuf>,
}

pub fn cmd_eval_bless(args: &EvalBlessArgs) -> Result<()> {
    let lang = LanguageTag::new(&args.language);
    let tables = load_named_tables(&args.embeddings, &lang)?;
    let dataset = load_bless(&args.bless, lang.folds_case())?;

    let mut summaries = String::new();
    let mut records = Vec::new();
    for (table_name, table) in &tables {
        let matrix = bless_profile(table, &dataset)?;
        summaries.push_str(&render_bless_summary(table_name, &matrix));
        summaries.push('\n');
        for concept in &matrix.concepts {
            let mut value = serde_json::to_value(concept).expect("serializable concept");
            value["record"] = json!("bless_concept");
            value["table"] = json!(table_name);
            records.push(value);
        }
        for (relation, summary) in &matrix.relation_summaries {
            let mut value = serde_json::to_value(summary).expect("serializable summary");
            value["record"] = json!("bless_relation");
            value["table"] = json!(table_name);
            value["relation"] = json!(relation.as_str());
            records.push(value);
        }
        if let Some(out) = &args.out {
            ensure_dir(out)?;
            fs::write(
                out.join(format!("bless_{table_name}.tsv")),
                render_bless_flat(&matrix),
            )?;
        }
    }
    print!("{summaries}");
    if let Some(out) = &args.out {
        fs::write(out.join("bless_summary.txt"), &summaries)?;
        write_jsonl(&out.join("bless.jsonl"), &records)?;
    }
    Ok(())
}

// ── neighbors ───────────────────────────────────────────────────────

pub struct NeighborsArgs {
    pub textual: PathBuf,
    pub grounded: PathBuf,
    pub words: Vec<String>,
    pub k: usize,
    pub language: String,
    pub out: Option<PathBuf>,
}

pub fn cmd_neighbors(args: &NeighborsArgs) -> Result<()> {
    let lang = LanguageTag::new(&args.language);
    let textual = load_embeddings(&args.textual, lang.clone(), None, lang.folds_case())?.table;
    let grounded = load_embeddings(&args.grounded, lang.clone(), None, lang.folds_case())?.table;

    let mut text = String::new();
    let mut records = Vec::new();
    for word in &args.words {
        let normalized = crate::data::normalize_word(word, lang.folds_case());
        let diff = neighbor_diff(&normalized, args.k, &textual, &grounded)?;
        text.push_str(&render_neighbor_diff(&diff));
        let mut value = serde_json::to_value(&diff).expect("serializable diff");
        value["record"] = json!("neighbor_diff");
        records.push(value);
    }
    print!("{text}");
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        fs::write(out.join("neighbors.txt"), &text)?;
        write_jsonl(&out.join("neighbors.jsonl"), &records)?;
    }
    Ok(())
}
