//! Per-relation cosine profiling over concept/relation/relatum tuples:
//! each concept's mean cosine to its relata per relation, z-normalized
//! within the concept, plus per-relation distribution summaries for
//! boxplot-style analysis.

use crate::data::{BlessDataset, BlessRelation, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::similarity::cosine;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize)]
pub struct ConceptScores {
    pub concept: String,
    /// Mean cosine per relation, relations without a covered relatum absent.
    pub raw: BTreeMap<BlessRelation, f64>,
    /// Mean of the raw scores across this concept's present relations.
    pub mean: f64,
    /// Population standard deviation of the raw scores.
    pub std_dev: f64,
    /// z-scores per relation; `None` when all raw scores are equal.
    pub normalized: Option<BTreeMap<BlessRelation, f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Tukey whiskers: the most extreme observations within 1.5 IQR of the
    /// quartiles.
    pub whisker_low: f64,
    pub whisker_high: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlessScoreMatrix {
    pub concepts: Vec<ConceptScores>,
    /// Concepts dropped entirely, with the reason.
    pub excluded: Vec<(String, String)>,
    /// Concepts kept with raw scores but no normalized row (zero variance).
    pub zero_variance: Vec<String>,
    /// Distribution of normalized scores per relation across concepts.
    pub relation_summaries: BTreeMap<BlessRelation, DistributionSummary>,
}

/// Linear-interpolation quantile over a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn summarize(values: &[f64]) -> DistributionSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let variance = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let low_fence = q1 - 1.5 * iqr;
    let high_fence = q3 + 1.5 * iqr;
    let whisker_low = sorted
        .iter()
        .copied()
        .find(|&v| v >= low_fence)
        .unwrap_or(sorted[0]);
    let whisker_high = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= high_fence)
        .unwrap_or(sorted[n - 1]);
    DistributionSummary {
        count: n,
        mean,
        variance,
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[n - 1],
        whisker_low,
        whisker_high,
    }
}

fn has_direction(v: &[f64]) -> bool {
    v.iter().any(|&x| x != 0.0)
}

/// Profile every concept of the dataset against an embedding table.
///
/// Relations with no covered relatum are treated as missing rather than
/// scored zero. Concepts that are uncovered themselves or end up with
/// fewer than two scored relations are excluded and reported; concepts
/// whose relation scores are all equal keep their raw row but are flagged
/// and left out of the normalized output.
pub fn bless_profile(table: &EmbeddingTable, dataset: &BlessDataset) -> Result<BlessScoreMatrix> {
    // Group relata per concept in first-appearance order.
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<&str, BTreeMap<BlessRelation, Vec<&str>>> = BTreeMap::new();
    for tuple in &dataset.tuples {
        if !grouped.contains_key(tuple.concept.as_str()) {
            order.push(tuple.concept.clone());
        }
        grouped
            .entry(tuple.concept.as_str())
            .or_default()
            .entry(tuple.relation)
            .or_default()
            .push(tuple.relatum.as_str());
    }

    let mut concepts = Vec::new();
    let mut excluded = Vec::new();
    let mut zero_variance = Vec::new();
    for concept in &order {
        let concept_vec = match table.vector(concept) {
            Some(v) if has_direction(v) => v,
            _ => {
                excluded.push((concept.clone(), "concept not covered by the table".into()));
                continue;
            }
        };
        let mut raw = BTreeMap::new();
        for (relation, relata) in &grouped[concept.as_str()] {
            let mut scores = Vec::new();
            for relatum in relata {
                if let Some(v) = table.vector(relatum) {
                    if has_direction(v) {
                        scores.push(cosine(concept_vec, v)?);
                    }
                }
            }
            if !scores.is_empty() {
                raw.insert(*relation, scores.iter().sum::<f64>() / scores.len() as f64);
            }
        }
        if raw.len() < 2 {
            excluded.push((
                concept.clone(),
                format!("{} scored relations, need at least 2", raw.len()),
            ));
            continue;
        }

        let n = raw.len() as f64;
        let mean = raw.values().sum::<f64>() / n;
        let std_dev = (raw.values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let normalized = if std_dev == 0.0 {
            zero_variance.push(concept.clone());
            None
        } else if raw.len() == 2 {
            // Two distinct scores standardize to exactly -1 and +1; assign
            // by comparison to avoid rounding the analytic values.
            let mut it = raw.iter();
            let (&r1, &v1) = it.next().expect("two entries");
            let (&r2, &v2) = it.next().expect("two entries");
            let mut z = BTreeMap::new();
            z.insert(r1, if v1 < v2 { -1.0 } else { 1.0 });
            z.insert(r2, if v1 < v2 { 1.0 } else { -1.0 });
            Some(z)
        } else {
            Some(
                raw.iter()
                    .map(|(&r, &v)| (r, (v - mean) / std_dev))
                    .collect(),
            )
        };
        concepts.push(ConceptScores {
            concept: concept.clone(),
            raw,
            mean,
            std_dev,
            normalized,
        });
    }

    if concepts.is_empty() {
        return Err(Error::InsufficientData {
            evaluated: 0,
            coverage: 0.0,
            msg: "no concept has two scorable relations".into(),
        });
    }

    let mut per_relation: BTreeMap<BlessRelation, Vec<f64>> = BTreeMap::new();
    for c in &concepts {
        if let Some(z) = &c.normalized {
            for (&r, &v) in z {
                per_relation.entry(r).or_default().push(v);
            }
        }
    }
    let relation_summaries = per_relation
        .into_iter()
        .map(|(r, values)| (r, summarize(&values)))
        .collect();

    Ok(BlessScoreMatrix {
        concepts,
        excluded,
        zero_variance,
        relation_summaries,
    })
}
