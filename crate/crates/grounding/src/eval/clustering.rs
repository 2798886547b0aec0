//! k-means clustering (k-means++ seeding, Lloyd iterations, seeded
//! restarts) and the purity score for categorization benchmarks.

use crate::data::{CategorySet, EmbeddingTable};
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::seeding;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;

const MAX_ITERATIONS: usize = 200;

#[derive(Clone, Debug)]
pub struct KmeansRun {
    pub labels: Vec<usize>,
    pub wcss: f64,
    pub iterations: usize,
    /// WCSS after every Lloyd iteration; non-increasing by construction.
    pub wcss_trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    pub wcss: f64,
    pub wcss_per_restart: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn wcss_of(points: &Matrix, labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    (0..points.rows())
        .map(|i| squared_distance(points.row(i), &centroids[labels[i]]))
        .sum()
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to the squared distance to the nearest chosen
/// centroid.
fn seed_centroids(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.rows();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    centroids.push(points.row(first).to_vec());
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let chosen = if total <= 0.0 {
            // all points coincide with a centroid; any choice is equivalent
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        };
        centroids.push(points.row(chosen).to_vec());
        for i in 0..n {
            let d = squared_distance(points.row(i), centroids.last().expect("just pushed"));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn lloyd(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> KmeansRun {
    let n = points.rows();
    let dim = points.cols();
    let mut centroids = seed_centroids(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        let mut changed = false;
        for i in 0..n {
            let (c, _) = nearest(points.row(i), &centroids);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }

        // Re-seed empty clusters from the point currently farthest from its
        // centroid, one point per empty cluster.
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far_point = None;
            let mut far_d = -1.0;
            for i in 0..n {
                if taken.contains(&i) || counts[labels[i]] <= 1 {
                    continue;
                }
                let d = squared_distance(points.row(i), &centroids[labels[i]]);
                if d > far_d {
                    far_d = d;
                    far_point = Some(i);
                }
            }
            if let Some(i) = far_point {
                counts[labels[i]] -= 1;
                labels[i] = c;
                counts[c] += 1;
                taken.push(i);
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for i in 0..n {
            for (s, v) in sums[labels[i]].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = sums[c].clone();
            }
        }

        let wcss = wcss_of(points, &labels, &centroids);
        if let Some(&prev) = trace.last() {
            assert!(
                wcss <= prev + 1e-9 * prev.abs().max(1.0),
                "WCSS increased: {prev} -> {wcss}"
            );
        }
        trace.push(wcss);
        if !changed && iter > 0 {
            break;
        }
    }
    KmeansRun {
        labels,
        wcss: *trace.last().expect("at least one iteration"),
        iterations,
        wcss_trace: trace,
    }
}

/// Every seeded restart, in order. `k >= 2` and `k <= n` are required.
pub fn kmeans_runs(
    points: &Matrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<KmeansRun>> {
    if k < 2 {
        return Err(Error::Contract(format!("k must be at least 2, got {k}")));
    }
    if k > points.rows() {
        return Err(Error::Contract(format!(
            "k = {k} exceeds the number of points {}",
            points.rows()
        )));
    }
    if restarts == 0 {
        return Err(Error::Contract("at least one restart is required".into()));
    }
    Ok((0..restarts)
        .map(|r| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seeding::derive_indexed(seed, "kmeans-restart", r as u64));
            lloyd(points, k, &mut rng)
        })
        .collect())
}

/// Best-of-restarts k-means: the assignment with the lowest WCSS wins,
/// first restart on ties.
pub fn kmeans(points: &Matrix, k: usize, seed: u64, restarts: usize) -> Result<KmeansResult> {
    let runs = kmeans_runs(points, k, seed, restarts)?;
    let wcss_per_restart: Vec<f64> = runs.iter().map(|r| r.wcss).collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.wcss.total_cmp(&b.wcss).then(ia.cmp(ib)))
        .map(|(_, r)| r)
        .expect("at least one restart");
    Ok(KmeansResult {
        labels: best.labels.clone(),
        wcss: best.wcss,
        wcss_per_restart,
    })
}

/// Fraction of items that fall in the majority gold class of their
/// assigned cluster.
pub fn purity(predicted: &[usize], gold: &[usize]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::Contract(format!(
            "purity needs equal label lists, got {} vs {}",
            predicted.len(),
            gold.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Contract("purity of an empty labeling".into()));
    }
    let mut overlap: HashMap<(usize, usize), usize> = HashMap::new();
    for (&p, &g) in predicted.iter().zip(gold) {
        *overlap.entry((p, g)).or_insert(0) += 1;
    }
    let mut best_per_cluster: HashMap<usize, usize> = HashMap::new();
    for (&(p, _), &count) in &overlap {
        let entry = best_per_cluster.entry(p).or_insert(0);
        if count > *entry {
            *entry = count;
        }
    }
    let correct: usize = best_per_cluster.values().sum();
    Ok(correct as f64 / predicted.len() as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct CategorizationResult {
    pub benchmark: String,
    pub purity: f64,
    /// 100 * purity, the scale categorization tables are reported on.
    pub score_x100: f64,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub coverage: f64,
    pub evaluated: usize,
    pub total: usize,
    /// Purity across restarts; the headline number is the purity of the
    /// best-WCSS restart, which is seed sensitive.
    pub purity_min: f64,
    pub purity_mean: f64,
    pub purity_max: f64,
}

/// Cluster a category benchmark's covered words into k = number of gold
/// categories and score the best-WCSS assignment by purity.
pub fn categorize(
    table: &EmbeddingTable,
    categories: &CategorySet,
    seed: u64,
    restarts: usize,
) -> Result<CategorizationResult> {
    let total = categories.items.len();
    let covered: Vec<(&str, &str)> = categories
        .items
        .iter()
        .filter(|(w, _)| table.contains(w))
        .map(|(w, c)| (w.as_str(), c.as_str()))
        .collect();
    let evaluated = covered.len();
    let coverage = if total == 0 {
        0.0
    } else {
        evaluated as f64 / total as f64
    };

    let mut class_ids: HashMap<&str, usize> = HashMap::new();
    for (_, c) in &covered {
        let next = class_ids.len();
        class_ids.entry(c).or_insert(next);
    }
    if class_ids.len() < 2 {
        return Err(Error::InsufficientData {
            evaluated,
            coverage,
            msg: format!(
                "category set '{}' has {} covered categories, need at least 2",
                categories.name,
                class_ids.len()
            ),
        });
    }
    let k = class_ids.len();
    if evaluated < k {
        return Err(Error::InsufficientData {
            evaluated,
            coverage,
            msg: format!("only {evaluated} covered words for k = {k}"),
        });
    }

    let dim = table.dim();
    let mut data = Vec::with_capacity(evaluated * dim);
    let mut gold = Vec::with_capacity(evaluated);
    for (w, c) in &covered {
        data.extend_from_slice(table.vector(w).expect("covered word"));
        gold.push(class_ids[c]);
    }
    let points = Matrix::from_vec(evaluated, dim, data)?;

    let runs = kmeans_runs(&points, k, seed, restarts)?;
    let purities: Vec<f64> = runs
        .iter()
        .map(|r| purity(&r.labels, &gold))
        .collect::<Result<_>>()?;
    let best_idx = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.wcss.total_cmp(&b.wcss).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let headline = purities[best_idx];

    let min = purities.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = purities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = purities.iter().sum::<f64>() / purities.len() as f64;
    Ok(CategorizationResult {
        benchmark: categories.name.clone(),
        purity: headline,
        score_x100: 100.0 * headline,
        k,
        restarts,
        seed,
        coverage,
        evaluated,
        total,
        purity_min: min,
        purity_mean: mean,
        purity_max: max,
    })
}
