//! Similarity/relatedness scoring: cosine in embedding space ranked against
//! human gold scores with Spearman correlation.

use crate::data::{EmbeddingTable, SimilarityBenchmark};
use crate::error::{Error, Result};
use serde::Serialize;

/// Cosine similarity. Zero vectors have no direction and are rejected.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::shape("cosine", (1, u.len()), (1, v.len())));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Contract(
            "cosine of a zero vector is undefined".into(),
        ));
    }
    // rounding can overshoot the analytic range by one ulp
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties assigned the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share the average rank
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Contract(
            "correlation is undefined for a constant score list".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape("spearman", (1, x.len()), (1, y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Contract(
            "spearman needs at least 2 observations".into(),
        ));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Clone, Debug, Serialize)]
pub struct SimilarityResult {
    pub benchmark: String,
    pub rho: f64,
    /// 100 * rho, the scale similarity tables are reported on.
    pub score_x100: f64,
    pub coverage: f64,
    pub evaluated: usize,
    pub total: usize,
}

/// Score a benchmark against one embedding table. Pairs with an uncovered
/// word are skipped and reported through `coverage`.
pub fn evaluate_similarity(
    table: &EmbeddingTable,
    benchmark: &SimilarityBenchmark,
) -> Result<SimilarityResult> {
    let total = benchmark.pairs.len();
    let mut model_scores = Vec::new();
    let mut gold_scores = Vec::new();
    for (w1, w2, gold) in &benchmark.pairs {
        let (Some(u), Some(v)) = (table.vector(w1), table.vector(w2)) else {
            continue;
        };
        model_scores.push(cosine(u, v)?);
        gold_scores.push(*gold);
    }
    let evaluated = model_scores.len();
    let coverage = if total == 0 {
        0.0
    } else {
        evaluated as f64 / total as f64
    };
    if evaluated < 2 {
        return Err(Error::InsufficientData {
            evaluated,
            coverage,
            msg: format!(
                "benchmark '{}' has fewer than 2 evaluable pairs",
                benchmark.name
            ),
        });
    }
    let rho = spearman_rho(&model_scores, &gold_scores)?;
    Ok(SimilarityResult {
        benchmark: benchmark.name.clone(),
        rho,
        score_x100: 100.0 * rho,
        coverage,
        evaluated,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{EmbeddingTable, LanguageTag, Space};
    use crate::numcore::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force Spearman: sort, assign average ranks, Pearson — written
    /// independently of `average_ranks`.
    fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
        fn ranks(v: &[f64]) -> Vec<f64> {
            v.iter()
                .map(|&a| {
                    let less = v.iter().filter(|&&b| b < a).count() as f64;
                    let equal = v.iter().filter(|&&b| b == a).count() as f64;
                    // average of positions less+1 ..= less+equal
                    less + (equal + 1.0) / 2.0
                })
                .collect()
        }
        let rx = ranks(x);
        let ry = ranks(y);
        let n = rx.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
        let syy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
        sxy / (sxx.sqrt() * syy.sqrt())
    }

    #[test]
    fn cosine_of_self_is_one() {
        let v = [0.3, -1.2, 0.8];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_of_orthogonal_vectors_is_zero() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut dot = 0.0;
        let mut nu = 0.0;
        let mut nv = 0.0;
        for i in 0..8 {
            dot += u[i] * v[i];
            nu += u[i] * u[i];
            nv += v[i] * v[i];
        }
        let want = dot / (nu.sqrt() * nv.sqrt());
        assert!((cosine(&u, &v).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_is_a_contract_error() {
        let err = cosine(&[0.0, 0.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn identical_rankings_give_one() {
        let x = [0.5, 0.1, 0.9, 0.3];
        assert!((spearman_rho(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_rankings_give_minus_one() {
        let x = [0.5, 0.1, 0.9, 0.3];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((spearman_rho(&x, &y).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_pairs_match_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(2..12);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            match (spearman_rho(&x, &y), spearman_oracle(&x, &y)) {
                (Ok(got), want) if want.is_finite() => {
                    assert!((got - want).abs() < 1e-12, "{got} vs {want}")
                }
                _ => {}
            }
        }
    }

    #[test]
    fn ties_are_averaged_like_the_oracle() {
        let x = [1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 0.5, 4.0];
        let y = [2.0, 1.0, 1.0, 5.0, 5.0, 2.0, 0.0, 9.0];
        let got = spearman_rho(&x, &y).unwrap();
        let want = spearman_oracle(&x, &y);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
        let base = spearman_rho(&x, &y).unwrap();
        let transformed: Vec<f64> = y.iter().map(|v| v.powi(3) + v).collect();
        let after = spearman_rho(&x, &transformed).unwrap();
        assert!((base - after).abs() < 1e-12);
    }

    fn toy_table(entries: &[(&str, [f64; 2])]) -> EmbeddingTable {
        let words: Vec<String> = entries.iter().map(|(w, _)| w.to_string()).collect();
        let data: Vec<f64> = entries.iter().flat_map(|(_, v)| v.to_vec()).collect();
        EmbeddingTable::from_parts(
            LanguageTag::new("en"),
            Space::Textual,
            words,
            Matrix::from_vec(entries.len(), 2, data).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn insufficient_pairs_error_carries_coverage() {
        let table = toy_table(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let benchmark = SimilarityBenchmark {
            name: "toy".into(),
            pairs: vec![
                ("a".into(), "b".into(), 5.0),
                ("a".into(), "missing".into(), 3.0),
                ("x".into(), "y".into(), 1.0),
            ],
        };
        let err = evaluate_similarity(&table, &benchmark).unwrap_err();
        match err {
            Error::InsufficientData {
                evaluated,
                coverage,
                ..
            } => {
                assert_eq!(evaluated, 1);
                assert!((coverage - 1.0 / 3.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
