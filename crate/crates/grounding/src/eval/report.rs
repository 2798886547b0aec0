//! Plain-text rendering of evaluation results: score grids in the layout
//! similarity/categorization results are conventionally reported in (one
//! row per embedding table, one column per benchmark, trailing mean), and
//! flat per-relation distribution summaries for external plotting.

use crate::data::BlessRelation;
use crate::eval::bless::BlessScoreMatrix;
use crate::eval::neighbors::NeighborDiff;
use std::fmt::Write as _;

/// Render a score grid. `cells[row][col]` holds a 100-scaled score or is
/// absent (rendered as "-"). A trailing Mean column averages the present
/// cells of each row.
pub fn render_score_table(
    row_names: &[String],
    col_names: &[String],
    cells: &[Vec<Option<f64>>],
) -> String {
    let mut headers: Vec<String> = vec![String::new()];
    headers.extend(col_names.iter().cloned());
    headers.push("Mean".into());

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (name, row) in row_names.iter().zip(cells) {
        let mut out = vec![name.clone()];
        let present: Vec<f64> = row.iter().flatten().copied().collect();
        for cell in row {
            out.push(match cell {
                Some(v) => format!("{v:.1}"),
                None => "-".into(),
            });
        }
        if present.is_empty() {
            out.push("-".into());
        } else {
            out.push(format!("{:.1}", present.iter().sum::<f64>() / present.len() as f64));
        }
        rows.push(out);
    }

    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }

    let mut text = String::new();
    let line = |text: &mut String, cells: &[String]| {
        let mut parts = Vec::new();
        for (i, cell) in cells.iter().enumerate() {
            if i == 0 {
                parts.push(format!("{cell:<width$}", width = widths[0]));
            } else {
                parts.push(format!("{cell:>width$}", width = widths[i]));
            }
        }
        let _ = writeln!(text, "{}", parts.join("  "));
    };
    line(&mut text, &headers);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    let _ = writeln!(text, "{}", "-".repeat(total));
    for row in &rows {
        line(&mut text, row);
    }
    text
}

/// Flat TSV of per-relation distribution summaries, one line per relation.
pub fn render_bless_flat(matrix: &BlessScoreMatrix) -> String {
    let mut out = String::from(
        "#relation\tq1\tmedian\tq3\twhisker_low\twhisker_high\tmean\tvariance\tcount\n",
    );
    for relation in BlessRelation::ALL {
        if let Some(s) = matrix.relation_summaries.get(&relation) {
            let _ = writeln!(
                out,
                "{relation}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.q1, s.median, s.q3, s.whisker_low, s.whisker_high, s.mean, s.variance, s.count
            );
        }
    }
    out
}

/// Human-readable per-relation summary of a profile.
pub fn render_bless_summary(name: &str, matrix: &BlessScoreMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{name}: {} concepts scored, {} excluded, {} zero-variance",
        matrix.concepts.len(),
        matrix.excluded.len(),
        matrix.zero_variance.len()
    );
    let _ = writeln!(
        out,
        "{:<8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}",
        "relation", "mean", "var", "q1", "median", "q3"
    );
    for relation in BlessRelation::ALL {
        if let Some(s) = matrix.relation_summaries.get(&relation) {
            let _ = writeln!(
                out,
                "{:<8}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}",
                relation.as_str(),
                s.mean,
                s.variance,
                s.q1,
                s.median,
                s.q3
            );
        }
    }
    out
}

pub fn render_neighbor_diff(diff: &NeighborDiff) -> String {
    let list = |items: &[(String, f64)]| {
        items
            .iter()
            .map(|(w, s)| format!("{w} ({s:.3})"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut out = String::new();
    let _ = writeln!(out, "{} (k = {})", diff.word, diff.k);
    let _ = writeln!(out, "  textual:  {}", list(&diff.textual));
    let _ = writeln!(out, "  grounded: {}", list(&diff.grounded));
    let _ = writeln!(
        out,
        "  unique to textual:  {}",
        diff.unique_to_textual.join(", ")
    );
    let _ = writeln!(
        out,
        "  unique to grounded: {}",
        diff.unique_to_grounded.join(", ")
    );
    out
}
