//! Report rendering: the summary table (one row per experiment, best
//! RMSE per algorithm with its winning parameter in brackets), the
//! comparison report, and user-activity histogram data. Every renderer is
//! deterministic, so re-running a spec reproduces reports byte for byte.

use serde::{Deserialize, Serialize};

use crate::algorithms::AlgorithmKind;
use crate::dataset::{activity_histogram, Dataset};
use crate::harness::compare::ComparisonReport;
use crate::harness::run::ExperimentResult;
use crate::stats::TTestOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Table,
}

impl ReportFormat {
    pub fn from_name(name: &str) -> Option<ReportFormat> {
        match name {
            "csv" => Some(ReportFormat::Csv),
            "table" => Some(ReportFormat::Table),
            _ => None,
        }
    }

    /// File extension for stored reports.
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Table => "txt",
        }
    }
}

/// `A::B` for holdout rows (train::test), a plain count otherwise.
fn stat_cell(result: &ExperimentResult, pick: fn(&crate::dataset::DatasetStats) -> usize) -> String {
    match &result.test_stats {
        Some(test) => format!("{}::{}", pick(&result.train_stats), pick(test)),
        None => format!("{}", pick(&result.train_stats)),
    }
}

fn algorithm_cell(result: &ExperimentResult, kind: AlgorithmKind) -> String {
    match result.best_for(kind) {
        Some(best) => format!("{:.3} [{}]", best.rmse, best.parameter),
        None => "-".to_string(),
    }
}

fn min_ratings_cell(result: &ExperimentResult) -> String {
    if result.min_ratings_filters.is_empty() {
        "-".to_string()
    } else {
        result
            .min_ratings_filters
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join("/")
    }
}

fn note_lines(results: &[&ExperimentResult]) -> Vec<String> {
    results
        .iter()
        .filter_map(|r| {
            r.subsample.map(|s| {
                format!(
                    "note: {} (seed {}) evaluated on {} of {} test pairs (seeded subsample)",
                    r.name, r.seed, s.kept, s.total
                )
            })
        })
        .collect()
}

fn render_rows(header: Vec<String>, rows: Vec<Vec<String>>, notes: &[String], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for row in rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            for note in notes {
                out.push_str("# ");
                out.push_str(note);
                out.push('\n');
            }
        }
        ReportFormat::Table => {
            let mut widths: Vec<usize> = header.iter().map(String::len).collect();
            for row in &rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            let emit = |out: &mut String, cells: &[String]| {
                let line = cells
                    .iter()
                    .zip(&widths)
                    .map(|(cell, w)| format!("{cell:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ");
                out.push_str(line.trim_end());
                out.push('\n');
            };
            emit(&mut out, &header);
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            emit(&mut out, &rule);
            for row in &rows {
                emit(&mut out, row);
            }
            for note in notes {
                out.push_str(note);
                out.push('\n');
            }
        }
    }
    out
}

/// One row per result, ordered by name then seed. The Users/Items/Ratings
/// columns show `train::test` counts for holdout rows; `x` lists the
/// min-ratings filters of the recipe.
pub fn report_table(results: &[ExperimentResult], format: ReportFormat) -> String {
    let mut ordered: Vec<&ExperimentResult> = results.iter().collect();
    ordered.sort_by(|a, b| a.name.cmp(&b.name).then(a.seed.cmp(&b.seed)));

    let header: Vec<String> = ["name", "seed", "users", "items", "ratings", "x", "UU", "II", "MF"]
        .into_iter()
        .map(String::from)
        .collect();
    let rows: Vec<Vec<String>> = ordered
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.seed.to_string(),
                stat_cell(r, |s| s.user_count),
                stat_cell(r, |s| s.item_count),
                stat_cell(r, |s| s.rating_count),
                min_ratings_cell(r),
                algorithm_cell(r, AlgorithmKind::Uu),
                algorithm_cell(r, AlgorithmKind::Ii),
                algorithm_cell(r, AlgorithmKind::Mf),
            ]
        })
        .collect();
    render_rows(header, rows, &note_lines(&ordered), format)
}

fn outcome_cells(outcome: &TTestOutcome) -> (String, String, String) {
    match outcome {
        TTestOutcome::Defined { t, p, significant_at_05, .. } => (
            format!("{t:.4}"),
            format!("{p:.6}"),
            if *significant_at_05 { "yes" } else { "no" }.to_string(),
        ),
        TTestOutcome::ZeroVariance { .. } => {
            ("-".to_string(), "-".to_string(), "zero-variance".to_string())
        }
    }
}

/// Render a comparison: per shared algorithm, both best points and the
/// paired t-test over squared errors (diff is left minus right, so a
/// negative mean favors the left run).
pub fn render_comparison(report: &ComparisonReport, format: ReportFormat) -> String {
    let header: Vec<String> = [
        "algorithm",
        "left",
        "right",
        "mean_sq_diff",
        "t",
        "p",
        "significant_at_05",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            let (t, p, sig) = outcome_cells(&row.outcome);
            vec![
                row.algorithm.label().to_string(),
                format!("{:.3} [{}]", row.left_rmse, row.left_parameter),
                format!("{:.3} [{}]", row.right_rmse, row.right_parameter),
                format!("{:+.6}", row.outcome.mean_diff()),
                t,
                p,
                sig,
            ]
        })
        .collect();
    let notes = vec![format!(
        "comparison of '{}' (left) vs '{}' (right) over {} shared test pairs",
        report.left, report.right, report.pairs
    )];
    render_rows(header, rows, &notes, format)
}

/// Ratings-per-user histogram data: one row per observed activity count.
pub fn histogram_output(ds: &Dataset, format: ReportFormat) -> String {
    let histogram = activity_histogram(ds);
    let header: Vec<String> = ["ratings_per_user", "users"]
        .into_iter()
        .map(String::from)
        .collect();
    let rows: Vec<Vec<String>> = histogram
        .iter()
        .map(|(count, users)| vec![count.to_string(), users.to_string()])
        .collect();
    render_rows(header, rows, &[], format)
}
