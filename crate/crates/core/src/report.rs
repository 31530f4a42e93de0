//! Renders multi-run results as a machine-readable JSON document and a
//! human Markdown table: one row per condition, one column per metric,
//! mean ± std cells, N/A for all-refused conditions, and a boldface marker
//! on the significantly better side of each requested comparison.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::stats::{
    aggregate_runs, paired_t_test, Metric, PairedTTest, RunSeries, SeriesSummary, StatsError,
    StdDevMode,
};

/// Significance threshold for the comparison markers.
pub const ALPHA: f64 = 0.05;
/// Decimal places used in the Markdown cells. JSON keeps full precision.
const CELL_DECIMALS: usize = 2;

/// One row of the rendered table: either aggregated numbers or all-N/A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition_label: String,
    pub runs: usize,
    pub refused_runs: usize,
    /// Absent when every run in the condition refused.
    pub summary: Option<SeriesSummary>,
}

/// Outcome of one metric-level paired test between two conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub metric: Metric,
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub significant: bool,
    /// Condition favored by the difference when significant: the higher
    /// mean for scores, the lower mean for distances.
    pub winner: Option<String>,
}

/// A pairwise condition comparison with its per-metric test results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub left: String,
    pub right: String,
    /// Run pairs used after dropping indices where either side refused.
    pub paired_runs: usize,
    pub results: Vec<SignificanceResult>,
}

/// The complete rendered report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub std_dev_mode: StdDevMode,
    pub alpha: f64,
    pub rows: Vec<ReportRow>,
    pub comparisons: Vec<ComparisonResult>,
}

/// Aggregates every series, runs the requested paired comparisons, and
/// assembles the report. Run counts must agree across conditions (all-refused
/// series exempt); comparison pairing is by run index.
pub fn render_report(
    serieses: &[RunSeries],
    comparisons: &[(String, String)],
    mode: StdDevMode,
) -> Result<ReportDocument, StatsError> {
    let counts: BTreeSet<usize> = serieses
        .iter()
        .filter(|s| !s.all_refused())
        .map(|s| s.run_count())
        .collect();
    if counts.len() > 1 {
        return Err(StatsError::InconsistentRunCounts(counts.into_iter().collect()));
    }

    let mut rows = Vec::with_capacity(serieses.len());
    for series in serieses {
        let summary = if series.all_refused() {
            None
        } else {
            Some(aggregate_runs(series, mode)?)
        };
        rows.push(ReportRow {
            condition_label: series.condition_label.clone(),
            runs: series.run_count(),
            refused_runs: series.refused_count(),
            summary,
        });
    }

    let mut rendered_comparisons = Vec::new();
    for (left, right) in comparisons {
        let find = |label: &str| serieses.iter().find(|s| s.condition_label == label);
        let (Some(a), Some(b)) = (find(left), find(right)) else {
            continue; // unknown label; nothing to compare
        };
        rendered_comparisons.push(compare_series(a, b)?);
    }

    Ok(ReportDocument { std_dev_mode: mode, alpha: ALPHA, rows, comparisons: rendered_comparisons })
}

fn compare_series(a: &RunSeries, b: &RunSeries) -> Result<ComparisonResult, StatsError> {
    if a.run_count() != b.run_count() {
        return Err(StatsError::InconsistentRunCounts(vec![a.run_count(), b.run_count()]));
    }
    // Pair by run index, dropping indices where either side refused.
    let usable: Vec<usize> = (0..a.run_count())
        .filter(|&i| !a.reports[i].refused && !b.reports[i].refused)
        .collect();

    let mut results = Vec::new();
    for metric in Metric::ALL {
        let left: Vec<f64> = usable.iter().filter_map(|&i| metric.extract(&a.reports[i])).collect();
        let right: Vec<f64> = usable.iter().filter_map(|&i| metric.extract(&b.reports[i])).collect();
        if left.len() < 2 {
            continue; // not enough pairs for this metric; no marker
        }
        let test: PairedTTest = paired_t_test(&left, &right)?;
        let significant = test.significant(ALPHA);
        let winner = significant.then(|| {
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let better_left = if metric.higher_is_better() {
                mean(&left) > mean(&right)
            } else {
                mean(&left) < mean(&right)
            };
            if better_left { a.condition_label.clone() } else { b.condition_label.clone() }
        });
        results.push(SignificanceResult {
            metric,
            t_statistic: test.t_statistic,
            degrees_of_freedom: test.degrees_of_freedom,
            p_value: test.p_value,
            significant,
            winner,
        });
    }
    Ok(ComparisonResult {
        left: a.condition_label.clone(),
        right: b.condition_label.clone(),
        paired_runs: usable.len(),
        results,
    })
}

impl ReportDocument {
    /// True when `condition` holds the significant win on `metric` in any
    /// rendered comparison.
    fn is_marked(&self, condition: &str, metric: Metric) -> bool {
        self.comparisons.iter().any(|c| {
            c.results
                .iter()
                .any(|r| r.metric == metric && r.winner.as_deref() == Some(condition))
        })
    }

    /// Renders the Markdown table. Cells read `mean±std`, boldfaced for the
    /// significant winner of a comparison; all-refused rows read `N/A`.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Condition |");
        for metric in Metric::ALL {
            write!(out, " {} |", metric.display_name()).unwrap();
        }
        out.push('\n');
        out.push_str("|---|");
        out.push_str(&"---|".repeat(Metric::ALL.len()));
        out.push('\n');
        for row in &self.rows {
            write!(out, "| {} |", row.condition_label).unwrap();
            for metric in Metric::ALL {
                let cell = match &row.summary {
                    None => "N/A".to_string(),
                    Some(summary) => {
                        let agg = summary.get(metric);
                        format!(
                            "{:.prec$}±{:.prec$}",
                            agg.mean,
                            agg.std_dev,
                            prec = CELL_DECIMALS
                        )
                    }
                };
                if row.summary.is_some() && self.is_marked(&row.condition_label, metric) {
                    write!(out, " **{cell}** |").unwrap();
                } else {
                    write!(out, " {cell} |").unwrap();
                }
            }
            out.push('\n');
        }
        if !self.comparisons.is_empty() {
            write!(
                out,
                "\nBoldface: significantly better between the compared conditions \
                 (paired t-test, p < {ALPHA}).\n"
            )
            .unwrap();
            for c in &self.comparisons {
                writeln!(out, "- {} vs {}: {} paired runs", c.left, c.right, c.paired_runs)
                    .unwrap();
            }
        }
        out
    }
}
