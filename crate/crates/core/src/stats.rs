//! Multi-run aggregation and paired significance testing.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::metrics::MetricReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("every run in the series refused")]
    AllRefused,
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("paired test needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("run series have inconsistent run counts: {0:?}")]
    InconsistentRunCounts(Vec<usize>),
    #[error("fewer than 2 comparable (non-refused) run pairs")]
    TooFewPairs,
}

/// The seven reported metrics, in table column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NodePrecision,
    NodeRecall,
    EdgePrecision,
    EdgeRecall,
    F1,
    Shd,
    Nshd,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::NodePrecision,
        Metric::NodeRecall,
        Metric::EdgePrecision,
        Metric::EdgeRecall,
        Metric::F1,
        Metric::Shd,
        Metric::Nshd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::NodePrecision => "node_precision",
            Metric::NodeRecall => "node_recall",
            Metric::EdgePrecision => "edge_precision",
            Metric::EdgeRecall => "edge_recall",
            Metric::F1 => "f1",
            Metric::Shd => "shd",
            Metric::Nshd => "nshd",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            Metric::NodePrecision => "Node Precision",
            Metric::NodeRecall => "Node Recall",
            Metric::EdgePrecision => "Edge Precision",
            Metric::EdgeRecall => "Edge Recall",
            Metric::F1 => "F1",
            Metric::Shd => "SHD",
            Metric::Nshd => "nSHD",
        }
    }

    /// Direction of improvement: true for precision/recall/F1, false for
    /// the Hamming distances.
    pub fn higher_is_better(&self) -> bool {
        !matches!(self, Metric::Shd | Metric::Nshd)
    }

    pub fn extract(&self, report: &MetricReport) -> Option<f64> {
        match self {
            Metric::NodePrecision => report.node_precision,
            Metric::NodeRecall => report.node_recall,
            Metric::EdgePrecision => report.edge_precision,
            Metric::EdgeRecall => report.edge_recall,
            Metric::F1 => report.f1,
            Metric::Shd => report.shd.map(|v| v as f64),
            Metric::Nshd => report.nshd,
        }
    }
}

/// Per-run metric reports for one experiment condition (model + data mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub condition_label: String,
    pub reports: Vec<MetricReport>,
}

impl RunSeries {
    pub fn new(condition_label: impl Into<String>, reports: Vec<MetricReport>) -> Self {
        Self { condition_label: condition_label.into(), reports }
    }

    pub fn run_count(&self) -> usize {
        self.reports.len()
    }

    pub fn refused_count(&self) -> usize {
        self.reports.iter().filter(|r| r.refused).count()
    }

    pub fn all_refused(&self) -> bool {
        !self.reports.is_empty() && self.refused_count() == self.reports.len()
    }

    /// Per-run values of one metric, skipping refused runs.
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.reports.iter().filter_map(|r| metric.extract(r)).collect()
    }
}

/// Which standard-deviation divisor to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdDevMode {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n − 1 (0 for a single sample).
    Sample,
}

/// Mean ± standard deviation over the non-refused runs of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: f64,
    pub std_dev: f64,
    pub samples: usize,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn aggregate_values(values: &[f64], mode: StdDevMode) -> MetricAggregate {
    let n = values.len();
    let m = mean(values);
    let sum_sq: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    let std_dev = match mode {
        StdDevMode::Population => (sum_sq / n as f64).sqrt(),
        StdDevMode::Sample if n > 1 => (sum_sq / (n - 1) as f64).sqrt(),
        StdDevMode::Sample => 0.0,
    };
    MetricAggregate { mean: m, std_dev, samples: n }
}

/// Aggregated view of one series: mean ± std per metric over non-refused
/// runs. Errors with [`StatsError::AllRefused`] when no run produced scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub condition_label: String,
    pub runs: usize,
    pub refused_runs: usize,
    pub node_precision: MetricAggregate,
    pub node_recall: MetricAggregate,
    pub edge_precision: MetricAggregate,
    pub edge_recall: MetricAggregate,
    pub f1: MetricAggregate,
    pub shd: MetricAggregate,
    pub nshd: MetricAggregate,
}

impl SeriesSummary {
    pub fn get(&self, metric: Metric) -> MetricAggregate {
        match metric {
            Metric::NodePrecision => self.node_precision,
            Metric::NodeRecall => self.node_recall,
            Metric::EdgePrecision => self.edge_precision,
            Metric::EdgeRecall => self.edge_recall,
            Metric::F1 => self.f1,
            Metric::Shd => self.shd,
            Metric::Nshd => self.nshd,
        }
    }
}

/// Computes mean and standard deviation per metric. Refused runs are
/// excluded from the numbers; a series where every run refused is an error
/// (rendered as an N/A row upstream).
pub fn aggregate_runs(series: &RunSeries, mode: StdDevMode) -> Result<SeriesSummary, StatsError> {
    let agg = |metric: Metric| -> Result<MetricAggregate, StatsError> {
        let values = series.values(metric);
        if values.is_empty() {
            return Err(StatsError::AllRefused);
        }
        Ok(aggregate_values(&values, mode))
    };
    Ok(SeriesSummary {
        condition_label: series.condition_label.clone(),
        runs: series.run_count(),
        refused_runs: series.refused_count(),
        node_precision: agg(Metric::NodePrecision)?,
        node_recall: agg(Metric::NodeRecall)?,
        edge_precision: agg(Metric::EdgePrecision)?,
        edge_recall: agg(Metric::EdgeRecall)?,
        f1: agg(Metric::F1)?,
        shd: agg(Metric::Shd)?,
        nshd: agg(Metric::Nshd)?,
    })
}

/// Two-sided paired Student's t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl PairedTTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Runs a two-sided paired t-test on per-index differences `a[i] − b[i]`.
///
/// The statistic uses the sample standard deviation of the differences with
/// n − 1 degrees of freedom. All-zero differences give t = 0, p = 1; a
/// non-zero mean with zero variance is taken as the limit t = ±∞, p = 0.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(StatsError::TooFewSamples(a.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let mean_diff = mean(&diffs);
    let var: f64 =
        diffs.iter().map(|d| (d - mean_diff) * (d - mean_diff)).sum::<f64>() / (n - 1) as f64;
    let degrees_of_freedom = n - 1;

    let (t_statistic, p_value) = if var == 0.0 {
        if mean_diff == 0.0 {
            (0.0, 1.0)
        } else {
            (mean_diff.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean_diff / (var / n as f64).sqrt();
        let dist = StudentsT::new(0.0, 1.0, degrees_of_freedom as f64)
            .expect("degrees of freedom >= 1");
        (t, 2.0 * dist.sf(t.abs()))
    };

    Ok(PairedTTest { t_statistic, degrees_of_freedom, p_value })
}
