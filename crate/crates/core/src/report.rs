//! Benchmark report types and their JSON / CSV / markdown renderings.

use serde::{Deserialize, Serialize};

use crate::data::Partition;
use crate::error::Result;
use crate::model_selection::{CandidateParams, Method};
use crate::scalar::Real;

/// Mean and standard deviation; population divisor by default, `sample`
/// switches to n − 1 (0 when n < 2 either way).
pub fn mean_std<F: Real>(values: &[F], sample: bool) -> (F, F) {
    let n = values.len();
    if n == 0 {
        return (F::zero(), F::zero());
    }
    let mean = values.iter().copied().sum::<F>() / F::cast(n as f64);
    let divisor = if sample { n.saturating_sub(1) } else { n };
    if divisor == 0 {
        return (mean, F::zero());
    }
    let ss = values.iter().map(|v| (*v - mean) * (*v - mean)).sum::<F>();
    (mean, (ss / F::cast(divisor as f64)).sqrt())
}

/// One train/test partition's result for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct PartitionOutcome<F: Real> {
    pub partition: usize,
    pub winner: CandidateParams<F>,
    /// Mean validation F1 the winner scored during grid search.
    pub cv_f1: F,
    pub test_precision: F,
    pub test_recall: F,
    pub test_f1: F,
    /// The winning model labeled every test row positive.
    pub all_positive: bool,
    pub test_targets: usize,
    pub test_outliers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct MethodReport<F: Real> {
    pub method: Method,
    pub partitions: Vec<PartitionOutcome<F>>,
    pub mean_f1: F,
    pub std_f1: F,
    pub mean_precision: F,
    pub mean_recall: F,
    /// Partitions whose winner labeled the whole test set positive.
    pub all_positive_count: usize,
    /// Dual solves that hit the pass budget and were salvaged from the
    /// best iterate.
    pub solver_failures: usize,
    /// Projection rows re-drawn after rank-deficient orthonormalization.
    pub rank_rerandomizations: usize,
    /// Grid candidates skipped because some fold could not satisfy N·C ≥ 1.
    pub infeasible_candidates: usize,
    /// Candidate × fold trainings performed.
    pub evaluations: usize,
}

impl<F: Real> MethodReport<F> {
    pub fn from_partitions(
        method: Method,
        partitions: Vec<PartitionOutcome<F>>,
        sample_std: bool,
    ) -> Self {
        let f1: Vec<F> = partitions.iter().map(|p| p.test_f1).collect();
        let precision: Vec<F> = partitions.iter().map(|p| p.test_precision).collect();
        let recall: Vec<F> = partitions.iter().map(|p| p.test_recall).collect();
        let (mean_f1, std_f1) = mean_std(&f1, sample_std);
        let (mean_precision, _) = mean_std(&precision, sample_std);
        let (mean_recall, _) = mean_std(&recall, sample_std);
        let all_positive_count = partitions.iter().filter(|p| p.all_positive).count();
        MethodReport {
            method,
            partitions,
            mean_f1,
            std_f1,
            mean_precision,
            mean_recall,
            all_positive_count,
            solver_failures: 0,
            rank_rerandomizations: 0,
            infeasible_candidates: 0,
            evaluations: 0,
        }
    }
}

/// Full benchmark output: one entry per method, plus the partition manifest
/// that produced it, so a report is reproducible from its own content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct EvalReport<F: Real> {
    pub dataset: String,
    pub target_class: String,
    /// Standard deviations use the sample divisor n − 1 when set.
    pub sample_std: bool,
    pub partitions: Vec<Partition>,
    pub methods: Vec<MethodReport<F>>,
}

impl<F: Real + Serialize> EvalReport<F> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat table, one row per method × partition.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "method",
            "partition",
            "cv_f1",
            "test_f1",
            "test_precision",
            "test_recall",
            "all_positive",
            "c",
            "d",
            "beta",
            "sigma",
            "test_targets",
            "test_outliers",
            "mean_f1",
            "std_f1",
        ])?;
        let fmt_opt_f = |v: Option<F>| v.map(|v| v.to_string()).unwrap_or_default();
        for m in &self.methods {
            for p in &m.partitions {
                w.write_record([
                    self.dataset.clone(),
                    m.method.to_string(),
                    p.partition.to_string(),
                    p.cv_f1.to_string(),
                    p.test_f1.to_string(),
                    p.test_precision.to_string(),
                    p.test_recall.to_string(),
                    p.all_positive.to_string(),
                    p.winner.c.to_string(),
                    p.winner.d.map(|d| d.to_string()).unwrap_or_default(),
                    fmt_opt_f(p.winner.beta),
                    fmt_opt_f(p.winner.sigma),
                    p.test_targets.to_string(),
                    p.test_outliers.to_string(),
                    m.mean_f1.to_string(),
                    m.std_f1.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Internal {
            detail: format!("csv buffer: {e}"),
        })?;
        String::from_utf8(bytes).map_err(|e| crate::Error::Internal {
            detail: format!("csv not utf-8: {e}"),
        })
    }

    /// Summary table for terminals.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "Dataset: {} (target class: {})\n\n",
            self.dataset, self.target_class
        ));
        out.push_str("| method | mean F1 | std F1 | mean precision | mean recall | all-positive |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for m in &self.methods {
            out.push_str(&format!(
                "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {}/{} |\n",
                m.method,
                m.mean_f1.as_f64(),
                m.std_f1.as_f64(),
                m.mean_precision.as_f64(),
                m.mean_recall.as_f64(),
                m.all_positive_count,
                m.partitions.len(),
            ));
        }
        out
    }
}
