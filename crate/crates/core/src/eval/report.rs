//! Evaluation reports and cross-seed aggregation.

use super::EvalError;
use crate::model::RunConfig;
use crate::parser::DroppedCitation;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const CITATION_RECALL: &str = "citation_recall";
pub const CITATION_PRECISION: &str = "citation_precision";
pub const EM_RECALL: &str = "em_recall";
pub const QAMPARI_PRECISION: &str = "qampari_precision";
pub const QAMPARI_RECALL: &str = "qampari_recall";
pub const QAMPARI_RECALL_5: &str = "qampari_recall_5";
pub const CLAIM_RECALL: &str = "claim_recall";
pub const ROUGE_L: &str = "rouge_l";
pub const FLUENCY: &str = "fluency";
pub const STATEMENTS: &str = "statements";
pub const CITATIONS: &str = "citations";

/// Metrics already on a 0-100 scale; everything else is a 0-1 ratio,
/// except the raw counts.
fn scale(metric: &str) -> f64 {
    match metric {
        ROUGE_L | FLUENCY | STATEMENTS | CITATIONS => 1.0,
        _ => 100.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScores {
    pub id: String,
    pub n_statements: usize,
    pub n_citations: usize,
    pub citation_recall: f64,
    pub citation_precision: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qampari_precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qampari_recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qampari_recall_5: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rouge_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_citations: Vec<DroppedCitation>,
}

impl ExampleScores {
    fn metrics(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            (CITATION_RECALL, self.citation_recall),
            (CITATION_PRECISION, self.citation_precision),
            (STATEMENTS, self.n_statements as f64),
            (CITATIONS, self.n_citations as f64),
        ];
        let optional = [
            (EM_RECALL, self.em_recall),
            (QAMPARI_PRECISION, self.qampari_precision),
            (QAMPARI_RECALL, self.qampari_recall),
            (QAMPARI_RECALL_5, self.qampari_recall_5),
            (CLAIM_RECALL, self.claim_recall),
            (ROUGE_L, self.rouge_l),
        ];
        out.extend(optional.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation across seeds; 0 for a single run.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub template_version: String,
    pub oracle: String,
    /// Whether generation reranked with this same oracle; absent when no
    /// reranking took place.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_oracle_is_eval_oracle: Option<bool>,
    pub seeds: Vec<u64>,
    pub per_example: Vec<ExampleScores>,
    pub aggregate: BTreeMap<String, MetricSummary>,
}

/// Per-metric means over examples. A metric is averaged over the examples
/// that report it.
pub(crate) fn example_means(scores: &[ExampleScores]) -> BTreeMap<String, MetricSummary> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for s in scores {
        for (k, v) in s.metrics() {
            let e = sums.entry(k).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(k, (sum, n))| {
            (
                k.to_owned(),
                MetricSummary {
                    mean: sum / n as f64,
                    std: 0.0,
                },
            )
        })
        .collect()
}

fn mean_std(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MetricSummary { mean, std }
}

/// Combines reports that differ only in seed: each metric becomes the mean
/// and sample standard deviation of the per-seed means. A metric missing
/// from any report is dropped.
pub fn aggregate(reports: &[EvalReport]) -> Result<EvalReport, EvalError> {
    let first = reports
        .first()
        .ok_or_else(|| EvalError::Invalid("nothing to aggregate".into()))?;
    let unseeded = |c: &RunConfig| RunConfig { seed: 0, ..c.clone() };
    for r in &reports[1..] {
        if unseeded(&r.config) != unseeded(&first.config) {
            return Err(EvalError::ConfigMismatch("run configurations differ".into()));
        }
        if r.template_version != first.template_version {
            return Err(EvalError::ConfigMismatch(format!(
                "template versions {} and {}",
                first.template_version, r.template_version
            )));
        }
        if r.oracle != first.oracle {
            return Err(EvalError::ConfigMismatch(format!(
                "oracles {} and {}",
                first.oracle, r.oracle
            )));
        }
    }

    let mut aggregate = BTreeMap::new();
    for metric in first.aggregate.keys() {
        let values: Option<Vec<f64>> = reports
            .iter()
            .map(|r| r.aggregate.get(metric).map(|m| m.mean))
            .collect();
        if let Some(values) = values {
            aggregate.insert(metric.clone(), mean_std(&values));
        }
    }
    let flags: Option<Vec<bool>> = reports.iter().map(|r| r.rerank_oracle_is_eval_oracle).collect();
    Ok(EvalReport {
        config: first.config.clone(),
        template_version: first.template_version.clone(),
        oracle: first.oracle.clone(),
        rerank_oracle_is_eval_oracle: flags.map(|f| f.iter().any(|&b| b)),
        seeds: reports.iter().flat_map(|r| r.seeds.iter().copied()).collect(),
        per_example: Vec::new(),
        aggregate,
    })
}

/// Human-readable aggregate table. Ratios are shown as percentages; with
/// several seeds each cell reads `mean (std)`.
pub fn render_table(report: &EvalReport) -> String {
    let width = report.aggregate.keys().map(String::len).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} / {} / seeds {:?} / oracle {}",
        report.config.dataset.as_str(),
        report.config.strategy.as_str(),
        report.seeds,
        report.oracle
    );
    let _ = writeln!(out, "{:<width$}  value", "metric");
    for (name, m) in &report.aggregate {
        let s = scale(name);
        let cell = if report.seeds.len() > 1 {
            format!("{:.1} ({:.1})", m.mean * s, m.std * s)
        } else {
            format!("{:.1}", m.mean * s)
        };
        let _ = writeln!(out, "{name:<width$}  {cell}");
    }
    out
}
