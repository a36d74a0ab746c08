use std::fmt::Write as _;

use serde::Serialize;

use crate::suite::SuiteConfig;

/// Printed at the top of every summary.
pub const TIMING_NOTE: &str =
    "AD times include weight updates, normalization and checkpointing; CTP times include checkpointing.";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub id: usize,
    pub feature_count: usize,
    pub ctp_seconds: f64,
    pub ad_seconds: f64,
    /// AD time over CTP time.
    pub ratio: f64,
    pub touched_portions: Vec<String>,
    pub touched_largest_portion: bool,
    /// Disease posterior.
    pub posterior: Vec<f64>,
    pub ctp_messages: usize,
    pub ad_messages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub count: usize,
    pub mean_ratio: Option<f64>,
}

impl ClusterSummary {
    fn of<'a>(cases: impl Iterator<Item = &'a CaseResult>) -> Self {
        let ratios: Vec<f64> = cases.map(|c| c.ratio).collect();
        ClusterSummary {
            count: ratios.len(),
            mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub cases: Vec<CaseResult>,
    pub mean_ratio: f64,
    /// Population standard deviation of the ratios.
    pub std_ratio: f64,
    /// Cases that leave the largest portion alone.
    pub away_from_largest: ClusterSummary,
    pub touching_largest: ClusterSummary,
    pub worst_case: Option<CaseResult>,
    pub repeat: usize,
    pub parallel: bool,
}

impl BenchReport {
    pub(crate) fn new(cases: Vec<CaseResult>, worst_case: Option<CaseResult>, config: &SuiteConfig) -> Self {
        let n = cases.len().max(1) as f64;
        let mean_ratio = cases.iter().map(|c| c.ratio).sum::<f64>() / n;
        let var = cases.iter().map(|c| (c.ratio - mean_ratio).powi(2)).sum::<f64>() / n;
        BenchReport {
            away_from_largest: ClusterSummary::of(cases.iter().filter(|c| !c.touched_largest_portion)),
            touching_largest: ClusterSummary::of(cases.iter().filter(|c| c.touched_largest_portion)),
            mean_ratio,
            std_ratio: var.sqrt(),
            cases,
            worst_case,
            repeat: config.repeat,
            parallel: config.parallel,
        }
    }

    pub fn max_ratio(&self) -> f64 {
        self.cases.iter().map(|c| c.ratio).fold(0.0, f64::max)
    }

    /// Disease posteriors in case order.
    pub fn posteriors(&self) -> Vec<&[f64]> {
        self.cases.iter().map(|c| c.posterior.as_slice()).collect()
    }

    /// Human-readable summary with the ratios to three decimals.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let fmt = |m: Option<f64>| m.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(out, "# {TIMING_NOTE}");
        let _ = writeln!(
            out,
            "# median of {} repetitions per engine; AD instances {}",
            self.repeat,
            if self.parallel { "in parallel" } else { "sequential" }
        );
        let _ = writeln!(out, "cases: {}", self.cases.len());
        let _ = writeln!(out, "mean AD/CTP ratio: {:.3} (sd {:.3})", self.mean_ratio, self.std_ratio);
        let _ = writeln!(
            out,
            "away from largest portion: {} cases, mean ratio {}",
            self.away_from_largest.count,
            fmt(self.away_from_largest.mean_ratio)
        );
        let _ = writeln!(
            out,
            "touching largest portion: {} cases, mean ratio {}",
            self.touching_largest.count,
            fmt(self.touching_largest.mean_ratio)
        );
        let _ = writeln!(out, "max case ratio: {:.3}", self.max_ratio());
        if let Some(w) = &self.worst_case {
            let _ = writeln!(out, "all portions touched ({} features): ratio {:.3}", w.feature_count, w.ratio);
        }
        out
    }
}

fn write_rows(report: &BenchReport, timing: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["case_id", "feature_count"];
    if timing {
        header.push("ratio");
    }
    header.push("touched_largest_portion");
    w.write_record(&header).expect("writing to memory");
    for c in &report.cases {
        let mut row = vec![c.id.to_string(), c.feature_count.to_string()];
        if timing {
            row.push(format!("{:.6}", c.ratio));
        }
        row.push(c.touched_largest_portion.to_string());
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// Scatter data: `case_id,feature_count,ratio,touched_largest_portion`,
/// one row per case in case order.
pub fn export_scatter(report: &BenchReport) -> String {
    write_rows(report, true)
}

/// The scatter CSV without the timing-derived `ratio` column.
pub fn scatter_without_timing(report: &BenchReport) -> String {
    write_rows(report, false)
}
