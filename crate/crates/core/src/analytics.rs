//! Run statistics: hot-row census, per-line attribution, the serialized
//! report, and cross-run comparison.
//!
//! Hot-row counts follow the per-window convention: a row is counted once
//! per epoch in which it met the threshold, and the run totals sum over
//! epochs (a row hot in two epochs counts twice).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dram::ActivationWindow;
use crate::error::{Result, SimError};
use crate::mitigation::FlipRecord;

/// Counts of rows meeting each threshold within one window.
pub fn hot_row_census(
    rows: impl Iterator<Item = (u64, u32)> + Clone,
    thresholds: &[u64],
) -> Vec<u64> {
    thresholds
        .iter()
        .map(|&t| rows.clone().filter(|&(_, count)| count as u64 >= t).count() as u64)
        .collect()
}

/// Distinct-activating-lines histogram over hot rows, bucketed as
/// 1-32, 32-64, and 64-128 lines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinesPerHotRow {
    pub bucket_1_32: u64,
    pub bucket_32_64: u64,
    pub bucket_64_128: u64,
    pub hot_rows: u64,
    pub mean_activating_lines: f64,
    #[serde(skip)]
    lines_sum: u64,
}

impl LinesPerHotRow {
    /// Folds in one epoch: for every row at or past `hot_threshold`, count
    /// the columns that saw at least one activation.
    pub fn accumulate(
        &mut self,
        attribution: &HashMap<(u64, u32), u32>,
        window: &ActivationWindow,
        hot_threshold: u64,
    ) {
        let mut per_row: HashMap<u64, u64> = HashMap::new();
        for &(row, _col) in attribution.keys() {
            *per_row.entry(row).or_insert(0) += 1;
        }
        for (row, lines) in per_row {
            if (window.count(row) as u64) < hot_threshold {
                continue;
            }
            self.hot_rows += 1;
            self.lines_sum += lines;
            match lines {
                1..=31 => self.bucket_1_32 += 1,
                32..=63 => self.bucket_32_64 += 1,
                _ => self.bucket_64_128 += 1,
            }
        }
        self.mean_activating_lines = if self.hot_rows == 0 {
            0.0
        } else {
            self.lines_sum as f64 / self.hot_rows as f64
        };
    }
}

/// One refresh epoch's statistics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpochSnapshot {
    pub epoch: u64,
    pub accesses: u64,
    pub activations: u64,
    pub hits: u64,
    pub unique_rows: u64,
    pub hot_rows_64: u64,
    pub hot_rows_512: u64,
    /// In-window activation count statistics over the touched rows.
    pub acts_per_row_mean: f64,
    pub acts_per_row_stdev: f64,
    pub mitigation_events: u64,
    pub remap_events: u64,
    pub blocked_ns: f64,
    pub flips: u64,
}

/// Mean and population standard deviation of in-window counts.
pub fn acts_per_row_stats(rows: impl Iterator<Item = (u64, u32)>) -> (f64, f64) {
    let (mut n, mut sum, mut sumsq) = (0u64, 0f64, 0f64);
    for (_, count) in rows {
        n += 1;
        sum += count as f64;
        sumsq += (count as f64) * (count as f64);
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    (mean, (sumsq / n as f64 - mean * mean).max(0.0).sqrt())
}

/// Aggregated statistics of one run. Serializes to a stable JSON document;
/// identical configs and seeds produce byte-identical reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimReport {
    pub schema_version: u32,
    pub workload: String,
    pub mapping: String,
    pub mitigation: String,
    pub t_rh: u64,
    pub seed: u64,
    pub total_accesses: u64,
    /// Demand activations (remap traffic is accounted separately).
    pub total_activations: u64,
    pub row_buffer_hits: u64,
    pub hit_rate: f64,
    pub unique_rows_touched: u64,
    pub hot_rows_64: u64,
    pub hot_rows_512: u64,
    pub mitigation_events: BTreeMap<String, u64>,
    pub remap_swaps: u64,
    pub remap_skips: u64,
    pub remap_activations: u64,
    pub channel_blocked_ns: f64,
    pub completion_time_ns: f64,
    pub flips: Vec<FlipRecord>,
    pub lines_per_hot_row: LinesPerHotRow,
    pub epochs: Vec<EpochSnapshot>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

impl SimReport {
    pub fn total_mitigation_events(&self) -> u64 {
        self.mitigation_events.values().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-epoch CSV table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epoch,accesses,activations,hits,unique_rows,hot_rows_64,hot_rows_512,acts_per_row_mean,acts_per_row_stdev,mitigation_events,remap_events,blocked_ns,flips\n",
        );
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                e.epoch,
                e.accesses,
                e.activations,
                e.hits,
                e.unique_rows,
                e.hot_rows_64,
                e.hot_rows_512,
                e.acts_per_row_mean,
                e.acts_per_row_stdev,
                e.mitigation_events,
                e.remap_events,
                e.blocked_ns,
                e.flips
            ));
        }
        out
    }
}

/// One run's metrics normalized against a baseline run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub hit_rate: f64,
    pub activations: u64,
    pub activation_ratio: Option<f64>,
    pub hot_rows_64: u64,
    pub hot_row_ratio: Option<f64>,
    pub mitigation_events: u64,
    pub mitigation_event_ratio: Option<f64>,
    pub channel_blocked_ns: f64,
    pub blocked_ratio: Option<f64>,
    /// Simulated completion-time ratio for the same access count.
    pub slowdown_proxy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunComparison {
    pub workload: String,
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

fn ratio(value: f64, base: f64) -> Option<f64> {
    if base == 0.0 {
        if value == 0.0 {
            Some(1.0)
        } else {
            None
        }
    } else {
        Some(value / base)
    }
}

/// Normalizes `reports` against `reports[baseline]`. All reports must come
/// from the same workload.
pub fn compare_runs(reports: &[SimReport], baseline: usize) -> Result<RunComparison> {
    let base = reports
        .get(baseline)
        .ok_or_else(|| SimError::Validation("baseline index out of range".into()))?;
    if let Some(other) = reports.iter().find(|r| r.workload != base.workload) {
        return Err(SimError::Validation(format!(
            "reports mix workloads {:?} and {:?}",
            base.workload, other.workload
        )));
    }
    let rows = reports
        .iter()
        .map(|r| ComparisonRow {
            label: format!("{}+{}@{}", r.mapping, r.mitigation, r.t_rh),
            hit_rate: r.hit_rate,
            activations: r.total_activations,
            activation_ratio: ratio(r.total_activations as f64, base.total_activations as f64),
            hot_rows_64: r.hot_rows_64,
            hot_row_ratio: ratio(r.hot_rows_64 as f64, base.hot_rows_64 as f64),
            mitigation_events: r.total_mitigation_events(),
            mitigation_event_ratio: ratio(
                r.total_mitigation_events() as f64,
                base.total_mitigation_events() as f64,
            ),
            channel_blocked_ns: r.channel_blocked_ns,
            blocked_ratio: ratio(r.channel_blocked_ns, base.channel_blocked_ns),
            slowdown_proxy: ratio(r.completion_time_ns, base.completion_time_ns),
        })
        .collect();
    Ok(RunComparison {
        workload: base.workload.clone(),
        baseline: format!("{}+{}@{}", base.mapping, base.mitigation, base.t_rh),
        rows,
    })
}

impl RunComparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,hit_rate,activations,activation_ratio,hot_rows_64,hot_row_ratio,mitigation_events,mitigation_event_ratio,channel_blocked_ns,blocked_ratio,slowdown_proxy\n",
        );
        let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| x.to_string());
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.label,
                r.hit_rate,
                r.activations,
                fmt(r.activation_ratio),
                r.hot_rows_64,
                fmt(r.hot_row_ratio),
                r.mitigation_events,
                fmt(r.mitigation_event_ratio),
                r.channel_blocked_ns,
                fmt(r.blocked_ratio),
                fmt(r.slowdown_proxy)
            ));
        }
        out
    }
}
