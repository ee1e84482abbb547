//! Per-slot records and run-level metrics (APR, ACD, ACR, welfare).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{AprMode, Scheme};
use crate::scenario::TaskId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRecord {
    pub task: TaskId,
    pub gen_slot: u64,
    pub c_req: f64,
    pub d_in: f64,
    pub t_max: f64,
    /// Completion time minus request time (s).
    pub delay: f64,
    pub completion_slot: u64,
}

/// Processed amount per unit time over completed tasks; `None` without
/// completions.
pub fn apr(records: &[CompletionRecord], mode: AprMode) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for r in records {
        num += match mode {
            AprMode::Cycles => r.c_req,
            AprMode::Bits => r.d_in,
        };
        den += r.delay;
    }
    (den > 0.0).then(|| num / den)
}

pub fn acd(records: &[CompletionRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let sum: f64 = records.iter().map(|r| r.delay).sum();
    Some(sum / records.len() as f64)
}

pub fn acr(n_succ: u64, n_gen: u64) -> Option<f64> {
    (n_gen > 0).then(|| n_succ as f64 / n_gen as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub generated: u64,
    pub committed: u64,
    pub failed: u64,
    pub completed: u64,
    pub sw: f64,
    pub sw_cum: f64,
    pub veh_util: f64,
    pub srv_util: f64,
    /// Running values over everything completed so far.
    pub apr: Option<f64>,
    pub acd: Option<f64>,
    pub acr: Option<f64>,
    pub runtime_ms: f64,
}

/// Streaming sums; adding records in the same order as a batch
/// recomputation gives bit-identical values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsAccumulator {
    pub n_gen: u64,
    pub n_succ: u64,
    pub n_failed: u64,
    sum_cycles: f64,
    sum_bits: f64,
    sum_delay: f64,
    pub sw_cum: f64,
    pub completions: Vec<CompletionRecord>,
}

impl MetricsAccumulator {
    pub fn complete(&mut self, r: CompletionRecord) {
        self.n_succ += 1;
        self.sum_cycles += r.c_req;
        self.sum_bits += r.d_in;
        self.sum_delay += r.delay;
        self.completions.push(r);
    }

    pub fn apr(&self, mode: AprMode) -> Option<f64> {
        let num = match mode {
            AprMode::Cycles => self.sum_cycles,
            AprMode::Bits => self.sum_bits,
        };
        (self.sum_delay > 0.0).then(|| num / self.sum_delay)
    }

    pub fn acd(&self) -> Option<f64> {
        (self.n_succ > 0).then(|| self.sum_delay / self.n_succ as f64)
    }

    pub fn acr(&self) -> Option<f64> {
        acr(self.n_succ, self.n_gen)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub scheme: Scheme,
    pub seed: u64,
    pub slots: u64,
    pub sw_series: Vec<f64>,
    pub sw_cumulative: f64,
    pub veh_util_series: Vec<f64>,
    pub srv_util_series: Vec<f64>,
    pub veh_util_total: f64,
    pub srv_util_total: f64,
    pub apr: Option<f64>,
    pub apr_bits: Option<f64>,
    pub acd: Option<f64>,
    pub acr: Option<f64>,
    pub n_succ: u64,
    pub n_gen: u64,
    pub n_failed: u64,
    pub n_local: u64,
    pub n_edge: u64,
    pub n_cloud: u64,
    pub mean_price_per_ghz: Option<f64>,
    pub clamp_events: u64,
    pub no_deal: BTreeMap<String, u64>,
    pub runtime_ms: f64,
    pub mean_slot_runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Mean and sample standard deviation.
pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary::default();
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, std, n }
}
