//! CSV, JSON and gnuplot emitters.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::Scheme;
use crate::engine::RunOutput;
use crate::error::{Error, Result};
use crate::metrics::{summarize, Summary};

pub const RUN_COLUMNS: [&str; 13] = [
    "scheme",
    "seed",
    "param_key",
    "param_value",
    "slot",
    "sw",
    "sw_cum",
    "veh_util",
    "srv_util",
    "apr",
    "acd",
    "acr",
    "runtime_ms",
];

pub const SWEEP_COLUMNS: [&str; 16] = [
    "param_key",
    "param_value",
    "scheme",
    "seed",
    "sw_cum",
    "veh_util",
    "srv_util",
    "apr",
    "acd",
    "acr",
    "n_gen",
    "n_succ",
    "n_local",
    "n_edge",
    "n_cloud",
    "runtime_ms",
];

pub const NA: &str = "NA";

/// Finite numbers in shortest round-trip form, everything else `NA`.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => NA.to_string(),
    }
}

/// One finished run with the sweep coordinate it belongs to.
#[derive(Debug, Clone)]
pub struct LabelledRun {
    pub param_key: Option<String>,
    pub param_value: Option<f64>,
    pub output: RunOutput,
}

impl LabelledRun {
    fn key(&self) -> &str {
        self.param_key.as_deref().unwrap_or("none")
    }
}

/// Per-slot rows. Wall-clock columns are `NA` unless `timing` is set, so
/// that identical runs give identical files.
pub fn write_run_csv(path: &Path, runs: &[LabelledRun], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RUN_COLUMNS)?;
    for r in runs {
        let m = &r.output.metrics;
        for s in &r.output.records {
            w.write_record([
                m.scheme.name().to_string(),
                m.seed.to_string(),
                r.key().to_string(),
                cell(r.param_value),
                s.slot.to_string(),
                cell(Some(s.sw)),
                cell(Some(s.sw_cum)),
                cell(Some(s.veh_util)),
                cell(Some(s.srv_util)),
                cell(s.apr),
                cell(s.acd),
                cell(s.acr),
                if timing {
                    cell(Some(s.runtime_ms))
                } else {
                    NA.to_string()
                },
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// One row per run.
pub fn write_sweep_csv(path: &Path, runs: &[LabelledRun]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    for r in runs {
        let m = &r.output.metrics;
        w.write_record([
            r.key().to_string(),
            cell(r.param_value),
            m.scheme.name().to_string(),
            m.seed.to_string(),
            cell(Some(m.sw_cumulative)),
            cell(Some(m.veh_util_total)),
            cell(Some(m.srv_util_total)),
            cell(m.apr),
            cell(m.acd),
            cell(m.acr),
            m.n_gen.to_string(),
            m.n_succ.to_string(),
            m.n_local.to_string(),
            m.n_edge.to_string(),
            m.n_cloud.to_string(),
            cell(Some(m.runtime_ms)),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scheme: Scheme,
    pub seed: u64,
    pub param_key: Option<String>,
    pub param_value: Option<f64>,
    pub slots: u64,
    pub sw_cumulative: f64,
    pub veh_util_total: f64,
    pub srv_util_total: f64,
    pub apr: Option<f64>,
    pub apr_bits: Option<f64>,
    pub acd: Option<f64>,
    pub acr: Option<f64>,
    pub n_gen: u64,
    pub n_succ: u64,
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

#[derive(Debug, Clone, Serialize)]
pub struct SchemeAggregate {
    pub scheme: Scheme,
    pub param_value: Option<f64>,
    pub sw_cumulative: Summary,
    pub acd: Summary,
    pub acr: Summary,
    pub apr: Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryFile {
    pub runs: Vec<RunSummary>,
    pub aggregates: Vec<SchemeAggregate>,
}

pub fn run_summary(r: &LabelledRun) -> RunSummary {
    let m = &r.output.metrics;
    RunSummary {
        scheme: m.scheme,
        seed: m.seed,
        param_key: r.param_key.clone(),
        param_value: r.param_value,
        slots: m.slots,
        sw_cumulative: m.sw_cumulative,
        veh_util_total: m.veh_util_total,
        srv_util_total: m.srv_util_total,
        apr: m.apr,
        apr_bits: m.apr_bits,
        acd: m.acd,
        acr: m.acr,
        n_gen: m.n_gen,
        n_succ: m.n_succ,
        n_failed: m.n_failed,
        n_local: m.n_local,
        n_edge: m.n_edge,
        n_cloud: m.n_cloud,
        mean_price_per_ghz: m.mean_price_per_ghz,
        clamp_events: m.clamp_events,
        no_deal: m.no_deal.clone(),
        runtime_ms: m.runtime_ms,
        mean_slot_runtime_ms: m.mean_slot_runtime_ms,
    }
}

/// Mean and standard deviation across seeds for each (value, scheme).
/// Metrics that are undefined for a run are left out of its summary.
pub fn aggregate(runs: &[LabelledRun]) -> Vec<SchemeAggregate> {
    type Group<'a> = ((Option<u64>, Scheme), Vec<&'a LabelledRun>);
    let mut groups: Vec<Group> = Vec::new();
    for r in runs {
        let key = (r.param_value.map(f64::to_bits), r.output.metrics.scheme);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((_, scheme), rs)| {
            let pick = |f: &dyn Fn(&LabelledRun) -> Option<f64>| {
                summarize(&rs.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            SchemeAggregate {
                scheme,
                param_value: rs[0].param_value,
                sw_cumulative: pick(&|r| Some(r.output.metrics.sw_cumulative)),
                acd: pick(&|r| r.output.metrics.acd),
                acr: pick(&|r| r.output.metrics.acr),
                apr: pick(&|r| r.output.metrics.apr),
            }
        })
        .collect()
}

pub fn write_summary_json(path: &Path, runs: &[LabelledRun]) -> Result<()> {
    let file = SummaryFile {
        runs: runs.iter().map(run_summary).collect(),
        aggregates: aggregate(runs),
    };
    let text = serde_json::to_string_pretty(&file)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
}

/// Per-scheme blocks of `value mean std` for each metric, separated by
/// blank line pairs so gnuplot can address them with `index`.
pub fn write_sweep_dat(path: &Path, runs: &[LabelledRun]) -> Result<Vec<Scheme>> {
    let aggs = aggregate(runs);
    let mut schemes: Vec<Scheme> = Vec::new();
    for a in &aggs {
        if !schemes.contains(&a.scheme) {
            schemes.push(a.scheme);
        }
    }
    let mut out = String::new();
    for s in &schemes {
        out.push_str(&format!("# {}\n", s.name()));
        out.push_str("value sw_mean sw_std acd_mean acd_std acr_mean acr_std apr_mean apr_std\n");
        let mut rows: Vec<&SchemeAggregate> = aggs.iter().filter(|a| a.scheme == *s).collect();
        rows.sort_by(|a, b| a.param_value.unwrap_or(0.0).total_cmp(&b.param_value.unwrap_or(0.0)));
        for a in rows {
            let num = |v: &Summary| {
                if v.n == 0 {
                    format!("{NA} {NA}")
                } else {
                    format!("{} {}", v.mean, v.std)
                }
            };
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                cell(a.param_value),
                num(&a.sw_cumulative),
                num(&a.acd),
                num(&a.acr),
                num(&a.apr)
            ));
        }
        out.push_str("\n\n");
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(schemes)
}

/// Gnuplot script for a sweep data file produced by [`write_sweep_dat`].
pub fn sweep_plot_script(dat: &str, key: &str, schemes: &[Scheme]) -> String {
    let mut s = String::new();
    s.push_str("set terminal pngcairo size 1200,400\n");
    s.push_str("set output 'sweep.png'\n");
    s.push_str("set datafile missing 'NA'\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set multiplot layout 1,3\n");
    s.push_str(&format!("set xlabel '{key}'\n"));
    for (col, label) in [(2, "cumulative social welfare"), (4, "ACD (s)"), (6, "ACR")] {
        s.push_str(&format!("set ylabel '{label}'\n"));
        let parts: Vec<String> = schemes
            .iter()
            .enumerate()
            .map(|(i, sc)| {
                format!(
                    "'{dat}' index {i} using 1:{col}:{} with yerrorlines title '{}'",
                    col + 1,
                    sc.name()
                )
            })
            .collect();
        s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    }
    s.push_str("unset multiplot\n");
    s
}

/// Gnuplot script plotting cumulative welfare over slots from `run.csv`.
pub fn run_plot_script(csv: &str, runs: &[LabelledRun]) -> String {
    let mut s = String::new();
    s.push_str("set terminal pngcairo size 800,500\n");
    s.push_str("set output 'sw.png'\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile missing 'NA'\n");
    s.push_str("set xlabel 'slot'\nset ylabel 'cumulative social welfare'\n");
    let parts: Vec<String> = runs
        .iter()
        .map(|r| {
            let m = &r.output.metrics;
            format!(
                "'{csv}' using (strcol(1) eq '{}' && $2 == {} ? $5 : 1/0):7 every ::1 with lines title '{} seed {}'",
                m.scheme.name(),
                m.seed,
                m.scheme.name(),
                m.seed
            )
        })
        .collect();
    s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}
