//! Command-line front end: single runs, parameter sweeps and the property
//! verifier.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;

use crate::config::{ScenarioConfig, Scheme};
use crate::engine::Simulation;
use crate::error::{Error, Result};
use crate::output::{
    aggregate, run_plot_script, sweep_plot_script, write_run_csv, write_summary_json,
    write_sweep_csv, write_sweep_dat, write_text, LabelledRun,
};
use crate::verify::{run_verify, Fault, VerifyConfig};

/// Exit code for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for failed verification or a runtime error.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "vecsim", version, about = "Vehicular edge computing offloading simulator")]
pub struct Cli {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Scheme name, comma-separated list, or `all`.
    #[arg(long, value_name = "NAME")]
    pub scheme: Option<String>,

    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Seed list (`1,2,3`) or inclusive range (`1..10`).
    #[arg(long, value_name = "LIST")]
    pub seeds: Option<String>,

    /// Number of slots to simulate.
    #[arg(long, value_name = "N")]
    pub slots: Option<u64>,

    #[arg(long, value_name = "N")]
    pub vehicles: Option<usize>,

    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Sweep one configuration key, e.g. `vehicle_count=50,100,150`.
    #[arg(long, value_name = "KEY=V1,V2,...")]
    pub sweep: Option<String>,

    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Run the property suites instead of a simulation.
    #[arg(long)]
    pub verify: bool,

    /// Write per-slot negotiation and matching details to trace.txt.
    #[arg(long)]
    pub trace: bool,

    /// Record wall-clock time per slot in run.csv.
    #[arg(long)]
    pub timing: bool,

    /// Worker threads for multi-run batches.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    pub dump_config: bool,

    #[arg(long, hide = true, value_name = "FAULT")]
    pub inject_fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<String>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
}

impl SweepSpec {
    pub fn parse(spec: &str, base: &ScenarioConfig, seeds: Vec<u64>, schemes: Vec<Scheme>) -> Result<Self> {
        let (key, vals) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep `{spec}` is not KEY=V1,V2,...")))?;
        let key = base.resolve_key(key.trim())?;
        let values: Vec<String> = vals
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() || seeds.is_empty() || schemes.is_empty() {
            return Err(Error::Config("sweep needs values, seeds and schemes".into()));
        }
        Ok(SweepSpec {
            key,
            values,
            seeds,
            schemes,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len() * self.seeds.len() * self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect()
}

pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Scheme::ALL.to_vec());
    }
    s.split(',').map(|x| Scheme::parse(x.trim())).collect()
}

/// One run to perform.
#[derive(Debug, Clone)]
pub struct Job {
    pub config: ScenarioConfig,
    pub param_key: Option<String>,
    pub param_value: Option<f64>,
}

/// Effective base configuration: file, then `--set`, then shorthand flags.
pub fn base_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{kv}` is not KEY=VALUE")))?;
        cfg.set_key(k.trim(), v.trim())?;
    }
    if let Some(n) = cli.slots {
        cfg.set_key("scenario.horizon", &n.to_string())?;
    }
    if let Some(n) = cli.vehicles {
        cfg.set_key("scenario.vehicle_count", &n.to_string())?;
    }
    if let Some(s) = cli.seed {
        cfg.scenario.rng_seed = s;
    }
    Ok(cfg)
}

pub fn plan_jobs(cli: &Cli, base: &ScenarioConfig) -> Result<Vec<Job>> {
    let seeds = match &cli.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![base.scenario.rng_seed],
    };
    let schemes = match &cli.scheme {
        Some(s) => parse_schemes(s)?,
        None => vec![base.scenario.scheme],
    };
    let mut jobs = Vec::new();
    match &cli.sweep {
        Some(spec) => {
            let sweep = SweepSpec::parse(spec, base, seeds, schemes)?;
            for v in &sweep.values {
                let mut at = base.clone();
                at.set_key(&sweep.key, v)?;
                for &scheme in &sweep.schemes {
                    for &seed in &sweep.seeds {
                        let mut c = at.clone();
                        c.scenario.scheme = scheme;
                        c.scenario.rng_seed = seed;
                        jobs.push(Job {
                            config: c,
                            param_key: Some(sweep.key.clone()),
                            param_value: v.parse().ok(),
                        });
                    }
                }
            }
        }
        None => {
            for &scheme in &schemes {
                for &seed in &seeds {
                    let mut c = base.clone();
                    c.scenario.scheme = scheme;
                    c.scenario.rng_seed = seed;
                    jobs.push(Job {
                        config: c,
                        param_key: None,
                        param_value: None,
                    });
                }
            }
        }
    }
    Ok(jobs)
}

/// Run every job, in parallel, returning results in job order.
pub fn execute(jobs: &[Job], trace: bool) -> Result<Vec<LabelledRun>> {
    jobs.par_iter()
        .map(|j| {
            let mut sim = Simulation::new(&j.config)?;
            if trace {
                sim = sim.with_trace();
            }
            Ok(LabelledRun {
                param_key: j.param_key.clone(),
                param_value: j.param_value,
                output: sim.run(),
            })
        })
        .collect()
}

pub fn write_outputs(dir: &Path, runs: &[LabelledRun], sweep: Option<&str>, timing: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    write_run_csv(&dir.join("run.csv"), runs, timing)?;
    write_summary_json(&dir.join("summary.json"), runs)?;
    write_text(&dir.join("plot_sw.gp"), &run_plot_script("run.csv", runs))?;
    if let Some(key) = sweep {
        write_sweep_csv(&dir.join("sweep.csv"), runs)?;
        let schemes = write_sweep_dat(&dir.join("sweep.dat"), runs)?;
        write_text(&dir.join("plot_sweep.gp"), &sweep_plot_script("sweep.dat", key, &schemes))?;
    }
    let traces: Vec<&LabelledRun> = runs.iter().filter(|r| r.output.trace.is_some()).collect();
    if !traces.is_empty() {
        let mut t = String::new();
        for r in traces {
            let m = &r.output.metrics;
            let _ = writeln!(t, "== scheme={} seed={}", m.scheme.name(), m.seed);
            t.push_str(r.output.trace.as_deref().unwrap_or_default());
        }
        write_text(&dir.join("trace.txt"), &t)?;
    }
    Ok(())
}

fn report(runs: &[LabelledRun], sweep: bool) -> String {
    let na = |v: Option<f64>, p: usize| v.map_or("NA".to_string(), |x| format!("{x:.p$}"));
    let mut s = String::new();
    if !sweep && runs.len() <= 20 {
        for r in runs {
            let m = &r.output.metrics;
            let _ = writeln!(
                s,
                "{:<14} seed={:<4} sw_cum={:.4} acr={} acd={} apr={} local/edge/cloud={}/{}/{}",
                m.scheme.name(),
                m.seed,
                m.sw_cumulative,
                na(m.acr, 3),
                m.acd.map_or("NA".to_string(), |x| format!("{x:.3}s")),
                na(m.apr, 1),
                m.n_local,
                m.n_edge,
                m.n_cloud
            );
        }
        return s;
    }
    for a in aggregate(runs) {
        let _ = writeln!(
            s,
            "{:<14} value={:<8} sw_cum={:.4}±{:.4} acr={:.3} acd={:.3}s (n={})",
            a.scheme.name(),
            na(a.param_value, 2),
            a.sw_cumulative.mean,
            a.sw_cumulative.std,
            a.acr.mean,
            a.acd.mean,
            a.sw_cumulative.n
        );
    }
    s
}

fn verify(cli: &Cli) -> i32 {
    let fault = match cli.inject_fault.as_deref().map(|f| (f, Fault::parse(f))) {
        Some((f, None)) => {
            eprintln!("error: unknown fault `{f}`");
            return EXIT_CONFIG;
        }
        Some((_, fault)) => fault,
        None => None,
    };
    let cfg = VerifyConfig {
        seed: cli.seed.unwrap_or(VerifyConfig::default().seed),
        fault,
        ..VerifyConfig::default()
    };
    let rep = run_verify(&cfg);
    if rep.passed() {
        out(&format!("{rep}verify: all properties hold\n"));
        0
    } else {
        out(&format!("{rep}verify: FAILED\n"));
        EXIT_FAILURE
    }
}

/// Write to stdout, ignoring a closed pipe.
fn out(s: &str) {
    use std::io::Write as _;
    let mut o = std::io::stdout().lock();
    let _ = o.write_all(s.as_bytes()).and_then(|()| o.flush());
}

/// Parse arguments and run; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    if cli.verify {
        return verify(&cli);
    }
    let prepared = base_config(&cli).and_then(|b| plan_jobs(&cli, &b).map(|j| (b, j)));
    let (base, jobs) = match prepared {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if cli.dump_config {
        out(&base.to_toml_string());
        return 0;
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let result = pool.install(|| execute(&jobs, cli.trace)).and_then(|runs| {
        let key = jobs.first().and_then(|j| j.param_key.clone());
        write_outputs(&cli.out, &runs, key.as_deref(), cli.timing)?;
        Ok(runs)
    });
    match result {
        Ok(runs) => {
            let mut msg = report(&runs, cli.sweep.is_some());
            let _ = writeln!(msg, "wrote {} run(s) to {}", runs.len(), cli.out.display());
            out(&msg);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("4,9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn scheme_lists() {
        assert_eq!(parse_schemes("all").unwrap().len(), 7);
        assert_eq!(parse_schemes("bm,elo").unwrap(), vec![Scheme::BargainMatch, Scheme::Elo]);
        assert!(parse_schemes("foo").is_err());
    }

    #[test]
    fn sweep_cardinality() {
        let cli = Cli::try_parse_from([
            "vecsim",
            "--sweep",
            "vehicle_count=50,100,150",
            "--seeds",
            "1..10",
            "--scheme",
            "all",
        ])
        .unwrap();
        let base = base_config(&cli).unwrap();
        let jobs = plan_jobs(&cli, &base).unwrap();
        assert_eq!(jobs.len(), 210);
        assert_eq!(jobs[0].param_key.as_deref(), Some("scenario.vehicle_count"));
        assert_eq!(jobs[0].config.scenario.vehicle_count, 50);
        assert_eq!(jobs[209].config.scenario.vehicle_count, 150);
    }

    #[test]
    fn unknown_sweep_key() {
        let cli = Cli::try_parse_from(["vecsim", "--sweep", "warp_factor=1,2"]).unwrap();
        let base = base_config(&cli).unwrap();
        assert!(plan_jobs(&cli, &base).is_err());
    }
}
