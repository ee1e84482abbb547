//! Randomised property suites for the bargaining and matching layers:
//! stability, weak Pareto optimality, deal soundness, allocation
//! stationarity and partition identities.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bargaining::{
    negotiate, optimal_allocation, price_ceiling, raw_partitions, Deal, LinkContext, Negotiation,
};
use crate::config::{BargainConfig, ScenarioConfig};
use crate::matching::{
    run_matching_with, verify_stability, verify_weak_pareto, Admission, Capacity, PairValue,
    PreferenceLists,
};
use crate::scenario::{load_app_preset, uniform, TaskDistribution, TaskSpec, HZ_PER_GHZ, JOULES_PER_WH};
use crate::utility::{satisfaction, server_utility, vehicle_utility_remote, ServerTerms, VehicleTerms};

/// Deliberate defects used to check that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Servers keep their least preferred tasks.
    BlockingPair,
}

impl Fault {
    pub fn parse(s: &str) -> Option<Fault> {
        match s {
            "blocking-pair" | "blocking_pair" => Some(Fault::BlockingPair),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    pub stability_instances: usize,
    pub pareto_instances: usize,
    pub negotiations: usize,
    pub stationarity_draws: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 7,
            stability_instances: 1000,
            pareto_instances: 500,
            negotiations: 10_000,
            stationarity_draws: 1000,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub checked: usize,
    pub failures: usize,
    /// Largest observed error, where the property is a tolerance.
    pub worst: f64,
    pub note: String,
    pub elapsed_ms: f64,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<14} checked={} failures={} worst={:.3e} {:.0}ms {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checked,
            self.failures,
            self.worst,
            self.elapsed_ms,
            self.note
        )
    }
}

/// Random parameters within the default scenario's ranges.
pub struct InstanceSampler {
    rng: ChaCha8Rng,
    cfg: ScenarioConfig,
    bargain: BargainConfig,
    next_id: u64,
}

/// A self-contained negotiation: everything needed to build a
/// [`Negotiation`] without a world.
#[derive(Debug, Clone)]
pub struct NegotiationCase {
    pub task: TaskSpec,
    pub vehicle: VehicleTerms,
    pub server: ServerTerms,
    pub f_available: f64,
    pub energy_left: f64,
    pub wait: f64,
    pub upload: f64,
    pub fixed: f64,
    pub initial_price: f64,
}

impl NegotiationCase {
    pub fn negotiation<'a>(&'a self, bargain: &'a BargainConfig) -> Negotiation<'a> {
        Negotiation {
            task: &self.task,
            vehicle: self.vehicle,
            server: self.server,
            server_id: 0,
            f_available: self.f_available,
            energy_left: self.energy_left,
            link: LinkContext {
                wait: self.wait,
                upload: self.upload,
                fixed: self.fixed,
                result_handover: 0.0,
                sojourn_cur: f64::INFINITY,
                dest_edge: None,
                arrival: None,
            },
            config: bargain,
            initial_price: self.initial_price,
        }
    }
}

impl InstanceSampler {
    pub fn new(seed: u64) -> Self {
        InstanceSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg: ScenarioConfig::default(),
            bargain: BargainConfig::default(),
            next_id: 0,
        }
    }

    pub fn bargain(&self) -> &BargainConfig {
        &self.bargain
    }

    pub fn task(&mut self) -> TaskSpec {
        let dist = TaskDistribution::from_config(&self.cfg);
        self.task_from(&dist)
    }

    pub fn task_from(&mut self, dist: &TaskDistribution) -> TaskSpec {
        let d_in = uniform(&mut self.rng, dist.size_bits);
        let intensity = uniform(&mut self.rng, dist.intensity);
        let t_max = uniform(&mut self.rng, dist.deadline_s);
        let d_out = uniform(&mut self.rng, dist.result_bits);
        self.next_id += 1;
        TaskSpec::new(self.next_id, 0, 0, d_in, d_out, intensity, t_max).expect("positive ranges")
    }

    /// Default workload half the time, otherwise a random application
    /// preset, so that preference lists are neither empty nor complete.
    fn mixed_task(&mut self) -> TaskSpec {
        const PRESETS: [&str; 5] = [
            "collision_warning",
            "emergency_break",
            "traffic_jam",
            "hazardous_location",
            "speed_harmonization",
        ];
        if self.rng.random_bool(0.5) {
            let mut t = self.task();
            t.t_max = self.rng.random_range(1.5..5.0);
            t
        } else {
            let name = PRESETS[self.rng.random_range(0..PRESETS.len())];
            let dist = load_app_preset(name).expect("known preset");
            self.task_from(&dist)
        }
    }

    pub fn vehicle(&mut self) -> VehicleTerms {
        let v = &self.cfg.vehicle;
        let f_ghz = uniform(&mut self.rng, v.cpu_ghz);
        VehicleTerms {
            weight: uniform(&mut self.rng, v.weight),
            energy_budget: v.energy_wh_per_ghz * f_ghz * JOULES_PER_WH,
            payment_budget: v.payment_budget,
        }
    }

    /// Server terms plus its per-core offer.
    pub fn server(&mut self) -> (ServerTerms, f64) {
        let s = &self.cfg.server;
        let f_ghz = uniform(&mut self.rng, s.cpu_ghz);
        let cores = self.rng.random_range(s.cores[0]..=s.cores[1]);
        let terms = ServerTerms {
            weight: uniform(&mut self.rng, s.weight),
            price_ceiling: s.price_ceiling_per_ghz / HZ_PER_GHZ,
            f_max: f_ghz * HZ_PER_GHZ,
            energy_budget: s.energy_wh_per_ghz * f_ghz * JOULES_PER_WH,
            alpha: self.cfg.energy.alpha_server,
            tau: self.cfg.energy.tau,
        };
        (terms, terms.f_max / f64::from(cores))
    }

    pub fn case_with(&mut self, task: &TaskSpec, vehicle: VehicleTerms, upload: f64) -> NegotiationCase {
        let (server, f_available) = self.server();
        let migrated = self.rng.random_bool(0.5);
        let fixed = if migrated {
            2.0 * task.d_in / self.cfg.backhaul.fiber_rate
        } else {
            0.0
        };
        NegotiationCase {
            task: task.clone(),
            vehicle,
            server,
            f_available,
            energy_left: server.energy_budget * self.rng.random::<f64>(),
            wait: 0.0,
            upload,
            fixed,
            initial_price: self.rng.random_range(0.1..3.0) / HZ_PER_GHZ,
        }
    }

    /// One task against a fresh server. Deadlines are drawn long enough
    /// that a sizeable share of pairs can strike a deal.
    pub fn case(&mut self) -> NegotiationCase {
        let mut task = self.task();
        task.t_max = self.rng.random_range(1.5..5.0);
        let vehicle = self.vehicle();
        let upload = task.d_in / self.rng.random_range(2e7..2e8);
        self.case_with(&task, vehicle, upload)
    }

    /// Preference lists built from real negotiations between `n_tasks`
    /// tasks and `n_servers` servers with random free capacity.
    pub fn matching_instance(&mut self, n_tasks: usize, n_servers: usize) -> PreferenceLists {
        let mut tasks = Vec::with_capacity(n_tasks);
        for _ in 0..n_tasks {
            let t = self.mixed_task();
            let v = self.vehicle();
            let up = t.d_in / self.rng.random_range(2e7..2e8);
            tasks.push((t, v, up));
        }
        let mut values = vec![vec![None; n_servers]; n_tasks];
        let mut capacity = Vec::with_capacity(n_servers);
        #[allow(clippy::needless_range_loop)]
        for j in 0..n_servers {
            let (server, f_core) = self.server();
            let cores = self.rng.random_range(0..=3usize);
            capacity.push(Capacity {
                cores,
                budget: f_core * cores as f64,
            });
            for (k, (t, v, up)) in tasks.iter().enumerate() {
                let mut case = self.case_with(t, *v, *up);
                case.server = server;
                case.f_available = f_core;
                case.energy_left = server.energy_budget;
                if let Ok(d) = negotiate(&case.negotiation(&self.bargain)) {
                    values[k][j] = Some(PairValue {
                        task_value: d.vehicle_utility,
                        server_value: d.server_utility,
                        alloc: d.alloc,
                    });
                }
            }
        }
        PreferenceLists::build(values, capacity)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

fn timed(name: &'static str, f: impl FnOnce() -> (usize, usize, f64, String)) -> PropertyResult {
    let t0 = std::time::Instant::now();
    let (checked, failures, worst, note) = f();
    PropertyResult {
        name,
        checked,
        failures,
        worst,
        note,
        elapsed_ms: t0.elapsed().as_secs_f64() * 1e3,
    }
}

fn admission(fault: Option<Fault>) -> Admission {
    match fault {
        Some(Fault::BlockingPair) => Admission::Reversed,
        None => Admission::Preferred,
    }
}

pub fn check_stability(n: usize, seed: u64, fault: Option<Fault>) -> PropertyResult {
    timed("stability", || {
        let mut s = InstanceSampler::new(seed);
        let (mut failures, mut pairs, mut blocking) = (0, 0, 0);
        for _ in 0..n {
            let nt = s.rng().random_range(1..=10);
            let ns = s.rng().random_range(1..=4);
            let prefs = s.matching_instance(nt, ns);
            pairs += prefs.task_prefs.iter().map(Vec::len).sum::<usize>();
            let m = run_matching_with(&prefs, admission(fault), None);
            let rep = verify_stability(&m, &prefs);
            if !rep.is_stable() || !m.respects_capacity(&prefs) {
                failures += 1;
                blocking += rep.blocking_pairs.len();
            }
        }
        (n, failures, blocking as f64, format!("acceptable_pairs={pairs} blocking_pairs={blocking}"))
    })
}

pub fn check_pareto(n: usize, seed: u64, fault: Option<Fault>) -> PropertyResult {
    timed("weak_pareto", || {
        let mut s = InstanceSampler::new(seed ^ 0x5eed);
        let (mut failures, mut explored) = (0, 0);
        for _ in 0..n {
            let nt = s.rng().random_range(1..=6);
            let ns = s.rng().random_range(1..=3);
            let prefs = s.matching_instance(nt, ns);
            let m = run_matching_with(&prefs, admission(fault), None);
            match verify_weak_pareto(&m, &prefs) {
                Ok(r) => {
                    explored += r.explored;
                    if !r.is_weak_pareto() {
                        failures += 1;
                    }
                }
                Err(_) => failures += 1,
            }
        }
        (n, failures, 0.0, format!("assignments_explored={explored}"))
    })
}

/// Relative residual of each side's break-even condition, plus the range
/// and budget checks on the agreed price.
pub fn deal_violation(case: &NegotiationCase, d: &Deal, tol: f64) -> Option<String> {
    let (c, f) = (d.price, d.alloc);
    let b = d.bounds;
    if !(c >= b.c_min * (1.0 - tol) && c <= b.c_max * (1.0 + tol)) {
        return Some(format!("price {c:e} outside [{:e}, {:e}]", b.c_min, b.c_max));
    }
    if d.vehicle_utility < 0.0 || d.server_utility < 0.0 {
        return Some("negative utility".into());
    }
    if c * f > case.vehicle.payment_budget * (1.0 + tol) {
        return Some("payment exceeds budget".into());
    }
    let s = &case.server;
    let uj = server_utility(s, b.c_min, f, case.task.c_req);
    let scale_j = s.weight * b.c_min * f / (s.price_ceiling * s.f_max);
    if uj.abs() > tol * scale_j {
        return Some(format!("server utility at floor {uj:e}"));
    }
    let ceiling = price_ceiling(f, d.total_delay, case.task.t_max, &case.vehicle).ok()?;
    let psi = satisfaction(d.total_delay, case.task.t_max)?;
    let ui = vehicle_utility_remote(case.vehicle.weight, psi, ceiling, f, case.vehicle.payment_budget);
    if ui.abs() > tol * case.vehicle.weight * psi.max(f64::MIN_POSITIVE) {
        return Some(format!("vehicle utility at ceiling {ui:e}"));
    }
    None
}

pub fn check_deals(n: usize, seed: u64) -> PropertyResult {
    timed("deal_soundness", || {
        let mut s = InstanceSampler::new(seed ^ 0xdea1);
        let bargain = s.bargain().clone();
        let (mut deals, mut failures, mut multi) = (0, 0, 0);
        for _ in 0..n {
            let case = s.case();
            if let Ok(d) = negotiate(&case.negotiation(&bargain)) {
                deals += 1;
                if d.rounds > 1 {
                    multi += 1;
                }
                if deal_violation(&case, &d, 1e-9).is_some() {
                    failures += 1;
                }
            }
        }
        (n, failures, 0.0, format!("deals={deals} multi_round={multi}"))
    })
}

/// Vehicle utility as a function of the allocation only.
pub fn allocation_utility(f: f64, c: f64, c_req: f64, t_max: f64, var1: f64, w: f64, budget: f64) -> f64 {
    let arg = 1.0 + t_max - var1 - c_req / f;
    w * arg.ln() / (1.0 + t_max).ln() - (1.0 - w) * c * f / budget
}

/// Golden-section maximiser on `ln f`.
pub fn maximize_allocation(lo: f64, hi: f64, u: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (u(x1.exp()), u(x2.exp()));
    while b - a > 1e-12 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = u(x2.exp());
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = u(x1.exp());
        }
    }
    (0.5 * (a + b)).exp()
}

pub fn check_stationarity(n: usize, seed: u64) -> PropertyResult {
    timed("stationarity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x57a7);
        let (mut checked, mut failures, mut worst) = (0, 0, 0.0f64);
        let budget = 20.0;
        while checked < n {
            let c = rng.random_range(0.1..10.0) / HZ_PER_GHZ;
            let c_req = rng.random_range(1e8..1.5e10);
            let t_max = rng.random_range(0.1..5.0);
            let var1 = rng.random_range(0.0..0.5) * t_max;
            let w = rng.random_range(0.1..0.9);
            let Ok(f) = optimal_allocation(c, c_req, t_max, var1, w, budget) else {
                continue;
            };
            checked += 1;
            let u = |x: f64| allocation_utility(x, c, c_req, t_max, var1, w, budget);
            let h = 1e-6 * f;
            let du = (u(f + h) - u(f - h)) / (2.0 * h);
            let scale = (w * (1.0 + t_max - var1 - c_req / f).ln().abs() / (1.0 + t_max).ln()
                + (1.0 - w) * c * f / budget)
                .max(f64::MIN_POSITIVE);
            let grad_rel = (du * f).abs() / scale;
            let lo = c_req / (1.0 + t_max - var1) * (1.0 + 1e-9);
            let f_num = maximize_allocation(lo, 1e3 * f.max(lo), u);
            let arg_rel = (f_num / f - 1.0).abs();
            worst = worst.max(arg_rel);
            if grad_rel > 1e-6 || arg_rel > 1e-4 {
                failures += 1;
            }
        }
        (checked, failures, worst, "argmax relative error in worst".into())
    })
}

pub fn check_partitions() -> PropertyResult {
    timed("partitions", || {
        let horizons = [1u32, 2, 3, 5, 10, 20, 50, 100];
        let (mut checked, mut failures, mut worst) = (0, 0, 0.0f64);
        for i in 0..50 {
            for j in 0..50 {
                let ei = (i as f64 + 0.5) / 50.0;
                let ej = (j as f64 + 0.5) / 50.0;
                for &tb in &horizons {
                    let p = raw_partitions(ei, ej, tb);
                    let err = (p.di_i + p.dj_i - 1.0).abs();
                    worst = worst.max(err);
                    checked += 1;
                    if err > 1e-12 {
                        failures += 1;
                    }
                }
            }
        }
        let limit = 0.9 - 0.1 / 0.19;
        for tb in [200u32, 400, 1000] {
            checked += 1;
            if (raw_partitions(0.9, 0.9, tb).di_i - limit).abs() > 1e-9 {
                failures += 1;
            }
        }
        (checked, failures, worst, "sum identity error in worst".into())
    })
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub results: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(PropertyResult::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

pub fn run_verify(cfg: &VerifyConfig) -> VerifyReport {
    VerifyReport {
        results: vec![
            check_stability(cfg.stability_instances, cfg.seed, cfg.fault),
            check_pareto(cfg.pareto_instances, cfg.seed, cfg.fault),
            check_deals(cfg.negotiations, cfg.seed),
            check_stationarity(cfg.stationarity_draws, cfg.seed),
            check_partitions(),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let cfg = VerifyConfig {
            stability_instances: 50,
            pareto_instances: 20,
            negotiations: 300,
            stationarity_draws: 50,
            ..Default::default()
        };
        let rep = run_verify(&cfg);
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn fault_is_caught() {
        let r = check_stability(100, 3, Some(Fault::BlockingPair));
        assert!(!r.passed(), "{r}");
    }

    #[test]
    fn golden_section_finds_peak() {
        let x = maximize_allocation(0.1, 100.0, |x| -(x.ln() - 2f64.ln()).powi(2));
        assert!((x / 2.0 - 1.0).abs() < 1e-8);
    }
}
