//! Slot loop: arrivals, channel sampling, per-scheme decisions, commitment,
//! completions and mobility.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use crate::baselines::SchemeState;
use crate::bargaining::{negotiate, ArrivalContext, Deal, LinkContext, Negotiation, NoDeal};
use crate::channel::{channel_gain, noma_rates, Uploader};
use crate::config::{AprMode, ScenarioConfig, Scheme};
use crate::costmodel::{
    cloud_backhaul_delay, compute_delay, exec_energy, result_handover_delay, task_handover_delay,
    upload_delay,
};
use crate::error::Result;
use crate::matching::{run_matching, run_matching_traced, Capacity, PairValue, PreferenceLists};
use crate::metrics::{CompletionRecord, MetricsAccumulator, RunMetrics, SlotRecord};
use crate::mobility::{advance_epoch, direction_indicator, sojourn_time, Motion};
use crate::scenario::{
    build_scenario, ServerId, ServerKind, TaskDistribution, TaskId, TaskSpec, VehicleId,
    WorldState, HZ_PER_GHZ,
};
use crate::utility::{
    check_constraints, satisfaction, vehicle_utility_local, Decision, Destination, ServerTerms,
    VehicleTerms,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOption {
    pub total_delay: f64,
    pub compute_delay: f64,
    pub energy: f64,
    pub utility: f64,
}

/// A pending task as seen by the decision rule in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub task: TaskSpec,
    pub wait: f64,
    pub j_cur: Option<ServerId>,
    /// Uplink rate to `j_cur`; `None` when the task does not upload this slot.
    pub rate: Option<f64>,
    pub motion: Motion,
    pub sojourn_cur: f64,
    /// `None` when local execution is infeasible.
    pub local: Option<LocalOption>,
}

impl Candidate {
    pub fn can_upload(&self) -> bool {
        self.j_cur.is_some() && self.rate.is_some()
    }
}

/// Everything a decision rule may read in one slot.
pub struct SlotContext<'w> {
    pub world: &'w WorldState,
    pub slot: u64,
    pub candidates: Vec<Candidate>,
    edge_x: Vec<f64>,
    no_deal: RefCell<BTreeMap<&'static str, u64>>,
}

impl<'w> SlotContext<'w> {
    pub fn new(world: &'w WorldState, slot: u64, candidates: Vec<Candidate>) -> Self {
        SlotContext {
            world,
            slot,
            candidates,
            edge_x: world.edges().iter().map(|s| s.x).collect(),
            no_deal: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn n_servers(&self) -> usize {
        self.world.servers.len()
    }

    pub fn note(&self, r: NoDeal) {
        *self.no_deal.borrow_mut().entry(r.key()).or_default() += 1;
    }

    pub fn no_deal_counts(&self) -> BTreeMap<&'static str, u64> {
        self.no_deal.borrow().clone()
    }

    pub fn link(&self, k: usize, j: ServerId) -> Option<LinkContext<'_>> {
        let cand = &self.candidates[k];
        let (j_cur, rate) = (cand.j_cur?, cand.rate?);
        let cfg = &self.world.config;
        let t = &cand.task;
        let server = self.world.servers.get(j)?;
        let upload = upload_delay(t.d_in, rate);
        Some(match server.kind {
            ServerKind::Cloud => LinkContext {
                wait: cand.wait,
                upload,
                fixed: cloud_backhaul_delay(t.d_in, t.d_out, &cfg.backhaul),
                result_handover: 0.0,
                sojourn_cur: cand.sojourn_cur,
                dest_edge: None,
                arrival: None,
            },
            ServerKind::Edge => LinkContext {
                wait: cand.wait,
                upload,
                fixed: if j == j_cur {
                    0.0
                } else {
                    task_handover_delay(t.d_in, &cfg.backhaul)
                },
                result_handover: result_handover_delay(t.d_out, &cfg.backhaul),
                sojourn_cur: cand.sojourn_cur,
                dest_edge: Some(j),
                arrival: Some(ArrivalContext {
                    j_cur,
                    edge_x: &self.edge_x,
                    radius: cfg.scenario.server_radius,
                    motion: cand.motion,
                    mode: cfg.mobility.arrival_mode,
                    mobility: &cfg.mobility,
                }),
            },
        })
    }

    pub fn vehicle_terms(&self, v: VehicleId) -> VehicleTerms {
        let v = &self.world.vehicles[v];
        VehicleTerms {
            weight: v.weight,
            energy_budget: v.energy_budget,
            payment_budget: v.payment_budget,
        }
    }

    pub fn server_terms(&self, j: ServerId) -> ServerTerms {
        let s = &self.world.servers[j];
        let e = &self.world.config.energy;
        ServerTerms {
            weight: s.weight,
            price_ceiling: s.price_ceiling,
            f_max: s.f_max,
            energy_budget: s.energy_budget,
            alpha: e.alpha_server,
            tau: e.tau,
        }
    }

    pub fn negotiation(&self, k: usize, j: ServerId) -> Option<Negotiation<'_>> {
        let link = self.link(k, j)?;
        let cand = &self.candidates[k];
        let server = &self.world.servers[j];
        let cfg = &self.world.config;
        Some(Negotiation {
            task: &cand.task,
            vehicle: self.vehicle_terms(cand.task.owner),
            server: self.server_terms(j),
            server_id: j,
            f_available: server.offer_capacity(self.slot),
            energy_left: server.energy_left(),
            link,
            config: &cfg.bargain,
            initial_price: cfg.pricing.initial_price_per_ghz / HZ_PER_GHZ,
        })
    }

    /// Bargain task `k` with server `j`; failures are tallied by reason.
    pub fn negotiate(&self, k: usize, j: ServerId) -> std::result::Result<Deal, NoDeal> {
        let r = match self.negotiation(k, j) {
            Some(n) => negotiate(&n),
            None => Err(NoDeal::NoResources),
        };
        if let Err(e) = r {
            self.note(e);
        }
        r
    }

    pub fn remote_decision(&self, k: usize, deal: &Deal) -> Decision {
        Decision {
            task: self.candidates[k].task.clone(),
            destination: Destination::Server(deal.server),
            alloc: deal.alloc,
            price: deal.price,
            total_delay: deal.total_delay,
            upload_delay: deal.upload_delay,
            compute_delay: deal.compute_delay,
            sojourn_cur: deal.sojourn_cur,
            result_handover: deal.result_handover,
            sojourn_arr: deal.sojourn_arr,
            vehicle_energy: 0.0,
            server_energy: deal.server_energy,
            vehicle_utility: deal.vehicle_utility,
            server_utility: deal.server_utility,
        }
    }

    pub fn local_decision(&self, k: usize) -> Option<Decision> {
        let cand = &self.candidates[k];
        let l = cand.local?;
        let v = &self.world.vehicles[cand.task.owner];
        Some(Decision {
            task: cand.task.clone(),
            destination: Destination::Local,
            alloc: v.f_max,
            price: 0.0,
            total_delay: l.total_delay,
            upload_delay: 0.0,
            compute_delay: l.compute_delay,
            sojourn_cur: cand.sojourn_cur,
            result_handover: 0.0,
            sojourn_arr: 0.0,
            vehicle_energy: l.energy,
            server_energy: 0.0,
            vehicle_utility: l.utility,
            server_utility: 0.0,
        })
    }

    /// Idle cores and free capacity of every server at the start of the slot.
    pub fn capacity(&self) -> Vec<Capacity> {
        self.world
            .servers
            .iter()
            .map(|s| Capacity {
                cores: s.idle_cores(self.slot),
                budget: s.f_available(self.slot),
            })
            .collect()
    }

    pub fn ledger(&self) -> Ledger {
        Ledger {
            cores: self.world.servers.iter().map(|s| s.idle_cores(self.slot)).collect(),
            budget: self.world.servers.iter().map(|s| s.f_available(self.slot)).collect(),
            energy: self.world.servers.iter().map(|s| s.energy_left()).collect(),
            local: BTreeSet::new(),
        }
    }
}

/// Resources claimed so far within a slot.
#[derive(Debug, Clone)]
pub struct Ledger {
    cores: Vec<usize>,
    budget: Vec<f64>,
    energy: Vec<f64>,
    local: BTreeSet<VehicleId>,
}

impl Ledger {
    pub fn take_remote(&mut self, j: ServerId, alloc: f64, energy: f64) -> bool {
        let ok = self.cores[j] > 0 && alloc <= self.budget[j] && energy <= self.energy[j];
        if ok {
            self.cores[j] -= 1;
            self.budget[j] -= alloc;
            self.energy[j] -= energy;
        }
        ok
    }

    pub fn take_local(&mut self, v: VehicleId) -> bool {
        self.local.insert(v)
    }
}

/// Output of a decision rule for one slot.
#[derive(Debug, Clone, Default)]
pub struct SlotPlan {
    pub decisions: Vec<Decision>,
    pub failed: Vec<TaskId>,
    pub clamp_events: u64,
}

impl SlotPlan {
    pub fn push_remote(&mut self, ctx: &SlotContext<'_>, k: usize, deal: &Deal) {
        self.clamp_events += u64::from(deal.clamp_events);
        self.decisions.push(ctx.remote_decision(k, deal));
    }

    /// Commit local execution if feasible and the core is still unclaimed.
    pub fn try_local(&mut self, ctx: &SlotContext<'_>, ledger: &mut Ledger, k: usize) -> bool {
        let Some(d) = ctx.local_decision(k) else {
            return false;
        };
        if !ledger.take_local(d.owner()) {
            return false;
        }
        self.decisions.push(d);
        true
    }

    pub fn fail(&mut self, ctx: &SlotContext<'_>, k: usize) {
        self.failed.push(ctx.candidates[k].task.id);
    }
}

pub type DealTable = Vec<Vec<Option<Deal>>>;

/// Negotiate every uploading task with every server.
pub fn deal_table(ctx: &SlotContext<'_>) -> DealTable {
    (0..ctx.candidates.len())
        .map(|k| {
            if !ctx.candidates[k].can_upload() {
                return vec![None; ctx.n_servers()];
            }
            (0..ctx.n_servers()).map(|j| ctx.negotiate(k, j).ok()).collect()
        })
        .collect()
}

/// Bargaining plus many-to-one matching.
pub fn bargain_match(ctx: &SlotContext<'_>, mut trace: Option<&mut String>) -> SlotPlan {
    let deals = deal_table(ctx);
    let mut plan = SlotPlan::default();
    let mut ledger = ctx.ledger();
    if let Some(t) = trace.as_deref_mut() {
        for (k, row) in deals.iter().enumerate() {
            for d in row.iter().flatten() {
                let _ = writeln!(
                    t,
                    "  deal task={} server={} f={:.4}GHz c={:.6}$/GHz rounds={} Ui={:.4} Uj={:.4}",
                    ctx.candidates[k].task.id,
                    d.server,
                    d.alloc / HZ_PER_GHZ,
                    d.price * HZ_PER_GHZ,
                    d.rounds,
                    d.vehicle_utility,
                    d.server_utility
                );
            }
        }
    }

    let mut requesters = Vec::new();
    for (k, cand) in ctx.candidates.iter().enumerate() {
        let best_remote = deals[k]
            .iter()
            .flatten()
            .map(|d| d.vehicle_utility)
            .fold(f64::NEG_INFINITY, f64::max);
        if let Some(l) = cand.local {
            if l.utility >= 0.0 && l.utility > best_remote && plan.try_local(ctx, &mut ledger, k) {
                continue;
            }
        }
        if best_remote > f64::NEG_INFINITY {
            requesters.push(k);
        } else {
            plan.fail(ctx, k);
        }
    }

    let values = requesters
        .iter()
        .map(|&k| {
            deals[k]
                .iter()
                .map(|d| {
                    d.as_ref().map(|d| PairValue {
                        task_value: d.vehicle_utility,
                        server_value: d.server_utility,
                        alloc: d.alloc,
                    })
                })
                .collect()
        })
        .collect();
    let prefs = PreferenceLists::build(values, ctx.capacity());
    let m = match trace {
        Some(t) => run_matching_traced(&prefs, t),
        None => run_matching(&prefs),
    };

    for (i, &k) in requesters.iter().enumerate() {
        let placed = m.task_server[i].is_some_and(|j| {
            let d = deals[k][j].as_ref().expect("matched pairs are acceptable");
            // energy is not part of the matching quota
            let ok = ledger.take_remote(j, d.alloc, d.server_energy);
            if ok {
                plan.push_remote(ctx, k, d);
            } else {
                ctx.note(NoDeal::EnergyBudget);
            }
            ok
        });
        if placed {
            continue;
        }
        let local_ok = ctx.candidates[k].local.is_some_and(|l| l.utility >= 0.0);
        if !(local_ok && plan.try_local(ctx, &mut ledger, k)) {
            plan.fail(ctx, k);
        }
    }
    plan
}

/// Number of slots a computation of length `t` keeps a core busy.
fn busy_slots(t: f64, dt: f64) -> u64 {
    ((t / dt - 1e-9).ceil() as u64).max(1)
}

#[derive(Debug, Clone, Default)]
struct Tally {
    n_local: u64,
    n_edge: u64,
    n_cloud: u64,
    price_sum: f64,
    price_n: u64,
    clamp_events: u64,
    no_deal: BTreeMap<String, u64>,
    veh_util: f64,
    srv_util: f64,
}

#[derive(Debug, Clone)]
struct InFlight {
    record: CompletionRecord,
}

pub struct Simulation {
    world: WorldState,
    scheme: SchemeState,
    dist: TaskDistribution,
    pending: Vec<TaskSpec>,
    inflight: Vec<InFlight>,
    metrics: MetricsAccumulator,
    records: Vec<SlotRecord>,
    tally: Tally,
    trace: Option<String>,
    started: Instant,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub records: Vec<SlotRecord>,
    pub completions: Vec<CompletionRecord>,
    pub trace: Option<String>,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let world = build_scenario(config)?;
        let scheme = SchemeState::new(config.scenario.scheme, &config.baselines, world.vehicles.len());
        Ok(Simulation {
            dist: TaskDistribution::from_config(config),
            world,
            scheme,
            pending: Vec::new(),
            inflight: Vec::new(),
            metrics: MetricsAccumulator::default(),
            records: Vec::new(),
            tally: Tally::default(),
            trace: None,
            started: Instant::now(),
        })
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(String::new());
        self
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn records(&self) -> &[SlotRecord] {
        &self.records
    }

    pub fn metrics(&self) -> &MetricsAccumulator {
        &self.metrics
    }

    pub fn pending(&self) -> &[TaskSpec] {
        &self.pending
    }

    pub fn scheme_state(&self) -> &SchemeState {
        &self.scheme
    }

    fn candidates(&mut self, slot: u64) -> Vec<Candidate> {
        let world = &mut self.world;
        let cfg = &world.config;
        let dt = cfg.scenario.slot_duration;
        let n_edges = world.edge_count();
        let spacing = cfg.scenario.road_length / n_edges as f64;

        let attached: Vec<Option<ServerId>> =
            world.vehicles.iter().map(|v| world.attached_server(v)).collect();
        // one draw per vehicle whether or not it transmits
        let gains: Vec<f64> = world
            .vehicles
            .iter()
            .zip(&attached)
            .map(|(v, a)| {
                let j = a.unwrap_or_else(|| ((v.x / spacing) as usize).min(n_edges - 1));
                let s = &world.servers[j];
                let d = (v.x - s.x).hypot(v.y - s.y);
                channel_gain(d, &cfg.channel, &mut world.rng.channel)
            })
            .collect();

        let intent: Vec<bool> = self
            .pending
            .iter()
            .map(|t| self.scheme.wants_remote(t, &mut world.rng.scheme))
            .collect();

        let mut rate: Vec<Option<f64>> = vec![None; self.pending.len()];
        let mut deferred = vec![false; self.pending.len()];
        let mut by_server: BTreeMap<ServerId, Vec<usize>> = BTreeMap::new();
        for (i, t) in self.pending.iter().enumerate() {
            if let (true, Some(j)) = (intent[i], attached[t.owner]) {
                by_server.entry(j).or_default().push(i);
            }
        }
        for (j, mut idx) in by_server {
            idx.sort_by(|&a, &b| {
                let (ta, tb) = (&self.pending[a], &self.pending[b]);
                gains[tb.owner].total_cmp(&gains[ta.owner]).then(ta.id.cmp(&tb.id))
            });
            let cap = world.servers[j].sic_capacity.min(idx.len());
            for &i in &idx[cap..] {
                deferred[i] = true;
            }
            let ups: Vec<Uploader> = idx[..cap]
                .iter()
                .map(|&i| {
                    let owner = self.pending[i].owner;
                    Uploader {
                        key: self.pending[i].id,
                        gain: gains[owner],
                        power: world.vehicles[owner].tx_power,
                    }
                })
                .collect();
            let rates = noma_rates(&ups, cfg.channel.bandwidth_hz, cfg.channel.noise_watts());
            for (&i, r) in idx[..cap].iter().zip(rates) {
                rate[i] = Some(r);
            }
        }

        let mut out = Vec::new();
        for (i, t) in self.pending.iter().enumerate() {
            if deferred[i] {
                continue;
            }
            let v = &world.vehicles[t.owner];
            let wait = (slot - t.gen_slot) as f64 * dt;
            let (zeta, sojourn) = match attached[t.owner] {
                Some(j) => {
                    let sx = world.servers[j].x;
                    let z = direction_indicator(v.x, v.prev_x, sx, v.heading, &cfg.mobility);
                    (z, sojourn_time(cfg.scenario.server_radius, z, v.x, sx, v.speed))
                }
                None => (0.0, 0.0),
            };
            let t_loc = compute_delay(t.c_req, v.f_max);
            let total = wait + t_loc;
            let energy = exec_energy(v.f_max, t.c_req, cfg.energy.alpha_vehicle, cfg.energy.tau);
            let local = (v.core_idle(slot) && energy <= v.energy_left())
                .then(|| satisfaction(total, t.t_max))
                .flatten()
                .map(|psi| LocalOption {
                    total_delay: total,
                    compute_delay: t_loc,
                    energy,
                    utility: vehicle_utility_local(v.weight, psi, energy, v.energy_budget),
                });
            out.push(Candidate {
                task: t.clone(),
                wait,
                j_cur: attached[t.owner],
                rate: rate[i],
                motion: Motion {
                    x: v.x,
                    speed: v.speed,
                    heading: v.heading,
                    zeta,
                },
                sojourn_cur: sojourn,
                local,
            });
        }
        out
    }

    /// Advance one slot.
    pub fn step(&mut self) -> &SlotRecord {
        let t0 = Instant::now();
        let slot = self.world.slot;
        let dt = self.world.config.scenario.slot_duration;

        let p = self.world.config.scenario.task_gen_probability;
        let fresh = crate::scenario::sample_tasks(
            &self.world.vehicles,
            slot,
            p,
            &self.dist,
            &mut self.world.next_task_id,
            &mut self.world.rng.tasks,
        );
        let generated = fresh.len() as u64;
        self.metrics.n_gen += generated;
        self.pending.extend(fresh);

        let before = self.pending.len();
        self.pending
            .retain(|t| ((slot - t.gen_slot) as f64 * dt) < t.t_max);
        let mut failed = (before - self.pending.len()) as u64;

        let candidates = self.candidates(slot);
        let mut slot_trace = self.trace.as_ref().map(|_| String::new());
        let ctx = SlotContext::new(&self.world, slot, candidates);
        let plan = self.scheme.decide(&ctx, slot_trace.as_mut());
        let no_deal = ctx.no_deal_counts();
        drop(ctx);

        let report = check_constraints(&self.world, &plan.decisions, slot);
        assert!(report.is_ok(), "slot {slot}: infeasible decisions: {report}");

        let done: BTreeSet<TaskId> = plan
            .decisions
            .iter()
            .map(|d| d.task.id)
            .chain(plan.failed.iter().copied())
            .collect();
        self.pending.retain(|t| !done.contains(&t.id));
        failed += plan.failed.len() as u64;
        self.metrics.n_failed += failed;
        for (k, n) in no_deal {
            *self.tally.no_deal.entry(k.to_string()).or_default() += n;
        }
        self.tally.clamp_events += plan.clamp_events;

        let (mut sw, mut vu, mut su) = (0.0, 0.0, 0.0);
        for d in &plan.decisions {
            self.commit(d, slot, dt);
            sw += d.welfare();
            vu += d.vehicle_utility;
            su += d.server_utility;
        }
        self.tally.veh_util += vu;
        self.tally.srv_util += su;
        self.metrics.sw_cum += sw;

        let mut completed = 0;
        let mut keep = Vec::with_capacity(self.inflight.len());
        for f in std::mem::take(&mut self.inflight) {
            if f.record.completion_slot <= slot {
                self.metrics.complete(f.record);
                completed += 1;
            } else {
                keep.push(f);
            }
        }
        self.inflight = keep;

        let attached: Vec<Option<ServerId>> = self
            .world
            .vehicles
            .iter()
            .map(|v| self.world.attached_server(v))
            .collect();
        self.scheme.observe(&self.world, &attached, slot);

        if let (Some(t), Some(s)) = (self.trace.as_mut(), slot_trace) {
            let _ = writeln!(
                t,
                "slot {slot}: generated={generated} committed={} failed={failed} sw={sw:.6}",
                plan.decisions.len()
            );
            t.push_str(&s);
        }

        let s = &self.world.config.scenario;
        if (slot + 1).is_multiple_of(s.epoch_length) {
            advance_epoch(&mut self.world);
        }
        self.world.slot += 1;

        let mode = self.world.config.metrics.apr_mode;
        self.records.push(SlotRecord {
            slot,
            generated,
            committed: plan.decisions.len() as u64,
            failed,
            completed,
            sw,
            sw_cum: self.metrics.sw_cum,
            veh_util: vu,
            srv_util: su,
            apr: self.metrics.apr(mode),
            acd: self.metrics.acd(),
            acr: self.metrics.acr(),
            runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
        self.records.last().expect("just pushed")
    }

    fn commit(&mut self, d: &Decision, slot: u64, dt: f64) {
        let release = slot + busy_slots(d.compute_delay, dt);
        match d.destination {
            Destination::Local => {
                let v = &mut self.world.vehicles[d.owner()];
                v.core_busy_until = release;
                v.energy_used += d.vehicle_energy;
                self.tally.n_local += 1;
            }
            Destination::Server(j) => {
                let s = &mut self.world.servers[j];
                s.occupy_core(slot, release, d.alloc)
                    .expect("core availability was checked");
                s.energy_used += d.server_energy;
                match s.kind {
                    ServerKind::Edge => self.tally.n_edge += 1,
                    ServerKind::Cloud => self.tally.n_cloud += 1,
                }
                self.tally.price_sum += d.price * HZ_PER_GHZ;
                self.tally.price_n += 1;
            }
        }
        let t = &d.task;
        let completion_slot = (t.gen_slot + (d.total_delay / dt).floor() as u64).max(slot);
        self.inflight.push(InFlight {
            record: CompletionRecord {
                task: t.id,
                gen_slot: t.gen_slot,
                c_req: t.c_req,
                d_in: t.d_in,
                t_max: t.t_max,
                delay: d.total_delay,
                completion_slot,
            },
        });
    }

    /// Run the configured horizon and collect the results.
    pub fn run(mut self) -> RunOutput {
        let horizon = self.world.config.scenario.horizon;
        while self.world.slot < horizon {
            self.step();
        }
        self.finish()
    }

    /// Count in-flight tasks as completed and summarise.
    pub fn finish(mut self) -> RunOutput {
        let mut extra = 0;
        for f in std::mem::take(&mut self.inflight) {
            self.metrics.complete(f.record);
            extra += 1;
        }
        let mode = self.world.config.metrics.apr_mode;
        if let Some(last) = self.records.last_mut() {
            last.completed += extra;
            last.apr = self.metrics.apr(mode);
            last.acd = self.metrics.acd();
            last.acr = self.metrics.acr();
        }
        let cfg = &self.world.config;
        let slots = self.records.len() as u64;
        let total_ms = self.started.elapsed().as_secs_f64() * 1e3;
        let slot_ms: f64 = self.records.iter().map(|r| r.runtime_ms).sum();
        let t = &self.tally;
        let metrics = RunMetrics {
            scheme: cfg.scenario.scheme,
            seed: cfg.scenario.rng_seed,
            slots,
            sw_series: self.records.iter().map(|r| r.sw).collect(),
            sw_cumulative: self.metrics.sw_cum,
            veh_util_series: self.records.iter().map(|r| r.veh_util).collect(),
            srv_util_series: self.records.iter().map(|r| r.srv_util).collect(),
            veh_util_total: t.veh_util,
            srv_util_total: t.srv_util,
            apr: self.metrics.apr(mode),
            apr_bits: self.metrics.apr(AprMode::Bits),
            acd: self.metrics.acd(),
            acr: self.metrics.acr(),
            n_succ: self.metrics.n_succ,
            n_gen: self.metrics.n_gen,
            n_failed: self.metrics.n_failed,
            n_local: t.n_local,
            n_edge: t.n_edge,
            n_cloud: t.n_cloud,
            mean_price_per_ghz: (t.price_n > 0).then(|| t.price_sum / t.price_n as f64),
            clamp_events: t.clamp_events,
            no_deal: t.no_deal.clone(),
            runtime_ms: total_ms,
            mean_slot_runtime_ms: if slots > 0 { slot_ms / slots as f64 } else { 0.0 },
        };
        RunOutput {
            metrics,
            records: self.records,
            completions: self.metrics.completions,
            trace: self.trace,
        }
    }
}

/// Build, run and summarise one configuration.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    Ok(Simulation::new(config)?.run())
}

/// Same configuration under another scheme.
pub fn run_scheme(config: &ScenarioConfig, scheme: Scheme) -> Result<RunOutput> {
    let mut c = config.clone();
    c.scenario.scheme = scheme;
    run(&c)
}
