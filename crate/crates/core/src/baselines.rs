//! Decision rules for every scheme, including the comparison baselines.

use rand::Rng;

use crate::bargaining::{evaluate, finish, precheck, Deal, NoDeal};
use crate::config::{Scheme, SchemeParams};
use crate::engine::{bargain_match, SlotContext, SlotPlan};
use crate::matching::{run_matching, Capacity, PairValue, PreferenceLists};
use crate::scenario::{ServerId, TaskSpec, WorldState};

/// Per-run state of a scheme; only the congestion-learning baseline keeps
/// anything between slots.
#[derive(Debug, Clone)]
pub struct SchemeState {
    pub scheme: Scheme,
    params: SchemeParams,
    offload_prob: Vec<f64>,
}

impl SchemeState {
    pub fn new(scheme: Scheme, params: &SchemeParams, n_vehicles: usize) -> Self {
        SchemeState {
            scheme,
            params: params.clone(),
            offload_prob: vec![params.nco_initial_probability; n_vehicles],
        }
    }

    pub fn offload_probability(&self, v: usize) -> f64 {
        self.offload_prob[v]
    }

    /// Whether the task tries to upload this slot. Only the learning
    /// baseline draws from `rng`.
    pub fn wants_remote<R: Rng + ?Sized>(&self, task: &TaskSpec, rng: &mut R) -> bool {
        match self.scheme {
            Scheme::Elo => false,
            Scheme::Nco => rng.random::<f64>() < self.offload_prob[task.owner],
            _ => true,
        }
    }

    pub fn decide(&self, ctx: &SlotContext<'_>, trace: Option<&mut String>) -> SlotPlan {
        match self.scheme {
            Scheme::BargainMatch => bargain_match(ctx, trace),
            Scheme::Elo => local_only(ctx),
            Scheme::Exo => exhaustive(ctx),
            Scheme::Nvo => fixed_target(ctx, |k| ctx.candidates[k].j_cur),
            Scheme::Eco => {
                let cloud = ctx.world.cloud_index();
                fixed_target(ctx, move |k| ctx.candidates[k].j_cur.map(|_| cloud))
            }
            Scheme::Nco => congestion(ctx),
            Scheme::Opora => opora(ctx, self.params.opora_price_step),
        }
    }

    /// Move each attached vehicle's offloading probability toward the idle
    /// share of its server.
    pub fn observe(&mut self, world: &WorldState, attached: &[Option<ServerId>], slot: u64) {
        if self.scheme != Scheme::Nco {
            return;
        }
        let lr = self.params.nco_learning_rate;
        for (q, a) in self.offload_prob.iter_mut().zip(attached) {
            if let Some(j) = *a {
                let s = &world.servers[j];
                let busy = s.busy_cores(slot) as f64 / s.n_core as f64;
                *q = ((1.0 - lr) * *q + lr * (1.0 - busy)).clamp(0.0, 1.0);
            }
        }
    }
}

fn local_only(ctx: &SlotContext<'_>) -> SlotPlan {
    let mut plan = SlotPlan::default();
    let mut ledger = ctx.ledger();
    for k in 0..ctx.candidates.len() {
        if !plan.try_local(ctx, &mut ledger, k) {
            plan.fail(ctx, k);
        }
    }
    plan
}

/// First come first served over the vehicle's own ranking of every
/// destination, local included.
fn exhaustive(ctx: &SlotContext<'_>) -> SlotPlan {
    let mut plan = SlotPlan::default();
    let mut ledger = ctx.ledger();
    for k in 0..ctx.candidates.len() {
        let cand = &ctx.candidates[k];
        let mut deals: Vec<Deal> = if cand.can_upload() {
            (0..ctx.n_servers()).filter_map(|j| ctx.negotiate(k, j).ok()).collect()
        } else {
            Vec::new()
        };
        deals.retain(|d| d.vehicle_utility >= 0.0);
        // stable sort keeps the lower server index first on ties
        deals.sort_by(|a, b| b.vehicle_utility.total_cmp(&a.vehicle_utility));
        let local = cand.local.filter(|l| l.utility >= 0.0).map(|l| l.utility);
        let mut placed = false;
        let mut local_tried = false;
        for d in &deals {
            if !local_tried && local.is_some_and(|u| u > d.vehicle_utility) {
                local_tried = true;
                if plan.try_local(ctx, &mut ledger, k) {
                    placed = true;
                    break;
                }
            }
            if ledger.take_remote(d.server, d.alloc, d.server_energy) {
                plan.push_remote(ctx, k, d);
                placed = true;
                break;
            }
        }
        if !placed && !local_tried && local.is_some() {
            placed = plan.try_local(ctx, &mut ledger, k);
        }
        if !placed {
            plan.fail(ctx, k);
        }
    }
    plan
}

/// Offload to one predetermined server, first come first served.
fn fixed_target(ctx: &SlotContext<'_>, target: impl Fn(usize) -> Option<ServerId>) -> SlotPlan {
    let mut plan = SlotPlan::default();
    let mut ledger = ctx.ledger();
    for k in 0..ctx.candidates.len() {
        let placed = ctx.candidates[k].can_upload()
            && target(k).is_some_and(|j| match ctx.negotiate(k, j) {
                Ok(d) if ledger.take_remote(j, d.alloc, d.server_energy) => {
                    plan.push_remote(ctx, k, &d);
                    true
                }
                _ => false,
            });
        if !placed {
            plan.fail(ctx, k);
        }
    }
    plan
}

fn congestion(ctx: &SlotContext<'_>) -> SlotPlan {
    let mut plan = SlotPlan::default();
    let mut ledger = ctx.ledger();
    for k in 0..ctx.candidates.len() {
        let cand = &ctx.candidates[k];
        let placed = match (cand.can_upload(), cand.j_cur) {
            (true, Some(j)) => match ctx.negotiate(k, j) {
                Ok(d) if ledger.take_remote(j, d.alloc, d.server_energy) => {
                    plan.push_remote(ctx, k, &d);
                    true
                }
                _ => false,
            },
            _ => plan.try_local(ctx, &mut ledger, k),
        };
        if !placed {
            plan.fail(ctx, k);
        }
    }
    plan
}

/// Full allocation with an ascending price search from the server's
/// break-even price.
pub fn opora_deal(ctx: &SlotContext<'_>, k: usize, j: ServerId, step: f64) -> Result<Deal, NoDeal> {
    let n = ctx.negotiation(k, j).ok_or(NoDeal::NoResources)?;
    precheck(&n)?;
    let f = n.f_available;
    let b = n.bounds_at(f)?;
    if b.spread() < 0.0 {
        return Err(NoDeal::EmptyBargainingSet);
    }
    let dc = step * b.spread();
    let mut c = b.c_min;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let (ui, uj) = evaluate(&n, c, f);
        if uj > 0.0 {
            if ui > 0.0 {
                return finish(&n, f, c, b, ui, uj, rounds, 0);
            }
            return Err(NoDeal::NonPositiveUtility);
        }
        c += dc;
        if !(dc > 0.0) || c > b.c_max {
            return Err(NoDeal::NonPositiveUtility);
        }
    }
}

fn opora(ctx: &SlotContext<'_>, step: f64) -> SlotPlan {
    let n = ctx.candidates.len();
    let ns = ctx.n_servers();
    let deals: Vec<Vec<Option<Deal>>> = (0..n)
        .map(|k| {
            (0..ns)
                .map(|j| {
                    if !ctx.candidates[k].can_upload() {
                        return None;
                    }
                    let r = opora_deal(ctx, k, j, step);
                    if let Err(e) = r {
                        ctx.note(e);
                    }
                    r.ok()
                })
                .collect()
        })
        .collect();
    let values = deals
        .iter()
        .map(|row| {
            row.iter()
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
    // one task per server per slot
    let capacity = ctx
        .capacity()
        .into_iter()
        .map(|c| Capacity {
            cores: c.cores.min(1),
            budget: c.budget,
        })
        .collect();
    let m = run_matching(&PreferenceLists::build(values, capacity));

    let mut plan = SlotPlan::default();
    let mut ledger = ctx.ledger();
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        let placed = m.task_server[k].is_some_and(|j| {
            let d = deals[k][j].as_ref().expect("matched pairs are acceptable");
            let ok = ledger.take_remote(j, d.alloc, d.server_energy);
            if ok {
                plan.push_remote(ctx, k, d);
            }
            ok
        });
        if !(placed || plan.try_local(ctx, &mut ledger, k)) {
            plan.fail(ctx, k);
        }
    }
    plan
}
