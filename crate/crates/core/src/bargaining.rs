//! Intra-server resource allocation and pricing: the vehicle's optimal
//! demand, the bargaining range, finite-horizon alternating-offer shares and
//! the negotiation loop that couples them.

use std::fmt;

use crate::config::{ArrivalMode, BargainConfig, MobilityConfig};
use crate::mobility::{arrival_server, direction_indicator, sojourn_time, Motion};
use crate::scenario::{ServerId, TaskSpec};
use crate::utility::{
    satisfaction, server_utility, vehicle_utility_remote, ServerTerms, VehicleTerms,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum BargainError {
    #[error("utility has no interior maximum in the allocation")]
    NoInteriorOptimum,
    #[error("nonpositive price")]
    NonPositivePrice,
    #[error("delay exceeds the deadline, no price ceiling exists")]
    PastDeadline,
    #[error("empty bargaining set")]
    EmptySpread,
}

/// Utility-maximising allocation of a vehicle facing unit price `c`.
///
/// `var1` collects every delay term that does not depend on the allocation.
pub fn optimal_allocation(
    c: f64,
    c_req: f64,
    t_max: f64,
    var1: f64,
    w: f64,
    payment_budget: f64,
) -> Result<f64, BargainError> {
    if !(c > 0.0) {
        return Err(BargainError::NonPositivePrice);
    }
    let l = (1.0 + t_max).ln();
    let m = c * l * (1.0 - w);
    let a = 1.0 + t_max - var1;
    let radicand = m * (m * c_req + 4.0 * payment_budget * w * a) / c_req;
    if !(radicand >= 0.0) {
        return Err(BargainError::NoInteriorOptimum);
    }
    let den = radicand.sqrt() - m;
    if !(den > 0.0) || !(m > 0.0) {
        return Err(BargainError::NoInteriorOptimum);
    }
    Ok(2.0 * w * payment_budget / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBounds {
    pub c_min: f64,
    pub c_max: f64,
}

impl PriceBounds {
    pub fn spread(&self) -> f64 {
        self.c_max - self.c_min
    }
}

/// Server break-even price.
pub fn price_floor(f: f64, c_req: f64, s: &ServerTerms) -> f64 {
    (1.0 - s.weight) * s.alpha * f.powf(s.tau - 2.0) * c_req * s.price_ceiling * s.f_max
        / (s.weight * s.energy_budget)
}

/// Vehicle break-even price at total delay `t_total`.
pub fn price_ceiling(
    f: f64,
    t_total: f64,
    t_max: f64,
    v: &VehicleTerms,
) -> Result<f64, BargainError> {
    if t_total > t_max {
        return Err(BargainError::PastDeadline);
    }
    Ok(v.weight * (1.0 + t_max - t_total).ln() * v.payment_budget
        / ((1.0 - v.weight) * f * (1.0 + t_max).ln()))
}

pub fn price_bounds(
    f: f64,
    c_req: f64,
    t_total: f64,
    t_max: f64,
    v: &VehicleTerms,
    s: &ServerTerms,
) -> Result<PriceBounds, BargainError> {
    Ok(PriceBounds {
        c_min: price_floor(f, c_req, s),
        c_max: price_ceiling(f, t_total, t_max, v)?,
    })
}

pub const EPS_CAP: f64 = 1.0 - 1e-9;

pub fn discount_factors(t_max: f64, t_tran: f64, t_comp: f64) -> (f64, f64) {
    let clamp = |x: f64| x.clamp(0.0, EPS_CAP);
    (clamp(1.0 - t_tran / t_max), clamp(1.0 - t_comp / t_max))
}

/// Shares of the spread kept by each side. `di_i`/`dj_i`: vehicle opens;
/// `di_j`/`dj_j`: server opens. The first index is the owner of the share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partitions {
    pub di_i: f64,
    pub dj_i: f64,
    pub di_j: f64,
    pub dj_j: f64,
    pub clamp_events: u32,
}

pub fn raw_partitions(eps_i: f64, eps_j: f64, horizon: u32) -> Partitions {
    let k = horizon.div_ceil(2) as i32;
    let p = eps_i * eps_j;
    let x = p.powi(k);
    let d = 1.0 - p;
    Partitions {
        di_i: eps_i - (1.0 - eps_i) * (1.0 - x) / d,
        dj_i: (1.0 - eps_i) * (2.0 - p - x) / d,
        di_j: (1.0 - eps_j) * (1.0 - x) / d,
        dj_j: (eps_j * (1.0 - eps_i) - (1.0 - eps_j) * x) / d,
        clamp_events: 0,
    }
}

pub fn optimal_partitions(eps_i: f64, eps_j: f64, horizon: u32, clamp: bool) -> Partitions {
    let mut p = raw_partitions(eps_i, eps_j, horizon);
    if clamp {
        for v in [&mut p.di_i, &mut p.dj_i, &mut p.di_j, &mut p.dj_j] {
            if *v < 0.0 || *v > 1.0 {
                *v = v.clamp(0.0, 1.0);
                p.clamp_events += 1;
            }
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proposer {
    Vehicle,
    Server,
}

pub fn optimal_price(
    bounds: PriceBounds,
    parts: &Partitions,
    who: Proposer,
) -> Result<f64, BargainError> {
    let dc = bounds.spread();
    if dc < 0.0 {
        return Err(BargainError::EmptySpread);
    }
    let delta = match who {
        Proposer::Vehicle => parts.di_i,
        Proposer::Server => parts.di_j,
    };
    Ok(bounds.c_max - dc * delta)
}

/// Geometry needed to predict where the vehicle will be when the result is
/// ready.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalContext<'a> {
    pub j_cur: usize,
    pub edge_x: &'a [f64],
    pub radius: f64,
    pub motion: Motion,
    pub mode: ArrivalMode,
    pub mobility: &'a MobilityConfig,
}

impl ArrivalContext<'_> {
    pub fn arrival(&self, t_move: f64) -> usize {
        let j = self.j_cur;
        arrival_server(
            j,
            self.edge_x.len(),
            self.edge_x[j],
            self.radius,
            &self.motion,
            t_move,
            self.mode,
        )
    }

    /// Sojourn at server `j` once the vehicle has travelled for `t_move`.
    pub fn sojourn_at(&self, j: usize, t_move: f64) -> f64 {
        let m = &self.motion;
        let x = m.x + f64::from(m.heading) * m.speed * t_move;
        let sx = self.edge_x[j];
        let zeta = direction_indicator(x, Some(m.x), sx, m.heading, self.mobility);
        sojourn_time(self.radius, zeta, x, sx, m.speed)
    }
}

/// Delay terms of one (task, destination) pair that do not depend on the
/// price.
#[derive(Debug, Clone, Copy)]
pub struct LinkContext<'a> {
    /// Time already spent waiting since generation.
    pub wait: f64,
    pub upload: f64,
    /// Task migration between edges, or the cloud backhaul.
    pub fixed: f64,
    /// Charged when the result has to follow the vehicle to another edge.
    pub result_handover: f64,
    pub sojourn_cur: f64,
    /// Destination edge index; `None` for the cloud.
    pub dest_edge: Option<usize>,
    pub arrival: Option<ArrivalContext<'a>>,
}

impl LinkContext<'_> {
    fn t_move(&self, c_req: f64, f: f64) -> f64 {
        self.upload + self.fixed + c_req / f
    }

    pub fn arrival_edge(&self, c_req: f64, f: f64) -> Option<usize> {
        self.arrival.map(|a| a.arrival(self.t_move(c_req, f)))
    }

    pub fn result_moved(&self, c_req: f64, f: f64) -> bool {
        match (self.dest_edge, self.arrival_edge(c_req, f)) {
            (Some(j), Some(ja)) => j != ja,
            _ => false,
        }
    }

    pub fn var1(&self, c_req: f64, f: f64) -> f64 {
        let moved = if self.result_moved(c_req, f) {
            self.result_handover
        } else {
            0.0
        };
        self.wait + self.upload + self.fixed + moved
    }

    pub fn total_delay(&self, c_req: f64, f: f64) -> f64 {
        self.var1(c_req, f) + c_req / f
    }

    fn worst_var1(&self) -> f64 {
        self.wait + self.upload + self.fixed + self.result_handover
    }

    /// `(handover time, sojourn at the arrival edge)`.
    pub fn result_leg(&self, c_req: f64, f: f64) -> (f64, f64) {
        match (self.dest_edge, self.arrival) {
            (Some(j), Some(a)) => {
                let t_move = self.t_move(c_req, f);
                let ja = a.arrival(t_move);
                if ja == j {
                    (0.0, a.sojourn_at(ja, t_move))
                } else {
                    (self.result_handover, a.sojourn_at(ja, t_move))
                }
            }
            _ => (0.0, f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoDeal {
    NoResources,
    /// C4
    Deadline,
    /// C5
    UploadOutlastsSojourn,
    /// C6
    ResultOutlastsSojourn,
    /// C11
    EnergyBudget,
    NoInteriorOptimum,
    EmptyBargainingSet,
    NonPositiveUtility,
}

impl NoDeal {
    pub const ALL: [NoDeal; 8] = [
        NoDeal::NoResources,
        NoDeal::Deadline,
        NoDeal::UploadOutlastsSojourn,
        NoDeal::ResultOutlastsSojourn,
        NoDeal::EnergyBudget,
        NoDeal::NoInteriorOptimum,
        NoDeal::EmptyBargainingSet,
        NoDeal::NonPositiveUtility,
    ];

    pub fn key(self) -> &'static str {
        match self {
            NoDeal::NoResources => "no_resources",
            NoDeal::Deadline => "deadline",
            NoDeal::UploadOutlastsSojourn => "upload_sojourn",
            NoDeal::ResultOutlastsSojourn => "result_sojourn",
            NoDeal::EnergyBudget => "energy_budget",
            NoDeal::NoInteriorOptimum => "no_interior_optimum",
            NoDeal::EmptyBargainingSet => "empty_bargaining_set",
            NoDeal::NonPositiveUtility => "nonpositive_utility",
        }
    }
}

impl fmt::Display for NoDeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NoDeal::NoResources => "no idle resources",
            NoDeal::Deadline => "deadline cannot be met",
            NoDeal::UploadOutlastsSojourn => "upload outlasts sojourn",
            NoDeal::ResultOutlastsSojourn => "result handover outlasts sojourn",
            NoDeal::EnergyBudget => "server energy budget exhausted",
            NoDeal::NoInteriorOptimum => "no interior optimum",
            NoDeal::EmptyBargainingSet => "empty bargaining set",
            NoDeal::NonPositiveUtility => "no mutually beneficial price",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deal {
    pub server: ServerId,
    pub alloc: f64,
    pub price: f64,
    pub bounds: PriceBounds,
    pub vehicle_utility: f64,
    pub server_utility: f64,
    pub total_delay: f64,
    pub upload_delay: f64,
    pub compute_delay: f64,
    pub sojourn_cur: f64,
    pub result_handover: f64,
    pub sojourn_arr: f64,
    pub server_energy: f64,
    pub rounds: u32,
    pub clamp_events: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct Negotiation<'a> {
    pub task: &'a TaskSpec,
    pub vehicle: VehicleTerms,
    pub server: ServerTerms,
    pub server_id: ServerId,
    pub f_available: f64,
    pub energy_left: f64,
    pub link: LinkContext<'a>,
    pub config: &'a BargainConfig,
    /// Opening price, $ per Hz.
    pub initial_price: f64,
}

impl Negotiation<'_> {
    fn utilities(&self, c: f64, f: f64) -> (f64, f64) {
        let t = self.link.total_delay(self.task.c_req, f);
        let ui = match satisfaction(t, self.task.t_max) {
            Some(psi) => vehicle_utility_remote(
                self.vehicle.weight,
                psi,
                c,
                f,
                self.vehicle.payment_budget,
            ),
            None => f64::NEG_INFINITY,
        };
        (ui, server_utility(&self.server, c, f, self.task.c_req))
    }

    /// Bargaining range at allocation `f`, with the vehicle's ceiling also
    /// capped by its payment budget.
    pub fn bounds_at(&self, f: f64) -> Result<PriceBounds, NoDeal> {
        let t = self.link.total_delay(self.task.c_req, f);
        let b = price_bounds(f, self.task.c_req, t, self.task.t_max, &self.vehicle, &self.server)
            .map_err(|_| NoDeal::Deadline)?;
        Ok(PriceBounds {
            c_min: b.c_min,
            c_max: b.c_max.min(self.vehicle.payment_budget / f),
        })
    }

    fn refine(&self, c: f64, f_prev: f64, f_floor: f64) -> Result<f64, NoDeal> {
        let task = self.task;
        let var1 = self.link.var1(task.c_req, f_prev);
        let f_star = optimal_allocation(
            c,
            task.c_req,
            task.t_max,
            var1,
            self.vehicle.weight,
            self.vehicle.payment_budget,
        )
        .map_err(|_| NoDeal::NoInteriorOptimum)?;
        let f = f_star.clamp(f_floor, self.f_available);
        // near the floor satisfaction vanishes and so does the ceiling
        let usable = self.link.total_delay(task.c_req, f) <= task.t_max
            && self.bounds_at(f).is_ok_and(|b| b.spread() >= 0.0);
        Ok(if usable { f } else { self.f_available })
    }

    fn discounts(&self, f: f64) -> (f64, f64) {
        discount_factors(self.task.t_max, self.link.upload, self.task.c_req / f)
    }
}

/// Conditions that rule a pair out before any price is discussed.
pub fn precheck(n: &Negotiation<'_>) -> Result<(), NoDeal> {
    if !(n.f_available > 0.0) {
        return Err(NoDeal::NoResources);
    }
    if n.link.upload > n.link.sojourn_cur {
        return Err(NoDeal::UploadOutlastsSojourn);
    }
    if n.link.total_delay(n.task.c_req, n.f_available) > n.task.t_max {
        return Err(NoDeal::Deadline);
    }
    Ok(())
}

pub fn negotiate(n: &Negotiation<'_>) -> Result<Deal, NoDeal> {
    precheck(n)?;
    let task = n.task;
    let link = &n.link;
    let f_avl = n.f_available;
    // any allocation above this meets the deadline whatever the arrival edge
    let slack = task.t_max - link.worst_var1();
    let f_floor = if slack > 0.0 {
        (task.c_req / slack).min(f_avl)
    } else {
        f_avl
    };

    let tol = n.config.convergence_tol;
    let mut c = n.initial_price;
    let mut f = n.refine(c, f_avl, f_floor)?;
    let mut last = Proposer::Vehicle;
    let mut clamp_events = 0;
    let mut rounds = 0;
    let mut agreed = false;
    for r in 0..n.config.horizon {
        rounds = r + 1;
        let b = n.bounds_at(f)?;
        if b.spread() < 0.0 {
            return Err(NoDeal::EmptyBargainingSet);
        }
        let (ui, uj) = n.utilities(c, f);
        if ui > 0.0 && uj > 0.0 && c <= b.c_max {
            agreed = true;
            break;
        }
        let who = match (ui > 0.0, uj > 0.0) {
            (true, false) => Proposer::Vehicle,
            (false, true) => Proposer::Server,
            _ if r % 2 == 0 => Proposer::Vehicle,
            _ => Proposer::Server,
        };
        let (ei, ej) = n.discounts(f);
        let parts = optimal_partitions(ei, ej, n.config.horizon, n.config.clamp_partitions);
        clamp_events += parts.clamp_events;
        let c_new = optimal_price(b, &parts, who).map_err(|_| NoDeal::EmptyBargainingSet)?;
        let f_new = n.refine(c_new, f, f_floor)?;
        let settled = (c_new - c).abs() <= tol * c_new.abs() && (f_new - f).abs() <= tol * f;
        c = c_new;
        f = f_new;
        last = who;
        if settled {
            break;
        }
    }

    let b = n.bounds_at(f)?;
    if b.spread() < 0.0 {
        return Err(NoDeal::EmptyBargainingSet);
    }
    if !agreed && !(c > b.c_min && c < b.c_max) {
        let (ei, ej) = n.discounts(f);
        let parts = optimal_partitions(ei, ej, n.config.horizon, n.config.clamp_partitions);
        clamp_events += parts.clamp_events;
        c = optimal_price(b, &parts, last).map_err(|_| NoDeal::EmptyBargainingSet)?;
    }
    let (ui, uj) = n.utilities(c, f);
    if !(ui > 0.0 && uj > 0.0) {
        return Err(NoDeal::NonPositiveUtility);
    }
    finish(n, f, c, b, ui, uj, rounds, clamp_events)
}

/// Check the remaining hard constraints for a settled `(f, c)` and package
/// the deal.
#[allow(clippy::too_many_arguments)]
pub fn finish(
    n: &Negotiation<'_>,
    f: f64,
    c: f64,
    bounds: PriceBounds,
    ui: f64,
    uj: f64,
    rounds: u32,
    clamp_events: u32,
) -> Result<Deal, NoDeal> {
    let task = n.task;
    let link = &n.link;
    let energy = crate::costmodel::exec_energy(f, task.c_req, n.server.alpha, n.server.tau);
    if energy > n.energy_left {
        return Err(NoDeal::EnergyBudget);
    }
    let (handover, soj_arr) = link.result_leg(task.c_req, f);
    if handover > soj_arr {
        return Err(NoDeal::ResultOutlastsSojourn);
    }
    let total = link.total_delay(task.c_req, f);
    if total > task.t_max {
        return Err(NoDeal::Deadline);
    }
    Ok(Deal {
        server: n.server_id,
        alloc: f,
        price: c,
        bounds,
        vehicle_utility: ui,
        server_utility: uj,
        total_delay: total,
        upload_delay: link.upload,
        compute_delay: task.c_req / f,
        sojourn_cur: link.sojourn_cur,
        result_handover: handover,
        sojourn_arr: soj_arr,
        server_energy: energy,
        rounds,
        clamp_events,
    })
}

/// Utilities of both sides at `(c, f)` under the negotiation's link; used
/// by schemes that price differently.
pub fn evaluate(n: &Negotiation<'_>, c: f64, f: f64) -> (f64, f64) {
    n.utilities(c, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vt() -> VehicleTerms {
        VehicleTerms {
            weight: 0.6,
            energy_budget: 3000.0,
            payment_budget: 20.0,
        }
    }

    fn st() -> ServerTerms {
        ServerTerms {
            weight: 0.5,
            price_ceiling: 1e-9,
            f_max: 8e9,
            energy_budget: 28_800.0,
            alpha: 7.8e-27,
            tau: 3.0,
        }
    }

    #[test]
    fn closed_form_matches_quadratic_root() {
        let (c, creq, tmax, var1, w, cmax) = (1e-9, 5e9, 3.0, 0.2, 0.6, 20.0);
        let f = optimal_allocation(c, creq, tmax, var1, w, cmax).unwrap();
        let m = (1.0 - w) * c * (1.0 + tmax).ln();
        let a = 1.0 + tmax - var1;
        let root = (m * creq + (m * m * creq * creq + 4.0 * m * a * w * creq * cmax).sqrt())
            / (2.0 * m * a);
        assert!((f / root - 1.0).abs() < 1e-12);
    }

    #[test]
    fn allocation_errors() {
        assert_eq!(
            optimal_allocation(0.0, 1e9, 1.0, 0.0, 0.5, 20.0),
            Err(BargainError::NonPositivePrice)
        );
        assert_eq!(
            optimal_allocation(1e-9, 1e9, 1.0, 2.5, 0.5, 20.0),
            Err(BargainError::NoInteriorOptimum)
        );
    }

    #[test]
    fn bounds_roots() {
        let (v, s) = (vt(), st());
        let (f, creq, t, tmax) = (2e9, 5e9, 2.6, 4.0);
        let b = price_bounds(f, creq, t, tmax, &v, &s).unwrap();
        let uj = server_utility(&s, b.c_min, f, creq);
        assert!(uj.abs() <= 1e-10 * (s.weight * b.c_min * f / (s.price_ceiling * s.f_max)));
        let psi = satisfaction(t, tmax).unwrap();
        let ui = vehicle_utility_remote(v.weight, psi, b.c_max, f, v.payment_budget);
        assert!(ui.abs() <= 1e-10 * v.weight * psi);

        let s0 = ServerTerms { alpha: 0.0, ..s };
        assert_eq!(price_floor(f, creq, &s0), 0.0);
        assert_eq!(price_ceiling(f, tmax, tmax, &v).unwrap(), 0.0);
        assert_eq!(price_ceiling(f, tmax + 0.1, tmax, &v), Err(BargainError::PastDeadline));
    }

    #[test]
    fn discount_examples() {
        let (ei, _) = discount_factors(2.0, 0.0, 1.0);
        assert_eq!(ei, EPS_CAP);
        let (ei, _) = discount_factors(2.0, 2.0, 1.0);
        assert_eq!(ei, 0.0);
        let (a, b) = discount_factors(2.0, 0.5, 1.0);
        let (c, d) = discount_factors(3.0, 0.5, 1.0);
        assert!(c > a && d > b);
    }

    #[test]
    fn partition_examples() {
        let p = raw_partitions(0.9, 0.9, 400);
        assert!((p.di_i - (0.9 - 0.1 / 0.19)).abs() < 1e-9);
        let p = raw_partitions(0.0, 0.0, 2);
        assert_eq!(p.di_i, -1.0);
        let c = optimal_partitions(0.0, 0.0, 2, true);
        assert_eq!(c.di_i, 0.0);
        assert!(c.clamp_events >= 1);
        for (ei, ej, tb) in [(0.3, 0.8, 3), (0.95, 0.2, 10), (0.5, 0.5, 1)] {
            let p = raw_partitions(ei, ej, tb);
            assert!((p.di_i + p.dj_i - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn price_from_partition() {
        let b = PriceBounds { c_min: 1.0, c_max: 3.0 };
        let mk = |d: f64| Partitions {
            di_i: d,
            dj_i: 1.0 - d,
            di_j: d,
            dj_j: 0.0,
            clamp_events: 0,
        };
        assert_eq!(optimal_price(b, &mk(0.0), Proposer::Vehicle).unwrap(), 3.0);
        assert_eq!(optimal_price(b, &mk(1.0), Proposer::Server).unwrap(), 1.0);
        assert_eq!(optimal_price(b, &mk(0.5), Proposer::Vehicle).unwrap(), 2.0);
        let bad = PriceBounds { c_min: 3.0, c_max: 1.0 };
        assert_eq!(
            optimal_price(bad, &mk(0.5), Proposer::Vehicle),
            Err(BargainError::EmptySpread)
        );
    }

    fn link() -> LinkContext<'static> {
        LinkContext {
            wait: 0.0,
            upload: 0.02,
            fixed: 0.0,
            result_handover: 0.0,
            sojourn_cur: 10.0,
            dest_edge: None,
            arrival: None,
        }
    }

    fn task() -> TaskSpec {
        TaskSpec::new(0, 0, 0, 4e6, 4e3, 1000.0, 4.0).unwrap()
    }

    #[test]
    fn immediate_agreement_at_opening_price() {
        let t = task();
        let cfg = BargainConfig::default();
        let n = Negotiation {
            task: &t,
            vehicle: vt(),
            server: st(),
            server_id: 3,
            f_available: 2e9,
            energy_left: 1e6,
            link: link(),
            config: &cfg,
            initial_price: 1e-9,
        };
        let d = negotiate(&n).unwrap();
        assert_eq!(d.rounds, 1);
        assert_eq!(d.price, 1e-9);
        assert_eq!(d.alloc, 2e9);
        assert!(d.vehicle_utility > 0.0 && d.server_utility > 0.0);
    }

    #[test]
    fn bargaining_when_opening_price_too_high() {
        let t = task();
        let cfg = BargainConfig::default();
        let n = Negotiation {
            task: &t,
            vehicle: vt(),
            server: st(),
            server_id: 0,
            f_available: 2e9,
            energy_left: 1e6,
            link: link(),
            config: &cfg,
            initial_price: 1e-7,
        };
        let d = negotiate(&n).unwrap();
        assert!(d.price >= d.bounds.c_min && d.price <= d.bounds.c_max);
        assert!(d.price * d.alloc <= 20.0);
        assert!(d.rounds >= 1);
    }

    #[test]
    fn empty_spread_is_no_deal() {
        let t = task();
        let cfg = BargainConfig::default();
        let hot = ServerTerms { alpha: 1e-21, ..st() };
        let n = Negotiation {
            task: &t,
            vehicle: vt(),
            server: hot,
            server_id: 0,
            f_available: 2e9,
            energy_left: f64::INFINITY,
            link: link(),
            config: &cfg,
            initial_price: 1e-9,
        };
        assert_eq!(negotiate(&n), Err(NoDeal::EmptyBargainingSet));
    }

    #[test]
    fn infeasible_links() {
        let t = task();
        let cfg = BargainConfig::default();
        let base = Negotiation {
            task: &t,
            vehicle: vt(),
            server: st(),
            server_id: 0,
            f_available: 2e9,
            energy_left: 1e6,
            link: link(),
            config: &cfg,
            initial_price: 1e-9,
        };
        let slow = Negotiation { f_available: 5e8, ..base };
        assert_eq!(negotiate(&slow), Err(NoDeal::Deadline));
        let mut l = link();
        l.sojourn_cur = 0.01;
        assert_eq!(
            negotiate(&Negotiation { link: l, ..base }),
            Err(NoDeal::UploadOutlastsSojourn)
        );
        assert_eq!(
            negotiate(&Negotiation { f_available: 0.0, ..base }),
            Err(NoDeal::NoResources)
        );
        assert_eq!(
            negotiate(&Negotiation { energy_left: 1e-6, ..base }),
            Err(NoDeal::EnergyBudget)
        );
    }
}
