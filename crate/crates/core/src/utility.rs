//! Utilities of vehicles and servers, social welfare, and the constraint
//! checker for committed decisions.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scenario::{ServerId, TaskId, TaskSpec, VehicleId, WorldState};

/// Raw satisfaction `ln(1 + T_max - T) / ln(1 + T_max)`; NaN once the log
/// argument is nonpositive.
pub fn satisfaction_raw(t_total: f64, t_max: f64) -> f64 {
    let arg = 1.0 + t_max - t_total;
    if arg <= 0.0 {
        return f64::NAN;
    }
    arg.ln() / (1.0 + t_max).ln()
}

/// Satisfaction for a delay that meets the deadline, `None` otherwise.
pub fn satisfaction(t_total: f64, t_max: f64) -> Option<f64> {
    if !(t_total >= 0.0) || t_total > t_max || t_max <= 0.0 {
        return None;
    }
    Some(satisfaction_raw(t_total, t_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Destination {
    Local,
    Server(ServerId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleTerms {
    pub weight: f64,
    pub energy_budget: f64,
    pub payment_budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerTerms {
    pub weight: f64,
    /// $ per Hz
    pub price_ceiling: f64,
    pub f_max: f64,
    pub energy_budget: f64,
    pub alpha: f64,
    pub tau: f64,
}

pub fn vehicle_utility_local(w: f64, psi: f64, energy: f64, energy_budget: f64) -> f64 {
    w * psi - (1.0 - w) * energy / energy_budget
}

pub fn vehicle_utility_remote(w: f64, psi: f64, price: f64, f: f64, payment_budget: f64) -> f64 {
    w * psi - (1.0 - w) * price * f / payment_budget
}

/// Vehicle utility for a chosen destination. Remote destinations need the
/// negotiated `(price, allocation)`.
pub fn vehicle_utility(
    v: &VehicleTerms,
    psi: f64,
    dest: Destination,
    local_energy: f64,
    deal: Option<(f64, f64)>,
) -> Result<f64> {
    match dest {
        Destination::Local => Ok(vehicle_utility_local(
            v.weight,
            psi,
            local_energy,
            v.energy_budget,
        )),
        Destination::Server(_) => {
            let (c, f) = deal.ok_or(Error::MissingDeal)?;
            Ok(vehicle_utility_remote(v.weight, psi, c, f, v.payment_budget))
        }
    }
}

pub fn server_revenue(s: &ServerTerms, price: f64, f: f64) -> f64 {
    price * f / (s.price_ceiling * s.f_max)
}

pub fn server_cost(s: &ServerTerms, f: f64, c_req: f64) -> f64 {
    s.alpha * f.powf(s.tau - 1.0) * c_req / s.energy_budget
}

pub fn server_utility(s: &ServerTerms, price: f64, f: f64, c_req: f64) -> f64 {
    s.weight * server_revenue(s, price, f) - (1.0 - s.weight) * server_cost(s, f, c_req)
}

/// One committed placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub task: TaskSpec,
    pub destination: Destination,
    pub alloc: f64,
    /// $ per Hz; zero for local execution.
    pub price: f64,
    /// From generation to result availability, waiting included.
    pub total_delay: f64,
    pub upload_delay: f64,
    pub compute_delay: f64,
    pub sojourn_cur: f64,
    pub result_handover: f64,
    pub sojourn_arr: f64,
    pub vehicle_energy: f64,
    pub server_energy: f64,
    pub vehicle_utility: f64,
    pub server_utility: f64,
}

impl Decision {
    pub fn owner(&self) -> VehicleId {
        self.task.owner
    }

    pub fn welfare(&self) -> f64 {
        self.vehicle_utility + self.server_utility
    }
}

pub fn social_welfare(decisions: &[Decision]) -> f64 {
    decisions.iter().map(Decision::welfare).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
    C12,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    /// Task ids, or vehicle/server ids for the node-level constraints.
    pub ids: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated(&self, c: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }

    fn push(&mut self, constraint: Constraint, mut ids: Vec<u64>) {
        if !ids.is_empty() {
            ids.sort_unstable();
            ids.dedup();
            self.violations.push(Violation { constraint, ids });
        }
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("all constraints hold");
        }
        for v in &self.violations {
            writeln!(f, "{} violated by {:?}", v.constraint, v.ids)?;
        }
        Ok(())
    }
}

const TOL: f64 = 1e-9;

fn le(a: f64, b: f64) -> bool {
    a <= b + TOL * b.abs().max(1.0)
}

/// Check a slot's decisions against the world state they are about to be
/// committed to.
pub fn check_constraints(world: &WorldState, decisions: &[Decision], slot: u64) -> FeasibilityReport {
    let mut rep = FeasibilityReport::default();
    let speed = world.config.scenario.speed;

    // C1 holds by construction: a destination is a single enum value.
    let mut per_task: BTreeMap<TaskId, usize> = BTreeMap::new();
    for d in decisions {
        *per_task.entry(d.task.id).or_default() += 1;
    }
    rep.push(
        Constraint::C2,
        per_task.iter().filter(|(_, &n)| n > 1).map(|(&k, _)| k).collect(),
    );

    let mut fresh: BTreeMap<VehicleId, Vec<TaskId>> = BTreeMap::new();
    for d in decisions.iter().filter(|d| d.task.gen_slot == slot) {
        let ids = fresh.entry(d.owner()).or_default();
        if !ids.contains(&d.task.id) {
            ids.push(d.task.id);
        }
    }
    rep.push(
        Constraint::C3,
        fresh.iter().filter(|(_, t)| t.len() > 1).map(|(&v, _)| v as u64).collect(),
    );

    rep.push(
        Constraint::C4,
        decisions
            .iter()
            .filter(|d| !le(d.total_delay, d.task.t_max))
            .map(|d| d.task.id)
            .collect(),
    );

    let remote = || decisions.iter().filter(|d| d.destination != Destination::Local);
    rep.push(
        Constraint::C5,
        remote()
            .filter(|d| !le(d.upload_delay, d.sojourn_cur))
            .map(|d| d.task.id)
            .collect(),
    );
    rep.push(
        Constraint::C6,
        remote()
            .filter(|d| !le(d.result_handover, d.sojourn_arr))
            .map(|d| d.task.id)
            .collect(),
    );

    rep.push(
        Constraint::C7,
        world
            .vehicles
            .iter()
            .filter(|v| !speed.contains(v.speed))
            .map(|v| v.id as u64)
            .collect(),
    );

    let mut per_server: BTreeMap<ServerId, (f64, usize, f64)> = BTreeMap::new();
    let mut per_vehicle: BTreeMap<VehicleId, (usize, f64)> = BTreeMap::new();
    for d in decisions {
        match d.destination {
            Destination::Server(j) => {
                let e = per_server.entry(j).or_default();
                e.0 += d.alloc;
                e.1 += 1;
                e.2 += d.server_energy;
            }
            Destination::Local => {
                let e = per_vehicle.entry(d.owner()).or_default();
                e.0 += 1;
                e.1 += d.vehicle_energy;
            }
        }
    }
    let mut c8 = Vec::new();
    let mut c9 = Vec::new();
    let mut c11 = Vec::new();
    for (&j, &(f, n, e)) in &per_server {
        let Some(s) = world.servers.get(j) else {
            c8.push(j as u64);
            continue;
        };
        if !le(s.f_committed(slot) + f, s.f_max) {
            c8.push(j as u64);
        }
        if s.busy_cores(slot) + n > s.n_core {
            c9.push(j as u64);
        }
        if !le(s.energy_used + e, s.energy_budget) {
            c11.push(j as u64);
        }
    }
    let mut c10 = Vec::new();
    for (&i, &(n, e)) in &per_vehicle {
        let Some(v) = world.vehicles.get(i) else {
            c10.push(i as u64);
            continue;
        };
        // the vehicle's single core
        if n > 1 || !v.core_idle(slot) {
            c9.push(i as u64 | VEHICLE_TAG);
        }
        if !le(v.energy_used + e, v.energy_budget) {
            c10.push(i as u64);
        }
    }
    rep.push(Constraint::C8, c8);
    rep.push(Constraint::C9, c9);
    rep.push(Constraint::C10, c10);
    rep.push(Constraint::C11, c11);

    rep.push(
        Constraint::C12,
        remote()
            .filter(|d| {
                let budget = world
                    .vehicles
                    .get(d.owner())
                    .map_or(f64::INFINITY, |v| v.payment_budget);
                !le(d.price * d.alloc, budget)
            })
            .map(|d| d.task.id)
            .collect(),
    );
    rep
}

/// High bit set on C9 ids that refer to a vehicle core rather than a server.
pub const VEHICLE_TAG: u64 = 1 << 63;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::scenario::build_scenario;

    #[test]
    fn satisfaction_values() {
        assert_eq!(satisfaction(0.0, 3.0), Some(1.0));
        assert_eq!(satisfaction(3.0, 3.0), Some(0.0));
        let s = satisfaction(0.5, 1.0).unwrap();
        assert!((s - 1.5f64.ln() / 2f64.ln()).abs() < 1e-15);
        assert!((s - 0.584_962_500_721_156).abs() < 1e-12);
        assert_eq!(satisfaction(1.2, 1.0), None);
        assert!(satisfaction_raw(3.0, 1.0).is_nan());
    }

    #[test]
    fn satisfaction_base_independent() {
        let (t, tm): (f64, f64) = (0.7, 2.3);
        let b10 = (1.0 + tm - t).log10() / (1.0 + tm).log10();
        let b2 = (1.0 + tm - t).log2() / (1.0 + tm).log2();
        let e = satisfaction(t, tm).unwrap();
        assert!((b10 - e).abs() < 1e-14 && (b2 - e).abs() < 1e-14);
    }

    #[test]
    fn vehicle_utility_cases() {
        let v = VehicleTerms {
            weight: 1.0,
            energy_budget: 10.0,
            payment_budget: 20.0,
        };
        assert_eq!(vehicle_utility(&v, 0.7, Destination::Local, 5.0, None).unwrap(), 0.7);
        let v = VehicleTerms { weight: 0.5, ..v };
        let u = vehicle_utility(&v, 0.8, Destination::Local, 2.0, None).unwrap();
        assert!((u - 0.3).abs() < 1e-15);
        let u = vehicle_utility(&v, 0.8, Destination::Server(1), 0.0, Some((2e-9, 3e9))).unwrap();
        assert!((u - (0.4 - 0.5 * 6.0 / 20.0)).abs() < 1e-15);
        assert!(matches!(
            vehicle_utility(&v, 0.8, Destination::Server(1), 0.0, None),
            Err(Error::MissingDeal)
        ));
    }

    #[test]
    fn server_utility_cases() {
        let s = ServerTerms {
            weight: 1.0,
            price_ceiling: 1e-9,
            f_max: 6e9,
            energy_budget: 21600.0,
            alpha: 1e-27,
            tau: 3.0,
        };
        assert!((server_utility(&s, 1e-9, 3e9, 1e9) - 0.5).abs() < 1e-15);
        let s0 = ServerTerms { weight: 0.4, alpha: 0.0, ..s };
        assert!(server_utility(&s0, 1e-12, 1e6, 1e9) > 0.0);
    }

    #[test]
    fn welfare_sums() {
        assert_eq!(social_welfare(&[]), 0.0);
    }

    fn decision(world: &WorldState, id: TaskId, owner: VehicleId, dest: Destination) -> Decision {
        Decision {
            task: TaskSpec::new(id, owner, world.slot, 1e6, 1e3, 500.0, 2.0).unwrap(),
            destination: dest,
            alloc: 1e9,
            price: 1e-9,
            total_delay: 1.0,
            upload_delay: 0.1,
            compute_delay: 0.5,
            sojourn_cur: 10.0,
            result_handover: 0.0,
            sojourn_arr: 10.0,
            vehicle_energy: 0.0,
            server_energy: 1.0,
            vehicle_utility: 0.1,
            server_utility: 0.1,
        }
    }

    #[test]
    fn checker_flags() {
        let w = build_scenario(&ScenarioConfig::default()).unwrap();
        let ok = vec![decision(&w, 0, 0, Destination::Server(0))];
        assert!(check_constraints(&w, &ok, 0).is_ok(), "{}", check_constraints(&w, &ok, 0));

        let dup = vec![
            decision(&w, 0, 0, Destination::Server(0)),
            decision(&w, 0, 0, Destination::Server(1)),
        ];
        assert!(check_constraints(&w, &dup, 0).violated(Constraint::C2));

        let mut big = decision(&w, 1, 1, Destination::Server(2));
        big.alloc = w.servers[2].f_max * 1.5;
        big.price = 1e-12;
        assert!(check_constraints(&w, &[big], 0).violated(Constraint::C8));

        let mut pricey = decision(&w, 2, 2, Destination::Server(3));
        pricey.price = 1e-8;
        pricey.alloc = 3e9; // 30 $ > 20 $
        assert!(check_constraints(&w, &[pricey], 0).violated(Constraint::C12));

        let mut late = decision(&w, 3, 3, Destination::Server(3));
        late.total_delay = 2.5;
        late.upload_delay = 11.0;
        let rep = check_constraints(&w, &[late], 0);
        assert!(rep.violated(Constraint::C4) && rep.violated(Constraint::C5));

        let n = w.servers[4].n_core;
        let crowd: Vec<_> = (0..=n as u64)
            .map(|k| {
                let mut d = decision(&w, 10 + k, k as usize, Destination::Server(4));
                d.alloc = 1.0;
                d
            })
            .collect();
        assert!(check_constraints(&w, &crowd, 0).violated(Constraint::C9));

        let two = vec![
            decision(&w, 20, 5, Destination::Local),
            decision(&w, 21, 5, Destination::Local),
        ];
        let rep = check_constraints(&w, &two, 0);
        assert!(rep.violated(Constraint::C3) && rep.violated(Constraint::C9));
    }
}
