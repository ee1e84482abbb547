//! Many-to-one task/server matching by task-proposing deferred acceptance,
//! with blocking-pair and weak-Pareto checkers.
//!
//! Tasks and servers are addressed by their position in the instance; the
//! caller keeps the mapping back to task ids and server ids.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Predicted outcome of one (task, server) negotiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairValue {
    /// Task-side preference (vehicle utility).
    pub task_value: f64,
    /// Server-side preference (server utility).
    pub server_value: f64,
    pub alloc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    /// Idle cores this slot.
    pub cores: usize,
    /// Resource that can still be handed out this slot.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceLists {
    pub values: Vec<Vec<Option<PairValue>>>,
    pub capacity: Vec<Capacity>,
    /// Per task: acceptable servers, best first.
    pub task_prefs: Vec<Vec<usize>>,
    /// Per server: acceptable tasks, best first.
    pub server_prefs: Vec<Vec<usize>>,
    server_rank: Vec<Vec<usize>>,
    task_rank: Vec<Vec<usize>>,
}

const UNRANKED: usize = usize::MAX;

fn desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

impl PreferenceLists {
    /// Build both sides' lists. A pair is acceptable when it has a value,
    /// both preferences are nonnegative, the server has an idle core and the
    /// allocation fits its budget. Ties go to the lower index.
    pub fn build(values: Vec<Vec<Option<PairValue>>>, capacity: Vec<Capacity>) -> Self {
        let n_tasks = values.len();
        let n_servers = capacity.len();
        let ok = |k: usize, j: usize| -> Option<PairValue> {
            let v = values[k].get(j).copied().flatten()?;
            let cap = capacity[j];
            (v.task_value >= 0.0
                && v.server_value >= 0.0
                && cap.cores > 0
                && v.alloc <= cap.budget)
                .then_some(v)
        };
        let mut task_prefs = Vec::with_capacity(n_tasks);
        #[allow(clippy::needless_range_loop)]
        for k in 0..n_tasks {
            let mut js: Vec<usize> = (0..n_servers).filter(|&j| ok(k, j).is_some()).collect();
            js.sort_by(|&a, &b| {
                desc(
                    values[k][a].map_or(0.0, |v| v.task_value),
                    values[k][b].map_or(0.0, |v| v.task_value),
                )
                .then(a.cmp(&b))
            });
            task_prefs.push(js);
        }
        let mut server_prefs = Vec::with_capacity(n_servers);
        #[allow(clippy::needless_range_loop)]
        for j in 0..n_servers {
            let mut ks: Vec<usize> = (0..n_tasks).filter(|&k| ok(k, j).is_some()).collect();
            ks.sort_by(|&a, &b| {
                desc(
                    values[a][j].map_or(0.0, |v| v.server_value),
                    values[b][j].map_or(0.0, |v| v.server_value),
                )
                .then(a.cmp(&b))
            });
            server_prefs.push(ks);
        }
        let mut server_rank = vec![vec![UNRANKED; n_tasks]; n_servers];
        for (j, ks) in server_prefs.iter().enumerate() {
            for (r, &k) in ks.iter().enumerate() {
                server_rank[j][k] = r;
            }
        }
        let mut task_rank = vec![vec![UNRANKED; n_servers]; n_tasks];
        for (k, js) in task_prefs.iter().enumerate() {
            for (r, &j) in js.iter().enumerate() {
                task_rank[k][j] = r;
            }
        }
        PreferenceLists {
            values,
            capacity,
            task_prefs,
            server_prefs,
            server_rank,
            task_rank,
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.task_prefs.len()
    }

    pub fn n_servers(&self) -> usize {
        self.server_prefs.len()
    }

    pub fn alloc(&self, k: usize, j: usize) -> f64 {
        self.values[k][j].map_or(f64::INFINITY, |v| v.alloc)
    }

    pub fn acceptable(&self, k: usize, j: usize) -> bool {
        self.task_rank[k][j] != UNRANKED
    }

    /// Position of `j` in task `k`'s list (lower is better).
    pub fn task_rank(&self, k: usize, j: usize) -> Option<usize> {
        Some(self.task_rank[k][j]).filter(|&r| r != UNRANKED)
    }

    pub fn server_rank(&self, j: usize, k: usize) -> Option<usize> {
        Some(self.server_rank[j][k]).filter(|&r| r != UNRANKED)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    pub task_server: Vec<Option<usize>>,
    pub server_tasks: Vec<Vec<usize>>,
    /// Tasks rejected by every acceptable server, in index order.
    pub rejected: Vec<usize>,
    /// Proposals made in deferred-acceptance rounds.
    pub proposals: usize,
    pub rounds: usize,
    /// Blocking pairs resolved after deferred acceptance settled.
    pub repairs: usize,
}

impl Matching {
    pub fn empty(n_tasks: usize, n_servers: usize) -> Self {
        Matching {
            task_server: vec![None; n_tasks],
            server_tasks: vec![Vec::new(); n_servers],
            rejected: Vec::new(),
            proposals: 0,
            rounds: 0,
            repairs: 0,
        }
    }

    /// Build a matching from a per-task assignment.
    pub fn from_assignment(assign: &[Option<usize>], n_servers: usize) -> Self {
        let mut m = Matching::empty(assign.len(), n_servers);
        for (k, &a) in assign.iter().enumerate() {
            m.task_server[k] = a;
            if let Some(j) = a {
                m.server_tasks[j].push(k);
            }
        }
        m
    }

    pub fn load(&self, prefs: &PreferenceLists, j: usize) -> f64 {
        self.server_tasks[j].iter().map(|&k| prefs.alloc(k, j)).sum()
    }

    /// Core and budget limits hold and both sides of the map agree.
    pub fn respects_capacity(&self, prefs: &PreferenceLists) -> bool {
        self.server_tasks.iter().enumerate().all(|(j, ks)| {
            let cap = prefs.capacity[j];
            ks.len() <= cap.cores
                && self.load(prefs, j) <= cap.budget * (1.0 + 1e-12)
                && ks.iter().all(|&k| self.task_server[k] == Some(j))
        }) && self
            .task_server
            .iter()
            .enumerate()
            .all(|(k, a)| a.is_none_or(|j| self.server_tasks[j].contains(&k)))
    }
}

/// Server admission rule. `Reversed` keeps the least preferred tasks and
/// exists only to exercise the checkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Preferred,
    Reversed,
}

pub fn run_matching(prefs: &PreferenceLists) -> Matching {
    run_matching_with(prefs, Admission::Preferred, None)
}

pub fn run_matching_traced(prefs: &PreferenceLists, trace: &mut String) -> Matching {
    run_matching_with(prefs, Admission::Preferred, Some(trace))
}

pub fn run_matching_with(
    prefs: &PreferenceLists,
    admission: Admission,
    mut trace: Option<&mut String>,
) -> Matching {
    let n_tasks = prefs.n_tasks();
    let mut m = Matching::empty(n_tasks, prefs.n_servers());
    let mut next = vec![0usize; n_tasks];
    let free: Vec<usize> = (0..n_tasks).filter(|&k| !prefs.task_prefs[k].is_empty()).collect();
    propose(prefs, admission, &mut m, &mut next, free, trace.as_deref_mut());

    // Greedy admission under a resource budget is not substitutable: a task
    // turned away for lack of budget can fit again once the task that
    // crowded it out is displaced. Let such tasks move up until no blocking
    // pair remains.
    if admission == Admission::Preferred {
        let limit = 4 * (prefs.task_prefs.iter().map(Vec::len).sum::<usize>() + 1);
        while m.repairs < limit {
            let Some(&(k, j)) = verify_stability(&m, prefs).blocking_pairs.first() else {
                break;
            };
            m.repairs += 1;
            if let Some(t) = trace.as_deref_mut() {
                let _ = writeln!(t, "  repair: task {k} moves to server {j}");
            }
            if let Some(old) = m.task_server[k] {
                m.server_tasks[old].retain(|&x| x != k);
            }
            next[k] = prefs.task_rank[k][j] + 1;
            let evicted = admit(prefs, admission, &mut m, j, vec![k]);
            propose(prefs, admission, &mut m, &mut next, evicted, trace.as_deref_mut());
        }
    }

    m.rejected = (0..n_tasks)
        .filter(|&k| m.task_server[k].is_none() && !prefs.task_prefs[k].is_empty())
        .collect();
    for ks in &mut m.server_tasks {
        ks.sort_unstable();
    }
    m
}

/// Deferred-acceptance rounds until every free task is held or exhausted.
fn propose(
    prefs: &PreferenceLists,
    admission: Admission,
    m: &mut Matching,
    next: &mut [usize],
    mut free: Vec<usize>,
    mut trace: Option<&mut String>,
) {
    while !free.is_empty() {
        m.rounds += 1;
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); prefs.n_servers()];
        for &k in &free {
            if let Some(&j) = prefs.task_prefs[k].get(next[k]) {
                next[k] += 1;
                m.proposals += 1;
                incoming[j].push(k);
            }
        }
        let mut still_free = Vec::new();
        for (j, new) in incoming.into_iter().enumerate() {
            if new.is_empty() {
                continue;
            }
            still_free.extend(admit(prefs, admission, m, j, new));
            if let Some(t) = trace.as_deref_mut() {
                let _ = writeln!(t, "  round {} server {j} holds {:?}", m.rounds, m.server_tasks[j]);
            }
        }
        still_free.sort_unstable();
        free = still_free;
    }
}

/// Server `j` picks greedily from its current tasks plus `new`; returns the
/// tasks it turns away.
fn admit(
    prefs: &PreferenceLists,
    admission: Admission,
    m: &mut Matching,
    j: usize,
    new: Vec<usize>,
) -> Vec<usize> {
    let mut pool: Vec<usize> = m.server_tasks[j].iter().copied().chain(new).collect();
    pool.sort_by_key(|&k| prefs.server_rank[j][k]);
    if admission == Admission::Reversed {
        pool.reverse();
    }
    let cap = prefs.capacity[j];
    let mut kept = Vec::new();
    let mut turned_away = Vec::new();
    let mut used = 0.0;
    for k in pool {
        let f = prefs.alloc(k, j);
        if kept.len() < cap.cores && used + f <= cap.budget {
            used += f;
            kept.push(k);
            m.task_server[k] = Some(j);
        } else {
            m.task_server[k] = None;
            turned_away.push(k);
        }
    }
    m.server_tasks[j] = kept;
    turned_away
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StabilityReport {
    /// `(task, server)` pairs that would both rather be together.
    pub blocking_pairs: Vec<(usize, usize)>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.blocking_pairs.is_empty()
    }
}

/// Could server `j` take task `k`, either in a free slot or by dropping a
/// task it likes less?
fn server_would_admit(m: &Matching, prefs: &PreferenceLists, j: usize, k: usize) -> bool {
    let cap = prefs.capacity[j];
    let held = &m.server_tasks[j];
    let load = m.load(prefs, j);
    let f = prefs.alloc(k, j);
    if held.len() < cap.cores && load + f <= cap.budget {
        return true;
    }
    let rk = prefs.server_rank[j][k];
    held.iter()
        .any(|&o| prefs.server_rank[j][o] > rk && load - prefs.alloc(o, j) + f <= cap.budget)
}

pub fn verify_stability(m: &Matching, prefs: &PreferenceLists) -> StabilityReport {
    let mut rep = StabilityReport::default();
    for k in 0..prefs.n_tasks() {
        let current = m.task_server[k].map_or(UNRANKED, |j| prefs.task_rank[k][j]);
        for &j in &prefs.task_prefs[k] {
            if prefs.task_rank[k][j] >= current {
                break;
            }
            if server_would_admit(m, prefs, j, k) {
                rep.blocking_pairs.push((k, j));
            }
        }
    }
    rep
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoReport {
    /// An assignment that leaves every task strictly better off, if found.
    pub dominating: Option<Vec<Option<usize>>>,
    pub explored: usize,
}

impl ParetoReport {
    pub fn is_weak_pareto(&self) -> bool {
        self.dominating.is_none()
    }
}

pub const PARETO_MAX_TASKS: usize = 6;
pub const PARETO_MAX_SERVERS: usize = 3;

/// Exhaustive search for a feasible assignment that improves every task.
/// Tasks with no acceptable server take no part in the comparison.
pub fn verify_weak_pareto(m: &Matching, prefs: &PreferenceLists) -> Result<ParetoReport> {
    let (nt, ns) = (prefs.n_tasks(), prefs.n_servers());
    if nt > PARETO_MAX_TASKS || ns > PARETO_MAX_SERVERS {
        return Err(Error::TooLarge {
            tasks: nt,
            servers: ns,
        });
    }
    let active: Vec<usize> = (0..nt).filter(|&k| !prefs.task_prefs[k].is_empty()).collect();
    let mut rep = ParetoReport::default();
    if active.is_empty() {
        return Ok(rep);
    }
    // strictly better options per active task
    let mut better: Vec<Vec<usize>> = Vec::with_capacity(active.len());
    for &k in &active {
        let cur = m.task_server[k].map_or(UNRANKED, |j| prefs.task_rank[k][j]);
        let opts: Vec<usize> = prefs.task_prefs[k]
            .iter()
            .copied()
            .filter(|&j| prefs.task_rank[k][j] < cur)
            .collect();
        if opts.is_empty() {
            return Ok(rep);
        }
        better.push(opts);
    }
    let mut cores = vec![0usize; ns];
    let mut load = vec![0.0f64; ns];
    let mut assign: Vec<Option<usize>> = vec![None; nt];
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        i: usize,
        active: &[usize],
        better: &[Vec<usize>],
        prefs: &PreferenceLists,
        cores: &mut [usize],
        load: &mut [f64],
        assign: &mut [Option<usize>],
        rep: &mut ParetoReport,
    ) -> bool {
        rep.explored += 1;
        if i == active.len() {
            rep.dominating = Some(assign.to_vec());
            return true;
        }
        let k = active[i];
        for &j in &better[i] {
            let f = prefs.alloc(k, j);
            let cap = prefs.capacity[j];
            if cores[j] < cap.cores && load[j] + f <= cap.budget {
                cores[j] += 1;
                load[j] += f;
                assign[k] = Some(j);
                if dfs(i + 1, active, better, prefs, cores, load, assign, rep) {
                    return true;
                }
                assign[k] = None;
                cores[j] -= 1;
                load[j] -= f;
            }
        }
        false
    }
    dfs(0, &active, &better, prefs, &mut cores, &mut load, &mut assign, &mut rep);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(t: f64, s: f64, f: f64) -> Option<PairValue> {
        Some(PairValue {
            task_value: t,
            server_value: s,
            alloc: f,
        })
    }

    fn cap(cores: usize) -> Capacity {
        Capacity {
            cores,
            budget: 1e12,
        }
    }

    fn budget(cores: usize, budget: f64) -> Capacity {
        Capacity { cores, budget }
    }

    fn stable_assignments(p: &PreferenceLists) -> usize {
        let opts: Vec<Vec<Option<usize>>> = p
            .task_prefs
            .iter()
            .map(|l| std::iter::once(None).chain(l.iter().map(|&j| Some(j))).collect())
            .collect();
        let total: usize = opts.iter().map(Vec::len).product();
        (0..total)
            .filter(|&code| {
                let mut c = code;
                let a: Vec<Option<usize>> = opts
                    .iter()
                    .map(|o| {
                        let x = o[c % o.len()];
                        c /= o.len();
                        x
                    })
                    .collect();
                let m = Matching::from_assignment(&a, p.n_servers());
                m.respects_capacity(p) && verify_stability(&m, p).is_stable()
            })
            .count()
    }

    /// Server 1 turns task 2 away while task 4 holds its budget; task 5
    /// later displaces task 4 and task 2 would fit again.
    #[test]
    fn budget_freed_by_displacement_is_reoffered() {
        let values = vec![
            vec![None, pv(0.0, 0.88, 2.64)],
            vec![pv(0.0, 0.69, 1.0), pv(0.73, 0.0, 1.77)],
            vec![pv(0.0, 0.23, 1.0), None],
            vec![None, pv(0.0, 0.04, 4.0)],
            vec![pv(0.55, 0.0, 1.0), pv(0.0, 0.33, 2.69)],
            vec![pv(0.0, 0.3, 1.0), None],
        ];
        let p = PreferenceLists::build(values, vec![budget(1, 7.33), budget(3, 7.78)]);
        let m = run_matching(&p);
        assert!(m.repairs > 0);
        assert!(m.respects_capacity(&p));
        assert!(verify_stability(&m, &p).is_stable());
        assert_eq!(m.task_server[1], Some(1));
    }

    /// With resource budgets a stable matching need not exist at all.
    #[test]
    fn budget_can_rule_out_stability() {
        let values = vec![
            vec![pv(0.1, 0.9, 1.2), pv(0.3, 0.2, 3.9)],
            vec![pv(0.8, 0.1, 1.9), pv(0.1, 0.95, 1.9)],
            vec![pv(0.5, 0.7, 2.5), None],
        ];
        let p = PreferenceLists::build(values, vec![budget(3, 3.5), budget(3, 4.0)]);
        assert_eq!(stable_assignments(&p), 0);
        let m = run_matching(&p);
        assert!(m.respects_capacity(&p));
        assert_eq!(run_matching(&p), m);
    }

    #[test]
    fn single_pair() {
        let p = PreferenceLists::build(vec![vec![pv(0.5, 0.2, 1.0)]], vec![cap(1)]);
        assert_eq!(p.task_prefs, vec![vec![0]]);
        assert_eq!(p.server_prefs, vec![vec![0]]);
        let m = run_matching(&p);
        assert_eq!(m.task_server, vec![Some(0)]);
        assert!(verify_stability(&m, &p).is_stable());
        assert!(verify_weak_pareto(&m, &p).unwrap().is_weak_pareto());
    }

    #[test]
    fn capacity_one_server_prefers() {
        let p = PreferenceLists::build(
            vec![vec![pv(0.9, 0.1, 1.0)], vec![pv(0.3, 0.4, 1.0)]],
            vec![cap(1)],
        );
        let m = run_matching(&p);
        assert_eq!(m.task_server, vec![None, Some(0)]);
        assert_eq!(m.rejected, vec![0]);
    }

    #[test]
    fn busy_server_excluded() {
        let p = PreferenceLists::build(
            vec![vec![pv(0.9, 0.1, 1.0), pv(0.5, 0.1, 1.0)]],
            vec![cap(0), cap(2)],
        );
        assert_eq!(p.task_prefs, vec![vec![1]]);
        assert!(p.server_prefs[0].is_empty());
    }

    #[test]
    fn negative_values_excluded_and_ties_by_index() {
        let p = PreferenceLists::build(
            vec![
                vec![pv(0.5, 0.3, 1.0), pv(0.5, -0.1, 1.0), pv(0.5, 0.3, 1.0)],
                vec![pv(0.2, 0.3, 1.0), None, pv(-0.2, 0.3, 1.0)],
            ],
            vec![cap(1), cap(1), cap(1)],
        );
        assert_eq!(p.task_prefs, vec![vec![0, 2], vec![0]]);
        assert_eq!(p.server_prefs[0], vec![0, 1]);
    }

    #[test]
    fn empty_instance() {
        let p = PreferenceLists::build(vec![], vec![]);
        let m = run_matching(&p);
        assert!(verify_stability(&m, &p).is_stable());
        assert!(verify_weak_pareto(&m, &p).unwrap().is_weak_pareto());
    }

    #[test]
    fn hand_built_blocking_pair() {
        // both tasks prefer server 0, which prefers task 1
        let p = PreferenceLists::build(
            vec![
                vec![pv(0.9, 0.1, 1.0), pv(0.5, 0.5, 1.0)],
                vec![pv(0.8, 0.7, 1.0), pv(0.4, 0.5, 1.0)],
            ],
            vec![cap(1), cap(1)],
        );
        let good = run_matching(&p);
        assert_eq!(good.task_server, vec![Some(1), Some(0)]);
        assert!(verify_stability(&good, &p).is_stable());
        let swapped = Matching::from_assignment(&[Some(0), Some(1)], 2);
        let rep = verify_stability(&swapped, &p);
        assert_eq!(rep.blocking_pairs, vec![(1, 0)]);
    }

    #[test]
    fn corrupted_matching_dominated() {
        let p = PreferenceLists::build(
            vec![vec![pv(0.9, 0.1, 1.0), pv(0.5, 0.5, 1.0)]],
            vec![cap(1), cap(1)],
        );
        let worse = Matching::from_assignment(&[Some(1)], 2);
        let rep = verify_weak_pareto(&worse, &p).unwrap();
        assert_eq!(rep.dominating, Some(vec![Some(0)]));
    }

    #[test]
    fn enumeration_guard() {
        let p = PreferenceLists::build(vec![vec![None; 4]; 7], vec![cap(1); 4]);
        let m = Matching::empty(7, 4);
        assert!(matches!(verify_weak_pareto(&m, &p), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn reversed_admission_is_caught() {
        let p = PreferenceLists::build(
            vec![vec![pv(0.9, 0.9, 1.0)], vec![pv(0.9, 0.1, 1.0)]],
            vec![cap(1)],
        );
        let bad = run_matching_with(&p, Admission::Reversed, None);
        assert!(!verify_stability(&bad, &p).is_stable());
    }

    #[test]
    fn trace_lines() {
        let p = PreferenceLists::build(vec![vec![pv(0.5, 0.2, 1.0)]], vec![cap(1)]);
        let mut t = String::new();
        run_matching_traced(&p, &mut t);
        assert!(t.contains("server 0 holds [0]"));
    }
}
