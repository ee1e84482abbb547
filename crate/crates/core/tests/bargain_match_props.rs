use proptest::prelude::*;
use vecsim::bargaining::{negotiate, price_bounds, raw_partitions};
use vecsim::matching::{run_matching, verify_stability, Capacity, PairValue, PreferenceLists};
use vecsim::utility::{satisfaction, ServerTerms, VehicleTerms};
use vecsim::verify::{deal_violation, InstanceSampler};

fn server_u(s: &ServerTerms, c: f64, f: f64, c_req: f64) -> (f64, f64) {
    let revenue = s.weight * c * f / (s.price_ceiling * s.f_max);
    let cost = (1.0 - s.weight) * s.alpha * f.powf(s.tau - 1.0) * c_req / s.energy_budget;
    (revenue - cost, revenue)
}

fn vehicle_u(v: &VehicleTerms, psi: f64, c: f64, f: f64) -> (f64, f64) {
    let gain = v.weight * psi;
    (gain - (1.0 - v.weight) * c * f / v.payment_budget, gain)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bounds_are_break_even_roots(
        w_i in 0.1..0.9f64, w_j in 0.1..0.9f64, f in 1e8..1e10f64, c_req in 1e8..1.5e10f64,
        tmax in 0.1..5.0f64, frac in 0.0..0.99f64, fmax in 2e9..1e10f64,
    ) {
        let v = VehicleTerms { weight: w_i, energy_budget: 3000.0, payment_budget: 20.0 };
        let s = ServerTerms { weight: w_j, price_ceiling: 1e-9, f_max: fmax, energy_budget: 3600.0 * fmax / 1e9, alpha: 7.8e-27, tau: 3.0 };
        let t = frac * tmax;
        let b = price_bounds(f, c_req, t, tmax, &v, &s).unwrap();
        let (uj, scale_j) = server_u(&s, b.c_min, f, c_req);
        prop_assert!(uj.abs() <= 1e-9 * scale_j);
        let psi = satisfaction(t, tmax).unwrap();
        let (ui, scale_i) = vehicle_u(&v, psi, b.c_max, f);
        prop_assert!(ui.abs() <= 1e-9 * scale_i.max(f64::MIN_POSITIVE));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn every_deal_is_sound(seed in 0u64..1_000_000) {
        let mut s = InstanceSampler::new(seed);
        let bargain = s.bargain().clone();
        for _ in 0..10 {
            let case = s.case();
            if let Ok(d) = negotiate(&case.negotiation(&bargain)) {
                prop_assert!(d.alloc <= case.f_available);
                prop_assert_eq!(deal_violation(&case, &d, 1e-9), None);
            }
        }
    }

    #[test]
    fn vehicle_proposal_shares_sum_to_one(ei in 0.0..0.999f64, ej in 0.0..0.999f64, tb in 1u32..500) {
        let p = raw_partitions(ei, ej, tb);
        prop_assert!((p.di_i + p.dj_i - 1.0).abs() <= 1e-12);
    }
}

/// Patience should not hurt the proposer. Violations of the raw formula
/// are reported rather than failed.
#[test]
fn proposer_share_monotone_in_patience() {
    let mut violations = 0;
    let mut checked = 0;
    for tb in [1u32, 2, 3, 5, 10, 50, 200] {
        for j in 0..20 {
            let ej = (j as f64 + 0.5) / 20.0;
            let mut prev = f64::NEG_INFINITY;
            for i in 0..100 {
                let ei = (i as f64 + 0.5) / 100.0;
                let d = raw_partitions(ei, ej, tb).di_i;
                checked += 1;
                if d < prev - 1e-12 {
                    violations += 1;
                }
                prev = d;
            }
        }
    }
    println!("proposer share monotonicity: {violations} decreases in {checked} grid steps");
}

fn pair_value() -> impl Strategy<Value = Option<PairValue>> {
    prop::option::weighted(
        0.7,
        (-0.2..1.0f64, -0.2..1.0f64, 1.0..4.0f64).prop_map(|(a, b, f)| PairValue {
            task_value: a,
            server_value: b,
            alloc: f,
        }),
    )
}

/// Arbitrary budgets, which may bind before cores run out.
fn instance() -> impl Strategy<Value = (Vec<Vec<Option<PairValue>>>, Vec<Capacity>)> {
    (1usize..9, 1usize..5).prop_flat_map(|(nt, ns)| {
        let cap = (0usize..4, 0.0..12.0f64).prop_map(|(cores, budget)| Capacity { cores, budget });
        (
            prop::collection::vec(prop::collection::vec(pair_value(), ns), nt),
            prop::collection::vec(cap, ns),
        )
    })
}

/// Budgets that always cover every idle core, as in the simulator where
/// each offer is at most one core's share.
fn slack_instance() -> impl Strategy<Value = (Vec<Vec<Option<PairValue>>>, Vec<Capacity>)> {
    (1usize..9, 1usize..5).prop_flat_map(|(nt, ns)| {
        let cap = (0usize..4).prop_map(|cores| Capacity { cores, budget: 4.0 * cores as f64 });
        (
            prop::collection::vec(prop::collection::vec(pair_value(), ns), nt),
            prop::collection::vec(cap, ns),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn matching_properties((values, caps) in instance()) {
        let p = PreferenceLists::build(values, caps);
        let m = run_matching(&p);
        prop_assert!(m.respects_capacity(&p));
        for (j, ks) in m.server_tasks.iter().enumerate() {
            let load: f64 = ks.iter().map(|&k| p.alloc(k, j)).sum();
            prop_assert!(ks.len() <= p.capacity[j].cores);
            prop_assert!(load <= p.capacity[j].budget);
            for &k in ks {
                prop_assert_eq!(m.task_server[k], Some(j));
                prop_assert!(p.acceptable(k, j));
            }
        }
        for &k in &m.rejected {
            prop_assert!(m.task_server[k].is_none() && !p.task_prefs[k].is_empty());
        }
        if m.repairs == 0 {
            let list_total: usize = p.task_prefs.iter().map(Vec::len).sum();
            prop_assert!(m.proposals <= list_total);
            prop_assert!(verify_stability(&m, &p).is_stable());
        }
        prop_assert_eq!(run_matching(&p), m);
    }

    #[test]
    fn stable_when_budget_is_slack((values, caps) in slack_instance()) {
        let p = PreferenceLists::build(values, caps);
        let m = run_matching(&p);
        let list_total: usize = p.task_prefs.iter().map(Vec::len).sum();
        prop_assert_eq!(m.repairs, 0);
        prop_assert!(m.proposals <= list_total);
        prop_assert!(m.proposals <= p.n_tasks() * p.n_servers());
        prop_assert!(verify_stability(&m, &p).is_stable());
    }
}
