use ucmec::baselines::{
    random_leader_probability, run_scheme, solve_bcdo, solve_bcdo_from, solve_proposed, solve_ro_with, SchemeId,
};
use ucmec::energetics::Evaluator;
use ucmec::scenario::generate_scenario;
use ucmec::{AdmmConfig, SystemConfig};

fn config(m: usize, n: usize) -> SystemConfig {
    SystemConfig {
        num_aps: m,
        num_users: n,
        ..SystemConfig::default()
    }
}

#[test]
fn bcdo_objective_never_increases() {
    for seed in 0..4 {
        let s = generate_scenario(&config(4, 5), seed).unwrap();
        let out = solve_bcdo(&s, &AdmmConfig::default()).unwrap();
        assert!(!out.objective_history.is_empty());
        for w in out.objective_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "seed {seed}: {:?}", out.objective_history);
        }
    }
}

#[test]
fn bcdo_started_at_proposed_stops_quickly() {
    let admm = AdmmConfig::default();
    for seed in [1, 7] {
        let s = generate_scenario(&config(3, 4), seed).unwrap();
        let proposed = solve_proposed(&s, &admm).unwrap();
        let ev = Evaluator::new(&s).unwrap();
        let bcdo = solve_bcdo_from(&ev, &admm, &proposed.allocation).unwrap();
        assert!(bcdo.iterations <= 2, "seed {seed}: {} cycles", bcdo.iterations);
        assert!(bcdo.evaluation.energy.total <= proposed.evaluation.energy.total * (1.0 + 1e-9));
    }
}

#[test]
fn ro_with_reputation_probabilities_is_proposed() {
    let admm = AdmmConfig::default();
    let s = generate_scenario(&config(3, 4), 5).unwrap();
    let proposed = solve_proposed(&s, &admm).unwrap();
    let ro = solve_ro_with(&s, &admm, Some(proposed.evaluation.profile.leader_probability.clone())).unwrap();
    assert_eq!(ro.allocation, proposed.allocation);
    let (x, y) = (ro.evaluation.energy.total, proposed.evaluation.energy.total);
    assert!((x - y).abs() <= 1e-12 * y, "{x} vs {y}");
    let plain = solve_ro_with(&s, &admm, None).unwrap();
    assert_eq!(plain.evaluation.energy.total, proposed.evaluation.energy.total);
}

#[test]
fn random_leader_probabilities_are_reproducible() {
    let p = random_leader_probability(3, 6);
    assert_eq!(p, random_leader_probability(3, 6));
    assert_ne!(p, random_leader_probability(4, 6));
    assert!(p.iter().all(|&x| x > 0.0 && x <= 1.0));
}

#[test]
fn ro_runs_a_random_timeout_election() {
    let s = generate_scenario(&config(4, 4), 9).unwrap();
    let ro = run_scheme(SchemeId::Ro, &s, &AdmmConfig::default()).unwrap();
    let trace = ro.trace.expect("RO simulates its election");
    assert!(trace.elections >= 1);
    assert!(trace.leader < 4);
}

#[test]
fn single_ap_schemes_serve_everyone_locally() {
    let s = generate_scenario(&config(1, 3), 3).unwrap();
    for id in SchemeId::ALL {
        let out = run_scheme(id, &s, &AdmmConfig::default()).unwrap();
        assert!(out.allocation.a.iter().all(|&x| x == 1.0), "{id}");
        assert_eq!(out.evaluation.energy.consensus_total(), 0.0, "{id}");
    }
}

#[test]
fn so_serves_each_user_from_one_ap() {
    for seed in 0..3 {
        let s = generate_scenario(&config(4, 6), seed).unwrap();
        let so = run_scheme(SchemeId::So, &s, &AdmmConfig::default()).unwrap();
        for n in 0..6 {
            let col = so.allocation.a.column(n);
            assert_eq!(col.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|&&x| x == 0.0).count(), 3);
        }
    }
}

#[test]
fn oo_has_the_lowest_offloading_energy_it_can_find() {
    let admm = AdmmConfig::default();
    for seed in 0..3 {
        let s = generate_scenario(&config(3, 4), seed).unwrap();
        let oo = run_scheme(SchemeId::Oo, &s, &admm).unwrap();
        let p = run_scheme(SchemeId::Proposed, &s, &admm).unwrap();
        assert!(
            oo.evaluation.energy.offloading() <= p.evaluation.energy.offloading() * (1.0 + 1e-6),
            "seed {seed}"
        );
        assert!(p.evaluation.energy.total <= oo.evaluation.energy.total * (1.0 + 1e-6), "seed {seed}");
    }
}

#[test]
fn scheme_names_round_trip() {
    for id in SchemeId::ALL {
        assert_eq!(id.as_str().parse::<SchemeId>().unwrap(), id);
    }
    assert!("PROPOSAL".parse::<SchemeId>().is_err());
}
