use nalgebra::DMatrix;
use ucmec::energetics::Evaluator;
use ucmec::optimizer::{
    admm_solve, allocation_floor, build_rlt_constraints, update_local, AdmmOutcome, DecisionSet,
};
use ucmec::scenario::{generate_scenario, Scenario};
use ucmec::{AdmmConfig, SystemConfig};

fn solve(m: usize, n: usize, seed: u64) -> (Scenario, AdmmOutcome) {
    let cfg = SystemConfig {
        num_aps: m,
        num_users: n,
        ..SystemConfig::default()
    };
    let s = generate_scenario(&cfg, seed).unwrap();
    let out = admm_solve(&s, &AdmmConfig::default()).unwrap();
    (s, out)
}

#[test]
fn single_ap_converges_in_one_step() {
    let (_, out) = solve(1, 3, 4);
    assert!(out.converged);
    assert_eq!(out.state.t, 1);
    assert!(out.allocation.a.iter().all(|&x| x == 1.0));
    assert_eq!(out.evaluation.energy.consensus_total(), 0.0);
    assert_eq!(out.evaluation.delay.consensus, 0.0);
}

#[test]
fn reported_evaluation_matches_the_allocation() {
    for seed in 0..3 {
        let (s, out) = solve(3, 4, seed);
        let again = Evaluator::new(&s).unwrap().evaluate(&out.allocation).unwrap();
        assert_eq!(again, out.evaluation, "seed {seed}");
        let beta = allocation_floor(&s, &AdmmConfig::default());
        assert_eq!(DecisionSet::from_allocation(&out.allocation, &s, beta), out.decision);
    }
}

#[test]
fn solution_is_feasible() {
    for seed in 0..4 {
        let (s, out) = solve(4, 5, seed);
        let alloc = &out.allocation;
        assert!(alloc.capacity_violation(&s) <= 0.0, "seed {seed}");
        assert!(out.evaluation.late_users(&s, 1e-9).is_empty(), "seed {seed}");
        for n in 0..5 {
            assert!((alloc.a.column(n).sum() - 1.0).abs() <= 1e-12);
        }
        for (x, (b, c)) in alloc.a.iter().zip(alloc.b.iter().zip(alloc.c.iter())) {
            assert!(*x >= 0.0);
            if *x == 0.0 {
                assert_eq!((*b, *c), (0.0, 0.0));
            } else {
                assert!(*b > 0.0 && *c > 0.0);
            }
        }
    }
}

#[test]
fn decision_satisfies_the_relaxation() {
    let (s, out) = solve(3, 4, 8);
    let ev = Evaluator::new(&s).unwrap();
    let sys = build_rlt_constraints(&s, &ev.sinr, out.decision.beta);
    let (worst, row) = sys.max_violation(&out.decision);
    assert!(worst <= 1e-9, "{worst} at {row:?}");
}

#[test]
fn traces_have_one_entry_per_iteration() {
    let (_, out) = solve(3, 3, 2);
    let st = &out.state;
    assert!(st.t >= 1);
    assert_eq!(st.residuals.len(), st.t);
    assert_eq!(st.objectives.len(), st.t);
    assert_eq!(st.wall_times.len(), st.t);
    assert!(st.wall_times.windows(2).all(|w| w[0] <= w[1]));
    if out.converged {
        assert!(*st.residuals.last().unwrap() < AdmmConfig::default().gamma_stop);
    }
    let csv = st.trace_csv();
    assert_eq!(csv.lines().count(), st.t + 1);
}

#[test]
fn solving_is_deterministic() {
    let (_, a) = solve(3, 4, 6);
    let (_, b) = solve(3, 4, 6);
    assert_eq!(a.allocation, b.allocation);
    assert_eq!(a.state.residuals, b.state.residuals);
}

#[test]
fn local_update_projects_columns_onto_the_simplex() {
    let a = DMatrix::from_row_slice(3, 2, &[0.9, 0.1, 0.4, 0.2, -0.3, 0.7]);
    let lambda = DMatrix::from_row_slice(3, 2, &[5.0, -5.0, 0.0, 10.0, 0.0, 0.0]);
    let a_hat = update_local(&a, &lambda, 10.0);
    for n in 0..2 {
        let col = a_hat.column(n);
        assert!((col.sum() - 1.0).abs() <= 1e-12);
        assert!(col.iter().all(|&x| x >= 0.0));
    }
    // v = (1.4, 0.4, -0.3) projects to (1, 0, 0).
    assert!((a_hat[(0, 0)] - 1.0).abs() <= 1e-12);
}

#[test]
fn bad_admm_settings_are_rejected() {
    let cfg = SystemConfig {
        num_aps: 2,
        num_users: 2,
        ..SystemConfig::default()
    };
    let s = generate_scenario(&cfg, 0).unwrap();
    for admm in [
        AdmmConfig {
            penalty_q: 0.0,
            ..AdmmConfig::default()
        },
        AdmmConfig {
            gamma_stop: -1.0,
            ..AdmmConfig::default()
        },
    ] {
        assert!(admm_solve(&s, &admm).is_err());
    }
}
