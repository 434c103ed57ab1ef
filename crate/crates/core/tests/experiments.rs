use antsel::capacity::PowerControl;
use antsel::experiments::*;

fn small(control: PowerControl) -> ScenarioConfig {
    let mut c = ScenarioConfig { power_control: control, user_counts: vec![3], replication: 4, master_seed: 9, ..Default::default() };
    c.geometry.n_tx = 14;
    c.geometry.n_scatterers = 20;
    c.grid.n_subcarriers = 24;
    c.local.k_grid = vec![2, 6, 13];
    c.local.seeds_per_k = 2;
    c.local.compare_k = vec![5];
    c.local.iterations = 8;
    c.study.random_fraction = 0.25;
    c.study.strongest_count = 6;
    c.study.csi_runs = 3;
    c
}

#[test]
fn full_selection_coincides_across_algorithms() {
    let rows = sweep_selected_count(&small(PowerControl::B), &Algorithm::ALL).unwrap();
    let full: Vec<&RunResult> = rows.iter().filter(|r| r.n_selected == 14 && r.k.is_none()).collect();
    assert_eq!(full.len(), 3);
    assert!(full.iter().all(|r| r.zf_rate == full[0].zf_rate && r.capacity_eq == full[0].capacity_eq));
}

#[test]
fn control_a_greedy_forward_sweep_is_monotone() {
    let rows = sweep_selected_count(&small(PowerControl::A), &[Algorithm::GreedyForward]).unwrap();
    assert_eq!(rows.len(), 14);
    for w in rows.windows(2) {
        assert!(w[1].capacity_eq >= w[0].capacity_eq - 1e-12);
        assert_eq!(w[1].n_selected, w[0].n_selected + 1);
    }
}

#[test]
fn zf_rate_implies_feasible_size() {
    for control in [PowerControl::A, PowerControl::B] {
        let rows = sweep_selected_count(&small(control), &[Algorithm::Local, Algorithm::Random]).unwrap();
        for r in &rows {
            assert!(r.zf_rate.is_finite() && r.zf_rate >= 0.0 && r.capacity_eq >= 0.0);
            if r.zf_rate > 0.0 {
                assert!(r.n_selected >= 3, "{r:?}");
            }
        }
        assert!(rows.iter().filter(|r| r.algorithm == "local").all(|r| r.delta_vs_random.is_some()));
    }
}

#[test]
fn neighborhood_rows_and_traces() {
    let cfg = small(PowerControl::B);
    let rows = sweep_neighborhood(&cfg, &[6]).unwrap();
    assert_eq!(rows.len(), cfg.local.seeds_per_k);
    for r in &rows {
        assert_eq!(r.size_trace.len(), cfg.local.iterations);
        assert_eq!(r.size_trace[r.best_iteration], r.n_selected);
    }
    let means = mean_size_by_k(&sweep_neighborhood(&cfg, &[2, 13]).unwrap());
    assert_eq!(means.iter().map(|m| m.0).collect::<Vec<_>>(), vec![2, 13]);
}

#[test]
fn subcarrier_comparison_is_reproducible() {
    let cfg = small(PowerControl::A);
    let strip = |mut v: Vec<RunResult>| {
        v.iter_mut().for_each(|r| r.wall_time_ms = 0.0);
        v
    };
    let a = strip(compare_subcarrier_policies(&cfg).unwrap());
    let b = strip(compare_subcarrier_policies(&cfg).unwrap());
    assert_eq!(a, b);
    for p in ["full-24", "random-6", "strongest-6"] {
        assert_eq!(a.iter().filter(|r| r.policy == p && r.algorithm == "local").count(), 2);
    }
    assert!(a.iter().any(|r| r.algorithm == "greedy-forward"));
    assert!(a.iter().all(|r| r.delta_vs_random.is_some()));
}

#[test]
fn zero_perturbation_gives_identical_scores() {
    let cfg = small(PowerControl::B);
    for p in csi_robustness(&cfg, 0.0).unwrap() {
        assert_eq!(p.clean.zf_rate, p.perturbed.zf_rate);
        assert_eq!(p.clean.n_selected, p.perturbed.n_selected);
    }
    let pairs = csi_robustness(&cfg, 0.3).unwrap();
    assert_eq!(pairs.len(), 3);
    assert!(pairs.iter().all(|p| p.perturbed.zf_rate.is_finite()));
}

#[test]
fn scenario_depends_on_master_seed() {
    let cfg = small(PowerControl::A);
    let a = build_scenario(&cfg, 3).unwrap();
    let b = build_scenario(&ScenarioConfig { master_seed: 10, ..cfg.clone() }, 3).unwrap();
    assert_eq!(a.tensor, build_scenario(&cfg, 3).unwrap().tensor);
    assert_ne!(a.geometry, b.geometry);
}
