mod common;

use gcs_walks::conic::SolverSettings;
use gcs_walks::oracle::{exact_best_walk, exact_best_walk_filtered, is_path, layered_optimum, OracleSettings};
use gcs_walks::walk::check_solution;

#[test]
fn layered_expansion_matches_the_running_minimum() {
    for (name, k_max) in [("planar", 5), ("pendulum", 6)] {
        let g = common::instance(name);
        let sweep = exact_best_walk(&g, &OracleSettings::new(k_max)).unwrap();
        let mut running = f64::INFINITY;
        for p in &sweep.per_k {
            running = running.min(p.cost().unwrap_or(f64::INFINITY));
            let layered = layered_optimum(&g, p.k, &SolverSettings::default()).unwrap().unwrap_or(f64::INFINITY);
            if running.is_finite() {
                assert!((layered - running).abs() <= 1e-6, "{name} K={}: {layered} vs {running}", p.k);
            } else {
                assert!(layered.is_infinite(), "{name} K={}", p.k);
            }
        }
    }
}

#[test]
fn oracle_solutions_are_valid_and_the_best_is_the_minimum() {
    for (name, k_max) in common::SHIPPED {
        let g = common::instance(name);
        let r = exact_best_walk(&g, &OracleSettings::new(k_max.min(7))).unwrap();
        let best = r.best.as_ref().map(|b| b.cost).unwrap_or(f64::INFINITY);
        for p in &r.per_k {
            if let Some(sol) = &p.best {
                check_solution(&g, sol).unwrap();
                assert_eq!(sol.k, p.k);
                assert!(best <= sol.cost, "{name}");
            }
        }
    }
}

#[test]
fn the_planar_walk_revisits_and_beats_every_path() {
    let g = common::instance("planar");
    let s = OracleSettings::new(8);
    let walk = exact_best_walk(&g, &s).unwrap().best.unwrap();
    let path = exact_best_walk_filtered(&g, &s, is_path).unwrap().best.unwrap();
    assert!(walk.cost <= 0.95 * path.cost, "{} vs {}", walk.cost, path.cost);
    let mut repeated: Vec<&String> =
        walk.walk.iter().filter(|v| walk.walk.iter().filter(|w| w == v).count() > 1).collect();
    repeated.dedup();
    repeated.sort();
    repeated.dedup();
    assert!(repeated.len() >= 2, "{:?}", walk.walk);
}

#[test]
fn epsilon_makes_the_sweep_stabilize_on_instances_with_constant_costs() {
    for (name, k_max) in [("planar", 10), ("gripper", 9), ("corridor", 8)] {
        let g = common::instance(name).apply_epsilon_edge_costs(1e-3).unwrap();
        let r = exact_best_walk(&g, &OracleSettings::new(k_max)).unwrap();
        assert!(r.stabilized, "{name}: {:?}", r.per_k.iter().map(|p| p.cost()).collect::<Vec<_>>());
    }
}
