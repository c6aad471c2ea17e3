mod common;

use gcs_walks::library::{self, bezier, replay_pwa};
use gcs_walks::oracle::{exact_best_walk, OracleSettings};
use gcs_walks::walk::check_solution;

#[test]
fn pendulum_oracle_trajectories_replay_through_the_true_dynamics() {
    let spec = library::pendulum_spec();
    let g = library::build_pwa_gcs(&spec).unwrap();
    let r = exact_best_walk(&g, &OracleSettings::new(9)).unwrap();
    let mut replayed = 0;
    for sol in r.per_k.iter().filter_map(|p| p.best.as_ref()) {
        let rep = replay_pwa(&spec, sol).unwrap();
        assert!(rep.max_residual <= 1e-6, "K={}: {}", sol.k, rep.max_residual);
        assert!(rep.states_in_modes, "K={}", sol.k);
        replayed += 1;
    }
    assert!(replayed > 0);
}

#[test]
fn corridor_oracle_splines_are_smooth_and_within_limits() {
    let spec = library::corridor_spec();
    let g = library::build_bezier_gcs(&spec).unwrap();
    let r = exact_best_walk(&g, &OracleSettings::new(6)).unwrap();
    for sol in r.per_k.iter().filter_map(|p| p.best.as_ref()) {
        assert!(bezier::c1_residual(&spec, sol) <= 1e-8, "K={}", sol.k);
        assert_eq!(bezier::limit_violations(&spec, sol, 101, 1e-6), 0, "K={}", sol.k);
    }
}

#[test]
fn gripper_skills_chain_exactly() {
    let spec = library::gripper_spec();
    let g = library::build_skill_gcs(&spec).unwrap();
    let best = exact_best_walk(&g, &OracleSettings::new(6)).unwrap().best.unwrap();
    check_solution(&g, &best).unwrap();
    // q' of each skill visit equals q of the next one.
    for w in best.trajectory.windows(2).skip(1) {
        let (a, b) = (&w[0], &w[1]);
        if b.len() == 4 && a.len() == 4 {
            let gap = (a[2] - b[0]).abs().max((a[3] - b[1]).abs());
            assert!(gap <= 1e-8, "{gap}");
        }
    }
}

#[test]
fn a_single_skill_that_bridges_start_and_goal_gives_a_two_edge_walk() {
    let mut spec = library::gripper_spec();
    spec.skills.retain(|s| s.name == "move_left");
    spec.goal = vec![2.0, 7.0];
    let g = library::build_skill_gcs(&spec).unwrap();
    let best = exact_best_walk(&g, &OracleSettings::new(4)).unwrap().best.unwrap();
    assert_eq!(best.walk, ["start", "move_left", "goal"]);
}

#[test]
fn halving_the_acceleration_limit_never_shortens_the_corridor_walk() {
    let mut spec = library::corridor_spec();
    let mut last_k = 0;
    for _ in 0..3 {
        let g = library::build_bezier_gcs(&spec).unwrap();
        let k = exact_best_walk(&g, &OracleSettings::new(8)).unwrap().best.unwrap().k;
        assert!(k >= last_k, "K dropped from {last_k} to {k}");
        last_k = k;
        spec.acceleration_limit.iter_mut().for_each(|a| *a /= 2.0);
    }
}

#[test]
fn shipped_instances_match_their_specs() {
    for (name, _) in common::SHIPPED {
        let spec_path = common::instance_path(name).parent().unwrap().join("specs").join(format!("{name}.json"));
        let spec: library::InstanceSpec = gcs_walks::io::read_json(&spec_path).unwrap();
        let built = spec.build().unwrap();
        assert_eq!(built.content_hash(), common::instance(name).content_hash(), "{name}");
        assert_eq!(built.source_point(), common::instance(name).source_point(), "{name}");
    }
}
