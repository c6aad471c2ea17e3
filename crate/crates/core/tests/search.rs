mod common;

use gcs_walks::search::{greedy_search, search_and_refine, SearchSettings};
use gcs_walks::synthesis::{synthesize, ObjectiveSpec, SynthesisSettings};
use gcs_walks::walk::{check_solution, walk_cost};
use gcs_walks::Gcs;

fn bounds(g: &Gcs) -> gcs_walks::synthesis::LowerBoundSet {
    synthesize(g, &ObjectiveSpec::SourceValue, &SynthesisSettings::default()).unwrap()
}

#[test]
fn pipeline_is_valid_monotone_and_above_the_bound() {
    for (name, n) in [("planar", 2), ("gripper", 2), ("corridor", 2), ("pendulum", 3)] {
        let g = common::instance(name);
        let b = bounds(&g);
        let out = search_and_refine(&g, &b, &SearchSettings::with_lookahead(n)).unwrap();
        for sol in [&out.greedy, &out.reoptimized, &out.shortcut] {
            check_solution(&g, sol).unwrap();
            assert!((walk_cost(&g, sol).unwrap() - sol.cost).abs() <= 1e-6 * (1.0 + sol.cost));
        }
        assert!(out.reoptimized.cost <= out.greedy.cost + 1e-9, "{name}");
        assert!(out.shortcut.cost <= out.reoptimized.cost + 1e-9, "{name}");
        assert!(b.source_value(&g) <= out.shortcut.cost + 1e-6, "{name}");
    }
}

#[test]
fn search_output_is_reproducible() {
    let g = common::instance("gripper");
    let b = bounds(&g);
    let s = SearchSettings::with_lookahead(2);
    let a = greedy_search(&g, &b, &s).unwrap();
    let c = greedy_search(&g, &b, &s).unwrap();
    assert_eq!(a.solution, c.solution);
    assert_eq!(a.trace, c.trace);
}

#[test]
fn deeper_lookahead_finds_the_pendulum_target_within_budget() {
    let g = common::instance("pendulum");
    let b = bounds(&g);
    let s = SearchSettings { budget: Some(100), ..SearchSettings::with_lookahead(3) };
    let out = greedy_search(&g, &b, &s).unwrap();
    assert_eq!(out.solution.walk.last().map(String::as_str), Some("target"));
    assert!(out.iterations <= 100);
}
