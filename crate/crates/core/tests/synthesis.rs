mod common;

use gcs_walks::library;
use gcs_walks::oracle::{exact_best_walk, OracleSettings};
use gcs_walks::synthesis::{synthesize, verify_bounds_sampled, ObjectiveSpec, SynthesisSettings};
use proptest::prelude::*;

#[test]
fn bounds_on_shipped_instances_are_sound_and_certified() {
    for (name, k_max) in common::SHIPPED {
        let g = common::instance(name);
        let b = synthesize(&g, &ObjectiveSpec::SourceValue, &SynthesisSettings::default()).unwrap();
        let best = exact_best_walk(&g, &OracleSettings::new(k_max)).unwrap().best.unwrap().cost;
        let js = b.source_value(&g);
        assert!(js <= best + 1e-6, "{name}: J_s {js} above the oracle {best}");
        assert!(js >= -1e-6, "{name}: negative J_s {js}");
        assert!(b.certificate_residual(&g) >= -1e-7, "{name}: residual {}", b.certificate_residual(&g));
        let t = g.target();
        let xt = g.target_point();
        let anchor = b.bound(t).eval(xt).unwrap() - g.vertex(t).cost.eval(xt).unwrap();
        assert!(anchor.abs() <= 1e-6, "{name}: target anchor off by {anchor}");
        let report = verify_bounds_sampled(&g, &b, 200, 7).unwrap();
        assert!(report.passed(), "{name}: worst slack {}", report.worst_bellman_slack);
    }
}

#[test]
fn sampled_average_bounds_are_also_sound() {
    for name in ["planar", "gripper"] {
        let g = common::instance(name);
        let obj = ObjectiveSpec::sampled_average(&g).unwrap();
        let b = synthesize(&g, &obj, &SynthesisSettings::default()).unwrap();
        let best = exact_best_walk(&g, &OracleSettings::new(7)).unwrap().best.unwrap().cost;
        assert!(b.source_value(&g) <= best + 1e-6);
        assert!(verify_bounds_sampled(&g, &b, 200, 1).unwrap().passed());
    }
}

#[test]
fn pairwise_products_only_tighten() {
    let g = common::instance("planar");
    let with = synthesize(&g, &ObjectiveSpec::SourceValue, &SynthesisSettings::default()).unwrap();
    let without = synthesize(
        &g,
        &ObjectiveSpec::SourceValue,
        &SynthesisSettings { pairwise_products: false, ..Default::default() },
    )
    .unwrap();
    assert!(without.source_value(&g) <= with.source_value(&g) + 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn relaxing_the_input_limit_never_raises_the_bound(extra in 0.5f64..10.0) {
        let base = library::pendulum_spec();
        let mut wide = base.clone();
        let ext = wide.control_set.extents("control").unwrap();
        let lo: Vec<f64> = ext.lo.iter().map(|x| x - extra).collect();
        let hi: Vec<f64> = ext.hi.iter().map(|x| x + extra).collect();
        wide.control_set = gcs_walks::ConvexSet::boxed(&lo, &hi).unwrap();
        let solve = |spec| {
            let g = library::build_pwa_gcs(spec).unwrap();
            synthesize(&g, &ObjectiveSpec::SourceValue, &SynthesisSettings::default()).unwrap().source_value(&g)
        };
        let (tight, loose) = (solve(&base), solve(&wide));
        prop_assert!(loose <= tight + 1e-6, "{loose} > {tight}");
    }
}
