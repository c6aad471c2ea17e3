//! Randomized checks of the data model, conic layer and builders.

use gcs_walks::conic::{self, AffineExpr, ConicProgram, SolveStatus, SolverSettings};
use gcs_walks::gcs::{EdgeIdx, VertexDoc};
use gcs_walks::library::{self, PlanarVariant};
use gcs_walks::oracle::enumerate_walks;
use gcs_walks::sets::SetSampler;
use gcs_walks::walk::walk_cost;
use gcs_walks::{ConvexSet, Gcs, QuadraticFunction, WalkSolution};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The planar example with a convex cost on every vertex as well.
fn planar_with_vertex_costs() -> Gcs {
    let mut doc = library::planar::planar_document(PlanarVariant::Standard).unwrap();
    let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
    for (i, v) in doc.vertices.iter_mut().enumerate() {
        let lin = DVector::from_vec(vec![0.1 * i as f64, -0.3]);
        *v = VertexDoc { cost: Some(QuadraticFunction::from_parts(&q, &lin, 0.5).unwrap()), ..v.clone() };
    }
    Gcs::from_document(&doc).unwrap()
}

fn sample_trajectory(g: &Gcs, edges: &[EdgeIdx], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vs = vec![g.source()];
    vs.extend(edges.iter().map(|e| g.edge(*e).head));
    vs.iter()
        .map(|v| {
            let vx = g.vertex(*v);
            SetSampler::new(&vx.set, &vx.id).unwrap().sample(&mut rng).unwrap()
        })
        .collect()
}

fn sub_solution(g: &Gcs, edges: &[EdgeIdx], traj: &[Vec<f64>]) -> WalkSolution {
    let mut walk = vec![g.vertex(g.edge(edges[0]).tail).id.clone()];
    walk.extend(edges.iter().map(|e| g.vertex(g.edge(*e).head).id.clone()));
    WalkSolution {
        walk,
        edge_ids: edges.iter().map(|e| g.edge(*e).id.clone()).collect(),
        trajectory: traj.to_vec(),
        cost: 0.0,
        k: edges.len(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn walk_cost_is_additive_over_concatenation(k in 3usize..8, pick in 0usize..1000, split in 1usize..7, seed in 0u64..1000) {
        let g = planar_with_vertex_costs();
        let walks = enumerate_walks(&g, k, 10_000).unwrap();
        prop_assume!(!walks.is_empty());
        let w = &walks[pick % walks.len()];
        let j = 1 + split % (k - 1);
        let traj = sample_trajectory(&g, w, seed);
        let whole = walk_cost(&g, &sub_solution(&g, w, &traj)).unwrap();
        let left = walk_cost(&g, &sub_solution(&g, &w[..j], &traj[..=j])).unwrap();
        let right = walk_cost(&g, &sub_solution(&g, &w[j..], &traj[j..])).unwrap();
        let join = g.vertex(g.edge(w[j - 1]).head).cost.eval(&traj[j]).unwrap();
        prop_assert!((whole - (left + right - join)).abs() <= 1e-9 * (1.0 + whole.abs()));
    }

    #[test]
    fn epsilon_adds_k_times_epsilon(k in 3usize..8, pick in 0usize..1000, eps in 1e-6f64..1.0, seed in 0u64..1000) {
        let g = library::build_planar_instance().unwrap();
        let ge = g.apply_epsilon_edge_costs(eps).unwrap();
        let walks = enumerate_walks(&g, k, 10_000).unwrap();
        prop_assume!(!walks.is_empty());
        let w = &walks[pick % walks.len()];
        let traj = sample_trajectory(&g, w, seed);
        let sol = sub_solution(&g, w, &traj);
        let diff = walk_cost(&ge, &sol).unwrap() - walk_cost(&g, &sol).unwrap();
        prop_assert!((diff - k as f64 * eps).abs() <= 1e-9);
    }

    #[test]
    fn edge_points_lie_in_both_vertex_sets(which in 0usize..3, seed in 0u64..1000) {
        let g = match which {
            0 => library::build_planar_instance().unwrap(),
            1 => library::build_pwa_gcs(&library::pendulum_spec()).unwrap(),
            _ => library::build_skill_gcs(&library::gripper_spec()).unwrap(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = g.tolerances().membership;
        for e in g.edges() {
            let (u, v) = (g.vertex(e.tail), g.vertex(e.head));
            let x = SetSampler::new(&e.set, &e.id).unwrap().sample(&mut rng).unwrap();
            prop_assert!(e.set.contains(&x, tol).unwrap());
            prop_assert!(u.set.contains(&x[..u.dim()], tol).unwrap(), "edge {}", e.id);
            prop_assert!(v.set.contains(&x[u.dim()..], tol).unwrap(), "edge {}", e.id);
        }
    }

    #[test]
    fn random_box_points_in_an_edge_set_are_in_its_vertex_sets(xs in prop::collection::vec(-2.0f64..10.0, 4)) {
        let g = library::build_planar_instance().unwrap();
        let tol = g.tolerances().membership;
        for e in g.edges() {
            if e.set.contains(&xs, tol).unwrap() {
                prop_assert!(g.vertex(e.tail).set.contains(&xs[..2], tol).unwrap());
                prop_assert!(g.vertex(e.head).set.contains(&xs[2..], tol).unwrap());
            }
        }
    }

    #[test]
    fn optimal_points_satisfy_every_constraint(
        c in prop::collection::vec(-3.0f64..3.0, 3),
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..6),
        slack in prop::collection::vec(0.1f64..2.0, 6),
    ) {
        // Polytope containing the origin, intersected with a box.
        let mut prog = ConicProgram::new();
        let x = prog.add_vars(3);
        let xe: Vec<AffineExpr> = x.iter().map(|v| AffineExpr::var(*v)).collect();
        for (r, s) in rows.iter().zip(&slack) {
            let lhs = xe.iter().zip(r).fold(AffineExpr::zero(), |acc, (xi, a)| acc + xi.scaled(*a));
            prog.add_le(lhs, AffineExpr::constant(*s));
        }
        for xi in &xe {
            prog.add_le(xi.clone(), AffineExpr::constant(2.0));
            prog.add_le(AffineExpr::constant(-2.0), xi.clone());
        }
        for (v, ci) in x.iter().zip(&c) {
            prog.add_objective_quadratic_term(*v, *v, 1.0);
            prog.add_objective_linear(&AffineExpr::term(*v, -2.0 * ci));
        }
        let reports = conic::solve_batch(&[prog.clone(), prog.clone()], &SolverSettings::default());
        let single = conic::solve(&prog, &SolverSettings::default());
        prop_assert_eq!(single.status, SolveStatus::Optimal);
        let xs = single.x.clone().unwrap();
        prop_assert!(prog.max_violation(&xs) <= 1e-6);
        for r in reports {
            prop_assert_eq!(r.status, single.status);
            prop_assert!((r.objective.unwrap() - single.objective.unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn enlarging_mode_sets_never_removes_edges(widen in 0.0f64..0.3) {
        let base = library::pendulum_spec();
        let mut wide = base.clone();
        for m in &mut wide.modes {
            let ext = m.state_set.extents(&m.name).unwrap();
            let lo: Vec<f64> = ext.lo.iter().map(|x| x - widen).collect();
            let hi: Vec<f64> = ext.hi.iter().map(|x| x + widen).collect();
            m.state_set = ConvexSet::boxed(&lo, &hi).unwrap();
        }
        let ids = |g: &Gcs| g.edges().iter().map(|e| e.id.clone()).collect::<Vec<_>>();
        let (small, large) = (ids(&library::build_pwa_gcs(&base).unwrap()), ids(&library::build_pwa_gcs(&wide).unwrap()));
        for e in &small {
            prop_assert!(large.contains(e), "{e} lost");
        }
    }

    #[test]
    fn enlarging_skill_sets_never_removes_edges(grow in 0.0f64..3.0) {
        let base = library::gripper_spec();
        let mut wide = base.clone();
        for s in &mut wide.skills {
            let ext = s.transitions.extents(&s.name).unwrap();
            let lo: Vec<f64> = ext.lo.iter().map(|x| x - grow).collect();
            let hi: Vec<f64> = ext.hi.iter().map(|x| x + grow).collect();
            let ConvexSet::Intersection { members } = &s.transitions else { unreachable!() };
            let mut members = members.clone();
            members[0] = ConvexSet::boxed(&lo, &hi).unwrap();
            s.transitions = ConvexSet::intersection(members).unwrap();
        }
        let ids = |g: &Gcs| g.edges().iter().map(|e| e.id.clone()).collect::<Vec<_>>();
        let (small, large) = (ids(&library::build_skill_gcs(&base).unwrap()), ids(&library::build_skill_gcs(&wide).unwrap()));
        for e in &small {
            prop_assert!(large.contains(e), "{e} lost");
        }
    }
}
