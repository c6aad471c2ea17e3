//! Skill chaining: one vertex per convex skill over `(q, q')`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::feasible;
use crate::error::{GcsError, Result};
use crate::gcs::{EdgeDoc, Gcs, GcsDocument, VertexDoc};
use crate::quadratic::QuadraticFunction;
use crate::sets::ConvexSet;

pub const START: &str = "start";
pub const GOAL: &str = "goal";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Skill {
    pub name: String,
    /// Feasible transitions `(q, q')`.
    pub transitions: ConvexSet,
    pub cost: QuadraticFunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillSpec {
    pub skills: Vec<Skill>,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

/// `x_head[..n] - x_tail[from..from+n] = 0` over `[x_tail, x_head]`.
fn handoff(n: usize, from: usize, tail_dim: usize, head_dim: usize) -> Result<ConvexSet> {
    let rows = (0..n)
        .map(|i| {
            let mut r = vec![0.0; tail_dim + head_dim];
            r[from + i] = -1.0;
            r[tail_dim + i] = 1.0;
            r
        })
        .collect();
    ConvexSet::affine_equalities(rows, vec![0.0; n])
}

/// Vertices `start`, one per skill, and `goal`. An edge joins two skills when
/// the end configuration of the first can be the start of the second; the
/// edge equates the two.
pub fn build_skill_gcs(spec: &SkillSpec) -> Result<Gcs> {
    let n = spec.start.len();
    if spec.goal.len() != n {
        return Err(GcsError::DimensionMismatch { expected: n, got: spec.goal.len() });
    }
    for s in &spec.skills {
        if s.transitions.dim() != 2 * n || s.cost.dim() != 2 * n {
            return Err(GcsError::InvalidArgument(format!("skill `{}` is not defined over (q, q')", s.name)));
        }
        if s.name == START || s.name == GOAL {
            return Err(GcsError::InvalidArgument(format!("skill name `{}` is reserved", s.name)));
        }
    }
    let start = ConvexSet::point(spec.start.clone());
    let goal = ConvexSet::point(spec.goal.clone());
    let mut vertices = vec![VertexDoc { id: START.into(), set: start.clone(), cost: None }];
    for s in &spec.skills {
        vertices.push(VertexDoc { id: s.name.clone(), set: s.transitions.clone(), cost: Some(s.cost.clone()) });
    }
    vertices.push(VertexDoc { id: GOAL.into(), set: goal.clone(), cost: None });

    let mut edges = Vec::new();
    let mut push_if_feasible =
        |tail: &str, tail_set: &ConvexSet, head: &str, head_set: &ConvexSet, coupling: ConvexSet| {
            let domain = ConvexSet::product(vec![tail_set.clone(), head_set.clone()])?;
            if feasible(&ConvexSet::intersection(vec![coupling.clone(), domain])?)? {
                edges.push(EdgeDoc {
                    id: format!("{tail}->{head}"),
                    tail: tail.into(),
                    head: head.into(),
                    set: Some(coupling),
                    cost: None,
                });
            }
            Ok::<(), GcsError>(())
        };
    for s in &spec.skills {
        push_if_feasible(START, &start, &s.name, &s.transitions, handoff(n, 0, n, 2 * n)?)?;
    }
    for a in &spec.skills {
        for b in &spec.skills {
            push_if_feasible(&a.name, &a.transitions, &b.name, &b.transitions, handoff(n, n, 2 * n, 2 * n)?)?;
        }
        push_if_feasible(&a.name, &a.transitions, GOAL, &goal, handoff(n, n, 2 * n, n)?)?;
    }
    if edges.is_empty() {
        log::warn!("no two skills can be chained");
    }
    Gcs::from_document(&GcsDocument {
        vertices,
        edges,
        source: START.into(),
        target: GOAL.into(),
        source_point: spec.start.clone(),
        target_point: spec.goal.clone(),
    })
}

/// Gripper `g` and object `o` on a line, `q = (g, o) ∈ [0, 10]²`.
///
/// `move_left` keeps the gripper in `[0, 5]`, `move_right` in `[5, 10]`, both
/// leave the object in place; `carry` moves gripper and object together.
/// Every skill costs `2 + (g' - g)²`. Start `(3, 7)`, goal `(4, 4)`.
pub fn gripper_spec() -> SkillSpec {
    // Coordinates (g, o, g', o').
    let mut q = DMatrix::zeros(4, 4);
    q[(0, 0)] = 1.0;
    q[(2, 2)] = 1.0;
    q[(0, 2)] = -1.0;
    q[(2, 0)] = -1.0;
    let cost = QuadraticFunction::from_parts(&q, &DVector::zeros(4), 2.0).expect("valid skill cost");
    let within = |lo: f64, hi: f64| ConvexSet::boxed(&[lo, 0.0, lo, 0.0], &[hi, 10.0, hi, 10.0]).expect("valid box");
    let eq =
        |rows: Vec<Vec<f64>>| ConvexSet::affine_equalities(rows.clone(), vec![0.0; rows.len()]).expect("valid rows");
    let object_fixed = eq(vec![vec![0.0, 1.0, 0.0, -1.0]]);
    let holding = eq(vec![vec![1.0, -1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, -1.0]]);
    let skill = |name: &str, parts: Vec<ConvexSet>| Skill {
        name: name.into(),
        transitions: ConvexSet::intersection(parts).expect("same dimension"),
        cost: cost.clone(),
    };
    SkillSpec {
        skills: vec![
            skill("move_left", vec![within(0.0, 5.0), object_fixed.clone()]),
            skill("move_right", vec![within(5.0, 10.0), object_fixed]),
            skill("carry", vec![within(0.0, 10.0), holding]),
        ],
        start: vec![3.0, 7.0],
        goal: vec![4.0, 4.0],
    }
}
