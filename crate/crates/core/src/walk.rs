//! Walks, their costs, and the convex restriction obtained by fixing a walk.

use serde::{Deserialize, Serialize};

use crate::conic::{self, AffineExpr, ConicProgram, SolveStatus, SolverSettings};
use crate::error::{GcsError, Result};
use crate::gcs::{EdgeIdx, Gcs, VertexIdx};
use crate::quadratic::QuadraticFunction;

/// A walk from source to target together with its trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkSolution {
    pub walk: Vec<String>,
    pub edge_ids: Vec<String>,
    pub trajectory: Vec<Vec<f64>>,
    pub cost: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

impl WalkSolution {
    /// Build from an edge sequence leaving the source, computing the cost.
    pub fn from_edges(g: &Gcs, edges: &[EdgeIdx], trajectory: Vec<Vec<f64>>) -> Result<Self> {
        let mut walk = vec![g.vertex(g.source()).id.clone()];
        walk.extend(edges.iter().map(|e| g.vertex(g.edge(*e).head).id.clone()));
        let mut sol = WalkSolution {
            walk,
            edge_ids: edges.iter().map(|e| g.edge(*e).id.clone()).collect(),
            trajectory,
            cost: 0.0,
            k: edges.len(),
        };
        sol.cost = walk_cost(g, &sol)?;
        Ok(sol)
    }

    pub fn edge_indices(&self, g: &Gcs) -> Result<Vec<EdgeIdx>> {
        self.edge_ids.iter().map(|id| g.edge_idx(id)).collect()
    }

    pub fn vertex_indices(&self, g: &Gcs) -> Result<Vec<VertexIdx>> {
        self.walk.iter().map(|id| g.vertex_idx(id)).collect()
    }
}

/// Check that `walk` starts at the source, ends at the target and follows
/// edges. Returns the edge for each step; among parallel edges the smallest id
/// is chosen. Steps are numbered from 1.
pub fn validate_walk(g: &Gcs, walk: &[VertexIdx]) -> Result<Vec<EdgeIdx>> {
    let (first, last) = match (walk.first(), walk.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(GcsError::InvalidWalk("empty walk".into())),
    };
    if first != g.source() {
        return Err(GcsError::InvalidWalk(format!("walk starts at `{}`, not the source", g.vertex(first).id)));
    }
    if last != g.target() {
        return Err(GcsError::InvalidWalk(format!("walk ends at `{}`, not the target", g.vertex(last).id)));
    }
    walk.windows(2)
        .enumerate()
        .map(|(k, pair)| {
            g.out_edges(pair[0]).iter().copied().find(|e| g.edge(*e).head == pair[1]).ok_or_else(|| {
                GcsError::MissingEdge {
                    step: k + 1,
                    from: g.vertex(pair[0]).id.clone(),
                    to: g.vertex(pair[1]).id.clone(),
                }
            })
        })
        .collect()
}

/// [`validate_walk`] on vertex ids, returning edge ids.
pub fn validate_walk_ids(g: &Gcs, walk: &[&str]) -> Result<Vec<String>> {
    let idx = walk.iter().map(|id| g.vertex_idx(id)).collect::<Result<Vec<_>>>()?;
    Ok(validate_walk(g, &idx)?.into_iter().map(|e| g.edge(e).id.clone()).collect())
}

fn check_structure(g: &Gcs, sol: &WalkSolution) -> Result<(Vec<VertexIdx>, Vec<EdgeIdx>)> {
    let vs = sol.vertex_indices(g)?;
    let es = sol.edge_indices(g)?;
    if vs.len() != sol.k + 1 || es.len() != sol.k || sol.trajectory.len() != sol.k + 1 {
        return Err(GcsError::InvalidWalk(format!(
            "inconsistent lengths: K = {}, {} vertices, {} edges, {} points",
            sol.k,
            vs.len(),
            es.len(),
            sol.trajectory.len()
        )));
    }
    for (k, e) in es.iter().enumerate() {
        let edge = g.edge(*e);
        if edge.tail != vs[k] || edge.head != vs[k + 1] {
            return Err(GcsError::InvalidWalk(format!("edge `{}` does not join step {}", edge.id, k + 1)));
        }
    }
    for (k, (v, x)) in vs.iter().zip(&sol.trajectory).enumerate() {
        if x.len() != g.vertex(*v).dim() {
            return Err(GcsError::InvalidWalk(format!("point {k} has dimension {}", x.len())));
        }
    }
    Ok((vs, es))
}

/// `Σ l_v(x_k) + Σ l_e(x_{k-1}, x_k)` along the walk.
pub fn walk_cost(g: &Gcs, sol: &WalkSolution) -> Result<f64> {
    let (vs, es) = check_structure(g, sol)?;
    Ok(trajectory_cost(g, &vs, &es, &sol.trajectory))
}

pub(crate) fn trajectory_cost(g: &Gcs, vs: &[VertexIdx], es: &[EdgeIdx], traj: &[Vec<f64>]) -> f64 {
    let mut cost: f64 = vs.iter().zip(traj).map(|(v, x)| g.vertex(*v).cost.eval_unchecked(x)).sum();
    for (k, e) in es.iter().enumerate() {
        cost += g.edge(*e).cost.eval_unchecked(&[traj[k].as_slice(), traj[k + 1].as_slice()].concat());
    }
    cost
}

/// Full feasibility check: structure, endpoints, vertex and edge membership
/// within the instance's membership tolerance.
pub fn check_solution(g: &Gcs, sol: &WalkSolution) -> Result<()> {
    let (vs, es) = check_structure(g, sol)?;
    let tol = g.tolerances().membership;
    if vs[0] != g.source() || vs[sol.k] != g.target() {
        return Err(GcsError::InvalidWalk("walk does not run from source to target".into()));
    }
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
    if !close(&sol.trajectory[0], g.source_point()) {
        return Err(GcsError::InvalidWalk("trajectory does not start at the source point".into()));
    }
    if !close(&sol.trajectory[sol.k], g.target_point()) {
        return Err(GcsError::InvalidWalk("trajectory does not end at the target point".into()));
    }
    for (k, (v, x)) in vs.iter().zip(&sol.trajectory).enumerate() {
        if !g.vertex(*v).set.contains(x, tol)? {
            return Err(GcsError::InvalidWalk(format!("point {k} is outside the set of `{}`", g.vertex(*v).id)));
        }
    }
    for (k, e) in es.iter().enumerate() {
        let pair = [sol.trajectory[k].as_slice(), sol.trajectory[k + 1].as_slice()].concat();
        if !g.edge(*e).set.contains(&pair, tol)? {
            return Err(GcsError::InvalidWalk(format!("step {} violates the set of edge `{}`", k + 1, g.edge(*e).id)));
        }
    }
    Ok(())
}

/// How the last point of a restricted walk is treated.
#[derive(Clone, Debug)]
pub enum EndCondition {
    Pinned(Vec<f64>),
    /// Free last point. `terminal` is added to the objective at the last
    /// point; with `drop_last_vertex_cost` the last vertex cost is left out.
    Free {
        terminal: Option<QuadraticFunction>,
        drop_last_vertex_cost: bool,
    },
}

/// A fixed edge sequence from a pinned start point.
#[derive(Clone, Debug)]
pub struct RestrictionSpec {
    pub start_vertex: VertexIdx,
    pub start_point: Vec<f64>,
    pub edges: Vec<EdgeIdx>,
    pub end: EndCondition,
}

impl RestrictionSpec {
    /// Source to target with both endpoints pinned.
    pub fn pinned(g: &Gcs, edges: Vec<EdgeIdx>) -> Self {
        RestrictionSpec {
            start_vertex: g.source(),
            start_point: g.source_point().to_vec(),
            edges,
            end: EndCondition::Pinned(g.target_point().to_vec()),
        }
    }

    pub fn vertices(&self, g: &Gcs) -> Vec<VertexIdx> {
        let mut vs = vec![self.start_vertex];
        vs.extend(self.edges.iter().map(|e| g.edge(*e).head));
        vs
    }
}

/// The convex program of a restriction and the coordinates of each point.
pub struct Restriction {
    pub program: ConicProgram,
    pub points: Vec<Vec<AffineExpr>>,
}

pub fn build_restriction(g: &Gcs, spec: &RestrictionSpec) -> Result<Restriction> {
    let vs = spec.vertices(g);
    let mut prev = spec.start_vertex;
    for e in &spec.edges {
        if g.edge(*e).tail != prev {
            return Err(GcsError::InvalidWalk(format!("edge `{}` does not continue the walk", g.edge(*e).id)));
        }
        prev = g.edge(*e).head;
    }
    let k = spec.edges.len();
    let mut prog = ConicProgram::new();
    prog.set_constant_tolerance(g.tolerances().membership);
    let constant = |x: &[f64]| x.iter().map(|v| AffineExpr::constant(*v)).collect::<Vec<_>>();
    let mut points = Vec::with_capacity(k + 1);
    for (i, v) in vs.iter().enumerate() {
        let dim = g.vertex(*v).dim();
        let pin = if i == 0 {
            Some(spec.start_point.as_slice())
        } else if i == k {
            match &spec.end {
                EndCondition::Pinned(p) => Some(p.as_slice()),
                EndCondition::Free { .. } => None,
            }
        } else {
            None
        };
        match pin {
            Some(p) => {
                if p.len() != dim {
                    return Err(GcsError::DimensionMismatch { expected: dim, got: p.len() });
                }
                points.push(constant(p));
            }
            None => points.push(prog.add_vars(dim).into_iter().map(AffineExpr::var).collect()),
        }
    }
    if k == 0 {
        g.vertex(vs[0]).description().add_constraints(&mut prog, &points[0]);
    }
    for (i, e) in spec.edges.iter().enumerate() {
        let pair: Vec<AffineExpr> = points[i].iter().chain(&points[i + 1]).cloned().collect();
        let edge = g.edge(*e);
        edge.description().add_constraints(&mut prog, &pair);
        prog.add_objective_quadratic_form(edge.cost.homogeneous(), &pair);
    }
    for (i, v) in vs.iter().enumerate() {
        let skip = i == k && matches!(spec.end, EndCondition::Free { drop_last_vertex_cost: true, .. });
        if !skip {
            prog.add_objective_quadratic_form(g.vertex(*v).cost.homogeneous(), &points[i]);
        }
    }
    if let EndCondition::Free { terminal: Some(j), .. } = &spec.end {
        if j.dim() != points[k].len() {
            return Err(GcsError::DimensionMismatch { expected: points[k].len(), got: j.dim() });
        }
        prog.add_objective_quadratic_form(j.homogeneous(), &points[k]);
    }
    Ok(Restriction { program: prog, points })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionOutcome {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub trajectory: Option<Vec<Vec<f64>>>,
    pub message: String,
}

impl RestrictionOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solve restrictions as one batch; results keep the input order.
pub fn solve_restrictions(
    g: &Gcs,
    specs: &[RestrictionSpec],
    settings: &SolverSettings,
) -> Result<Vec<RestrictionOutcome>> {
    let built = specs.iter().map(|s| build_restriction(g, s)).collect::<Result<Vec<_>>>()?;
    let programs: Vec<ConicProgram> = built.iter().map(|r| r.program.clone()).collect();
    let reports = conic::solve_batch(&programs, settings);
    Ok(built
        .iter()
        .zip(reports)
        .map(|(r, rep)| {
            let trajectory =
                rep.x.as_ref().map(|x| r.points.iter().map(|p| p.iter().map(|c| c.eval(x)).collect()).collect());
            RestrictionOutcome { status: rep.status, objective: rep.objective, trajectory, message: rep.message }
        })
        .collect())
}

/// Optimal trajectory for a fixed source-to-target edge sequence, or `None`
/// when the restriction is infeasible.
pub fn solve_walk(g: &Gcs, edges: &[EdgeIdx], settings: &SolverSettings) -> Result<Option<WalkSolution>> {
    solve_walks(g, &[edges.to_vec()], settings)?.pop().expect("one result per walk")
}

/// Batch form of [`solve_walk`]. Solver failures other than infeasibility
/// are reported per walk.
pub fn solve_walks(
    g: &Gcs,
    walks: &[Vec<EdgeIdx>],
    settings: &SolverSettings,
) -> Result<Vec<Result<Option<WalkSolution>>>> {
    let specs: Vec<RestrictionSpec> = walks.iter().map(|w| RestrictionSpec::pinned(g, w.clone())).collect();
    let outcomes = solve_restrictions(g, &specs, settings)?;
    Ok(walks
        .iter()
        .zip(outcomes)
        .map(|(w, out)| match out.status {
            SolveStatus::Optimal => {
                let traj = out.trajectory.expect("optimal outcome has a trajectory");
                WalkSolution::from_edges(g, w, traj).map(Some)
            }
            SolveStatus::Infeasible => Ok(None),
            s => Err(GcsError::Solver(format!("restriction {s:?}: {}", out.message))),
        })
        .collect())
}
