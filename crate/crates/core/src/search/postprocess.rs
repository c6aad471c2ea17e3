use crate::conic::{SolveStatus, SolverSettings};
use crate::error::{GcsError, Result};
use crate::gcs::{EdgeIdx, Gcs};
use crate::walk::{solve_restrictions, EndCondition, RestrictionSpec, WalkSolution};

fn pinned_between(g: &Gcs, sol: &WalkSolution, edges: Vec<EdgeIdx>) -> Result<RestrictionSpec> {
    let first = sol.walk.first().ok_or_else(|| GcsError::InvalidWalk("empty walk".into()))?;
    Ok(RestrictionSpec {
        start_vertex: g.vertex_idx(first)?,
        start_point: sol.trajectory[0].clone(),
        edges,
        end: EndCondition::Pinned(sol.trajectory.last().expect("non-empty trajectory").clone()),
    })
}

/// Optimal trajectory along the walk of `sol` with its first and last
/// points kept. The original is returned if the solve does no better.
pub fn reoptimize_trajectory(g: &Gcs, sol: &WalkSolution, solver: &SolverSettings) -> Result<WalkSolution> {
    let edges = sol.edge_indices(g)?;
    let spec = pinned_between(g, sol, edges.clone())?;
    let out = solve_restrictions(g, &[spec], solver)?.pop().expect("one outcome");
    let traj = match (out.status, out.trajectory) {
        (SolveStatus::Optimal, Some(t)) => t,
        (s, _) => return Err(GcsError::Solver(format!("reoptimizing a valid walk gave {s:?}: {}", out.message))),
    };
    let better = WalkSolution::from_edges(g, &edges, traj)?;
    Ok(if better.cost <= sol.cost { better } else { sol.clone() })
}

/// Remove cycles `v_i = v_j` while doing so lowers the cost by more than
/// `tol`. Longer cycles are tried first, then those further left; after an
/// accepted removal the scan restarts.
pub fn shortcut_cycles(g: &Gcs, sol: &WalkSolution, tol: f64, solver: &SolverSettings) -> Result<WalkSolution> {
    let mut current = sol.clone();
    loop {
        let edges = current.edge_indices(g)?;
        let vs = &current.walk;
        let mut cycles: Vec<(usize, usize)> = Vec::new();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                if vs[i] == vs[j] {
                    cycles.push((i, j));
                }
            }
        }
        cycles.sort_by_key(|&(i, j)| (std::cmp::Reverse(j - i), i));
        let shorter: Vec<Vec<EdgeIdx>> =
            cycles.iter().map(|&(i, j)| edges[..i].iter().chain(&edges[j..]).copied().collect()).collect();
        let specs = shorter.iter().map(|e| pinned_between(g, &current, e.clone())).collect::<Result<Vec<_>>>()?;
        let outcomes = solve_restrictions(g, &specs, solver)?;
        let mut accepted = None;
        for (e, out) in shorter.into_iter().zip(outcomes) {
            if let (SolveStatus::Optimal, Some(t)) = (out.status, out.trajectory) {
                let cand = WalkSolution::from_edges(g, &e, t)?;
                if cand.cost < current.cost - tol {
                    accepted = Some(cand);
                    break;
                }
            }
        }
        match accepted {
            Some(c) => current = c,
            None => return Ok(current),
        }
    }
}
