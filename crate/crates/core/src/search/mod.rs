//! Lookahead greedy search guided by cost-to-go lower bounds.
//!
//! From the current vertex and point, every walk of `n` edges (or fewer when
//! it reaches the target) is scored by solving its convex restriction with
//! the start pinned, the end free, and the lower bound of the last vertex in
//! place of its cost. The first step of the best candidate is taken. When no
//! candidate is feasible the search backtracks depth-first over the
//! candidate rankings recorded at earlier steps.

mod postprocess;
mod trace;

use serde::{Deserialize, Serialize};

use crate::conic::{SolveStatus, SolverSettings};
use crate::error::{GcsError, Result};
use crate::gcs::{EdgeIdx, Gcs, VertexIdx};
use crate::synthesis::LowerBoundSet;
use crate::walk::{solve_restrictions, EndCondition, RestrictionSpec, WalkSolution};

pub use postprocess::{reoptimize_trajectory, shortcut_cycles};
pub use trace::{CandidateTrace, TraceEvent};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Among candidates within the tolerance of the best objective, the
    /// earliest in enumeration order wins.
    #[default]
    EnumerationOrder,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchSettings {
    pub lookahead: usize,
    /// Maximum number of lookahead steps; `None` means `10·|V|`.
    pub budget: Option<usize>,
    /// Maximum number of levels a single backtrack may unwind; `None` means
    /// the budget.
    pub backtrack_limit: Option<usize>,
    pub cost_tol: f64,
    pub tie_break: TieBreak,
    #[serde(skip)]
    pub solver: SolverSettings,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            lookahead: 2,
            budget: None,
            backtrack_limit: None,
            cost_tol: 1e-9,
            tie_break: TieBreak::EnumerationOrder,
            solver: SolverSettings::default(),
        }
    }
}

impl SearchSettings {
    pub fn with_lookahead(n: usize) -> Self {
        SearchSettings { lookahead: n, ..Self::default() }
    }

    pub fn budget_for(&self, g: &Gcs) -> usize {
        self.budget.unwrap_or(10 * g.num_vertices())
    }

    pub fn backtrack_limit_for(&self, g: &Gcs) -> usize {
        self.backtrack_limit.unwrap_or_else(|| self.budget_for(g))
    }

    fn check(&self) -> Result<()> {
        if self.lookahead == 0 {
            return Err(GcsError::InvalidArgument("lookahead must be at least 1".into()));
        }
        if self.budget == Some(0) {
            return Err(GcsError::InvalidArgument("budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// Walks of exactly `n` edges from `v` that avoid the target, plus walks of
/// at most `n` edges that end at the target (the target is absorbing).
/// Ordered lexicographically by edge id sequence, a prefix first.
pub fn enumerate_lookahead_walks(g: &Gcs, v: VertexIdx, n: usize) -> Vec<Vec<EdgeIdx>> {
    fn rec(g: &Gcs, v: VertexIdx, n: usize, prefix: &mut Vec<EdgeIdx>, out: &mut Vec<Vec<EdgeIdx>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for &e in g.out_edges(v) {
            let head = g.edge(e).head;
            prefix.push(e);
            if head == g.target() {
                out.push(prefix.clone());
            } else {
                rec(g, head, n, prefix, out);
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(g, v, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Where the search currently is.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchState {
    pub vertices: Vec<VertexIdx>,
    pub edges: Vec<EdgeIdx>,
    pub points: Vec<Vec<f64>>,
}

impl SearchState {
    pub fn at_source(g: &Gcs) -> Self {
        SearchState { vertices: vec![g.source()], edges: Vec::new(), points: vec![g.source_point().to_vec()] }
    }

    pub fn vertex(&self) -> VertexIdx {
        *self.vertices.last().expect("state is never empty")
    }

    pub fn point(&self) -> &[f64] {
        self.points.last().expect("state is never empty")
    }

    fn push(&mut self, g: &Gcs, e: EdgeIdx, x: Vec<f64>) {
        self.vertices.push(g.edge(e).head);
        self.edges.push(e);
        self.points.push(x);
    }

    fn pop(&mut self) {
        self.vertices.pop();
        self.edges.pop();
        self.points.pop();
    }
}

/// A scored lookahead candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub edges: Vec<EdgeIdx>,
    pub objective: f64,
    /// Point chosen for the head of the first edge.
    pub next_point: Vec<f64>,
}

/// Feasible candidates ranked best first, and a trace of all of them.
pub struct StepResult {
    pub ranked: Vec<Candidate>,
    pub trace: Vec<CandidateTrace>,
}

/// Score every lookahead candidate from `state` and rank the feasible ones.
///
/// A candidate ending at the target pins its last point to the target point
/// and keeps the target cost; its objective is then the exact remaining
/// cost. Other candidates leave the last point free and replace the last
/// vertex cost by its lower bound.
pub fn lookahead_step(
    g: &Gcs,
    bounds: &LowerBoundSet,
    state: &SearchState,
    settings: &SearchSettings,
) -> Result<StepResult> {
    settings.check()?;
    let walks = enumerate_lookahead_walks(g, state.vertex(), settings.lookahead);
    let specs: Vec<RestrictionSpec> = walks
        .iter()
        .map(|w| {
            let last = g.edge(*w.last().expect("non-empty walk")).head;
            let end = if last == g.target() {
                EndCondition::Pinned(g.target_point().to_vec())
            } else {
                EndCondition::Free { terminal: Some(bounds.bound(last).clone()), drop_last_vertex_cost: true }
            };
            RestrictionSpec { start_vertex: state.vertex(), start_point: state.point().to_vec(), edges: w.clone(), end }
        })
        .collect();
    let outcomes = solve_restrictions(g, &specs, &settings.solver)?;
    let mut feasible = Vec::new();
    let mut trace = Vec::with_capacity(walks.len());
    for (w, out) in walks.into_iter().zip(outcomes) {
        trace.push(CandidateTrace {
            edges: w.iter().map(|e| g.edge(*e).id.clone()).collect(),
            status: out.status,
            objective: out.objective,
        });
        if out.status == SolveStatus::NumericalFailure {
            log::warn!("lookahead candidate failed: {}", out.message);
        }
        if let (SolveStatus::Optimal, Some(obj), Some(traj)) = (out.status, out.objective, out.trajectory) {
            feasible.push(Candidate { edges: w, objective: obj, next_point: traj[1].clone() });
        }
    }
    Ok(StepResult { ranked: rank(feasible, settings.cost_tol), trace })
}

/// Repeatedly take the earliest candidate within `tol` of the best
/// remaining objective.
fn rank(mut rest: Vec<Candidate>, tol: f64) -> Vec<Candidate> {
    let mut ranked = Vec::with_capacity(rest.len());
    while !rest.is_empty() {
        let best = rest.iter().map(|c| c.objective).fold(f64::INFINITY, f64::min);
        let i = rest.iter().position(|c| c.objective <= best + tol).expect("minimum exists");
        ranked.push(rest.remove(i));
    }
    ranked
}

/// A finished search together with its trace.
pub struct SearchOutcome {
    pub solution: WalkSolution,
    pub iterations: usize,
    pub backtracks: usize,
    pub trace: Vec<TraceEvent>,
}

/// Greedy lookahead search from the source point to the target point.
pub fn greedy_search(g: &Gcs, bounds: &LowerBoundSet, settings: &SearchSettings) -> Result<SearchOutcome> {
    let mut trace = Vec::new();
    let mut out = greedy_search_traced(g, bounds, settings, &mut trace)?;
    out.trace = trace;
    Ok(out)
}

/// [`greedy_search`] appending its trace to `trace`, which keeps the events
/// when the search fails. The returned outcome has an empty trace.
pub fn greedy_search_traced(
    g: &Gcs,
    bounds: &LowerBoundSet,
    settings: &SearchSettings,
    trace: &mut Vec<TraceEvent>,
) -> Result<SearchOutcome> {
    settings.check()?;
    bounds.check_instance(g)?;
    let budget = settings.budget_for(g);
    let backtrack_limit = settings.backtrack_limit_for(g);
    let mut state = SearchState::at_source(g);
    // Untried alternatives for the step taken at each depth.
    let mut frontier: Vec<Vec<Candidate>> = Vec::new();
    let mut iterations = 0;
    let mut backtracks = 0;

    let fail = |trace: &mut Vec<TraceEvent>, reason: String| {
        trace.push(TraceEvent::Failed { reason: reason.clone() });
        GcsError::SearchFailed(reason)
    };

    while state.vertex() != g.target() {
        if iterations == budget {
            let reason = format!("budget of {budget} steps exhausted at depth {}", state.edges.len());
            return Err(fail(trace, reason));
        }
        iterations += 1;
        let step = lookahead_step(g, bounds, &state, settings)?;
        let mut ranked = step.ranked.into_iter();
        let chosen = ranked.next();
        trace.push(TraceEvent::Step {
            iteration: iterations,
            depth: state.edges.len(),
            vertex: g.vertex(state.vertex()).id.clone(),
            candidates: step.trace,
            chosen: chosen.as_ref().map(|c| c.edges.iter().map(|e| g.edge(*e).id.clone()).collect()),
        });
        if let Some(c) = chosen {
            frontier.push(ranked.collect());
            state.push(g, c.edges[0], c.next_point);
            continue;
        }
        // Dead end: unwind to the deepest level with an untried alternative.
        let from = state.edges.len();
        let mut unwound = 0;
        let next = loop {
            let Some(level) = frontier.last_mut() else {
                return Err(fail(trace, "no alternatives left to backtrack to".into()));
            };
            if unwound == backtrack_limit {
                let reason = format!("backtrack limit of {backtrack_limit} levels reached");
                return Err(fail(trace, reason));
            }
            state.pop();
            unwound += 1;
            if !level.is_empty() {
                break level.remove(0);
            }
            frontier.pop();
        };
        backtracks += 1;
        trace.push(TraceEvent::Backtrack {
            iteration: iterations,
            from_depth: from,
            to_depth: state.edges.len(),
            edges: next.edges.iter().map(|e| g.edge(*e).id.clone()).collect(),
        });
        state.push(g, next.edges[0], next.next_point);
    }
    let solution = WalkSolution::from_edges(g, &state.edges, state.points)?;
    trace.push(TraceEvent::Done { cost: solution.cost, k: solution.k });
    Ok(SearchOutcome { solution, iterations, backtracks, trace: Vec::new() })
}

/// Greedy search followed by trajectory reoptimization and cycle
/// shortcutting.
pub struct PipelineOutcome {
    pub greedy: WalkSolution,
    pub reoptimized: WalkSolution,
    pub shortcut: WalkSolution,
    pub iterations: usize,
    pub backtracks: usize,
    pub trace: Vec<TraceEvent>,
}

pub fn search_and_refine(g: &Gcs, bounds: &LowerBoundSet, settings: &SearchSettings) -> Result<PipelineOutcome> {
    let out = greedy_search(g, bounds, settings)?;
    let reoptimized = reoptimize_trajectory(g, &out.solution, &settings.solver)?;
    let shortcut = shortcut_cycles(g, &reoptimized, settings.cost_tol, &settings.solver)?;
    Ok(PipelineOutcome {
        greedy: out.solution,
        reoptimized,
        shortcut,
        iterations: out.iterations,
        backtracks: out.backtracks,
        trace: out.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcs::{EdgeDoc, GcsDocument, VertexDoc};
    use crate::library::build_planar_instance;
    use crate::quadratic::QuadraticFunction;
    use crate::sets::ConvexSet;
    use crate::synthesis::{synthesize, ObjectiveSpec, SynthesisSettings};
    use approx::assert_abs_diff_eq;

    fn v(id: &str, set: ConvexSet) -> VertexDoc {
        VertexDoc { id: id.into(), set, cost: None }
    }

    fn e(id: &str, tail: &str, head: &str, set: Option<ConvexSet>, cost: Option<QuadraticFunction>) -> EdgeDoc {
        EdgeDoc { id: id.into(), tail: tail.into(), head: head.into(), set, cost }
    }

    fn doc(vertices: Vec<VertexDoc>, edges: Vec<EdgeDoc>, s: f64, t: f64) -> GcsDocument {
        GcsDocument {
            vertices,
            edges,
            source: "s".into(),
            target: "t".into(),
            source_point: vec![s],
            target_point: vec![t],
        }
    }

    fn interval(lo: f64, hi: f64) -> ConvexSet {
        ConvexSet::boxed(&[lo], &[hi]).unwrap()
    }

    /// `x_head = x_tail` on a pair of 1-D points.
    fn same() -> Option<ConvexSet> {
        Some(ConvexSet::affine_equalities(vec![vec![-1.0, 1.0]], vec![0.0]).unwrap())
    }

    fn ids(g: &Gcs, walks: &[Vec<EdgeIdx>]) -> Vec<Vec<String>> {
        walks.iter().map(|w| w.iter().map(|e| g.edge(*e).id.clone()).collect()).collect()
    }

    fn bounds(g: &Gcs) -> LowerBoundSet {
        synthesize(g, &ObjectiveSpec::SourceValue, &SynthesisSettings::default()).unwrap()
    }

    #[test]
    fn lookahead_walks_stop_at_the_target() {
        let g = Gcs::from_document(&crate::gcs::tests::single_edge()).unwrap();
        assert_eq!(ids(&g, &enumerate_lookahead_walks(&g, g.source(), 2)), vec![vec!["st"]]);
        assert!(enumerate_lookahead_walks(&g, g.target(), 2).is_empty());
    }

    #[test]
    fn two_mode_lookahead_has_four_walks() {
        let d = doc(
            vec![
                v("s", interval(0.0, 0.0)),
                v("t", interval(1.0, 1.0)),
                v("N", interval(0.0, 1.0)),
                v("C", interval(1.0, 2.0)),
            ],
            vec![
                e("st", "s", "t", None, None),
                e("NN", "N", "N", None, None),
                e("NC", "N", "C", None, None),
                e("CN", "C", "N", None, None),
                e("CC", "C", "C", None, None),
            ],
            0.0,
            1.0,
        );
        let g = Gcs::from_document(&d).unwrap();
        let n = g.vertex_idx("N").unwrap();
        assert_eq!(
            ids(&g, &enumerate_lookahead_walks(&g, n, 2)),
            vec![vec!["NC", "CC"], vec!["NC", "CN"], vec!["NN", "NC"], vec!["NN", "NN"]]
        );
    }

    #[test]
    fn single_edge_search() {
        let g = Gcs::from_document(&crate::gcs::tests::single_edge()).unwrap();
        let b = bounds(&g);
        let step = lookahead_step(&g, &b, &SearchState::at_source(&g), &SearchSettings::default()).unwrap();
        assert_eq!(step.ranked[0].next_point, vec![1.0, 0.0]);
        let out = greedy_search(&g, &b, &SearchSettings::default()).unwrap();
        assert_eq!(out.solution.walk, vec!["s", "t"]);
        assert_abs_diff_eq!(out.solution.cost, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn ties_go_to_the_first_candidate() {
        let sq = || {
            let mut c = QuadraticFunction::squared_difference(1, 1.0);
            c.add_constant(1.0);
            Some(c)
        };
        let d = doc(
            vec![
                v("s", interval(0.0, 0.0)),
                v("a", interval(0.0, 1.0)),
                v("b", interval(0.0, 1.0)),
                v("t", interval(1.0, 1.0)),
            ],
            vec![
                e("sb", "s", "b", None, sq()),
                e("sa", "s", "a", None, sq()),
                e("at", "a", "t", None, sq()),
                e("bt", "b", "t", None, sq()),
            ],
            0.0,
            1.0,
        );
        let g = Gcs::from_document(&d).unwrap();
        let out = greedy_search(&g, &bounds(&g), &SearchSettings::default()).unwrap();
        assert_eq!(out.solution.edge_ids, vec!["sa", "at"]);
    }

    #[test]
    fn first_step_on_the_planar_example_follows_the_optimal_walk() {
        let g = build_planar_instance().unwrap();
        let b = bounds(&g);
        let settings = SearchSettings::with_lookahead(1);
        let step = lookahead_step(&g, &b, &SearchState::at_source(&g), &settings).unwrap();
        assert_eq!(g.edge(step.ranked[0].edges[0]).id, "s-a");
        let out = search_and_refine(&g, &b, &SearchSettings::default()).unwrap();
        assert_eq!(out.shortcut.walk, vec!["s", "a", "a", "a", "b", "c", "b", "t"]);
        assert_abs_diff_eq!(out.shortcut.cost, 18.25, epsilon = 1e-6);
    }

    /// From `a` at 0 the cheap exit leads to a dead end `d`; the target
    /// needs `a` revisited twice with unit steps.
    fn dead_end_instance() -> Gcs {
        let step = ConvexSet::polyhedron(vec![vec![-1.0, 1.0], vec![1.0, -1.0]], vec![1.0, 1.0]).unwrap();
        let mut walk_cost = QuadraticFunction::squared_difference(1, 1.0);
        walk_cost.add_constant(1.0);
        let d = doc(
            vec![
                v("s", interval(0.0, 0.0)),
                v("a", interval(0.0, 2.0)),
                v("d", interval(0.0, 0.0)),
                v("t", interval(2.0, 2.0)),
            ],
            vec![
                e("sa", "s", "a", same(), None),
                e("aa", "a", "a", Some(step), Some(walk_cost)),
                e("ad", "a", "d", same(), None),
                e("at", "a", "t", same(), None),
            ],
            0.0,
            2.0,
        );
        Gcs::from_document(&d).unwrap()
    }

    #[test]
    fn backtracking_escapes_a_dead_end() {
        let g = dead_end_instance();
        let b = bounds(&g);
        let settings = SearchSettings::with_lookahead(1);
        let out = greedy_search(&g, &b, &settings).unwrap();
        assert!(out.backtracks >= 1);
        let w = &out.solution.walk;
        assert!(w.len() >= 5 && w[0] == "s" && w[w.len() - 1] == "t", "{w:?}");
        assert!(w[1..w.len() - 1].iter().all(|x| x == "a"), "{w:?}");
        crate::walk::check_solution(&g, &out.solution).unwrap();
        let lines = TraceEvent::to_json_lines(&out.trace);
        assert!(lines.lines().any(|l| l.contains("\"event\":\"backtrack\"")));

        let none = SearchSettings { backtrack_limit: Some(0), ..settings };
        assert!(matches!(greedy_search(&g, &b, &none), Err(GcsError::SearchFailed(_))));
    }

    #[test]
    fn budget_is_enforced() {
        let g = build_planar_instance().unwrap();
        let settings = SearchSettings { budget: Some(2), ..SearchSettings::default() };
        assert!(matches!(greedy_search(&g, &bounds(&g), &settings), Err(GcsError::SearchFailed(_))));
    }

    #[test]
    fn reoptimization_spaces_a_chain_evenly() {
        let sq = || Some(QuadraticFunction::squared_difference(1, 1.0));
        let d = doc(
            vec![
                v("s", interval(0.0, 0.0)),
                v("a", interval(-5.0, 5.0)),
                v("b", interval(-5.0, 5.0)),
                v("t", interval(3.0, 3.0)),
            ],
            vec![e("sa", "s", "a", None, sq()), e("ab", "a", "b", None, sq()), e("bt", "b", "t", None, sq())],
            0.0,
            3.0,
        );
        let g = Gcs::from_document(&d).unwrap();
        let edges: Vec<EdgeIdx> = ["sa", "ab", "bt"].iter().map(|id| g.edge_idx(id).unwrap()).collect();
        let rough = WalkSolution::from_edges(&g, &edges, vec![vec![0.0], vec![0.0], vec![0.0], vec![3.0]]).unwrap();
        assert_abs_diff_eq!(rough.cost, 9.0, epsilon = 1e-12);
        let s = SolverSettings::default();
        let better = reoptimize_trajectory(&g, &rough, &s).unwrap();
        assert_eq!(better.walk, rough.walk);
        for (x, want) in better.trajectory.iter().zip([0.0, 1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(x[0], want, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(better.cost, 3.0, epsilon = 1e-6);
        let again = reoptimize_trajectory(&g, &better, &s).unwrap();
        assert!(again.cost <= better.cost + 1e-9);
    }

    #[test]
    fn shortcut_removes_a_loop_that_only_costs_epsilon() {
        let d = doc(
            vec![
                v("s", interval(0.0, 0.0)),
                v("a", interval(0.0, 1.0)),
                v("b", interval(0.0, 1.0)),
                v("t", interval(1.0, 1.0)),
            ],
            vec![
                e("sa", "s", "a", None, None),
                e("ab", "a", "b", None, None),
                e("ba", "b", "a", None, None),
                e("at", "a", "t", None, None),
            ],
            0.0,
            1.0,
        );
        let eps = 0.01;
        let g = Gcs::from_document(&d).unwrap().apply_epsilon_edge_costs(eps).unwrap();
        let edges: Vec<EdgeIdx> = ["sa", "ab", "ba", "at"].iter().map(|id| g.edge_idx(id).unwrap()).collect();
        let looped =
            WalkSolution::from_edges(&g, &edges, vec![vec![0.0], vec![0.5], vec![0.5], vec![0.5], vec![1.0]]).unwrap();
        let s = SolverSettings::default();
        let short = shortcut_cycles(&g, &looped, 1e-9, &s).unwrap();
        assert_eq!(short.walk, vec!["s", "a", "t"]);
        assert!(looped.cost - short.cost >= 2.0 * eps - 1e-9);
    }

    #[test]
    fn shortcut_keeps_beneficial_revisits() {
        let g = build_planar_instance().unwrap();
        let out = search_and_refine(&g, &bounds(&g), &SearchSettings::default()).unwrap();
        let again = shortcut_cycles(&g, &out.reoptimized, 1e-9, &SolverSettings::default()).unwrap();
        assert_eq!(again.walk, out.reoptimized.walk);
    }

    #[test]
    fn search_is_deterministic() {
        let g = build_planar_instance().unwrap();
        let b = bounds(&g);
        let a = greedy_search(&g, &b, &SearchSettings::default()).unwrap();
        let c = greedy_search(&g, &b, &SearchSettings::default()).unwrap();
        assert_eq!(a.solution, c.solution);
        assert_eq!(TraceEvent::to_json_lines(&a.trace), TraceEvent::to_json_lines(&c.trace));
    }
}
