//! Exhaustive ground truth for small instances: every s-t walk with exactly
//! `K` steps is enumerated and its restriction solved.

use serde::{Deserialize, Serialize};

use crate::conic::SolverSettings;
use crate::error::{GcsError, Result};
use crate::gcs::{EdgeDoc, EdgeIdx, Gcs, GcsDocument, VertexDoc, VertexIdx};
use crate::walk::{solve_walks, WalkSolution};

pub const DEFAULT_CAP: usize = 1_000_000;
const BATCH: usize = 2048;

#[derive(Clone, Debug)]
pub struct OracleSettings {
    pub k_max: usize,
    /// Maximum number of walks enumerated for one `K`.
    pub cap: usize,
    /// The sweep counts as stabilized when the best cost has not improved over
    /// the last `window` values of `K`.
    pub window: usize,
    pub improvement_tol: f64,
    pub solver: SolverSettings,
}

impl OracleSettings {
    pub fn new(k_max: usize) -> Self {
        Self { k_max, cap: DEFAULT_CAP, window: 3, improvement_tol: 1e-6, solver: SolverSettings::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerK {
    #[serde(rename = "K")]
    pub k: usize,
    pub walks: usize,
    pub feasible: usize,
    pub best: Option<WalkSolution>,
}

impl PerK {
    pub fn cost(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.cost)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub per_k: Vec<PerK>,
    pub best: Option<WalkSolution>,
    pub total_walks: usize,
    /// No improvement over the last `window` values of `K`.
    pub stabilized: bool,
    /// Smallest `K` whose running best is within tolerance of the final best.
    pub stabilized_at: Option<usize>,
    /// Per-K best costs strictly decrease from the first feasible `K` on.
    pub strictly_decreasing: bool,
}

/// All walks from the source to the target with exactly `k` steps, as edge
/// sequences in lexicographic order of edge ids.
pub fn enumerate_walks(g: &Gcs, k: usize, cap: usize) -> Result<Vec<Vec<EdgeIdx>>> {
    enumerate_walks_between(g, g.source(), g.target(), k, cap)
}

pub fn enumerate_walks_between(g: &Gcs, s: VertexIdx, t: VertexIdx, k: usize, cap: usize) -> Result<Vec<Vec<EdgeIdx>>> {
    if k == 0 {
        return Err(GcsError::InvalidArgument("K must be at least 1".into()));
    }
    let hops = hops_to(g, t);
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(k);
    dfs(g, s, t, k, &hops, &mut stack, &mut out, cap)?;
    Ok(out)
}

fn hops_to(g: &Gcs, t: VertexIdx) -> Vec<Option<usize>> {
    if t == g.target() {
        return g.hops_to_target();
    }
    let mut dist = vec![None; g.num_vertices()];
    dist[t.0] = Some(0);
    let mut queue = std::collections::VecDeque::from([t]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v.0].unwrap_or(0);
        for e in g.in_edges(v) {
            let u = g.edge(*e).tail;
            if dist[u.0].is_none() {
                dist[u.0] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    g: &Gcs,
    v: VertexIdx,
    t: VertexIdx,
    remaining: usize,
    hops: &[Option<usize>],
    stack: &mut Vec<EdgeIdx>,
    out: &mut Vec<Vec<EdgeIdx>>,
    cap: usize,
) -> Result<()> {
    if remaining == 0 {
        if v == t {
            if out.len() == cap {
                return Err(GcsError::EnumerationCap { cap, k: stack.len() });
            }
            out.push(stack.clone());
        }
        return Ok(());
    }
    for &e in g.out_edges(v) {
        let w = g.edge(e).head;
        match hops[w.0] {
            Some(h) if h <= remaining - 1 => {}
            _ => continue,
        }
        stack.push(e);
        dfs(g, w, t, remaining - 1, hops, stack, out, cap)?;
        stack.pop();
    }
    Ok(())
}

/// True when the walk visits no vertex twice.
pub fn is_path(g: &Gcs, edges: &[EdgeIdx]) -> bool {
    let mut seen = vec![false; g.num_vertices()];
    let mut v = g.source();
    seen[v.0] = true;
    for e in edges {
        v = g.edge(*e).head;
        if std::mem::replace(&mut seen[v.0], true) {
            return false;
        }
    }
    true
}

/// Best trajectory among `walks`, solved in batches. Ties keep the earlier walk.
pub fn best_of(g: &Gcs, walks: &[Vec<EdgeIdx>], solver: &SolverSettings) -> Result<(Option<WalkSolution>, usize)> {
    let mut best: Option<WalkSolution> = None;
    let mut feasible = 0;
    for chunk in walks.chunks(BATCH) {
        for res in solve_walks(g, chunk, solver)? {
            if let Some(sol) = res? {
                feasible += 1;
                if best.as_ref().map_or(true, |b| sol.cost < b.cost) {
                    best = Some(sol);
                }
            }
        }
    }
    Ok((best, feasible))
}

/// Sweep `K = 1..=k_max`, keeping the best walk for each `K` and overall.
pub fn exact_best_walk(g: &Gcs, settings: &OracleSettings) -> Result<OracleResult> {
    exact_best_walk_filtered(g, settings, |_, _| true)
}

/// [`exact_best_walk`] restricted to walks accepted by `keep`.
pub fn exact_best_walk_filtered(
    g: &Gcs,
    settings: &OracleSettings,
    keep: impl Fn(&Gcs, &[EdgeIdx]) -> bool,
) -> Result<OracleResult> {
    let mut per_k = Vec::with_capacity(settings.k_max);
    let mut total = 0;
    for k in 1..=settings.k_max {
        let walks: Vec<Vec<EdgeIdx>> =
            enumerate_walks(g, k, settings.cap)?.into_iter().filter(|w| keep(g, w)).collect();
        total += walks.len();
        let (best, feasible) = best_of(g, &walks, &settings.solver)?;
        log::debug!("K = {k}: {} walks, {feasible} feasible, best {:?}", walks.len(), best.as_ref().map(|b| b.cost));
        per_k.push(PerK { k, walks: walks.len(), feasible, best });
    }
    Ok(summarize(per_k, total, settings))
}

fn summarize(per_k: Vec<PerK>, total_walks: usize, settings: &OracleSettings) -> OracleResult {
    let mut best: Option<WalkSolution> = None;
    let mut running = Vec::with_capacity(per_k.len());
    for p in &per_k {
        if let Some(b) = &p.best {
            if best.as_ref().map_or(true, |c| b.cost < c.cost) {
                best = Some(b.clone());
            }
        }
        running.push(best.as_ref().map_or(f64::INFINITY, |b| b.cost));
    }
    let tol = settings.improvement_tol;
    let last = running.last().copied().unwrap_or(f64::INFINITY);
    let stabilized = last.is_finite()
        && running.len() > settings.window
        && running[running.len() - 1 - settings.window] - last <= tol;
    let stabilized_at =
        if last.is_finite() { running.iter().position(|r| r - last <= tol).map(|i| per_k[i].k) } else { None };
    let costs: Vec<f64> = per_k.iter().filter_map(PerK::cost).collect();
    let first_feasible = per_k.iter().position(|p| p.best.is_some());
    let strictly_decreasing = match first_feasible {
        Some(i) => per_k[i..].iter().all(|p| p.best.is_some()) && costs.windows(2).all(|w| w[1] < w[0] - 1e-9),
        None => false,
    };
    OracleResult { per_k, best, total_walks, stabilized, stabilized_at, strictly_decreasing }
}

/// Acyclic expansion whose s-t paths correspond one-to-one to the walks of
/// `g` with at most `k` steps.
///
/// Layer 0 holds the source, layers `1..k` hold copies `v@i` of every vertex,
/// and layer `k` holds only the target. An edge `e = (u, v)` becomes `e@i`
/// from `u@i` to `v@(i+1)`; when `v` is the target it also becomes an early
/// arc `e@i>end` into the last layer. Copies that lie on no s-t path are
/// dropped.
pub fn build_layered_gcs(g: &Gcs, k: usize) -> Result<Gcs> {
    if k == 0 {
        return Err(GcsError::InvalidArgument("K must be at least 1".into()));
    }
    let n = g.num_vertices();
    let (s, t) = (g.source(), g.target());
    // Node (layer, vertex); layer k holds only the target.
    let node = |layer: usize, v: usize| layer * n + v;
    let total_nodes = (k + 1) * n;
    let mut exists = vec![false; total_nodes];
    exists[node(0, s.0)] = true;
    for layer in 1..k {
        for v in 0..n {
            exists[node(layer, v)] = true;
        }
    }
    exists[node(k, t.0)] = true;

    struct Arc {
        id: String,
        edge: EdgeIdx,
        from: usize,
        to: usize,
    }
    let mut arcs = Vec::new();
    for layer in 0..k {
        for (ei, e) in g.edges().iter().enumerate() {
            let from = node(layer, e.tail.0);
            if !exists[from] {
                continue;
            }
            if layer + 1 < k {
                arcs.push(Arc {
                    id: format!("{}@{layer}", e.id),
                    edge: EdgeIdx(ei),
                    from,
                    to: node(layer + 1, e.head.0),
                });
                if e.head == t {
                    arcs.push(Arc { id: format!("{}@{layer}>end", e.id), edge: EdgeIdx(ei), from, to: node(k, t.0) });
                }
            } else if e.head == t {
                arcs.push(Arc { id: format!("{}@{layer}", e.id), edge: EdgeIdx(ei), from, to: node(k, t.0) });
            }
        }
    }
    // Keep nodes reachable from the source copy and reaching the target copy.
    let mut fwd = vec![false; total_nodes];
    fwd[node(0, s.0)] = true;
    for layer in 0..k {
        for a in &arcs {
            if a.from / n == layer && fwd[a.from] {
                fwd[a.to] = true;
            }
        }
    }
    let mut bwd = vec![false; total_nodes];
    bwd[node(k, t.0)] = true;
    for layer in (0..k).rev() {
        for a in &arcs {
            if a.from / n == layer && bwd[a.to] {
                bwd[a.from] = true;
            }
        }
    }
    let keep = |x: usize| exists[x] && fwd[x] && bwd[x];
    let name = |x: usize| format!("{}@{}", g.vertex(VertexIdx(x % n)).id, x / n);

    let mut vertices = Vec::new();
    for x in 0..total_nodes {
        if keep(x) {
            let v = g.vertex(VertexIdx(x % n));
            vertices.push(VertexDoc { id: name(x), set: v.set.clone(), cost: Some(v.cost.clone()) });
        }
    }
    if !keep(node(0, s.0)) {
        // No walk of length <= k: keep the two terminals so the instance is well formed.
        for x in [node(0, s.0), node(k, t.0)] {
            let v = g.vertex(VertexIdx(x % n));
            vertices.push(VertexDoc { id: name(x), set: v.set.clone(), cost: Some(v.cost.clone()) });
        }
    }
    let edges = arcs
        .iter()
        .filter(|a| keep(a.from) && keep(a.to))
        .map(|a| {
            let e = g.edge(a.edge);
            EdgeDoc {
                id: a.id.clone(),
                tail: name(a.from),
                head: name(a.to),
                set: e.coupling.clone(),
                cost: Some(e.cost.clone()),
            }
        })
        .collect();
    Gcs::from_document_with(
        &GcsDocument {
            vertices,
            edges,
            source: name(node(0, s.0)),
            target: name(node(k, t.0)),
            source_point: g.source_point().to_vec(),
            target_point: g.target_point().to_vec(),
        },
        g.tolerances(),
    )
}

/// Best s-t path of the layered expansion, found with the same enumeration
/// and restriction machinery.
pub fn layered_optimum(g: &Gcs, k: usize, solver: &SolverSettings) -> Result<Option<f64>> {
    let layered = build_layered_gcs(g, k)?;
    let mut best: Option<f64> = None;
    for kk in 1..=k {
        let walks = enumerate_walks(&layered, kk, DEFAULT_CAP)?;
        if let (Some(sol), _) = best_of(&layered, &walks, solver)? {
            if best.map_or(true, |b| sol.cost < b) {
                best = Some(sol.cost);
            }
        }
    }
    Ok(best)
}

/// Number of s-t paths in an acyclic instance (by dynamic programming).
pub fn count_paths(g: &Gcs) -> usize {
    fn count(g: &Gcs, v: VertexIdx, memo: &mut Vec<Option<usize>>) -> usize {
        if v == g.target() {
            return 1;
        }
        if let Some(c) = memo[v.0] {
            return c;
        }
        let c = g.out_edges(v).iter().map(|e| count(g, g.edge(*e).head, memo)).sum();
        memo[v.0] = Some(c);
        c
    }
    count(g, g.source(), &mut vec![None; g.num_vertices()])
}
