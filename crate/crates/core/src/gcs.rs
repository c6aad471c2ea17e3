//! Graph of convex sets: vertices with sets and costs, edges with coupling
//! sets and costs, a source and a target.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GcsError, Result};
use crate::quadratic::QuadraticFunction;
use crate::sets::{ConvexSet, SetDescription};
use crate::tol::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexIdx(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeIdx(pub usize);

/// Vertex as written in an instance file. A missing cost means zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub id: String,
    pub set: ConvexSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<QuadraticFunction>,
}

/// Edge as written in an instance file. `set` is the coupling set over
/// `(x_tail, x_head)`; a missing set means no coupling beyond the endpoint
/// sets, a missing cost means zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub tail: String,
    pub head: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<ConvexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<QuadraticFunction>,
}

/// Serialized form of a [`Gcs`]. Vertices and edges keep file order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcsDocument {
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
    pub source: String,
    pub target: String,
    pub source_point: Vec<f64>,
    pub target_point: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Vertex {
    pub id: String,
    pub set: ConvexSet,
    pub cost: QuadraticFunction,
    pub(crate) desc: SetDescription,
}

impl Vertex {
    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn description(&self) -> &SetDescription {
        &self.desc
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub id: String,
    pub tail: VertexIdx,
    pub head: VertexIdx,
    /// User-supplied coupling set, if any.
    pub coupling: Option<ConvexSet>,
    /// Coupling intersected with `X_tail × X_head`.
    pub set: ConvexSet,
    pub cost: QuadraticFunction,
    pub(crate) desc: SetDescription,
}

impl Edge {
    pub fn description(&self) -> &SetDescription {
        &self.desc
    }
}

/// A validated, immutable GCS instance.
#[derive(Clone, Debug)]
pub struct Gcs {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_ids: HashMap<String, VertexIdx>,
    edge_ids: HashMap<String, EdgeIdx>,
    out_edges: Vec<Vec<EdgeIdx>>,
    in_edges: Vec<Vec<EdgeIdx>>,
    source: VertexIdx,
    target: VertexIdx,
    source_point: Vec<f64>,
    target_point: Vec<f64>,
    tol: Tolerances,
}

impl Gcs {
    pub fn from_document(doc: &GcsDocument) -> Result<Self> {
        Self::from_document_with(doc, &Tolerances::default())
    }

    /// Validate `doc` and build the instance.
    ///
    /// Checks: unique ids, well-formed sets, cost dimensions, cost convexity,
    /// nonempty and bounded vertex sets, endpoint membership.
    pub fn from_document_with(doc: &GcsDocument, tol: &Tolerances) -> Result<Self> {
        let mut vertex_ids = HashMap::new();
        for (i, v) in doc.vertices.iter().enumerate() {
            if vertex_ids.insert(v.id.clone(), VertexIdx(i)).is_some() {
                return Err(GcsError::DuplicateId(v.id.clone()));
            }
        }
        let mut vertices = Vec::with_capacity(doc.vertices.len());
        for v in &doc.vertices {
            let dim = v.set.validate(tol).map_err(|e| GcsError::InvalidSet(format!("vertex `{}`: {e}", v.id)))?;
            let cost = v.cost.clone().unwrap_or_else(|| QuadraticFunction::zero(dim));
            check_cost(&cost, dim, &format!("vertex `{}`", v.id), tol)?;
            vertices.push(Vertex { id: v.id.clone(), desc: v.set.describe(), set: v.set.clone(), cost });
        }
        // Compactness and nonemptiness of every vertex set.
        vertices
            .par_iter()
            .map(|v| v.set.extents(&format!("vertex `{}`", v.id)).map(|_| ()))
            .collect::<Result<Vec<()>>>()?;

        let mut edge_ids = HashMap::new();
        let mut edges = Vec::with_capacity(doc.edges.len());
        for (i, e) in doc.edges.iter().enumerate() {
            if edge_ids.insert(e.id.clone(), EdgeIdx(i)).is_some() {
                return Err(GcsError::DuplicateId(e.id.clone()));
            }
            let tail = *vertex_ids.get(&e.tail).ok_or_else(|| GcsError::UnknownVertex(e.tail.clone()))?;
            let head = *vertex_ids.get(&e.head).ok_or_else(|| GcsError::UnknownVertex(e.head.clone()))?;
            let (xu, xv) = (&vertices[tail.0].set, &vertices[head.0].set);
            let dim = xu.dim() + xv.dim();
            let endpoints = ConvexSet::CartesianProduct { factors: vec![xu.clone(), xv.clone()] };
            let set = match &e.set {
                Some(c) => {
                    let d = c.validate(tol).map_err(|err| GcsError::InvalidSet(format!("edge `{}`: {err}", e.id)))?;
                    if d != dim {
                        return Err(GcsError::InvalidSet(format!(
                            "edge `{}`: coupling set has dimension {d}, endpoints need {dim}",
                            e.id
                        )));
                    }
                    ConvexSet::Intersection { members: vec![c.clone(), endpoints] }
                }
                None => endpoints,
            };
            let cost = e.cost.clone().unwrap_or_else(|| QuadraticFunction::zero(dim));
            check_cost(&cost, dim, &format!("edge `{}`", e.id), tol)?;
            edges.push(Edge { id: e.id.clone(), tail, head, coupling: e.set.clone(), desc: set.describe(), set, cost });
        }

        let mut out_edges = vec![Vec::new(); vertices.len()];
        let mut in_edges = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            out_edges[e.tail.0].push(EdgeIdx(i));
            in_edges[e.head.0].push(EdgeIdx(i));
        }
        for list in out_edges.iter_mut().chain(in_edges.iter_mut()) {
            list.sort_by(|a, b| edges[a.0].id.cmp(&edges[b.0].id));
        }

        let source = *vertex_ids.get(&doc.source).ok_or_else(|| GcsError::UnknownVertex(doc.source.clone()))?;
        let target = *vertex_ids.get(&doc.target).ok_or_else(|| GcsError::UnknownVertex(doc.target.clone()))?;
        let g = Gcs {
            vertices,
            edges,
            vertex_ids,
            edge_ids,
            out_edges,
            in_edges,
            source,
            target,
            source_point: Vec::new(),
            target_point: Vec::new(),
            tol: *tol,
        };
        g.with_endpoints(doc.source_point.clone(), doc.target_point.clone())
    }

    /// Same instance with a different source point.
    pub fn with_source_point(&self, x: Vec<f64>) -> Result<Self> {
        self.clone().with_endpoints(x, self.target_point.clone())
    }

    fn with_endpoints(mut self, xs: Vec<f64>, xt: Vec<f64>) -> Result<Self> {
        for (which, v, x) in [("source", self.source, &xs), ("target", self.target, &xt)] {
            let vert = &self.vertices[v.0];
            if x.len() != vert.dim() {
                return Err(GcsError::DimensionMismatch { expected: vert.dim(), got: x.len() });
            }
            if !vert.set.contains(x, self.tol.membership)? {
                return Err(GcsError::EndpointOutsideSet { which, vertex: vert.id.clone() });
            }
        }
        self.source_point = xs;
        self.target_point = xt;
        Ok(self)
    }

    pub fn to_document(&self) -> GcsDocument {
        GcsDocument {
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexDoc { id: v.id.clone(), set: v.set.clone(), cost: Some(v.cost.clone()) })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    id: e.id.clone(),
                    tail: self.vertices[e.tail.0].id.clone(),
                    head: self.vertices[e.head.0].id.clone(),
                    set: e.coupling.clone(),
                    cost: Some(e.cost.clone()),
                })
                .collect(),
            source: self.vertices[self.source.0].id.clone(),
            target: self.vertices[self.target.0].id.clone(),
            source_point: self.source_point.clone(),
            target_point: self.target_point.clone(),
        }
    }

    /// SHA-256 over the canonical JSON of the instance, excluding the source
    /// point so bounds can be reused for queries from other start points.
    pub fn content_hash(&self) -> String {
        let mut doc = self.to_document();
        doc.source_point.clear();
        let bytes = serde_json::to_vec(&doc).expect("documents always serialize");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Copy with `ε` added to every edge cost.
    pub fn apply_epsilon_edge_costs(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(GcsError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
        }
        let mut g = self.clone();
        for e in &mut g.edges {
            e.cost.add_constant(eps);
        }
        Ok(g)
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, v: VertexIdx) -> &Vertex {
        &self.vertices[v.0]
    }

    pub fn edge(&self, e: EdgeIdx) -> &Edge {
        &self.edges[e.0]
    }

    pub fn vertex_idx(&self, id: &str) -> Result<VertexIdx> {
        self.vertex_ids.get(id).copied().ok_or_else(|| GcsError::UnknownVertex(id.to_string()))
    }

    pub fn edge_idx(&self, id: &str) -> Result<EdgeIdx> {
        self.edge_ids.get(id).copied().ok_or_else(|| GcsError::UnknownEdge(id.to_string()))
    }

    /// Out-edges of `v`, sorted by edge id.
    pub fn out_edges(&self, v: VertexIdx) -> &[EdgeIdx] {
        &self.out_edges[v.0]
    }

    /// In-edges of `v`, sorted by edge id.
    pub fn in_edges(&self, v: VertexIdx) -> &[EdgeIdx] {
        &self.in_edges[v.0]
    }

    pub fn source(&self) -> VertexIdx {
        self.source
    }

    pub fn target(&self) -> VertexIdx {
        self.target
    }

    pub fn source_point(&self) -> &[f64] {
        &self.source_point
    }

    pub fn target_point(&self) -> &[f64] {
        &self.target_point
    }

    /// Fewest edges from each vertex to the target (`None` if unreachable).
    pub fn hops_to_target(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertices.len()];
        dist[self.target.0] = Some(0);
        let mut queue = std::collections::VecDeque::from([self.target]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v.0].expect("queued vertices have a distance");
            for e in &self.in_edges[v.0] {
                let u = self.edges[e.0].tail;
                if dist[u.0].is_none() {
                    dist[u.0] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }
}

fn check_cost(cost: &QuadraticFunction, dim: usize, owner: &str, tol: &Tolerances) -> Result<()> {
    if cost.dim() != dim {
        return Err(GcsError::InvalidCost {
            owner: owner.to_string(),
            reason: format!("cost has dimension {}, set has {dim}", cost.dim()),
        });
    }
    let curv = cost.min_curvature();
    if curv < -tol.psd {
        return Err(GcsError::InvalidCost {
            owner: owner.to_string(),
            reason: format!("cost is not convex (min curvature {curv:.3e})"),
        });
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn single_edge() -> GcsDocument {
        let mut cost = QuadraticFunction::squared_difference(2, 1.0);
        cost.add_constant(1.0);
        GcsDocument {
            vertices: vec![
                VertexDoc { id: "s".into(), set: ConvexSet::point(vec![0.0, 0.0]), cost: None },
                VertexDoc { id: "t".into(), set: ConvexSet::point(vec![1.0, 0.0]), cost: None },
            ],
            edges: vec![EdgeDoc { id: "st".into(), tail: "s".into(), head: "t".into(), set: None, cost: Some(cost) }],
            source: "s".into(),
            target: "t".into(),
            source_point: vec![0.0, 0.0],
            target_point: vec![1.0, 0.0],
        }
    }

    #[test]
    fn builds_and_indexes() {
        let g = Gcs::from_document(&single_edge()).unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.out_edges(g.source()).len(), 1);
        assert_eq!(g.hops_to_target(), vec![Some(1), Some(0)]);
    }

    #[test]
    fn rejects_unbounded_vertex_and_names_it() {
        let mut doc = single_edge();
        doc.vertices[0].set = ConvexSet::polyhedron(vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        let err = Gcs::from_document(&doc).unwrap_err();
        assert!(err.to_string().contains("`s`"), "{err}");
    }

    #[test]
    fn rejects_source_outside_set() {
        let mut doc = single_edge();
        doc.source_point = vec![0.5, 0.0];
        assert!(matches!(Gcs::from_document(&doc), Err(GcsError::EndpointOutsideSet { .. })));
    }

    #[test]
    fn rejects_nonconvex_cost() {
        let mut doc = single_edge();
        doc.edges[0].cost = Some(QuadraticFunction::squared_difference(2, -1.0));
        assert!(matches!(Gcs::from_document(&doc), Err(GcsError::InvalidCost { .. })));
    }

    #[test]
    fn epsilon_offsets_add() {
        let g = Gcs::from_document(&single_edge()).unwrap();
        assert!(g.apply_epsilon_edge_costs(0.0).is_err());
        let g2 = g.apply_epsilon_edge_costs(1e-4).unwrap().apply_epsilon_edge_costs(2e-4).unwrap();
        let c = g2.edge(EdgeIdx(0)).cost.constant_part();
        assert!((c - (1.0 + 3e-4)).abs() < 1e-15);
    }

    #[test]
    fn hash_ignores_source_point_only() {
        let mut doc = single_edge();
        doc.vertices[0].set = ConvexSet::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let g = Gcs::from_document(&doc).unwrap();
        let moved = g.with_source_point(vec![0.5, 0.5]).unwrap();
        assert_eq!(g.content_hash(), moved.content_hash());
        let eps = g.apply_epsilon_edge_costs(1e-3).unwrap();
        assert_ne!(g.content_hash(), eps.content_hash());
    }

    #[test]
    fn document_round_trip_is_byte_stable() {
        let g = Gcs::from_document(&single_edge()).unwrap();
        let text = serde_json::to_string_pretty(&g.to_document()).unwrap();
        let doc: GcsDocument = serde_json::from_str(&text).unwrap();
        let again = serde_json::to_string_pretty(&Gcs::from_document(&doc).unwrap().to_document()).unwrap();
        assert_eq!(text, again);
    }
}
