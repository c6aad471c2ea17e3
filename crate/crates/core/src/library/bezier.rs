//! Fixed-duration Bézier pieces, one per visit of a convex region.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::feasible;
use crate::error::{GcsError, Result};
use crate::gcs::{EdgeDoc, Gcs, GcsDocument, VertexDoc};
use crate::quadratic::QuadraticFunction;
use crate::sets::ConvexSet;
use crate::walk::WalkSolution;

pub const START: &str = "start";
pub const GOAL: &str = "goal";

fn default_degree() -> usize {
    3
}

fn default_dt() -> f64 {
    0.125
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub name: String,
    pub set: ConvexSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BezierSpec {
    pub dim: usize,
    pub regions: Vec<Region>,
    /// Unordered pairs of region names; both directions get an edge.
    pub adjacency: Vec<(String, String)>,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub velocity_limit: Vec<f64>,
    pub acceleration_limit: Vec<f64>,
    pub time_weight: f64,
    pub displacement_weight: f64,
    /// Rest position at the start of the first piece.
    pub start: Vec<f64>,
    /// Rest position at the end of the last piece.
    pub goal: Vec<f64>,
}

impl BezierSpec {
    fn check(&self) -> Result<()> {
        let n = self.dim;
        let bad = |m: String| Err(GcsError::InvalidArgument(m));
        if !(self.dt > 0.0) {
            return bad("dt must be positive".into());
        }
        if self.degree < 2 {
            return bad("degree must be at least 2".into());
        }
        for (name, v) in [
            ("velocity_limit", &self.velocity_limit),
            ("acceleration_limit", &self.acceleration_limit),
            ("start", &self.start),
            ("goal", &self.goal),
        ] {
            if v.len() != n {
                return Err(GcsError::DimensionMismatch { expected: n, got: v.len() });
            }
            if name.ends_with("limit") && v.iter().any(|x| !(*x > 0.0)) {
                return bad(format!("{name} must be positive"));
            }
        }
        for r in &self.regions {
            if r.set.dim() != n {
                return Err(GcsError::DimensionMismatch { expected: n, got: r.set.dim() });
            }
            if r.name == START || r.name == GOAL {
                return bad(format!("region name `{}` is reserved", r.name));
            }
        }
        for (a, b) in &self.adjacency {
            for r in [a, b] {
                if !self.regions.iter().any(|x| &x.name == r) {
                    return Err(GcsError::UnknownVertex(r.clone()));
                }
            }
        }
        Ok(())
    }

    fn num_points(&self) -> usize {
        self.degree + 1
    }

    fn velocity_scale(&self) -> f64 {
        self.degree as f64 / self.dt
    }

    fn acceleration_scale(&self) -> f64 {
        (self.degree * (self.degree - 1)) as f64 / (self.dt * self.dt)
    }
}

/// `±scale·Σ w_j p_{i+j,k} <= limit_k` for every window `i` and coordinate `k`.
fn derivative_box(spec: &BezierSpec, weights: &[f64], scale: f64, limit: &[f64]) -> Result<ConvexSet> {
    let n = spec.dim;
    let total = spec.num_points() * n;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..spec.num_points() + 1 - weights.len() {
        for k in 0..n {
            let mut row = vec![0.0; total];
            for (j, w) in weights.iter().enumerate() {
                row[(i + j) * n + k] = scale * w;
            }
            a.push(row.clone());
            b.push(limit[k]);
            a.push(row.iter().map(|x| -x).collect());
            b.push(limit[k]);
        }
    }
    ConvexSet::polyhedron(a, b)
}

fn region_vertex(spec: &BezierSpec, region: &ConvexSet) -> Result<(ConvexSet, QuadraticFunction)> {
    let n = spec.dim;
    let np = spec.num_points();
    let set = ConvexSet::intersection(vec![
        ConvexSet::product(vec![region.clone(); np])?,
        derivative_box(spec, &[-1.0, 1.0], spec.velocity_scale(), &spec.velocity_limit)?,
        derivative_box(spec, &[1.0, -2.0, 1.0], spec.acceleration_scale(), &spec.acceleration_limit)?,
    ])?;
    let mut m = DMatrix::zeros(spec.degree * n, np * n);
    for i in 0..spec.degree {
        for k in 0..n {
            m[(i * n + k, i * n + k)] = -1.0;
            m[(i * n + k, (i + 1) * n + k)] = 1.0;
        }
    }
    let mut cost = QuadraticFunction::squared_norm_of_affine(&m, &DVector::zeros(spec.degree * n))?
        .scaled(spec.displacement_weight);
    cost.add_constant(spec.time_weight * spec.dt);
    Ok((set, cost))
}

/// Equalities `Σ_j c_j x[j] = 0` over a concatenated vector, one per
/// coordinate, given as `(block offset, coefficient)` pairs.
fn block_equalities(n: usize, total: usize, eqs: &[Vec<(usize, f64)>]) -> Result<ConvexSet> {
    let mut rows = Vec::new();
    for terms in eqs {
        for k in 0..n {
            let mut r = vec![0.0; total];
            for (off, c) in terms {
                r[off + k] += c;
            }
            rows.push(r);
        }
    }
    let len = rows.len();
    ConvexSet::affine_equalities(rows, vec![0.0; len])
}

/// Vertices `start`, one per region, and `goal`. Region edges (both
/// directions of each adjacency, plus self-loops) impose position and
/// velocity continuity; the start and goal edges impose rest.
pub fn build_bezier_gcs(spec: &BezierSpec) -> Result<Gcs> {
    spec.check()?;
    let n = spec.dim;
    let np = spec.num_points();
    let pd = np * n;
    let last = spec.degree * n;
    let prev = (spec.degree - 1) * n;

    let start = ConvexSet::point(spec.start.clone());
    let goal = ConvexSet::point(spec.goal.clone());
    let mut vertices = vec![VertexDoc { id: START.into(), set: start.clone(), cost: None }];
    let mut sets = Vec::new();
    for r in &spec.regions {
        let (set, cost) = region_vertex(spec, &r.set)?;
        sets.push(set.clone());
        vertices.push(VertexDoc { id: r.name.clone(), set, cost: Some(cost) });
    }
    vertices.push(VertexDoc { id: GOAL.into(), set: goal.clone(), cost: None });

    let mut pairs: Vec<(usize, usize)> = (0..spec.regions.len()).map(|i| (i, i)).collect();
    let index = |name: &str| spec.regions.iter().position(|r| r.name == name).expect("checked");
    for (a, b) in &spec.adjacency {
        let (i, j) = (index(a), index(b));
        pairs.push((i, j));
        if i != j {
            pairs.push((j, i));
        }
    }
    pairs.sort();
    pairs.dedup();

    let mut edges = Vec::new();
    let mut push = |tail: &str, tail_set: &ConvexSet, head: &str, head_set: &ConvexSet, coupling: ConvexSet| {
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
    for (i, r) in spec.regions.iter().enumerate() {
        // p_0 = p_1 = start.
        let c = block_equalities(n, n + pd, &[vec![(0, -1.0), (n, 1.0)], vec![(0, -1.0), (2 * n, 1.0)]])?;
        push(START, &start, &r.name, &sets[i], c)?;
    }
    for &(i, j) in &pairs {
        // p'_0 = p_d and p'_1 - p'_0 = p_d - p_{d-1}.
        let c = block_equalities(
            n,
            2 * pd,
            &[vec![(last, -1.0), (pd, 1.0)], vec![(last, -1.0), (prev, 1.0), (pd + n, 1.0), (pd, -1.0)]],
        )?;
        push(&spec.regions[i].name, &sets[i], &spec.regions[j].name, &sets[j], c)?;
    }
    for (i, r) in spec.regions.iter().enumerate() {
        // p_{d-1} = p_d = goal.
        let c = block_equalities(n, pd + n, &[vec![(last, -1.0), (pd, 1.0)], vec![(prev, -1.0), (pd, 1.0)]])?;
        push(&r.name, &sets[i], GOAL, &goal, c)?;
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

/// Control points of each piece of a solution, in visiting order.
pub fn pieces(spec: &BezierSpec, sol: &WalkSolution) -> Vec<Vec<Vec<f64>>> {
    let n = spec.dim;
    let len = sol.trajectory.len();
    sol.trajectory[1..len.saturating_sub(1)].iter().map(|x| x.chunks(n).map(|c| c.to_vec()).collect()).collect()
}

/// Point of a Bézier curve at parameter `s ∈ [0, 1]` by de Casteljau.
pub fn de_casteljau(points: &[Vec<f64>], s: f64) -> Vec<f64> {
    let mut pts = points.to_vec();
    for r in 1..pts.len() {
        for i in 0..pts.len() - r {
            for k in 0..pts[i].len() {
                pts[i][k] = (1.0 - s) * pts[i][k] + s * pts[i + 1][k];
            }
        }
    }
    pts.swap_remove(0)
}

/// Control points of the time derivative of a piece of duration `dt`.
pub fn derivative_points(points: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let d = (points.len() - 1) as f64;
    points.windows(2).map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| d * (b - a) / dt).collect()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest position or velocity jump at the junctions between pieces,
/// including the rest conditions at start and goal.
pub fn c1_residual(spec: &BezierSpec, sol: &WalkSolution) -> f64 {
    let ps = pieces(spec, sol);
    let rest = vec![0.0; spec.dim];
    let mut worst: f64 = 0.0;
    if let (Some(first), Some(last)) = (ps.first(), ps.last()) {
        worst = worst.max(max_abs_diff(&first[0], &spec.start));
        worst = worst.max(max_abs_diff(&derivative_points(first, spec.dt)[0], &rest));
        worst = worst.max(max_abs_diff(last.last().unwrap(), &spec.goal));
        worst = worst.max(max_abs_diff(derivative_points(last, spec.dt).last().unwrap(), &rest));
    }
    for w in ps.windows(2) {
        worst = worst.max(max_abs_diff(w[0].last().unwrap(), &w[1][0]));
        let v0 = derivative_points(&w[0], spec.dt);
        let v1 = derivative_points(&w[1], spec.dt);
        worst = worst.max(max_abs_diff(v0.last().unwrap(), &v1[0]));
    }
    worst
}

/// Number of samples (per piece, `samples` evenly spaced parameters) whose
/// velocity or acceleration exceeds the limits by more than `tol`.
pub fn limit_violations(spec: &BezierSpec, sol: &WalkSolution, samples: usize, tol: f64) -> usize {
    let mut count = 0;
    for piece in pieces(spec, sol) {
        let vel = derivative_points(&piece, spec.dt);
        let acc = derivative_points(&vel, spec.dt);
        for i in 0..samples {
            let s = if samples > 1 { i as f64 / (samples - 1) as f64 } else { 0.0 };
            let v = de_casteljau(&vel, s);
            let a = de_casteljau(&acc, s);
            let over = v.iter().zip(&spec.velocity_limit).any(|(x, l)| x.abs() > l + tol)
                || a.iter().zip(&spec.acceleration_limit).any(|(x, l)| x.abs() > l + tol);
            count += over as usize;
        }
    }
    count
}

/// L-shaped corridor: a horizontal strip into a vertical strip, from rest at
/// `(0.1, 0.1)` to rest at `(0.5, 0.5)`.
pub fn corridor_spec() -> BezierSpec {
    let boxed = |lo: [f64; 2], hi: [f64; 2]| ConvexSet::boxed(&lo, &hi).expect("valid box");
    BezierSpec {
        dim: 2,
        regions: vec![
            Region { name: "horizontal".into(), set: boxed([0.0, 0.0], [0.6, 0.2]) },
            Region { name: "vertical".into(), set: boxed([0.4, 0.0], [0.6, 0.6]) },
        ],
        adjacency: vec![("horizontal".into(), "vertical".into())],
        degree: 3,
        dt: 0.125,
        velocity_limit: vec![4.0, 4.0],
        acceleration_limit: vec![64.0, 64.0],
        time_weight: 1.0,
        displacement_weight: 10.0,
        start: vec![0.1, 0.1],
        goal: vec![0.5, 0.5],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn de_casteljau_matches_bernstein_form() {
        let p = vec![vec![0.0], vec![1.0], vec![3.0], vec![2.0]];
        let s: f64 = 0.3;
        let t = 1.0 - s;
        let expect = 3.0 * t * t * s * 1.0 + 3.0 * t * s * s * 3.0 + s * s * s * 2.0;
        assert!((de_casteljau(&p, s)[0] - expect).abs() < 1e-12);
        // Derivative at the ends equals the scaled first and last differences.
        let v = derivative_points(&p, 0.5);
        assert!((de_casteljau(&v, 0.0)[0] - 6.0).abs() < 1e-12);
        assert!((de_casteljau(&v, 1.0)[0] + 6.0).abs() < 1e-12);
    }

    #[test]
    fn corridor_edges() {
        let g = build_bezier_gcs(&corridor_spec()).unwrap();
        for e in [
            "start->horizontal",
            "horizontal->horizontal",
            "horizontal->vertical",
            "vertical->horizontal",
            "vertical->vertical",
            "vertical->goal",
        ] {
            assert!(g.edge_idx(e).is_ok(), "{e}");
        }
        assert!(g.edge_idx("start->vertical").is_err());
        assert!(g.edge_idx("horizontal->goal").is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = corridor_spec();
        s.dt = 0.0;
        assert!(build_bezier_gcs(&s).is_err());
        let mut s = corridor_spec();
        s.velocity_limit = vec![1.0];
        assert!(build_bezier_gcs(&s).is_err());
    }
}
