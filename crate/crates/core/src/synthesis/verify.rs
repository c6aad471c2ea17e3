use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{certified_edges, live_vertices, LowerBoundSet};
use crate::conic::SolverSettings;
use crate::error::Result;
use crate::gcs::{EdgeIdx, Gcs, VertexIdx};
use crate::sets::SetSampler;
use crate::walk::{solve_restrictions, EndCondition, RestrictionSpec};

const SLACK_TOL: f64 = 1e-6;
const GAP_SAMPLES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub edge: String,
    pub samples: usize,
    /// Minimum of `l_u + l_e + J_v - J_u` over the samples.
    pub worst_slack: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexCheck {
    pub vertex: String,
    pub samples: usize,
    /// Minimum of `J_v` over the samples.
    pub worst_value: f64,
    pub violations: usize,
    /// Mean and max over sampled `x_u` of
    /// `min_e min_{x_v} (l_u + l_e + J_v) - J_u`.
    pub mean_gap: Option<f64>,
    pub max_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub edges: Vec<EdgeCheck>,
    pub vertices: Vec<VertexCheck>,
    pub worst_bellman_slack: f64,
    pub worst_nonnegativity: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.edges.iter().all(|e| e.violations == 0) && self.vertices.iter().all(|v| v.violations == 0)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Check the Bellman inequality on sampled edge pairs and `J_v >= 0` on
/// sampled vertex points, and estimate the Bellman gap at a few vertex
/// samples. Edges into or out of vertices that cannot reach the target are
/// skipped, as in synthesis.
pub fn verify_bounds_sampled(g: &Gcs, b: &LowerBoundSet, n_samples: usize, seed: u64) -> Result<VerificationReport> {
    let edges = certified_edges(g);
    let edge_checks = edges.par_iter().map(|&e| check_edge(g, b, e, n_samples, seed)).collect::<Result<Vec<_>>>()?;
    let live = live_vertices(g);
    let vertex_checks = (0..g.num_vertices())
        .into_par_iter()
        .filter(|i| live[*i])
        .map(|i| check_vertex(g, b, VertexIdx(i), &edges, n_samples, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport {
        worst_bellman_slack: edge_checks.iter().map(|c| c.worst_slack).fold(f64::INFINITY, f64::min),
        worst_nonnegativity: vertex_checks.iter().map(|c| c.worst_value).fold(f64::INFINITY, f64::min),
        edges: edge_checks,
        vertices: vertex_checks,
    })
}

fn check_edge(g: &Gcs, b: &LowerBoundSet, e: EdgeIdx, n: usize, seed: u64) -> Result<EdgeCheck> {
    let edge = g.edge(e);
    let form = crate::quadratic::QuadraticFunction::from_homogeneous(b.bellman_form(g, e))?;
    let mut sampler = SetSampler::new(&edge.set, &format!("edge `{}`", edge.id))?;
    let mut rng = rng_for(seed, 2 * e.0 as u64 + 1);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..n {
        let x = sampler.sample(&mut rng)?;
        let slack = form.eval_unchecked(&x);
        worst = worst.min(slack);
        if slack < -SLACK_TOL {
            violations += 1;
        }
    }
    Ok(EdgeCheck { edge: edge.id.clone(), samples: n, worst_slack: worst, violations })
}

fn check_vertex(
    g: &Gcs,
    b: &LowerBoundSet,
    v: VertexIdx,
    edges: &[EdgeIdx],
    n: usize,
    seed: u64,
) -> Result<VertexCheck> {
    let vert = g.vertex(v);
    let j = b.bound(v);
    let mut sampler = SetSampler::new(&vert.set, &format!("vertex `{}`", vert.id))?;
    let mut rng = rng_for(seed, 2 * v.0 as u64);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x = sampler.sample(&mut rng)?;
        let val = j.eval_unchecked(&x);
        worst = worst.min(val);
        if val < -SLACK_TOL {
            violations += 1;
        }
        points.push(x);
    }

    let out: Vec<EdgeIdx> = g.out_edges(v).iter().copied().filter(|e| edges.contains(e)).collect();
    let mut gaps = Vec::new();
    if !out.is_empty() {
        for x in points.iter().take(GAP_SAMPLES) {
            let specs: Vec<RestrictionSpec> = out
                .iter()
                .map(|e| RestrictionSpec {
                    start_vertex: v,
                    start_point: x.clone(),
                    edges: vec![*e],
                    end: EndCondition::Free {
                        terminal: Some(b.bound(g.edge(*e).head).clone()),
                        drop_last_vertex_cost: true,
                    },
                })
                .collect();
            let best = solve_restrictions(g, &specs, &SolverSettings::default())?
                .into_iter()
                .filter_map(|o| if o.is_optimal() { o.objective } else { None })
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                gaps.push(best - j.eval_unchecked(x));
            }
        }
    }
    Ok(VertexCheck {
        vertex: vert.id.clone(),
        samples: n,
        worst_value: worst,
        violations,
        mean_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
        max_gap: gaps.iter().copied().reduce(f64::max),
    })
}
