//! Convex quadratic lower bounds on the cost-to-go, certified by an SDP.
//!
//! Each vertex gets `J_v(x) = [1;x]ᵀ H_v [1;x]` with `Q_v ⪰ 0`. The SDP
//! requires `J_v >= 0` on `X_v`, the Bellman inequality
//! `J_u(x_u) <= l_u(x_u) + l_e(x_u, x_v) + J_v(x_v)` on every `X_e`, and
//! `J_t(x̄_t) = l_t(x̄_t)`, each inequality certified with the S-procedure.
//! Vertices that cannot reach the target get `J_v = 0` and no constraints.

mod certificate;
mod verify;

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::conic::{self, AffineExpr, ConicProgram, Sense, SolveStatus, SolverSettings, SymExpr};
use crate::error::{GcsError, Result};
use crate::gcs::{EdgeIdx, Gcs, VertexIdx};
use crate::quadratic::QuadraticFunction;

pub use certificate::{min_eigenvalue, reassemble, Multipliers};
pub use verify::{verify_bounds_sampled, EdgeCheck, VerificationReport, VertexCheck};

use certificate::{add_nonneg_certificate, MultiplierVars};

/// Sample points of one vertex for the averaged objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSamples {
    pub vertex: String,
    pub points: Vec<Vec<f64>>,
    pub weight: f64,
}

/// What the synthesis SDP maximizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `J_s(x̄_s)`
    SourceValue,
    /// `Σ_v weight_v · mean_{p ∈ points_v} J_v(p)`
    SampledAverage { samples: Vec<VertexSamples> },
}

impl ObjectiveSpec {
    /// Per vertex: the Chebyshev center and the 2·dim coordinate-extreme
    /// points, all vertices weighted equally.
    pub fn sampled_average(g: &Gcs) -> Result<Self> {
        let w = 1.0 / g.num_vertices() as f64;
        let mut samples = Vec::with_capacity(g.num_vertices());
        for v in g.vertices() {
            let owner = format!("vertex `{}`", v.id);
            let mut points = vec![v.set.chebyshev_center(&owner)?];
            let ext = v.set.extents(&owner)?;
            for (lo, hi) in ext.argmin.into_iter().zip(ext.argmax) {
                points.push(lo);
                points.push(hi);
            }
            samples.push(VertexSamples { vertex: v.id.clone(), points, weight: w });
        }
        Ok(ObjectiveSpec::SampledAverage { samples })
    }

    fn validate(&self, g: &Gcs) -> Result<()> {
        if let ObjectiveSpec::SampledAverage { samples } = self {
            for s in samples {
                let v = g.vertex(g.vertex_idx(&s.vertex)?);
                if !(s.weight >= 0.0) {
                    return Err(GcsError::InvalidArgument(format!("negative weight for `{}`", s.vertex)));
                }
                for p in &s.points {
                    if !v.set.contains(p, g.tolerances().membership)? {
                        return Err(GcsError::InvalidArgument(format!(
                            "sample point {p:?} is outside the set of `{}`",
                            s.vertex
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisSettings {
    /// Multipliers on pairwise products of linear constraints.
    pub pairwise_products: bool,
    /// When a reassembled certificate has an eigenvalue below
    /// `-recenter_trigger`, solve again with the objective capped at
    /// `opt - recenter_backoff * max(1, |opt|)`, which moves the solution off
    /// the boundary of the PSD cones. Zero disables the second solve.
    pub recenter_backoff: f64,
    pub recenter_trigger: f64,
    pub solver: SolverSettings,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        Self {
            pairwise_products: true,
            recenter_backoff: 1e-7,
            recenter_trigger: 1e-8,
            solver: SolverSettings::default(),
        }
    }
}

/// The assembled SDP and handles to read the solution back.
pub struct SynthesisProblem {
    pub program: ConicProgram,
    objective: AffineExpr,
    bounds: Vec<Option<SymExpr>>,
    edge_certs: Vec<Option<MultiplierVars>>,
    vertex_certs: Vec<Option<MultiplierVars>>,
}

/// Vertices from which the target is reachable.
pub fn live_vertices(g: &Gcs) -> Vec<bool> {
    g.hops_to_target().iter().map(Option::is_some).collect()
}

/// Edges whose Bellman inequality enters the SDP: both endpoints live.
pub fn certified_edges(g: &Gcs) -> Vec<EdgeIdx> {
    let live = live_vertices(g);
    (0..g.num_edges())
        .map(EdgeIdx)
        .filter(|e| {
            let edge = g.edge(*e);
            live[edge.tail.0] && live[edge.head.0]
        })
        .collect()
}

fn homogeneous_point(x: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(x.iter().copied()).collect()
}

/// `[1;x]ᵀ H [1;x]` for a matrix of affine expressions.
fn eval_form(h: &SymExpr, x: &[f64]) -> AffineExpr {
    let z = homogeneous_point(x);
    let mut out = AffineExpr::zero();
    for q in 0..h.size() {
        for p in 0..=q {
            let w = if p == q { z[p] * z[p] } else { 2.0 * z[p] * z[q] };
            if w != 0.0 {
                out.add_scaled(h.get(p, q), w);
            }
        }
    }
    out
}

pub fn build_synthesis_sdp(g: &Gcs, obj: &ObjectiveSpec, settings: &SynthesisSettings) -> Result<SynthesisProblem> {
    obj.validate(g)?;
    let live = live_vertices(g);
    let mut prog = ConicProgram::new();
    let mut bounds: Vec<Option<SymExpr>> = Vec::with_capacity(g.num_vertices());
    for (i, v) in g.vertices().iter().enumerate() {
        if !live[i] {
            bounds.push(None);
            continue;
        }
        let n = v.dim() + 1;
        let mut h = SymExpr::zeros(n);
        for q in 0..n {
            for p in 0..=q {
                let var = prog.add_var();
                h.get_mut(p, q).add_term(var, 1.0);
            }
        }
        bounds.push(Some(h));
    }

    let mut vertex_certs = Vec::with_capacity(g.num_vertices());
    for (i, v) in g.vertices().iter().enumerate() {
        let Some(h) = &bounds[i] else {
            vertex_certs.push(None);
            continue;
        };
        let n = v.dim();
        if n > 0 {
            let mut q = SymExpr::zeros(n);
            for c in 0..n {
                for r in 0..=c {
                    *q.get_mut(r, c) = h.get(r + 1, c + 1).clone();
                }
            }
            prog.add_psd(q);
        }
        let (_, vars) = add_nonneg_certificate(&mut prog, h, v.description(), settings.pairwise_products);
        vertex_certs.push(Some(vars));
    }

    let mut edge_certs: Vec<Option<MultiplierVars>> = (0..g.num_edges()).map(|_| None).collect();
    for e in certified_edges(g) {
        let edge = g.edge(e);
        let (du, dv) = (g.vertex(edge.tail).dim(), g.vertex(edge.head).dim());
        let total = du + dv;
        let mut m = SymExpr::from_constant(edge.cost.homogeneous());
        m.add_constant_matrix(g.vertex(edge.tail).cost.embed(total, 0).homogeneous(), 1.0);
        let ju = bounds[edge.tail.0].as_ref().expect("live tail");
        let jv = bounds[edge.head.0].as_ref().expect("live head");
        m.add_embedded(jv, &QuadraticFunction::embedding_map(dv, du), 1.0);
        m.add_embedded(ju, &QuadraticFunction::embedding_map(du, 0), -1.0);
        let (_, vars) = add_nonneg_certificate(&mut prog, &m, edge.description(), settings.pairwise_products);
        edge_certs[e.0] = Some(vars);
    }

    let t = g.target();
    let jt = bounds[t.0].as_ref().expect("the target reaches itself");
    let lt = g.vertex(t).cost.eval_unchecked(g.target_point());
    prog.add_eq(eval_form(jt, g.target_point()) - AffineExpr::constant(lt));

    let mut objective = AffineExpr::zero();
    match obj {
        ObjectiveSpec::SourceValue => {
            if let Some(js) = &bounds[g.source().0] {
                objective = eval_form(js, g.source_point());
            }
        }
        ObjectiveSpec::SampledAverage { samples } => {
            for s in samples {
                let v = g.vertex_idx(&s.vertex)?;
                if let (Some(h), false) = (&bounds[v.0], s.points.is_empty()) {
                    let w = s.weight / s.points.len() as f64;
                    for p in &s.points {
                        objective.add_scaled(&eval_form(h, p), w);
                    }
                }
            }
        }
    }
    prog.add_objective_linear(&objective);
    prog.set_sense(Sense::Maximize);
    Ok(SynthesisProblem { program: prog, objective, bounds, edge_certs, vertex_certs })
}

/// Bound of one vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexBound {
    pub vertex: String,
    #[serde(rename = "J")]
    pub j: QuadraticFunction,
    /// Multipliers certifying `J_v >= 0` on `X_v` (absent for dead vertices).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Multipliers>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCertificate {
    pub edge: String,
    pub multipliers: Multipliers,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub status: SolveStatus,
    pub objective_value: f64,
    pub iterations: u32,
    /// Wall time; not persisted so files stay reproducible.
    #[serde(skip)]
    pub solve_time: Duration,
}

/// Per-vertex cost-to-go lower bounds for one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSet {
    pub instance_hash: String,
    pub target: String,
    pub target_point: Vec<f64>,
    pub objective: ObjectiveSpec,
    pub pairwise_products: bool,
    pub bounds: Vec<VertexBound>,
    pub edge_certificates: Vec<EdgeCertificate>,
    pub report: SynthesisReport,
}

impl LowerBoundSet {
    pub fn bound(&self, v: VertexIdx) -> &QuadraticFunction {
        &self.bounds[v.0].j
    }

    /// `J_s(x̄_s)` for the instance's current source point.
    pub fn source_value(&self, g: &Gcs) -> f64 {
        self.bound(g.source()).eval_unchecked(g.source_point())
    }

    pub fn check_instance(&self, g: &Gcs) -> Result<()> {
        let found = g.content_hash();
        if found != self.instance_hash {
            return Err(GcsError::HashMismatch { expected: self.instance_hash.clone(), found });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        crate::io::to_json_string(self).expect("bounds always serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    /// Load bounds and check they were synthesized for `g`.
    pub fn load(path: &Path, g: &Gcs) -> Result<Self> {
        let b: LowerBoundSet = crate::io::read_json(path)?;
        b.check_instance(g)?;
        if b.bounds.len() != g.num_vertices() {
            return Err(GcsError::InvalidArgument("bounds do not match the vertex count".into()));
        }
        Ok(b)
    }

    /// Smallest eigenvalue over all reassembled certificate blocks.
    pub fn certificate_residual(&self, g: &Gcs) -> f64 {
        let mut worst = f64::INFINITY;
        for (v, b) in g.vertices().iter().zip(&self.bounds) {
            if let Some(m) = &b.certificate {
                worst = worst.min(min_eigenvalue(&reassemble(b.j.homogeneous(), v.description(), m)));
            }
        }
        for c in &self.edge_certificates {
            let Ok(e) = g.edge_idx(&c.edge) else { return f64::NEG_INFINITY };
            let m = self.bellman_form(g, e);
            worst = worst.min(min_eigenvalue(&reassemble(&m, g.edge(e).description(), &c.multipliers)));
        }
        worst
    }

    /// Homogeneous matrix of `l_u + l_e + J_v - J_u` over `(x_u, x_v)`.
    pub fn bellman_form(&self, g: &Gcs, e: EdgeIdx) -> DMatrix<f64> {
        let edge = g.edge(e);
        let (du, dv) = (g.vertex(edge.tail).dim(), g.vertex(edge.head).dim());
        let total = du + dv;
        edge.cost.homogeneous()
            + g.vertex(edge.tail).cost.embed(total, 0).homogeneous()
            + self.bound(edge.head).embed(total, du).homogeneous()
            - self.bound(edge.tail).embed(total, 0).homogeneous()
    }
}

/// Clip tiny negative curvature left by the interior-point solver.
fn convexify(h: DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows() - 1;
    if n == 0 {
        return h;
    }
    let q = h.view((1, 1), (n, n)).into_owned();
    let q = 0.5 * (&q + q.transpose());
    let eig = SymmetricEigen::new(q.clone());
    if eig.eigenvalues.min() >= 0.0 {
        let mut out = h;
        out.view_mut((1, 1), (n, n)).copy_from(&q);
        return out;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let q = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let q = 0.5 * (&q + q.transpose());
    let mut out = h;
    out.view_mut((1, 1), (n, n)).copy_from(&q);
    out
}

/// Build and solve the synthesis SDP.
pub fn synthesize(g: &Gcs, obj: &ObjectiveSpec, settings: &SynthesisSettings) -> Result<LowerBoundSet> {
    let problem = build_synthesis_sdp(g, obj, settings)?;
    let start = Instant::now();
    let rep = conic::solve(&problem.program, &settings.solver);
    let mut out = read_solution(g, obj, settings, &problem, &rep, start.elapsed())?;
    let residual = out.certificate_residual(g);
    if settings.recenter_backoff > 0.0 && residual < -settings.recenter_trigger {
        let opt = rep.objective.expect("optimal report carries an objective");
        let cap = opt - settings.recenter_backoff * opt.abs().max(1.0);
        let mut capped = SynthesisProblem { program: problem.program.clone(), ..problem };
        capped.program.add_le(capped.objective.clone(), AffineExpr::constant(cap));
        let start = Instant::now();
        let rep2 = conic::solve(&capped.program, &settings.solver);
        if rep2.status == SolveStatus::Optimal {
            let second = read_solution(g, obj, settings, &capped, &rep2, start.elapsed())?;
            let r2 = second.certificate_residual(g);
            log::debug!("recentered synthesis: residual {residual:e} -> {r2:e}");
            if r2 > residual {
                out = second;
            }
        }
    }
    Ok(out)
}

fn read_solution(
    g: &Gcs,
    obj: &ObjectiveSpec,
    settings: &SynthesisSettings,
    problem: &SynthesisProblem,
    rep: &conic::SolveReport,
    solve_time: Duration,
) -> Result<LowerBoundSet> {
    let x = match rep.status {
        SolveStatus::Optimal => rep.x.as_ref().expect("optimal report carries a solution"),
        SolveStatus::Infeasible => {
            return Err(GcsError::Infeasible(format!("synthesis SDP: {}", rep.message)));
        }
        s => return Err(GcsError::Solver(format!("synthesis SDP returned {s:?}: {}", rep.message))),
    };
    let mut bounds = Vec::with_capacity(g.num_vertices());
    for (i, v) in g.vertices().iter().enumerate() {
        let j = match &problem.bounds[i] {
            Some(h) => QuadraticFunction::from_homogeneous(convexify(h.eval(x)))?,
            None => QuadraticFunction::zero(v.dim()),
        };
        bounds.push(VertexBound {
            vertex: v.id.clone(),
            j,
            certificate: problem.vertex_certs[i].as_ref().map(|m| m.values(x)),
        });
    }
    let edge_certificates = problem
        .edge_certs
        .iter()
        .enumerate()
        .filter_map(|(i, m)| {
            m.as_ref().map(|m| EdgeCertificate { edge: g.edge(EdgeIdx(i)).id.clone(), multipliers: m.values(x) })
        })
        .collect();
    let mut out = LowerBoundSet {
        instance_hash: g.content_hash(),
        target: g.vertex(g.target()).id.clone(),
        target_point: g.target_point().to_vec(),
        objective: obj.clone(),
        pairwise_products: settings.pairwise_products,
        bounds,
        edge_certificates,
        report: SynthesisReport {
            status: rep.status,
            objective_value: 0.0,
            iterations: rep.stats.iterations,
            solve_time,
        },
    };
    out.report.objective_value = match obj {
        ObjectiveSpec::SourceValue => out.source_value(g),
        ObjectiveSpec::SampledAverage { .. } => rep.objective.unwrap_or(f64::NAN),
    };
    Ok(out)
}
