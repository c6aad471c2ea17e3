//! Piecewise-affine systems: one vertex per mode, dynamics on the edges.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::feasible;
use crate::error::{GcsError, Result};
use crate::gcs::{EdgeDoc, Gcs, GcsDocument, VertexDoc};
use crate::quadratic::QuadraticFunction;
use crate::sets::ConvexSet;
use crate::walk::WalkSolution;

pub const SOURCE: &str = "source";
pub const TARGET: &str = "target";

/// One mode: `s' = A s + B a + c` while `s ∈ state_set`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PwaMode {
    pub name: String,
    pub state_set: ConvexSet,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    /// Stage cost over `(s, a)`.
    pub cost: QuadraticFunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PwaSpec {
    pub modes: Vec<PwaMode>,
    pub control_set: ConvexSet,
    pub source_state: Vec<f64>,
    pub target_state: Vec<f64>,
    /// Set of admissible initial states; defaults to `{source_state}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_set: Option<ConvexSet>,
}

struct Dims {
    ns: usize,
    na: usize,
}

impl PwaSpec {
    fn dims(&self) -> Result<Dims> {
        let ns = self.source_state.len();
        let na = self.control_set.dim();
        if self.modes.is_empty() {
            return Err(GcsError::InvalidArgument("PWA spec has no modes".into()));
        }
        if self.target_state.len() != ns {
            return Err(GcsError::DimensionMismatch { expected: ns, got: self.target_state.len() });
        }
        for m in &self.modes {
            let ok = m.state_set.dim() == ns
                && m.a.len() == ns
                && m.a.iter().all(|r| r.len() == ns)
                && m.b.len() == ns
                && m.b.iter().all(|r| r.len() == na)
                && m.c.len() == ns
                && m.cost.dim() == ns + na;
            if !ok {
                return Err(GcsError::InvalidArgument(format!("mode `{}` has inconsistent dimensions", m.name)));
            }
        }
        Ok(Dims { ns, na })
    }

    fn mode(&self, name: &str) -> Option<&PwaMode> {
        self.modes.iter().find(|m| m.name == name)
    }
}

fn mat(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Rows of `s_next - A s - B a = c` over `[s, a, s_next, rest]`, where the
/// block `[s, a]` starts at column 0 and `s_next` at column `next`.
fn dynamics_rows(m: &PwaMode, d: &Dims, next: usize, total: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::with_capacity(d.ns);
    for i in 0..d.ns {
        let mut r = vec![0.0; total];
        for j in 0..d.ns {
            r[j] = -m.a[i][j];
        }
        for j in 0..d.na {
            r[d.ns + j] = -m.b[i][j];
        }
        r[next + i] += 1.0;
        rows.push(r);
    }
    (rows, m.c.clone())
}

/// Vertices: `source` (initial state), one per mode with set `S_i × A`, and
/// `target` (final state). Mode edges exist when some state-control pair of
/// the tail mode maps into the head mode; source and target edges likewise.
pub fn build_pwa_gcs(spec: &PwaSpec) -> Result<Gcs> {
    let d = spec.dims()?;
    let nx = d.ns + d.na;
    let source_set = spec.source_set.clone().unwrap_or_else(|| ConvexSet::point(spec.source_state.clone()));
    let mut vertices = vec![VertexDoc { id: SOURCE.into(), set: source_set.clone(), cost: None }];
    let mut mode_sets = Vec::with_capacity(spec.modes.len());
    for m in &spec.modes {
        if m.name == SOURCE || m.name == TARGET {
            return Err(GcsError::InvalidArgument(format!("mode name `{}` is reserved", m.name)));
        }
        let set = ConvexSet::product(vec![m.state_set.clone(), spec.control_set.clone()])?;
        mode_sets.push(set.clone());
        vertices.push(VertexDoc { id: m.name.clone(), set, cost: Some(m.cost.clone()) });
    }
    let target_set = ConvexSet::point(spec.target_state.clone());
    vertices.push(VertexDoc { id: TARGET.into(), set: target_set.clone(), cost: None });

    let mut edges = Vec::new();
    for (i, m) in spec.modes.iter().enumerate() {
        // source -> mode: the mode's state equals the initial state.
        let total = d.ns + nx;
        let rows: Vec<Vec<f64>> = (0..d.ns)
            .map(|k| {
                let mut r = vec![0.0; total];
                r[k] = -1.0;
                r[d.ns + k] = 1.0;
                r
            })
            .collect();
        let coupling = ConvexSet::affine_equalities(rows, vec![0.0; d.ns])?;
        let domain = ConvexSet::product(vec![source_set.clone(), mode_sets[i].clone()])?;
        if feasible(&ConvexSet::intersection(vec![coupling.clone(), domain])?)? {
            edges.push(EdgeDoc {
                id: format!("{SOURCE}->{}", m.name),
                tail: SOURCE.into(),
                head: m.name.clone(),
                set: Some(coupling),
                cost: None,
            });
        }
    }
    for (i, m) in spec.modes.iter().enumerate() {
        for (j, n) in spec.modes.iter().enumerate() {
            let (rows, rhs) = dynamics_rows(m, &d, nx, 2 * nx);
            let coupling = ConvexSet::affine_equalities(rows, rhs)?;
            let domain = ConvexSet::product(vec![mode_sets[i].clone(), mode_sets[j].clone()])?;
            if feasible(&ConvexSet::intersection(vec![coupling.clone(), domain])?)? {
                edges.push(EdgeDoc {
                    id: format!("{}->{}", m.name, n.name),
                    tail: m.name.clone(),
                    head: n.name.clone(),
                    set: Some(coupling),
                    cost: None,
                });
            }
        }
        let (rows, rhs) = dynamics_rows(m, &d, nx, nx + d.ns);
        let coupling = ConvexSet::affine_equalities(rows, rhs)?;
        let domain = ConvexSet::product(vec![mode_sets[i].clone(), target_set.clone()])?;
        if feasible(&ConvexSet::intersection(vec![coupling.clone(), domain])?)? {
            edges.push(EdgeDoc {
                id: format!("{}->{TARGET}", m.name),
                tail: m.name.clone(),
                head: TARGET.into(),
                set: Some(coupling),
                cost: None,
            });
        }
    }
    Gcs::from_document(&GcsDocument {
        vertices,
        edges,
        source: SOURCE.into(),
        target: TARGET.into(),
        source_point: spec.source_state.clone(),
        target_point: spec.target_state.clone(),
    })
}

/// Result of replaying a walk's controls through the dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    /// Largest `‖s_{k+1} - (A s_k + B a_k + c)‖∞` along the walk.
    pub max_residual: f64,
    /// Every visited state lies in its mode's set (tolerance 1e-6).
    pub states_in_modes: bool,
    pub steps: usize,
}

/// Replay a solution of [`build_pwa_gcs`]: each mode visit applies that
/// mode's dynamics to the stored state and control and is compared with the
/// next stored state (or the target).
pub fn replay_pwa(spec: &PwaSpec, sol: &WalkSolution) -> Result<ReplayReport> {
    let d = spec.dims()?;
    let n = sol.walk.len();
    if n < 3 || sol.walk[0] != SOURCE || sol.walk[n - 1] != TARGET {
        return Err(GcsError::InvalidWalk("not a source-to-target walk of a PWA instance".into()));
    }
    let mut max_residual: f64 = 0.0;
    // Initial state carried into the first mode.
    for k in 0..d.ns {
        max_residual = max_residual.max((sol.trajectory[1][k] - sol.trajectory[0][k]).abs());
    }
    let mut in_modes = true;
    for k in 1..n - 1 {
        let m =
            spec.mode(&sol.walk[k]).ok_or_else(|| GcsError::InvalidWalk(format!("`{}` is not a mode", sol.walk[k])))?;
        let x = &sol.trajectory[k];
        let s = DVector::from_column_slice(&x[..d.ns]);
        let a = DVector::from_column_slice(&x[d.ns..]);
        let next = mat(&m.a, d.ns) * s + mat(&m.b, d.na) * a + DVector::from_column_slice(&m.c);
        let stored = &sol.trajectory[k + 1][..d.ns];
        for i in 0..d.ns {
            max_residual = max_residual.max((next[i] - stored[i]).abs());
        }
        in_modes &= m.state_set.contains(&x[..d.ns], 1e-6)? && spec.control_set.contains(&x[d.ns..], 1e-6)?;
    }
    Ok(ReplayReport { max_residual, states_in_modes: in_modes, steps: n - 2 })
}

/// Pendulum with a compliant wall: free swing (`N`) for `θ <= 0.1` and wall
/// contact (`C`) beyond, explicit Euler with `h = 0.1`.
///
/// State `(θ, ω)` with `θ ∈ [-0.4, 0.4]`, `ω ∈ [-4, 4]`; torque `|u| <= 15`;
/// stage cost `1 + 10‖s‖² + 0.1u²`; from `(0, 2)` to rest at `(0, 0)`.
pub fn pendulum_spec() -> PwaSpec {
    let h = 0.1;
    let g_over_l = 9.81;
    let k_wall = 50.0;
    let theta_wall = 0.1;
    let mut q = DMatrix::zeros(3, 3);
    q[(0, 0)] = 10.0;
    q[(1, 1)] = 10.0;
    q[(2, 2)] = 0.1;
    let cost = QuadraticFunction::from_parts(&q, &DVector::zeros(3), 1.0).expect("valid stage cost");
    let states = |lo: f64, hi: f64| ConvexSet::boxed(&[lo, -4.0], &[hi, 4.0]).expect("valid box");
    let b = vec![vec![0.0], vec![h]];
    PwaSpec {
        modes: vec![
            PwaMode {
                name: "N".into(),
                state_set: states(-0.4, theta_wall),
                a: vec![vec![1.0, h], vec![-h * g_over_l, 1.0]],
                b: b.clone(),
                c: vec![0.0, 0.0],
                cost: cost.clone(),
            },
            PwaMode {
                name: "C".into(),
                state_set: states(theta_wall, 0.4),
                a: vec![vec![1.0, h], vec![-h * (g_over_l + k_wall), 1.0]],
                b,
                c: vec![0.0, h * k_wall * theta_wall],
                cost,
            },
        ],
        control_set: ConvexSet::boxed(&[-15.0], &[15.0]).expect("valid box"),
        source_state: vec![0.0, 2.0],
        target_state: vec![0.0, 0.0],
        source_set: None,
    }
}

/// [`pendulum_spec`] with initial states anywhere in
/// `[-0.05, 0.05] × [1.8, 2.2]`.
pub fn pendulum_source_box_spec() -> PwaSpec {
    let mut spec = pendulum_spec();
    spec.source_set = Some(ConvexSet::boxed(&[-0.05, 1.8], &[0.05, 2.2]).expect("valid box"));
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pendulum_has_two_modes_and_four_mode_edges() {
        let g = build_pwa_gcs(&pendulum_spec()).unwrap();
        let modes = ["N", "C"];
        let mode_edges: Vec<&str> = g
            .edges()
            .iter()
            .filter(|e| modes.contains(&g.vertex(e.tail).id.as_str()) && modes.contains(&g.vertex(e.head).id.as_str()))
            .map(|e| e.id.as_str())
            .collect();
        assert_eq!(mode_edges.len(), 4, "{mode_edges:?}");
        assert!(mode_edges.contains(&"N->N") && mode_edges.contains(&"C->C"));
    }

    #[test]
    fn cross_edges_carry_their_tail_dynamics() {
        let g = build_pwa_gcs(&pendulum_spec()).unwrap();
        let nc = g.edge(g.edge_idx("N->C").unwrap());
        let cn = g.edge(g.edge_idx("C->N").unwrap());
        assert_ne!(nc.coupling, cn.coupling);
    }

    #[test]
    fn source_only_enters_the_free_mode() {
        let g = build_pwa_gcs(&pendulum_spec()).unwrap();
        let out: Vec<&str> = g.out_edges(g.source()).iter().map(|e| g.edge(*e).id.as_str()).collect();
        assert_eq!(out, vec!["source->N"]);
    }
}
