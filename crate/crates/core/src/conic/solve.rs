use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Once;
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::program::{ConicProgram, Constraint, Sense, SymExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
    pub max_iter: u32,
    /// Largest constraint violation accepted on a point reported optimal.
    pub max_residual: f64,
    /// Accept the solver's reduced-accuracy solutions when the residual check passes.
    pub accept_reduced_accuracy: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_gap_abs: 1e-8,
            tol_gap_rel: 1e-8,
            tol_feas: 1e-8,
            max_iter: 200,
            max_residual: 1e-6,
            accept_reduced_accuracy: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: u32,
    /// Wall time in seconds.
    pub solve_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Primal values; present iff `status == Optimal`.
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Largest constraint violation of `x` (re-substituted).
    pub residual: Option<f64>,
    pub stats: SolveStats,
    pub message: String,
}

impl SolveReport {
    fn without_solution(status: SolveStatus, message: impl Into<String>, stats: SolveStats) -> Self {
        Self { status, x: None, objective: None, residual: None, stats, message: message.into() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Timing-free view used for determinism comparisons.
    pub fn same_result(&self, other: &SolveReport) -> bool {
        self.status == other.status
            && self.x == other.x
            && self.objective.map(f64::to_bits) == other.objective.map(f64::to_bits)
    }
}

/// Seam between the modeling layer and a concrete solver.
pub trait ConicBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, program: &ConicProgram, settings: &SolverSettings) -> SolveReport;
}

/// Interior-point backend (Clarabel).
#[derive(Clone, Copy, Debug, Default)]
pub struct ClarabelBackend;

extern "C" {
    fn openblas_set_num_threads(num_threads: std::os::raw::c_int);
}

static BLAS_INIT: Once = Once::new();

fn single_threaded_blas() {
    // Threaded BLAS kernels may reduce in a different order from run to run.
    BLAS_INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

struct Compiled {
    p: CscMatrix<f64>,
    q: Vec<f64>,
    a: CscMatrix<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

fn compile(program: &ConicProgram) -> Compiled {
    let n = program.num_vars();
    let sign = match program.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // Objective: clarabel minimizes ½xᵀPx + qᵀx with P upper triangular.
    let obj = program.objective();
    let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
    for &(a, b, c) in &obj.quadratic {
        let (a, b) = if a <= b { (a.0, b.0) } else { (b.0, a.0) };
        pi.push(a);
        pj.push(b);
        pv.push(sign * if a == b { 2.0 * c } else { c });
    }
    let p = CscMatrix::new_from_triplets(n, n, pi, pj, pv);
    let mut q = vec![0.0; n];
    for &(v, c) in &obj.linear.terms {
        q[v.0] += sign * c;
    }

    // Rows: s = b - A x ∈ K with s equal to the constraint expression.
    let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let mut push_row = |e: &super::AffineExpr, scale: f64, b: &mut Vec<f64>| {
        let row = b.len();
        for &(v, c) in &e.terms {
            ai.push(row);
            aj.push(v.0);
            av.push(-scale * c);
        }
        b.push(scale * e.constant);
    };

    let zeros: Vec<_> =
        program.constraints().iter().filter_map(|c| if let Constraint::Zero(e) = c { Some(e) } else { None }).collect();
    let mut nonnegs: Vec<_> = program
        .constraints()
        .iter()
        .filter_map(|c| if let Constraint::NonNeg(e) = c { Some(e) } else { None })
        .collect();
    // 1×1 PSD blocks are plain inequalities.
    let one_by_one: Vec<_> = program
        .constraints()
        .iter()
        .filter_map(|c| match c {
            Constraint::Psd(m) if m.size() == 1 => Some(m.get(0, 0)),
            _ => None,
        })
        .collect();
    nonnegs.extend(one_by_one);

    if !zeros.is_empty() {
        for e in &zeros {
            push_row(e, 1.0, &mut b);
        }
        cones.push(SupportedConeT::ZeroConeT(zeros.len()));
    }
    if !nonnegs.is_empty() {
        for e in &nonnegs {
            push_row(e, 1.0, &mut b);
        }
        cones.push(SupportedConeT::NonnegativeConeT(nonnegs.len()));
    }
    for c in program.constraints() {
        match c {
            Constraint::SecondOrder(es) => {
                for e in es {
                    push_row(e, 1.0, &mut b);
                }
                cones.push(SupportedConeT::SecondOrderConeT(es.len()));
            }
            Constraint::Psd(m) if m.size() > 1 => {
                let size = m.size();
                for j in 0..size {
                    for i in 0..=j {
                        let scale = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                        push_row(&m.upper()[SymExpr::index(i, j)], scale, &mut b);
                    }
                }
                cones.push(SupportedConeT::PSDTriangleConeT(size));
            }
            _ => {}
        }
    }
    let a = CscMatrix::new_from_triplets(b.len(), n, ai, aj, av);
    Compiled { p, q, a, b, cones }
}

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, program: &ConicProgram, settings: &SolverSettings) -> SolveReport {
        single_threaded_blas();
        let start = Instant::now();
        if let Some(reason) = program.known_infeasible() {
            return SolveReport::without_solution(SolveStatus::Infeasible, reason, SolveStats::default());
        }
        if program.num_vars() == 0 {
            let x = Vec::new();
            return SolveReport {
                status: SolveStatus::Optimal,
                objective: Some(program.objective_value(&x)),
                residual: Some(program.max_violation(&x)),
                x: Some(x),
                stats: SolveStats::default(),
                message: "no variables".into(),
            };
        }

        let compiled = compile(program);
        let clarabel_settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(settings.max_iter)
            .tol_gap_abs(settings.tol_gap_abs)
            .tol_gap_rel(settings.tol_gap_rel)
            .tol_feas(settings.tol_feas)
            .max_threads(1)
            .build()
            .expect("static clarabel settings are valid");

        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let mut solver = DefaultSolver::new(
                &compiled.p,
                &compiled.q,
                &compiled.a,
                &compiled.b,
                &compiled.cones,
                clarabel_settings,
            )
            .map_err(|e| format!("{e:?}"))?;
            solver.solve();
            Ok::<_, String>((solver.solution.status, solver.solution.x.clone(), solver.info.iterations))
        }));
        let stats_of = |iterations| SolveStats { iterations, solve_time: start.elapsed().as_secs_f64() };

        let (status, x, iterations) = match outcome {
            Ok(Ok(r)) => r,
            Ok(Err(msg)) => return SolveReport::without_solution(SolveStatus::NumericalFailure, msg, stats_of(0)),
            Err(_) => {
                return SolveReport::without_solution(SolveStatus::NumericalFailure, "solver panicked", stats_of(0))
            }
        };
        let stats = stats_of(iterations);
        let solved = match status {
            SolverStatus::Solved => true,
            SolverStatus::AlmostSolved => settings.accept_reduced_accuracy,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                return SolveReport::without_solution(SolveStatus::Infeasible, format!("{status:?}"), stats)
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                return SolveReport::without_solution(SolveStatus::Unbounded, format!("{status:?}"), stats)
            }
            _ => false,
        };
        if !solved {
            return SolveReport::without_solution(SolveStatus::NumericalFailure, format!("{status:?}"), stats);
        }
        let residual = program.max_violation(&x);
        if residual > settings.max_residual {
            return SolveReport::without_solution(
                SolveStatus::NumericalFailure,
                format!("{status:?} but residual {residual:.3e} exceeds {:.1e}", settings.max_residual),
                stats,
            );
        }
        let objective = program.objective_value(&x);
        SolveReport {
            status: SolveStatus::Optimal,
            objective: Some(objective),
            residual: Some(residual),
            x: Some(x),
            stats,
            message: format!("{status:?}"),
        }
    }
}

/// Solve with the default backend.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> SolveReport {
    ClarabelBackend.solve(program, settings)
}

/// Solve independent programs, possibly in parallel on the current rayon pool.
///
/// Reports come back in input order and each equals what [`solve`] returns for
/// the same program (timings aside).
pub fn solve_batch(programs: &[ConicProgram], settings: &SolverSettings) -> Vec<SolveReport> {
    programs.par_iter().map(|p| solve(p, settings)).collect()
}

pub fn solve_batch_with(
    backend: &dyn ConicBackend,
    programs: &[ConicProgram],
    settings: &SolverSettings,
) -> Vec<SolveReport> {
    programs.par_iter().map(|p| backend.solve(p, settings)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{AffineExpr, SymExpr};

    #[test]
    fn minimize_square_above_one() {
        let mut p = ConicProgram::new();
        let x = p.add_var();
        p.add_objective_quadratic_term(x, x, 1.0);
        p.add_le(AffineExpr::constant(1.0), AffineExpr::var(x));
        let r = solve(&p, &SolverSettings::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x.unwrap()[0] - 1.0).abs() < 1e-6);
        assert!((r.objective.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn maximize_offdiagonal_of_psd_matrix() {
        let mut p = ConicProgram::new();
        let t = p.add_var();
        let mut m = SymExpr::zeros(2);
        m.get_mut(0, 0).add_constant(1.0);
        m.get_mut(1, 1).add_constant(1.0);
        m.get_mut(0, 1).add_term(t, 1.0);
        p.add_psd(m);
        p.add_objective_linear(&AffineExpr::var(t));
        p.set_sense(Sense::Maximize);
        let r = solve(&p, &SolverSettings::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_and_unbounded_are_statuses() {
        let mut p = ConicProgram::new();
        let x = p.add_var();
        p.add_le(AffineExpr::var(x), AffineExpr::constant(-1.0));
        p.add_nonneg(AffineExpr::var(x));
        let r = solve(&p, &SolverSettings::default());
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.x.is_none());

        let mut p = ConicProgram::new();
        let x = p.add_var();
        p.add_objective_linear(&AffineExpr::var(x));
        p.add_le(AffineExpr::var(x), AffineExpr::constant(3.0));
        let r = solve(&p, &SolverSettings::default());
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn batch_matches_sequential() {
        let progs: Vec<_> = (0..6)
            .map(|k| {
                let mut p = ConicProgram::new();
                let x = p.add_vars(2);
                p.add_objective_quadratic_term(x[0], x[0], 1.0);
                p.add_objective_quadratic_term(x[1], x[1], 1.0 + k as f64);
                p.add_eq(AffineExpr::var(x[0]) + AffineExpr::var(x[1]) - AffineExpr::constant(1.0));
                p
            })
            .collect();
        let settings = SolverSettings::default();
        let batch = solve_batch(&progs, &settings);
        for (p, r) in progs.iter().zip(&batch) {
            assert!(solve(p, &settings).same_result(r));
        }
        assert!(solve_batch(&[], &settings).is_empty());
    }
}
