use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::conic::{AffineExpr, ConicProgram, SymExpr, VarId};
use crate::sets::SetDescription;

/// Multipliers of one S-procedure certificate.
///
/// For a set with inequality slacks `s_i(x) = b_i - a_i·x`, ellipsoid slacks
/// `g_k(x) = 1 - (x-c)ᵀE(x-c)` and equalities `h_j(x) = a_j·x - b_j`, the
/// certificate states that
///
/// `f(x) - Σ λ_i s_i - Σ_{i<j} ν_ij s_i s_j - Σ μ_k g_k - Σ_j h_j (r_jᵀ[1;x])`
///
/// is a nonnegative quadratic (its homogeneous matrix is PSD), with
/// `λ, ν, μ >= 0` and `r_j` free.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda: Vec<f64>,
    /// Pairs `(i, j)`, `i < j`, in row-major order.
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
    pub r: Vec<Vec<f64>>,
}

pub(crate) struct MultiplierVars {
    lambda: Vec<VarId>,
    nu: Vec<VarId>,
    mu: Vec<VarId>,
    r: Vec<Vec<VarId>>,
}

impl MultiplierVars {
    pub(crate) fn values(&self, x: &[f64]) -> Multipliers {
        let get = |vs: &[VarId]| vs.iter().map(|v| x[v.0]).collect::<Vec<_>>();
        Multipliers {
            lambda: get(&self.lambda),
            nu: get(&self.nu),
            mu: get(&self.mu),
            r: self.r.iter().map(|r| get(r)).collect(),
        }
    }
}

/// Homogeneous vectors `ℓ_i = [b_i; -a_i]` of the inequality slacks.
fn slack_vectors(desc: &SetDescription) -> Vec<Vec<f64>> {
    desc.inequalities.iter().map(|r| std::iter::once(r.b).chain(r.a.iter().map(|a| -a)).collect()).collect()
}

/// Homogeneous vectors `[-b_j; a_j]` of the equalities.
fn equality_vectors(desc: &SetDescription) -> Vec<Vec<f64>> {
    desc.equalities.iter().map(|r| std::iter::once(-r.b).chain(r.a.iter().copied()).collect()).collect()
}

/// Homogeneous matrix of `1 - (x-c)ᵀE(x-c)`.
fn ellipsoid_matrix(center: &[f64], e: &DMatrix<f64>) -> DMatrix<f64> {
    let n = center.len();
    let c = nalgebra::DVector::from_column_slice(center);
    let ec = e * &c;
    let mut g = DMatrix::zeros(n + 1, n + 1);
    g[(0, 0)] = 1.0 - c.dot(&ec);
    for i in 0..n {
        g[(0, i + 1)] = ec[i];
        g[(i + 1, 0)] = ec[i];
        for j in 0..n {
            g[(i + 1, j + 1)] = -e[(i, j)];
        }
    }
    g
}

fn sym_outer(a: &[f64], b: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |p, q| 0.5 * (a[p] * b[q] + a[q] * b[p]))
}

/// Constrain `f` (a homogeneous matrix over the set's ambient space) to be
/// nonnegative on the set via the S-procedure. Adds the PSD block and the
/// multiplier variables to `prog`, and returns the block and the variables.
pub(crate) fn add_nonneg_certificate(
    prog: &mut ConicProgram,
    f: &SymExpr,
    desc: &SetDescription,
    pairwise: bool,
) -> (SymExpr, MultiplierVars) {
    let (z, vars) = certificate_block(prog, f, desc, pairwise);
    prog.add_psd(z.clone());
    (z, vars)
}

fn certificate_block(
    prog: &mut ConicProgram,
    f: &SymExpr,
    desc: &SetDescription,
    pairwise: bool,
) -> (SymExpr, MultiplierVars) {
    let n = desc.dim + 1;
    assert_eq!(f.size(), n);
    let mut z = f.clone();
    let ells = slack_vectors(desc);
    let mut lambda = Vec::with_capacity(ells.len());
    for l in &ells {
        let v = prog.add_var();
        prog.add_nonneg(AffineExpr::var(v));
        z.get_mut(0, 0).add_term(v, -l[0]);
        for p in 1..n {
            z.get_mut(0, p).add_term(v, -0.5 * l[p]);
        }
        lambda.push(v);
    }
    let mut nu = Vec::new();
    if pairwise {
        for i in 0..ells.len() {
            for j in i + 1..ells.len() {
                let v = prog.add_var();
                prog.add_nonneg(AffineExpr::var(v));
                z.add_var_matrix(v, &sym_outer(&ells[i], &ells[j]), -1.0);
                nu.push(v);
            }
        }
    }
    let mut mu = Vec::with_capacity(desc.ellipsoids.len());
    for e in &desc.ellipsoids {
        let v = prog.add_var();
        prog.add_nonneg(AffineExpr::var(v));
        z.add_var_matrix(v, &ellipsoid_matrix(&e.center, &e.shape), -1.0);
        mu.push(v);
    }
    let mut r = Vec::with_capacity(desc.equalities.len());
    for h in equality_vectors(desc) {
        let rv = prog.add_vars(n);
        for q in 0..n {
            for p in 0..=q {
                let entry = z.get_mut(p, q);
                if p == q {
                    entry.add_term(rv[p], -h[p]);
                } else {
                    entry.add_term(rv[q], -0.5 * h[p]);
                    entry.add_term(rv[p], -0.5 * h[q]);
                }
            }
        }
        r.push(rv);
    }
    (z, MultiplierVars { lambda, nu, mu, r })
}

/// Rebuild the certificate matrix from `f` and numeric multipliers.
pub fn reassemble(f: &DMatrix<f64>, desc: &SetDescription, m: &Multipliers) -> DMatrix<f64> {
    let n = desc.dim + 1;
    let mut z = f.clone();
    let ells = slack_vectors(desc);
    let e0: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    for (l, lam) in ells.iter().zip(&m.lambda) {
        z -= sym_outer(l, &e0) * *lam;
    }
    let mut k = 0;
    if !m.nu.is_empty() {
        for i in 0..ells.len() {
            for j in i + 1..ells.len() {
                z -= sym_outer(&ells[i], &ells[j]) * m.nu[k];
                k += 1;
            }
        }
    }
    for (e, mu) in desc.ellipsoids.iter().zip(&m.mu) {
        z -= ellipsoid_matrix(&e.center, &e.shape) * *mu;
    }
    for (h, r) in equality_vectors(desc).iter().zip(&m.r) {
        z -= sym_outer(h, r);
    }
    z
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{self, Sense, SolveStatus, SolverSettings};
    use crate::quadratic::QuadraticFunction;
    use crate::sets::ConvexSet;

    fn feasible(f: &QuadraticFunction, set: &ConvexSet) -> (SolveStatus, Option<Multipliers>) {
        let mut prog = ConicProgram::new();
        let desc = set.describe();
        let (_, vars) = add_nonneg_certificate(&mut prog, &SymExpr::from_constant(f.homogeneous()), &desc, true);
        prog.set_sense(Sense::Minimize);
        let rep = conic::solve(&prog, &SolverSettings::default());
        (rep.status, rep.x.as_ref().map(|x| vars.values(x)))
    }

    fn linear(coef: f64, c: f64) -> QuadraticFunction {
        QuadraticFunction::from_parts(&DMatrix::zeros(1, 1), &nalgebra::DVector::from_vec(vec![coef]), c).unwrap()
    }

    #[test]
    fn identity_on_unit_interval_is_certified() {
        let set = ConvexSet::boxed(&[0.0], &[1.0]).unwrap();
        let f = linear(1.0, 0.0);
        let (status, m) = feasible(&f, &set);
        assert_eq!(status, SolveStatus::Optimal);
        let z = reassemble(f.homogeneous(), &set.describe(), &m.unwrap());
        assert!(min_eigenvalue(&z) > -1e-7);
    }

    #[test]
    fn negative_function_is_not_certified() {
        let set = ConvexSet::boxed(&[0.0], &[1.0]).unwrap();
        let (status, _) = feasible(&linear(1.0, -2.0), &set);
        assert_eq!(status, SolveStatus::Infeasible);
    }

    #[test]
    fn concave_cap_on_ball_uses_ellipsoid_multiplier() {
        let set = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let f = QuadraticFunction::from_parts(&(-DMatrix::identity(2, 2)), &nalgebra::DVector::zeros(2), 1.0).unwrap();
        let (status, m) = feasible(&f, &set);
        assert_eq!(status, SolveStatus::Optimal);
        let m = m.unwrap();
        assert!((m.mu[0] - 1.0).abs() < 1e-5, "{:?}", m.mu);
    }

    #[test]
    fn equalities_take_free_multipliers() {
        // x - y >= 0 fails on the box but holds on the diagonal x = y.
        let set = ConvexSet::intersection(vec![
            ConvexSet::boxed(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            ConvexSet::affine_equalities(vec![vec![1.0, -1.0]], vec![0.0]).unwrap(),
        ])
        .unwrap();
        let f =
            QuadraticFunction::from_parts(&DMatrix::zeros(2, 2), &nalgebra::DVector::from_vec(vec![1.0, -1.0]), 0.0)
                .unwrap();
        let (status, m) = feasible(&f, &set);
        assert_eq!(status, SolveStatus::Optimal);
        let z = reassemble(f.homogeneous(), &set.describe(), &m.unwrap());
        assert!(min_eigenvalue(&z) > -1e-7);
        let (status, _) = feasible(&f, &ConvexSet::boxed(&[0.0, 0.0], &[1.0, 1.0]).unwrap());
        assert_eq!(status, SolveStatus::Infeasible);
    }
}
