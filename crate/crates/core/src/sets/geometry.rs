use nalgebra::{DMatrix, DVector};

use super::{ConvexSet, SetDescription};
use crate::conic::{self, AffineExpr, ConicProgram, Sense, SolveStatus, SolverSettings};
use crate::error::{GcsError, Result};

/// Coordinate-wise extent of a compact set, with the LP points attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct Extents {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub argmin: Vec<Vec<f64>>,
    pub argmax: Vec<Vec<f64>>,
}

/// `{x0 + N z}`: the affine subspace cut out by a set's equalities.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineHull {
    pub x0: DVector<f64>,
    /// Orthonormal columns.
    pub basis: DMatrix<f64>,
}

impl AffineHull {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn point(&self, z: &[f64]) -> Vec<f64> {
        let z = DVector::from_column_slice(z);
        (&self.x0 + &self.basis * z).iter().copied().collect()
    }

    /// Coordinates `x0 + N z` as affine expressions in fresh variables `z`.
    pub fn coords(&self, prog: &mut ConicProgram) -> Vec<AffineExpr> {
        let z = prog.add_vars(self.dim());
        (0..self.x0.len())
            .map(|i| {
                let mut e = AffineExpr::constant(self.x0[i]);
                for (k, zk) in z.iter().enumerate() {
                    e.add_term(*zk, self.basis[(i, k)]);
                }
                e
            })
            .collect()
    }
}

impl SetDescription {
    /// Affine hull of the equality rows, or `None` when they are inconsistent.
    pub fn affine_hull(&self) -> Option<AffineHull> {
        let n = self.dim;
        let p = self.equalities.len();
        if p == 0 {
            return Some(AffineHull { x0: DVector::zeros(n), basis: DMatrix::identity(n, n) });
        }
        let a = DMatrix::from_fn(p, n, |i, j| self.equalities[i].a[j]);
        let b = DVector::from_fn(p, |i, _| self.equalities[i].b);
        // SVD of Aᵀ (n×p) yields the row space in U; the complement spans the nullspace.
        let full = a.transpose().insert_columns(p, n, 0.0);
        let svd = full.svd(true, false);
        let u = svd.u.expect("u requested");
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * smax.max(1.0)).count();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let null_cols: Vec<usize> = order[rank..].to_vec();
        let basis = DMatrix::from_fn(n, null_cols.len(), |i, k| u[(i, null_cols[k])]);
        let x0 = a.clone().pseudo_inverse(1e-12).ok()? * &b;
        if (&a * &x0 - &b).amax() > 1e-8 * (1.0 + b.amax()) {
            return None;
        }
        Some(AffineHull { x0, basis })
    }
}

impl ConvexSet {
    /// Minimize and maximize every coordinate over the set (2n LPs/SOCPs).
    pub fn extents(&self, owner: &str) -> Result<Extents> {
        let desc = self.describe();
        let n = desc.dim;
        let mut programs = Vec::with_capacity(2 * n);
        for i in 0..n {
            for sense in [Sense::Minimize, Sense::Maximize] {
                let mut prog = ConicProgram::new();
                let x = prog.add_vars(n);
                let coords: Vec<AffineExpr> = x.iter().map(|v| AffineExpr::var(*v)).collect();
                desc.add_constraints(&mut prog, &coords);
                prog.add_objective_linear(&AffineExpr::var(x[i]));
                prog.set_sense(sense);
                programs.push(prog);
            }
        }
        let reports = conic::solve_batch(&programs, &SolverSettings::default());
        let mut ext = Extents { lo: vec![0.0; n], hi: vec![0.0; n], argmin: Vec::new(), argmax: Vec::new() };
        for (k, rep) in reports.into_iter().enumerate() {
            match rep.status {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible => return Err(GcsError::EmptySet { owner: owner.to_string() }),
                SolveStatus::Unbounded => return Err(GcsError::Unbounded { owner: owner.to_string() }),
                SolveStatus::NumericalFailure => {
                    return Err(GcsError::Solver(format!("bounding LP for {owner}: {}", rep.message)))
                }
            }
            let i = k / 2;
            let x = rep.x.expect("optimal report carries a solution");
            if k % 2 == 0 {
                ext.lo[i] = rep.objective.unwrap_or(f64::NAN);
                ext.argmin.push(x);
            } else {
                ext.hi[i] = rep.objective.unwrap_or(f64::NAN);
                ext.argmax.push(x);
            }
        }
        Ok(ext)
    }

    /// Center of the largest ball inside the set, measured within the affine
    /// hull of its equalities.
    pub fn chebyshev_center(&self, owner: &str) -> Result<Vec<f64>> {
        let desc = self.describe();
        let hull = desc.affine_hull().ok_or_else(|| GcsError::EmptySet { owner: owner.to_string() })?;
        let mut prog = ConicProgram::new();
        let coords = hull.coords(&mut prog);
        let r = prog.add_var();
        for row in &desc.inequalities {
            let a = DVector::from_column_slice(&row.a);
            let reach = (hull.basis.transpose() * a).norm();
            let mut e = AffineExpr::constant(row.b);
            for (ai, c) in row.a.iter().zip(&coords) {
                e.add_scaled(c, -*ai);
            }
            e.add_term(r, -reach);
            prog.add_nonneg(e);
        }
        for ell in &desc.ellipsoids {
            let s = ell.factor();
            if s.is_empty() {
                continue;
            }
            let sm = DMatrix::from_fn(s.len(), desc.dim, |i, j| s[i][j]);
            let reach = (sm.clone() * &hull.basis).norm();
            let tail = (0..s.len())
                .map(|i| {
                    let mut t = AffineExpr::zero();
                    for j in 0..desc.dim {
                        t.add_scaled(&(coords[j].clone() - AffineExpr::constant(ell.center[j])), sm[(i, j)]);
                    }
                    t
                })
                .collect();
            let mut head = AffineExpr::constant(1.0);
            head.add_term(r, -reach);
            prog.add_soc(head, tail);
        }
        prog.add_nonneg(AffineExpr::var(r));
        prog.add_le(AffineExpr::var(r), AffineExpr::constant(1e3));
        prog.add_objective_linear(&AffineExpr::var(r));
        prog.set_sense(Sense::Maximize);
        let rep = conic::solve(&prog, &SolverSettings::default());
        match rep.status {
            SolveStatus::Optimal => {
                let x = rep.x.expect("optimal report carries a solution");
                Ok(coords.iter().map(|c| c.eval(&x)).collect())
            }
            SolveStatus::Infeasible => Err(GcsError::EmptySet { owner: owner.to_string() }),
            _ => Err(GcsError::Solver(format!("Chebyshev center of {owner}: {}", rep.message))),
        }
    }
}
