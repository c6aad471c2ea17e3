use nalgebra::{DMatrix, SymmetricEigen};

use super::{dot, norm, ConvexSet};
use crate::conic::{AffineExpr, ConicProgram};

/// `a·x <= b` or `a·x = b`, with `‖a‖ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearRow {
    /// `b - a·x`, nonnegative inside the halfspace.
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.b - dot(&self.a, x)
    }
}

/// `(x - center)ᵀ shape (x - center) <= 1` in the ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidForm {
    pub center: Vec<f64>,
    pub shape: DMatrix<f64>,
}

impl EllipsoidForm {
    /// `1 - (x - c)ᵀ E (x - c)`
    pub fn slack(&self, x: &[f64]) -> f64 {
        let d = nalgebra::DVector::from_iterator(x.len(), x.iter().zip(&self.center).map(|(a, c)| a - c));
        1.0 - d.dot(&(&self.shape * &d))
    }

    /// Rows `S` with `SᵀS = E`, dropping directions with zero curvature.
    pub fn factor(&self) -> Vec<Vec<f64>> {
        let eig = SymmetricEigen::new(self.shape.clone());
        let top = eig.eigenvalues.amax();
        let mut rows = Vec::new();
        for k in 0..eig.eigenvalues.len() {
            let lam = eig.eigenvalues[k];
            if lam > 1e-14 * top.max(1e-300) {
                let s = lam.sqrt();
                rows.push(eig.eigenvectors.column(k).iter().map(|v| v * s).collect());
            }
        }
        rows
    }
}

/// A set flattened to normalized linear inequalities, linear equalities and
/// ellipsoidal constraints over the ambient space.
///
/// Pairs of opposite inequalities `a·x <= b`, `-a·x <= -b` become a single
/// equality, and duplicate rows are removed.
#[derive(Clone, Debug, PartialEq)]
pub struct SetDescription {
    pub dim: usize,
    pub inequalities: Vec<LinearRow>,
    pub equalities: Vec<LinearRow>,
    pub ellipsoids: Vec<EllipsoidForm>,
}

const SAME: f64 = 1e-10;

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= SAME)
}

fn close_neg(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x + y).abs() <= SAME)
}

impl SetDescription {
    pub fn of(set: &ConvexSet) -> Self {
        let dim = set.dim();
        let mut raw = Raw::default();
        collect(set, 0, dim, &mut raw);
        Self::from_raw(dim, raw)
    }

    fn from_raw(dim: usize, raw: Raw) -> Self {
        let mut ineq: Vec<LinearRow> = Vec::new();
        let mut eq: Vec<LinearRow> = Vec::new();
        for (a, b) in raw.equalities {
            push_equality(&mut eq, a, b);
        }
        for (a, b) in raw.inequalities {
            let nr = norm(&a);
            let a: Vec<f64> = a.iter().map(|v| v / nr).collect();
            let b = b / nr;
            if ineq.iter().any(|r| close(&r.a, &a) && (r.b - b).abs() <= SAME) {
                continue;
            }
            ineq.push(LinearRow { a, b });
        }
        // Opposite pairs describe a hyperplane.
        let mut used = vec![false; ineq.len()];
        let mut kept = Vec::new();
        for i in 0..ineq.len() {
            if used[i] {
                continue;
            }
            let partner = (i + 1..ineq.len())
                .find(|&j| !used[j] && close_neg(&ineq[i].a, &ineq[j].a) && (ineq[i].b + ineq[j].b).abs() <= SAME);
            match partner {
                Some(j) => {
                    used[j] = true;
                    push_equality(&mut eq, ineq[i].a.clone(), ineq[i].b);
                }
                None => kept.push(ineq[i].clone()),
            }
        }
        SetDescription { dim, inequalities: kept, equalities: eq, ellipsoids: raw.ellipsoids }
    }

    pub fn is_polyhedral(&self) -> bool {
        self.ellipsoids.is_empty()
    }

    /// Largest violation at `x` (0 inside).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for r in &self.inequalities {
            v = v.max(-r.slack(x));
        }
        for r in &self.equalities {
            v = v.max(r.slack(x).abs());
        }
        for e in &self.ellipsoids {
            v = v.max(-e.slack(x));
        }
        v
    }

    pub fn add_constraints(&self, prog: &mut ConicProgram, coords: &[AffineExpr]) {
        assert_eq!(coords.len(), self.dim);
        let lin = |a: &[f64]| {
            let mut e = AffineExpr::zero();
            for (ai, c) in a.iter().zip(coords) {
                e.add_scaled(c, *ai);
            }
            e
        };
        for r in &self.equalities {
            prog.add_eq(lin(&r.a) - AffineExpr::constant(r.b));
        }
        for r in &self.inequalities {
            prog.add_nonneg(AffineExpr::constant(r.b) - lin(&r.a));
        }
        for e in &self.ellipsoids {
            let shifted: Vec<AffineExpr> =
                coords.iter().zip(&e.center).map(|(c, ci)| c.clone() - AffineExpr::constant(*ci)).collect();
            let tail = e
                .factor()
                .iter()
                .map(|row| {
                    let mut t = AffineExpr::zero();
                    for (s, z) in row.iter().zip(&shifted) {
                        t.add_scaled(z, *s);
                    }
                    t
                })
                .collect();
            prog.add_soc(AffineExpr::constant(1.0), tail);
        }
    }
}

fn push_equality(eq: &mut Vec<LinearRow>, a: Vec<f64>, b: f64) {
    let nr = norm(&a);
    let mut a: Vec<f64> = a.iter().map(|v| v / nr).collect();
    let mut b = b / nr;
    // Canonical sign: first nonzero coefficient positive.
    if a.iter().find(|v| v.abs() > SAME).is_some_and(|v| *v < 0.0) {
        a.iter_mut().for_each(|v| *v = -*v);
        b = -b;
    }
    if eq.iter().any(|r| close(&r.a, &a) && (r.b - b).abs() <= SAME) {
        return;
    }
    eq.push(LinearRow { a, b });
}

#[derive(Default)]
struct Raw {
    inequalities: Vec<(Vec<f64>, f64)>,
    equalities: Vec<(Vec<f64>, f64)>,
    ellipsoids: Vec<EllipsoidForm>,
}

fn collect(set: &ConvexSet, offset: usize, total: usize, out: &mut Raw) {
    match set {
        ConvexSet::Point { point } => {
            for (i, p) in point.iter().enumerate() {
                let mut a = vec![0.0; total];
                a[offset + i] = 1.0;
                out.equalities.push((a, *p));
            }
        }
        ConvexSet::Polyhedron { a, b } => {
            for (row, bi) in a.iter().zip(b) {
                let mut full = vec![0.0; total];
                full[offset..offset + row.len()].copy_from_slice(row);
                out.inequalities.push((full, *bi));
            }
        }
        ConvexSet::Ellipsoid { center, shape } => {
            let n = center.len();
            let mut c = vec![0.0; total];
            c[offset..offset + n].copy_from_slice(center);
            let mut e = DMatrix::zeros(total, total);
            for i in 0..n {
                for j in 0..n {
                    e[(offset + i, offset + j)] = 0.5 * (shape[i][j] + shape[j][i]);
                }
            }
            out.ellipsoids.push(EllipsoidForm { center: c, shape: e });
        }
        ConvexSet::Intersection { members } => {
            for m in members {
                collect(m, offset, total, out);
            }
        }
        ConvexSet::CartesianProduct { factors } => {
            let mut off = offset;
            for f in factors {
                collect(f, off, total, out);
                off += f.dim();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_rows_become_equalities() {
        let seg = ConvexSet::polyhedron(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 2.0], vec![0.0, -2.0], vec![2.0, 0.0]],
            vec![7.0, -4.0, 0.0, 0.0, 14.0],
        )
        .unwrap();
        let d = seg.describe();
        assert_eq!(d.equalities.len(), 1);
        assert_eq!(d.equalities[0].a, vec![0.0, 1.0]);
        // 2x <= 14 duplicates x <= 7 after normalization.
        assert_eq!(d.inequalities.len(), 2);
    }

    #[test]
    fn product_embeds_factors() {
        let p = ConvexSet::product(vec![ConvexSet::point(vec![1.0]), ConvexSet::ball(vec![0.0, 0.0], 2.0).unwrap()])
            .unwrap();
        let d = p.describe();
        assert_eq!(d.dim, 3);
        assert_eq!(d.equalities.len(), 1);
        assert_eq!(d.ellipsoids.len(), 1);
        assert!((d.ellipsoids[0].slack(&[1.0, 2.0, 0.0])).abs() < 1e-12);
        assert_eq!(d.ellipsoids[0].factor().len(), 2);
    }

    #[test]
    fn violation_matches_membership() {
        let b = ConvexSet::boxed(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let d = b.describe();
        assert_eq!(d.violation(&[0.5, 1.0]), 0.0);
        assert!((d.violation(&[0.5, 2.5]) - 0.5).abs() < 1e-12);
    }
}
