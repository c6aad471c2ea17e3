//! Convex sets: points, polyhedra, ellipsoids, intersections and products.

mod describe;
mod geometry;
mod sample;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::conic::{AffineExpr, ConicProgram};
use crate::error::{GcsError, Result};
use crate::tol::Tolerances;

pub use describe::{EllipsoidForm, LinearRow, SetDescription};
pub use geometry::{AffineHull, Extents};
pub use sample::SetSampler;

/// A convex set in `R^n`. Matrices are stored as lists of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexSet {
    /// `{point}`
    Point {
        point: Vec<f64>,
    },
    /// `{x : A x <= b}`
    Polyhedron {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    /// `{x : (x - center)ᵀ shape (x - center) <= 1}`
    Ellipsoid {
        center: Vec<f64>,
        shape: Vec<Vec<f64>>,
    },
    Intersection {
        members: Vec<ConvexSet>,
    },
    CartesianProduct {
        factors: Vec<ConvexSet>,
    },
}

impl ConvexSet {
    pub fn point(p: impl Into<Vec<f64>>) -> Self {
        ConvexSet::Point { point: p.into() }
    }

    pub fn polyhedron(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let s = ConvexSet::Polyhedron { a, b };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(GcsError::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        let n = lo.len();
        let mut a = Vec::with_capacity(2 * n);
        let mut b = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            a.push(row.clone());
            b.push(hi[i]);
            row[i] = -1.0;
            a.push(row);
            b.push(-lo[i]);
        }
        Self::polyhedron(a, b)
    }

    /// `{x : A x = b}`, stored as a polyhedron with paired opposite rows.
    pub fn affine_equalities(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(GcsError::DimensionMismatch { expected: a.len(), got: b.len() });
        }
        let mut rows = Vec::with_capacity(2 * a.len());
        let mut rhs = Vec::with_capacity(2 * a.len());
        for (row, bi) in a.into_iter().zip(b) {
            rows.push(row.iter().map(|v| -v).collect());
            rhs.push(-bi);
            rows.push(row);
            rhs.push(bi);
        }
        Self::polyhedron(rows, rhs)
    }

    pub fn ellipsoid(center: Vec<f64>, shape: Vec<Vec<f64>>) -> Result<Self> {
        let s = ConvexSet::Ellipsoid { center, shape };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    /// Euclidean ball of the given radius.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(GcsError::InvalidSet(format!("ball radius must be positive, got {radius}")));
        }
        let n = center.len();
        let shape =
            (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 / (radius * radius) } else { 0.0 }).collect()).collect();
        Self::ellipsoid(center, shape)
    }

    pub fn intersection(members: Vec<ConvexSet>) -> Result<Self> {
        let s = ConvexSet::Intersection { members };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    pub fn product(factors: Vec<ConvexSet>) -> Result<Self> {
        let s = ConvexSet::CartesianProduct { factors };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    /// Ambient dimension. Only meaningful for validated sets.
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Point { point } => point.len(),
            ConvexSet::Polyhedron { a, .. } => a.first().map_or(0, Vec::len),
            ConvexSet::Ellipsoid { center, .. } => center.len(),
            ConvexSet::Intersection { members } => members.first().map_or(0, ConvexSet::dim),
            ConvexSet::CartesianProduct { factors } => factors.iter().map(ConvexSet::dim).sum(),
        }
    }

    /// Structural checks: consistent dimensions, finite data, no zero rows,
    /// symmetric PSD ellipsoid shapes. Returns the ambient dimension.
    pub fn validate(&self, tol: &Tolerances) -> Result<usize> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ConvexSet::Point { point } => {
                if point.is_empty() || !finite(point) {
                    return Err(GcsError::InvalidSet("point must be a nonempty finite vector".into()));
                }
                Ok(point.len())
            }
            ConvexSet::Polyhedron { a, b } => {
                if a.is_empty() {
                    return Err(GcsError::InvalidSet("polyhedron needs at least one row".into()));
                }
                if a.len() != b.len() {
                    return Err(GcsError::DimensionMismatch { expected: a.len(), got: b.len() });
                }
                let n = a[0].len();
                if n == 0 {
                    return Err(GcsError::InvalidSet("polyhedron rows are empty".into()));
                }
                for (i, row) in a.iter().enumerate() {
                    if row.len() != n {
                        return Err(GcsError::DimensionMismatch { expected: n, got: row.len() });
                    }
                    if !finite(row) || !b[i].is_finite() {
                        return Err(GcsError::InvalidSet(format!("row {i} has non-finite data")));
                    }
                    if norm(row) <= tol.zero_row {
                        return Err(GcsError::InvalidSet(format!("row {i} has a zero normal")));
                    }
                }
                Ok(n)
            }
            ConvexSet::Ellipsoid { center, shape } => {
                let n = center.len();
                if n == 0 || !finite(center) {
                    return Err(GcsError::InvalidSet("ellipsoid center must be a nonempty finite vector".into()));
                }
                let e = rows_to_matrix(shape, n)?;
                if !e.iter().all(|v| v.is_finite()) {
                    return Err(GcsError::InvalidSet("ellipsoid shape has non-finite entries".into()));
                }
                let scale = e.amax().max(1.0);
                if (&e - e.transpose()).amax() > tol.symmetry * scale {
                    return Err(GcsError::InvalidSet("ellipsoid shape is not symmetric".into()));
                }
                let min_eig = SymmetricEigen::new(e).eigenvalues.min();
                if min_eig < -tol.psd {
                    return Err(GcsError::InvalidSet(format!(
                        "ellipsoid shape is not PSD (min eigenvalue {min_eig:.3e})"
                    )));
                }
                Ok(n)
            }
            ConvexSet::Intersection { members } => {
                let first = members
                    .first()
                    .ok_or_else(|| GcsError::InvalidSet("intersection of no sets".into()))?
                    .validate(tol)?;
                for m in &members[1..] {
                    let d = m.validate(tol)?;
                    if d != first {
                        return Err(GcsError::DimensionMismatch { expected: first, got: d });
                    }
                }
                Ok(first)
            }
            ConvexSet::CartesianProduct { factors } => {
                if factors.is_empty() {
                    return Err(GcsError::InvalidSet("product of no sets".into()));
                }
                factors.iter().map(|f| f.validate(tol)).sum()
            }
        }
    }

    /// Membership with slack `tol`. Polyhedron rows are compared after
    /// normalizing the row, so `tol` is a distance.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        let n = self.dim();
        if x.len() != n {
            return Err(GcsError::DimensionMismatch { expected: n, got: x.len() });
        }
        Ok(self.contains_unchecked(x, tol))
    }

    fn contains_unchecked(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexSet::Point { point } => point.iter().zip(x).all(|(p, v)| (p - v).abs() <= tol),
            ConvexSet::Polyhedron { a, b } => a.iter().zip(b).all(|(row, &bi)| {
                let nr = norm(row);
                (dot(row, x) - bi) / nr <= tol
            }),
            ConvexSet::Ellipsoid { center, shape } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let q: f64 = shape.iter().zip(&d).map(|(row, di)| di * dot(row, &d)).sum();
                q <= 1.0 + tol
            }
            ConvexSet::Intersection { members } => members.iter().all(|m| m.contains_unchecked(x, tol)),
            ConvexSet::CartesianProduct { factors } => {
                let mut off = 0;
                factors.iter().all(|f| {
                    let d = f.dim();
                    let ok = f.contains_unchecked(&x[off..off + d], tol);
                    off += d;
                    ok
                })
            }
        }
    }

    /// Flattened constraint description in the ambient space.
    pub fn describe(&self) -> SetDescription {
        SetDescription::of(self)
    }

    /// Constrain the affine coordinates `coords` to lie in the set.
    pub fn add_constraints(&self, prog: &mut ConicProgram, coords: &[AffineExpr]) {
        self.describe().add_constraints(prog, coords);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    for r in rows {
        if r.len() != ncols {
            return Err(GcsError::DimensionMismatch { expected: ncols, got: r.len() });
        }
    }
    if rows.len() != ncols {
        return Err(GcsError::DimensionMismatch { expected: ncols, got: rows.len() });
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> ConvexSet {
        ConvexSet::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn box_membership_with_tolerance() {
        let b = unit_box();
        assert!(b.contains(&[0.0, 0.0], 1e-6).unwrap());
        assert!(b.contains(&[1.0 + 1e-9, 0.0], 1e-6).unwrap());
        assert!(!b.contains(&[1.1, 0.0], 1e-6).unwrap());
    }

    #[test]
    fn ball_excludes_far_point() {
        let b = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(!b.contains(&[2.0, 0.0], 1e-6).unwrap());
        assert!(b.contains(&[0.6, 0.8], 1e-6).unwrap());
    }

    #[test]
    fn product_checks_factors() {
        let p = ConvexSet::product(vec![unit_box(), ConvexSet::point(vec![3.0])]).unwrap();
        assert_eq!(p.dim(), 3);
        assert!(p.contains(&[0.5, 0.5, 3.0], 1e-6).unwrap());
        assert!(!p.contains(&[0.5, 0.5, 2.0], 1e-6).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConvexSet::polyhedron(vec![vec![0.0, 0.0]], vec![1.0]).is_err());
        assert!(ConvexSet::ellipsoid(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, -1.0]]).is_err());
        assert!(ConvexSet::ellipsoid(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
        assert!(ConvexSet::intersection(vec![unit_box(), ConvexSet::point(vec![0.0])]).is_err());
        assert!(unit_box().contains(&[0.0], 1e-6).is_err());
    }

    #[test]
    fn json_uses_tagged_variants() {
        let s = ConvexSet::intersection(vec![unit_box(), ConvexSet::point(vec![0.0, 0.0])]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"type\":\"intersection\""));
        assert!(text.contains("\"A\":[[1.0,0.0]"));
        let back: ConvexSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
