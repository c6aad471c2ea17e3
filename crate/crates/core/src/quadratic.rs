//! Quadratic functions in homogeneous form `f(x) = [1; x]ᵀ H [1; x]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GcsError, Result};

/// `f(x) = [1; x]ᵀ H [1; x] = xᵀ Q x + qᵀ x + c`, with `H = [[c, q/2ᵀ], [q/2, Q]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadraticRepr", into = "QuadraticRepr")]
pub struct QuadraticFunction {
    h: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct QuadraticRepr {
    dim: usize,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
}

impl TryFrom<QuadraticRepr> for QuadraticFunction {
    type Error = GcsError;
    fn try_from(r: QuadraticRepr) -> Result<Self> {
        let n = r.dim + 1;
        if r.h.len() != n {
            return Err(GcsError::DimensionMismatch { expected: n, got: r.h.len() });
        }
        for row in &r.h {
            if row.len() != n {
                return Err(GcsError::DimensionMismatch { expected: n, got: row.len() });
            }
        }
        Self::from_homogeneous(DMatrix::from_fn(n, n, |i, j| r.h[i][j]))
    }
}

impl From<QuadraticFunction> for QuadraticRepr {
    fn from(f: QuadraticFunction) -> Self {
        let n = f.h.nrows();
        QuadraticRepr { dim: n - 1, h: (0..n).map(|i| (0..n).map(|j| f.h[(i, j)]).collect()).collect() }
    }
}

impl QuadraticFunction {
    /// Accepts a symmetric `(dim+1)×(dim+1)` matrix with finite entries.
    pub fn from_homogeneous(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() == 0 || h.nrows() != h.ncols() {
            return Err(GcsError::InvalidArgument("homogeneous matrix must be square and nonempty".into()));
        }
        if !h.iter().all(|v| v.is_finite()) {
            return Err(GcsError::InvalidArgument("homogeneous matrix has non-finite entries".into()));
        }
        let scale = h.amax().max(1.0);
        if (&h - h.transpose()).amax() > 1e-9 * scale {
            return Err(GcsError::InvalidArgument("homogeneous matrix is not symmetric".into()));
        }
        Ok(Self { h })
    }

    /// `xᵀ Q x + qᵀ x + c`. `Q` is symmetrized.
    pub fn from_parts(q_mat: &DMatrix<f64>, q: &DVector<f64>, c: f64) -> Result<Self> {
        let n = q.len();
        if q_mat.nrows() != n || q_mat.ncols() != n {
            return Err(GcsError::DimensionMismatch { expected: n, got: q_mat.nrows() });
        }
        let mut h = DMatrix::zeros(n + 1, n + 1);
        h[(0, 0)] = c;
        for i in 0..n {
            h[(0, i + 1)] = 0.5 * q[i];
            h[(i + 1, 0)] = 0.5 * q[i];
            for j in 0..n {
                h[(i + 1, j + 1)] = 0.5 * (q_mat[(i, j)] + q_mat[(j, i)]);
            }
        }
        Self::from_homogeneous(h)
    }

    pub fn zero(dim: usize) -> Self {
        Self { h: DMatrix::zeros(dim + 1, dim + 1) }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut f = Self::zero(dim);
        f.h[(0, 0)] = c;
        f
    }

    /// `‖M x + d‖²`
    pub fn squared_norm_of_affine(m: &DMatrix<f64>, d: &DVector<f64>) -> Result<Self> {
        if m.nrows() != d.len() {
            return Err(GcsError::DimensionMismatch { expected: m.nrows(), got: d.len() });
        }
        Self::from_parts(&(m.transpose() * m), &(2.0 * m.transpose() * d), d.dot(d))
    }

    /// `weight · ‖x_head - x_tail‖²` for `x = (x_tail, x_head)` of dimension `2n`.
    pub fn squared_difference(n: usize, weight: f64) -> Self {
        let mut m = DMatrix::zeros(n, 2 * n);
        for i in 0..n {
            m[(i, i)] = -1.0;
            m[(i, n + i)] = 1.0;
        }
        let mut f = Self::squared_norm_of_affine(&m, &DVector::zeros(n)).expect("consistent shapes");
        f.h *= weight;
        f
    }

    pub fn dim(&self) -> usize {
        self.h.nrows() - 1
    }

    pub fn homogeneous(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn quadratic_part(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.h.view((1, 1), (n, n)).into_owned()
    }

    /// `q` in `xᵀQx + qᵀx + c`.
    pub fn linear_part(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(n, |i, _| 2.0 * self.h[(0, i + 1)])
    }

    pub fn constant_part(&self) -> f64 {
        self.h[(0, 0)]
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(GcsError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.h.nrows();
        let z = |i: usize| if i == 0 { 1.0 } else { x[i - 1] };
        let mut acc = 0.0;
        for i in 0..n {
            let zi = z(i);
            let mut row = 0.0;
            for j in 0..n {
                row += self.h[(i, j)] * z(j);
            }
            acc += zi * row;
        }
        acc
    }

    pub fn min_curvature(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.quadratic_part()).eigenvalues.min()
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.min_curvature() >= -tol
    }

    pub fn add_constant(&mut self, c: f64) {
        self.h[(0, 0)] += c;
    }

    pub fn add(&self, other: &QuadraticFunction) -> Result<QuadraticFunction> {
        if self.dim() != other.dim() {
            return Err(GcsError::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(Self { h: &self.h + &other.h })
    }

    pub fn scaled(&self, s: f64) -> QuadraticFunction {
        Self { h: &self.h * s }
    }

    /// The same function of a block of a larger vector: `g(y) = f(y[offset..offset+dim])`.
    pub fn embed(&self, total_dim: usize, offset: usize) -> QuadraticFunction {
        let n = self.dim();
        assert!(offset + n <= total_dim);
        let map = |i: usize| if i == 0 { 0 } else { offset + i };
        let mut h = DMatrix::zeros(total_dim + 1, total_dim + 1);
        for i in 0..=n {
            for j in 0..=n {
                h[(map(i), map(j))] = self.h[(i, j)];
            }
        }
        Self { h }
    }

    /// Index map from this function's homogeneous coordinates into those of a
    /// `total_dim` vector holding `x` at `offset`.
    pub fn embedding_map(dim: usize, offset: usize) -> Vec<usize> {
        (0..=dim).map(|i| if i == 0 { 0 } else { offset + i }).collect()
    }
}
