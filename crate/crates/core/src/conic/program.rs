use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

/// Index of a scalar decision variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// `constant + Σ coef·x_var`. Repeated variables are allowed and summed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarId) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn term(v: VarId, coef: f64) -> Self {
        Self { terms: vec![(v, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &AffineExpr, scale: f64) -> &mut Self {
        if scale == 0.0 {
            return self;
        }
        self.constant += scale * other.constant;
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, scale);
        out
    }

    /// True when no variable carries a nonzero coefficient.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>()
    }

    /// Merge repeated variables and drop zero coefficients.
    pub fn compact(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        self.terms = merged;
    }
}

impl From<f64> for AffineExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c)
    }
}

impl From<VarId> for AffineExpr {
    fn from(v: VarId) -> Self {
        AffineExpr::var(v)
    }
}

impl AddAssign<&AffineExpr> for AffineExpr {
    fn add_assign(&mut self, rhs: &AffineExpr) {
        self.add_scaled(rhs, 1.0);
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self += &rhs;
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(self, s: f64) -> AffineExpr {
        self.scaled(s)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scaled(-1.0)
    }
}

/// Symmetric matrix whose entries are affine expressions.
///
/// Only the upper triangle is stored, column by column:
/// `(0,0), (0,1), (1,1), (0,2), (1,2), (2,2), ...`
#[derive(Clone, Debug, PartialEq)]
pub struct SymExpr {
    n: usize,
    upper: Vec<AffineExpr>,
}

impl SymExpr {
    pub fn zeros(n: usize) -> Self {
        Self { n, upper: vec![AffineExpr::zero(); n * (n + 1) / 2] }
    }

    pub fn from_constant(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows());
        out.add_constant_matrix(m, 1.0);
        out
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn index(i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        j * (j + 1) / 2 + i
    }

    pub fn get(&self, i: usize, j: usize) -> &AffineExpr {
        &self.upper[Self::index(i, j)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut AffineExpr {
        &mut self.upper[Self::index(i, j)]
    }

    pub fn upper(&self) -> &[AffineExpr] {
        &self.upper
    }

    pub fn into_upper(self) -> Vec<AffineExpr> {
        self.upper
    }

    /// `self += scale * m` (m symmetric; upper triangle read).
    pub fn add_constant_matrix(&mut self, m: &DMatrix<f64>, scale: f64) {
        assert_eq!(m.nrows(), self.n);
        for j in 0..self.n {
            for i in 0..=j {
                let v = m[(i, j)];
                if v != 0.0 {
                    self.upper[Self::index(i, j)].constant += scale * v;
                }
            }
        }
    }

    /// `self += coef·var·m` (m symmetric; upper triangle read).
    pub fn add_var_matrix(&mut self, var: VarId, m: &DMatrix<f64>, coef: f64) {
        assert_eq!(m.nrows(), self.n);
        for j in 0..self.n {
            for i in 0..=j {
                let v = m[(i, j)];
                if v != 0.0 {
                    self.upper[Self::index(i, j)].add_term(var, coef * v);
                }
            }
        }
    }

    /// `self += scale * other` where `other` is placed at rows/cols `map`.
    pub fn add_embedded(&mut self, other: &SymExpr, map: &[usize], scale: f64) {
        assert_eq!(map.len(), other.n);
        for j in 0..other.n {
            for i in 0..=j {
                let e = &other.upper[Self::index(i, j)];
                self.upper[Self::index(map[i], map[j])].add_scaled(e, scale);
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for i in 0..=j {
                let v = self.upper[Self::index(i, j)].eval(x);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn is_constant(&self) -> bool {
        self.upper.iter().all(AffineExpr::is_constant)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `expr == 0`
    Zero(AffineExpr),
    /// `expr >= 0`
    NonNeg(AffineExpr),
    /// `e[0] >= ‖e[1..]‖₂`
    SecondOrder(Vec<AffineExpr>),
    /// The symmetric matrix is positive semidefinite.
    Psd(SymExpr),
}

impl Constraint {
    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Constraint::Zero(e) => e.eval(x).abs(),
            Constraint::NonNeg(e) => (-e.eval(x)).max(0.0),
            Constraint::SecondOrder(es) => {
                let head = es[0].eval(x);
                let norm = es[1..].iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
                (norm - head).max(0.0)
            }
            Constraint::Psd(m) => {
                if m.size() == 0 {
                    return 0.0;
                }
                let eig = SymmetricEigen::new(m.eval(x));
                (-eig.eigenvalues.min()).max(0.0)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Objective `Σ c·x_i·x_j + linear`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Objective {
    pub quadratic: Vec<(VarId, VarId, f64)>,
    pub linear: AffineExpr,
}

impl Objective {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.linear.eval(x) + self.quadratic.iter().map(|&(i, j, c)| c * x[i.0] * x[j.0]).sum::<f64>()
    }

    pub fn is_linear(&self) -> bool {
        self.quadratic.iter().all(|t| t.2 == 0.0)
    }
}

/// A conic program over scalar variables.
///
/// Constraints whose expressions carry no variables are checked when they are
/// added; a violated one marks the program infeasible without calling a
/// solver.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    num_vars: usize,
    constraints: Vec<Constraint>,
    objective: Objective,
    sense: Sense,
    constant_tol: f64,
    infeasible: Option<String>,
}

impl Default for ConicProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProgram {
    pub fn new() -> Self {
        Self {
            num_vars: 0,
            constraints: Vec::new(),
            objective: Objective::default(),
            sense: Sense::Minimize,
            constant_tol: crate::tol::MEMBERSHIP_TOL,
            infeasible: None,
        }
    }

    /// Tolerance used when checking constraints that contain no variables.
    pub fn set_constant_tolerance(&mut self, tol: f64) {
        self.constant_tol = tol;
    }

    pub fn add_var(&mut self) -> VarId {
        self.num_vars += 1;
        VarId(self.num_vars - 1)
    }

    pub fn add_vars(&mut self, n: usize) -> Vec<VarId> {
        (0..n).map(|_| self.add_var()).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn set_sense(&mut self, sense: Sense) {
        self.sense = sense;
    }

    /// Reason the program is known infeasible before solving, if any.
    pub fn known_infeasible(&self) -> Option<&str> {
        self.infeasible.as_deref()
    }

    fn flag_constant(&mut self, violation: f64, what: &str) {
        if violation > self.constant_tol && self.infeasible.is_none() {
            self.infeasible = Some(format!("constant {what} constraint violated by {violation:.3e}"));
        }
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        let constant = match &c {
            Constraint::Zero(e) | Constraint::NonNeg(e) => e.is_constant(),
            Constraint::SecondOrder(es) => es.iter().all(AffineExpr::is_constant),
            Constraint::Psd(m) => m.is_constant(),
        };
        if constant {
            let v = c.violation(&vec![0.0; self.num_vars]);
            let what = match &c {
                Constraint::Zero(_) => "equality",
                Constraint::NonNeg(_) => "inequality",
                Constraint::SecondOrder(_) => "second-order cone",
                Constraint::Psd(_) => "PSD",
            };
            self.flag_constant(v, what);
            return;
        }
        self.constraints.push(c);
    }

    /// `expr == 0`
    pub fn add_eq(&mut self, expr: AffineExpr) {
        self.add_constraint(Constraint::Zero(expr));
    }

    /// `expr >= 0`
    pub fn add_nonneg(&mut self, expr: AffineExpr) {
        self.add_constraint(Constraint::NonNeg(expr));
    }

    /// `lhs <= rhs`
    pub fn add_le(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.add_nonneg(rhs - lhs);
    }

    /// `head >= ‖tail‖₂`
    pub fn add_soc(&mut self, head: AffineExpr, tail: Vec<AffineExpr>) {
        let mut es = Vec::with_capacity(tail.len() + 1);
        es.push(head);
        es.extend(tail);
        self.add_constraint(Constraint::SecondOrder(es));
    }

    pub fn add_psd(&mut self, m: SymExpr) {
        if m.size() == 0 {
            return;
        }
        self.add_constraint(Constraint::Psd(m));
    }

    pub fn add_objective_linear(&mut self, expr: &AffineExpr) {
        self.objective.linear += expr;
    }

    pub fn add_objective_quadratic_term(&mut self, a: VarId, b: VarId, coef: f64) {
        if coef != 0.0 {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            self.objective.quadratic.push((a, b, coef));
        }
    }

    /// Add `[1; z]ᵀ H [1; z]` to the objective, where each `z_k` is affine.
    pub fn add_objective_quadratic_form(&mut self, h: &DMatrix<f64>, coords: &[AffineExpr]) {
        assert_eq!(h.nrows(), coords.len() + 1);
        let one = AffineExpr::constant(1.0);
        let z = |k: usize| if k == 0 { &one } else { &coords[k - 1] };
        let n = h.nrows();
        for a in 0..n {
            for b in 0..n {
                let hab = h[(a, b)];
                if hab == 0.0 {
                    continue;
                }
                let (za, zb) = (z(a), z(b));
                for &(va, ca) in &za.terms {
                    for &(vb, cb) in &zb.terms {
                        self.add_objective_quadratic_term(va, vb, hab * ca * cb);
                    }
                }
                let mut lin = AffineExpr::constant(hab * za.constant * zb.constant);
                for &(va, ca) in &za.terms {
                    lin.add_term(va, hab * ca * zb.constant);
                }
                for &(vb, cb) in &zb.terms {
                    lin.add_term(vb, hab * cb * za.constant);
                }
                self.objective.linear += &lin;
            }
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Largest violation of any constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_index_is_column_major_upper() {
        assert_eq!(SymExpr::index(0, 0), 0);
        assert_eq!(SymExpr::index(0, 1), 1);
        assert_eq!(SymExpr::index(1, 1), 2);
        assert_eq!(SymExpr::index(2, 0), 3);
        assert_eq!(SymExpr::index(2, 2), 5);
    }

    #[test]
    fn quadratic_form_expands_like_direct_evaluation() {
        let mut p = ConicProgram::new();
        let x = p.add_vars(2);
        let h = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.5, -1.0, 2.0, 0.3, 0.5, 0.3, 2.0]);
        // second coordinate is x1 + 0.5
        let coords = vec![AffineExpr::var(x[0]), AffineExpr::var(x[1]) + AffineExpr::constant(0.5)];
        p.add_objective_quadratic_form(&h, &coords);
        let pt = [0.7, -1.3];
        let z = nalgebra::DVector::from_vec(vec![1.0, 0.7, -1.3 + 0.5]);
        let direct = (z.transpose() * &h * &z)[(0, 0)];
        assert!((p.objective_value(&pt) - direct).abs() < 1e-12);
    }

    #[test]
    fn constant_constraints_are_checked_eagerly() {
        let mut p = ConicProgram::new();
        p.add_nonneg(AffineExpr::constant(1e-9 - 1e-8));
        assert!(p.known_infeasible().is_none());
        p.add_nonneg(AffineExpr::constant(-1.0));
        assert!(p.known_infeasible().is_some());
        assert!(p.constraints().is_empty());
    }
}
