use nalgebra::DVector;
use rand::Rng;

use super::{AffineHull, ConvexSet, SetDescription};
use crate::conic::{self, AffineExpr, ConicProgram, Sense, SolveStatus, SolverSettings};
use crate::error::{GcsError, Result};

/// Draws points from a compact convex set.
///
/// Works in the coordinates of the set's affine hull, so equality-constrained
/// sets such as segments or dynamics couplings are sampled exactly. Each draw
/// first tries rejection from the bounding box of the hull coordinates; when
/// the set fills too little of its box the draw falls back to a hit-and-run
/// step chain started from the Chebyshev center.
#[derive(Clone, Debug)]
pub struct SetSampler {
    owner: String,
    desc: SetDescription,
    hull: AffineHull,
    zlo: Vec<f64>,
    zhi: Vec<f64>,
    chain: Vec<f64>,
    pub max_rejections: usize,
    pub walk_steps: usize,
}

impl SetSampler {
    pub fn new(set: &ConvexSet, owner: &str) -> Result<Self> {
        let desc = set.describe();
        let hull = desc.affine_hull().ok_or_else(|| GcsError::EmptySet { owner: owner.to_string() })?;
        let d = hull.dim();
        let mut programs = Vec::with_capacity(2 * d);
        for k in 0..d {
            for sense in [Sense::Minimize, Sense::Maximize] {
                let mut prog = ConicProgram::new();
                let coords = hull.coords(&mut prog);
                desc.add_constraints(&mut prog, &coords);
                prog.add_objective_linear(&AffineExpr::var(conic::VarId(k)));
                prog.set_sense(sense);
                programs.push(prog);
            }
        }
        let reports = conic::solve_batch(&programs, &SolverSettings::default());
        let mut zlo = vec![0.0; d];
        let mut zhi = vec![0.0; d];
        for (k, rep) in reports.iter().enumerate() {
            if rep.status != SolveStatus::Optimal {
                return Err(GcsError::Sampling(format!("{owner}: bounding LP returned {:?}", rep.status)));
            }
            if k % 2 == 0 {
                zlo[k / 2] = rep.objective.unwrap_or(f64::NAN);
            } else {
                zhi[k / 2] = rep.objective.unwrap_or(f64::NAN);
            }
        }
        let chain = if d == 0 {
            Vec::new()
        } else {
            let c = set.chebyshev_center(owner)?;
            let diff = DVector::from_vec(c) - &hull.x0;
            (hull.basis.transpose() * diff).iter().copied().collect()
        };
        Ok(Self { owner: owner.to_string(), desc, hull, zlo, zhi, chain, max_rejections: 1000, walk_steps: 5 })
    }

    pub fn hull_dim(&self) -> usize {
        self.hull.dim()
    }

    pub fn sample<R: Rng>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let d = self.hull.dim();
        if d == 0 {
            return Ok(self.hull.point(&[]));
        }
        let mut z = vec![0.0; d];
        for _ in 0..self.max_rejections {
            for k in 0..d {
                z[k] = if self.zhi[k] > self.zlo[k] { rng.gen_range(self.zlo[k]..=self.zhi[k]) } else { self.zlo[k] };
            }
            let x = self.hull.point(&z);
            if self.desc.violation(&x) <= 0.0 {
                return Ok(x);
            }
        }
        for _ in 0..self.walk_steps {
            self.hit_and_run_step(rng)?;
        }
        Ok(self.hull.point(&self.chain))
    }

    fn hit_and_run_step<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        let d = self.hull.dim();
        let mut u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nu < 1e-12 {
            return Ok(());
        }
        u.iter_mut().for_each(|v| *v /= nu);
        let x = self.hull.point(&self.chain);
        let w: Vec<f64> = (&self.hull.basis * DVector::from_column_slice(&u)).iter().copied().collect();
        let (mut tlo, mut thi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..d {
            if u[k].abs() > 1e-14 {
                let a = (self.zlo[k] - self.chain[k]) / u[k];
                let b = (self.zhi[k] - self.chain[k]) / u[k];
                tlo = tlo.max(a.min(b));
                thi = thi.min(a.max(b));
            }
        }
        for r in &self.desc.inequalities {
            let aw: f64 = r.a.iter().zip(&w).map(|(a, b)| a * b).sum();
            let s = r.slack(&x).max(0.0);
            if aw > 1e-14 {
                thi = thi.min(s / aw);
            } else if aw < -1e-14 {
                tlo = tlo.max(s / aw);
            }
        }
        for e in &self.desc.ellipsoids {
            let dv = DVector::from_iterator(x.len(), x.iter().zip(&e.center).map(|(a, c)| a - c));
            let wv = DVector::from_column_slice(&w);
            let alpha = wv.dot(&(&e.shape * &wv));
            let beta = 2.0 * wv.dot(&(&e.shape * &dv));
            let gamma = (dv.dot(&(&e.shape * &dv)) - 1.0).min(0.0);
            if alpha > 1e-14 {
                let disc = (beta * beta - 4.0 * alpha * gamma).max(0.0).sqrt();
                tlo = tlo.max((-beta - disc) / (2.0 * alpha));
                thi = thi.min((-beta + disc) / (2.0 * alpha));
            }
        }
        if !(tlo.is_finite() && thi.is_finite()) || thi < tlo {
            return Err(GcsError::Sampling(format!("{}: degenerate hit-and-run chord", self.owner)));
        }
        let t = if thi > tlo { rng.gen_range(tlo..=thi) } else { tlo };
        for k in 0..d {
            self.chain[k] += t * u[k];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_inside() {
        let set = ConvexSet::intersection(vec![
            ConvexSet::boxed(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(),
            ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap(),
        ])
        .unwrap();
        let mut s = SetSampler::new(&set, "v").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = s.sample(&mut rng).unwrap();
            assert!(set.contains(&x, 1e-9).unwrap());
        }
    }

    #[test]
    fn thin_sets_fall_back_to_hit_and_run() {
        // A sliver: 1e-6 wide strip across a unit box.
        let set = ConvexSet::polyhedron(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![1.0, 1.0], vec![-1.0, -1.0]],
            vec![1.0, 0.0, 1.0 + 1e-6, -1.0],
        )
        .unwrap();
        let mut s = SetSampler::new(&set, "sliver").unwrap();
        s.max_rejections = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let x = s.sample(&mut rng).unwrap();
            assert!(set.contains(&x, 1e-9).unwrap(), "{x:?}");
        }
    }

    #[test]
    fn segment_samples_lie_on_the_line() {
        let seg = ConvexSet::intersection(vec![
            ConvexSet::boxed(&[4.0, -1.0], &[7.0, 1.0]).unwrap(),
            ConvexSet::affine_equalities(vec![vec![0.0, 1.0]], vec![0.0]).unwrap(),
        ])
        .unwrap();
        let mut s = SetSampler::new(&seg, "b").unwrap();
        assert_eq!(s.hull_dim(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = s.sample(&mut rng).unwrap();
        assert!(x[1].abs() < 1e-12);
        assert!((4.0..=7.0).contains(&x[0]));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let set = ConvexSet::ball(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let draw = || {
            let mut s = SetSampler::new(&set, "v").unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..5).map(|_| s.sample(&mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }
}
