//! Builders for the shipped problem families.

pub mod bezier;
pub mod planar;
pub mod pwa;
pub mod skills;

use serde::{Deserialize, Serialize};

use crate::conic::{self, AffineExpr, ConicProgram, SolveStatus, SolverSettings};
use crate::error::{GcsError, Result};
use crate::gcs::Gcs;
use crate::sets::ConvexSet;

pub use bezier::{build_bezier_gcs, corridor_spec, BezierSpec};
pub use planar::{build_planar_instance, build_planar_variant, PlanarVariant};
pub use pwa::{build_pwa_gcs, pendulum_source_box_spec, pendulum_spec, replay_pwa, PwaSpec, ReplayReport};
pub use skills::{build_skill_gcs, gripper_spec, SkillSpec};

/// A problem family together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    Planar {
        #[serde(default)]
        variant: PlanarVariant,
    },
    Bezier(BezierSpec),
    Pwa(PwaSpec),
    Skills(SkillSpec),
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Gcs> {
        match self {
            InstanceSpec::Planar { variant } => build_planar_variant(*variant),
            InstanceSpec::Bezier(s) => build_bezier_gcs(s),
            InstanceSpec::Pwa(s) => build_pwa_gcs(s),
            InstanceSpec::Skills(s) => build_skill_gcs(s),
        }
    }
}

/// Whether `set` has a point, decided by a zero-objective conic program.
pub(crate) fn feasible(set: &ConvexSet) -> Result<bool> {
    let mut prog = ConicProgram::new();
    let x = prog.add_vars(set.dim());
    let coords: Vec<AffineExpr> = x.iter().map(|v| AffineExpr::var(*v)).collect();
    set.add_constraints(&mut prog, &coords);
    let rep = conic::solve(&prog, &SolverSettings::default());
    match rep.status {
        SolveStatus::Optimal => Ok(true),
        SolveStatus::Infeasible => Ok(false),
        _ => Err(GcsError::Solver(format!("feasibility check: {}", rep.message))),
    }
}
