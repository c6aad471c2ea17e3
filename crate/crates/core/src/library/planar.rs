//! A five-vertex planar instance where revisiting vertices pays off.
//!
//! `s`, `c`, `t` are points, `a` is the square `[1,3] × [-1,1]` and `b` the
//! segment from `(4,0)` to `(7,0)`. Edges: s-a, a-a, a-b, b-a, b-c, c-b, b-t,
//! c-t, each with cost `1 + ‖x_u - x_v‖²` and no vertex costs. The square
//! has a self-loop, the segment does not.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gcs::{EdgeDoc, Gcs, GcsDocument, VertexDoc};
use crate::quadratic::QuadraticFunction;
use crate::sets::ConvexSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanarVariant {
    /// Edge cost `1 + ‖Δx‖²`.
    #[default]
    Standard,
    /// Edge cost `‖Δx‖²` only.
    QuadraticOnly,
    /// Standard costs, source set widened to the box `[-0.5,0.5]²`.
    SourceBox,
}

pub const EDGES: [(&str, &str); 8] =
    [("s", "a"), ("a", "a"), ("a", "b"), ("b", "a"), ("b", "c"), ("c", "b"), ("b", "t"), ("c", "t")];

pub fn planar_document(variant: PlanarVariant) -> Result<GcsDocument> {
    let source = match variant {
        PlanarVariant::SourceBox => ConvexSet::boxed(&[-0.5, -0.5], &[0.5, 0.5])?,
        _ => ConvexSet::point(vec![0.0, 0.0]),
    };
    let segment = ConvexSet::polyhedron(
        vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
        vec![7.0, -4.0, 0.0, 0.0],
    )?;
    let vertices = vec![
        VertexDoc { id: "s".into(), set: source, cost: None },
        VertexDoc { id: "a".into(), set: ConvexSet::boxed(&[1.0, -1.0], &[3.0, 1.0])?, cost: None },
        VertexDoc { id: "b".into(), set: segment, cost: None },
        VertexDoc { id: "c".into(), set: ConvexSet::point(vec![5.5, 1.0]), cost: None },
        VertexDoc { id: "t".into(), set: ConvexSet::point(vec![8.0, 0.0]), cost: None },
    ];
    let mut cost = QuadraticFunction::squared_difference(2, 1.0);
    if variant != PlanarVariant::QuadraticOnly {
        cost.add_constant(1.0);
    }
    let edges = EDGES
        .iter()
        .map(|(u, v)| EdgeDoc {
            id: format!("{u}-{v}"),
            tail: u.to_string(),
            head: v.to_string(),
            set: None,
            cost: Some(cost.clone()),
        })
        .collect();
    Ok(GcsDocument {
        vertices,
        edges,
        source: "s".into(),
        target: "t".into(),
        source_point: vec![0.0, 0.0],
        target_point: vec![8.0, 0.0],
    })
}

pub fn build_planar_instance() -> Result<Gcs> {
    Gcs::from_document(&planar_document(PlanarVariant::Standard)?)
}

pub fn build_planar_variant(variant: PlanarVariant) -> Result<Gcs> {
    Gcs::from_document(&planar_document(variant)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let g = build_planar_instance().unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (5, 8));
        let b = g.vertex(g.vertex_idx("b").unwrap());
        assert_eq!(b.description().equalities.len(), 1);
    }

    #[test]
    fn variants_build() {
        for v in [PlanarVariant::QuadraticOnly, PlanarVariant::SourceBox] {
            build_planar_variant(v).unwrap();
        }
    }
}
