//! Plot of a planar solution: vertex sets as their bounding boxes, the
//! trajectory as a polyline.

use std::fmt::Write;

use gcs_walks::{Gcs, GcsError, WalkSolution};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;

/// `None` when the trajectory is not planar.
pub fn render(g: &Gcs, sol: &WalkSolution) -> Result<Option<String>, GcsError> {
    if sol.trajectory.iter().any(|x| x.len() != 2) {
        return Ok(None);
    }
    let mut boxes = Vec::new();
    for v in g.vertices().iter().filter(|v| v.dim() == 2) {
        let ext = v.set.extents(&format!("vertex `{}`", v.id))?;
        boxes.push((v.id.clone(), ext.lo, ext.hi));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let points = boxes.iter().flat_map(|(_, l, h)| [l.clone(), h.clone()]).chain(sol.trajectory.iter().cloned());
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let px = |x: f64| MARGIN + (x - lo[0]) * scale;
    let py = |y: f64| SIZE - MARGIN - (y - lo[1]) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (id, l, h) in &boxes {
        let (w, hgt) = ((h[0] - l[0]) * scale, (h[1] - l[1]) * scale);
        if w < 1.0 && hgt < 1.0 {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="gray"/>"#, px(l[0]), py(l[1]));
        } else {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" fill-opacity="0.4" stroke="steelblue"/>"#,
                px(l[0]),
                py(h[1]),
                w.max(1.0),
                hgt.max(1.0)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="14" font-family="sans-serif">{}</text>"#,
            px(l[0]) + 3.0,
            py(h[1]) - 4.0,
            id
        );
    }
    let path: Vec<String> = sol.trajectory.iter().map(|x| format!("{:.2},{:.2}", px(x[0]), py(x[1]))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="crimson" stroke-width="2"/>"#, path.join(" "));
    for x in &sol.trajectory {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="crimson"/>"#, px(x[0]), py(x[1]));
    }
    s.push_str("</svg>\n");
    Ok(Some(s))
}
