use std::io::Write;

use super::program::{AffineExpr, ConicProgram, Constraint, Sense, SymExpr};
use crate::error::{GcsError, Result};

/// Dump a program in the Conic Benchmark Format (CBF, version 3).
///
/// Scalar constraints go to `CON` blocks, PSD constraints to `PSDCON`. Only
/// linear objectives can be expressed.
pub fn write_cbf<W: Write>(program: &ConicProgram, out: &mut W) -> Result<()> {
    if !program.objective().is_linear() {
        return Err(GcsError::Unsupported("CBF export of quadratic objectives".into()));
    }
    let n = program.num_vars();
    writeln!(out, "VER\n3\n")?;
    let sense = match program.sense() {
        Sense::Minimize => "MIN",
        Sense::Maximize => "MAX",
    };
    writeln!(out, "OBJSENSE\n{sense}\n")?;
    writeln!(out, "VAR\n{n} 1\nF {n}\n")?;

    let mut scalar_rows: Vec<&AffineExpr> = Vec::new();
    let mut cones: Vec<(&str, usize)> = Vec::new();
    let mut psds: Vec<&SymExpr> = Vec::new();
    for c in program.constraints() {
        match c {
            Constraint::Zero(e) => {
                scalar_rows.push(e);
                cones.push(("L=", 1));
            }
            Constraint::NonNeg(e) => {
                scalar_rows.push(e);
                cones.push(("L+", 1));
            }
            Constraint::SecondOrder(es) => {
                scalar_rows.extend(es.iter());
                cones.push(("Q", es.len()));
            }
            Constraint::Psd(m) => psds.push(m),
        }
    }

    if !psds.is_empty() {
        writeln!(out, "PSDCON\n{}", psds.len())?;
        for m in &psds {
            writeln!(out, "{}", m.size())?;
        }
        writeln!(out)?;
    }
    if !scalar_rows.is_empty() {
        writeln!(out, "CON\n{} {}", scalar_rows.len(), cones.len())?;
        for (kind, len) in &cones {
            writeln!(out, "{kind} {len}")?;
        }
        writeln!(out)?;
    }

    let obj = &program.objective().linear;
    let mut obj = obj.clone();
    obj.compact();
    if !obj.terms.is_empty() {
        writeln!(out, "OBJACOORD\n{}", obj.terms.len())?;
        for (v, c) in &obj.terms {
            writeln!(out, "{} {c:e}", v.0)?;
        }
        writeln!(out)?;
    }
    if obj.constant != 0.0 {
        writeln!(out, "OBJBCOORD\n{:e}\n", obj.constant)?;
    }

    let mut acoord = Vec::new();
    let mut bcoord = Vec::new();
    for (row, e) in scalar_rows.iter().enumerate() {
        let mut e = (*e).clone();
        e.compact();
        for (v, c) in &e.terms {
            acoord.push(format!("{row} {} {c:e}", v.0));
        }
        if e.constant != 0.0 {
            bcoord.push(format!("{row} {:e}", e.constant));
        }
    }
    write_block(out, "ACOORD", &acoord)?;
    write_block(out, "BCOORD", &bcoord)?;

    // PSD constraint: Σ_j x_j H_j + D ⪰ 0, lower-triangular coordinates.
    let mut hcoord = Vec::new();
    let mut dcoord = Vec::new();
    for (k, m) in psds.iter().enumerate() {
        for j in 0..m.size() {
            for i in 0..=j {
                let mut e = m.get(i, j).clone();
                e.compact();
                for (v, c) in &e.terms {
                    hcoord.push(format!("{k} {} {j} {i} {c:e}", v.0));
                }
                if e.constant != 0.0 {
                    dcoord.push(format!("{k} {j} {i} {:e}", e.constant));
                }
            }
        }
    }
    write_block(out, "HCOORD", &hcoord)?;
    write_block(out, "DCOORD", &dcoord)?;
    Ok(())
}

fn write_block<W: Write>(out: &mut W, name: &str, lines: &[String]) -> Result<()> {
    if lines.is_empty() {
        return Ok(());
    }
    writeln!(out, "{name}\n{}", lines.len())?;
    for l in lines {
        writeln!(out, "{l}")?;
    }
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::AffineExpr;

    #[test]
    fn writes_psd_and_scalar_blocks() {
        let mut p = ConicProgram::new();
        let t = p.add_var();
        let mut m = SymExpr::zeros(2);
        m.get_mut(0, 0).add_constant(1.0);
        m.get_mut(1, 1).add_constant(1.0);
        m.get_mut(0, 1).add_term(t, 1.0);
        p.add_psd(m);
        p.add_nonneg(AffineExpr::var(t) + AffineExpr::constant(5.0));
        p.add_objective_linear(&AffineExpr::var(t));
        p.set_sense(Sense::Maximize);
        let mut buf = Vec::new();
        write_cbf(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("PSDCON\n1\n2"));
        assert!(text.contains("CON\n1 1\nL+ 1"));
        assert!(text.contains("HCOORD\n1\n0 0 1 0 1e0"));
    }
}
