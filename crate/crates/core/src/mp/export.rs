//! Text export of assembled programs.
//!
//! Quadratic programs and zero-sum LPs go to CPLEX-LP format. The full
//! programs have multilinear rows that no standard format carries, so they
//! use the plain-text form documented in `docs/mp-format.md`: one term per
//! `coeff var*var` group, families kept under their source labels.

use super::{MathProgram, MpError, Term};
use crate::lp::Relation;
use std::fmt::Write;

fn write_term(out: &mut String, t: &Term, names: &[String], first: bool) {
    let sign = if t.coeff < 0.0 { "-" } else { "+" };
    if first {
        let _ = write!(out, "{sign} ");
    } else {
        let _ = write!(out, " {sign} ");
    }
    let _ = write!(out, "{}", t.coeff.abs());
    if !t.vars.is_empty() {
        let prod: Vec<&str> = t.vars.iter().map(|&v| names[v as usize].as_str()).collect();
        let _ = write!(out, " {}", prod.join("*"));
    }
}

fn write_terms(out: &mut String, terms: &[Term], names: &[String]) {
    if terms.is_empty() {
        out.push('0');
        return;
    }
    for (i, t) in terms.iter().enumerate() {
        write_term(out, t, names, i == 0);
    }
}

/// Renders any assembled program in the repo's multilinear text format.
pub fn export_mp_text(mp: &MathProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(&mut out, "program {}", mp.kind.label());
    if let Some(beta) = mp.beta {
        let _ = writeln!(&mut out, "beta {beta}");
    }
    let _ = writeln!(&mut out, "variables {}", mp.num_vars());
    for name in &mp.vars.names {
        let _ = writeln!(&mut out, "  {name}");
    }
    out.push_str("minimize\n  ");
    write_terms(&mut out, &mp.objective, &mp.vars.names);
    out.push('\n');
    out.push_str("subject to\n");
    for fam in &mp.families {
        let _ = writeln!(&mut out, "family {}", fam.label);
        for row in &fam.rows {
            let _ = write!(&mut out, "  {}: ", row.name);
            write_terms(&mut out, &row.terms, &mp.vars.names);
            let rel = match row.rel {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(&mut out, " {rel} {}", row.rhs);
        }
    }
    out.push_str("end\n");
    out
}

/// Renders a quadratic program (linear rows, degree-2 objective) in
/// CPLEX-LP format. Nonnegativity lives in the constraint families, so all
/// variables are declared free.
pub fn export_qp_cplex(mp: &MathProgram) -> Result<String, MpError> {
    if mp.objective_degree() > 2 {
        return Err(MpError::Unsupported(
            "objective degree exceeds 2; use the multilinear text format".into(),
        ));
    }
    for fam in &mp.families {
        for row in &fam.rows {
            if row.degree() > 1 {
                return Err(MpError::Unsupported(format!(
                    "row {} in family {} is not linear; use the multilinear text format",
                    row.name, fam.label
                )));
            }
        }
    }
    let name = |v: u32| crate::lp::to_lp_name(&mp.vars.names[v as usize]);
    let mut out = String::new();
    out.push_str("Minimize\n obj: ");
    let linear: Vec<&Term> = mp.objective.iter().filter(|t| t.degree() <= 1).collect();
    let quad: Vec<&Term> = mp.objective.iter().filter(|t| t.degree() == 2).collect();
    let mut first = true;
    for t in linear {
        let sign = if t.coeff < 0.0 { "-" } else { "+" };
        if first {
            let _ = write!(&mut out, "{sign} ");
            first = false;
        } else {
            let _ = write!(&mut out, " {sign} ");
        }
        let _ = write!(&mut out, "{}", t.coeff.abs());
        if let Some(&v) = t.vars.first() {
            let _ = write!(&mut out, " {}", name(v));
        }
    }
    if !quad.is_empty() {
        if !first {
            out.push(' ');
        }
        out.push_str("+ [ ");
        for (i, t) in quad.iter().enumerate() {
            let c = 2.0 * t.coeff;
            let sign = if c < 0.0 { "-" } else { "+" };
            if i == 0 {
                let _ = write!(&mut out, "{sign} ");
            } else {
                let _ = write!(&mut out, " {sign} ");
            }
            let _ = write!(
                &mut out,
                "{} {} * {}",
                c.abs(),
                name(t.vars[0]),
                name(t.vars[1])
            );
        }
        out.push_str(" ] / 2");
    }
    out.push_str("\nSubject To\n");
    for fam in &mp.families {
        for row in &fam.rows {
            let _ = write!(
                &mut out,
                " {}: ",
                crate::lp::to_lp_name(&format!("{}_{}", fam.label, row.name))
            );
            let mut first = true;
            for t in &row.terms {
                let sign = if t.coeff < 0.0 { "-" } else { "+" };
                if first {
                    let _ = write!(&mut out, "{sign} ");
                    first = false;
                } else {
                    let _ = write!(&mut out, " {sign} ");
                }
                let _ = write!(&mut out, "{}", t.coeff.abs());
                if let Some(&v) = t.vars.first() {
                    let _ = write!(&mut out, " {}", name(v));
                }
            }
            if first {
                out.push('0');
            }
            let rel = match row.rel {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(&mut out, " {rel} {}", row.rhs);
        }
    }
    out.push_str("Bounds\n");
    for v in &mp.vars.names {
        let _ = writeln!(&mut out, " {} free", crate::lp::to_lp_name(v));
    }
    out.push_str("End\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_example;
    use crate::mp::{assemble_auto, specialize_qp};

    #[test]
    fn mp_text_contains_families() {
        let game = builtin_example("sc-average").unwrap();
        let mp = assemble_auto(&game).unwrap();
        let text = export_mp_text(&mp);
        assert!(text.starts_with("program MP1"));
        for label in ["(i)", "(vi)", "(xi)"] {
            assert!(text.contains(&format!("family {label}")), "missing {label}");
        }
        assert!(text.contains("f[1,1]*x[1,1]") || text.contains("x[1,1]*f[1,1]"));
        assert!(text.ends_with("end\n"));
    }

    #[test]
    fn qp_cplex_has_quadratic_block() {
        let game = builtin_example("sc-average").unwrap();
        let qp = specialize_qp(&assemble_auto(&game).unwrap(), &game).unwrap();
        let text = export_qp_cplex(&qp).unwrap();
        assert!(text.contains("[ "));
        assert!(text.contains("] / 2"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("free"));
    }

    #[test]
    fn full_program_rejected_by_cplex_export() {
        let game = builtin_example("sc-average").unwrap();
        let mp = assemble_auto(&game).unwrap();
        assert!(matches!(export_qp_cplex(&mp), Err(MpError::Unsupported(_))));
    }
}
