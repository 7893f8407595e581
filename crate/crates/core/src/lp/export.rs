//! CPLEX-LP text export, for cross-checking instances with external tools.

use super::{LinearProgram, Relation, Sense};
use std::fmt::Write;

/// Sanitizes a name for the LP file format: keeps alphanumerics and a safe
/// symbol subset, and makes sure the name cannot be read as a number.
pub(crate) fn lp_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.chars() {
        if ch.is_ascii_alphanumeric() || "_.[]{}".contains(ch) {
            out.push(ch);
        } else {
            out.push('_');
        }
    }
    let needs_prefix = out
        .chars()
        .next()
        .map(|c| c.is_ascii_digit() || c == 'e' || c == 'E' || c == '.')
        .unwrap_or(true);
    if needs_prefix {
        out.insert(0, 'v');
    }
    out
}

fn write_linear(out: &mut String, coeffs: &[f64], names: &[String]) {
    let mut first = true;
    for (j, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if first {
            if c < 0.0 {
                let _ = write!(out, "- ");
            }
            first = false;
        } else if c < 0.0 {
            let _ = write!(out, " - ");
        } else {
            let _ = write!(out, " + ");
        }
        let a = c.abs();
        if (a - 1.0).abs() > 0.0 {
            let _ = write!(out, "{a} ");
        }
        let _ = write!(out, "{}", lp_name(&names[j]));
    }
    if first {
        let _ = write!(out, "0 {}", lp_name(&names[0]));
    }
}

/// Renders the program in CPLEX-LP format.
pub fn to_cplex_lp(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Min => "Minimize\n obj: ",
        Sense::Max => "Maximize\n obj: ",
    });
    write_linear(&mut out, &lp.objective, &lp.names);
    out.push_str("\nSubject To\n");
    for (i, c) in lp.constraints.iter().enumerate() {
        let _ = write!(&mut out, " {}: ", lp_name(&lp.row_names[i]));
        write_linear(&mut out, &c.coeffs, &lp.names);
        let rel = match c.rel {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(&mut out, " {rel} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let name = lp_name(&lp.names[j]);
        match (lp.lower[j], lp.upper[j]) {
            (Some(0.0), None) => {} // default
            (None, None) => {
                let _ = writeln!(&mut out, " {name} free");
            }
            (Some(l), None) => {
                let _ = writeln!(&mut out, " {l} <= {name}");
            }
            (None, Some(u)) => {
                let _ = writeln!(&mut out, " -inf <= {name} <= {u}");
            }
            (Some(l), Some(u)) => {
                let _ = writeln!(&mut out, " {l} <= {name} <= {u}");
            }
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_sections() {
        let mut lp = LinearProgram::minimize(vec![1.0, -2.0]);
        lp.set_name(0, "f(1,1)");
        lp.set_free(1);
        lp.add_row("simplex", vec![1.0, 1.0], Relation::Eq, 1.0);
        let text = to_cplex_lp(&lp);
        assert!(text.starts_with("Minimize"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("f_1_1_"));
        assert!(text.contains("= 1"));
        assert!(text.contains("free"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn names_never_start_numeric() {
        assert_eq!(lp_name("2x"), "v2x");
        assert_eq!(lp_name("e12"), "ve12");
        assert_eq!(lp_name("ok"), "ok");
    }
}
