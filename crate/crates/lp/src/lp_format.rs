//! Writer for the CPLEX LP text format, for cross-checking models with
//! external solvers.

use std::fmt::Write;

use crate::model::{LpModel, Sense, VarKind};

fn sanitize(name: &str, fallback: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    match cleaned.chars().next() {
        None => fallback.to_string(),
        Some(c) if c.is_ascii_digit() || c == '.' => format!("_{cleaned}"),
        Some(_) => cleaned,
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    let mut first = true;
    let mut width = 0;
    for (name, coef) in terms {
        if coef == 0.0 {
            continue;
        }
        let piece = match (coef < 0.0, first) {
            (true, _) => format!(" - {} {name}", -coef),
            (false, true) => format!(" {coef} {name}"),
            (false, false) => format!(" + {coef} {name}"),
        };
        width += piece.len();
        if width > 200 {
            out.push_str("\n   ");
            width = piece.len();
        }
        out.push_str(&piece);
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// Renders `model` in LP format. Variable and row names are sanitised and
/// made unique by suffixing the index where needed.
pub fn to_lp_string(model: &LpModel) -> String {
    let var_names: Vec<String> = model
        .vars()
        .iter()
        .enumerate()
        .map(|(j, v)| format!("{}_{j}", sanitize(&v.name, "x")))
        .collect();
    let mut out = String::new();
    out.push_str(match model.sense {
        Sense::Minimize => "Minimize\n obj:",
        Sense::Maximize => "Maximize\n obj:",
    });
    write_terms(
        &mut out,
        model
            .vars()
            .iter()
            .enumerate()
            .map(|(j, v)| (var_names[j].clone(), v.objective)),
    );
    out.push_str("\nSubject To\n");
    for (i, row) in model.constraints().iter().enumerate() {
        let _ = write!(out, " {}_{i}:", sanitize(&row.name, "c"));
        write_terms(
            &mut out,
            row.terms.iter().map(|&(v, a)| (var_names[v.0].clone(), a)),
        );
        let _ = writeln!(out, " {} {}", row.cmp.symbol(), row.rhs);
    }
    out.push_str("Bounds\n");
    for (j, v) in model.vars().iter().enumerate() {
        let name = &var_names[j];
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", v.lower, v.upper);
            }
            (true, false) => {
                if v.lower != 0.0 {
                    let _ = writeln!(out, " {name} >= {}", v.lower);
                }
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", v.upper);
            }
        }
    }
    let binaries: Vec<&String> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| &var_names[j])
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for name in binaries {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}
