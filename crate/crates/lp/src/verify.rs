//! Independent re-substitution of a candidate point into a model.

use crate::model::{LpModel, VarKind};

/// Absolute tolerance for bound, row and integrality checks.
pub const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Bound { var: String, value: f64, lower: f64, upper: f64 },
    Row { row: String, activity: f64, rhs: f64 },
    Integrality { var: String, value: f64 },
    Length { expected: usize, got: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Bound { var, value, lower, upper } => {
                write!(f, "{var} = {value} outside [{lower}, {upper}]")
            }
            Violation::Row { row, activity, rhs } => {
                write!(f, "row {row}: activity {activity} vs rhs {rhs}")
            }
            Violation::Integrality { var, value } => write!(f, "{var} = {value} is not integral"),
            Violation::Length { expected, got } => {
                write!(f, "expected {expected} values, got {got}")
            }
        }
    }
}

/// Returns every violated bound, row and integrality requirement of `values`
/// in `model` at absolute tolerance `tol`.
pub fn violations(model: &LpModel, values: &[f64], tol: f64) -> Vec<Violation> {
    if values.len() != model.num_vars() {
        return vec![Violation::Length {
            expected: model.num_vars(),
            got: values.len(),
        }];
    }
    let mut out = Vec::new();
    for (v, &x) in model.vars().iter().zip(values) {
        if !(x >= v.lower - tol && x <= v.upper + tol) {
            out.push(Violation::Bound {
                var: v.name.clone(),
                value: x,
                lower: v.lower,
                upper: v.upper,
            });
        }
        if v.kind == VarKind::Binary && (x - x.round()).abs() > tol {
            out.push(Violation::Integrality {
                var: v.name.clone(),
                value: x,
            });
        }
    }
    for row in model.constraints() {
        let act = row.activity(values);
        let (lo, hi) = row.bounds();
        if !(act >= lo - tol && act <= hi + tol) {
            out.push(Violation::Row {
                row: row.name.clone(),
                activity: act,
                rhs: row.rhs,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cmp, LpModel};

    #[test]
    fn reports_each_kind() {
        let mut m = LpModel::default();
        let x = m.add_continuous("x", 0.0, 1.0, 0.0);
        let b = m.add_binary("b", 0.0);
        m.add_constraint("sum", vec![(x, 1.0), (b, 1.0)], Cmp::Le, 1.0);
        let v = violations(&m, &[1.5, 0.5], CHECK_TOL);
        assert_eq!(v.len(), 3);
        assert!(violations(&m, &[0.5, 0.0], CHECK_TOL).is_empty());
    }
}
