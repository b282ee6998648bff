//! Gomory fractional cuts read off the simplex tableau.
//!
//! A tableau row `x_b + sum(a_j * x'_j) = b` over non-negative integer
//! shifted variables yields `sum(frac(a_j) * x'_j) >= frac(b)`. Shifted
//! columns are integral at integral points by construction; shifted row
//! logicals are integral only for rows with integer data, so tableau rows
//! that involve any other row are skipped. The cut is then written back over
//! the family columns.

use crate::ip_model::{IpModel, LinearConstraint, RowOrigin, Sense};
use crate::lp::{LpRelaxation, LpSolution, LpVar, TableauRow};
use crate::separation::VIOLATION_TOL;

/// Default number of cuts per round.
pub const DEFAULT_MAX_GOMORY_CUTS: usize = 10;

/// A basic column is a cut source when its distance to the nearest
/// integer exceeds this.
const FRACTIONALITY_TOL: f64 = 1e-6;
const COEF_DROP_TOL: f64 = 1e-9;
const MAX_DYNAMISM: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct GomoryCut {
    pub row: LinearConstraint,
    /// Column whose tableau row produced the cut.
    pub source_basic: usize,
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// `sum(coef * x') >= rhs` over the row's shifted variables. Near-zero
/// coefficients are dropped and `rhs` lowered by their largest possible
/// contribution, given per-variable upper bounds of the shifted values.
pub fn fractional_cut(row: &TableauRow, shifted_bound: impl Fn(LpVar) -> f64) -> (Vec<(LpVar, f64)>, f64) {
    let mut rhs = frac(row.rhs);
    let mut terms = Vec::with_capacity(row.terms.len());
    for t in &row.terms {
        let f = frac(t.coef);
        if f < COEF_DROP_TOL {
            rhs -= f * shifted_bound(t.var);
        } else {
            terms.push((t.var, f));
        }
    }
    (terms, rhs)
}

fn row_is_integral(model: &IpModel, i: usize) -> bool {
    model.rows()[i].is_integral()
}

/// Upper bound on `sign * (a.x - bound)` over the unit box.
fn row_shift_range(model: &IpModel, i: usize) -> f64 {
    let row = &model.rows()[i];
    row.terms().iter().map(|&(_, a)| a.abs()).sum::<f64>() + row.rhs.abs()
}

/// Fractional cuts for up to `max_cuts` fractional basic columns, most
/// fractional first. `lp` must hold the basis that produced `solution`.
pub fn gomory_cuts(lp: &mut LpRelaxation, solution: &LpSolution, model: &IpModel, max_cuts: usize) -> Vec<GomoryCut> {
    if !solution.is_optimal() || max_cuts == 0 {
        return Vec::new();
    }
    let x = &solution.values;
    let mut sources: Vec<(usize, f64)> = (0..x.len())
        .filter(|&j| solution.column_status[j] == crate::lp::BasisStatus::Basic)
        .map(|j| (j, (x[j] - x[j].round()).abs()))
        .filter(|&(_, f)| f > FRACTIONALITY_TOL)
        .collect();
    sources.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut cuts = Vec::new();
    for (j, _) in sources {
        if cuts.len() >= max_cuts {
            break;
        }
        let Ok(tableau) = lp.tableau_row(j) else {
            continue;
        };
        let usable = tableau.terms.iter().all(|t| match t.var {
            LpVar::Column(_) => true,
            LpVar::Row(i) => row_is_integral(model, i),
        });
        if !usable {
            continue;
        }
        if let Some(row) = structural_cut(&tableau, model, x) {
            cuts.push(GomoryCut { row, source_basic: j });
        }
    }
    cuts
}

/// Substitutes shifted variables by their definitions over the columns,
/// cleans tiny coefficients and checks the result still separates `x`.
fn structural_cut(tableau: &TableauRow, model: &IpModel, x: &[f64]) -> Option<LinearConstraint> {
    let (terms, mut rhs) = fractional_cut(tableau, |v| match v {
        LpVar::Column(_) => 1.0,
        LpVar::Row(i) => row_shift_range(model, i),
    });
    let signs: std::collections::HashMap<LpVar, (f64, f64)> =
        tableau.terms.iter().map(|t| (t.var, (t.sign, t.bound))).collect();
    let mut coef = vec![0.0; model.n_columns()];
    for (var, f) in terms {
        let (sign, bound) = signs[&var];
        match var {
            LpVar::Column(j) => coef[j] += f * sign,
            LpVar::Row(i) => {
                for &(j, a) in model.rows()[i].terms() {
                    coef[j] += f * sign * a;
                }
            }
        }
        rhs += f * sign * bound;
    }
    let mut kept = Vec::new();
    for (j, &g) in coef.iter().enumerate() {
        if g.abs() < COEF_DROP_TOL {
            // x_j <= 1, so dropping a positive term costs at most g.
            if g > 0.0 {
                rhs -= g;
            }
        } else {
            kept.push((j, g));
        }
    }
    if kept.is_empty() {
        return None;
    }
    let (lo, hi) = kept
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, g)| (lo.min(g.abs()), hi.max(g.abs())));
    if hi / lo > MAX_DYNAMISM {
        return None;
    }
    rhs -= 1e-9 * (1.0 + rhs.abs());
    let row = LinearConstraint::new(kept, Sense::Ge, rhs, RowOrigin::Gomory);
    (row.violation(x) > VIOLATION_TOL).then_some(row)
}
