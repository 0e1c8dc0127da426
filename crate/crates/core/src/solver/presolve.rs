//! Bound tightening and block decomposition.
//!
//! Fixed variables are substituted out, singleton rows become bounds (rounded
//! for integer variables), empty rows are checked and dropped, and columns
//! left without rows are set to their cheapest bound. What remains is split
//! into connected components of the variable/row incidence graph; each
//! component is an independent subproblem, so the optimum is the sum of the
//! component optima.

use crate::milp::{MilpProblem, Relation, VarKind};

use super::simplex::LpData;
use super::Status;

#[derive(Debug, Clone)]
pub(crate) struct Block {
    /// Original variable indices, ascending.
    pub vars: Vec<usize>,
    pub lp: LpData,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
    pub integer: Vec<bool>,
}

impl Block {
    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Presolved {
    /// Values for variables removed by presolve; block variables hold NaN.
    pub values: Vec<f64>,
    pub blocks: Vec<Block>,
}

struct Row {
    terms: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub(crate) fn presolve(problem: &MilpProblem, mip: bool, feas_tol: f64, int_tol: f64) -> Result<Presolved, Status> {
    let nv = problem.num_vars();
    let is_int: Vec<bool> = problem.variables().iter().map(|v| mip && v.kind == VarKind::Integer).collect();
    let mut lo: Vec<f64> = problem.variables().iter().map(|v| v.lower).collect();
    let mut up: Vec<f64> = problem.variables().iter().map(|v| v.upper).collect();
    for j in 0..nv {
        if is_int[j] {
            lo[j] = (lo[j] - int_tol).ceil();
            up[j] = (up[j] + int_tol).floor();
        }
        if lo[j] > up[j] {
            return Err(Status::Infeasible);
        }
    }

    let mut rows: Vec<Option<Row>> = problem
        .constraints()
        .iter()
        .map(|c| {
            let mut terms: Vec<(usize, f64)> = Vec::with_capacity(c.terms.len());
            for &(j, a) in &c.terms {
                match terms.iter_mut().find(|(k, _)| *k == j) {
                    Some(t) => t.1 += a,
                    None => terms.push((j, a)),
                }
            }
            terms.retain(|&(_, a)| a != 0.0);
            Some(Row { terms, relation: c.relation, rhs: c.rhs })
        })
        .collect();

    let mut changed = true;
    while changed {
        changed = false;
        for slot in rows.iter_mut() {
            let Some(row) = slot.as_mut() else { continue };
            let before = row.terms.len();
            let mut rhs = row.rhs;
            row.terms.retain(|&(j, a)| {
                if lo[j] == up[j] {
                    rhs -= a * lo[j];
                    false
                } else {
                    true
                }
            });
            row.rhs = rhs;
            if row.terms.len() != before {
                changed = true;
            }
            match row.terms.len() {
                0 => {
                    if row.relation.violation(0.0, row.rhs) > feas_tol * row.rhs.abs().max(1.0) {
                        return Err(Status::Infeasible);
                    }
                    *slot = None;
                    changed = true;
                }
                1 => {
                    let (j, a) = row.terms[0];
                    let v = row.rhs / a;
                    let upper_side = matches!((row.relation, a > 0.0), (Relation::Le, true) | (Relation::Ge, false));
                    let (mut new_lo, mut new_up) = (lo[j], up[j]);
                    if row.relation == Relation::Eq || upper_side {
                        new_up = new_up.min(v);
                    }
                    if row.relation == Relation::Eq || !upper_side {
                        new_lo = new_lo.max(v);
                    }
                    if is_int[j] {
                        new_lo = (new_lo - int_tol).ceil();
                        new_up = (new_up + int_tol).floor();
                    }
                    if new_lo > new_up {
                        if is_int[j] || new_lo - new_up > feas_tol * v.abs().max(1.0) {
                            return Err(Status::Infeasible);
                        }
                        new_up = new_lo;
                    }
                    lo[j] = new_lo;
                    up[j] = new_up;
                    *slot = None;
                    changed = true;
                }
                _ => {}
            }
        }
    }

    let cost = problem.objective_dense();
    let mut in_row = vec![false; nv];
    for row in rows.iter().flatten() {
        for &(j, _) in &row.terms {
            in_row[j] = true;
        }
    }
    let mut values = vec![f64::NAN; nv];
    for j in 0..nv {
        if in_row[j] {
            continue;
        }
        values[j] = if lo[j] == up[j] {
            lo[j]
        } else if cost[j] > 0.0 {
            if lo[j] == f64::NEG_INFINITY {
                return Err(Status::Unbounded);
            }
            lo[j]
        } else if cost[j] < 0.0 {
            if up[j] == f64::INFINITY {
                return Err(Status::Unbounded);
            }
            up[j]
        } else if lo[j].is_finite() {
            lo[j]
        } else if up[j].is_finite() {
            up[j]
        } else {
            0.0
        };
    }

    let mut parent: Vec<usize> = (0..nv).collect();
    for row in rows.iter().flatten() {
        for &(j, _) in &row.terms[1..] {
            let r0 = find(&mut parent, row.terms[0].0);
            let rj = find(&mut parent, j);
            if rj != r0 {
                let (a, b) = (r0.min(rj), r0.max(rj));
                parent[b] = a;
            }
        }
    }
    // block ids in order of each block's smallest variable
    let mut block_of_root = vec![usize::MAX; nv];
    let mut block_vars: Vec<Vec<usize>> = Vec::new();
    let mut local = vec![usize::MAX; nv];
    for j in 0..nv {
        if !in_row[j] {
            continue;
        }
        let r = find(&mut parent, j);
        if block_of_root[r] == usize::MAX {
            block_of_root[r] = block_vars.len();
            block_vars.push(Vec::new());
        }
        let b = block_of_root[r];
        local[j] = block_vars[b].len();
        block_vars[b].push(j);
    }
    let mut block_rows: Vec<Vec<Row>> = (0..block_vars.len()).map(|_| Vec::new()).collect();
    for row in rows.into_iter().flatten() {
        let b = block_of_root[find(&mut parent, row.terms[0].0)];
        let terms = row.terms.iter().map(|&(j, a)| (local[j], a)).collect();
        block_rows[b].push(Row { terms, relation: row.relation, rhs: row.rhs });
    }

    let blocks = block_vars
        .into_iter()
        .zip(block_rows)
        .map(|(vars, rows)| {
            let lp = LpData::new(
                vars.len(),
                vars.iter().map(|&j| cost[j]).collect(),
                rows.iter().map(|r| (r.terms.as_slice(), r.relation, r.rhs)),
            );
            Block {
                lo: vars.iter().map(|&j| lo[j]).collect(),
                up: vars.iter().map(|&j| up[j]).collect(),
                integer: vars.iter().map(|&j| is_int[j]).collect(),
                vars,
                lp,
            }
        })
        .collect();
    Ok(Presolved { values, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_rows_become_rounded_bounds() {
        let mut p = MilpProblem::new("t");
        let x = p.add_variable("x", VarKind::Integer, 0.0, 10.0).unwrap();
        let y = p.add_variable("y", VarKind::Continuous, 0.0, 10.0).unwrap();
        p.add_constraint("a", vec![(x, 4.0)], Relation::Ge, 9.0).unwrap();
        p.add_constraint("b", vec![(x, 1.0), (y, 1.0)], Relation::Ge, 1.0).unwrap();
        p.set_objective(vec![(x, 1.0), (y, 1.0)]).unwrap();
        let pre = presolve(&p, true, 1e-9, 1e-9).unwrap();
        assert_eq!(pre.blocks.len(), 1);
        assert_eq!(pre.blocks[0].lo, vec![3.0, 0.0]);
        assert_eq!(pre.blocks[0].lp.m, 1);
    }

    #[test]
    fn splits_independent_components() {
        let mut p = MilpProblem::new("t");
        let v: Vec<usize> = (0..4).map(|i| p.add_variable(format!("x{i}"), VarKind::Continuous, 0.0, 5.0).unwrap()).collect();
        p.add_constraint("a", vec![(v[0], 1.0), (v[2], 1.0)], Relation::Ge, 1.0).unwrap();
        p.add_constraint("b", vec![(v[1], 1.0), (v[3], 1.0)], Relation::Ge, 1.0).unwrap();
        let pre = presolve(&p, false, 1e-9, 1e-9).unwrap();
        let vars: Vec<_> = pre.blocks.iter().map(|b| b.vars.clone()).collect();
        assert_eq!(vars, vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn chained_rows_form_one_block() {
        // row order makes the first term's root go stale mid-row
        let mut p = MilpProblem::new("t");
        let v: Vec<usize> = (0..5).map(|i| p.add_variable(format!("x{i}"), VarKind::Continuous, 0.0, 5.0).unwrap()).collect();
        p.add_constraint("a", vec![(v[3], 1.0), (v[4], 1.0)], Relation::Ge, 1.0).unwrap();
        p.add_constraint("b", vec![(v[4], 1.0), (v[1], 1.0), (v[0], 1.0)], Relation::Ge, 1.0).unwrap();
        p.add_constraint("c", vec![(v[2], 1.0), (v[3], 1.0)], Relation::Ge, 1.0).unwrap();
        let pre = presolve(&p, false, 1e-9, 1e-9).unwrap();
        assert_eq!(pre.blocks.len(), 1);
    }

    #[test]
    fn fixed_substitution_exposes_infeasibility() {
        let mut p = MilpProblem::new("t");
        let x = p.add_variable("x", VarKind::Continuous, 2.0, 2.0).unwrap();
        let y = p.add_variable("y", VarKind::Continuous, 0.0, 1.0).unwrap();
        p.add_constraint("a", vec![(x, 1.0), (y, 1.0)], Relation::Ge, 4.0).unwrap();
        assert_eq!(presolve(&p, false, 1e-9, 1e-9).unwrap_err(), Status::Infeasible);
    }

    #[test]
    fn unconstrained_negative_cost_is_unbounded() {
        let mut p = MilpProblem::new("t");
        let x = p.add_variable("x", VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        p.set_objective(vec![(x, -1.0)]).unwrap();
        assert_eq!(presolve(&p, false, 1e-9, 1e-9).unwrap_err(), Status::Unbounded);
    }
}
