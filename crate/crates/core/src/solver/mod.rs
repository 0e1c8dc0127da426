//! Exact LP/MILP solving at desk scale.
//!
//! Pipeline: presolve (fixed-variable substitution, singleton rows to
//! bounds), split into independent blocks, then per block a bounded-variable
//! revised simplex and, for integer blocks, best-first branch-and-bound.
//! Blocks are solved in parallel and reduced in block order, so results do
//! not depend on the thread count.

mod bnb;
mod cuts;
mod presolve;
mod simplex;

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::milp::{MilpProblem, VarKind};

/// Largest integer domain the enumeration oracle accepts per variable.
pub const ORACLE_MAX_VALUES: usize = 8;
/// Default cap on the number of integer variables for the oracle.
pub const ORACLE_DEFAULT_MAX_INTEGER_VARS: usize = 16;
/// Hard cap on enumerated combinations, so a request that passes the other
/// checks still cannot run for hours.
pub const ORACLE_MAX_COMBINATIONS: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration-limit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branching {
    #[default]
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub int_tol: f64,
    /// Relative gap `(incumbent − bound) / max(1, |incumbent|)`.
    pub gap_limit: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    pub branching: Branching,
    /// Kept for interface stability; every solve is already deterministic
    /// because parallel work is reduced in a fixed order.
    pub deterministic_order: bool,
    /// Simplex pivots allowed per LP.
    pub lp_iteration_limit: usize,
    /// Try rounding the root LP solution to seed the incumbent.
    pub rounding_heuristic: bool,
    /// Strengthen the root relaxation with mixed-integer rounding cuts.
    pub cuts: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            int_tol: 1e-6,
            gap_limit: 1e-6,
            node_limit: None,
            time_limit: None,
            branching: Branching::MostFractional,
            deterministic_order: true,
            lp_iteration_limit: 200_000,
            rounding_heuristic: true,
            cuts: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("feas_tol", self.feas_tol), ("int_tol", self.int_tol), ("gap_limit", self.gap_limit)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1), got {v}")));
            }
        }
        if self.node_limit == Some(0) || self.time_limit == Some(Duration::ZERO) || self.lp_iteration_limit == 0 {
            return Err(Error::Config("solver limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub nodes: usize,
    pub lp_iterations: usize,
    pub blocks: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// NaN when no assignment is available.
    pub objective: f64,
    /// One value per problem variable; empty when no assignment is available.
    pub values: Vec<f64>,
    pub gap: f64,
    pub stats: SolveStats,
}

impl Solution {
    fn without_values(status: Status, stats: SolveStats) -> Self {
        Self { status, objective: f64::NAN, values: Vec::new(), gap: f64::INFINITY, stats }
    }

    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, problem: &MilpProblem, name: &str) -> Option<f64> {
        problem.var(name).and_then(|j| self.values.get(j).copied())
    }

    pub fn summary_line(&self) -> String {
        format!("# status={} objective={} gap={} nodes={}", self.status, self.objective, self.gap, self.stats.nodes)
    }

    /// `variable,value` rows in problem order followed by the summary line.
    pub fn to_csv(&self, problem: &MilpProblem) -> String {
        let mut out = String::from("variable,value\n");
        for (v, x) in problem.variables().iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", v.name, x));
        }
        out.push_str(&self.summary_line());
        out.push('\n');
        out
    }

    pub fn write_csv(&self, problem: &MilpProblem, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv(problem).as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Solves the continuous relaxation (integrality ignored).
pub fn solve_lp(problem: &MilpProblem, opts: &SolverOptions) -> Solution {
    solve(problem, opts, false)
}

pub fn solve_mip(problem: &MilpProblem, opts: &SolverOptions) -> Solution {
    solve(problem, opts, true)
}

fn solve(problem: &MilpProblem, opts: &SolverOptions, mip: bool) -> Solution {
    let start = Instant::now();
    let deadline = opts.time_limit.map(|d| start + d);
    let pre = match presolve::presolve(problem, mip, opts.feas_tol, opts.int_tol) {
        Ok(p) => p,
        Err(status) => return Solution::without_values(status, SolveStats { wall_time: start.elapsed(), ..Default::default() }),
    };
    let int_blocks = pre.blocks.iter().filter(|b| mip && b.has_integers()).count().max(1);
    let share = 1.0 / int_blocks as f64;
    let outcomes: Vec<_> = pre.blocks.par_iter().map(|b| bnb::solve_block(b, opts, deadline, mip, share)).collect();

    let mut stats = SolveStats { blocks: pre.blocks.len(), ..Default::default() };
    for o in &outcomes {
        stats.nodes += o.nodes;
        stats.lp_iterations += o.iterations;
    }
    let worst = [Status::Infeasible, Status::Unbounded, Status::IterationLimit]
        .into_iter()
        .find(|s| outcomes.iter().any(|o| o.status == *s));
    let complete = outcomes.iter().all(|o| !o.x.is_empty());
    if let Some(status) = worst {
        if status != Status::IterationLimit || !complete {
            stats.wall_time = start.elapsed();
            return Solution::without_values(status, stats);
        }
    }

    let mut values = pre.values;
    for (block, o) in pre.blocks.iter().zip(&outcomes) {
        for (&j, &x) in block.vars.iter().zip(&o.x) {
            values[j] = x;
        }
    }
    for (v, x) in problem.variables().iter().zip(values.iter_mut()) {
        if mip && v.kind == VarKind::Integer {
            *x = x.round();
        }
    }
    let objective = problem.objective_value(&values);
    let slack: f64 = outcomes.iter().map(|o| (o.objective - o.bound).max(0.0)).sum::<f64>() + 0.0;
    stats.wall_time = start.elapsed();
    Solution { status: worst.unwrap_or(Status::Optimal), objective, values, gap: slack / objective.abs().max(1.0), stats }
}

/// Exhaustive reference solver: fixes every integer combination and solves
/// the remaining LP. Refuses instances it cannot enumerate.
pub fn enumerate_oracle(problem: &MilpProblem, max_integer_vars: usize) -> Result<Solution> {
    let start = Instant::now();
    let ints: Vec<usize> = (0..problem.num_vars()).filter(|&j| problem.variables()[j].kind == VarKind::Integer).collect();
    if ints.len() > max_integer_vars {
        return Err(Error::OracleRefused(format!("{} integer variables exceed the limit of {max_integer_vars}", ints.len())));
    }
    let mut domains = Vec::with_capacity(ints.len());
    let mut combos: u64 = 1;
    for &j in &ints {
        let v = &problem.variables()[j];
        if !v.lower.is_finite() || !v.upper.is_finite() {
            return Err(Error::OracleRefused(format!("integer variable {} has an infinite bound", v.name)));
        }
        let (lo, hi) = (v.lower.ceil(), v.upper.floor());
        let count = if hi >= lo { (hi - lo) as usize + 1 } else { 0 };
        if count > ORACLE_MAX_VALUES {
            return Err(Error::OracleRefused(format!("integer variable {} has {count} values (max {ORACLE_MAX_VALUES})", v.name)));
        }
        combos = combos.saturating_mul(count as u64);
        domains.push((lo, count));
    }
    if combos > ORACLE_MAX_COMBINATIONS {
        return Err(Error::OracleRefused(format!("{combos} integer combinations exceed {ORACLE_MAX_COMBINATIONS}")));
    }

    let opts = SolverOptions::default();
    let mut fixed = problem.relaxed();
    let mut best: Option<Solution> = None;
    let mut stats = SolveStats::default();
    let mut unbounded = false;
    for mut k in 0..combos {
        for (&j, &(lo, count)) in ints.iter().zip(&domains) {
            let v = lo + (k % count as u64) as f64;
            k /= count as u64;
            fixed.set_bounds(j, v, v);
        }
        let sol = solve_lp(&fixed, &opts);
        stats.nodes += 1;
        stats.lp_iterations += sol.stats.lp_iterations;
        match sol.status {
            Status::Optimal => {
                if best.as_ref().map_or(true, |b| sol.objective < b.objective) {
                    best = Some(sol);
                }
            }
            Status::Unbounded => unbounded = true,
            _ => {}
        }
    }
    stats.wall_time = start.elapsed();
    Ok(match best {
        _ if unbounded => Solution::without_values(Status::Unbounded, stats),
        Some(mut s) => {
            s.gap = 0.0;
            s.stats = stats;
            s
        }
        None => Solution::without_values(Status::Infeasible, stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Relation;

    #[test]
    fn single_bound_examples() {
        let mut p = MilpProblem::new("a");
        let x = p.add_variable("x", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        p.add_constraint("c", vec![(x, 1.0)], Relation::Ge, 3.0).unwrap();
        p.set_objective(vec![(x, 1.0)]).unwrap();
        let s = solve_lp(&p, &SolverOptions::default());
        assert_eq!((s.status, s.objective), (Status::Optimal, 3.0));

        let mut p = MilpProblem::new("b");
        let x = p.add_variable("x", VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        p.add_constraint("c", vec![(x, 1.0)], Relation::Le, 5.0).unwrap();
        p.set_objective(vec![(x, -1.0)]).unwrap();
        let s = solve_lp(&p, &SolverOptions::default());
        assert_eq!(s.values, vec![5.0]);
    }

    #[test]
    fn oracle_refusals() {
        let mut p = MilpProblem::new("r");
        p.add_variable("wide", VarKind::Integer, 0.0, 8.0).unwrap();
        assert!(matches!(enumerate_oracle(&p, 16), Err(Error::OracleRefused(_))));
        let mut p = MilpProblem::new("r");
        p.add_variable("open", VarKind::Integer, 0.0, f64::INFINITY).unwrap();
        assert!(enumerate_oracle(&p, 16).is_err());
        let mut p = MilpProblem::new("r");
        for i in 0..3 {
            p.add_variable(format!("b{i}"), VarKind::Integer, 0.0, 1.0).unwrap();
        }
        assert!(enumerate_oracle(&p, 2).is_err());
        assert!(enumerate_oracle(&p, 3).is_ok());
    }

    #[test]
    fn csv_has_header_rows_and_summary() {
        let mut p = MilpProblem::new("c");
        let x = p.add_variable("x", VarKind::Integer, 0.0, 4.0).unwrap();
        p.add_constraint("c", vec![(x, 2.0)], Relation::Ge, 3.0).unwrap();
        p.set_objective(vec![(x, 1.0)]).unwrap();
        let s = solve_mip(&p, &SolverOptions::default());
        assert_eq!(s.to_csv(&p), "variable,value\nx,2\n# status=optimal objective=2 gap=0 nodes=0\n");
    }
}
