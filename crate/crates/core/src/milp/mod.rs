//! Generic sparse MILP representation, the VoD delivery formulation built on
//! top of it, and a CPLEX-LP text reader/writer.

mod build;
pub mod lp_format;

use std::collections::HashMap;

pub use build::{
    build_problem, fog_exclusion_pue_threshold, Breakdown, CellBreakdown, Coefficients, DeliveryCosts, DeliveryMode,
    Evaluation, FogcacheModel, Layout, ModelInputs, ScenarioFlags,
};
pub use lp_format::{export_lp, parse_lp, parse_lp_str, write_lp_string};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }

    /// Amount by which `lhs rel rhs` is violated (0 when satisfied).
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Relation::Le => (lhs - rhs).max(0.0),
            Relation::Ge => (rhs - lhs).max(0.0),
            Relation::Eq => (lhs - rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max)
    }
}

/// Minimisation problem over named variables with sparse linear rows.
#[derive(Debug, Clone, Default)]
pub struct MilpProblem {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(usize, f64)>,
    var_index: HashMap<String, usize>,
    row_index: HashMap<String, usize>,
}

impl MilpProblem {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Result<usize> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::Model(format!("variable {name}: invalid bounds [{lower}, {upper}]")));
        }
        if self.var_index.contains_key(&name) {
            return Err(Error::Model(format!("duplicate variable name {name}")));
        }
        let idx = self.variables.len();
        self.var_index.insert(name.clone(), idx);
        self.variables.push(Variable { name, kind, lower, upper });
        Ok(idx)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Result<usize> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(Error::Model(format!("constraint {name}: non-finite rhs {rhs}")));
        }
        self.check_terms(&name, &terms)?;
        if self.row_index.contains_key(&name) {
            return Err(Error::Model(format!("duplicate constraint name {name}")));
        }
        let idx = self.constraints.len();
        self.row_index.insert(name.clone(), idx);
        self.constraints.push(Constraint { name, terms, relation, rhs });
        Ok(idx)
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, f64)>) -> Result<()> {
        self.check_terms("objective", &terms)?;
        self.objective = terms;
        Ok(())
    }

    fn check_terms(&self, owner: &str, terms: &[(usize, f64)]) -> Result<()> {
        for &(j, a) in terms {
            if j >= self.variables.len() {
                return Err(Error::Model(format!("{owner}: undeclared variable index {j}")));
            }
            if !a.is_finite() {
                return Err(Error::Model(format!("{owner}: non-finite coefficient {a} on {}", self.variables[j].name)));
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integer(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Integer).count()
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn row(&self, name: &str) -> Option<usize> {
        self.row_index.get(name).copied()
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.variables[var].lower = lower;
        self.variables[var].upper = upper;
    }

    /// Dense objective coefficient vector (duplicates summed).
    pub fn objective_dense(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.variables.len()];
        for &(j, a) in &self.objective {
            c[j] += a;
        }
        c
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Copy with every variable continuous.
    pub fn relaxed(&self) -> Self {
        let mut p = self.clone();
        for v in &mut p.variables {
            v.kind = VarKind::Continuous;
        }
        p
    }

    /// Re-checks every structural invariant. Problems built through the
    /// public API always pass; this guards hand-edited or parsed input.
    pub fn lint(&self) -> Result<()> {
        let mut names = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if names.insert(v.name.as_str(), i).is_some() {
                return Err(Error::Model(format!("duplicate variable name {}", v.name)));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::Model(format!("variable {}: invalid bounds", v.name)));
            }
        }
        self.check_terms("objective", &self.objective)?;
        for c in &self.constraints {
            self.check_terms(&c.name, &c.terms)?;
            if !c.rhs.is_finite() {
                return Err(Error::Model(format!("constraint {}: non-finite rhs", c.name)));
            }
        }
        Ok(())
    }

    /// Equality up to variable ordering: same named variables with the same
    /// kinds and bounds, same rows in the same order with the same
    /// (name, coefficient) term sequences, same objective terms.
    pub fn structurally_eq(&self, other: &Self) -> bool {
        if self.variables.len() != other.variables.len() || self.constraints.len() != other.constraints.len() {
            return false;
        }
        for v in &self.variables {
            match other.var(&v.name) {
                Some(j) if other.variables[j] == *v => {}
                _ => return false,
            }
        }
        let named = |p: &Self, terms: &[(usize, f64)]| -> Vec<(String, u64)> {
            terms.iter().map(|&(j, a)| (p.variables[j].name.clone(), (a + 0.0).to_bits())).collect()
        };
        if named(self, &self.objective) != named(other, &other.objective) {
            return false;
        }
        self.constraints.iter().zip(&other.constraints).all(|(a, b)| {
            a.name == b.name
                && a.relation == b.relation
                && (a.rhs + 0.0).to_bits() == (b.rhs + 0.0).to_bits()
                && named(self, &a.terms) == named(other, &b.terms)
        })
    }

    /// Largest bound or row violation of `values`, with rows scaled by their
    /// largest absolute coefficient.
    pub fn max_scaled_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for c in &self.constraints {
            let scale = c.max_abs_coef().max(1e-12);
            worst = worst.max(c.relation.violation(c.lhs(values), c.rhs) / scale);
        }
        worst
    }
}
