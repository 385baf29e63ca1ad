use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarType {
    Continuous,
    Binary,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub vtype: VarType,
}

impl Variable {
    pub fn is_integral(&self) -> bool {
        self.vtype != VarType::Continuous
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(name: impl Into<String>, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self {
            name: name.into(),
            terms,
            sense,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// How far `x` is from satisfying the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjSense {
    Maximize,
    Minimize,
}

/// A linear mixed-integer program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub name: String,
    vars: Vec<Variable>,
    cons: Vec<Constraint>,
    objective: Vec<(usize, f64)>,
    obj_constant: f64,
    sense: ObjSense,
}

impl Default for Model {
    fn default() -> Self {
        Self::new("model")
    }
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            vars: Vec::new(),
            cons: Vec::new(),
            objective: Vec::new(),
            obj_constant: 0.0,
            sense: ObjSense::Maximize,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, vtype: VarType) -> Result<usize, ModelError> {
        let name = name.into();
        let (lower, upper) = match vtype {
            VarType::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvalidBounds { name, lower, upper });
        }
        self.vars.push(Variable {
            name,
            lower,
            upper,
            vtype,
        });
        Ok(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, 0.0, 1.0, VarType::Binary).expect("binary bounds are valid")
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<usize, ModelError> {
        self.add_var(name, lower, upper, VarType::Continuous)
    }

    pub fn add_constraint(&mut self, con: Constraint) -> Result<usize, ModelError> {
        self.check_terms(&con.terms)?;
        self.cons.push(con);
        Ok(self.cons.len() - 1)
    }

    /// Shorthand for [`Model::add_constraint`].
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ModelError> {
        self.add_constraint(Constraint::new(name, terms, sense, rhs))
    }

    fn check_terms(&self, terms: &[(usize, f64)]) -> Result<(), ModelError> {
        match terms.iter().find(|(j, _)| *j >= self.vars.len()) {
            Some(&(j, _)) => Err(ModelError::UnknownVariable(j)),
            None => Ok(()),
        }
    }

    pub fn set_objective(&mut self, sense: ObjSense, terms: Vec<(usize, f64)>) -> Result<(), ModelError> {
        self.check_terms(&terms)?;
        self.sense = sense;
        self.objective = terms;
        Ok(())
    }

    pub fn set_objective_constant(&mut self, c: f64) {
        self.obj_constant = c;
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> Result<(), ModelError> {
        let v = self.vars.get_mut(j).ok_or(ModelError::UnknownVariable(j))?;
        if lower > upper {
            return Err(ModelError::InvalidBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn set_vtype(&mut self, j: usize, vtype: VarType) {
        self.vars[j].vtype = vtype;
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.cons.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, j: usize) -> &Variable {
        &self.vars[j]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.cons
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.obj_constant
    }

    pub fn sense(&self) -> ObjSense {
        self.sense
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_constant + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// Largest bound or row violation of `x`, ignoring integrality.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xj)| (v.lower - xj).max(xj - v.upper).max(0.0))
            .fold(0.0, f64::max);
        self.cons.iter().map(|c| c.violation(x)).fold(bounds, f64::max)
    }

    /// Whether `x` satisfies bounds, rows (within `tol`) and integrality.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.vars.len()
            && self.max_violation(x) <= tol
            && self
                .vars
                .iter()
                .zip(x)
                .all(|(v, &xj)| !v.is_integral() || (xj - xj.round()).abs() <= tol)
    }

    pub fn find_var(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }
}
