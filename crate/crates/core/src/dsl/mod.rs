//! Problem files: parametric inequality systems with a disjunctive
//! existence goal.
//!
//! ```text
//! param r >= 3;
//! param k >= 1;
//! var d, g;
//! system {
//!   (r+1)*d - r*g - r*(r+1) >= 0;
//! }
//! goal exists (n) { n >= 1; n <= r; }
//!   or exists (m) { m = 0; }
//! majorant { r*k - 1 >= 0; }
//! ```
//!
//! Every inequality must be affine in the decision variables; coefficients
//! are polynomials in the parameters and `B = binom(r+k,k)`.

mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::exact::{MultiPoly, BINOM, PARAM_K, PARAM_R};

pub use parser::{parse, parse_polynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: duplicate declaration of `{name}`")]
    Duplicate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: unknown symbol `{name}`")]
    UnknownSymbol { line: usize, col: usize, name: String },
    #[error("{line}:{col}: inequality is not affine in the decision variables: {detail}")]
    Nonlinear { line: usize, col: usize, detail: String },
    #[error("not affine in the decision variables: {0}")]
    NonlinearConstraint(String),
    #[error("the base system is empty")]
    EmptySystem,
    #[error("symbol `{0}` is not declared in this scope")]
    Undeclared(String),
    #[error("B = binom(r+k,k) is used but parameters `r` and `k` are not both declared")]
    BinomWithoutParams,
    #[error("majorant `{0}` must be free of decision variables and of B")]
    BadMajorant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
            Sense::Eq => "=",
        }
    }
}

/// `lhs (>=|<=|=) 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Inequality {
    pub lhs: MultiPoly,
    pub sense: Sense,
}

impl Inequality {
    pub fn new(lhs: MultiPoly, sense: Sense) -> Self {
        Inequality { lhs, sense }
    }

    pub fn ge(lhs: MultiPoly) -> Self {
        Inequality::new(lhs, Sense::Ge)
    }

    /// The equivalent list of `p >= 0` constraints.
    pub fn normalized(&self) -> Vec<MultiPoly> {
        match self.sense {
            Sense::Ge => vec![self.lhs.clone()],
            Sense::Le => vec![-&self.lhs],
            Sense::Eq => vec![self.lhs.clone(), -&self.lhs],
        }
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.lhs, self.sense.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub lower: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistsBlock {
    pub new_vars: Vec<String>,
    pub system: Vec<Inequality>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProblemSpec {
    pub params: Vec<Param>,
    pub vars: Vec<String>,
    pub base_system: Vec<Inequality>,
    /// Disjunction of existence blocks; empty means the base variables
    /// themselves are existentially quantified.
    pub goal: Vec<ExistsBlock>,
    /// B-free inequalities asserted to imply the B-containing constraints
    /// beyond the k-specialization range.
    pub majorants: Vec<Inequality>,
}

impl ProblemSpec {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_names(&self) -> BTreeSet<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }
}

fn write_names(f: &mut fmt::Formatter<'_>, names: &[String]) -> fmt::Result {
    write!(f, "{}", names.join(", "))
}

fn write_block(f: &mut fmt::Formatter<'_>, system: &[Inequality], indent: &str) -> fmt::Result {
    writeln!(f, "{{")?;
    for ineq in system {
        writeln!(f, "{indent}  {ineq};")?;
    }
    write!(f, "{indent}}}")
}

impl fmt::Display for ProblemSpec {
    /// Canonical source form; `parse` accepts it back unchanged.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.params {
            writeln!(f, "param {} >= {};", p.name, p.lower)?;
        }
        if !self.vars.is_empty() {
            write!(f, "var ")?;
            write_names(f, &self.vars)?;
            writeln!(f, ";")?;
        }
        write!(f, "system ")?;
        write_block(f, &self.base_system, "")?;
        writeln!(f)?;
        for (i, block) in self.goal.iter().enumerate() {
            if i == 0 {
                write!(f, "goal exists (")?;
            } else {
                write!(f, "  or exists (")?;
            }
            write_names(f, &block.new_vars)?;
            write!(f, ") ")?;
            write_block(f, &block.system, "  ")?;
            writeln!(f)?;
        }
        if !self.majorants.is_empty() {
            write!(f, "majorant ")?;
            write_block(f, &self.majorants, "")?;
            writeln!(f)?;
        }
        Ok(())
    }
}

/// `sum coeffs[v] * v + constant`, coefficients over parameters and `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    pub coeffs: BTreeMap<String, MultiPoly>,
    pub constant: MultiPoly,
}

impl AffineForm {
    /// Splits `p` with respect to `vars`; fails if `p` is not affine in them.
    pub fn decompose(p: &MultiPoly, vars: &[String]) -> Result<AffineForm, DslError> {
        let var_set: BTreeSet<&str> = vars.iter().map(String::as_str).collect();
        for (m, _) in p.terms() {
            let in_vars: Vec<(&str, u32)> =
                m.powers().filter(|(s, _)| var_set.contains(s)).collect();
            let degree: u32 = in_vars.iter().map(|(_, e)| e).sum();
            if degree > 1 {
                return Err(DslError::NonlinearConstraint(format!(
                    "monomial `{m}` in `{p}`"
                )));
            }
        }
        let mut coeffs = BTreeMap::new();
        let mut constant = p.clone();
        for v in vars {
            let c = p.coeff_of(v, 1);
            if !c.is_zero() {
                constant = constant.coeff_of(v, 0);
                coeffs.insert(v.clone(), c);
            }
        }
        Ok(AffineForm { coeffs, constant })
    }

    pub fn is_parameter_only(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedConstraint {
    /// The constraint reads `poly >= 0`.
    pub poly: MultiPoly,
    pub form: AffineForm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedBlock {
    pub vars: Vec<String>,
    pub constraints: Vec<CheckedConstraint>,
}

impl CheckedBlock {
    pub fn polys(&self) -> Vec<MultiPoly> {
        self.constraints.iter().map(|c| c.poly.clone()).collect()
    }
}

/// A validated problem with every inequality split into `>= 0` form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedProblem {
    pub spec: ProblemSpec,
    pub base: CheckedBlock,
    pub goal: Vec<CheckedBlock>,
    pub majorants: Vec<MultiPoly>,
}

impl CheckedProblem {
    pub fn uses_binom(&self) -> bool {
        self.base
            .constraints
            .iter()
            .chain(self.goal.iter().flat_map(|b| b.constraints.iter()))
            .any(|c| c.poly.contains_binom())
    }

    /// Pure parameter constraints of the base system (they restrict the
    /// parameter domain).
    pub fn parameter_constraints(&self) -> Vec<MultiPoly> {
        self.base
            .constraints
            .iter()
            .filter(|c| c.form.is_parameter_only())
            .map(|c| c.poly.clone())
            .collect()
    }
}

fn check_block(
    system: &[Inequality],
    scope: &BTreeSet<String>,
    vars: &[String],
) -> Result<Vec<CheckedConstraint>, DslError> {
    let mut out = Vec::new();
    for ineq in system {
        for poly in ineq.normalized() {
            if let Some(s) = poly.symbols().into_iter().find(|s| !scope.contains(s)) {
                return Err(DslError::Undeclared(s));
            }
            let form = AffineForm::decompose(&poly, vars)?;
            out.push(CheckedConstraint { poly, form });
        }
    }
    Ok(out)
}

/// Confirms affineness and scoping and splits every inequality.
pub fn validate(spec: &ProblemSpec) -> Result<CheckedProblem, DslError> {
    if spec.base_system.is_empty() {
        return Err(DslError::EmptySystem);
    }
    let params = spec.param_names();
    let mut scope: BTreeSet<String> = params.clone();
    scope.insert(BINOM.to_string());
    scope.extend(spec.vars.iter().cloned());

    let base = CheckedBlock {
        vars: spec.vars.clone(),
        constraints: check_block(&spec.base_system, &scope, &spec.vars)?,
    };
    let mut goal = Vec::new();
    for block in &spec.goal {
        let mut inner = scope.clone();
        inner.extend(block.new_vars.iter().cloned());
        let mut all_vars = spec.vars.clone();
        all_vars.extend(block.new_vars.iter().cloned());
        goal.push(CheckedBlock {
            vars: block.new_vars.clone(),
            constraints: check_block(&block.system, &inner, &all_vars)?,
        });
    }
    let mut majorants = Vec::new();
    for m in &spec.majorants {
        for poly in m.normalized() {
            if poly.symbols().iter().any(|s| !params.contains(s)) {
                return Err(DslError::BadMajorant(poly.to_string()));
            }
            majorants.push(poly);
        }
    }
    let checked = CheckedProblem {
        spec: spec.clone(),
        base,
        goal,
        majorants,
    };
    if checked.uses_binom() && !(params.contains(PARAM_R) && params.contains(PARAM_K)) {
        return Err(DslError::BinomWithoutParams);
    }
    Ok(checked)
}
