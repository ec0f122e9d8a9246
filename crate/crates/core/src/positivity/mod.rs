//! Positivity of a polynomial `P(r, k)` on the quadrant `r >= r0, k >= k0`.
//!
//! [`certify_positive`] checks five sufficient conditions:
//!
//! * (a) every outer monomial of the Newton polygon has a positive coefficient;
//! * (b) the leading coefficient in `r` is positive for `k >= k0`;
//! * (c) the leading coefficient in `k` is positive for `r >= r0`;
//! * (d) the boundary slice `P(r0, k)` is positive for `k >= k0`;
//! * (e) `k0` exceeds every branch point of the projection of `P = 0` onto the
//!   `k`-axis (roots of the discriminant in `r` and of the leading coefficient
//!   in `r`).
//!
//! Univariate checks use Sturm chains, so every decision is exact. Constants
//! and polynomials in a single variable short-circuit to a sign test or a
//! single ray check. No completeness is claimed: a failed condition yields
//! [`Inconclusive`], never a refutation.

pub mod bivariate;
pub mod newton;
pub mod univariate;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{rat, ser_rat, Rat};

pub use bivariate::{BivarPoly, Var};
pub use newton::{newton_outer, NewtonPolygonReport, OuterMonomial};
pub use univariate::{SturmChain, UniPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PositivityError {
    #[error("the zero polynomial has no sign")]
    ZeroPolynomial,
    #[error("not a polynomial in r and k: {0}")]
    NotBivariate(String),
    #[error("polynomial has degree 0 in r")]
    DegreeZero,
    #[error("discriminant in r vanishes identically (P is not square-free in r); divide out repeated factors")]
    ZeroDiscriminant,
}

/// `q(t) > 0` for every real `t >= t0`.
pub fn univ_positive_on_ray(q: &UniPoly, t0: &Rat) -> Result<bool, PositivityError> {
    if q.is_zero() {
        return Err(PositivityError::ZeroPolynomial);
    }
    if q.eval(t0) <= rat(0) {
        return Ok(false);
    }
    Ok(q.count_roots_above(t0) == 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Constant polynomial: plain sign test.
    Sign,
    /// Polynomial in one variable: positivity on a single ray.
    Ray,
    NewtonOuter,
    LeadingInR,
    LeadingInK,
    BoundarySlice,
    BranchPoints,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Sign => "sign",
            Condition::Ray => "ray",
            Condition::NewtonOuter => "(a) outer Newton monomials",
            Condition::LeadingInR => "(b) leading coefficient in r",
            Condition::LeadingInK => "(c) leading coefficient in k",
            Condition::BoundarySlice => "(d) boundary slice P(r0, k)",
            Condition::BranchPoints => "(e) branch points below k0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Constant,
    UnivariateR,
    UnivariateK,
    Bivariate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchMethod {
    /// Cauchy bound of the square-free parts.
    #[default]
    Cauchy,
    /// Sturm-based isolation of the largest real root.
    Sturm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchBound {
    /// Every real branch point is `<= beta`.
    #[serde(serialize_with = "ser_rat")]
    pub beta: Rat,
    pub has_branch_points: bool,
    pub method: BranchMethod,
    pub discriminant: String,
    pub leading_coeff: String,
}

/// Upper bound on the branch points of the projection of `P = 0` to the
/// `k`-axis.
pub fn branch_point_bound(p: &BivarPoly, method: BranchMethod) -> Result<BranchBound, PositivityError> {
    let disc = p.discriminant_wrt_r()?;
    if disc.is_zero() {
        return Err(PositivityError::ZeroDiscriminant);
    }
    let lead = p.leading_coeff(Var::R)?;
    let mut beta: Option<Rat> = None;
    for q in [&disc, &lead] {
        if q.is_constant() {
            continue;
        }
        let sf = q.square_free_part();
        let b = match method {
            BranchMethod::Cauchy => Some(sf.cauchy_bound()),
            BranchMethod::Sturm => sf.largest_root_upper_bound(20),
        };
        if let Some(b) = b {
            if beta.as_ref().is_none_or(|cur| b > *cur) {
                beta = Some(b);
            }
        }
    }
    Ok(BranchBound {
        has_branch_points: beta.is_some(),
        beta: beta.unwrap_or_else(|| rat(0)),
        method,
        discriminant: disc.to_string(),
        leading_coeff: lead.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CertifyOptions {
    pub branch_method: BranchMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PositivityCertificate {
    pub polynomial: String,
    pub r0: i64,
    pub k0: i64,
    pub shape: Shape,
    pub checks: Vec<ConditionCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton: Option<NewtonPolygonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchBound>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Inconclusive {
    pub polynomial: String,
    /// First condition that did not pass.
    pub failed: Condition,
    pub reason: String,
    pub checks: Vec<ConditionCheck>,
}

pub fn certify_positive(p: &BivarPoly, r0: i64, k0: i64) -> Result<PositivityCertificate, Inconclusive> {
    certify_positive_with(p, r0, k0, CertifyOptions::default())
}

fn ray_check(condition: Condition, what: &str, q: &UniPoly, var: &str, t0: i64) -> ConditionCheck {
    match univ_positive_on_ray(q, &rat(t0)) {
        Ok(true) => ConditionCheck {
            condition,
            passed: true,
            detail: format!("{what} = {} > 0 for {var} >= {t0}", q.to_string().replace('t', var)),
        },
        Ok(false) => ConditionCheck {
            condition,
            passed: false,
            detail: format!(
                "{what} = {} is not positive on {var} >= {t0}",
                q.to_string().replace('t', var)
            ),
        },
        Err(e) => ConditionCheck {
            condition,
            passed: false,
            detail: format!("{what}: {e}"),
        },
    }
}

pub fn certify_positive_with(
    p: &BivarPoly,
    r0: i64,
    k0: i64,
    opts: CertifyOptions,
) -> Result<PositivityCertificate, Inconclusive> {
    let polynomial = p.to_string();
    if p.is_zero() {
        return Err(Inconclusive {
            polynomial,
            failed: Condition::Sign,
            reason: PositivityError::ZeroPolynomial.to_string(),
            checks: Vec::new(),
        });
    }
    let (shape, checks, newton, branch) = if p.degree(Var::R) == 0 && p.degree(Var::K) == 0 {
        let c = p.coeff(0, 0);
        let check = ConditionCheck {
            condition: Condition::Sign,
            passed: c > rat(0),
            detail: format!("constant {c}"),
        };
        (Shape::Constant, vec![check], None, None)
    } else if p.degree(Var::K) == 0 {
        let q = p.coeff_in(Var::K, 0);
        (Shape::UnivariateR, vec![ray_check(Condition::Ray, "P", &q, "r", r0)], None, None)
    } else if p.degree(Var::R) == 0 {
        let q = p.coeff_in(Var::R, 0);
        (Shape::UnivariateK, vec![ray_check(Condition::Ray, "P", &q, "k", k0)], None, None)
    } else {
        let mut checks = Vec::with_capacity(5);
        let newton = newton_outer(p).expect("nonzero");
        let negatives: Vec<String> = newton
            .outer
            .iter()
            .filter(|m| m.coeff <= rat(0))
            .map(|m| format!("r^{}*k^{} has coefficient {}", m.r_exp, m.k_exp, m.coeff))
            .collect();
        checks.push(ConditionCheck {
            condition: Condition::NewtonOuter,
            passed: newton.all_outer_positive,
            detail: if negatives.is_empty() {
                format!("{} outer monomial(s), all positive", newton.outer.len())
            } else {
                negatives.join("; ")
            },
        });
        let lead_r = p.leading_coeff(Var::R).expect("nonzero");
        checks.push(ray_check(Condition::LeadingInR, "lc_r", &lead_r, "k", k0));
        let lead_k = p.leading_coeff(Var::K).expect("nonzero");
        checks.push(ray_check(Condition::LeadingInK, "lc_k", &lead_k, "r", r0));
        let slice = p.slice(Var::R, &rat(r0));
        checks.push(ray_check(
            Condition::BoundarySlice,
            &format!("P({r0}, k)"),
            &slice,
            "k",
            k0,
        ));
        let (check, branch) = branch_check(p, k0, opts.branch_method);
        checks.push(check);
        (Shape::Bivariate, checks, Some(newton), branch)
    };
    match checks.iter().find(|c| !c.passed) {
        None => Ok(PositivityCertificate {
            polynomial,
            r0,
            k0,
            shape,
            checks,
            newton,
            branch,
        }),
        Some(failed) => Err(Inconclusive {
            polynomial,
            failed: failed.condition,
            reason: failed.detail.clone(),
            checks,
        }),
    }
}

fn branch_check(p: &BivarPoly, k0: i64, method: BranchMethod) -> (ConditionCheck, Option<BranchBound>) {
    let condition = Condition::BranchPoints;
    let bound = match branch_point_bound(p, method) {
        Ok(b) => b,
        Err(e) => {
            return (
                ConditionCheck {
                    condition,
                    passed: false,
                    detail: e.to_string(),
                },
                None,
            )
        }
    };
    let k0r = rat(k0);
    let passed = match method {
        BranchMethod::Cauchy => !bound.has_branch_points || k0r > bound.beta,
        // Exact: no root of either polynomial on [k0, inf).
        BranchMethod::Sturm => {
            let disc = p.discriminant_wrt_r().expect("checked above");
            let lead = p.leading_coeff(Var::R).expect("nonzero");
            [disc, lead].iter().all(|q| {
                q.is_constant() || (!q.eval(&k0r).is_zero() && q.count_roots_above(&k0r) == 0)
            })
        }
    };
    let detail = if bound.has_branch_points {
        format!(
            "branch points <= {} ({:?} bound; disc = {}, lc_r = {}); k0 = {k0}",
            bound.beta, bound.method, bound.discriminant, bound.leading_coeff
        )
    } else {
        "no branch points".to_string()
    };
    (ConditionCheck { condition, passed, detail }, Some(bound))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NegativeSample {
    pub r: i64,
    pub k: i64,
    #[serde(serialize_with = "ser_rat")]
    pub value: Rat,
}

/// Searches integer points of `r >= r0, k >= k0` in growing square shells
/// for one with `P(r, k) <= 0`, spending at most `budget` evaluations.
/// Within a shell the most negative value wins (ties: first found).
pub fn find_negative_sample(p: &BivarPoly, r0: i64, k0: i64, budget: usize) -> Option<NegativeSample> {
    let mut evals = 0usize;
    let zero = rat(0);
    for s in 0i64.. {
        let mut best: Option<NegativeSample> = None;
        let shell = (0..=s).map(|dr| (dr, s)).chain((0..s).rev().map(|dk| (s, dk)));
        for (dr, dk) in shell {
            if evals >= budget {
                return best;
            }
            evals += 1;
            let (r, k) = (r0 + dr, k0 + dk);
            let value = p.eval(&rat(r), &rat(k));
            if value <= zero && best.as_ref().is_none_or(|b| value < b.value) {
                best = Some(NegativeSample { r, k, value });
            }
        }
        if best.is_some() {
            return best;
        }
    }
    None
}
