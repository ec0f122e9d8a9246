//! Fourier-Motzkin elimination of decision variables whose coefficients are
//! polynomials in the parameters.
//!
//! Every constraint reads `p >= 0`. Eliminating `n` pairs each upper bound
//! `n <= a/b` with each lower bound `n >= c/d` into `a*d - b*c >= 0` (real
//! mode) or `a*d - b*c >= (b - 1)(d - 1)` (integer mode). The integer rule is
//! only sufficient: it guarantees an integer `n` when `a, b, c, d` are
//! integers with `b, d >= 1`, which holds at integer parameter values because
//! constraints are kept with coprime integer coefficients.

use std::collections::HashSet;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{Assignment, MultiPoly, PARAM_K, PARAM_R};
use crate::positivity::{certify_positive, BivarPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Real,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMethod {
    Constant,
    PositivityCertificate,
    FixedEvaluation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignWitness {
    pub polynomial: String,
    pub sign: Sign,
    pub method: SignMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElimError {
    #[error("cannot certify the sign of the coefficient `{coefficient}` of {var}: {reason}")]
    Inconclusive {
        var: String,
        coefficient: String,
        reason: String,
    },
    #[error("constraint `{poly}` is not affine in {var}")]
    NotAffine { var: String, poly: String },
    #[error("elimination order must be a permutation of the block variables; got {0}")]
    BadOrder(String),
}

/// Decides the strict sign of a nonzero coefficient polynomial on the
/// parameter domain.
pub trait SignOracle: Sync {
    fn sign(&self, coeff: &MultiPoly) -> Result<SignWitness, String>;
}

fn constant_sign(coeff: &MultiPoly) -> Option<SignWitness> {
    let c = coeff.constant_value()?;
    (!c.is_zero()).then(|| SignWitness {
        polynomial: coeff.to_string(),
        sign: if c > Zero::zero() { Sign::Positive } else { Sign::Negative },
        method: SignMethod::Constant,
    })
}

/// Signs valid for all integers `r >= r0`, `k >= k0`, via positivity
/// certificates. Coefficients involving `B` are not decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParametricOracle {
    pub r0: i64,
    pub k0: i64,
}

impl SignOracle for ParametricOracle {
    fn sign(&self, coeff: &MultiPoly) -> Result<SignWitness, String> {
        if let Some(w) = constant_sign(coeff) {
            return Ok(w);
        }
        let p = BivarPoly::from_multipoly(coeff).map_err(|e| e.to_string())?;
        let first = match certify_positive(&p, self.r0, self.k0) {
            Ok(_) => {
                return Ok(SignWitness {
                    polynomial: coeff.to_string(),
                    sign: Sign::Positive,
                    method: SignMethod::PositivityCertificate,
                })
            }
            Err(inc) => inc,
        };
        match certify_positive(&p.scale(&crate::exact::rat(-1)), self.r0, self.k0) {
            Ok(_) => Ok(SignWitness {
                polynomial: coeff.to_string(),
                sign: Sign::Negative,
                method: SignMethod::PositivityCertificate,
            }),
            Err(_) => Err(format!(
                "no certificate for either sign with r >= {}, k >= {} ({} failed: {})",
                self.r0,
                self.k0,
                first.failed.label(),
                first.reason
            )),
        }
    }
}

/// Signs at one parameter point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedOracle {
    pub params: Assignment,
}

impl SignOracle for FixedOracle {
    fn sign(&self, coeff: &MultiPoly) -> Result<SignWitness, String> {
        if let Some(w) = constant_sign(coeff) {
            return Ok(w);
        }
        let v = coeff.eval(&self.params).map_err(|e| e.to_string())?;
        if v.is_zero() {
            return Err("vanishes at the fixed parameters".into());
        }
        Ok(SignWitness {
            polynomial: coeff.to_string(),
            sign: if v > Zero::zero() { Sign::Positive } else { Sign::Negative },
            method: SignMethod::FixedEvaluation,
        })
    }
}

/// `n <= num/den` (upper) or `n >= num/den` (lower), `den` certified positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub num: MultiPoly,
    pub den: MultiPoly,
    pub witness: SignWitness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBounds {
    pub var: String,
    pub uppers: Vec<Bound>,
    pub lowers: Vec<Bound>,
    pub free: Vec<MultiPoly>,
}

pub fn classify_bounds(system: &[MultiPoly], var: &str, oracle: &dyn SignOracle) -> Result<VarBounds, ElimError> {
    let mut out = VarBounds {
        var: var.to_string(),
        uppers: Vec::new(),
        lowers: Vec::new(),
        free: Vec::new(),
    };
    for p in system {
        if p.degree_in(var) > 1 {
            return Err(ElimError::NotAffine {
                var: var.into(),
                poly: p.to_string(),
            });
        }
        let coeff = p.coeff_of(var, 1);
        if coeff.is_zero() {
            out.free.push(p.clone());
            continue;
        }
        if coeff.contains(var) {
            return Err(ElimError::NotAffine {
                var: var.into(),
                poly: p.to_string(),
            });
        }
        let rest = p.coeff_of(var, 0);
        let witness = oracle.sign(&coeff).map_err(|reason| ElimError::Inconclusive {
            var: var.into(),
            coefficient: coeff.to_string(),
            reason,
        })?;
        match witness.sign {
            Sign::Positive => out.lowers.push(Bound {
                num: -rest,
                den: coeff,
                witness,
            }),
            Sign::Negative => out.uppers.push(Bound {
                num: rest,
                den: -coeff,
                witness,
            }),
        }
    }
    Ok(out)
}

fn pair(bounds: &VarBounds, correction: impl Fn(&Bound, &Bound) -> MultiPoly) -> Vec<MultiPoly> {
    let mut out = bounds.free.clone();
    for u in &bounds.uppers {
        for l in &bounds.lowers {
            let diff = &(&u.num * &l.den) - &(&u.den * &l.num);
            out.push(&diff - &correction(u, l));
        }
    }
    out
}

pub fn eliminate_real(bounds: &VarBounds) -> Vec<MultiPoly> {
    pair(bounds, |_, _| MultiPoly::zero())
}

pub fn eliminate_integer(bounds: &VarBounds) -> Vec<MultiPoly> {
    let one = MultiPoly::one();
    pair(bounds, |u, l| &(&u.den - &one) * &(&l.den - &one))
}

pub fn eliminate(bounds: &VarBounds, mode: Mode) -> Vec<MultiPoly> {
    match mode {
        Mode::Real => eliminate_real(bounds),
        Mode::Integer => eliminate_integer(bounds),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EliminationStep {
    pub var: String,
    pub uppers: usize,
    pub lowers: usize,
    pub free: usize,
    pub produced: usize,
    pub witnesses: Vec<SignWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    /// Normalized constraints over the remaining symbols.
    pub constraints: Vec<MultiPoly>,
    pub steps: Vec<EliminationStep>,
}

impl Elimination {
    /// A constant constraint that fails, if any.
    pub fn contradiction(&self) -> Option<&MultiPoly> {
        self.constraints
            .iter()
            .find(|p| p.constant_value().is_some_and(|c| c < Zero::zero()))
    }
}

/// Coprime integer coefficients, no duplicates, no constant-true rows.
/// Failing constants are kept so infeasibility stays visible.
pub fn normalize_system(system: &[MultiPoly]) -> Vec<MultiPoly> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in system {
        let q = p.primitive();
        if q.constant_value().is_some_and(|c| c >= Zero::zero()) {
            continue;
        }
        if seen.insert(q.clone()) {
            out.push(q);
        }
    }
    out
}

/// Eliminates `order` one variable at a time.
pub fn eliminate_all(
    system: &[MultiPoly],
    order: &[String],
    mode: Mode,
    oracle: &dyn SignOracle,
) -> Result<Elimination, ElimError> {
    let mut current = normalize_system(system);
    let mut steps = Vec::with_capacity(order.len());
    for var in order {
        let bounds = classify_bounds(&current, var, oracle)?;
        let produced = eliminate(&bounds, mode);
        let next = normalize_system(&produced);
        steps.push(EliminationStep {
            var: var.clone(),
            uppers: bounds.uppers.len(),
            lowers: bounds.lowers.len(),
            free: bounds.free.len(),
            produced: next.len(),
            witnesses: bounds
                .uppers
                .iter()
                .chain(&bounds.lowers)
                .map(|b| b.witness.clone())
                .collect(),
        });
        current = next;
    }
    Ok(Elimination {
        constraints: current,
        steps,
    })
}

/// Innermost-declared variable first.
pub fn default_order(vars: &[String]) -> Vec<String> {
    vars.iter().rev().cloned().collect()
}

/// Checks that `order` is a permutation of `vars`.
pub fn check_order(vars: &[String], order: &[String]) -> Result<(), ElimError> {
    let mut a = vars.to_vec();
    let mut b = order.to_vec();
    a.sort();
    b.sort();
    if a == b {
        Ok(())
    } else {
        Err(ElimError::BadOrder(order.join(",")))
    }
}

/// Parameter lower bounds used by [`ParametricOracle`]; absent parameters
/// default to 0.
pub fn parametric_oracle(problem: &crate::dsl::CheckedProblem) -> ParametricOracle {
    let lower = |name: &str| problem.spec.param(name).map_or(0, |p| p.lower);
    ParametricOracle {
        r0: lower(PARAM_R),
        k0: lower(PARAM_K),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn v(name: &str) -> MultiPoly {
        MultiPoly::var(name)
    }

    fn c(x: i64) -> MultiPoly {
        MultiPoly::int(x)
    }

    const CONST_ONLY: ParametricOracle = ParametricOracle { r0: 0, k0: 0 };

    fn bounds(uppers: &[(i64, i64)], lowers: &[(i64, i64)]) -> VarBounds {
        let mk = |&(n, d): &(i64, i64)| Bound {
            num: c(n),
            den: c(d),
            witness: constant_sign(&c(d)).unwrap(),
        };
        VarBounds {
            var: "n".into(),
            uppers: uppers.iter().map(mk).collect(),
            lowers: lowers.iter().map(mk).collect(),
            free: vec![],
        }
    }

    #[test]
    fn classification() {
        let n = v("n");
        let b = classify_bounds(&[&(&c(2) * &n) - &c(6)], "n", &CONST_ONLY).unwrap();
        assert_eq!((b.lowers[0].num.clone(), b.lowers[0].den.clone()), (c(6), c(2)));
        let b = classify_bounds(&[&(&c(-3) * &n) + &c(7)], "n", &CONST_ONLY).unwrap();
        assert_eq!((b.uppers[0].num.clone(), b.uppers[0].den.clone()), (c(7), c(3)));
        let r = v("r");
        let p = &(&(&r - &c(1)) * &n) - &v("d");
        let b = classify_bounds(&[p], "n", &ParametricOracle { r0: 3, k0: 0 }).unwrap();
        assert_eq!(b.lowers[0].num, v("d"));
        assert_eq!(b.lowers[0].den, &r - &c(1));
        assert_eq!(b.lowers[0].witness.method, SignMethod::PositivityCertificate);
        // r - 5 changes sign on r >= 3.
        let p = &(&(&r - &c(5)) * &n) - &v("d");
        assert!(matches!(
            classify_bounds(&[p], "n", &ParametricOracle { r0: 3, k0: 0 }),
            Err(ElimError::Inconclusive { .. })
        ));
        let sq = &n * &n;
        assert!(matches!(classify_bounds(&[sq], "n", &CONST_ONLY), Err(ElimError::NotAffine { .. })));
    }

    #[test]
    fn pairing_rules() {
        assert_eq!(eliminate_real(&bounds(&[(5, 1)], &[(3, 1)])), vec![c(2)]);
        assert_eq!(eliminate_real(&bounds(&[(7, 3)], &[(11, 5)])), vec![c(2)]);
        assert!(eliminate_real(&bounds(&[], &[(3, 1)])).is_empty());
        assert_eq!(eliminate_integer(&bounds(&[(7, 3)], &[(11, 5)])), vec![c(-6)]);
        assert_eq!(eliminate_integer(&bounds(&[(5, 2)], &[(3, 2)])), vec![c(3)]);
        assert_eq!(eliminate_integer(&bounds(&[(5, 1)], &[(3, 1)])), vec![c(2)]);
    }

    #[test]
    fn whole_systems() {
        let n = v("n");
        let sys = vec![&n - &c(1), &v("r") - &n];
        let out = eliminate_all(&sys, &["n".into()], Mode::Integer, &ParametricOracle { r0: 3, k0: 0 }).unwrap();
        assert_eq!(out.constraints, vec![&v("r") - &c(1)]);
        // Empty order leaves the normalized system.
        let out = eliminate_all(&sys, &[], Mode::Real, &CONST_ONLY).unwrap();
        assert_eq!(out.constraints, sys);
        let out = eliminate_all(&[c(-1), &n - &c(1)], &["n".into()], Mode::Real, &CONST_ONLY).unwrap();
        assert_eq!(out.contradiction(), Some(&c(-1)));
    }

    #[test]
    fn rho_system_eliminates_to_parameters() {
        // (r+1)d - r g - r(r+1) >= 0, g = 2 r, d <= 3 r
        let (r, d, g) = (v("r"), v("d"), v("g"));
        let r1 = &r + &c(1);
        let rho = &(&(&r1 * &d) - &(&r * &g)) - &(&r * &r1);
        let pin = &g - &(&c(2) * &r);
        let sys = vec![rho, pin.clone(), -pin, &(&c(3) * &r) - &d];
        let order = default_order(&["d".into(), "g".into()]);
        let oracle = ParametricOracle { r0: 1, k0: 0 };
        let out = eliminate_all(&sys, &order, Mode::Real, &oracle).unwrap();
        assert!(out.constraints.iter().all(|p| !p.contains("d") && !p.contains("g")));
        for rv in 1..8 {
            let mut a = Assignment::new();
            a.insert("r".into(), rat(rv));
            let ok = out.constraints.iter().all(|p| p.eval(&a).unwrap() >= rat(0));
            // Real interval for d against a scan of candidate integers.
            let feasible = (0..=3 * rv).any(|dv| (rv + 1) * dv - rv * 2 * rv - rv * (rv + 1) >= 0);
            assert_eq!(ok, feasible, "r = {rv}");
        }
    }

    #[test]
    fn fixed_oracle_signs() {
        let mut a = Assignment::new();
        a.insert("r".into(), rat(2));
        let o = FixedOracle { params: a };
        assert_eq!(o.sign(&(&v("r") - &c(1))).unwrap().method, SignMethod::FixedEvaluation);
        assert!(o.sign(&(&v("r") - &c(2))).is_err());
    }
}
