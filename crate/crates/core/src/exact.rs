//! Exact rationals and sparse multivariate polynomials.
//!
//! Every quantity in the decision path is a [`Rat`] (a reduced big rational
//! with positive denominator) or a [`MultiPoly`] with `Rat` coefficients.
//! The distinguished symbol [`BINOM`] stands for `binom(r + k, k)`; it is
//! only ever expanded once `k` has been fixed to a nonnegative integer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational; always reduced with a positive denominator.
pub type Rat = BigRational;

/// Reserved symbol for `binom(r + k, k)`.
pub const BINOM: &str = "B";
/// Parameter names the binomial symbol is defined in terms of.
pub const PARAM_R: &str = "r";
pub const PARAM_K: &str = "k";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no value assigned to symbol `{0}`")]
    MissingSymbol(String),
    #[error("inconsistent value for B: assigned {assigned}, but binom(r+k,k) = {forced}")]
    InconsistentBinom { assigned: Box<Rat>, forced: Box<Rat> },
    #[error("cannot differentiate with respect to the binomial symbol B")]
    DifferentiateBinom,
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `binom(r + k, k)` for nonnegative `r`, `k`.
pub fn binom_eval(r: i64, k: i64) -> Result<BigInt, ExactError> {
    if r < 0 || k < 0 {
        return Err(ExactError::Domain(format!(
            "binom(r+k,k) needs r, k >= 0 (got r = {r}, k = {k})"
        )));
    }
    // Multiply by the smaller side; each partial product is itself a binomial.
    let n = r + k;
    let m = r.min(k);
    let mut acc = BigInt::one();
    for i in 1..=m {
        acc = acc * BigInt::from(n - m + i) / BigInt::from(i);
    }
    Ok(acc)
}

/// Rational value as an `i64` when it is an integer that fits.
pub fn rat_to_i64(value: &Rat) -> Option<i64> {
    if value.is_integer() {
        value.to_integer().to_i64()
    } else {
        None
    }
}

/// Serializes a rational as its exact `num/den` string.
pub fn ser_rat<S: serde::Serializer>(value: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&value.to_string())
}

pub fn ser_opt_rat<S: serde::Serializer>(value: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

pub fn ser_rats<S: serde::Serializer>(values: &[Rat], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for v in values {
        seq.serialize_element(&v.to_string())?;
    }
    seq.end()
}

pub fn floor_to_i64(value: &Rat) -> Option<i64> {
    value.floor().to_integer().to_i64()
}

pub fn ceil_to_i64(value: &Rat) -> Option<i64> {
    value.ceil().to_integer().to_i64()
}

/// Product of symbol powers. Zero exponents are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(BTreeMap<String, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(name: &str) -> Self {
        Monomial(BTreeMap::from([(name.to_string(), 1)]))
    }

    pub fn from_powers<'a>(powers: impl IntoIterator<Item = (&'a str, u32)>) -> Self {
        let mut map = BTreeMap::new();
        for (name, e) in powers {
            if e > 0 {
                *map.entry(name.to_string()).or_insert(0) += e;
            }
        }
        Monomial(map)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree_in(&self, name: &str) -> u32 {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn powers(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(s, &e)| (s.as_str(), e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (s, e) in &other.0 {
            *out.entry(s.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    /// Same monomial with `name` removed.
    pub fn without(&self, name: &str) -> Monomial {
        let mut out = self.0.clone();
        out.remove(name);
        Monomial(out)
    }

    fn with_power(&self, name: &str, e: u32) -> Monomial {
        let mut out = self.0.clone();
        if e == 0 {
            out.remove(name);
        } else {
            out.insert(name.to_string(), e);
        }
        Monomial(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (s, e) in display_order(&self.0) {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

// Parameters first (r, k, B), then everything else alphabetically.
fn symbol_rank(s: &str) -> (u8, &str) {
    match s {
        PARAM_R => (0, s),
        PARAM_K => (1, s),
        BINOM => (2, s),
        _ => (3, s),
    }
}

fn display_order(map: &BTreeMap<String, u32>) -> Vec<(&str, u32)> {
    let mut v: Vec<(&str, u32)> = map.iter().map(|(s, &e)| (s.as_str(), e)).collect();
    v.sort_by(|a, b| symbol_rank(a.0).cmp(&symbol_rank(b.0)));
    v
}

/// Values for symbols during evaluation.
pub type Assignment = BTreeMap<String, Rat>;

/// Sparse polynomial over the rationals in named symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Rat>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly::default()
    }

    pub fn one() -> Self {
        MultiPoly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        MultiPoly::term(Monomial::one(), c)
    }

    pub fn int(c: i64) -> Self {
        MultiPoly::constant(rat(c))
    }

    pub fn var(name: &str) -> Self {
        MultiPoly::term(Monomial::var(name), Rat::one())
    }

    /// The binomial symbol `B`.
    pub fn binom() -> Self {
        MultiPoly::var(BINOM)
    }

    pub fn term(m: Monomial, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MultiPoly { terms }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rat)>) -> Self {
        let mut p = MultiPoly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// The value of a constant polynomial.
    pub fn constant_value(&self) -> Option<Rat> {
        if self.is_zero() {
            Some(Rat::zero())
        } else if self.is_constant() {
            self.terms.get(&Monomial::one()).cloned()
        } else {
            None
        }
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.powers().map(|(s, _)| s.to_string()))
            .collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.terms.keys().any(|m| m.degree_in(name) > 0)
    }

    pub fn contains_binom(&self) -> bool {
        self.contains(BINOM)
    }

    pub fn degree_in(&self, name: &str) -> u32 {
        self.terms.keys().map(|m| m.degree_in(name)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    /// Coefficient of `name^e`, as a polynomial in the remaining symbols.
    pub fn coeff_of(&self, name: &str, e: u32) -> MultiPoly {
        MultiPoly::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.degree_in(name) == e)
                .map(|(m, c)| (m.without(name), c.clone())),
        )
    }

    pub fn scale(&self, c: &Rat) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut acc = MultiPoly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes a rational value for one symbol.
    pub fn substitute(&self, name: &str, value: &Rat) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let e = m.degree_in(name);
            if e == 0 {
                out.add_term(m.clone(), c.clone());
            } else {
                out.add_term(m.without(name), c * pow_rat(value, e));
            }
        }
        out
    }

    /// Substitutes a polynomial for one symbol.
    pub fn compose(&self, name: &str, value: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let e = m.degree_in(name);
            let rest = MultiPoly::term(m.without(name), c.clone());
            out = &out + &(&rest * &value.pow(e));
        }
        out
    }

    /// Exact evaluation. If `B` occurs, its value is forced to
    /// `binom(r + k, k)` from the integer values of `r` and `k`.
    pub fn eval(&self, assignment: &Assignment) -> Result<Rat, ExactError> {
        let mut values = assignment.clone();
        if self.contains_binom() {
            let forced = forced_binom(assignment)?;
            if let Some(given) = assignment.get(BINOM) {
                if *given != forced {
                    return Err(ExactError::InconsistentBinom {
                        assigned: Box::new(given.clone()),
                        forced: Box::new(forced),
                    });
                }
            }
            values.insert(BINOM.to_string(), forced);
        }
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (s, e) in m.powers() {
                let v = values
                    .get(s)
                    .ok_or_else(|| ExactError::MissingSymbol(s.to_string()))?;
                t *= pow_rat(v, e);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Formal partial derivative.
    pub fn derivative(&self, name: &str) -> Result<MultiPoly, ExactError> {
        if name == BINOM {
            return Err(ExactError::DifferentiateBinom);
        }
        Ok(MultiPoly::from_terms(self.terms.iter().filter_map(|(m, c)| {
            let e = m.degree_in(name);
            (e > 0).then(|| (m.with_power(name, e - 1), c * rat(e as i64)))
        })))
    }

    /// Replaces `B` by `prod_{i=1..k}(r+i)/k!` and `k` by `k_value`.
    pub fn expand_binom(&self, k_value: i64) -> Result<MultiPoly, ExactError> {
        if k_value < 0 {
            return Err(ExactError::Domain(format!(
                "k must be nonnegative to expand B (got {k_value})"
            )));
        }
        let mut b = MultiPoly::one();
        let mut fact = BigInt::one();
        for i in 1..=k_value {
            b = &b * &(&MultiPoly::var(PARAM_R) + &MultiPoly::int(i));
            fact *= BigInt::from(i);
        }
        let b = b.scale(&Rat::new(BigInt::one(), fact));
        Ok(self
            .compose(BINOM, &b)
            .substitute(PARAM_K, &rat(k_value)))
    }

    /// Positive rational multiple with coprime integer coefficients.
    /// The zero polynomial is returned unchanged.
    pub fn primitive(&self) -> MultiPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut lcm = BigInt::one();
        let mut gcd = BigInt::zero();
        for c in self.terms.values() {
            lcm = lcm.lcm(c.denom());
        }
        for c in self.terms.values() {
            let n = c.numer() * (&lcm / c.denom());
            gcd = gcd.gcd(&n);
        }
        self.scale(&Rat::new(lcm, gcd))
    }

    pub fn has_integer_coeffs(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    /// Sign of every coefficient, if they all agree.
    pub fn uniform_sign(&self) -> Option<i8> {
        if self.terms.values().all(|c| c.is_positive()) {
            Some(1)
        } else if self.terms.values().all(|c| c.is_negative()) {
            Some(-1)
        } else {
            None
        }
    }
}

fn pow_rat(v: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= v;
    }
    acc
}

fn forced_binom(assignment: &Assignment) -> Result<Rat, ExactError> {
    let get_int = |name: &str| -> Result<i64, ExactError> {
        let v = assignment
            .get(name)
            .ok_or_else(|| ExactError::MissingSymbol(name.to_string()))?;
        rat_to_i64(v).ok_or_else(|| {
            ExactError::Domain(format!("B needs an integer value for `{name}`, got {v}"))
        })
    };
    let r = get_int(PARAM_R)?;
    let k = get_int(PARAM_K)?;
    Ok(Rat::from_integer(binom_eval(r, k)?))
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $f(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -&self
    }
}

impl fmt::Display for MultiPoly {
    /// Canonical text form; parses back to the same polynomial.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut order: Vec<(&Monomial, &Rat)> = self.terms.iter().collect();
        order.sort_by(|a, b| {
            b.0.total_degree()
                .cmp(&a.0.total_degree())
                .then_with(|| display_key(a.0).cmp(&display_key(b.0)))
        });
        for (i, (m, c)) in order.into_iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

// Higher powers of earlier-ranked symbols first.
fn display_key(m: &Monomial) -> Vec<((u8, String), std::cmp::Reverse<u32>)> {
    display_order(&m.0)
        .into_iter()
        .map(|(s, e)| {
            let (rank, name) = symbol_rank(s);
            ((rank, name.to_string()), std::cmp::Reverse(e))
        })
        .collect()
}
