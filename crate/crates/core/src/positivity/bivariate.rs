use std::fmt;

use num_traits::{One, Zero};

use super::univariate::UniPoly;
use super::PositivityError;
use crate::exact::{rat, Monomial, MultiPoly, Rat, PARAM_K, PARAM_R};

/// The two variables of a [`BivarPoly`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    R,
    K,
}

impl Var {
    pub fn other(self) -> Var {
        match self {
            Var::R => Var::K,
            Var::K => Var::R,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::R => PARAM_R,
            Var::K => PARAM_K,
        }
    }
}

/// `sum c[i][j] r^i k^j`; rows and columns are trimmed of trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BivarPoly {
    c: Vec<Vec<Rat>>,
}

impl BivarPoly {
    pub fn new(mut c: Vec<Vec<Rat>>) -> Self {
        for row in c.iter_mut() {
            while row.last().is_some_and(Zero::is_zero) {
                row.pop();
            }
        }
        while c.last().is_some_and(Vec::is_empty) {
            c.pop();
        }
        BivarPoly { c }
    }

    /// From integer coefficients indexed `[i][j]` for `r^i k^j`.
    pub fn from_ints(c: &[&[i64]]) -> Self {
        BivarPoly::new(c.iter().map(|row| row.iter().map(|&x| rat(x)).collect()).collect())
    }

    /// From `(i, j, coeff)` triples; repeated exponents add up.
    pub fn from_terms(terms: &[(usize, usize, i64)]) -> Self {
        let mut c: Vec<Vec<Rat>> = Vec::new();
        for &(i, j, v) in terms {
            if c.len() <= i {
                c.resize(i + 1, Vec::new());
            }
            if c[i].len() <= j {
                c[i].resize(j + 1, Rat::zero());
            }
            c[i][j] += rat(v);
        }
        BivarPoly::new(c)
    }

    pub fn from_multipoly(p: &MultiPoly) -> Result<Self, PositivityError> {
        let mut c: Vec<Vec<Rat>> = Vec::new();
        for (m, coeff) in p.terms() {
            if let Some((s, _)) = m.powers().find(|(s, _)| *s != PARAM_R && *s != PARAM_K) {
                return Err(PositivityError::NotBivariate(format!(
                    "`{p}` involves `{s}`"
                )));
            }
            let i = m.degree_in(PARAM_R) as usize;
            let j = m.degree_in(PARAM_K) as usize;
            if c.len() <= i {
                c.resize(i + 1, Vec::new());
            }
            if c[i].len() <= j {
                c[i].resize(j + 1, Rat::zero());
            }
            c[i][j] = coeff.clone();
        }
        Ok(BivarPoly::new(c))
    }

    pub fn to_multipoly(&self) -> MultiPoly {
        MultiPoly::from_terms(self.terms().map(|(i, j, c)| {
            (
                Monomial::from_powers([(PARAM_R, i as u32), (PARAM_K, j as u32)]),
                c.clone(),
            )
        }))
    }

    /// Nonzero coefficients as `(i, j, c)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &Rat)> {
        self.c.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(move |(j, c)| (i, j, c))
        })
    }

    pub fn coeff(&self, i: usize, j: usize) -> Rat {
        self.c
            .get(i)
            .and_then(|row| row.get(j))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self, var: Var) -> usize {
        match var {
            Var::R => self.c.len().saturating_sub(1),
            Var::K => self.c.iter().map(|row| row.len()).max().unwrap_or(0).saturating_sub(1),
        }
    }

    pub fn scale(&self, s: &Rat) -> BivarPoly {
        BivarPoly::new(
            self.c
                .iter()
                .map(|row| row.iter().map(|x| x * s).collect())
                .collect(),
        )
    }

    pub fn eval(&self, r: &Rat, k: &Rat) -> Rat {
        self.c.iter().rev().fold(Rat::zero(), |acc, row| {
            let inner = row.iter().rev().fold(Rat::zero(), |a, x| a * k + x);
            acc * r + inner
        })
    }

    /// Coefficient of `var^e`, as a polynomial in the other variable.
    pub fn coeff_in(&self, var: Var, e: usize) -> UniPoly {
        match var {
            Var::R => UniPoly::new(self.c.get(e).cloned().unwrap_or_default()),
            Var::K => UniPoly::new(self.c.iter().map(|row| row.get(e).cloned().unwrap_or_else(Rat::zero)).collect()),
        }
    }

    pub fn leading_coeff(&self, var: Var) -> Result<UniPoly, PositivityError> {
        if self.is_zero() {
            return Err(PositivityError::ZeroPolynomial);
        }
        Ok(self.coeff_in(var, self.degree(var)))
    }

    /// Fixes `var = value`; the result is a polynomial in the other variable.
    pub fn slice(&self, var: Var, value: &Rat) -> UniPoly {
        let other = var.other();
        let n = self.degree(other);
        UniPoly::new(
            (0..=n)
                .map(|e| self.coeff_in(other, e).eval(value))
                .collect(),
        )
    }

    /// `p` viewed as univariate in `var` when it does not involve the other
    /// variable.
    pub fn as_univariate(&self, var: Var) -> Option<UniPoly> {
        (self.degree(var.other()) == 0).then(|| self.coeff_in(var.other(), 0))
    }

    /// Discriminant in `r`, a polynomial in `k`:
    /// `(-1)^(n(n-1)/2) Res_r(p, dp/dr) / lc_r(p)`.
    ///
    /// The resultant is computed by evaluating the Sylvester determinant at
    /// enough integer points `k` and interpolating; entries are evaluated
    /// with the formal degrees, so the specialization is exact.
    pub fn discriminant_wrt_r(&self) -> Result<UniPoly, PositivityError> {
        let n = self.degree(Var::R);
        if self.is_zero() || n == 0 {
            return Err(PositivityError::DegreeZero);
        }
        let e = self.degree(Var::K);
        let a: Vec<UniPoly> = (0..=n).map(|i| self.coeff_in(Var::R, i)).collect();
        let b: Vec<UniPoly> = (0..n).map(|i| a[i + 1].scale(&rat(i as i64 + 1))).collect();
        let bound = (2 * n - 1) * e;
        let points: Vec<Rat> = (0..=bound as i64).map(rat).collect();
        let values: Vec<Rat> = points
            .iter()
            .map(|k| {
                let av: Vec<Rat> = a.iter().map(|c| c.eval(k)).collect();
                let bv: Vec<Rat> = b.iter().map(|c| c.eval(k)).collect();
                determinant(sylvester(&av, &bv))
            })
            .collect();
        let res = interpolate(&points, &values);
        let (q, rem) = res.div_rem(&a[n]);
        debug_assert!(rem.is_zero(), "resultant not divisible by leading coefficient");
        let sign = if (n * (n - 1) / 2).is_multiple_of(2) { rat(1) } else { rat(-1) };
        Ok(q.scale(&sign))
    }
}

/// Sylvester matrix of `a` and `b`, both given constant-first; the last
/// entry of each is taken as its formal leading coefficient.
pub(crate) fn sylvester(a: &[Rat], b: &[Rat]) -> Vec<Vec<Rat>> {
    let n = a.len() - 1;
    let m = b.len() - 1;
    let size = n + m;
    let mut rows = Vec::with_capacity(size);
    for shift in 0..m {
        let mut row = vec![Rat::zero(); size];
        for (idx, c) in a.iter().rev().enumerate() {
            row[shift + idx] = c.clone();
        }
        rows.push(row);
    }
    for shift in 0..n {
        let mut row = vec![Rat::zero(); size];
        for (idx, c) in b.iter().rev().enumerate() {
            row[shift + idx] = c.clone();
        }
        rows.push(row);
    }
    rows
}

pub(crate) fn determinant(mut m: Vec<Vec<Rat>>) -> Rat {
    let n = m.len();
    let mut det = Rat::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &p;
            for c in col..n {
                let delta = &f * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}

/// Newton-form interpolation through `(x_i, y_i)`.
pub(crate) fn interpolate(xs: &[Rat], ys: &[Rat]) -> UniPoly {
    let n = xs.len();
    let mut dd: Vec<Rat> = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - level]);
        }
    }
    let mut poly = UniPoly::zero();
    for i in (0..n).rev() {
        // poly = poly * (t - x_i) + dd[i]
        poly = poly
            .mul(&UniPoly::new(vec![-xs[i].clone(), Rat::one()]))
            .add(&UniPoly::constant(dd[i].clone()));
    }
    poly
}

impl fmt::Display for BivarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_multipoly())
    }
}
