//! Dense univariate polynomials over the rationals and Sturm chains.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::exact::{rat, Rat};

/// Coefficients from the constant term upwards; never has a zero leading
/// coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct UniPoly {
    coeffs: Vec<Rat>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        UniPoly::new(coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn zero() -> Self {
        UniPoly::default()
    }

    pub fn constant(c: Rat) -> Self {
        UniPoly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn lead(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        self.coeffs
            .iter()
            .rev()
            .fold(Rat::zero(), |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * rat(i as i64))
                .collect(),
        )
    }

    pub fn scale(&self, c: &Rat) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|x| -x).collect())
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        UniPoly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &UniPoly) -> (UniPoly, UniPoly) {
        let dl = divisor.lead().expect("division by the zero polynomial").clone();
        let dd = divisor.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (UniPoly::zero(), self.clone());
        }
        let mut quot = vec![Rat::zero(); rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let factor = &rem[i] / &dl;
            if factor.is_zero() {
                continue;
            }
            for (j, c) in divisor.coeffs.iter().enumerate() {
                rem[i - dd + j] -= &factor * c;
            }
            quot[i - dd] = factor;
        }
        rem.truncate(dd);
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    pub fn monic(&self) -> UniPoly {
        match self.lead() {
            Some(l) => self.scale(&(Rat::one() / l)),
            None => UniPoly::zero(),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `self / gcd(self, self')`, with the same sign of leading coefficient.
    pub fn square_free_part(&self) -> UniPoly {
        if self.is_constant() {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0
    }

    /// `1 + max |c_i / c_n|`; every complex root has modulus strictly below
    /// it. Zero for constants.
    pub fn cauchy_bound(&self) -> Rat {
        match self.degree() {
            None | Some(0) => Rat::zero(),
            Some(n) => {
                let lead = self.coeffs[n].abs();
                let max = self.coeffs[..n]
                    .iter()
                    .map(|c| c.abs() / &lead)
                    .max()
                    .unwrap_or_else(Rat::zero);
                Rat::one() + max
            }
        }
    }

    /// Sign of `self(t)` as `t -> +inf` (or `-inf`).
    pub fn sign_at_infinity(&self, positive: bool) -> i8 {
        match (self.lead(), self.degree()) {
            (None, _) => 0,
            (Some(l), Some(n)) => {
                let s: i8 = if l.is_positive() { 1 } else { -1 };
                if positive || n % 2 == 0 {
                    s
                } else {
                    -s
                }
            }
            _ => unreachable!(),
        }
    }

    pub fn sturm_chain(&self) -> SturmChain {
        SturmChain::new(self)
    }

    /// Number of distinct real roots in `(lo, +inf)`.
    pub fn count_roots_above(&self, lo: &Rat) -> usize {
        let chain = self.square_free_part().sturm_chain();
        chain.variations_at(lo) - chain.variations_at_infinity(true)
    }

    /// Least rational upper bound (to within `1/2^bits`) of the largest real
    /// root, or `None` if there is no real root.
    pub fn largest_root_upper_bound(&self, bits: u32) -> Option<Rat> {
        let sf = self.square_free_part();
        if sf.is_constant() {
            return None;
        }
        let chain = sf.sturm_chain();
        let c = sf.cauchy_bound();
        let (mut lo, mut hi) = (-c.clone(), c);
        if chain.count_roots(&lo, &hi) == 0 {
            return None;
        }
        let width = Rat::new(1.into(), num_bigint::BigInt::one() << bits);
        while &hi - &lo > width {
            let mid = (&lo + &hi) / rat(2);
            if chain.count_roots(&mid, &hi) > 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            match (first, c.is_negative()) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            first = false;
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if i == 1 {
                        write!(f, "t")?;
                    } else {
                        write!(f, "t^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Signed remainder sequence `p, p', -rem(p, p'), ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SturmChain {
    pub polys: Vec<UniPoly>,
}

impl SturmChain {
    pub fn new(p: &UniPoly) -> Self {
        let mut polys = vec![p.clone()];
        let d = p.derivative();
        if !d.is_zero() {
            polys.push(d);
            loop {
                let n = polys.len();
                let (_, r) = polys[n - 2].div_rem(&polys[n - 1]);
                if r.is_zero() {
                    break;
                }
                polys.push(r.neg());
            }
        }
        SturmChain { polys }
    }

    fn variations(signs: impl Iterator<Item = i8>) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for s in signs.filter(|&s| s != 0) {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    pub fn variations_at(&self, t: &Rat) -> usize {
        Self::variations(self.polys.iter().map(|p| {
            let v = p.eval(t);
            if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            }
        }))
    }

    pub fn variations_at_infinity(&self, positive: bool) -> usize {
        Self::variations(self.polys.iter().map(|p| p.sign_at_infinity(positive)))
    }

    /// Distinct roots in `(a, b]` of a square-free chain head.
    pub fn count_roots(&self, a: &Rat, b: &Rat) -> usize {
        self.variations_at(a).saturating_sub(self.variations_at(b))
    }
}
