//! Brill-Noether numbers, point-count bounds and the exception tables that
//! the inequality systems are built from.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{binom_eval, rat, ExactError, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BnError {
    #[error("r = 1 makes the point bound divide by zero")]
    DivisionByZero,
    #[error("{0}")]
    Domain(String),
    #[error("unknown exception table `{0}`; known: {1}")]
    UnknownContext(String, String),
    #[error("table `{name}` holds {arity}-tuples, got {got} values")]
    Arity { name: String, arity: usize, got: usize },
    #[error("the system rho = 0, kd + 1 - g = binom(r + k, k) is singular (rk - r - 1 = 0)")]
    Singular,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// `(r + 1) d - r g - r (r + 1)`.
pub fn rho(d: i64, g: i64, r: i64) -> i128 {
    let (d, g, r) = (d as i128, g as i128, r as i128);
    (r + 1) * d - r * g - r * (r + 1)
}

pub fn rho_rat(d: &Rat, g: &Rat, r: i64) -> Rat {
    let r1 = rat(r + 1);
    &r1 * d - rat(r) * g - rat(r) * r1
}

/// `floor(((r + 1) d - (r - 3)(g - 1)) / (r - 1))`.
pub fn max_points_bound(d: i64, g: i64, r: i64) -> Result<i128, BnError> {
    if r == 1 {
        return Err(BnError::DivisionByZero);
    }
    if r < 2 {
        return Err(BnError::Domain(format!("r must be at least 2, got {r}")));
    }
    let (d, g, r) = (d as i128, g as i128, r as i128);
    Ok(Integer::div_floor(&((r + 1) * d - (r - 3) * (g - 1)), &(r - 1)))
}

/// The bound lowered by 3.
pub fn max_points_guaranteed(d: i64, g: i64, r: i64) -> Result<i128, BnError> {
    Ok(max_points_bound(d, g, r)? - 3)
}

/// `binom(r + k, k) - (k d + 1 - g)` when `k >= 2` and that is nonnegative,
/// else 0.
pub fn expected_vanishing_dim(d: i64, g: i64, r: i64, k: i64) -> Result<BigInt, BnError> {
    if r < 3 || k < 1 {
        return Err(BnError::Domain(format!("need r >= 3 and k >= 1, got r = {r}, k = {k}")));
    }
    let b = binom_eval(r, k)?;
    let hilbert = BigInt::from(k) * d + 1 - g;
    if k >= 2 && hilbert <= b {
        Ok(b - hilbert)
    } else {
        Ok(BigInt::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExceptionTable {
    pub name: &'static str,
    /// Tuple layout, e.g. `(d, g, r)`.
    pub layout: &'static str,
    pub description: &'static str,
    pub entries: &'static [&'static [i64]],
}

impl ExceptionTable {
    pub fn arity(&self) -> usize {
        self.entries[0].len()
    }

    pub fn contains(&self, tuple: &[i64]) -> bool {
        self.entries.contains(&tuple)
    }
}

pub const TABLES: &[ExceptionTable] = &[
    ExceptionTable {
        name: "interpolation_nonspecial",
        layout: "(d, g, r)",
        description: "normal bundle of a general nonspecial BN-curve fails interpolation",
        entries: &[&[5, 2, 3], &[6, 2, 4], &[7, 2, 5]],
    },
    ExceptionTable {
        name: "points_nonspecial",
        layout: "(d, g, r)",
        description: "general nonspecial BN-curve misses the expected number of general points",
        entries: &[&[5, 2, 3], &[7, 2, 5]],
    },
    ExceptionTable {
        name: "quadric_intersection_p3",
        layout: "(d, g)",
        description: "intersection of a general space curve with a quadric is not general",
        entries: &[&[4, 1], &[5, 2], &[6, 2], &[6, 4], &[7, 5], &[8, 6]],
    },
    ExceptionTable {
        name: "plane_intersection_p3",
        layout: "(d, g)",
        description: "intersection of a general space curve with a plane is not general",
        entries: &[&[6, 4]],
    },
    ExceptionTable {
        name: "hyperplane_intersection_p4",
        layout: "(d, g)",
        description: "intersection of a general curve in P^4 with a hyperplane is not general",
        entries: &[&[8, 5], &[9, 6], &[10, 7]],
    },
    ExceptionTable {
        name: "interpolation_p3",
        layout: "(d, g)",
        description: "normal bundle of a general BN space curve fails interpolation",
        entries: &[&[5, 2], &[6, 4]],
    },
    ExceptionTable {
        name: "interpolation_p4",
        layout: "(d, g)",
        description: "normal bundle of a general BN-curve in P^4 fails interpolation",
        entries: &[&[6, 2]],
    },
    ExceptionTable {
        name: "twisted_interpolation_p4",
        layout: "(d, g)",
        description: "twisted normal bundle N(-1) of a general BN-curve in P^4 fails interpolation",
        entries: &[&[6, 2], &[8, 5], &[9, 6], &[10, 7]],
    },
];

pub fn table(name: &str) -> Result<&'static ExceptionTable, BnError> {
    TABLES.iter().find(|t| t.name == name).ok_or_else(|| {
        BnError::UnknownContext(
            name.to_string(),
            TABLES.iter().map(|t| t.name).collect::<Vec<_>>().join(", "),
        )
    })
}

pub fn is_exception(context: &str, tuple: &[i64]) -> Result<bool, BnError> {
    let t = table(context)?;
    if tuple.len() != t.arity() {
        return Err(BnError::Arity {
            name: t.name.to_string(),
            arity: t.arity(),
            got: tuple.len(),
        });
    }
    Ok(t.contains(tuple))
}

/// The point with `rho(d, g, r) = 0` and `k d + 1 - g = binom(r + k, k)`,
/// by Cramer's rule; the determinant is `r k - r - 1`.
pub fn mrc_vertex_demo(r: i64, k: i64) -> Result<(Rat, Rat), BnError> {
    let b = Rat::from(binom_eval(r, k)?);
    let (rr, kk) = (rat(r), rat(k));
    let det = &rr * &kk - &rr - rat(1);
    if det.is_zero() {
        return Err(BnError::Singular);
    }
    let rhs1 = &rr * rat(r + 1);
    let rhs2 = b - rat(1);
    let d = (&rr * &rhs2 - &rhs1) / &det;
    let g = (rat(r + 1) * &rhs2 - &kk * &rhs1) / &det;
    Ok((d, g))
}
