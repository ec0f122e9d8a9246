//! Newton polygon of a bivariate polynomial and its outer monomials.
//!
//! A monomial `r^i k^j` is *outer* when `(i, j)` maximizes `a*i + b*j` over
//! the support for some `a, b > 0`. These are the points on the north-east
//! boundary of the hull, edge interiors included; they are the terms that can
//! dominate as `r, k -> inf` together.

use num_traits::Signed;
use serde::Serialize;

use super::bivariate::BivarPoly;
use super::PositivityError;
use crate::exact::{rat, ser_rat, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OuterMonomial {
    pub r_exp: usize,
    pub k_exp: usize,
    #[serde(serialize_with = "ser_rat")]
    pub coeff: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NewtonPolygonReport {
    /// Support of the polynomial, lexicographic.
    pub points: Vec<(usize, usize)>,
    /// Hull vertices, counter-clockwise from the lexicographically least.
    pub hull: Vec<(usize, usize)>,
    pub outer: Vec<OuterMonomial>,
    pub interpretation: &'static str,
    pub all_outer_positive: bool,
}

const INTERPRETATION: &str =
    "outer = support points maximizing a*i + b*j for some a > 0, b > 0 (north-east hull boundary, edge interiors included)";

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull vertices (collinear points dropped), counter-clockwise.
pub fn convex_hull(points: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut pts: Vec<(i64, i64)> = points.iter().map(|&(i, j)| (i as i64, j as i64)).collect();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts.into_iter().map(|(i, j)| (i as usize, j as usize)).collect();
    }
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.into_iter().map(|(i, j)| (i as usize, j as usize)).collect()
}

/// Whether `p` maximizes `i + mu*j` over `support` for some `mu > 0`.
fn is_outer(p: (usize, usize), support: &[(usize, usize)]) -> bool {
    let (pi, pj) = (p.0 as i64, p.1 as i64);
    // Feasible mu form an interval [lo, hi] intersected with (0, inf).
    let mut lo: Option<Rat> = None;
    let mut hi: Option<Rat> = None;
    for &(qi, qj) in support {
        let (qi, qj) = (qi as i64, qj as i64);
        let di = pi - qi;
        let dj = pj - qj;
        // Need di + mu*dj >= 0.
        if dj == 0 {
            if di < 0 {
                return false;
            }
        } else if dj > 0 {
            let bound = Rat::new((-di).into(), dj.into());
            if lo.as_ref().is_none_or(|l| bound > *l) {
                lo = Some(bound);
            }
        } else {
            let bound = Rat::new(di.into(), (-dj).into());
            if hi.as_ref().is_none_or(|h| bound < *h) {
                hi = Some(bound);
            }
        }
    }
    match (lo, hi) {
        (_, Some(h)) if !h.is_positive() => false,
        (Some(l), Some(h)) => l <= h,
        _ => true,
    }
}

pub fn newton_outer(p: &BivarPoly) -> Result<NewtonPolygonReport, PositivityError> {
    if p.is_zero() {
        return Err(PositivityError::ZeroPolynomial);
    }
    let points: Vec<(usize, usize)> = p.terms().map(|(i, j, _)| (i, j)).collect();
    let hull = convex_hull(&points);
    let outer: Vec<OuterMonomial> = points
        .iter()
        .filter(|&&q| is_outer(q, &points))
        .map(|&(i, j)| OuterMonomial {
            r_exp: i,
            k_exp: j,
            coeff: p.coeff(i, j),
        })
        .collect();
    let all_outer_positive = outer.iter().all(|m| m.coeff > rat(0));
    Ok(NewtonPolygonReport {
        points,
        hull,
        outer,
        interpretation: INTERPRETATION,
        all_outer_positive,
    })
}
