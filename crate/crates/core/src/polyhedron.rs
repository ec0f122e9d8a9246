//! Exact polyhedral engine at fixed parameter values: vertex and edge
//! enumeration, the two-set covering test, and lattice brute force.
//!
//! A polyhedron is a list of rows `normal . x >= offset`. Dimension 0 is
//! allowed; such a polyhedron is either the single empty point or empty,
//! which is how parameter-only systems are evaluated.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dsl::AffineForm;
use crate::exact::{ceil_to_i64, floor_to_i64, rat, ser_rat, ser_rats, Assignment, ExactError, MultiPoly, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polyhedron is unbounded")]
    Unbounded,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("constraint is not affine in the decision variables: {0}")]
    NotAffine(String),
    #[error("coordinate outside the 64-bit range")]
    Overflow,
    #[error("lattice box holds more than {cap} candidate points")]
    TooManyPoints { cap: u128 },
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Row {
    #[serde(serialize_with = "ser_rats")]
    pub normal: Vec<Rat>,
    #[serde(serialize_with = "ser_rat")]
    pub offset: Rat,
}

impl Row {
    pub fn new(normal: Vec<Rat>, offset: Rat) -> Self {
        Row { normal, offset }
    }

    pub fn from_ints(normal: &[i64], offset: i64) -> Self {
        Row::new(normal.iter().map(|&c| rat(c)).collect(), rat(offset))
    }

    /// `normal . x - offset`; nonnegative iff the row holds.
    pub fn slack(&self, x: &[Rat]) -> Rat {
        dot(&self.normal, x) - &self.offset
    }

    pub fn holds(&self, x: &[Rat]) -> bool {
        !self.slack(x).is_negative()
    }

    pub fn is_trivial(&self) -> bool {
        self.normal.iter().all(Zero::is_zero)
    }

    /// Positive rescaling so the largest normal entry has magnitude 1;
    /// `None` for a row that holds everywhere. Rows that hold nowhere become
    /// `0 >= 1`.
    fn normalized(&self) -> Option<Row> {
        let scale = self.normal.iter().map(Signed::abs).max().unwrap_or_else(Rat::zero);
        if scale.is_zero() {
            return self.offset.is_positive().then(|| Row::new(self.normal.clone(), Rat::one()));
        }
        Some(Row::new(
            self.normal.iter().map(|c| c / &scale).collect(),
            &self.offset / &scale,
        ))
    }
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

/// Normalizes, drops always-true rows and keeps only the tightest offset
/// per normal direction.
fn reduce_rows(rows: impl IntoIterator<Item = Row>) -> Vec<Row> {
    let mut best: BTreeMap<Vec<Rat>, Rat> = BTreeMap::new();
    for row in rows.into_iter().filter_map(|r| r.normalized()) {
        best.entry(row.normal)
            .and_modify(|o| {
                if row.offset > *o {
                    *o = row.offset.clone();
                }
            })
            .or_insert(row.offset);
    }
    best.into_iter().map(|(n, o)| Row::new(n, o)).collect()
}

/// Real Fourier-Motzkin elimination of coordinate `j`.
fn fm_eliminate(rows: &[Row], j: usize) -> Vec<Row> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Vec::new();
    for row in rows {
        let c = &row.normal[j];
        if c.is_positive() {
            pos.push(row);
        } else if c.is_negative() {
            neg.push(row);
        } else {
            out.push(drop_coord(row, j));
        }
    }
    for p in &pos {
        for n in &neg {
            let (cp, cn) = (&p.normal[j], -&n.normal[j]);
            let normal: Vec<Rat> = p
                .normal
                .iter()
                .zip(&n.normal)
                .map(|(a, b)| a * &cn + b * cp)
                .collect();
            let offset = &p.offset * &cn + &n.offset * cp;
            out.push(drop_coord(&Row::new(normal, offset), j));
        }
    }
    reduce_rows(out)
}

fn drop_coord(row: &Row, j: usize) -> Row {
    let mut normal = row.normal.clone();
    normal.remove(j);
    Row::new(normal, row.offset.clone())
}

/// Real feasibility of a row system by full elimination.
fn fm_feasible(dim: usize, rows: &[Row]) -> bool {
    let mut rows = reduce_rows(rows.iter().cloned());
    for j in (0..dim).rev() {
        if rows.iter().any(Row::is_trivial) {
            return false;
        }
        rows = fm_eliminate(&rows, j);
    }
    rows.iter().all(|r| !r.offset.is_positive())
}

/// Solves a square system, `None` when singular.
fn solve_square(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Rat::one() / &a[col][col];
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c in col..n {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

pub(crate) fn rank(mut m: Vec<Vec<Rat>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &m[rank][col];
            for c in col..cols {
                let delta = &f * &m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vertex {
    #[serde(serialize_with = "ser_rats")]
    pub coords: Vec<Rat>,
    pub tight_rows: BTreeSet<usize>,
}

impl Vertex {
    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub endpoints: (Vertex, Vertex),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HPolyhedron {
    pub dim: usize,
    pub rows: Vec<Row>,
}

impl HPolyhedron {
    pub fn new(dim: usize, rows: Vec<Row>) -> Result<Self, PolyError> {
        if let Some(r) = rows.iter().find(|r| r.normal.len() != dim) {
            return Err(PolyError::DimensionMismatch {
                expected: dim,
                got: r.normal.len(),
            });
        }
        Ok(HPolyhedron { dim, rows })
    }

    /// Integer rows `(normal, offset)`; panics on ragged input.
    pub fn from_ints(dim: usize, rows: &[(&[i64], i64)]) -> Self {
        HPolyhedron::new(dim, rows.iter().map(|(n, o)| Row::from_ints(n, *o)).collect())
            .expect("rows of the declared dimension")
    }

    /// `lo_j <= x_j <= hi_j`.
    pub fn cube(lo: &[i64], hi: &[i64]) -> Self {
        let dim = lo.len();
        let mut rows = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            let mut e = vec![0; dim];
            e[j] = 1;
            rows.push(Row::from_ints(&e, lo[j]));
            e[j] = -1;
            rows.push(Row::from_ints(&e, -hi[j]));
        }
        HPolyhedron { dim, rows }
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.rows.iter().all(|r| r.holds(x))
    }

    pub fn contains_int(&self, x: &[i64]) -> bool {
        let x: Vec<Rat> = x.iter().map(|&v| rat(v)).collect();
        self.contains(&x)
    }

    pub fn intersect(&self, other: &HPolyhedron) -> Result<HPolyhedron, PolyError> {
        check_dim(self.dim, other.dim)?;
        Ok(HPolyhedron {
            dim: self.dim,
            rows: self.rows.iter().chain(&other.rows).cloned().collect(),
        })
    }

    pub fn is_empty(&self) -> bool {
        !fm_feasible(self.dim, &self.rows)
    }

    /// Truth value of a dimension-0 system.
    pub fn constant_verdict(&self) -> Option<bool> {
        (self.dim == 0).then(|| self.contains(&[]))
    }

    /// Substitutes values for the leading coordinates.
    pub fn fix_leading(&self, values: &[Rat]) -> HPolyhedron {
        let n = values.len();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let shift = dot(&r.normal[..n], values);
                Row::new(r.normal[n..].to_vec(), &r.offset - shift)
            })
            .collect();
        HPolyhedron {
            dim: self.dim - n,
            rows,
        }
    }

    /// Real projection onto the first `keep` coordinates.
    pub fn project_to_leading(&self, keep: usize) -> HPolyhedron {
        let mut rows = reduce_rows(self.rows.iter().cloned());
        for j in (keep..self.dim).rev() {
            rows = fm_eliminate(&rows, j);
        }
        HPolyhedron { dim: keep, rows }
    }

    /// The recession cone is `{0}`, decided exactly. The empty set counts
    /// as bounded.
    pub fn check_bounded(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let cone: Vec<Row> = self
            .rows
            .iter()
            .map(|r| Row::new(r.normal.clone(), Rat::zero()))
            .collect();
        for j in 0..self.dim {
            for s in [1i64, -1] {
                let mut e = vec![Rat::zero(); self.dim];
                e[j] = rat(s);
                let mut rows = cone.clone();
                rows.push(Row::new(e, Rat::one()));
                if fm_feasible(self.dim, &rows) {
                    return false;
                }
            }
        }
        true
    }

    fn require_bounded(&self) -> Result<(), PolyError> {
        if self.check_bounded() {
            Ok(())
        } else {
            Err(PolyError::Unbounded)
        }
    }

    /// Basic feasible points, deduplicated and sorted by coordinates.
    pub fn enumerate_vertices(&self) -> Result<Vec<Vertex>, PolyError> {
        self.require_bounded()?;
        Ok(self.vertices_unchecked())
    }

    fn vertices_unchecked(&self) -> Vec<Vertex> {
        let candidates: Vec<usize> = (0..self.rows.len()).filter(|&i| !self.rows[i].is_trivial()).collect();
        let mut found: BTreeSet<Vec<Rat>> = BTreeSet::new();
        for subset in candidates.iter().copied().combinations(self.dim) {
            let a: Vec<Vec<Rat>> = subset.iter().map(|&i| self.rows[i].normal.clone()).collect();
            let b: Vec<Rat> = subset.iter().map(|&i| self.rows[i].offset.clone()).collect();
            if let Some(x) = solve_square(a, b) {
                if self.contains(&x) {
                    found.insert(x);
                }
            }
        }
        found
            .into_iter()
            .map(|coords| {
                let tight_rows = (0..self.rows.len())
                    .filter(|&i| self.rows[i].slack(&coords).is_zero())
                    .collect();
                Vertex { coords, tight_rows }
            })
            .collect()
    }

    /// One-dimensional faces as vertex pairs.
    pub fn enumerate_edges(&self) -> Result<Vec<Edge>, PolyError> {
        let vertices = self.enumerate_vertices()?;
        Ok(self.edges_between(&vertices))
    }

    /// Two vertices span an edge iff their common tight rows have rank
    /// `dim - 1`: that face has dimension at most one and holds both.
    pub fn edges_between(&self, vertices: &[Vertex]) -> Vec<Edge> {
        let mut edges = Vec::new();
        if self.dim == 0 {
            return edges;
        }
        for (i, u) in vertices.iter().enumerate() {
            for v in &vertices[i + 1..] {
                let common: Vec<Vec<Rat>> = u
                    .tight_rows
                    .intersection(&v.tight_rows)
                    .map(|&r| self.rows[r].normal.clone())
                    .collect();
                if common.len() >= self.dim - 1 && rank(common) == self.dim - 1 {
                    edges.push(Edge {
                        endpoints: (u.clone(), v.clone()),
                    });
                }
            }
        }
        edges
    }

    /// Integer bounds of the bounding box, `None` when empty.
    pub fn integer_box(&self) -> Result<Option<Vec<(i64, i64)>>, PolyError> {
        let vertices = self.enumerate_vertices()?;
        if vertices.is_empty() {
            return Ok(None);
        }
        let mut out = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let lo = vertices.iter().map(|v| &v.coords[j]).min().expect("nonempty");
            let hi = vertices.iter().map(|v| &v.coords[j]).max().expect("nonempty");
            let lo = ceil_to_i64(lo).ok_or(PolyError::Overflow)?;
            let hi = floor_to_i64(hi).ok_or(PolyError::Overflow)?;
            if lo > hi {
                return Ok(None);
            }
            out.push((lo, hi));
        }
        Ok(Some(out))
    }

    /// Lattice points in lexicographic order.
    pub fn integer_points(&self) -> Result<LatticePoints<'_>, PolyError> {
        let bounds = self.integer_box()?;
        Ok(LatticePoints::new(self, bounds))
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), PolyError> {
    if expected == got {
        Ok(())
    } else {
        Err(PolyError::DimensionMismatch { expected, got })
    }
}

/// Odometer over an integer box, filtered by membership.
pub struct LatticePoints<'a> {
    poly: &'a HPolyhedron,
    bounds: Vec<(i64, i64)>,
    next: Option<Vec<i64>>,
}

impl<'a> LatticePoints<'a> {
    fn new(poly: &'a HPolyhedron, bounds: Option<Vec<(i64, i64)>>) -> Self {
        let (bounds, next) = match bounds {
            Some(b) => {
                let start = b.iter().map(|&(lo, _)| lo).collect();
                (b, Some(start))
            }
            None => (Vec::new(), None),
        };
        LatticePoints { poly, bounds, next }
    }

    /// Number of box points scanned, saturating.
    pub fn box_size(&self) -> u128 {
        if self.next.is_none() {
            return 0;
        }
        self.bounds
            .iter()
            .map(|&(lo, hi)| (hi as i128 - lo as i128 + 1) as u128)
            .fold(1u128, |a, b| a.saturating_mul(b))
    }

    fn advance(&mut self) {
        let Some(cur) = self.next.as_mut() else { return };
        for j in (0..cur.len()).rev() {
            if cur[j] < self.bounds[j].1 {
                cur[j] += 1;
                return;
            }
            cur[j] = self.bounds[j].0;
        }
        self.next = None;
    }
}

impl Iterator for LatticePoints<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        loop {
            let cur = self.next.clone()?;
            self.advance();
            if self.poly.contains_int(&cur) {
                return Some(cur);
            }
        }
    }
}

/// Rows `p >= 0` of a parametric system, evaluated at `params` over the
/// decision variables `vars` (in that coordinate order).
pub fn instantiate(polys: &[MultiPoly], vars: &[String], params: &Assignment) -> Result<HPolyhedron, PolyError> {
    let mut rows = Vec::with_capacity(polys.len());
    for p in polys {
        let form = AffineForm::decompose(p, vars).map_err(|_| PolyError::NotAffine(p.to_string()))?;
        let mut normal = Vec::with_capacity(vars.len());
        for v in vars {
            normal.push(match form.coeffs.get(v) {
                Some(c) => c.eval(params)?,
                None => Rat::zero(),
            });
        }
        rows.push(Row::new(normal, -form.constant.eval(params)?));
    }
    Ok(HPolyhedron { dim: vars.len(), rows })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval {
    #[serde(serialize_with = "ser_rat")]
    pub lo: Rat,
    #[serde(serialize_with = "ser_rat")]
    pub hi: Rat,
}

/// Parameters `t` in `[0, 1]` with `u + t (v - u)` inside `c`.
fn segment_interval(c: &HPolyhedron, u: &[Rat], v: &[Rat]) -> Option<Interval> {
    let dir: Vec<Rat> = v.iter().zip(u).map(|(a, b)| a - b).collect();
    let (mut lo, mut hi) = (Rat::zero(), Rat::one());
    for row in &c.rows {
        let alpha = row.slack(u);
        let beta = dot(&row.normal, &dir);
        if beta.is_positive() {
            let t = -&alpha / &beta;
            if t > lo {
                lo = t;
            }
        } else if beta.is_negative() {
            let t = &alpha / -&beta;
            if t < hi {
                hi = t;
            }
        } else if alpha.is_negative() {
            return None;
        }
    }
    (lo <= hi).then_some(Interval { lo, hi })
}

fn intersect_intervals(a: &Option<Interval>, b: &Option<Interval>) -> Option<Interval> {
    let (a, b) = (a.as_ref()?, b.as_ref()?);
    let lo = (&a.lo).max(&b.lo).clone();
    let hi = (&a.hi).min(&b.hi).clone();
    (lo <= hi).then_some(Interval { lo, hi })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexMembership {
    #[serde(serialize_with = "ser_rats")]
    pub coords: Vec<Rat>,
    pub integral: bool,
    pub in_c1: bool,
    pub in_c2: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeCheck {
    #[serde(serialize_with = "ser_rats")]
    pub from: Vec<Rat>,
    #[serde(serialize_with = "ser_rats")]
    pub to: Vec<Rat>,
    /// Joins a vertex outside `C1` to a vertex outside `C2`.
    pub critical: bool,
    /// Edge-parameter intervals (`t = 0` at `from`) inside each set.
    pub in_c1: Option<Interval>,
    pub in_c2: Option<Interval>,
    pub meets_intersection: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CoveringVerdict {
    Covered,
    NotCovered {
        #[serde(serialize_with = "ser_rats")]
        witness: Vec<Rat>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoveringReport {
    pub verdict: CoveringVerdict,
    /// `P` is empty.
    pub vacuous: bool,
    pub vertices: Vec<VertexMembership>,
    pub edges: Vec<EdgeCheck>,
}

impl CoveringReport {
    pub fn is_covered(&self) -> bool {
        self.verdict == CoveringVerdict::Covered
    }
}

/// Decides `P` within `C1 u C2` for bounded `P`: every vertex lies in one
/// of the sets, and every critical edge meets `C1 n C2`.
pub fn covering_check(p: &HPolyhedron, c1: &HPolyhedron, c2: &HPolyhedron) -> Result<CoveringReport, PolyError> {
    check_dim(p.dim, c1.dim)?;
    check_dim(p.dim, c2.dim)?;
    let vertices = p.enumerate_vertices()?;
    let memberships: Vec<VertexMembership> = vertices
        .iter()
        .map(|v| VertexMembership {
            coords: v.coords.clone(),
            integral: v.is_integral(),
            in_c1: c1.contains(&v.coords),
            in_c2: c2.contains(&v.coords),
        })
        .collect();
    let mut witness = memberships
        .iter()
        .find(|m| !m.in_c1 && !m.in_c2)
        .map(|m| m.coords.clone());

    let mut edges = Vec::new();
    for edge in p.edges_between(&vertices) {
        let (u, v) = (&edge.endpoints.0.coords, &edge.endpoints.1.coords);
        let (u1, u2, v1, v2) = (c1.contains(u), c2.contains(u), c1.contains(v), c2.contains(v));
        let critical = (!u1 && !v2) || (!v1 && !u2);
        let in_c1 = segment_interval(c1, u, v);
        let in_c2 = segment_interval(c2, u, v);
        let meets = intersect_intervals(&in_c1, &in_c2).is_some();
        if critical && !meets && witness.is_none() {
            // Both endpoints are covered, so each set's interval touches
            // its own end of [0, 1]; the gap between them is uncovered.
            if let (Some(a), Some(b)) = (&in_c1, &in_c2) {
                let gap = if a.lo.is_zero() {
                    (&a.hi + &b.lo) / rat(2)
                } else {
                    (&b.hi + &a.lo) / rat(2)
                };
                witness = Some(u.iter().zip(v).map(|(x, y)| x + (y - x) * &gap).collect());
            }
        }
        edges.push(EdgeCheck {
            from: u.clone(),
            to: v.clone(),
            critical,
            in_c1,
            in_c2,
            meets_intersection: meets,
        });
    }
    Ok(CoveringReport {
        verdict: match witness {
            Some(witness) => CoveringVerdict::NotCovered { witness },
            None => CoveringVerdict::Covered,
        },
        vacuous: vertices.is_empty(),
        vertices: memberships,
        edges,
    })
}

/// Constraints of one goal block over `(outer, inner)` coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSystem {
    pub outer_dim: usize,
    pub poly: HPolyhedron,
}

impl BlockSystem {
    pub fn at(&self, outer: &[i64]) -> HPolyhedron {
        let values: Vec<Rat> = outer.iter().map(|&v| rat(v)).collect();
        self.poly.fix_leading(&values)
    }

    /// First lattice point of the block at `outer`, if any.
    pub fn solve_at(&self, outer: &[i64]) -> Result<Option<Vec<i64>>, PolyError> {
        let inner = self.at(outer);
        Ok(inner.integer_points()?.next())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoalWitness {
    pub base: Vec<i64>,
    pub block: usize,
    pub inner: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BruteForce {
    Satisfied {
        points_checked: usize,
        witnesses: Vec<GoalWitness>,
    },
    Failed {
        points_checked: usize,
        counterexample: Vec<i64>,
    },
}

impl BruteForce {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, BruteForce::Satisfied { .. })
    }
}

pub fn brute_force_goal(base: &HPolyhedron, blocks: &[BlockSystem]) -> Result<BruteForce, PolyError> {
    brute_force_goal_capped(base, blocks, u128::MAX)
}

/// As [`brute_force_goal`], refusing base boxes with more than `cap` points.
/// Base points are checked in parallel; the first failure in lexicographic
/// order is reported.
pub fn brute_force_goal_capped(base: &HPolyhedron, blocks: &[BlockSystem], cap: u128) -> Result<BruteForce, PolyError> {
    for b in blocks {
        check_dim(base.dim, b.outer_dim)?;
    }
    let lattice = base.integer_points()?;
    if lattice.box_size() > cap {
        return Err(PolyError::TooManyPoints { cap });
    }
    let points: Vec<Vec<i64>> = lattice.collect();
    let results: Vec<Result<Option<GoalWitness>, PolyError>> = points
        .par_iter()
        .map(|x| {
            for (i, b) in blocks.iter().enumerate() {
                if let Some(inner) = b.solve_at(x)? {
                    return Ok(Some(GoalWitness {
                        base: x.clone(),
                        block: i,
                        inner,
                    }));
                }
            }
            Ok(None)
        })
        .collect();
    let mut witnesses = Vec::with_capacity(points.len());
    for (n, (x, res)) in points.iter().zip(results).enumerate() {
        match res? {
            Some(w) => witnesses.push(w),
            None => {
                return Ok(BruteForce::Failed {
                    points_checked: n + 1,
                    counterexample: x.clone(),
                })
            }
        }
    }
    Ok(BruteForce::Satisfied {
        points_checked: points.len(),
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat_frac, BINOM, PARAM_K, PARAM_R};

    fn unit_triangle() -> HPolyhedron {
        HPolyhedron::from_ints(2, &[(&[1, 0], 0), (&[0, 1], 0), (&[-1, -1], -1)])
    }

    fn coords(vs: &[Vertex]) -> Vec<Vec<Rat>> {
        vs.iter().map(|v| v.coords.clone()).collect()
    }

    fn pt(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat(x)).collect()
    }

    fn params(r: i64, k: Option<i64>) -> Assignment {
        let mut a = Assignment::new();
        a.insert(PARAM_R.into(), rat(r));
        if let Some(k) = k {
            a.insert(PARAM_K.into(), rat(k));
        }
        a
    }

    #[test]
    fn instantiation() {
        let (d, g, r) = (MultiPoly::var("d"), MultiPoly::var("g"), MultiPoly::var("r"));
        let rho = &(&(&(&r + &MultiPoly::int(1)) * &d) - &(&r * &g)) - &(&r * &(&r + &MultiPoly::int(1)));
        let vars = vec!["d".to_string(), "g".to_string()];
        let p = instantiate(&[rho], &vars, &params(3, None)).unwrap();
        assert_eq!(p.rows, vec![Row::from_ints(&[4, -3], 12)]);

        let bd = &MultiPoly::binom() - &(&MultiPoly::var("k") * &d);
        let p = instantiate(&[bd], &vars[..1], &params(17, Some(4))).unwrap();
        assert_eq!(p.rows, vec![Row::from_ints(&[-4], -5985)]);

        let only = &r - &MultiPoly::int(5);
        let p = instantiate(std::slice::from_ref(&only), &[], &params(7, None)).unwrap();
        assert_eq!(p.constant_verdict(), Some(true));
        let p = instantiate(&[only], &[], &params(2, None)).unwrap();
        assert_eq!(p.constant_verdict(), Some(false));

        let err = instantiate(&[MultiPoly::var(BINOM)], &[], &params(3, None)).unwrap_err();
        assert!(matches!(err, PolyError::Exact(_)));
        let sq = &d * &d;
        assert!(matches!(instantiate(&[sq], &vars, &params(3, None)), Err(PolyError::NotAffine(_))));
    }

    #[test]
    fn boundedness() {
        assert!(HPolyhedron::cube(&[0, 0], &[1, 1]).check_bounded());
        assert!(!HPolyhedron::from_ints(1, &[(&[1], 0)]).check_bounded());
        assert!(unit_triangle().check_bounded());
        // Empty, with an unbounded recession cone.
        let empty = HPolyhedron::from_ints(2, &[(&[1, 0], 0), (&[0, 0], 1)]);
        assert!(empty.is_empty());
        assert!(empty.check_bounded());
        assert_eq!(
            HPolyhedron::from_ints(1, &[(&[1], 0)]).enumerate_vertices(),
            Err(PolyError::Unbounded)
        );
    }

    #[test]
    fn vertices_and_edges() {
        let sq = HPolyhedron::cube(&[0, 0], &[3, 3]);
        assert_eq!(
            coords(&sq.enumerate_vertices().unwrap()),
            vec![pt(&[0, 0]), pt(&[0, 3]), pt(&[3, 0]), pt(&[3, 3])]
        );
        assert_eq!(sq.enumerate_edges().unwrap().len(), 4);
        let tri = unit_triangle();
        assert_eq!(
            coords(&tri.enumerate_vertices().unwrap()),
            vec![pt(&[0, 0]), pt(&[0, 1]), pt(&[1, 0])]
        );
        assert_eq!(tri.enumerate_edges().unwrap().len(), 3);
        let point = HPolyhedron::cube(&[2, 5], &[2, 5]);
        assert_eq!(point.enumerate_vertices().unwrap().len(), 1);
        assert_eq!(point.enumerate_edges().unwrap().len(), 0);
    }

    #[test]
    fn mrc_vertex_at_17_4() {
        // rho = 0 and 4d + 1 - g = 5985, each as two rows.
        let p = HPolyhedron::from_ints(
            2,
            &[
                (&[18, -17], 306),
                (&[-18, 17], -306),
                (&[4, -1], 5984),
                (&[-4, 1], -5984),
            ],
        );
        let vs = p.enumerate_vertices().unwrap();
        assert_eq!(coords(&vs), vec![vec![rat_frac(50711, 25), rat_frac(53244, 25)]]);
        assert!(!vs[0].is_integral());
        assert_eq!(vs[0].tight_rows.len(), 4);
    }

    #[test]
    fn covering_examples() {
        let sq = HPolyhedron::cube(&[0, 0], &[3, 3]);
        let x_le = |c: i64| HPolyhedron::from_ints(2, &[(&[-1, 0], -c)]);
        let x_ge = |c: i64| HPolyhedron::from_ints(2, &[(&[1, 0], c)]);
        let rep = covering_check(&sq, &x_le(2), &x_ge(1)).unwrap();
        assert!(rep.is_covered());
        assert!(!rep.vacuous);
        let rep = covering_check(&sq, &x_le(1), &x_ge(2)).unwrap();
        assert_eq!(
            rep.verdict,
            CoveringVerdict::NotCovered {
                witness: vec![rat_frac(3, 2), rat(0)]
            }
        );
        let point = HPolyhedron::cube(&[0, 0], &[0, 0]);
        let rep = covering_check(&point, &x_le(1), &x_ge(2)).unwrap();
        assert!(rep.is_covered());
        assert!(rep.edges.is_empty());
        let empty = HPolyhedron::from_ints(2, &[(&[1, 0], 1), (&[-1, 0], 0), (&[0, 1], 0), (&[0, -1], 0)]);
        let rep = covering_check(&empty, &x_le(1), &x_ge(2)).unwrap();
        assert!(rep.is_covered() && rep.vacuous);
        // A vertex in neither set is its own witness.
        let rep = covering_check(&sq, &x_le(-1), &x_ge(5)).unwrap();
        assert_eq!(rep.verdict, CoveringVerdict::NotCovered { witness: pt(&[0, 0]) });
    }

    #[test]
    fn lattice_points() {
        let tri: Vec<Vec<i64>> = unit_triangle().integer_points().unwrap().collect();
        assert_eq!(tri, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(HPolyhedron::cube(&[0, 0], &[2, 2]).integer_points().unwrap().count(), 9);
        // 11/5 <= x <= 7/3
        let gap = HPolyhedron::from_ints(1, &[(&[5], 11), (&[-3], -7)]);
        assert_eq!(gap.integer_points().unwrap().count(), 0);
        assert!(!gap.is_empty());
    }

    #[test]
    fn brute_force_examples() {
        let empty = HPolyhedron::from_ints(1, &[(&[1], 1), (&[-1], 0)]);
        let block = BlockSystem {
            outer_dim: 1,
            poly: HPolyhedron::from_ints(2, &[(&[1, -1], 0), (&[-1, 1], 0)]),
        };
        assert_eq!(
            brute_force_goal(&empty, std::slice::from_ref(&block)).unwrap(),
            BruteForce::Satisfied {
                points_checked: 0,
                witnesses: vec![]
            }
        );
        let base = HPolyhedron::cube(&[0], &[1]);
        match brute_force_goal(&base, std::slice::from_ref(&block)).unwrap() {
            BruteForce::Satisfied { witnesses, .. } => {
                let inner: Vec<Vec<i64>> = witnesses.iter().map(|w| w.inner.clone()).collect();
                assert_eq!(inner, vec![vec![0], vec![1]]);
            }
            other => panic!("{other:?}"),
        }
        // exists y: 2y = x fails first at x = 1.
        let half = BlockSystem {
            outer_dim: 1,
            poly: HPolyhedron::from_ints(2, &[(&[1, -2], 0), (&[-1, 2], 0)]),
        };
        let base = HPolyhedron::cube(&[0], &[4]);
        assert_eq!(
            brute_force_goal(&base, &[half]).unwrap(),
            BruteForce::Failed {
                points_checked: 2,
                counterexample: vec![1]
            }
        );
    }

    #[test]
    fn projection() {
        // 0 <= y <= x <= 2 projected onto x.
        let p = HPolyhedron::from_ints(2, &[(&[0, 1], 0), (&[1, -1], 0), (&[-1, 0], -2)]);
        let x = p.project_to_leading(1);
        assert!(x.contains(&pt(&[2])) && x.contains(&pt(&[0])));
        assert!(!x.contains(&pt(&[3])) && !x.contains(&pt(&[-1])));
        let y_first = HPolyhedron::from_ints(2, &[(&[1, 0], 0), (&[-1, 1], 0), (&[0, -1], -2)]);
        let y = y_first.project_to_leading(1);
        assert_eq!(coords(&y.enumerate_vertices().unwrap()), vec![pt(&[0]), pt(&[2])]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rows(dim: usize, max: usize) -> impl Strategy<Value = Vec<Row>> {
            prop::collection::vec(
                (prop::collection::vec(-5i64..=5, dim), -5i64..=5)
                    .prop_map(|(n, o)| Row::from_ints(&n, o)),
                1..=max,
            )
        }

        fn bounded(dim: usize) -> impl Strategy<Value = HPolyhedron> {
            rows(dim, 8).prop_map(move |rs| {
                let p = HPolyhedron { dim, rows: rs };
                if p.check_bounded() {
                    p
                } else {
                    let mut rows = p.rows;
                    rows.extend(HPolyhedron::cube(&vec![-4; dim], &vec![4; dim]).rows);
                    HPolyhedron { dim, rows }
                }
            })
        }

        /// Cramer's-rule vertex oracle over all row subsets.
        fn oracle_vertices(p: &HPolyhedron) -> BTreeSet<Vec<Rat>> {
            use crate::positivity::bivariate::determinant;
            let mut out = BTreeSet::new();
            for subset in (0..p.rows.len()).combinations(p.dim) {
                let a: Vec<Vec<Rat>> = subset.iter().map(|&i| p.rows[i].normal.clone()).collect();
                let det = determinant(a.clone());
                if det.is_zero() {
                    continue;
                }
                let x: Vec<Rat> = (0..p.dim)
                    .map(|c| {
                        let mut m = a.clone();
                        for (r, &i) in subset.iter().enumerate() {
                            m[r][c] = p.rows[i].offset.clone();
                        }
                        determinant(m) / &det
                    })
                    .collect();
                if p.rows.iter().all(|r| r.holds(&x)) {
                    out.insert(x);
                }
            }
            out
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(150))]

            #[test]
            fn vertices_match_oracle(p in (2usize..=3).prop_flat_map(bounded)) {
                let vs = p.enumerate_vertices().unwrap();
                for v in &vs {
                    prop_assert!(p.contains(&v.coords));
                    let tight: Vec<Vec<Rat>> = v.tight_rows.iter().map(|&i| p.rows[i].normal.clone()).collect();
                    prop_assert_eq!(rank(tight), p.dim);
                }
                let found: BTreeSet<Vec<Rat>> = vs.iter().map(|v| v.coords.clone()).collect();
                prop_assert_eq!(&found, &oracle_vertices(&p));
                // Each row's minimum over the vertices respects its offset.
                if !vs.is_empty() {
                    for row in &p.rows {
                        let min = vs.iter().map(|v| dot(&row.normal, &v.coords)).min().unwrap();
                        prop_assert!(min >= row.offset);
                    }
                }
                prop_assert_eq!(vs.is_empty(), p.is_empty());
            }

            #[test]
            fn lattice_matches_box_scan(p in (1usize..=3).prop_flat_map(bounded)) {
                let got: Vec<Vec<i64>> = p.integer_points().unwrap().collect();
                let mut want = Vec::new();
                for idx in 0..25i64.pow(p.dim as u32) {
                    let x: Vec<i64> = (0..p.dim).map(|j| (idx / 25i64.pow((p.dim - 1 - j) as u32)) % 25 - 12).collect();
                    if p.contains_int(&x) {
                        want.push(x);
                    }
                }
                prop_assert_eq!(got, want);
            }

            #[test]
            fn covering_is_symmetric_and_witnessed(
                p in bounded(2),
                c1 in rows(2, 3),
                c2 in rows(2, 3),
            ) {
                let c1 = HPolyhedron { dim: 2, rows: c1 };
                let c2 = HPolyhedron { dim: 2, rows: c2 };
                let a = covering_check(&p, &c1, &c2).unwrap();
                let b = covering_check(&p, &c2, &c1).unwrap();
                prop_assert_eq!(a.is_covered(), b.is_covered());
                if let CoveringVerdict::NotCovered { witness } = &a.verdict {
                    prop_assert!(p.contains(witness));
                    prop_assert!(!c1.contains(witness) && !c2.contains(witness));
                }
            }
        }
    }
}
