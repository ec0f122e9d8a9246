//! End-to-end driver: eliminate, certify, patch.
//!
//! For every goal disjunct the block variables are eliminated in integer
//! mode. Each resulting constraint `Q >= 0` becomes an obligation:
//!
//! * if `Q` involves only parameters, it holds wherever `Q + 1 > 0` (coefficients
//!   are coprime integers, so `Q` is integer-valued);
//! * if `Q` also involves base variables, it must hold on the whole base
//!   polytope. The base variables are eliminated in real mode from
//!   `base + {-Q - 1 >= 0}`; the obligation holds wherever some resulting
//!   constraint `T` has `-T > 0`, since then no base point violates `Q`.
//!
//! Each positivity target is certified on the quadrant `r >= r0, k >= k0`. When
//! that fails, certificates on shifted quadrants plus univariate ray checks on
//! the leftover rows and columns confine the failure set to a finite box,
//! which is then filtered by exact evaluation. Targets involving `B` are
//! specialized in `k` over a configured range; beyond it they rely on the
//! problem's majorants. Parameter points where no disjunct is known to hold
//! are patched by [`check_fixed`].

use std::collections::BTreeSet;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dsl::CheckedProblem;
use crate::elimination::{default_order, eliminate_all, parametric_oracle, Mode, SignOracle};
use crate::exact::{ceil_to_i64, floor_to_i64, rat, Assignment, ExactError, MultiPoly, Rat, PARAM_K, PARAM_R};
use crate::polyhedron::{
    brute_force_goal_capped, covering_check, instantiate, BlockSystem, BruteForce, CoveringReport, GoalWitness,
    HPolyhedron, PolyError,
};
use crate::positivity::{certify_positive, univ_positive_on_ray, BivarPoly, PositivityCertificate, UniPoly, Var};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("parameters must be `r` (required) and optionally `k`; found {0}")]
    UnsupportedParams(String),
    #[error("({r}, {k:?}) violates the declared parameter lower bounds")]
    BelowLowerBound { r: i64, k: Option<i64> },
    #[error("parameter `k` is declared and must be fixed")]
    MissingK,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Config {
    /// Last `k` handled by specialization for targets involving `B`;
    /// defaults to `k0 + 10`.
    pub kmax: Option<i64>,
    /// Most parameter points patched by brute force.
    pub patch_cap: usize,
    /// Most candidate points in a failure box before giving up.
    pub region_cap: usize,
    /// Largest quadrant shift tried when looking for thresholds.
    pub threshold_cap: i64,
    /// Fixed-parameter checks spent looking for a refutation when the
    /// failure region is unbounded.
    pub probe_budget: usize,
    /// Largest lattice box scanned per fixed-parameter check.
    pub lattice_cap: u128,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            kmax: None,
            patch_cap: 20_000,
            region_cap: 1_000_000,
            threshold_cap: 1 << 12,
            probe_budget: 64,
            lattice_cap: 50_000_000,
        }
    }
}

type Point = (i64, i64);

/// Integer parameter domain: lower bounds, plus the base system's pure
/// parameter constraints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Domain {
    pub r0: i64,
    pub k0: i64,
    pub has_k: bool,
    pub r_max: Option<i64>,
    pub k_max: Option<i64>,
    #[serde(skip)]
    constraints: Vec<MultiPoly>,
}

impl Domain {
    pub fn from_problem(problem: &CheckedProblem) -> Result<Domain, PipelineError> {
        let names = problem.spec.param_names();
        let has_r = names.contains(PARAM_R);
        let has_k = names.contains(PARAM_K);
        if !has_r || names.len() != 1 + has_k as usize {
            return Err(PipelineError::UnsupportedParams(
                names.into_iter().collect::<Vec<_>>().join(", "),
            ));
        }
        let r0 = problem.spec.param(PARAM_R).map_or(0, |p| p.lower);
        let k0 = problem.spec.param(PARAM_K).map_or(0, |p| p.lower);
        let constraints = problem.parameter_constraints();
        let mut r_max = None;
        let mut k_max = None;
        for c in &constraints {
            let Ok(p) = BivarPoly::from_multipoly(c) else { continue };
            for (var, slot) in [(Var::R, &mut r_max), (Var::K, &mut k_max)] {
                let Some(q) = p.as_univariate(var) else { continue };
                if q.is_constant() || q.sign_at_infinity(true) > 0 {
                    continue;
                }
                // q < 0 beyond its largest real root.
                let bound = match q.largest_root_upper_bound(8) {
                    Some(b) => floor_to_i64(&b).unwrap_or(i64::MAX),
                    None => i64::MIN,
                };
                if slot.is_none_or(|cur: i64| bound < cur) {
                    *slot = Some(bound);
                }
            }
        }
        Ok(Domain {
            r0,
            k0,
            has_k,
            r_max,
            k_max: if has_k { k_max } else { Some(k0) },
            constraints,
        })
    }

    pub fn assignment(&self, (r, k): Point) -> Assignment {
        let mut a = Assignment::new();
        a.insert(PARAM_R.into(), rat(r));
        if self.has_k {
            a.insert(PARAM_K.into(), rat(k));
        }
        a
    }

    pub fn contains(&self, p: Point) -> bool {
        if p.0 < self.r0 || p.1 < self.k0 {
            return false;
        }
        let a = self.assignment(p);
        self.constraints
            .iter()
            .all(|c| c.eval(&a).is_ok_and(|v| v >= Rat::zero()))
    }

    pub fn is_empty_box(&self) -> bool {
        self.r_max.is_some_and(|m| m < self.r0) || self.k_max.is_some_and(|m| m < self.k0)
    }

    fn bounded(&self) -> bool {
        self.r_max.is_some() && self.k_max.is_some()
    }

    fn k_of(&self, p: Point) -> Option<i64> {
        self.has_k.then_some(p.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Extent {
    Empty,
    Finite(BTreeSet<Point>),
    Unbounded(String),
}

impl Extent {
    fn size(&self) -> usize {
        match self {
            Extent::Empty => 0,
            Extent::Finite(s) => s.len(),
            Extent::Unbounded(_) => usize::MAX,
        }
    }
}

/// Smallest `s >= start` with `q > 0` on `[s, inf)`, or `None` if `q` is
/// not eventually positive.
fn ray_threshold(q: &UniPoly, start: i64) -> Option<i64> {
    if q.is_zero() || q.sign_at_infinity(true) <= 0 {
        return None;
    }
    if univ_positive_on_ray(q, &rat(start)).ok()? {
        return Some(start);
    }
    // No root reaches the Cauchy bound and the leading sign is positive.
    let mut hi = ceil_to_i64(&q.cauchy_bound())?.max(start + 1);
    let mut lo = start;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if univ_positive_on_ray(q, &rat(mid)).ok()? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

struct Analyzer<'a> {
    domain: &'a Domain,
    config: &'a Config,
    majorants: &'a [MultiPoly],
}

#[derive(Debug, Clone)]
struct TargetOutcome {
    extent: Extent,
    certificate: Option<PositivityCertificate>,
    note: String,
    majorant: bool,
}

impl Analyzer<'_> {
    fn kmax(&self) -> i64 {
        self.config.kmax.unwrap_or(self.domain.k0 + 10)
    }

    fn insert(&self, set: &mut BTreeSet<Point>, p: Point) -> Result<(), String> {
        if self.domain.contains(p) {
            set.insert(p);
            if set.len() > self.config.region_cap {
                return Err(format!("failure box exceeds {} points", self.config.region_cap));
            }
        }
        Ok(())
    }

    /// Points `(r, k)` for `k` in `[from, until)`, or up to the domain
    /// bound when `until` is `None`.
    fn run_k(&self, set: &mut BTreeSet<Point>, r: i64, from: i64, until: Option<i64>) -> Result<(), String> {
        let end = match (until, self.domain.k_max) {
            (Some(u), Some(m)) => u.min(m + 1),
            (Some(u), None) => u,
            (None, Some(m)) => m + 1,
            (None, None) => return Err(format!("row r = {r} is not eventually positive in k")),
        };
        for k in from..end {
            self.insert(set, (r, k))?;
        }
        Ok(())
    }

    fn run_r(&self, set: &mut BTreeSet<Point>, k: i64, from: i64, until: Option<i64>) -> Result<(), String> {
        let end = match (until, self.domain.r_max) {
            (Some(u), Some(m)) => u.min(m + 1),
            (Some(u), None) => u,
            (None, Some(m)) => m + 1,
            (None, None) => return Err(format!("column k = {k} is not eventually positive in r")),
        };
        for r in from..end {
            self.insert(set, (r, k))?;
        }
        Ok(())
    }

    fn whole_domain(&self, why: String) -> Extent {
        if !self.domain.bounded() {
            return Extent::Unbounded(why);
        }
        let mut set = BTreeSet::new();
        let (rm, km) = (self.domain.r_max.unwrap(), self.domain.k_max.unwrap());
        for r in self.domain.r0..=rm {
            if let Err(e) = self.run_k(&mut set, r, self.domain.k0, Some(km + 1)) {
                return Extent::Unbounded(e);
            }
        }
        Extent::Finite(set)
    }

    fn target(&self, t: &MultiPoly) -> TargetOutcome {
        if t.contains_binom() {
            return self.binom_target(t);
        }
        if let Some(c) = t.constant_value() {
            if c > Rat::zero() {
                return outcome(Extent::Empty, None, "positive constant".into());
            }
            let why = format!("constant target {c} > 0 is false");
            return outcome(self.whole_domain(why.clone()), None, why);
        }
        let (r0, k0) = (self.domain.r0, self.domain.k0);
        let p = match BivarPoly::from_multipoly(t) {
            Ok(p) => p,
            Err(e) => return outcome(Extent::Unbounded(e.to_string()), None, e.to_string()),
        };
        let first = match certify_positive(&p, r0, k0) {
            Ok(cert) => return outcome(Extent::Empty, Some(cert), "certified on the whole quadrant".into()),
            Err(inc) => inc,
        };
        let first_note = format!("{} failed: {}", first.failed.label(), first.reason);
        let mut shift = 1i64;
        let found = loop {
            if shift > self.config.threshold_cap {
                break None;
            }
            let (rs, ks) = (r0 + shift, if self.domain.has_k { k0 + shift } else { k0 });
            if let Ok(cert) = certify_positive(&p, rs, ks) {
                break Some((shift, cert));
            }
            shift *= 2;
        };
        let Some((shift, cert)) = found else {
            let why = format!("{first_note}; no certificate on shifted quadrants up to {}", self.config.threshold_cap);
            return outcome(self.whole_domain(why.clone()), None, why);
        };
        let mut set = BTreeSet::new();
        let build = (|| -> Result<(), String> {
            for r in r0..r0 + shift {
                if self.domain.r_max.is_some_and(|m| r > m) {
                    break;
                }
                if self.domain.has_k {
                    let until = ray_threshold(&p.slice(Var::R, &rat(r)), k0);
                    self.run_k(&mut set, r, k0, until)?;
                } else {
                    self.insert(&mut set, (r, k0))?;
                }
            }
            if self.domain.has_k {
                for k in k0..k0 + shift {
                    if self.domain.k_max.is_some_and(|m| k > m) {
                        break;
                    }
                    let until = ray_threshold(&p.slice(Var::K, &rat(k)), r0);
                    self.run_r(&mut set, k, r0, until)?;
                }
            }
            Ok(())
        })();
        let note = format!("{first_note}; certified for r >= {}, k >= {}", r0 + shift, k0 + shift);
        match build {
            Ok(()) => outcome(Extent::Finite(set), Some(cert), note),
            Err(e) => outcome(self.whole_domain(e.clone()), Some(cert), format!("{note}; {e}")),
        }
    }

    fn binom_target(&self, t: &MultiPoly) -> TargetOutcome {
        let (r0, k0) = (self.domain.r0, self.domain.k0);
        let kmax = self.kmax();
        let k_hi = self.domain.k_max.map_or(kmax, |m| m.min(kmax));
        let mut set = BTreeSet::new();
        let rows = (|| -> Result<(), String> {
            for k in k0..=k_hi {
                let q = t.expand_binom(k).map_err(|e| e.to_string())?;
                let q = BivarPoly::from_multipoly(&q)
                    .ok()
                    .and_then(|b| b.as_univariate(Var::R))
                    .ok_or_else(|| format!("specialization at k = {k} is not univariate in r"))?;
                self.run_r(&mut set, k, r0, ray_threshold(&q, r0))?;
            }
            Ok(())
        })();
        if let Err(e) = rows {
            return outcome(self.whole_domain(e.clone()), None, e);
        }
        let note = format!("k specialized over [{k0}, {k_hi}]");
        if self.domain.k_max.is_some_and(|m| m <= kmax) {
            return outcome(Extent::Finite(set), None, note);
        }
        match self.majorant_tail(t, kmax + 1) {
            Ok(tail) => TargetOutcome {
                extent: Extent::Finite(set),
                certificate: None,
                note: format!("{note}; {tail}"),
                majorant: true,
            },
            Err(e) => outcome(Extent::Unbounded(format!("{note}; {e}")), None, format!("{note}; {e}")),
        }
    }

    /// Certifies every majorant on `k >= k_tail` and spot-checks the target
    /// there.
    fn majorant_tail(&self, t: &MultiPoly, k_tail: i64) -> Result<String, String> {
        if self.majorants.is_empty() {
            return Err(format!("k > {} needs a majorant and none is declared", k_tail - 1));
        }
        for m in self.majorants {
            let target = &m.primitive() + &MultiPoly::one();
            let p = BivarPoly::from_multipoly(&target).map_err(|e| e.to_string())?;
            certify_positive(&p, self.domain.r0, k_tail)
                .map_err(|inc| format!("majorant `{m} >= 0` not certified for k >= {k_tail}: {}", inc.reason))?;
        }
        for r in self.domain.r0..self.domain.r0 + 20 {
            for k in k_tail..k_tail + 20 {
                if !self.domain.contains((r, k)) {
                    continue;
                }
                let v = t.eval(&self.domain.assignment((r, k))).map_err(|e| e.to_string())?;
                if v <= Rat::zero() {
                    return Err(format!("majorants hold but the target fails at (r, k) = ({r}, {k})"));
                }
            }
        }
        Ok(format!("k >= {k_tail} covered by certified majorants (spot-checked)"))
    }
}

fn outcome(extent: Extent, certificate: Option<PositivityCertificate>, note: String) -> TargetOutcome {
    TargetOutcome {
        extent,
        certificate,
        note,
        majorant: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintStatus {
    Certified,
    Patched,
    Unbounded,
    Uncertifiable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintReport {
    pub poly: String,
    pub status: ConstraintStatus,
    /// Positivity targets whose positivity at a parameter point implies the
    /// constraint there.
    pub targets: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PositivityCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub failure_points: usize,
    pub uses_majorant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisjunctReport {
    pub vars: Vec<String>,
    pub eliminated: Vec<String>,
    pub constraints: Vec<ConstraintReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Some constraint may fail at infinitely many parameter points.
    pub unbounded: bool,
    pub failure_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    CertifiedWithPatches,
    Refuted,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::CertifiedWithPatches => "certified_with_patches",
            Verdict::Refuted => "refuted",
            Verdict::Unknown => "unknown",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Certified | Verdict::CertifiedWithPatches => 0,
            Verdict::Refuted => 1,
            Verdict::Unknown => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedVerdict {
    Satisfied,
    Failed,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatchWitness {
    /// Every constraint of this disjunct holds at the point.
    Disjunct { index: usize },
    /// Lattice search over the base polytope succeeded.
    Lattice {
        points_checked: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        sample: Option<GoalWitness>,
    },
    /// Integer base point with no goal solution.
    Counterexample { base: Vec<i64> },
    Reason { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatchReport {
    pub r: i64,
    pub k: Option<i64>,
    pub verdict: FixedVerdict,
    pub witness: PatchWitness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub input_hash: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
    pub domain: Domain,
    pub disjuncts: Vec<DisjunctReport>,
    pub patches: Vec<PatchReport>,
    pub timing_ms: Option<u64>,
}

struct Obligation {
    report: ConstraintReport,
    targets: Vec<MultiPoly>,
    extent: Extent,
}

impl Obligation {
    fn holds_at(&self, domain: &Domain, p: Point) -> bool {
        let a = domain.assignment(p);
        self.targets
            .iter()
            .any(|t| t.eval(&a).is_ok_and(|v| v > Rat::zero()))
    }
}

struct Disjunct {
    report: DisjunctReport,
    obligations: Vec<Obligation>,
    extent: Extent,
    /// Elimination failed, so nothing is known pointwise either.
    opaque: bool,
}

impl Disjunct {
    fn holds_at(&self, domain: &Domain, p: Point) -> bool {
        !self.opaque && self.obligations.iter().all(|o| o.holds_at(domain, p))
    }
}

/// The existential blocks: the goal disjuncts, or the base itself when
/// there is no goal. Returns `(outer vars, [(block vars, block polys)])`.
fn blocks(problem: &CheckedProblem) -> (Vec<String>, Vec<(Vec<String>, Vec<MultiPoly>)>) {
    if problem.goal.is_empty() {
        let polys = problem
            .base
            .constraints
            .iter()
            .filter(|c| !c.form.is_parameter_only())
            .map(|c| c.poly.clone())
            .collect();
        (Vec::new(), vec![(problem.base.vars.clone(), polys)])
    } else {
        let outer = problem.base.vars.clone();
        let inner = problem.goal.iter().map(|b| (b.vars.clone(), b.polys())).collect();
        (outer, inner)
    }
}

fn base_polys(problem: &CheckedProblem) -> Vec<MultiPoly> {
    if problem.goal.is_empty() {
        return Vec::new();
    }
    problem
        .base
        .constraints
        .iter()
        .filter(|c| !c.form.is_parameter_only())
        .map(|c| c.poly.clone())
        .collect()
}

fn analyze_disjunct(
    analyzer: &Analyzer<'_>,
    oracle: &dyn SignOracle,
    outer: &[String],
    base: &[MultiPoly],
    vars: &[String],
    polys: &[MultiPoly],
) -> Disjunct {
    let elim = match eliminate_all(polys, &default_order(vars), Mode::Integer, oracle) {
        Ok(e) => e,
        Err(e) => {
            let why = format!("integer elimination: {e}");
            return Disjunct {
                report: DisjunctReport {
                    vars: vars.to_vec(),
                    eliminated: Vec::new(),
                    constraints: Vec::new(),
                    error: Some(why.clone()),
                    unbounded: true,
                    failure_points: 0,
                },
                obligations: Vec::new(),
                extent: analyzer.whole_domain(why),
                opaque: true,
            };
        }
    };
    let obligations: Vec<Obligation> = elim
        .constraints
        .par_iter()
        .map(|q| obligation(analyzer, oracle, outer, base, q))
        .collect();
    let mut extent = Extent::Empty;
    for o in &obligations {
        extent = union(extent, &o.extent);
    }
    let report = DisjunctReport {
        vars: vars.to_vec(),
        eliminated: elim.constraints.iter().map(|q| format!("{q} >= 0")).collect(),
        constraints: obligations.iter().map(|o| o.report.clone()).collect(),
        error: None,
        unbounded: matches!(extent, Extent::Unbounded(_)),
        failure_points: 0,
    };
    Disjunct {
        report,
        obligations,
        extent,
        opaque: false,
    }
}

fn union(a: Extent, b: &Extent) -> Extent {
    match (a, b) {
        (Extent::Unbounded(w), _) => Extent::Unbounded(w),
        (_, Extent::Unbounded(w)) => Extent::Unbounded(w.clone()),
        (Extent::Empty, other) => other.clone(),
        (Extent::Finite(s), Extent::Empty) => Extent::Finite(s),
        (Extent::Finite(mut s), Extent::Finite(t)) => {
            s.extend(t.iter().copied());
            Extent::Finite(s)
        }
    }
}

fn obligation(
    analyzer: &Analyzer<'_>,
    oracle: &dyn SignOracle,
    outer: &[String],
    base: &[MultiPoly],
    q: &MultiPoly,
) -> Obligation {
    let poly = format!("{q} >= 0");
    let uses_outer = outer.iter().any(|v| q.contains(v));
    let targets: Vec<MultiPoly> = if uses_outer {
        let mut system = base.to_vec();
        system.push(&(-q) - &MultiPoly::one());
        match eliminate_all(&system, &default_order(outer), Mode::Real, oracle) {
            Ok(e) => e.constraints.iter().map(|t| -t).collect(),
            Err(e) => {
                let reason = format!("universal reduction over the base variables: {e}");
                return Obligation {
                    report: ConstraintReport {
                        poly,
                        status: ConstraintStatus::Uncertifiable,
                        targets: Vec::new(),
                        certificate: None,
                        reason: Some(reason.clone()),
                        failure_points: 0,
                        uses_majorant: false,
                    },
                    targets: Vec::new(),
                    extent: analyzer.whole_domain(reason),
                };
            }
        }
    } else {
        vec![q + &MultiPoly::one()]
    };
    // The obligation holds wherever one target is positive: keep the
    // smallest failure extent.
    let mut best: Option<TargetOutcome> = None;
    for t in &targets {
        let out = analyzer.target(t);
        let better = best.as_ref().is_none_or(|b| out.extent.size() < b.extent.size());
        if better {
            best = Some(out);
        }
        if best.as_ref().is_some_and(|b| b.extent == Extent::Empty) {
            break;
        }
    }
    let best = best.unwrap_or_else(|| {
        let why = "base polytope meets the violation region at every parameter value".to_string();
        outcome(analyzer.whole_domain(why.clone()), None, why)
    });
    let status = match &best.extent {
        Extent::Empty => ConstraintStatus::Certified,
        Extent::Finite(_) => ConstraintStatus::Patched,
        Extent::Unbounded(_) => ConstraintStatus::Unbounded,
    };
    Obligation {
        report: ConstraintReport {
            poly,
            status,
            targets: targets.iter().map(|t| format!("{t} > 0")).collect(),
            certificate: best.certificate.clone(),
            reason: (status != ConstraintStatus::Certified || best.majorant).then(|| best.note.clone()),
            failure_points: 0,
            uses_majorant: best.majorant,
        },
        targets,
        extent: best.extent,
    }
}

/// Runs the whole method on a validated problem.
pub fn run(problem: &CheckedProblem, config: &Config) -> Result<Report, PipelineError> {
    let domain = Domain::from_problem(problem)?;
    let mut report = Report {
        version: VERSION,
        input_hash: String::new(),
        verdict: Verdict::Unknown,
        diagnosis: None,
        domain: domain.clone(),
        disjuncts: Vec::new(),
        patches: Vec::new(),
        timing_ms: None,
    };
    if domain.is_empty_box() {
        report.verdict = Verdict::Certified;
        report.diagnosis = Some("parameter domain is empty".into());
        return Ok(report);
    }
    let analyzer = Analyzer {
        domain: &domain,
        config,
        majorants: &problem.majorants,
    };
    let oracle = parametric_oracle(problem);
    let (outer, inner) = blocks(problem);
    let base = base_polys(problem);
    let mut disjuncts: Vec<Disjunct> = inner
        .iter()
        .map(|(vars, polys)| analyze_disjunct(&analyzer, &oracle, &outer, &base, vars, polys))
        .collect();

    // Exact failure sets where finite.
    let mut failures: Vec<Option<BTreeSet<Point>>> = Vec::with_capacity(disjuncts.len());
    for d in &mut disjuncts {
        let exact = match &d.extent {
            Extent::Empty => Some(BTreeSet::new()),
            Extent::Finite(s) => Some(s.iter().copied().filter(|&p| !d.holds_at(&domain, p)).collect()),
            Extent::Unbounded(_) => None,
        };
        for (o, c) in d.obligations.iter().zip(d.report.constraints.iter_mut()) {
            if let Extent::Finite(s) = &o.extent {
                c.failure_points = s.iter().filter(|&&p| !o.holds_at(&domain, p)).count();
                if c.failure_points == 0 {
                    c.status = ConstraintStatus::Certified;
                    let note = "holds at every point of the finite candidate set";
                    c.reason = Some(c.reason.take().map_or(note.into(), |r| format!("{r}; {note}")));
                }
            }
        }
        d.report.failure_points = exact.as_ref().map_or(0, BTreeSet::len);
        failures.push(exact);
    }
    report.disjuncts = disjuncts.iter().map(|d| d.report.clone()).collect();

    if failures.iter().any(|f| f.as_ref().is_some_and(BTreeSet::is_empty)) {
        report.verdict = Verdict::Certified;
        return Ok(report);
    }

    let chosen = failures
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.as_ref().map(|s| (i, s)))
        .min_by_key(|(_, s)| s.len());
    let Some((chosen, region)) = chosen else {
        return probe(problem, &domain, &disjuncts, config, report);
    };
    if region.len() > config.patch_cap {
        report.verdict = Verdict::Unknown;
        report.diagnosis = Some(format!(
            "patch region has {} points, above the cap of {}",
            region.len(),
            config.patch_cap
        ));
        return Ok(report);
    }
    let points: Vec<Point> = region.iter().copied().collect();
    report.patches = patch_points(problem, &domain, &disjuncts, chosen, &points, config);
    report.verdict = patch_verdict(&report.patches);
    if report.verdict == Verdict::Unknown {
        report.diagnosis = Some("some patch points could not be decided".into());
    }
    Ok(report)
}

fn patch_points(
    problem: &CheckedProblem,
    domain: &Domain,
    disjuncts: &[Disjunct],
    skip: usize,
    points: &[Point],
    config: &Config,
) -> Vec<PatchReport> {
    points
        .par_iter()
        .map(|&p| {
            let k = domain.k_of(p);
            if let Some(index) = (0..disjuncts.len()).find(|&j| j != skip && disjuncts[j].holds_at(domain, p)) {
                return PatchReport {
                    r: p.0,
                    k,
                    verdict: FixedVerdict::Satisfied,
                    witness: PatchWitness::Disjunct { index },
                };
            }
            let fixed = check_fixed_with(problem, p.0, k, config.lattice_cap);
            let (verdict, witness) = match fixed {
                Ok(f) => (f.verdict, f.witness()),
                Err(e) => (
                    FixedVerdict::Unknown,
                    PatchWitness::Reason {
                        reason: e.to_string(),
                    },
                ),
            };
            PatchReport {
                r: p.0,
                k,
                verdict,
                witness,
            }
        })
        .collect()
}

fn patch_verdict(patches: &[PatchReport]) -> Verdict {
    if patches.iter().any(|p| p.verdict == FixedVerdict::Failed) {
        Verdict::Refuted
    } else if patches.iter().any(|p| p.verdict == FixedVerdict::Unknown) {
        Verdict::Unknown
    } else {
        Verdict::CertifiedWithPatches
    }
}

const PROBE_CHUNK: usize = 8;

/// Unbounded failure region: look for a refutation near the corner.
fn probe(
    problem: &CheckedProblem,
    domain: &Domain,
    disjuncts: &[Disjunct],
    config: &Config,
    mut report: Report,
) -> Result<Report, PipelineError> {
    let reasons: Vec<String> = disjuncts
        .iter()
        .filter_map(|d| match &d.extent {
            Extent::Unbounded(w) => Some(w.clone()),
            _ => None,
        })
        .collect();
    let mut candidates = Vec::new();
    let mut scanned = 0usize;
    'shells: for s in 0i64.. {
        let shell = (0..=s).map(|dr| (dr, s)).chain((0..s).rev().map(|dk| (s, dk)));
        let mut any_in_box = false;
        for (dr, dk) in shell {
            if !domain.has_k && dk > 0 {
                continue;
            }
            let p = (domain.r0 + dr, domain.k0 + dk);
            if domain.r_max.is_some_and(|m| p.0 > m) || domain.k_max.is_some_and(|m| p.1 > m) {
                continue;
            }
            any_in_box = true;
            scanned += 1;
            if scanned > config.probe_budget * 64 || candidates.len() >= config.probe_budget {
                break 'shells;
            }
            if domain.contains(p) && !disjuncts.iter().any(|d| d.holds_at(domain, p)) {
                candidates.push(p);
            }
        }
        if !any_in_box {
            break;
        }
    }
    // Fixed-size chunks, nearest first, stopping after the first chunk with
    // a failure; the chunk size does not depend on the thread count.
    let mut patches = Vec::new();
    for chunk in candidates.chunks(PROBE_CHUNK) {
        patches.extend(patch_points(problem, domain, disjuncts, usize::MAX, chunk, config));
        if patches.iter().any(|p| p.verdict == FixedVerdict::Failed) {
            break;
        }
    }
    if let Some(i) = patches.iter().position(|p| p.verdict == FixedVerdict::Failed) {
        report.verdict = Verdict::Refuted;
        report.patches = vec![patches[i].clone()];
        report.diagnosis = Some(format!(
            "counterexample at r = {}{}",
            patches[i].r,
            patches[i].k.map_or(String::new(), |k| format!(", k = {k}"))
        ));
    } else {
        report.verdict = Verdict::Unknown;
        report.patches = patches;
        report.diagnosis = Some(format!(
            "failure region is unbounded ({}); {} probe point(s) found no counterexample",
            reasons.join("; "),
            candidates.len()
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeSummary {
    pub points_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<GoalWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedReport {
    pub r: i64,
    pub k: Option<i64>,
    pub verdict: FixedVerdict,
    /// Outside the domain, or the base polytope has no points.
    pub vacuous: bool,
    pub base_vars: Vec<String>,
    pub base: HPolyhedron,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covering: Option<CoveringReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl FixedReport {
    fn witness(&self) -> PatchWitness {
        match (&self.lattice, &self.reason) {
            (Some(l), _) if l.counterexample.is_some() => PatchWitness::Counterexample {
                base: l.counterexample.clone().unwrap(),
            },
            (Some(l), _) => PatchWitness::Lattice {
                points_checked: l.points_checked,
                sample: l.sample.clone(),
            },
            (None, Some(reason)) => PatchWitness::Reason { reason: reason.clone() },
            (None, None) => PatchWitness::Reason {
                reason: "vacuous".into(),
            },
        }
    }
}

pub fn check_fixed(problem: &CheckedProblem, r: i64, k: Option<i64>) -> Result<FixedReport, PipelineError> {
    check_fixed_with(problem, r, k, Config::default().lattice_cap)
}

/// Instantiates everything at `(r, k)`, runs the covering test of the base
/// polytope against the goal blocks projected to the base variables, and
/// decides the integer statement by lattice search.
pub fn check_fixed_with(
    problem: &CheckedProblem,
    r: i64,
    k: Option<i64>,
    lattice_cap: u128,
) -> Result<FixedReport, PipelineError> {
    let domain = Domain::from_problem(problem)?;
    let k = match (domain.has_k, k) {
        (true, None) => return Err(PipelineError::MissingK),
        (true, Some(k)) => Some(k),
        (false, _) => None,
    };
    let point = (r, k.unwrap_or(domain.k0));
    if r < domain.r0 || point.1 < domain.k0 {
        return Err(PipelineError::BelowLowerBound { r, k });
    }
    let params = domain.assignment(point);
    let (outer, inner) = blocks(problem);
    let base_sys = base_polys(problem);
    let base = instantiate(&base_sys, &outer, &params)?;
    let mut fixed = FixedReport {
        r,
        k,
        verdict: FixedVerdict::Satisfied,
        vacuous: false,
        base_vars: outer.clone(),
        base: base.clone(),
        covering: None,
        lattice: None,
        reason: None,
    };
    if !domain.contains(point) {
        fixed.vacuous = true;
        fixed.reason = Some("outside the parameter domain".into());
        return Ok(fixed);
    }
    let mut systems = Vec::with_capacity(inner.len());
    for (vars, polys) in &inner {
        let coords: Vec<String> = outer.iter().chain(vars).cloned().collect();
        systems.push(BlockSystem {
            outer_dim: outer.len(),
            poly: instantiate(polys, &coords, &params)?,
        });
    }
    if !base.check_bounded() {
        fixed.verdict = FixedVerdict::Unknown;
        fixed.reason = Some("base polytope is unbounded".into());
        return Ok(fixed);
    }
    if base.dim > 0 && (1..=2).contains(&systems.len()) {
        let c1 = systems[0].poly.project_to_leading(base.dim);
        let c2 = systems.get(1).map_or_else(|| c1.clone(), |s| s.poly.project_to_leading(base.dim));
        fixed.covering = Some(covering_check(&base, &c1, &c2)?);
    }
    match brute_force_goal_capped(&base, &systems, lattice_cap) {
        Ok(BruteForce::Satisfied {
            points_checked,
            witnesses,
        }) => {
            fixed.vacuous = points_checked == 0;
            fixed.lattice = Some(LatticeSummary {
                points_checked,
                sample: witnesses.into_iter().next(),
                counterexample: None,
            });
        }
        Ok(BruteForce::Failed {
            points_checked,
            counterexample,
        }) => {
            fixed.verdict = FixedVerdict::Failed;
            fixed.lattice = Some(LatticeSummary {
                points_checked,
                sample: None,
                counterexample: Some(counterexample),
            });
        }
        Err(e) => {
            fixed.verdict = FixedVerdict::Unknown;
            fixed.reason = Some(e.to_string());
        }
    }
    Ok(fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, validate};

    fn problem(src: &str) -> CheckedProblem {
        validate(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn ray_thresholds() {
        // t^2 - 10t + 21 = (t - 3)(t - 7)
        let q = UniPoly::from_ints(&[21, -10, 1]);
        assert_eq!(ray_threshold(&q, 0), Some(8));
        assert_eq!(ray_threshold(&q, 9), Some(9));
        assert_eq!(ray_threshold(&UniPoly::from_ints(&[5, -1]), 0), None);
        assert_eq!(ray_threshold(&UniPoly::from_ints(&[3]), 2), Some(2));
        assert_eq!(ray_threshold(&UniPoly::zero(), 2), None);
    }

    #[test]
    fn toy_interval_is_certified() {
        let p = problem("param r >= 3; system { r >= 0; } goal exists (n) { n >= 1; n <= r; }");
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified);
        assert_eq!(rep.disjuncts[0].eliminated, vec!["r - 1 >= 0".to_string()]);
    }

    #[test]
    fn rk_patch_region() {
        let p = problem(
            "param r >= 1; param k >= 1; system { r >= 0; }
             goal exists (n) { n >= 1; r*k - 100 - n >= 0; }
               or exists (m) { m = 0; 100 - r*k >= 0; }",
        );
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::CertifiedWithPatches);
        // Exactly the points with r k <= 100.
        let expected: usize = (1..=100).map(|r| 100 / r).sum();
        assert_eq!(rep.patches.len(), expected);
        assert!(rep
            .patches
            .iter()
            .all(|p| p.witness == PatchWitness::Disjunct { index: 1 }));
    }

    #[test]
    fn empty_interval_is_refuted() {
        let p = problem("param r >= 1; system { r >= 0; } goal exists (n) { n <= 0; n >= 1; }");
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
        assert_eq!(rep.patches[0].r, 1);
    }

    #[test]
    fn single_disjunct_without_rescue_is_refuted() {
        let p = problem("param r >= 1; param k >= 1; system { r >= 0; } goal exists (n) { n >= 1; r*k - 100 - n >= 0; }");
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
    }

    #[test]
    fn universal_obligations_over_base_variables() {
        // For every integer d in [0, r], some n has d <= n <= d + 1 and n <= r + 1.
        let p = problem(
            "param r >= 1; var d; system { d >= 0; r - d >= 0; }
             goal exists (n) { n - d >= 0; d + 1 - n >= 0; r + 1 - n >= 0; }",
        );
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified, "{rep:#?}");
        // Tightening to n <= r - 1 fails at d = r.
        let p = problem(
            "param r >= 1; var d; system { d >= 0; r - d >= 0; }
             goal exists (n) { n - d >= 0; d + 1 - n >= 0; r - 1 - n >= 0; }",
        );
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
    }

    #[test]
    fn bounded_domain_is_patched_exhaustively() {
        // Exact evaluation over the finite domain certifies the single disjunct.
        let p = problem(
            "param r >= 1; system { 6 - r >= 0; } goal exists (n) { n >= 0; 9 - r - n >= 0; }",
        );
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified, "{rep:#?}");
        assert_eq!(rep.domain.r_max, Some(6));
        // Each disjunct fails somewhere in r <= 6; together they cover it.
        let p = problem(
            "param r >= 1; system { 6 - r >= 0; }
             goal exists (n) { n >= 0; 3 - r - n >= 0; } or exists (m) { m >= 0; r - 4 - m >= 0; }",
        );
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::CertifiedWithPatches, "{rep:#?}");
        assert_eq!(rep.patches.len(), 3);
        // Dropping the second disjunct leaves r in 4..=6 uncovered.
        let p = problem("param r >= 1; system { 6 - r >= 0; } goal exists (n) { n >= 0; 3 - r - n >= 0; }");
        let rep = run(&p, &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
        assert_eq!(rep.patches.iter().filter(|p| p.verdict == FixedVerdict::Failed).count(), 3);
    }

    #[test]
    fn mrc_anecdote_at_fixed_parameters() {
        let p = problem(
            "param r >= 17; param k >= 4; var d; var g;
             system { (r+1)*d - r*g - r*(r+1) >= 0; k*d + 1 - g <= B; g >= 2000; }
             goal exists (e) { e = 2129 - g; e >= 0; } or exists (e) { e = 2028 - d; e >= 0; }",
        );
        let f = check_fixed(&p, 17, Some(4)).unwrap();
        assert_eq!(f.verdict, FixedVerdict::Satisfied);
        let cov = f.covering.unwrap();
        assert!(!cov.is_covered());
        let bad: Vec<_> = cov.vertices.iter().filter(|v| !v.in_c1 && !v.in_c2).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].coords, vec![crate::exact::rat_frac(50711, 25), crate::exact::rat_frac(53244, 25)]);
        assert!(!bad[0].integral);
    }

    #[test]
    fn reports_are_deterministic() {
        let src = "param r >= 1; param k >= 1; system { r >= 0; }
             goal exists (n) { n >= 1; r*k - 30 - n >= 0; } or exists (m) { m = 0; 30 - r*k >= 0; }";
        let a = run(&problem(src), &Config::default()).unwrap();
        let b = run(&problem(src), &Config::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn binom_constraints_need_majorants_beyond_the_range() {
        let src = "param r >= 1; param k >= 1; system { r >= 0; } goal exists (n) { n >= 1; B - n >= 0; }";
        let rep = run(&problem(src), &Config::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Unknown);
        let with = format!("{src} majorant {{ r + k >= 0; }}");
        let rep = run(&problem(&with), &Config::default()).unwrap();
        assert!(matches!(rep.verdict, Verdict::Certified | Verdict::CertifiedWithPatches), "{rep:#?}");
        assert!(rep.disjuncts[0].constraints.iter().any(|c| c.uses_majorant));
    }

    #[test]
    fn fixed_checks() {
        let p = problem("param r >= 1; var x; system { x >= 0; r - x >= 0; } goal exists (y) { y - x = 0; }");
        let f = check_fixed(&p, 3, None).unwrap();
        assert_eq!(f.verdict, FixedVerdict::Satisfied);
        assert_eq!(f.lattice.as_ref().unwrap().points_checked, 4);
        assert!(f.covering.as_ref().unwrap().is_covered());
        assert!(matches!(check_fixed(&p, 0, None), Err(PipelineError::BelowLowerBound { .. })));
        let empty = problem("param r >= 1; var x; system { x >= r + 1; r - x >= 0; } goal exists (y) { y - x = 0; }");
        let f = check_fixed(&empty, 2, None).unwrap();
        assert!(f.vacuous && f.verdict == FixedVerdict::Satisfied);
        let unbounded = problem("param r >= 1; var x; system { x >= 0; } goal exists (y) { y - x = 0; }");
        assert_eq!(check_fixed(&unbounded, 2, None).unwrap().verdict, FixedVerdict::Unknown);
    }

    #[test]
    fn unsupported_parameters() {
        let p = problem("param n >= 1; system { n >= 0; }");
        assert!(matches!(run(&p, &Config::default()), Err(PipelineError::UnsupportedParams(_))));
    }
}
