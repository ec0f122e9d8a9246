//! Human-readable renderings of the reports. Verdict lines use the same
//! words as the JSON output.

use std::fmt::Write;

use paramfeas::bn::ExceptionTable;
use paramfeas::exact::Rat;
use paramfeas::pipeline::{ConstraintStatus, FixedReport, FixedVerdict, PatchReport, PatchWitness, Report};
use paramfeas::polyhedron::{CoveringVerdict, Interval};
use paramfeas::positivity::{ConditionCheck, Inconclusive, PositivityCertificate};

/// Patch lines shown before eliding the rest.
const PATCH_LINES: usize = 20;

fn point(coords: &[Rat]) -> String {
    let parts: Vec<String> = coords.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(", "))
}

fn ints(coords: &[i64]) -> String {
    let parts: Vec<String> = coords.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(", "))
}

fn params(r: i64, k: Option<i64>) -> String {
    match k {
        Some(k) => format!("r = {r}, k = {k}"),
        None => format!("r = {r}"),
    }
}

fn status(s: ConstraintStatus) -> &'static str {
    match s {
        ConstraintStatus::Certified => "certified",
        ConstraintStatus::Patched => "patched",
        ConstraintStatus::Unbounded => "unbounded",
        ConstraintStatus::Uncertifiable => "uncertifiable",
    }
}

fn fixed_verdict(v: FixedVerdict) -> &'static str {
    match v {
        FixedVerdict::Satisfied => "satisfied",
        FixedVerdict::Failed => "failed",
        FixedVerdict::Unknown => "unknown",
    }
}

fn patch_line(p: &PatchReport) -> String {
    let how = match &p.witness {
        PatchWitness::Disjunct { index } => format!("disjunct {} holds", index + 1),
        PatchWitness::Lattice { points_checked, .. } => format!("lattice search over {points_checked} base point(s)"),
        PatchWitness::Counterexample { base } if base.is_empty() => "no integer solution".into(),
        PatchWitness::Counterexample { base } => format!("base point {} has no goal solution", ints(base)),
        PatchWitness::Reason { reason } => reason.clone(),
    };
    format!("  {}: {} ({how})", params(p.r, p.k), fixed_verdict(p.verdict))
}

pub fn report(rep: &Report) -> String {
    let mut s = String::new();
    let d = &rep.domain;
    let mut dom = format!("r >= {}", d.r0);
    if let Some(m) = d.r_max {
        let _ = write!(dom, ", r <= {m}");
    }
    if d.has_k {
        let _ = write!(dom, ", k >= {}", d.k0);
        if let Some(m) = d.k_max {
            let _ = write!(dom, ", k <= {m}");
        }
    }
    let _ = writeln!(s, "domain: {dom}");
    for (i, dj) in rep.disjuncts.iter().enumerate() {
        let _ = writeln!(s, "disjunct {} (exists {}):", i + 1, dj.vars.join(", "));
        if let Some(e) = &dj.error {
            let _ = writeln!(s, "  error: {e}");
        }
        for c in &dj.constraints {
            let _ = writeln!(s, "  [{}] {}", status(c.status), c.poly);
            if c.status == ConstraintStatus::Patched {
                let _ = writeln!(s, "      fails at {} parameter point(s)", c.failure_points);
            }
            if let Some(r) = &c.reason {
                let _ = writeln!(s, "      {r}");
            }
        }
        if dj.constraints.is_empty() && dj.error.is_none() {
            let _ = writeln!(s, "  (no constraints remain)");
        }
    }
    if !rep.patches.is_empty() {
        let count = |v| rep.patches.iter().filter(|p| p.verdict == v).count();
        let _ = writeln!(
            s,
            "patches: {} point(s): {} satisfied, {} failed, {} unknown",
            rep.patches.len(),
            count(FixedVerdict::Satisfied),
            count(FixedVerdict::Failed),
            count(FixedVerdict::Unknown)
        );
        // Failures first, so a refutation is always visible.
        let mut shown: Vec<&PatchReport> = rep.patches.iter().filter(|p| p.verdict != FixedVerdict::Satisfied).collect();
        shown.extend(rep.patches.iter().filter(|p| p.verdict == FixedVerdict::Satisfied));
        for p in shown.iter().take(PATCH_LINES) {
            let _ = writeln!(s, "{}", patch_line(p));
        }
        if shown.len() > PATCH_LINES {
            let _ = writeln!(s, "  ... {} more", shown.len() - PATCH_LINES);
        }
    }
    if let Some(d) = &rep.diagnosis {
        let _ = writeln!(s, "diagnosis: {d}");
    }
    if let Some(t) = rep.timing_ms {
        let _ = writeln!(s, "time: {t} ms");
    }
    let _ = writeln!(s, "verdict: {}", rep.verdict.as_str());
    s
}

pub fn elimination(order: &[String], constraints: &[String], contradiction: bool) -> String {
    let mut s = String::new();
    if !order.is_empty() {
        let _ = writeln!(s, "# eliminated {}", order.join(", "));
    }
    for c in constraints {
        let _ = writeln!(s, "{c}");
    }
    if constraints.is_empty() {
        let _ = writeln!(s, "# no constraints remain");
    }
    if contradiction {
        let _ = writeln!(s, "# the system is infeasible");
    }
    s
}

fn checks(s: &mut String, checks: &[ConditionCheck]) {
    for c in checks {
        let mark = if c.passed { "pass" } else { "FAIL" };
        let _ = writeln!(s, "  [{mark}] {}: {}", c.condition.label(), c.detail);
    }
}

pub fn certificate(cert: &PositivityCertificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} > 0 for all integers r >= {}, k >= {}", cert.polynomial, cert.r0, cert.k0);
    checks(&mut s, &cert.checks);
    let _ = writeln!(s, "certified");
    s
}

pub fn inconclusive(inc: &Inconclusive) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} > 0: no certificate", inc.polynomial);
    checks(&mut s, &inc.checks);
    let _ = writeln!(s, "failed {}: {}", inc.failed.label(), inc.reason);
    s
}

fn interval(i: &Option<Interval>) -> String {
    match i {
        Some(i) => format!("[{}, {}]", i.lo, i.hi),
        None => "empty".into(),
    }
}

pub fn fixed(rep: &FixedReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "parameters: {}", params(rep.r, rep.k));
    if !rep.base_vars.is_empty() {
        let _ = writeln!(
            s,
            "base polytope over ({}): {} inequalit{}",
            rep.base_vars.join(", "),
            rep.base.rows.len(),
            if rep.base.rows.len() == 1 { "y" } else { "ies" }
        );
    }
    if let Some(cov) = &rep.covering {
        let _ = writeln!(s, "vertices:");
        for v in &cov.vertices {
            let _ = writeln!(
                s,
                "  {} {}  in C1: {}  in C2: {}",
                point(&v.coords),
                if v.integral { "integral" } else { "non-integral" },
                yes(v.in_c1),
                yes(v.in_c2)
            );
        }
        let _ = writeln!(s, "edges:");
        for e in &cov.edges {
            let _ = writeln!(
                s,
                "  {} -- {}{}  C1: {}  C2: {}  meets C1 n C2: {}",
                point(&e.from),
                point(&e.to),
                if e.critical { " (critical)" } else { "" },
                interval(&e.in_c1),
                interval(&e.in_c2),
                yes(e.meets_intersection)
            );
        }
        match &cov.verdict {
            CoveringVerdict::Covered => {
                let _ = writeln!(s, "covering: covered{}", if cov.vacuous { " (vacuous)" } else { "" });
            }
            CoveringVerdict::NotCovered { witness } => {
                let _ = writeln!(s, "covering: not covered; {} lies in neither set", point(witness));
            }
        }
    }
    if let Some(l) = &rep.lattice {
        let _ = write!(s, "lattice: {} base point(s) checked", l.points_checked);
        if let Some(w) = &l.sample {
            let _ = write!(s, "; e.g. base {} solved by disjunct {} with {}", ints(&w.base), w.block + 1, ints(&w.inner));
        }
        if let Some(c) = &l.counterexample {
            let _ = write!(s, "; base point {} has no goal solution", ints(c));
        }
        let _ = writeln!(s);
    }
    if rep.vacuous {
        let _ = writeln!(s, "vacuous: yes");
    }
    if let Some(r) = &rep.reason {
        let _ = writeln!(s, "diagnosis: {r}");
    }
    let _ = writeln!(s, "verdict: {}", fixed_verdict(rep.verdict));
    s
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn tables(tables: &[&ExceptionTable]) -> String {
    let mut s = String::new();
    for t in tables {
        let entries: Vec<String> = t.entries.iter().map(|e| ints(e)).collect();
        if tables.len() > 1 {
            let _ = writeln!(s, "{} {}: {}", t.name, t.layout, entries.join(" "));
        } else {
            let _ = writeln!(s, "{}", entries.join(" "));
        }
    }
    s
}
