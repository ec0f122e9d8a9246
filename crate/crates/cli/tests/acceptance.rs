//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Each check pairs the implementation with
//! an oracle that does not share its code path.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use paramfeas::bn;
use paramfeas::elimination::{classify_bounds, eliminate_integer, eliminate_real, FixedOracle};
use paramfeas::exact::{binom_eval, rat, rat_frac, rat_to_i64, Assignment, MultiPoly, Rat};
use paramfeas::polyhedron::{covering_check, CoveringVerdict, HPolyhedron, Row};
use paramfeas::positivity::{certify_positive, BivarPoly};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `b n <= a` and `d n >= c`, as polynomials `>= 0`.
fn interval_system(a: i64, b: i64, c: i64, d: i64) -> Vec<MultiPoly> {
    let n = MultiPoly::var("n");
    vec![
        &MultiPoly::int(a) - &n.scale(&rat(b)),
        &n.scale(&rat(d)) - &MultiPoly::int(c),
    ]
}

/// The single pair constraint left after eliminating `n`.
fn pair_constant(a: i64, b: i64, c: i64, d: i64, integer: bool) -> Rat {
    let oracle = FixedOracle { params: Assignment::new() };
    let bounds = classify_bounds(&interval_system(a, b, c, d), "n", &oracle).expect("constant coefficients");
    let out = if integer {
        eliminate_integer(&bounds)
    } else {
        eliminate_real(&bounds)
    };
    assert_eq!(out.len(), 1);
    out[0].constant_value().expect("no symbols remain")
}

fn scan_has_integer(a: i64, b: i64, c: i64, d: i64) -> bool {
    (-60..=60).any(|n| d * n >= c && b * n <= a)
}

fn criterion_1() -> Outcome {
    let tuples: Vec<(i64, i64, i64, i64)> = (-50..=50)
        .flat_map(|a| (1..=9).flat_map(move |b| (-50..=50).flat_map(move |c| (1..=9).map(move |d| (a, b, c, d)))))
        .collect();
    let results: Vec<(bool, Option<String>)> = tuples
        .par_iter()
        .map(|&(a, b, c, d)| {
            let value = pair_constant(a, b, c, d, true);
            let expected = a * d - b * c - (b - 1) * (d - 1);
            if value != rat(expected) {
                return (false, Some(format!("{:?}: eliminated constant {value}, want {expected}", (a, b, c, d))));
            }
            let accepted = expected >= 0;
            if accepted && !scan_has_integer(a, b, c, d) {
                return (accepted, Some(format!("{:?}: accepted without an integer", (a, b, c, d))));
            }
            (accepted, None)
        })
        .collect();
    let violations: Vec<&String> = results.iter().filter_map(|(_, v)| v.as_ref()).collect();
    let accepted = results.iter().filter(|(a, _)| *a).count();
    ensure(violations.is_empty(), || {
        format!("{} violations, first {}", violations.len(), violations[0])
    })?;
    Ok(format!("{} tuples, {accepted} accepted, 0 violations", tuples.len()))
}

fn criterion_2() -> Outcome {
    let (a, b, c, d) = (7, 3, 11, 5);
    let real = pair_constant(a, b, c, d, false);
    let int = pair_constant(a, b, c, d, true);
    ensure(real == rat(2), || format!("real pair constraint {real}, want 2"))?;
    ensure(int == rat(2 - 8), || format!("integer pair constraint {int}, want -6"))?;
    ensure(!scan_has_integer(a, b, c, d), || "scan found an integer in [11/5, 7/3]".into())?;
    Ok("a d - b c = 2 >= 0, correction (b-1)(d-1) = 8, no integer in [11/5, 7/3]".into())
}

fn random_rows(rng: &mut ChaCha8Rng, count: usize, offsets: std::ops::RangeInclusive<i64>) -> Vec<Row> {
    (0..count)
        .map(|_| {
            let normal = [rng.random_range(-5..=5), rng.random_range(-5..=5)];
            Row::from_ints(&normal, rng.random_range(offsets.clone()))
        })
        .collect()
}

/// `8 (normal . x) >= 8 offset` at `x = (i/8, j/8)`, for integer rows.
fn grid_holds(rows: &[Row], i: i64, j: i64) -> bool {
    rows.iter().all(|row| {
        let n: Vec<i64> = row.normal.iter().map(|v| rat_to_i64(v).unwrap()).collect();
        n[0] * i + n[1] * j >= 8 * rat_to_i64(&row.offset).unwrap()
    })
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    let (mut covered, mut not_covered, mut grid_points) = (0, 0, 0u64);
    let mut made = 0;
    while made < 200 {
        let rows = rng.random_range(3..=8);
        let p = HPolyhedron::new(2, random_rows(&mut rng, rows, -20..=0)).unwrap();
        if !p.check_bounded() {
            continue;
        }
        made += 1;
        let (n1, n2) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let c1 = HPolyhedron::new(2, random_rows(&mut rng, n1, -10..=10)).unwrap();
        let c2 = HPolyhedron::new(2, random_rows(&mut rng, n2, -10..=10)).unwrap();
        let report = covering_check(&p, &c1, &c2).map_err(|e| e.to_string())?;
        match &report.verdict {
            CoveringVerdict::Covered => {
                covered += 1;
                let vs = p.enumerate_vertices().map_err(|e| e.to_string())?;
                let lo = |j: usize| vs.iter().map(|v| rat_to_i64(&(&v.coords[j] * rat(8)).floor()).unwrap()).min();
                let hi = |j: usize| vs.iter().map(|v| rat_to_i64(&(&v.coords[j] * rat(8)).ceil()).unwrap()).max();
                let (Some(x0), Some(x1), Some(y0), Some(y1)) = (lo(0), hi(0), lo(1), hi(1)) else { continue };
                for i in x0..=x1 {
                    for j in y0..=y1 {
                        if grid_holds(&p.rows, i, j) {
                            grid_points += 1;
                            ensure(grid_holds(&c1.rows, i, j) || grid_holds(&c2.rows, i, j), || {
                                format!("covered, but ({i}/8, {j}/8) is outside both sets; P = {:?}", p.rows)
                            })?;
                        }
                    }
                }
            }
            CoveringVerdict::NotCovered { witness } => {
                not_covered += 1;
                ensure(p.contains(witness), || format!("witness {witness:?} outside P"))?;
                ensure(!c1.contains(witness) && !c2.contains(witness), || {
                    format!("witness {witness:?} lies in C1 or C2")
                })?;
            }
        }
    }
    ensure(covered >= 20 && not_covered >= 20, || {
        format!("unbalanced suite: {covered} covered, {not_covered} not covered")
    })?;
    Ok(format!(
        "200 instances: {covered} covered ({grid_points} grid points checked), {not_covered} not covered with valid witnesses"
    ))
}

fn random_bivar(rng: &mut ChaCha8Rng) -> BivarPoly {
    // One coefficient per exponent keeps every coefficient in [-9, 9].
    let mut terms = std::collections::BTreeMap::new();
    for _ in 0..rng.random_range(1..=8) {
        let i = rng.random_range(0..=4);
        let j = rng.random_range(0..=4 - i);
        // Lean positive so that some members certify.
        let mag = rng.random_range(1..=9);
        terms.insert((i, j), if rng.random_bool(0.75) { mag } else { -mag });
    }
    let terms: Vec<(usize, usize, i64)> = terms.into_iter().map(|((i, j), c)| (i, j, c)).collect();
    BivarPoly::from_terms(&terms)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0004);
    let mut suite: Vec<(BivarPoly, i64, i64)> = (0..100)
        .map(|_| (random_bivar(&mut rng), rng.random_range(0..=12), rng.random_range(0..=12)))
        .collect();
    let handcrafted = [
        BivarPoly::from_terms(&[(1, 0, 1), (0, 1, 1)]),
        BivarPoly::from_terms(&[(1, 1, 1), (0, 0, -100)]),
        BivarPoly::from_terms(&[(2, 0, 1), (0, 1, -1)]),
    ];
    for p in &handcrafted {
        for (r0, k0) in [(1, 1), (5, 5), (11, 10), (20, 20)] {
            suite.push((p.clone(), r0, k0));
        }
    }
    let certified: Vec<(BivarPoly, i64, i64, u64)> = suite
        .into_iter()
        .filter(|(p, r0, k0)| certify_positive(p, *r0, *k0).is_ok())
        .map(|(p, r0, k0)| (p, r0, k0, rng.random()))
        .collect();
    let violation = certified.par_iter().find_map_any(|(p, r0, k0, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        (0..10_000).find_map(|_| {
            let den = rng.random_range(1..=1000);
            let r = rat(*r0) + rat_frac(rng.random_range(0..=100 * den), den);
            let k = rat(*k0) + rat_frac(rng.random_range(0..=100 * den), den);
            let v = p.eval(&r, &k);
            (v <= rat(0)).then(|| format!("{p} certified on [{r0}, oo) x [{k0}, oo) but equals {v} at ({r}, {k})"))
        })
    });
    if let Some(v) = violation {
        return Err(v);
    }
    ensure(certified.len() >= 10, || format!("only {} certified polynomials", certified.len()))?;
    Ok(format!(
        "{} of 112 cases certified, 10000 points each, 0 violations",
        certified.len()
    ))
}

fn criterion_5() -> Outcome {
    let b = binom_eval(17, 4).map_err(|e| e.to_string())?;
    ensure(b.to_string() == "5985", || format!("binom(21, 4) = {b}"))?;
    let (d, g) = bn::mrc_vertex_demo(17, 4).map_err(|e| e.to_string())?;
    ensure(d == rat_frac(50711, 25) && g == rat_frac(53244, 25), || format!("vertex ({d}, {g})"))?;
    ensure(!d.is_integer() && !g.is_integer(), || "vertex is integral".into())?;
    let rho = bn::rho_rat(&d, &g, 17);
    ensure(rho == rat(0), || format!("rho at the vertex is {rho}"))?;
    let hilbert = rat(4) * &d + rat(1) - &g;
    ensure(hilbert == rat(5985), || format!("4d + 1 - g = {hilbert}"))?;
    Ok(format!("binom = 5985, vertex ({d}, {g}) is non-integral, substitution exact"))
}

fn criterion_6() -> Outcome {
    ensure(bn::rho(5, 2, 3) == 2, || format!("rho(5,2,3) = {}", bn::rho(5, 2, 3)))?;
    ensure(bn::max_points_bound(5, 2, 3) == Ok(10), || "max_points_bound(5,2,3) != 10".into())?;
    ensure(bn::max_points_guaranteed(5, 2, 3) == Ok(7), || "max_points_guaranteed(5,2,3) != 7".into())?;
    let expected: [(&str, &[&[i64]]); 8] = [
        ("interpolation_nonspecial", &[&[5, 2, 3], &[6, 2, 4], &[7, 2, 5]]),
        ("points_nonspecial", &[&[5, 2, 3], &[7, 2, 5]]),
        ("quadric_intersection_p3", &[&[4, 1], &[5, 2], &[6, 2], &[6, 4], &[7, 5], &[8, 6]]),
        ("plane_intersection_p3", &[&[6, 4]]),
        ("hyperplane_intersection_p4", &[&[8, 5], &[9, 6], &[10, 7]]),
        ("interpolation_p3", &[&[5, 2], &[6, 4]]),
        ("interpolation_p4", &[&[6, 2]]),
        ("twisted_interpolation_p4", &[&[6, 2], &[8, 5], &[9, 6], &[10, 7]]),
    ];
    ensure(bn::TABLES.len() == expected.len(), || format!("{} tables", bn::TABLES.len()))?;
    for (name, entries) in expected {
        let t = bn::table(name).map_err(|e| e.to_string())?;
        ensure(t.entries == entries, || format!("{name}: {:?}", t.entries))?;
        for e in entries {
            ensure(bn::is_exception(name, e) == Ok(true), || format!("{name}: lookup of {e:?}"))?;
        }
    }
    Ok("rho = 2, bound = 10, guaranteed = 7, 8 tables equal".into())
}

fn check_json(file: &str) -> Result<Vec<u8>, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demos").join(file);
    let out = Command::new(env!("CARGO_BIN_EXE_paramfeas"))
        .env_remove("PARAMFEAS_THREADS")
        .args(["--format", "json", "check"])
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    Ok(out.stdout)
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    for (file, verdict) in [
        ("toy_interval.pf", "certified"),
        ("patched.pf", "certified_with_patches"),
        ("gap.pf", "refuted"),
    ] {
        let first = check_json(file)?;
        let second = check_json(file)?;
        ensure(first == second, || format!("{file}: reports differ between runs"))?;
        let value: serde_json::Value = serde_json::from_slice(&first).map_err(|e| format!("{file}: {e}"))?;
        ensure(value["verdict"] == verdict, || format!("{file}: verdict {}", value["verdict"]))?;
        lines.push(format!("{file} {verdict}"));
    }
    Ok(format!("{}, reports byte-identical", lines.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("integer criterion, exhaustive", criterion_1, Duration::from_secs(60)),
        ("(7,3,11,5) instance", criterion_2, Duration::MAX),
        ("covering vs grid oracle", criterion_3, Duration::from_secs(120)),
        ("positivity soundness", criterion_4, Duration::MAX),
        ("vertex anecdote", criterion_5, Duration::from_secs(1)),
        ("BN spot checks", criterion_6, Duration::MAX),
        ("demos end to end", criterion_7, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (n, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({elapsed:.2?})", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} ({elapsed:.2?})", n + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
