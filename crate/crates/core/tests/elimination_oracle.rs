//! Elimination against independent feasibility oracles on random
//! constant-coefficient systems.

use itertools::Itertools;
use num_traits::{One, Zero};
use paramfeas::elimination::{eliminate_all, FixedOracle, Mode};
use paramfeas::exact::{rat, Assignment, MultiPoly, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];

/// Row `a . x >= b`.
#[derive(Debug, Clone)]
struct Row {
    a: Vec<i64>,
    b: i64,
}

fn poly(row: &Row) -> MultiPoly {
    let mut p = MultiPoly::int(-row.b);
    for (c, v) in row.a.iter().zip(VARS) {
        p = &p + &MultiPoly::var(v).scale(&rat(*c));
    }
    p
}

fn random_system(rng: &mut ChaCha8Rng, dim: usize, rows: usize, coeff: i64, rhs: i64) -> Vec<Row> {
    (0..rows)
        .map(|_| Row {
            a: (0..dim).map(|_| rng.random_range(-coeff..=coeff)).collect(),
            b: rng.random_range(-rhs..=rhs),
        })
        .collect()
}

fn no_params() -> FixedOracle {
    FixedOracle { params: Assignment::new() }
}

fn infeasible_after(system: &[Row], dim: usize, order: &[String], mode: Mode) -> bool {
    let polys: Vec<MultiPoly> = system.iter().map(poly).collect();
    let e = eliminate_all(&polys, order, mode, &no_params()).expect("constant coefficients always have a sign");
    assert!(e.constraints.iter().all(|c| c.is_constant()), "all of {:?} eliminated", &VARS[..dim]);
    e.contradiction().is_some()
}

/// Some solution of `A_I x = b_I`, free variables set to 0, or `None` if
/// inconsistent.
fn particular_solution(rows: &[&Row], dim: usize) -> Option<Vec<Rat>> {
    let mut m: Vec<Vec<Rat>> = rows
        .iter()
        .map(|r| r.a.iter().map(|&c| rat(c)).chain([rat(r.b)]).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..dim {
        let Some(p) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(row, p);
        let inv = Rat::one() / &m[row][col];
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..m.len() {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in 0..=dim {
                    let t = &m[row][j] * &f;
                    m[i][j] = &m[i][j] - t;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if m[row..].iter().any(|r| !r[dim].is_zero()) {
        return None;
    }
    let mut x = vec![Rat::zero(); dim];
    for (i, &col) in pivots.iter().enumerate() {
        x[col] = m[i][dim].clone();
    }
    Some(x)
}

/// A nonempty polyhedron contains a minimal face `{A_I x = b_I}`, and every
/// point of that affine space lies in the polyhedron.
fn lp_feasible(system: &[Row], dim: usize) -> bool {
    let holds = |x: &[Rat]| {
        system
            .iter()
            .all(|r| r.a.iter().zip(x).map(|(&c, v)| rat(c) * v).fold(Rat::zero(), |s, t| s + t) >= rat(r.b))
    };
    (0..=dim.min(system.len())).any(|size| {
        system
            .iter()
            .combinations(size)
            .any(|rows| particular_solution(&rows, dim).is_some_and(|x| holds(&x)))
    })
}

fn lattice_feasible(system: &[Row], dim: usize, box_half: i64) -> bool {
    (0..dim)
        .map(|_| -box_half..=box_half)
        .multi_cartesian_product()
        .any(|x| system.iter().all(|r| r.a.iter().zip(&x).map(|(c, v)| c * v).sum::<i64>() >= r.b))
}

fn order(dim: usize) -> Vec<String> {
    VARS[..dim].iter().rev().map(|s| s.to_string()).collect()
}

#[test]
fn real_mode_matches_lp_oracle_on_500_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut infeasible = 0;
    for _ in 0..500 {
        let dim = rng.random_range(1..=3);
        let rows = rng.random_range(1..=6);
        let system = random_system(&mut rng, dim, rows, 4, 8);
        let fm = infeasible_after(&system, dim, &order(dim), Mode::Real);
        let lp = !lp_feasible(&system, dim);
        assert_eq!(fm, lp, "{system:?}");
        infeasible += lp as usize;
    }
    // Both outcomes are exercised.
    assert!(infeasible > 50 && infeasible < 450, "{infeasible}");
}

/// Bounded systems: the box `|x_i| <= 6` plus random rows.
fn bounded_system(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Row> {
    let rows = rng.random_range(1..=4);
    let mut system = random_system(rng, dim, rows, 5, 10);
    for i in 0..dim {
        let mut e = vec![0; dim];
        e[i] = 1;
        system.push(Row { a: e.clone(), b: -6 });
        system.push(Row {
            a: e.iter().map(|c| -c).collect(),
            b: -6,
        });
    }
    system
}

#[test]
fn integer_mode_is_sound_against_lattice_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let (mut agree, mut conservative) = (0, 0);
    for _ in 0..400 {
        let dim = rng.random_range(1..=3);
        let system = bounded_system(&mut rng, dim);
        let int_ok = !infeasible_after(&system, dim, &order(dim), Mode::Integer);
        let lattice = lattice_feasible(&system, dim, 6);
        // No contradiction certifies an integer point.
        if int_ok {
            assert!(lattice, "integer elimination accepted a lattice-free system {system:?}");
        }
        // A real contradiction rules out integer points too.
        if infeasible_after(&system, dim, &order(dim), Mode::Real) {
            assert!(!lattice, "{system:?}");
        }
        if int_ok == lattice {
            agree += 1;
        } else {
            conservative += 1;
        }
    }
    assert!(agree > 300, "{agree} agreements, {conservative} conservative rejections");
}

#[test]
fn one_variable_integer_mode_is_exact_for_unit_coefficients() {
    // With b = 1 or d = 1 the correction term vanishes and rounding is exact.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..300 {
        let lo = rng.random_range(-20..=20);
        let b = rng.random_range(1..=9);
        let a = rng.random_range(-60..=60);
        let system = vec![Row { a: vec![1], b: lo }, Row { a: vec![-b], b: -a }];
        let int_ok = !infeasible_after(&system, 1, &order(1), Mode::Integer);
        let scan = (lo..=lo + 100).any(|n| b * n <= a);
        assert_eq!(int_ok, scan, "n >= {lo}, {b} n <= {a}");
    }
}

#[test]
fn real_verdict_is_invariant_under_elimination_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for _ in 0..200 {
        let dim = rng.random_range(2..=3);
        let rows = rng.random_range(2..=6);
        let system = random_system(&mut rng, dim, rows, 4, 8);
        let verdicts: Vec<bool> = VARS[..dim]
            .iter()
            .map(|s| s.to_string())
            .permutations(dim)
            .map(|o| infeasible_after(&system, dim, &o, Mode::Real))
            .collect();
        assert!(verdicts.iter().all_equal(), "{system:?}: {verdicts:?}");
    }
}
