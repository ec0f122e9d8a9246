//! `paramfeas`: command-line front end.
//!
//! Exit codes: 0 certified (or satisfied), 1 refuted (or failed),
//! 2 unknown, 3 input error.

mod render;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use paramfeas::bn;
use paramfeas::dsl::{parse, parse_polynomial, validate, CheckedProblem};
use paramfeas::elimination::{
    default_order, eliminate_all, parametric_oracle, Elimination, EliminationStep, FixedOracle, Mode,
    SignOracle,
};
use paramfeas::exact::{rat, Assignment, BINOM, PARAM_K, PARAM_R};
use paramfeas::pipeline::{check_fixed_with, run, Config, FixedVerdict, Verdict};
use paramfeas::positivity::{certify_positive_with, BivarPoly, BranchMethod, CertifyOptions};

const INPUT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "paramfeas", version, about = "Certify integer solutions of parametric linear inequality systems")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Real,
    Integer,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    Cauchy,
    Sturm,
}

#[derive(Subcommand)]
enum Command {
    /// Run elimination, certification and patching on a problem file.
    Check {
        /// Problem file, or `-` for stdin.
        file: String,
        /// Last k specialized for constraints involving B (default k0 + 10).
        #[arg(long)]
        kmax: Option<i64>,
        /// Most parameter points patched by brute force.
        #[arg(long, default_value_t = Config::default().patch_cap)]
        patch_cap: usize,
        /// Fixed-parameter checks spent probing an unbounded failure region.
        #[arg(long, default_value_t = Config::default().probe_budget)]
        probe_budget: usize,
        /// Record wall-clock time in the report (makes it nondeterministic).
        #[arg(long)]
        timing: bool,
    },
    /// Eliminate the variables of one block and print the remaining system.
    Eliminate {
        file: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Integer)]
        mode: ModeArg,
        /// Comma-separated variables to eliminate, in order (default: all of
        /// the block's variables, innermost first).
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
        /// `base`, or the 1-based index of a goal disjunct.
        #[arg(long, default_value = "base")]
        block: String,
        /// Decide coefficient signs at fixed parameters, e.g. `--fix r=17`.
        #[arg(long = "fix")]
        fix: Vec<String>,
    },
    /// Try to certify `P(r, k) > 0` for all integers r >= r0, k >= k0.
    ProvePos {
        /// Polynomial in r and k.
        expr: String,
        #[arg(long)]
        r0: i64,
        #[arg(long, default_value_t = 0)]
        k0: i64,
        /// Bound on the branch points used by condition (e).
        #[arg(long, value_enum, default_value_t = BranchArg::Cauchy)]
        branch: BranchArg,
    },
    /// Decide the problem at fixed parameters with covering and lattice detail.
    Fixed {
        file: String,
        /// Parameter values, e.g. `--fix r=17 --fix k=4`.
        #[arg(long = "fix", required = true)]
        fix: Vec<String>,
        /// Largest lattice box scanned.
        #[arg(long, default_value_t = Config::default().lattice_cap)]
        lattice_cap: u128,
    },
    /// Brill-Noether formulas and exception tables.
    Bn {
        #[command(subcommand)]
        query: BnQuery,
    },
}

#[derive(Subcommand)]
enum BnQuery {
    /// Brill-Noether number of (d, g, r).
    Rho { d: i64, g: i64, r: i64 },
    /// Point-count bound for (d, g, r).
    Bound { d: i64, g: i64, r: i64 },
    /// The point-count bound lowered by 3.
    Guaranteed { d: i64, g: i64, r: i64 },
    /// Expected dimension of degree-k hypersurfaces containing the curve.
    Vanishing { d: i64, g: i64, r: i64, k: i64 },
    /// List one exception table, or all of them.
    Exceptions { name: Option<String> },
    /// Membership of a tuple in an exception table.
    IsException {
        name: String,
        #[arg(allow_negative_numbers = true)]
        tuple: Vec<i64>,
    },
    /// The vertex with rho = 0 and k d + 1 - g = binom(r + k, k).
    Vertex { r: i64, k: i64 },
}

/// A failure before any verdict: bad input, I/O, or an unusable problem.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

struct Output {
    text: String,
    json: serde_json::Value,
    code: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT_ERROR } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {}", e.0);
        return ExitCode::from(INPUT_ERROR);
    }
    let out = match execute(&cli.command) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {}", e.0);
            return ExitCode::from(INPUT_ERROR);
        }
    };
    let mut body = match cli.format {
        Format::Text => out.text,
        Format::Json => serde_json::to_string_pretty(&out.json).expect("reports serialize"),
    };
    if !body.ends_with('\n') {
        body.push('\n');
    }
    let written = match &cli.output {
        Some(path) => fs::write(path, body.as_bytes()),
        None => io::stdout().lock().write_all(body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(INPUT_ERROR);
    }
    ExitCode::from(out.code)
}

fn configure_threads() -> Result<(), InputError> {
    let Ok(value) = std::env::var("PARAMFEAS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| InputError(format!("PARAMFEAS_THREADS must be a positive integer, got `{value}`")))?;
    if n == 0 {
        return Err(InputError("PARAMFEAS_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn execute(command: &Command) -> Result<Output, InputError> {
    match command {
        Command::Check {
            file,
            kmax,
            patch_cap,
            probe_budget,
            timing,
        } => {
            let config = Config {
                kmax: *kmax,
                patch_cap: *patch_cap,
                probe_budget: *probe_budget,
                ..Config::default()
            };
            cmd_check(file, &config, *timing)
        }
        Command::Eliminate {
            file,
            mode,
            order,
            block,
            fix,
        } => cmd_eliminate(file, *mode, order.as_deref(), block, fix),
        Command::ProvePos { expr, r0, k0, branch } => cmd_prove_pos(expr, *r0, *k0, *branch),
        Command::Fixed { file, fix, lattice_cap } => cmd_fixed(file, fix, *lattice_cap),
        Command::Bn { query } => cmd_bn(query),
    }
}

fn read_input(path: &str) -> Result<String, InputError> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| InputError(format!("{path}: {e}")))
    }
}

fn load(path: &str) -> Result<(String, CheckedProblem), InputError> {
    let text = read_input(path)?;
    let spec = parse(&text).map_err(|e| InputError(format!("{path}:{e}")))?;
    let problem = validate(&spec).map_err(|e| InputError(format!("{path}: {e}")))?;
    Ok((text, problem))
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("reports serialize")
}

fn cmd_check(path: &str, config: &Config, timing: bool) -> Result<Output, InputError> {
    let (text, problem) = load(path)?;
    let start = Instant::now();
    let mut report = run(&problem, config)?;
    report.input_hash = hex::encode(Sha256::digest(text.as_bytes()));
    if timing {
        report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(Output {
        text: render::report(&report),
        json: to_json(&report),
        code: report.verdict.exit_code() as u8,
    })
}

/// Parses `name=value` fixings of `r` and `k`.
fn parse_fixings(fix: &[String]) -> Result<Assignment, InputError> {
    let mut out = Assignment::new();
    for item in fix {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| InputError(format!("expected name=value, got `{item}`")))?;
        let name = name.trim();
        if name != PARAM_R && name != PARAM_K {
            return Err(InputError(format!("only `r` and `k` can be fixed, got `{name}`")));
        }
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| InputError(format!("`{item}`: value must be an integer")))?;
        if out.insert(name.to_string(), rat(value)).is_some() {
            return Err(InputError(format!("`{name}` is fixed twice")));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct EliminateReport {
    block: String,
    mode: Mode,
    order: Vec<String>,
    input: Vec<String>,
    constraints: Vec<String>,
    contradiction: bool,
    steps: Vec<EliminationStep>,
}

fn cmd_eliminate(
    path: &str,
    mode: ModeArg,
    order: Option<&[String]>,
    block: &str,
    fix: &[String],
) -> Result<Output, InputError> {
    let (_, problem) = load(path)?;
    let (vars, system) = if block == "base" {
        (problem.base.vars.clone(), problem.base.polys())
    } else {
        let i: usize = block
            .parse()
            .ok()
            .filter(|&i| (1..=problem.goal.len()).contains(&i))
            .ok_or_else(|| {
                InputError(format!(
                    "--block must be `base` or a disjunct index in 1..={}, got `{block}`",
                    problem.goal.len()
                ))
            })?;
        (problem.goal[i - 1].vars.clone(), problem.goal[i - 1].polys())
    };
    let order = match order {
        Some(o) => {
            let o: Vec<String> = o.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            let unique: std::collections::BTreeSet<&String> = o.iter().collect();
            if unique.len() != o.len() || o.iter().any(|v| !vars.contains(v)) {
                return Err(InputError(format!(
                    "--order must list distinct variables of the block ({}); got `{}`",
                    vars.join(", "),
                    o.join(",")
                )));
            }
            o
        }
        None => default_order(&vars),
    };
    let mode = match mode {
        ModeArg::Real => Mode::Real,
        ModeArg::Integer => Mode::Integer,
    };
    let fixed = parse_fixings(fix)?;
    let parametric = parametric_oracle(&problem);
    let fixed_oracle = FixedOracle { params: fixed.clone() };
    let oracle: &dyn SignOracle = if fixed.is_empty() { &parametric } else { &fixed_oracle };
    let input: Vec<String> = system.iter().map(|p| format!("{p} >= 0")).collect();
    let (elim, code) = match eliminate_all(&system, &order, mode, oracle) {
        Ok(e) => (e, 0),
        Err(e) => {
            let msg = format!("elimination inconclusive: {e}");
            return Ok(Output {
                text: msg.clone(),
                json: serde_json::json!({ "block": block, "error": msg }),
                code: Verdict::Unknown.exit_code() as u8,
            });
        }
    };
    let Elimination { constraints, steps } = &elim;
    let report = EliminateReport {
        block: block.to_string(),
        mode,
        order,
        input,
        constraints: constraints.iter().map(|p| format!("{p} >= 0")).collect(),
        contradiction: elim.contradiction().is_some(),
        steps: steps.clone(),
    };
    Ok(Output {
        text: render::elimination(&report.order, &report.constraints, report.contradiction),
        json: to_json(&report),
        code,
    })
}

fn cmd_prove_pos(expr: &str, r0: i64, k0: i64, branch: BranchArg) -> Result<Output, InputError> {
    let poly = parse_polynomial(expr, &[PARAM_R, PARAM_K, BINOM])?;
    let p = BivarPoly::from_multipoly(&poly)?;
    let opts = CertifyOptions {
        branch_method: match branch {
            BranchArg::Cauchy => BranchMethod::Cauchy,
            BranchArg::Sturm => BranchMethod::Sturm,
        },
    };
    Ok(match certify_positive_with(&p, r0, k0, opts) {
        Ok(cert) => Output {
            text: render::certificate(&cert),
            json: serde_json::json!({ "certified": true, "certificate": to_json(&cert) }),
            code: 0,
        },
        Err(inc) => Output {
            text: render::inconclusive(&inc),
            json: serde_json::json!({ "certified": false, "inconclusive": to_json(&inc) }),
            code: Verdict::Unknown.exit_code() as u8,
        },
    })
}

fn cmd_fixed(path: &str, fix: &[String], lattice_cap: u128) -> Result<Output, InputError> {
    let (_, problem) = load(path)?;
    let fixed = parse_fixings(fix)?;
    let get = |name: &str| fixed.get(name).map(|v| v.to_integer().try_into().expect("parsed from i64"));
    let r: i64 = get(PARAM_R).ok_or_else(|| InputError("`--fix r=...` is required".into()))?;
    let report = check_fixed_with(&problem, r, get(PARAM_K), lattice_cap)?;
    let code = match report.verdict {
        FixedVerdict::Satisfied => 0,
        FixedVerdict::Failed => 1,
        FixedVerdict::Unknown => 2,
    };
    Ok(Output {
        text: render::fixed(&report),
        json: to_json(&report),
        code,
    })
}

fn cmd_bn(query: &BnQuery) -> Result<Output, InputError> {
    let (text, json) = match query {
        BnQuery::Rho { d, g, r } => {
            let v = bn::rho(*d, *g, *r);
            (v.to_string(), serde_json::json!({ "rho": v.to_string() }))
        }
        BnQuery::Bound { d, g, r } => {
            let v = bn::max_points_bound(*d, *g, *r)?;
            (v.to_string(), serde_json::json!({ "max_points_bound": v.to_string() }))
        }
        BnQuery::Guaranteed { d, g, r } => {
            let v = bn::max_points_guaranteed(*d, *g, *r)?;
            (v.to_string(), serde_json::json!({ "max_points_guaranteed": v.to_string() }))
        }
        BnQuery::Vanishing { d, g, r, k } => {
            let v = bn::expected_vanishing_dim(*d, *g, *r, *k)?;
            (v.to_string(), serde_json::json!({ "expected_vanishing_dim": v.to_string() }))
        }
        BnQuery::Exceptions { name } => {
            let tables: Vec<&bn::ExceptionTable> = match name {
                Some(n) => vec![bn::table(n)?],
                None => bn::TABLES.iter().collect(),
            };
            (render::tables(&tables), to_json(&tables))
        }
        BnQuery::IsException { name, tuple } => {
            let v = bn::is_exception(name, tuple)?;
            (v.to_string(), serde_json::json!({ "table": name, "tuple": tuple, "exception": v }))
        }
        BnQuery::Vertex { r, k } => {
            let (d, g) = bn::mrc_vertex_demo(*r, *k)?;
            (
                format!("{d} {g}"),
                serde_json::json!({ "d": d.to_string(), "g": g.to_string() }),
            )
        }
    };
    Ok(Output { text, json, code: 0 })
}
