use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::Zero;

use super::{AffineForm, DslError, ExistsBlock, Inequality, Param, ProblemSpec, Sense};
use crate::exact::{MultiPoly, Rat, BINOM, PARAM_K, PARAM_R};

const KEYWORDS: &[&str] = &[
    "param", "var", "system", "goal", "exists", "or", "majorant", "binom", BINOM,
];
const MAX_EXPONENT: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Int(BigInt),
    Ge,
    Le,
    Eq,
    Semi,
    Comma,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("`{n}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", punct(other)),
        }
    }
}

fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::Ge => ">=",
        Tok::Le => "<=",
        Tok::Eq => "=",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Caret => "^",
        _ => "?",
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, DslError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars);
            }
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                bump(&mut chars);
            }
            Tok::Int(s.parse().expect("digits"))
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_' || d == '\'') {
                    break;
                }
                s.push(d);
                bump(&mut chars);
            }
            Tok::Name(s)
        } else {
            bump(&mut chars);
            match c {
                '>' | '<' => {
                    if chars.peek() == Some(&'=') {
                        bump(&mut chars);
                        if c == '>' {
                            Tok::Ge
                        } else {
                            Tok::Le
                        }
                    } else {
                        return Err(DslError::Syntax {
                            line: tl,
                            col: tc,
                            msg: format!("strict `{c}` is not supported; write a shifted `{c}=`"),
                        });
                    }
                }
                '=' => Tok::Eq,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                other => {
                    return Err(DslError::Syntax {
                        line: tl,
                        col: tc,
                        msg: format!("unexpected character `{other}`"),
                    })
                }
            }
        };
        out.push(Spanned { tok, line: tl, col: tc });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    params: Vec<Param>,
    vars: Vec<String>,
    /// Names visible in the current block.
    scope: BTreeSet<String>,
    /// Decision variables visible in the current block.
    decision: Vec<String>,
}

/// Parses a problem file.
pub fn parse(text: &str) -> Result<ProblemSpec, DslError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        params: Vec::new(),
        vars: Vec::new(),
        scope: BTreeSet::from([BINOM.to_string()]),
        decision: Vec::new(),
    };
    p.problem()
}

/// Parses a single polynomial expression over `symbols`.
pub fn parse_polynomial(text: &str, symbols: &[&str]) -> Result<MultiPoly, DslError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        params: Vec::new(),
        vars: Vec::new(),
        scope: symbols.iter().map(|s| s.to_string()).collect(),
        decision: Vec::new(),
    };
    let e = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return p.syntax(&t, format!("unexpected {}", t.tok.describe()));
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, at: &Spanned, msg: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Syntax {
            line: at.line,
            col: at.col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, DslError> {
        let t = self.next();
        if t.tok == tok {
            Ok(t)
        } else {
            self.syntax(&t, format!("expected {}, found {}", tok.describe(), t.tok.describe()))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Name(n) if n == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), DslError> {
        if self.is_keyword(kw) {
            self.next();
            Ok(())
        } else {
            let t = self.peek().clone();
            self.syntax(&t, format!("expected `{kw}`, found {}", t.tok.describe()))
        }
    }

    /// Reads a fresh name and adds it to the scope.
    fn declare(&mut self) -> Result<String, DslError> {
        let t = self.next();
        let Tok::Name(name) = &t.tok else {
            return self.syntax(&t, format!("expected a name, found {}", t.tok.describe()));
        };
        if KEYWORDS.contains(&name.as_str()) {
            return self.syntax(&t, format!("`{name}` is reserved"));
        }
        if !self.scope.insert(name.clone()) {
            return Err(DslError::Duplicate {
                line: t.line,
                col: t.col,
                name: name.clone(),
            });
        }
        Ok(name.clone())
    }

    fn problem(&mut self) -> Result<ProblemSpec, DslError> {
        loop {
            if self.is_keyword("param") {
                self.next();
                let name = self.declare()?;
                self.expect(Tok::Ge)?;
                let lower = self.signed_int()?;
                self.expect(Tok::Semi)?;
                self.params.push(Param { name, lower });
            } else if self.is_keyword("var") {
                self.next();
                let names = self.name_list()?;
                self.vars.extend(names);
                self.expect(Tok::Semi)?;
            } else {
                break;
            }
        }
        self.expect_keyword("system")?;
        self.decision = self.vars.clone();
        let base_system = self.block()?;

        let mut goal = Vec::new();
        if self.is_keyword("goal") {
            self.next();
            goal.push(self.exists()?);
            while self.is_keyword("or") {
                self.next();
                goal.push(self.exists()?);
            }
        }
        let mut majorants = Vec::new();
        if self.is_keyword("majorant") {
            self.next();
            let saved = std::mem::take(&mut self.scope);
            self.scope = self.params.iter().map(|p| p.name.clone()).collect();
            self.decision = Vec::new();
            majorants = self.block()?;
            self.scope = saved;
        }
        let t = self.peek().clone();
        if t.tok != Tok::Eof {
            return self.syntax(&t, format!("unexpected {}", t.tok.describe()));
        }
        Ok(ProblemSpec {
            params: std::mem::take(&mut self.params),
            vars: std::mem::take(&mut self.vars),
            base_system,
            goal,
            majorants,
        })
    }

    fn signed_int(&mut self) -> Result<i64, DslError> {
        let negative = if self.peek().tok == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        let Tok::Int(v) = &t.tok else {
            return self.syntax(&t, format!("expected an integer, found {}", t.tok.describe()));
        };
        let v: i64 = match i64::try_from(v) {
            Ok(v) => v,
            Err(_) => return self.syntax(&t, "integer out of range"),
        };
        Ok(if negative { -v } else { v })
    }

    fn name_list(&mut self) -> Result<Vec<String>, DslError> {
        let mut names = vec![self.declare()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            names.push(self.declare()?);
        }
        Ok(names)
    }

    fn exists(&mut self) -> Result<ExistsBlock, DslError> {
        self.expect_keyword("exists")?;
        self.expect(Tok::LParen)?;
        let saved_scope = self.scope.clone();
        let new_vars = self.name_list()?;
        self.expect(Tok::RParen)?;
        let saved_decision = self.decision.clone();
        self.decision.extend(new_vars.iter().cloned());
        let system = self.block()?;
        self.scope = saved_scope;
        self.decision = saved_decision;
        Ok(ExistsBlock { new_vars, system })
    }

    fn block(&mut self) -> Result<Vec<Inequality>, DslError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while self.peek().tok != Tok::RBrace {
            out.push(self.inequality()?);
            self.expect(Tok::Semi)?;
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn inequality(&mut self) -> Result<Inequality, DslError> {
        let start = self.peek().clone();
        let lhs = self.expr()?;
        let op = self.next();
        let sense = match op.tok {
            Tok::Ge => Sense::Ge,
            Tok::Le => Sense::Le,
            Tok::Eq => Sense::Eq,
            _ => {
                return self.syntax(
                    &op,
                    format!("expected `>=`, `<=` or `=`, found {}", op.tok.describe()),
                )
            }
        };
        let rhs = self.expr()?;
        let poly = &lhs - &rhs;
        if let Err(e) = AffineForm::decompose(&poly, &self.decision) {
            return Err(DslError::Nonlinear {
                line: start.line,
                col: start.col,
                detail: e.to_string(),
            });
        }
        Ok(Inequality::new(poly, sense))
    }

    fn expr(&mut self) -> Result<MultiPoly, DslError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.next();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, DslError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    acc = &acc * &self.unary()?;
                }
                Tok::Slash => {
                    let at = self.next();
                    let divisor = self.unary()?;
                    match divisor.constant_value() {
                        Some(c) if !c.is_zero() => acc = acc.scale(&(Rat::from_integer(1.into()) / c)),
                        _ => return self.syntax(&at, "division is only allowed by a nonzero constant"),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<MultiPoly, DslError> {
        if self.peek().tok == Tok::Minus {
            self.next();
            return Ok(-&self.unary()?);
        }
        if self.peek().tok == Tok::Plus {
            self.next();
            return self.unary();
        }
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.next();
            let t = self.next();
            let Tok::Int(e) = &t.tok else {
                return self.syntax(&t, "exponent must be a nonnegative integer literal");
            };
            match u32::try_from(e) {
                Ok(e) if e <= MAX_EXPONENT => return Ok(base.pow(e)),
                _ => return self.syntax(&t, "exponent too large"),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MultiPoly, DslError> {
        let t = self.next();
        match &t.tok {
            Tok::Int(v) => Ok(MultiPoly::constant(Rat::from_integer(v.clone()))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Name(n) if n == "binom" => {
                self.expect(Tok::LParen)?;
                let top = self.expr()?;
                self.expect(Tok::Comma)?;
                let bottom = self.expr()?;
                self.expect(Tok::RParen)?;
                let r = MultiPoly::var(PARAM_R);
                let k = MultiPoly::var(PARAM_K);
                if top != &r + &k || bottom != k {
                    return self.syntax(&t, "only binom(r+k,k) is supported");
                }
                Ok(MultiPoly::binom())
            }
            Tok::Name(n) => {
                if self.scope.contains(n) {
                    Ok(MultiPoly::var(n))
                } else {
                    Err(DslError::UnknownSymbol {
                        line: t.line,
                        col: t.col,
                        name: n.clone(),
                    })
                }
            }
            other => self.syntax(&t, format!("expected an expression, found {}", other.describe())),
        }
    }
}
