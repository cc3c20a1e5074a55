//! Lexer and recursive-descent parser for the probabilistic language.
//!
//! Surface grammar:
//!
//! ```text
//! program  := stmt (";" stmt)*
//! stmt     := "skip"
//!           | ident ":=" rhs
//!           | "do" expr "times" program "od"
//! rhs      := expr
//!           | expr "@" expr ("," expr "@" expr)*
//!           | expr "@" expr "for" ident "in" "0" ".." expr
//! expr     := arith (cmpop arith)?            cmpop: = != < <= > >=
//! arith    := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | power
//! power    := postfix ("^" unary)?
//! postfix  := atom ("(" expr ")")*            application / indexing
//! atom     := number | "pi" | ident | lambda | builtin | "(" expr ")"
//! lambda   := "(" "lam" ident "|" arith "<=" ident "<" arith "." expr ")"
//! builtin  := mean | norm2 | sqrt | classical(e, e) | sum(i, e, e, e)
//! ```
//!
//! `#` starts a comment running to end of line. Integer literals are
//! arbitrary precision; a `j` suffix makes a literal imaginary. Loop counts
//! that fold to a constant are checked here; counts naming variables are
//! checked when the loop runs.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::ast::{Branches, Program, Stmt};
use crate::error::EvalError;
use crate::eval::eval;
use crate::expr::{BinOp, CmpOp, Expr};
use crate::value::{Env, Value};

/// Parse failure: either malformed syntax at a position, or a statically
/// rejected construct such as a constant negative loop count.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseError {
    Syntax {
        line: u32,
        col: u32,
        expected: Vec<String>,
        found: String,
    },
    Static {
        message: String,
    },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax {
                line,
                col,
                expected,
                found,
            } => write!(
                f,
                "line {line}, column {col}: expected {}, found {found}",
                expected.join(" or ")
            ),
            ParseError::Static { message } => write!(f, "static error: {message}"),
        }
    }
}

impl std::error::Error for ParseError {}

/// Parse a program and run the static checks.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let tokens = lex(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let program = parser.program()?;
    parser.expect_eof()?;
    validate_static(&program)?;
    Ok(program)
}

/// Parse a single expression (used for post-expectations and CLI bindings).
pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let e = parser.expr()?;
    parser.expect_eof()?;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Real(f64),
    Imag(f64),
    KwSkip,
    KwDo,
    KwTimes,
    KwOd,
    KwLam,
    KwFor,
    KwIn,
    KwMean,
    KwNorm2,
    KwClassical,
    KwSum,
    KwSqrt,
    KwPi,
    Semi,
    Assign,
    At,
    Comma,
    LParen,
    RParen,
    Bar,
    Dot,
    DotDot,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Real(r) => format!("real `{r}`"),
            Tok::Imag(b) => format!("imaginary literal `{b}j`"),
            Tok::KwSkip => "`skip`".into(),
            Tok::KwDo => "`do`".into(),
            Tok::KwTimes => "`times`".into(),
            Tok::KwOd => "`od`".into(),
            Tok::KwLam => "`lam`".into(),
            Tok::KwFor => "`for`".into(),
            Tok::KwIn => "`in`".into(),
            Tok::KwMean => "`mean`".into(),
            Tok::KwNorm2 => "`norm2`".into(),
            Tok::KwClassical => "`classical`".into(),
            Tok::KwSum => "`sum`".into(),
            Tok::KwSqrt => "`sqrt`".into(),
            Tok::KwPi => "`pi`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::At => "`@`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Dot => "`.`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            out.push(Spanned {
                tok: $tok,
                line: $l,
                col: $c,
            })
        };
    }
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |i: &mut usize, line: &mut u32, col: &mut u32| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col);
            }
            let mut is_real = false;
            // A '.' joins the number only when a digit follows, so `0..n`
            // lexes as `0`, `..`, `n`.
            if i < chars.len()
                && chars[i] == '.'
                && i + 1 < chars.len()
                && chars[i + 1].is_ascii_digit()
            {
                is_real = true;
                advance(&mut i, &mut line, &mut col);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(&mut i, &mut line, &mut col);
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_real = true;
                    while i < j {
                        advance(&mut i, &mut line, &mut col);
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        advance(&mut i, &mut line, &mut col);
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let imag = i < chars.len() && chars[i] == 'j';
            if imag {
                advance(&mut i, &mut line, &mut col);
            }
            let tok = if imag {
                Tok::Imag(text.parse::<f64>().expect("lexed number"))
            } else if is_real {
                Tok::Real(text.parse::<f64>().expect("lexed number"))
            } else {
                Tok::Int(text.parse::<BigInt>().expect("lexed integer"))
            };
            push!(tok, tl, tc);
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                advance(&mut i, &mut line, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "skip" => Tok::KwSkip,
                "do" => Tok::KwDo,
                "times" => Tok::KwTimes,
                "od" => Tok::KwOd,
                "lam" => Tok::KwLam,
                "for" => Tok::KwFor,
                "in" => Tok::KwIn,
                "mean" => Tok::KwMean,
                "norm2" => Tok::KwNorm2,
                "classical" => Tok::KwClassical,
                "sum" => Tok::KwSum,
                "sqrt" => Tok::KwSqrt,
                "pi" => Tok::KwPi,
                _ => Tok::Ident(word),
            };
            push!(tok, tl, tc);
            continue;
        }
        let two = if i + 1 < chars.len() {
            Some((chars[i], chars[i + 1]))
        } else {
            None
        };
        let (tok, len) = match (c, two) {
            (_, Some((':', '='))) => (Tok::Assign, 2),
            (_, Some(('.', '.'))) => (Tok::DotDot, 2),
            (_, Some(('<', '='))) => (Tok::Le, 2),
            (_, Some(('>', '='))) => (Tok::Ge, 2),
            (_, Some(('!', '='))) => (Tok::Ne, 2),
            (';', _) => (Tok::Semi, 1),
            ('@', _) => (Tok::At, 1),
            (',', _) => (Tok::Comma, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('|', _) => (Tok::Bar, 1),
            ('.', _) => (Tok::Dot, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('^', _) => (Tok::Caret, 1),
            ('=', _) => (Tok::Eq, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            _ => {
                return Err(ParseError::Syntax {
                    line: tl,
                    col: tc,
                    expected: vec!["a token".into()],
                    found: format!("`{c}`"),
                })
            }
        };
        for _ in 0..len {
            advance(&mut i, &mut line, &mut col);
        }
        push!(tok, tl, tc);
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn next(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here<T>(&self, expected: Vec<String>) -> Result<T, ParseError> {
        let here = &self.tokens[self.pos];
        Err(ParseError::Syntax {
            line: here.line,
            col: here.col,
            expected,
            found: here.tok.describe(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == &tok {
            self.next();
            Ok(())
        } else {
            self.error_here(vec![tok.describe()])
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.error_here(vec![Tok::Eof.describe()])
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        if let Tok::Ident(name) = self.peek() {
            let name = name.clone();
            self.next();
            Ok(name)
        } else {
            self.error_here(vec!["identifier".into()])
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut stmts = vec![self.stmt()?];
        while matches!(self.peek(), Tok::Semi) {
            self.next();
            stmts.push(self.stmt()?);
        }
        Ok(Program(stmts))
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        match self.peek() {
            Tok::KwSkip => {
                self.next();
                Ok(Stmt::Skip)
            }
            Tok::KwDo => {
                self.next();
                let count = self.expr()?;
                self.expect(Tok::KwTimes)?;
                let body = self.program()?;
                self.expect(Tok::KwOd)?;
                Ok(Stmt::DoTimes { count, body })
            }
            Tok::Ident(_) => {
                let target = self.ident()?;
                self.expect(Tok::Assign)?;
                self.rhs(target)
            }
            _ => self.error_here(vec!["`skip`".into(), "`do`".into(), "identifier".into()]),
        }
    }

    fn rhs(&mut self, target: String) -> Result<Stmt, ParseError> {
        let first = self.expr()?;
        if !matches!(self.peek(), Tok::At) {
            return Ok(Stmt::Assign { target, rhs: first });
        }
        self.next();
        let weight = self.expr()?;
        if matches!(self.peek(), Tok::KwFor) {
            self.next();
            let index = self.ident()?;
            self.expect(Tok::KwIn)?;
            match self.peek() {
                Tok::Int(n) if n.is_zero() => {
                    self.next();
                }
                _ => return self.error_here(vec!["`0`".into()]),
            }
            self.expect(Tok::DotDot)?;
            let hi = self.expr()?;
            return Ok(Stmt::ProbAssign {
                target,
                branches: Branches::Indexed {
                    value: first,
                    weight,
                    index,
                    lo: Expr::int(0),
                    hi,
                },
            });
        }
        let mut branches = vec![(first, weight)];
        while matches!(self.peek(), Tok::Comma) {
            self.next();
            let value = self.expr()?;
            self.expect(Tok::At)?;
            let weight = self.expr()?;
            branches.push((value, weight));
        }
        Ok(Stmt::ProbAssign {
            target,
            branches: Branches::Explicit(branches),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.arith()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.next();
        let rhs = self.arith()?;
        Ok(Expr::cmp(op, lhs, rhs))
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(e),
            };
            self.next();
            let rhs = self.term()?;
            e = Expr::bin(op, e, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(e),
            };
            self.next();
            let rhs = self.unary()?;
            e = Expr::bin(op, e, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Tok::Minus) {
            self.next();
            let inner = self.unary()?;
            // Fold a minus applied directly to a literal so `-1` is a
            // literal, matching what the printer emits for negative values.
            return Ok(match inner {
                Expr::Lit(Value::Int(n)) => Expr::Lit(Value::Int(-n)),
                Expr::Lit(Value::Real(r)) => Expr::Lit(Value::Real(-r)),
                Expr::Lit(Value::Complex(z)) => Expr::Lit(Value::Complex(-z)),
                other => Expr::Neg(std::sync::Arc::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.postfix()?;
        if matches!(self.peek(), Tok::Caret) {
            self.next();
            let exp = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while matches!(self.peek(), Tok::LParen) {
            self.next();
            let arg = self.expr()?;
            self.expect(Tok::RParen)?;
            e = Expr::apply(e, arg);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(Expr::Lit(Value::Int(n)))
            }
            Tok::Real(r) => {
                self.next();
                Ok(Expr::real(r))
            }
            Tok::Imag(b) => {
                self.next();
                Ok(Expr::imag(b))
            }
            Tok::KwPi => {
                self.next();
                Ok(Expr::Pi)
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident()?)),
            Tok::KwMean => self.unary_builtin(Tok::KwMean),
            Tok::KwNorm2 => self.unary_builtin(Tok::KwNorm2),
            Tok::KwSqrt => self.unary_builtin(Tok::KwSqrt),
            Tok::KwClassical => {
                self.next();
                self.expect(Tok::LParen)?;
                let i = self.expr()?;
                self.expect(Tok::Comma)?;
                let n = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Classical(i.into(), n.into()))
            }
            Tok::KwSum => {
                self.next();
                self.expect(Tok::LParen)?;
                let param = self.ident()?;
                self.expect(Tok::Comma)?;
                let lo = self.expr()?;
                self.expect(Tok::Comma)?;
                let hi = self.expr()?;
                self.expect(Tok::Comma)?;
                let body = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::sum(param, lo, hi, body))
            }
            Tok::LParen => {
                self.next();
                if matches!(self.peek(), Tok::KwLam) {
                    return self.lambda_tail();
                }
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.error_here(vec!["an expression".into()]),
        }
    }

    fn unary_builtin(&mut self, kw: Tok) -> Result<Expr, ParseError> {
        self.next();
        self.expect(Tok::LParen)?;
        let e = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(match kw {
            Tok::KwMean => Expr::Mean(e.into()),
            Tok::KwNorm2 => Expr::Norm2(e.into()),
            Tok::KwSqrt => Expr::Sqrt(e.into()),
            _ => unreachable!(),
        })
    }

    /// `(lam p | lo <= p < hi . body)`, with the opening paren and `lam`
    /// keyword already identified.
    fn lambda_tail(&mut self) -> Result<Expr, ParseError> {
        self.expect(Tok::KwLam)?;
        let param = self.ident()?;
        self.expect(Tok::Bar)?;
        // Bounds sit at the arithmetic level; the <= and < here belong to
        // the lambda header, not to comparison expressions.
        let lo = self.arith()?;
        self.expect(Tok::Le)?;
        let again = self.ident()?;
        if again != param {
            return Err(ParseError::Syntax {
                line: self.tokens[self.pos - 1].line,
                col: self.tokens[self.pos - 1].col,
                expected: vec![format!("`{param}`")],
                found: format!("identifier `{again}`"),
            });
        }
        self.expect(Tok::Lt)?;
        let hi = self.arith()?;
        self.expect(Tok::Dot)?;
        let body = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(Expr::lambda(param, lo, hi, body))
    }
}

/// Reject loop counts that fold to something other than a nonnegative
/// integer. Counts naming variables are deferred to run time.
fn validate_static(p: &Program) -> Result<(), ParseError> {
    for stmt in p.stmts() {
        if let Stmt::DoTimes { count, body } = stmt {
            match eval(count, &Env::new()) {
                Ok(Value::Int(n)) if !n.is_negative() => {}
                Ok(Value::Int(n)) => {
                    return Err(ParseError::Static {
                        message: format!("loop count evaluates to {n}, which is negative"),
                    })
                }
                Ok(v) => {
                    return Err(ParseError::Static {
                        message: format!("loop count must be an integer, got a {}", v.kind()),
                    })
                }
                Err(EvalError::UnboundVariable(_)) => {}
                Err(e) => {
                    return Err(ParseError::Static {
                        message: format!("loop count cannot be evaluated: {e}"),
                    })
                }
            }
            validate_static(body)?;
        }
    }
    Ok(())
}

/// Convenience for tests: a count literal as i64 when statically known.
pub(crate) fn const_count(count: &Expr) -> Option<i64> {
    match eval(count, &Env::new()) {
        Ok(Value::Int(n)) => n.to_i64(),
        _ => None,
    }
}
