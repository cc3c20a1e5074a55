//! Pretty-printer. Output reparses to a structurally identical AST for every
//! program the grammar can express.

use std::fmt::Write;

use num_traits::Signed;

use crate::ast::{Branches, Program, Stmt};
use crate::expr::{BinOp, CmpOp, Expr};
use crate::value::Value;

/// Render a program as parseable source.
pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    write_program(&mut out, p, 0);
    out
}

/// Render an expression as parseable source.
pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, Prec::Cmp);
    out
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&pretty(self))
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Cmp,
    Add,
    Mul,
    Unary,
    Pow,
    Postfix,
    Atom,
}

/// Precedence of the printed form of `e`: how tightly it binds without
/// parentheses. Negative literals print with a leading minus, so they bind
/// like a unary negation.
fn prec_of(e: &Expr) -> Prec {
    match e {
        Expr::Cmp(..) => Prec::Cmp,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => Prec::Add,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => Prec::Mul,
        Expr::Neg(_) => Prec::Unary,
        Expr::Bin(BinOp::Pow, ..) => Prec::Pow,
        Expr::Apply(..) | Expr::Index(..) => Prec::Postfix,
        Expr::Lit(Value::Int(n)) if n.is_negative() => Prec::Unary,
        Expr::Lit(Value::Real(r)) if r.is_sign_negative() => Prec::Unary,
        Expr::Lit(Value::Complex(z)) if z.re == 0.0 && z.im.is_sign_negative() => Prec::Unary,
        _ => Prec::Atom,
    }
}

fn write_program(out: &mut String, p: &Program, indent: usize) {
    for (i, stmt) in p.stmts().iter().enumerate() {
        if i > 0 {
            out.push_str(";\n");
        }
        write_stmt(out, stmt, indent);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, indent: usize) {
    let pad = "  ".repeat(indent);
    match s {
        Stmt::Skip => {
            let _ = write!(out, "{pad}skip");
        }
        Stmt::Assign { target, rhs } => {
            let _ = write!(out, "{pad}{target} := ");
            write_expr(out, rhs, Prec::Cmp);
        }
        Stmt::ProbAssign { target, branches } => {
            let _ = write!(out, "{pad}{target} := ");
            match branches {
                Branches::Explicit(pairs) => {
                    for (i, (value, weight)) in pairs.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write_expr(out, value, Prec::Cmp);
                        out.push_str(" @ ");
                        write_expr(out, weight, Prec::Cmp);
                    }
                }
                Branches::Indexed {
                    value,
                    weight,
                    index,
                    lo,
                    hi,
                } => {
                    write_expr(out, value, Prec::Cmp);
                    out.push_str(" @ ");
                    write_expr(out, weight, Prec::Cmp);
                    let _ = write!(out, " for {index} in ");
                    write_expr(out, lo, Prec::Cmp);
                    out.push_str(" .. ");
                    write_expr(out, hi, Prec::Cmp);
                }
            }
        }
        Stmt::DoTimes { count, body } => {
            let _ = write!(out, "{pad}do ");
            write_expr(out, count, Prec::Cmp);
            out.push_str(" times\n");
            write_program(out, body, indent + 1);
            let _ = write!(out, "\n{pad}od");
        }
    }
}

/// Real literal text that always lexes back as a real (never an integer).
fn real_literal(r: f64) -> String {
    let plain = format!("{r}");
    if plain.contains("inf") || plain.contains("NaN") {
        return plain;
    }
    let plain = if plain.contains('.') || plain.contains('e') {
        plain
    } else {
        // Keep a decimal point so the literal re-lexes as a real.
        format!("{plain}.0")
    };
    let exp = format!("{r:e}");
    if exp.len() + 4 < plain.len() {
        exp
    } else {
        plain
    }
}

fn write_expr(out: &mut String, e: &Expr, min: Prec) {
    let prec = prec_of(e);
    let parens = prec < min;
    if parens {
        out.push('(');
    }
    match e {
        Expr::Lit(Value::Int(n)) => {
            let _ = write!(out, "{n}");
        }
        Expr::Lit(Value::Real(r)) => out.push_str(&real_literal(*r)),
        Expr::Lit(Value::Complex(z)) if z.re == 0.0 => {
            let _ = write!(out, "{}j", real_literal(z.im));
        }
        // Remaining literal kinds have no source form; shown for debugging.
        Expr::Lit(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Var(name) => out.push_str(name),
        Expr::Pi => out.push_str("pi"),
        Expr::Neg(a) => {
            out.push('-');
            write_expr(out, a, Prec::Unary);
        }
        Expr::Bin(op, a, b) => {
            let (sym, left, right) = match op {
                BinOp::Add => (" + ", Prec::Add, Prec::Mul),
                BinOp::Sub => (" - ", Prec::Add, Prec::Mul),
                BinOp::Mul => (" * ", Prec::Mul, Prec::Unary),
                BinOp::Div => (" / ", Prec::Mul, Prec::Unary),
                // Right-associative: the base must bind tighter.
                BinOp::Pow => (" ^ ", Prec::Postfix, Prec::Pow),
            };
            write_expr(out, a, left);
            out.push_str(sym);
            write_expr(out, b, right);
        }
        Expr::Cmp(op, a, b) => {
            let sym = match op {
                CmpOp::Eq => " = ",
                CmpOp::Ne => " != ",
                CmpOp::Lt => " < ",
                CmpOp::Le => " <= ",
                CmpOp::Gt => " > ",
                CmpOp::Ge => " >= ",
            };
            write_expr(out, a, Prec::Add);
            out.push_str(sym);
            write_expr(out, b, Prec::Add);
        }
        Expr::Apply(f, x) | Expr::Index(f, x) => {
            write_expr(out, f, Prec::Postfix);
            out.push('(');
            write_expr(out, x, Prec::Cmp);
            out.push(')');
        }
        Expr::Lambda {
            param,
            lo,
            hi,
            body,
        } => {
            let _ = write!(out, "(lam {param} | ");
            write_expr(out, lo, Prec::Add);
            let _ = write!(out, " <= {param} < ");
            write_expr(out, hi, Prec::Add);
            out.push_str(" . ");
            write_expr(out, body, Prec::Cmp);
            out.push(')');
        }
        Expr::Sum {
            param,
            lo,
            hi,
            body,
        } => {
            let _ = write!(out, "sum({param}, ");
            write_expr(out, lo, Prec::Cmp);
            out.push_str(", ");
            write_expr(out, hi, Prec::Cmp);
            out.push_str(", ");
            write_expr(out, body, Prec::Cmp);
            out.push(')');
        }
        Expr::Mean(a) => {
            out.push_str("mean(");
            write_expr(out, a, Prec::Cmp);
            out.push(')');
        }
        Expr::Norm2(a) => {
            out.push_str("norm2(");
            write_expr(out, a, Prec::Cmp);
            out.push(')');
        }
        Expr::Classical(i, n) => {
            out.push_str("classical(");
            write_expr(out, i, Prec::Cmp);
            out.push_str(", ");
            write_expr(out, n, Prec::Cmp);
            out.push(')');
        }
        Expr::Sqrt(a) => {
            out.push_str("sqrt(");
            write_expr(out, a, Prec::Cmp);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expression, parse_program};

    fn round_trip_program(src: &str) {
        let p = parse_program(src).unwrap();
        let printed = pretty(&p);
        let again = parse_program(&printed)
            .unwrap_or_else(|e| panic!("printed form failed to parse: {e}\n{printed}"));
        assert_eq!(p, again, "printed form:\n{printed}");
    }

    fn round_trip_expr(src: &str) {
        let e = parse_expression(src).unwrap();
        let printed = pretty_expr(&e);
        let again = parse_expression(&printed).unwrap();
        assert_eq!(e, again, "printed form: {printed}");
    }

    #[test]
    fn skip_prints_bare() {
        assert_eq!(pretty(&parse_program("skip").unwrap()), "skip");
    }

    #[test]
    fn coin_statement_round_trips() {
        round_trip_program("coin := head @ 0.5, tail @ 0.5");
    }

    #[test]
    fn loops_indent_their_bodies() {
        let p = parse_program("do 2 times x := 1; y := 2 od").unwrap();
        assert_eq!(pretty(&p), "do 2 times\n  x := 1;\n  y := 2\nod");
        round_trip_program("do 2 times x := 1; y := 2 od");
    }

    #[test]
    fn negative_literals_parenthesize_as_power_bases() {
        round_trip_expr("(-3) ^ 2");
        round_trip_expr("-3 ^ 2");
        round_trip_expr("2 ^ -3");
    }

    #[test]
    fn subtraction_keeps_right_nesting_explicit() {
        round_trip_expr("a - (b - c)");
        round_trip_expr("a - b - c");
        round_trip_expr("(a + b) * c");
        round_trip_expr("a + b * c");
    }

    #[test]
    fn comparisons_nest_only_with_parens() {
        round_trip_expr("(a = b) = c");
        round_trip_expr("a <= b");
    }

    #[test]
    fn lambda_and_builtins_round_trip() {
        round_trip_expr("(lam i | 0 <= i < N . 2 * mean(S) - S(i))");
        round_trip_expr("sum(i, 0, N, norm2(S(i)))");
        round_trip_expr("classical(i, N)");
        round_trip_expr("1 / sqrt(N)");
        round_trip_expr("pi / 4");
    }

    #[test]
    fn indexed_assignment_round_trips() {
        round_trip_program("S := classical(i, N) @ norm2(S(i)) for i in 0 .. N");
    }

    #[test]
    fn real_literals_never_print_as_integers() {
        assert_eq!(real_literal(1.0), "1.0");
        assert_eq!(real_literal(0.5), "0.5");
        assert_eq!(real_literal(1e300), "1e300");
        round_trip_program("x := 1.0; y := 2");
    }
}
