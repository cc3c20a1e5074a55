//! Expression syntax, free variables, and capture-avoiding substitution.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;

use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Expression AST. Children are reference-counted so substitution can share
/// unchanged subtrees.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Literal value. The parser only produces integer, real, and imaginary
    /// literals; evaluation may inline other value kinds.
    Lit(Value),
    Var(String),
    /// The constant pi.
    Pi,
    Neg(Arc<Expr>),
    Bin(BinOp, Arc<Expr>, Arc<Expr>),
    /// Comparison evaluating to the real 1.0 or 0.0.
    Cmp(CmpOp, Arc<Expr>, Arc<Expr>),
    /// Application `f(x)`; indexes when `f` is an amplitude vector.
    Apply(Arc<Expr>, Arc<Expr>),
    /// Explicit vector indexing; same semantics as `Apply`.
    Index(Arc<Expr>, Arc<Expr>),
    /// `(lam p | lo <= p < hi . body)`. Bounds are evaluated outside the
    /// binder; only `body` is in the parameter's scope.
    Lambda {
        param: String,
        lo: Arc<Expr>,
        hi: Arc<Expr>,
        body: Arc<Expr>,
    },
    /// `sum(p, lo, hi, body)`: sum of body over lo <= p < hi.
    Sum {
        param: String,
        lo: Arc<Expr>,
        hi: Arc<Expr>,
        body: Arc<Expr>,
    },
    /// Arithmetic mean of an amplitude vector; yields a complex number.
    Mean(Arc<Expr>),
    /// Squared modulus of a scalar: re^2 + im^2.
    Norm2(Arc<Expr>),
    /// `classical(i, n)`: the n-entry vector with a 1 at index i.
    Classical(Arc<Expr>, Arc<Expr>),
    Sqrt(Arc<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn int(n: impl Into<BigInt>) -> Expr {
        Expr::Lit(Value::Int(n.into()))
    }

    pub fn real(r: f64) -> Expr {
        Expr::Lit(Value::Real(r))
    }

    pub fn imag(b: f64) -> Expr {
        Expr::Lit(Value::Complex(Complex64::new(0.0, b)))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Arc::new(a), Arc::new(b))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Arc::new(a), Arc::new(b))
    }

    pub fn apply(f: Expr, x: Expr) -> Expr {
        Expr::Apply(Arc::new(f), Arc::new(x))
    }

    pub fn lambda(param: impl Into<String>, lo: Expr, hi: Expr, body: Expr) -> Expr {
        Expr::Lambda {
            param: param.into(),
            lo: Arc::new(lo),
            hi: Arc::new(hi),
            body: Arc::new(body),
        }
    }

    pub fn sum(param: impl Into<String>, lo: Expr, hi: Expr, body: Expr) -> Expr {
        Expr::Sum {
            param: param.into(),
            lo: Arc::new(lo),
            hi: Arc::new(hi),
            body: Arc::new(body),
        }
    }
}

/// Free variables of `e`.
pub fn free_vars(e: &Expr) -> HashSet<String> {
    let mut out = HashSet::new();
    collect_free(e, &mut Vec::new(), &mut out);
    out
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut HashSet<String>) {
    match e {
        Expr::Lit(_) | Expr::Pi => {}
        Expr::Var(name) => {
            if !bound.iter().any(|b| b == name) {
                out.insert(name.clone());
            }
        }
        Expr::Neg(a) | Expr::Mean(a) | Expr::Norm2(a) | Expr::Sqrt(a) => {
            collect_free(a, bound, out)
        }
        Expr::Bin(_, a, b)
        | Expr::Cmp(_, a, b)
        | Expr::Apply(a, b)
        | Expr::Index(a, b)
        | Expr::Classical(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Expr::Lambda {
            param,
            lo,
            hi,
            body,
        }
        | Expr::Sum {
            param,
            lo,
            hi,
            body,
        } => {
            collect_free(lo, bound, out);
            collect_free(hi, bound, out);
            bound.push(param.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
    }
}

/// Substitution `e[x := r]`, renaming binders where needed so free variables
/// of `r` are never captured.
pub fn subst(e: &Expr, x: &str, r: &Expr) -> Expr {
    subst_arc(&Arc::new(e.clone()), x, r).as_ref().clone()
}

fn subst_arc(e: &Arc<Expr>, x: &str, r: &Expr) -> Arc<Expr> {
    match e.as_ref() {
        Expr::Lit(_) | Expr::Pi => e.clone(),
        Expr::Var(name) => {
            if name == x {
                Arc::new(r.clone())
            } else {
                e.clone()
            }
        }
        Expr::Neg(a) => Arc::new(Expr::Neg(subst_arc(a, x, r))),
        Expr::Mean(a) => Arc::new(Expr::Mean(subst_arc(a, x, r))),
        Expr::Norm2(a) => Arc::new(Expr::Norm2(subst_arc(a, x, r))),
        Expr::Sqrt(a) => Arc::new(Expr::Sqrt(subst_arc(a, x, r))),
        Expr::Bin(op, a, b) => Arc::new(Expr::Bin(*op, subst_arc(a, x, r), subst_arc(b, x, r))),
        Expr::Cmp(op, a, b) => Arc::new(Expr::Cmp(*op, subst_arc(a, x, r), subst_arc(b, x, r))),
        Expr::Apply(a, b) => Arc::new(Expr::Apply(subst_arc(a, x, r), subst_arc(b, x, r))),
        Expr::Index(a, b) => Arc::new(Expr::Index(subst_arc(a, x, r), subst_arc(b, x, r))),
        Expr::Classical(a, b) => Arc::new(Expr::Classical(subst_arc(a, x, r), subst_arc(b, x, r))),
        Expr::Lambda {
            param,
            lo,
            hi,
            body,
        } => {
            let (param, lo, hi, body) = subst_binder(param, lo, hi, body, x, r);
            Arc::new(Expr::Lambda {
                param,
                lo,
                hi,
                body,
            })
        }
        Expr::Sum {
            param,
            lo,
            hi,
            body,
        } => {
            let (param, lo, hi, body) = subst_binder(param, lo, hi, body, x, r);
            Arc::new(Expr::Sum {
                param,
                lo,
                hi,
                body,
            })
        }
    }
}

/// Shared binder case: bounds are outside the scope, the body is inside.
fn subst_binder(
    param: &str,
    lo: &Arc<Expr>,
    hi: &Arc<Expr>,
    body: &Arc<Expr>,
    x: &str,
    r: &Expr,
) -> (String, Arc<Expr>, Arc<Expr>, Arc<Expr>) {
    let lo = subst_arc(lo, x, r);
    let hi = subst_arc(hi, x, r);
    if param == x {
        // x is shadowed inside the body.
        return (param.to_string(), lo, hi, body.clone());
    }
    let body_free = free_vars(body);
    if !body_free.contains(x) {
        return (param.to_string(), lo, hi, body.clone());
    }
    if free_vars(r).contains(param) {
        // Renaming required: pick a fresh name before substituting.
        let fresh = fresh_name(param, &[&body_free, &free_vars(r)], x);
        let renamed = subst_arc(body, param, &Expr::Var(fresh.clone()));
        let new_body = subst_arc(&renamed, x, r);
        (fresh, lo, hi, new_body)
    } else {
        (param.to_string(), lo, hi, subst_arc(body, x, r))
    }
}

/// `base` with primes appended until the name collides with nothing in
/// `avoid` and differs from `also_avoid`.
fn fresh_name(base: &str, avoid: &[&HashSet<String>], also_avoid: &str) -> String {
    let mut candidate = format!("{base}'");
    while candidate == also_avoid || avoid.iter().any(|s| s.contains(&candidate)) {
        candidate.push('\'');
    }
    candidate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Gt, a, b)
    }

    #[test]
    fn subst_replaces_free_occurrences() {
        // (x > y)[x := 7] is 7 > y
        let e = gt(Expr::var("x"), Expr::var("y"));
        let got = subst(&e, "x", &Expr::int(7));
        assert_eq!(got, gt(Expr::int(7), Expr::var("y")));
    }

    #[test]
    fn subst_leaves_bound_occurrences_alone() {
        // (lam x | 0 <= x < 2 . x)[x := 1] keeps the body intact.
        let e = Expr::lambda("x", Expr::int(0), Expr::int(2), Expr::var("x"));
        let got = subst(&e, "x", &Expr::int(1));
        assert_eq!(got, e);
    }

    #[test]
    fn subst_applies_to_binder_bounds() {
        // Bounds are outside the binder scope, so x is replaced there even
        // when the parameter shadows it in the body.
        let e = Expr::lambda("x", Expr::int(0), Expr::var("x"), Expr::var("x"));
        let got = subst(&e, "x", &Expr::int(5));
        assert_eq!(
            got,
            Expr::lambda("x", Expr::int(0), Expr::int(5), Expr::var("x"))
        );
    }

    #[test]
    fn subst_renames_to_avoid_capture() {
        // (lam i | 0 <= i < 2 . i + x)[x := i] must rename the parameter.
        let e = Expr::lambda(
            "i",
            Expr::int(0),
            Expr::int(2),
            Expr::bin(BinOp::Add, Expr::var("i"), Expr::var("x")),
        );
        let got = subst(&e, "x", &Expr::var("i"));
        let want = Expr::lambda(
            "i'",
            Expr::int(0),
            Expr::int(2),
            Expr::bin(BinOp::Add, Expr::var("i'"), Expr::var("i")),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn free_vars_respect_binders() {
        let e = Expr::sum(
            "i",
            Expr::int(0),
            Expr::var("n"),
            Expr::bin(BinOp::Add, Expr::var("i"), Expr::var("x")),
        );
        let fv = free_vars(&e);
        assert!(fv.contains("n"));
        assert!(fv.contains("x"));
        assert!(!fv.contains("i"));
    }

    #[test]
    fn fresh_names_keep_priming_until_unused() {
        let e = Expr::lambda(
            "i",
            Expr::int(0),
            Expr::int(2),
            Expr::bin(
                BinOp::Add,
                Expr::bin(BinOp::Add, Expr::var("i"), Expr::var("i'")),
                Expr::var("x"),
            ),
        );
        let got = subst(&e, "x", &Expr::var("i"));
        match got {
            Expr::Lambda { param, .. } => assert_eq!(param, "i''"),
            other => panic!("expected lambda, got {other:?}"),
        }
    }
}
