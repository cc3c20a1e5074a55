//! Random-program strategies for property tests.
//!
//! Two families: [`arb_program_syntax`] generates arbitrary
//! source-representable syntax for printer/parser round-trip checks, and
//! [`arb_exec_case`] generates small runnable programs (with environment and
//! post-expectation) on which the forward and backward transformers must
//! agree.
//!
//! The syntax family avoids the few shapes the concrete syntax cannot
//! express: negations wrapped directly around literals or other negations
//! (the parser folds those into the literal), and builder-only index nodes.
//! The executable family additionally keeps every weight an exact dyadic
//! (so weight sums are exactly 1), loop counts literal (the backward
//! transformer requires static counts), magnitudes small (so float grouping
//! differences stay far below the comparison tolerance), and avoids
//! division and square roots (no runtime errors).

use std::sync::Arc;

use proptest::prelude::*;

use crate::ast::{Branches, Program, Stmt};
use crate::expr::{BinOp, CmpOp, Expr};
use crate::value::{Env, Value};
use num_complex::Complex64;

const KEYWORDS: &[&str] = &[
    "skip",
    "do",
    "times",
    "od",
    "lam",
    "for",
    "in",
    "mean",
    "norm2",
    "classical",
    "sum",
    "sqrt",
    "pi",
];

pub fn arb_ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_']{0,3}".prop_filter("identifiers must not collide with keywords", |s| {
        !KEYWORDS.contains(&s.as_str())
    })
}

fn arb_binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div),
        Just(BinOp::Pow),
    ]
}

fn arb_cmpop() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
    ]
}

/// Arbitrary expression that the pretty printer can represent in source.
pub fn arb_expr_syntax() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        4 => arb_ident().prop_map(Expr::var),
        3 => (-1000i64..1000).prop_map(Expr::int),
        2 => (-100.0f64..100.0).prop_map(Expr::real),
        1 => (-8.0f64..8.0).prop_map(Expr::imag),
        1 => Just(Expr::Pi),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            3 => (arb_binop(), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            2 => (arb_cmpop(), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::cmp(op, a, b)),
            1 => inner
                .clone()
                .prop_filter("negated literals and double negations reparse folded", |e| {
                    !matches!(e, Expr::Lit(_) | Expr::Neg(_))
                })
                .prop_map(|e| Expr::Neg(Arc::new(e))),
            2 => (inner.clone(), inner.clone()).prop_map(|(f, x)| Expr::apply(f, x)),
            1 => inner.clone().prop_map(|e| Expr::Mean(Arc::new(e))),
            1 => inner.clone().prop_map(|e| Expr::Norm2(Arc::new(e))),
            1 => inner.clone().prop_map(|e| Expr::Sqrt(Arc::new(e))),
            1 => (inner.clone(), inner.clone())
                .prop_map(|(i, n)| Expr::Classical(Arc::new(i), Arc::new(n))),
            1 => (arb_ident(), inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(p, lo, hi, b)| Expr::lambda(p, lo, hi, b)),
            1 => (arb_ident(), inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(p, lo, hi, b)| Expr::sum(p, lo, hi, b)),
        ]
    })
}

/// Loop counts that always pass static validation: small literals or
/// variables (variable counts are checked at run time).
fn arb_count_syntax() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => (0i64..5).prop_map(Expr::int),
        1 => arb_ident().prop_map(Expr::var),
    ]
}

fn arb_branches_syntax() -> impl Strategy<Value = Branches> {
    prop_oneof![
        3 => proptest::collection::vec((arb_expr_syntax(), arb_expr_syntax()), 1..4)
            .prop_map(Branches::Explicit),
        1 => (arb_expr_syntax(), arb_expr_syntax(), arb_ident(), arb_expr_syntax()).prop_map(
            |(value, weight, index, hi)| Branches::Indexed {
                value,
                weight,
                index,
                lo: Expr::int(0),
                hi,
            }
        ),
    ]
}

fn arb_stmt_syntax(depth: u32) -> BoxedStrategy<Stmt> {
    let base = prop_oneof![
        1 => Just(Stmt::Skip),
        5 => (arb_ident(), arb_expr_syntax())
            .prop_map(|(target, rhs)| Stmt::Assign { target, rhs }),
        3 => (arb_ident(), arb_branches_syntax())
            .prop_map(|(target, branches)| Stmt::ProbAssign { target, branches }),
    ];
    if depth == 0 {
        base.boxed()
    } else {
        prop_oneof![
            7 => base.boxed(),
            1 => (arb_count_syntax(), arb_program_syntax_depth(depth - 1))
                .prop_map(|(count, body)| Stmt::DoTimes { count, body })
                .boxed(),
        ]
        .boxed()
    }
}

fn arb_program_syntax_depth(depth: u32) -> BoxedStrategy<Program> {
    proptest::collection::vec(arb_stmt_syntax(depth), 1..5)
        .prop_map(Program)
        .boxed()
}

/// Arbitrary source-representable program, for round-trip properties.
pub fn arb_program_syntax() -> impl Strategy<Value = Program> {
    arb_program_syntax_depth(2)
}

/// A runnable program together with the environment it starts from and a
/// real-valued post-expectation to take the weakest pre-expectation of.
#[derive(Debug, Clone)]
pub struct ExecCase {
    pub program: Program,
    pub post: Expr,
    pub env: Env,
}

const SCALAR_VARS: &[&str] = &["x", "y", "z"];

/// Starting environment for executable cases: small integers for the scalar
/// variables and a basis vector of length `n` for `V`.
pub fn exec_base_env(n: usize) -> Env {
    let mut basis = vec![Complex64::new(0.0, 0.0); n];
    basis[0] = Complex64::new(1.0, 0.0);
    Env::new()
        .bind("x", Value::int(1))
        .bind("y", Value::int(2))
        .bind("z", Value::int(3))
        .bind("V", Value::AmpVector(Arc::new(basis)))
}

fn arb_scalar_var() -> impl Strategy<Value = Expr> {
    proptest::sample::select(SCALAR_VARS).prop_map(Expr::var)
}

/// Scalar expressions with bounded growth: sums, differences, comparisons,
/// and multiplication by literal factors only, so repeated squaring inside
/// loops cannot blow values up.
fn arb_exec_scalar() -> impl Strategy<Value = Expr> {
    let lit = prop_oneof![
        3 => (-2i64..=2).prop_map(Expr::int),
        1 => proptest::sample::select(&[0.5f64, 0.25, 1.5]).prop_map(Expr::real),
    ];
    let leaf = prop_oneof![2 => arb_scalar_var(), 2 => lit.clone()];
    leaf.prop_recursive(2, 8, 2, move |inner| {
        prop_oneof![
            3 => (
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            2 => (lit.clone(), inner.clone())
                .prop_map(|(k, e)| Expr::bin(BinOp::Mul, k, e)),
            1 => (
                prop_oneof![Just(CmpOp::Eq), Just(CmpOp::Le)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::cmp(op, a, b)),
        ]
    })
}

/// Branch weight vectors: exact dyadics summing to exactly 1.
const WEIGHT_PATTERNS: &[&[f64]] = &[
    &[1.0],
    &[0.5, 0.5],
    &[0.25, 0.75],
    &[0.5, 0.25, 0.25],
    &[0.125, 0.375, 0.5],
    &[0.25, 0.25, 0.25, 0.25],
];

fn arb_exec_prob_scalar() -> impl Strategy<Value = Stmt> {
    (
        proptest::sample::select(SCALAR_VARS),
        proptest::sample::select(WEIGHT_PATTERNS),
    )
        .prop_flat_map(|(target, weights)| {
            proptest::collection::vec(arb_exec_scalar(), weights.len()).prop_map(move |values| {
                let branches = values
                    .into_iter()
                    .zip(weights)
                    .map(|(v, w)| (v, Expr::real(*w)))
                    .collect();
                Stmt::ProbAssign {
                    target: target.to_string(),
                    branches: Branches::Explicit(branches),
                }
            })
        })
}

/// Indexed probabilistic assignment with uniform weight 1/n: either a
/// scalar function of the branch index, or the basis vector at the index.
fn arb_exec_prob_indexed(n: usize) -> impl Strategy<Value = Stmt> {
    let w = 1.0 / n as f64;
    let scalar_values = prop_oneof![
        Just(Expr::var("i")),
        (-2i64..=2).prop_map(|k| Expr::bin(BinOp::Add, Expr::var("i"), Expr::int(k))),
        (-2i64..=2).prop_map(|k| Expr::bin(BinOp::Mul, Expr::int(k), Expr::var("i"))),
    ];
    prop_oneof![
        (proptest::sample::select(SCALAR_VARS), scalar_values).prop_map(move |(target, value)| {
            Stmt::ProbAssign {
                target: target.to_string(),
                branches: Branches::Indexed {
                    value,
                    weight: Expr::real(w),
                    index: "i".to_string(),
                    lo: Expr::int(0),
                    hi: Expr::int(n as i64),
                },
            }
        }),
        Just(Stmt::ProbAssign {
            target: "V".to_string(),
            branches: Branches::Indexed {
                value: Expr::Classical(Arc::new(Expr::var("i")), Arc::new(Expr::int(n as i64))),
                weight: Expr::real(w),
                index: "i".to_string(),
                lo: Expr::int(0),
                hi: Expr::int(n as i64),
            },
        }),
    ]
}

fn arb_exec_simple_stmt(n: usize) -> BoxedStrategy<Stmt> {
    prop_oneof![
        4 => (proptest::sample::select(SCALAR_VARS), arb_exec_scalar())
            .prop_map(|(t, rhs)| Stmt::Assign { target: t.to_string(), rhs }),
        1 => (0..n).prop_map(move |j| Stmt::Assign {
            target: "V".to_string(),
            rhs: Expr::Classical(Arc::new(Expr::int(j as i64)), Arc::new(Expr::int(n as i64))),
        }),
        3 => arb_exec_prob_scalar(),
        2 => arb_exec_prob_indexed(n),
    ]
    .boxed()
}

fn arb_exec_stmt(n: usize) -> BoxedStrategy<Stmt> {
    prop_oneof![
        5 => arb_exec_simple_stmt(n),
        1 => (
            0i64..=2,
            proptest::collection::vec(arb_exec_simple_stmt(n), 1..=2)
        )
            .prop_map(|(count, body)| Stmt::DoTimes {
                count: Expr::int(count),
                body: Program(body),
            })
            .boxed(),
    ]
    .boxed()
}

fn arb_exec_post(n: usize) -> impl Strategy<Value = Expr> {
    let basis_eq = move |j: usize| {
        Expr::cmp(
            CmpOp::Eq,
            Expr::var("V"),
            Expr::Classical(Arc::new(Expr::int(j as i64)), Arc::new(Expr::int(n as i64))),
        )
    };
    prop_oneof![
        3 => arb_exec_scalar(),
        1 => (0..n).prop_map(basis_eq),
        1 => (arb_exec_scalar(), 0..n)
            .prop_map(move |(s, j)| Expr::bin(BinOp::Add, s, basis_eq(j))),
    ]
}

/// Runnable case: program, base environment, and post-expectation, sized so
/// both transformers stay exact up to float-grouping noise far below 1e-9.
pub fn arb_exec_case() -> impl Strategy<Value = ExecCase> {
    prop_oneof![Just(2usize), Just(4), Just(8)].prop_flat_map(|n| {
        (
            proptest::collection::vec(arb_exec_stmt(n), 1..=4),
            arb_exec_post(n),
        )
            .prop_map(move |(stmts, post)| ExecCase {
                program: Program(stmts),
                post,
                env: exec_base_env(n),
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{wp, wp_by_substitution};
    use crate::parser::parse_program;
    use crate::printer::pretty;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn printed_programs_reparse_to_the_same_syntax(p in arb_program_syntax()) {
            let text = pretty(&p);
            let back = parse_program(&text)
                .unwrap_or_else(|e| panic!("failed to reparse `{text}`: {e}"));
            prop_assert_eq!(back, p);
        }

        #[test]
        fn transformers_agree_on_runnable_cases(case in arb_exec_case()) {
            let forward = wp(&case.program, &case.post, &case.env).unwrap();
            let backward = wp_by_substitution(&case.program, &case.post, &case.env).unwrap();
            prop_assert!(
                (forward - backward).abs() < 1e-9,
                "forward {} vs backward {}",
                forward,
                backward
            );
        }

        #[test]
        fn runnable_cases_have_total_weight_one(case in arb_exec_case()) {
            let d = crate::engine::final_distribution(&case.program, &case.env).unwrap();
            prop_assert!((d.total_weight() - 1.0).abs() < 1e-9);
        }
    }
}
