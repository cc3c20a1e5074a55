//! Analysis of the bundled search program: the A/B amplitude recurrence in
//! exact rational arithmetic, the closed-form success probability, optimal
//! iteration counts, and the program/environment builders that feed the
//! expectation-transformer engine.
//!
//! Exactness matters here: the recurrence divides by N at every step, so a
//! floating-point version would drift over hundreds of iterations. Keeping
//! A and B rational makes the recurrence a trustworthy oracle for the
//! trigonometric closed form.

use std::f64::consts::PI;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::ast::{Branches, Program, Stmt};
use crate::engine::{self, EngineError};
use crate::expr::{BinOp, CmpOp, Expr};
use crate::value::{Env, FuncValue, Value};

/// Exact rational scalar (reduced form, positive denominator).
pub type Rational = BigRational;

/// Probability comparison slack used when choosing between the two candidate
/// iteration counts. Real gaps are ≥ 4e-7 for every search-space size except
/// the degenerate two-element case, where all counts succeed with
/// probability exactly ½ and float noise is the only difference.
const OPTIMAL_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroverError {
    #[error("search-space size must be at least 1, got {0}")]
    InvalidSize(u64),

    #[error("marked argument {x0} out of range for size {n}")]
    MarkedOutOfRange { x0: u64, n: u64 },

    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub type GroverResult<T> = Result<T, GroverError>;

/// Validated search parameters: space size N ≥ 1, marked argument
/// x₀ ∈ [0, N), iteration count C ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroverParams {
    n: u64,
    x0: u64,
    c: u64,
}

impl GroverParams {
    pub fn new(n: u64, x0: u64, c: u64) -> GroverResult<Self> {
        if n < 1 {
            return Err(GroverError::InvalidSize(n));
        }
        if x0 >= n {
            return Err(GroverError::MarkedOutOfRange { x0, n });
        }
        Ok(GroverParams { n, x0, c })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn x0(&self) -> u64 {
        self.x0
    }

    pub fn c(&self) -> u64 {
        self.c
    }
}

/// The search program in the modeling language. The syntax is parametric:
/// it reads the space size `N`, the iteration count `C`, and the oracle `f`
/// from its environment (see [`grover_env`]), so the same source drives
/// every parameter set.
///
/// ```text
/// S := (lam i | 0 <= i < N . 1 / sqrt(N));
/// do C times
///   S := (lam i | 0 <= i < N . S(i) - 2 * f(i) * S(i));
///   S := (lam i | 0 <= i < N . 2 * mean(S) - S(i))
/// od;
/// S := classical(i, N) @ norm2(S(i)) for i in 0 .. N
/// ```
pub fn build_grover_program() -> Program {
    let n = || Expr::var("N");
    let i = || Expr::var("i");
    let s_i = || Expr::apply(Expr::var("S"), i());
    let f_i = || Expr::apply(Expr::var("f"), i());

    let init = Stmt::Assign {
        target: "S".into(),
        rhs: Expr::lambda(
            "i",
            Expr::int(0),
            n(),
            Expr::bin(BinOp::Div, Expr::int(1), Expr::Sqrt(Arc::new(n()))),
        ),
    };
    let oracle = Stmt::Assign {
        target: "S".into(),
        rhs: Expr::lambda(
            "i",
            Expr::int(0),
            n(),
            Expr::bin(
                BinOp::Sub,
                s_i(),
                Expr::bin(
                    BinOp::Mul,
                    Expr::bin(BinOp::Mul, Expr::int(2), f_i()),
                    s_i(),
                ),
            ),
        ),
    };
    let diffusion = Stmt::Assign {
        target: "S".into(),
        rhs: Expr::lambda(
            "i",
            Expr::int(0),
            n(),
            Expr::bin(
                BinOp::Sub,
                Expr::bin(
                    BinOp::Mul,
                    Expr::int(2),
                    Expr::Mean(Arc::new(Expr::var("S"))),
                ),
                s_i(),
            ),
        ),
    };
    let iterate = Stmt::DoTimes {
        count: Expr::var("C"),
        body: Program(vec![oracle, diffusion]),
    };
    let measure = Stmt::ProbAssign {
        target: "S".into(),
        branches: Branches::Indexed {
            value: Expr::Classical(Arc::new(i()), Arc::new(n())),
            weight: Expr::Norm2(Arc::new(s_i())),
            index: "i".into(),
            lo: Expr::int(0),
            hi: n(),
        },
    };
    Program(vec![init, iterate, measure])
}

/// Environment for [`build_grover_program`]: binds `N`, `C`, `x0` as
/// integers and `f` as the indicator function of the marked argument,
/// f(i) = [i = x₀].
pub fn grover_env(p: &GroverParams) -> Env {
    let indicator = FuncValue {
        param: "i".into(),
        lo: 0,
        hi: p.n as i64,
        body: Arc::new(Expr::cmp(CmpOp::Eq, Expr::var("i"), Expr::int(p.x0 as i64))),
        env: Env::new(),
    };
    Env::new()
        .bind("N", Value::int(p.n as i64))
        .bind("C", Value::int(p.c as i64))
        .bind("x0", Value::int(p.x0 as i64))
        .bind("f", Value::Func(Arc::new(indicator)))
}

/// Post-expectation "the final state is the marked classical state":
/// `S = classical(x0, N)`.
pub fn success_post() -> Expr {
    Expr::cmp(
        CmpOp::Eq,
        Expr::var("S"),
        Expr::Classical(Arc::new(Expr::var("x0")), Arc::new(Expr::var("N"))),
    )
}

/// Success probability via the expectation-transformer engine: the weakest
/// pre-expectation of [`success_post`] for the search program.
pub fn wp_success(p: &GroverParams) -> GroverResult<f64> {
    Ok(engine::wp(
        &build_grover_program(),
        &success_post(),
        &grover_env(p),
    )?)
}

fn step_ab(n: &Rational, a: &mut Rational, b: &mut Rational) {
    let two = Rational::from_integer(BigInt::from(2));
    let four = Rational::from_integer(BigInt::from(4));
    let a_next = &*a + &two * &*b;
    let b_next = (n * &*b - &two * &*a - &four * &*b) / n;
    *a = a_next;
    *b = b_next;
}

/// Exact amplitude coefficients (A_C, B_C) of the marked and unmarked
/// amplitudes after C iterations, from A₀ = 0, B₀ = 1 and
/// A' = A + 2B, B' = (N·B − 2A − 4B)/N.
pub fn recurrence_ab(n: u64, c: u64) -> (Rational, Rational) {
    assert!(n >= 1, "search-space size must be at least 1");
    let n_rat = Rational::from_integer(BigInt::from(n));
    let mut a = Rational::zero();
    let mut b = Rational::one();
    for _ in 0..c {
        step_ab(&n_rat, &mut a, &mut b);
    }
    (a, b)
}

/// Exact success probability (A_C + B_C)²/N.
pub fn success_prob_recurrence_exact(n: u64, c: u64) -> Rational {
    let (a, b) = recurrence_ab(n, c);
    let sum = a + b;
    (&sum * &sum) / Rational::from_integer(BigInt::from(n))
}

/// Success probability after C iterations, by the exact recurrence.
pub fn success_prob_recurrence(n: u64, c: u64) -> f64 {
    success_prob_recurrence_exact(n, c)
        .to_f64()
        .expect("probability fits in f64")
}

/// θ_N = arcsin(1/√N), the rotation angle per half-iteration.
pub fn theta(n: u64) -> f64 {
    assert!(n >= 1, "search-space size must be at least 1");
    (1.0 / (n as f64).sqrt()).asin()
}

/// Success probability after C iterations, by the closed form
/// sin²((2C+1)·θ_N).
pub fn success_prob_closed(n: u64, c: u64) -> f64 {
    let t = theta(n);
    (((2 * c + 1) as f64) * t).sin().powi(2)
}

/// Real-valued location of the first probability maximum,
/// H(N) = π/(4θ_N) − ½.
pub fn optimal_real(n: u64) -> f64 {
    PI / (4.0 * theta(n)) - 0.5
}

/// The whole number of iterations closest to H(N). The two flanking
/// integers are compared by closed-form probability (equivalent to
/// comparing distances, and robust near exact ties); when both are equal
/// within tolerance the smaller count wins.
pub fn optimal_iterations(n: u64) -> u64 {
    let h = optimal_real(n);
    let lo = if h > 0.0 { h.floor() as u64 } else { 0 };
    let hi = lo + 1;
    let p_lo = success_prob_closed(n, lo);
    let p_hi = success_prob_closed(n, hi);
    if p_hi > p_lo + OPTIMAL_TIE_TOLERANCE {
        hi
    } else {
        lo
    }
}

/// Number of sampled runs (out of `runs`) whose measured state is the
/// marked classical state. Per-run seeds are drawn from a ChaCha stream
/// seeded with `seed`, so the count is a pure function of its arguments.
pub fn simulate_hits(p: &GroverParams, runs: u64, seed: u64) -> GroverResult<u64> {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    let program = build_grover_program();
    let env = grover_env(p);
    let mut sampler = engine::Sampler::new(&program, &env);
    let mut expected = vec![Complex64::new(0.0, 0.0); p.n as usize];
    expected[p.x0 as usize] = Complex64::new(1.0, 0.0);
    let expected = Value::AmpVector(std::sync::Arc::new(expected));
    let mut master = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..runs {
        let leaf = sampler
            .sample(master.gen::<u64>())
            .map_err(GroverError::Engine)?;
        let s = leaf
            .lookup("S")
            .map_err(|e| GroverError::Engine(e.into()))?;
        if *s == expected {
            hits += 1;
        }
    }
    Ok(hits)
}

/// One row of a probability sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub c: u64,
    pub p_recurrence: f64,
    pub p_closed: f64,
}

/// Success probabilities for C = 0 through Cmax inclusive, by both methods.
/// The recurrence advances incrementally, so the whole sweep costs one pass.
pub fn sweep(n: u64, cmax: u64) -> Vec<SweepRow> {
    assert!(n >= 1, "search-space size must be at least 1");
    let n_rat = Rational::from_integer(BigInt::from(n));
    let mut a = Rational::zero();
    let mut b = Rational::one();
    let mut rows = Vec::with_capacity(cmax as usize + 1);
    for c in 0..=cmax {
        if c > 0 {
            step_ab(&n_rat, &mut a, &mut b);
        }
        let sum = &a + &b;
        let exact = (&sum * &sum) / &n_rat;
        rows.push(SweepRow {
            c,
            p_recurrence: exact.to_f64().expect("probability fits in f64"),
            p_closed: success_prob_closed(n, c),
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::final_distribution;
    use crate::parser::parse_program;
    use crate::printer::pretty;

    fn rat(num: i64, den: i64) -> Rational {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn params_are_validated() {
        assert!(matches!(
            GroverParams::new(0, 0, 1),
            Err(GroverError::InvalidSize(0))
        ));
        assert!(matches!(
            GroverParams::new(4, 4, 1),
            Err(GroverError::MarkedOutOfRange { x0: 4, n: 4 })
        ));
        let p = GroverParams::new(8, 3, 2).unwrap();
        assert_eq!((p.n(), p.x0(), p.c()), (8, 3, 2));
    }

    #[test]
    fn recurrence_starts_at_zero_one() {
        assert_eq!(recurrence_ab(7, 0), (rat(0, 1), rat(1, 1)));
    }

    #[test]
    fn one_step_gives_two_and_n_minus_four_over_n() {
        for n in [2u64, 4, 128] {
            let (a, b) = recurrence_ab(n, 1);
            assert_eq!(a, rat(2, 1), "n={n}");
            assert_eq!(b, rat(n as i64 - 4, n as i64), "n={n}");
        }
    }

    #[test]
    fn two_steps_at_dimension_four() {
        assert_eq!(recurrence_ab(4, 2), (rat(2, 1), rat(-1, 1)));
    }

    #[test]
    fn recurrence_denominators_divide_a_power_of_n() {
        let (a, b) = recurrence_ab(12, 7);
        let n_pow = BigInt::from(12u64).pow(7);
        assert!(b.denom() > &BigInt::from(0));
        assert_eq!(&n_pow % a.denom(), BigInt::from(0));
        assert_eq!(&n_pow % b.denom(), BigInt::from(0));
    }

    #[test]
    fn zero_iterations_succeed_with_probability_one_over_n() {
        for n in [1u64, 2, 64] {
            assert!((success_prob_recurrence(n, 0) - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn one_iteration_at_dimension_four_is_certain() {
        assert_eq!(success_prob_recurrence(4, 1), 1.0);
        assert!((success_prob_closed(4, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn headline_probability_at_eight_iterations() {
        let by_recurrence = success_prob_recurrence(128, 8);
        let by_closed = success_prob_closed(128, 8);
        assert!((by_recurrence - 0.996).abs() < 1e-3);
        assert!((by_closed - 0.996).abs() < 1e-3);
        assert!((by_recurrence - 0.9956).abs() < 5e-4);
    }

    #[test]
    fn rotation_angles() {
        assert!((theta(1) - PI / 2.0).abs() < 1e-15);
        assert!((theta(4) - PI / 6.0).abs() < 1e-15);
        assert!((theta(128) - 0.08850).abs() < 1e-5);
        let s = theta(128).sin();
        assert!((s * s - 1.0 / 128.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_recurrence_on_a_grid() {
        for n in [2u64, 4, 8, 100] {
            for c in 0..=25 {
                let r = success_prob_recurrence(n, c);
                let s = success_prob_closed(n, c);
                assert!((r - s).abs() < 1e-9, "n={n} c={c}: {r} vs {s}");
                assert!((0.0..=1.0 + 1e-12).contains(&r));
            }
        }
    }

    #[test]
    fn first_maximum_locations() {
        assert!(optimal_real(1).abs() < 1e-12);
        assert!((optimal_real(4) - 1.0).abs() < 1e-12);
        assert!((optimal_real(128) - 8.374).abs() < 1e-3);
    }

    #[test]
    fn optimal_iteration_counts() {
        assert_eq!(optimal_iterations(1), 0);
        // Degenerate: every count succeeds with probability ½; ties resolve
        // to the smaller count.
        assert_eq!(optimal_iterations(2), 0);
        assert_eq!(optimal_iterations(4), 1);
        assert_eq!(optimal_iterations(128), 8);
        assert_eq!(optimal_iterations(1024), 25);
    }

    #[test]
    fn sweep_rows_cover_zero_through_cmax() {
        let rows = sweep(128, 20);
        assert_eq!(rows.len(), 21);
        assert_eq!(rows[0].c, 0);
        assert!((rows[0].p_recurrence - 1.0 / 128.0).abs() < 1e-15);
        for row in &rows {
            assert!(
                (row.p_recurrence - row.p_closed).abs() < 1e-9,
                "c={}",
                row.c
            );
        }
        let argmax = rows
            .iter()
            .max_by(|a, b| a.p_closed.partial_cmp(&b.p_closed).unwrap())
            .unwrap();
        assert_eq!(argmax.c, 8);
    }

    #[test]
    fn probability_is_periodic_at_dimension_four() {
        let rows = sweep(4, 6);
        assert!((rows[4].p_closed - 1.0).abs() < 1e-9);
        assert!((rows[4].p_recurrence - 1.0).abs() < 1e-9);
    }

    #[test]
    fn program_round_trips_through_the_printer() {
        let program = build_grover_program();
        let text = pretty(&program);
        assert_eq!(parse_program(&text).unwrap(), program);
    }

    #[test]
    fn environment_binds_the_indicator_oracle() {
        let env = grover_env(&GroverParams::new(8, 4, 1).unwrap());
        let mut ev = crate::eval::Evaluator::new();
        let mut at = |i: i64| {
            ev.eval(&Expr::apply(Expr::var("f"), Expr::int(i)), &env)
                .unwrap()
        };
        assert_eq!(at(4), Value::Real(1.0));
        assert_eq!(at(3), Value::Real(0.0));
    }

    #[test]
    fn init_statement_prepares_the_uniform_state() {
        let program = build_grover_program();
        let init = Program(vec![program.stmts()[0].clone()]);
        let env = grover_env(&GroverParams::new(8, 4, 1).unwrap());
        let d = final_distribution(&init, &env).unwrap();
        assert_eq!(d.entries().len(), 1);
        let s = d.entries()[0].1.lookup("S").unwrap();
        let amp = 1.0 / 8f64.sqrt();
        match s {
            Value::AmpVector(v) => {
                assert_eq!(v.len(), 8);
                for a in v.iter() {
                    assert_eq!(a.re, amp);
                    assert_eq!(a.im, 0.0);
                }
            }
            other => panic!("expected amplitude vector, got {other:?}"),
        }
    }

    #[test]
    fn zero_iterations_from_the_engine_equal_one_over_n() {
        let p = GroverParams::new(8, 2, 0).unwrap();
        assert!((wp_success(&p).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn engine_matches_recurrence_on_a_small_grid() {
        for n in [2u64, 4, 8] {
            for c in 0..=5 {
                let p = GroverParams::new(n, 0, c).unwrap();
                let by_engine = wp_success(&p).unwrap();
                let by_recurrence = success_prob_recurrence(n, c);
                assert!(
                    (by_engine - by_recurrence).abs() < 1e-9,
                    "n={n} c={c}: {by_engine} vs {by_recurrence}"
                );
            }
        }
    }

    #[test]
    fn success_probability_ignores_the_marked_position() {
        for n in [2u64, 4, 8, 16] {
            for c in [0u64, 1, 3] {
                let base = wp_success(&GroverParams::new(n, 0, c).unwrap()).unwrap();
                for x0 in 1..n {
                    let p = wp_success(&GroverParams::new(n, x0, c).unwrap()).unwrap();
                    assert!((p - base).abs() < 1e-12, "n={n} c={c} x0={x0}");
                }
            }
        }
    }

    #[test]
    fn engine_matches_closed_form_at_dimension_1024() {
        let p = GroverParams::new(1024, 7, 25).unwrap();
        let by_engine = wp_success(&p).unwrap();
        let by_closed = success_prob_closed(1024, 25);
        assert!((by_engine - by_closed).abs() < 1e-9);
    }
}
