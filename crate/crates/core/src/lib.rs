//! Probabilistic weakest-precondition calculus for a small imperative
//! language with probabilistic assignment, plus the linear-algebra and
//! number-theoretic toolkits used to analyze Grover-style search programs
//! written in that language.

pub mod ast;
pub mod engine;
pub mod error;
pub mod eval;
pub mod expr;
pub mod grover;
pub mod parser;
pub mod printer;
pub mod quantum;
pub mod series;
#[cfg(any(test, feature = "testing"))]
pub mod testing;
pub mod value;

pub use ast::{Branches, Program, Stmt};
pub use engine::{
    final_distribution, sample_run, wp, wp_by_substitution, wp_subst, Distribution, EngineError,
    EngineResult, Sampler, WEIGHT_SUM_TOLERANCE,
};
pub use error::{EvalError, EvalResult};
pub use eval::{eval, Evaluator};
pub use expr::{free_vars, subst, BinOp, CmpOp, Expr};
pub use grover::{
    build_grover_program, grover_env, optimal_iterations, optimal_real, recurrence_ab,
    simulate_hits, success_post, success_prob_closed, success_prob_recurrence,
    success_prob_recurrence_exact, sweep, theta, wp_success, GroverError, GroverParams,
    GroverResult, Rational, SweepRow,
};
pub use parser::{parse_expression, parse_program, ParseError};
pub use printer::{pretty, pretty_expr};
pub use quantum::{
    body_step, check_unitary, classical_state, grover_step_matrix, invert_about_mean,
    measure_probs, oracle_flip, state_mean, uniform_state, Matrix, QuantumError, QuantumResult,
    QuantumState,
};
pub use series::{
    dirichlet_check, gf_pair, series_coeffs, RationalFunction, SeriesError, SeriesResult,
};
pub use value::{amp_vectors_close, Env, FuncValue, Value};
