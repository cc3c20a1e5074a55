//! Expectation-transformer engine.
//!
//! The primary strategy propagates a finite distribution over environments
//! forward through the program; the weakest pre-expectation of a
//! post-expectation is then the weighted sum of its value over the leaves.
//! The classical backward transformer, which substitutes through statements
//! right to left, is kept as an independent oracle: it grows expressions
//! multiplicatively per loop iteration, so it is meant for small instances
//! and is evaluated with memoization.
//!
//! Branch weights are evaluated in the state before the assignment, must be
//! nonnegative, and must sum to one within [`WEIGHT_SUM_TOLERANCE`];
//! zero-weight branches are dropped without evaluating their values.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{Branches, Program, Stmt};
use crate::error::EvalError;
use crate::eval::Evaluator;
use crate::expr::{free_vars, subst, BinOp, Expr};
use crate::value::{Env, Value};

/// Allowed deviation of a branch-weight sum from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("branch weight {0} is negative")]
    NegativeWeight(f64),

    #[error("branch weight {0} is not finite")]
    NonFiniteWeight(f64),

    #[error("branch weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("probabilistic assignment has no branches")]
    NoBranches,

    #[error("loop count must be a nonnegative integer, got {0}")]
    LoopCount(String),

    #[error("loop count `{0}` is not a compile-time constant")]
    NonStaticLoopCount(String),
}

pub type EngineResult<T> = Result<T, EngineError>;

/// Finite-support distribution over final environments. Entries keep the
/// order in which execution paths resolve (branch index order, outermost
/// first), and weights are positive and sum to one within tolerance.
#[derive(Debug, Clone)]
pub struct Distribution {
    entries: Vec<(f64, Env)>,
}

impl Distribution {
    pub fn entries(&self) -> &[(f64, Env)] {
        &self.entries
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|(w, _)| w).sum()
    }

    /// Expected value of `post` over the leaves, summed in entry order.
    pub fn expectation(&self, post: &Expr) -> EngineResult<f64> {
        let mut ev = Evaluator::new();
        let mut acc = 0.0;
        for (w, env) in &self.entries {
            acc += w * ev.eval(post, env)?.as_real()?;
        }
        Ok(acc)
    }
}

/// Run `p` from `env`, propagating every probabilistic branch.
pub fn final_distribution(p: &Program, env: &Env) -> EngineResult<Distribution> {
    let mut ev = Evaluator::new();
    let mut entries = Vec::new();
    run_all(&mut ev, p.stmts(), 1.0, env.clone(), &mut entries)?;
    Ok(Distribution { entries })
}

/// Weakest pre-expectation of `post` for `p` started in `env`, computed by
/// forward propagation.
pub fn wp(p: &Program, post: &Expr, env: &Env) -> EngineResult<f64> {
    final_distribution(p, env)?.expectation(post)
}

fn run_all(
    ev: &mut Evaluator,
    stmts: &[Stmt],
    weight: f64,
    env: Env,
    out: &mut Vec<(f64, Env)>,
) -> EngineResult<()> {
    let Some((first, rest)) = stmts.split_first() else {
        out.push((weight, env));
        return Ok(());
    };
    match first {
        Stmt::Skip => run_all(ev, rest, weight, env, out),
        Stmt::Assign { target, rhs } => {
            let v = ev.eval(rhs, &env)?;
            let v = ev.materialize(v)?;
            run_all(ev, rest, weight, env.bind(target.clone(), v), out)
        }
        Stmt::ProbAssign { target, branches } => {
            let (weights, values) = resolve_branches(ev, branches, &env)?;
            for (k, w) in weights.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let (expr, branch_env) = &values[k];
                let v = ev.eval(expr, branch_env)?;
                let v = ev.materialize(v)?;
                run_all(ev, rest, weight * w, env.bind(target.clone(), v), out)?;
            }
            Ok(())
        }
        Stmt::DoTimes { count, body } => {
            let c = loop_count(ev, count, &env)?;
            let mut frontier = vec![(weight, env)];
            for _ in 0..c {
                let mut next = Vec::new();
                for (w, e) in frontier {
                    run_all(ev, body.stmts(), w, e, &mut next)?;
                }
                frontier = next;
            }
            for (w, e) in frontier {
                run_all(ev, rest, w, e, out)?;
            }
            Ok(())
        }
    }
}

/// One forward execution resolving probabilistic branches via `choose`,
/// which receives the full weight vector (zeros included).
fn run_single(
    ev: &mut Evaluator,
    stmts: &[Stmt],
    mut env: Env,
    choose: &mut dyn FnMut(&[f64]) -> usize,
) -> EngineResult<Env> {
    for stmt in stmts {
        match stmt {
            Stmt::Skip => {}
            Stmt::Assign { target, rhs } => {
                let v = ev.eval(rhs, &env)?;
                let v = ev.materialize(v)?;
                env = env.bind(target.clone(), v);
            }
            Stmt::ProbAssign { target, branches } => {
                let (weights, values) = resolve_branches(ev, branches, &env)?;
                let k = choose(&weights);
                let (expr, branch_env) = &values[k];
                let v = ev.eval(expr, branch_env)?;
                let v = ev.materialize(v)?;
                env = env.bind(target.clone(), v);
            }
            Stmt::DoTimes { count, body } => {
                let c = loop_count(ev, count, &env)?;
                for _ in 0..c {
                    env = run_single(ev, body.stmts(), env, choose)?;
                }
            }
        }
    }
    Ok(env)
}

/// Branch weights (pre-state), plus the value expression and environment to
/// evaluate per branch if it is taken.
type ResolvedBranches<'s> = (Vec<f64>, Vec<(&'s Expr, Env)>);

/// Resolve a branch list against the current state. Values stay unevaluated
/// so dropped and untaken branches cost nothing.
fn resolve_branches<'s>(
    ev: &mut Evaluator,
    branches: &'s Branches,
    env: &Env,
) -> EngineResult<ResolvedBranches<'s>> {
    let mut weights = Vec::new();
    let mut values = Vec::new();
    match branches {
        Branches::Explicit(pairs) => {
            for (value, weight) in pairs {
                weights.push(ev.eval(weight, env)?.as_real()?);
                values.push((value, env.clone()));
            }
        }
        Branches::Indexed {
            value,
            weight,
            index,
            lo,
            hi,
        } => {
            let lo = ev.eval(lo, env)?.as_index()?;
            let hi = ev.eval(hi, env)?.as_index()?;
            if lo > hi {
                return Err(EvalError::InvalidBounds { lo, hi }.into());
            }
            for i in lo..hi {
                let env_i = env.bind(index.clone(), Value::int(i));
                weights.push(ev.eval(weight, &env_i)?.as_real()?);
                values.push((value, env_i));
            }
        }
    }
    if weights.is_empty() {
        return Err(EngineError::NoBranches);
    }
    let mut sum = 0.0;
    for w in &weights {
        if !w.is_finite() {
            return Err(EngineError::NonFiniteWeight(*w));
        }
        if *w < 0.0 {
            return Err(EngineError::NegativeWeight(*w));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(EngineError::WeightSum(sum));
    }
    Ok((weights, values))
}

fn loop_count(ev: &mut Evaluator, count: &Expr, env: &Env) -> EngineResult<u64> {
    match ev.eval(count, env)? {
        Value::Int(n) => {
            use num_traits::ToPrimitive;
            n.to_u64()
                .ok_or_else(|| EngineError::LoopCount(n.to_string()))
        }
        other => Err(EngineError::LoopCount(other.kind().to_string())),
    }
}

/// Backward transformer: rewrite `post` through `p` by substitution. Loop
/// counts must be compile-time constants here.
pub fn wp_subst(p: &Program, post: &Expr) -> EngineResult<Expr> {
    let mut cur = post.clone();
    for stmt in p.stmts().iter().rev() {
        cur = wp_subst_stmt(stmt, &cur)?;
    }
    Ok(cur)
}

fn wp_subst_stmt(stmt: &Stmt, post: &Expr) -> EngineResult<Expr> {
    match stmt {
        Stmt::Skip => Ok(post.clone()),
        Stmt::Assign { target, rhs } => Ok(subst(post, target, rhs)),
        Stmt::ProbAssign { target, branches } => match branches {
            Branches::Explicit(pairs) => {
                if pairs.is_empty() {
                    return Err(EngineError::NoBranches);
                }
                let mut acc: Option<Expr> = None;
                for (value, weight) in pairs {
                    let term = Expr::bin(BinOp::Mul, weight.clone(), subst(post, target, value));
                    acc = Some(match acc {
                        None => term,
                        Some(prev) => Expr::bin(BinOp::Add, prev, term),
                    });
                }
                Ok(acc.expect("nonempty branches"))
            }
            Branches::Indexed {
                value,
                weight,
                index,
                lo,
                hi,
            } => {
                // The sum binds the branch index; rename it if the post
                // expectation (or the target) already uses that name.
                let mut avoid = free_vars(post);
                avoid.insert(target.clone());
                let (index, value, weight) = if avoid.contains(index) {
                    let fresh = fresh_var(index, &[&avoid, &free_vars(value), &free_vars(weight)]);
                    let value = subst(value, index, &Expr::var(fresh.clone()));
                    let weight = subst(weight, index, &Expr::var(fresh.clone()));
                    (fresh, value, weight)
                } else {
                    (index.clone(), value.clone(), weight.clone())
                };
                let body = Expr::bin(BinOp::Mul, weight, subst(post, target, &value));
                Ok(Expr::Sum {
                    param: index,
                    lo: Arc::new(lo.clone()),
                    hi: Arc::new(hi.clone()),
                    body: Arc::new(body),
                })
            }
        },
        Stmt::DoTimes { count, body } => {
            let c = crate::parser::const_count(count).ok_or_else(|| {
                EngineError::NonStaticLoopCount(crate::printer::pretty_expr(count))
            })?;
            if c < 0 {
                return Err(EngineError::LoopCount(c.to_string()));
            }
            let mut cur = post.clone();
            for _ in 0..c {
                cur = wp_subst(body, &cur)?;
            }
            Ok(cur)
        }
    }
}

fn fresh_var(base: &str, avoid: &[&HashSet<String>]) -> String {
    let mut candidate = format!("{base}'");
    while avoid.iter().any(|set| set.contains(&candidate)) {
        candidate.push('\'');
    }
    candidate
}

/// Oracle path: evaluate the substituted expression with memoization, so the
/// expression DAG produced by repeated substitution is shared rather than
/// re-evaluated.
pub fn wp_by_substitution(p: &Program, post: &Expr, env: &Env) -> EngineResult<f64> {
    let e = wp_subst(p, post)?;
    Ok(Evaluator::with_memo().eval(&e, env)?.as_real()?)
}

/// Deterministic pseudo-random sampler over program runs.
///
/// Each sample is one forward execution: probabilistic assignments resolve by
/// drawing from their branch weights with a ChaCha stream seeded per sample.
/// Because everything between branch points is deterministic, the sampler
/// memoizes the weight vector discovered at each choice-point path and the
/// final environment of each completed path; replays through cached territory
/// draw the same branches a fresh execution would, so results are identical
/// to running every sample from scratch.
pub struct Sampler<'p> {
    program: &'p Program,
    env: Env,
    points: HashMap<Vec<u32>, Vec<f64>>,
    leaves: HashMap<Vec<u32>, Env>,
}

impl<'p> Sampler<'p> {
    pub fn new(program: &'p Program, env: &Env) -> Self {
        Sampler {
            program,
            env: env.clone(),
            points: HashMap::new(),
            leaves: HashMap::new(),
        }
    }

    /// Final environment of the run driven by `seed`.
    pub fn sample(&mut self, seed: u64) -> EngineResult<Env> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut path: Vec<u32> = Vec::new();
        loop {
            if let Some(env) = self.leaves.get(&path) {
                return Ok(env.clone());
            }
            match self.points.get(&path) {
                Some(weights) => {
                    let k = draw(&mut rng, weights);
                    path.push(k as u32);
                }
                None => return self.explore(path, rng),
            }
        }
    }

    /// Execute the whole program, replaying the choices in `prefix` and
    /// drawing fresh ones beyond it; records everything discovered.
    fn explore(&mut self, prefix: Vec<u32>, mut rng: ChaCha8Rng) -> EngineResult<Env> {
        let mut ev = Evaluator::new();
        let mut path: Vec<u32> = Vec::new();
        let points = &mut self.points;
        let mut choose = |weights: &[f64]| -> usize {
            let k = if path.len() < prefix.len() {
                prefix[path.len()] as usize
            } else {
                points
                    .entry(path.clone())
                    .or_insert_with(|| weights.to_vec());
                draw(&mut rng, weights)
            };
            path.push(k as u32);
            k
        };
        let env = run_single(&mut ev, self.program.stmts(), self.env.clone(), &mut choose)?;
        self.leaves.insert(path, env.clone());
        Ok(env)
    }
}

/// One forward execution of `p` from `env`; the same seed gives the same
/// result. Equivalent to sampling once from a fresh [`Sampler`].
pub fn sample_run(p: &Program, env: &Env, seed: u64) -> EngineResult<Env> {
    Sampler::new(p, env).sample(seed)
}

/// Pick a branch: the first index whose cumulative weight exceeds the draw.
/// Zero-weight branches can never be chosen.
fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Reachable only through the tolerance slack in the weight sum.
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::CmpOp;
    use crate::parser::parse_program;

    fn env_of(pairs: &[(&str, i64)]) -> Env {
        let mut env = Env::new();
        for (name, v) in pairs {
            env = env.bind(*name, Value::int(*v));
        }
        env
    }

    fn eq(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Eq, a, b)
    }

    #[test]
    fn deterministic_assignment_gives_one_leaf() {
        let p = parse_program("x := 7").unwrap();
        let d = final_distribution(&p, &Env::new()).unwrap();
        assert_eq!(d.entries().len(), 1);
        assert_eq!(d.entries()[0].0, 1.0);
        assert_eq!(d.entries()[0].1.lookup("x").unwrap(), &Value::int(7));
    }

    #[test]
    fn coin_splits_into_two_half_weight_leaves() {
        let p = parse_program("coin := head @ 0.5, tail @ 0.5").unwrap();
        let env = env_of(&[("head", 0), ("tail", 1)]);
        let d = final_distribution(&p, &env).unwrap();
        assert_eq!(d.entries().len(), 2);
        assert_eq!(d.entries()[0].0, 0.5);
        assert_eq!(d.entries()[0].1.lookup("coin").unwrap(), &Value::int(0));
        assert_eq!(d.entries()[1].1.lookup("coin").unwrap(), &Value::int(1));
        assert_eq!(d.total_weight(), 1.0);
    }

    #[test]
    fn wp_of_fair_coin_heads_is_exactly_half() {
        let p = parse_program("coin := head @ 0.5, tail @ 0.5").unwrap();
        let env = env_of(&[("head", 0), ("tail", 1)]);
        let post = eq(Expr::var("coin"), Expr::var("head"));
        assert_eq!(wp(&p, &post, &env).unwrap(), 0.5);
    }

    #[test]
    fn measurement_of_a_uniform_state_is_uniform() {
        let p =
            parse_program("S := (lam i | 0 <= i < N . 1 / sqrt(N));\nS := classical(i, N) @ norm2(S(i)) for i in 0 .. N")
                .unwrap();
        let env = env_of(&[("N", 4)]);
        let d = final_distribution(&p, &env).unwrap();
        assert_eq!(d.entries().len(), 4);
        for (k, (w, leaf)) in d.entries().iter().enumerate() {
            assert!((w - 0.25).abs() < 1e-12);
            let expect = crate::eval::eval(
                &Expr::Classical(Arc::new(Expr::int(k as i64)), Arc::new(Expr::int(4))),
                &Env::new(),
            )
            .unwrap();
            assert_eq!(leaf.lookup("S").unwrap(), &expect);
        }
    }

    #[test]
    fn weights_are_evaluated_in_the_pre_state() {
        // x is both the target and the weight source; the pre-state value
        // 0.25 must drive the branch weights.
        let p = parse_program("x := 1 @ x, 0 @ 1 - x").unwrap();
        let env = Env::new().bind("x", Value::Real(0.25));
        let post = eq(Expr::var("x"), Expr::int(1));
        assert!((wp(&p, &post, &env).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_branches_are_dropped_without_evaluation() {
        // The zero branch divides by zero; dropping it first means no error.
        let p = parse_program("x := 1 / 0 @ 0, 2 @ 1").unwrap();
        let d = final_distribution(&p, &Env::new()).unwrap();
        assert_eq!(d.entries().len(), 1);
        assert_eq!(d.entries()[0].1.lookup("x").unwrap(), &Value::int(2));
    }

    #[test]
    fn bad_weight_sums_are_rejected() {
        let p = parse_program("x := 1 @ 0.3, 2 @ 0.3").unwrap();
        match final_distribution(&p, &Env::new()) {
            Err(EngineError::WeightSum(s)) => assert!((s - 0.6).abs() < 1e-12),
            other => panic!("expected weight-sum error, got {other:?}"),
        }
    }

    #[test]
    fn negative_weights_are_rejected() {
        let p = parse_program("x := 1 @ -0.5, 2 @ 1.5").unwrap();
        assert!(matches!(
            final_distribution(&p, &Env::new()),
            Err(EngineError::NegativeWeight(_))
        ));
    }

    #[test]
    fn runtime_loop_counts_must_be_nonnegative_integers() {
        let p = parse_program("do C times skip od").unwrap();
        let err = final_distribution(&p, &Env::new().bind("C", Value::int(-2))).unwrap_err();
        assert!(matches!(err, EngineError::LoopCount(_)));
    }

    #[test]
    fn substitution_transformer_matches_the_textbook_rule() {
        let p = parse_program("x := 7").unwrap();
        let post = Expr::cmp(CmpOp::Gt, Expr::var("x"), Expr::var("y"));
        let got = wp_subst(&p, &post).unwrap();
        assert_eq!(got, Expr::cmp(CmpOp::Gt, Expr::int(7), Expr::var("y")));
    }

    #[test]
    fn substitution_composes_sequences_right_to_left() {
        let p = parse_program("x := y; y := 2").unwrap();
        let post = Expr::cmp(CmpOp::Gt, Expr::var("x"), Expr::var("y"));
        // wp(x := y, wp(y := 2, x > y)) = wp(x := y, x > 2) = y > 2
        let got = wp_subst(&p, &post).unwrap();
        assert_eq!(got, Expr::cmp(CmpOp::Gt, Expr::var("y"), Expr::int(2)));
    }

    #[test]
    fn substitution_agrees_with_forward_on_the_coin() {
        let p = parse_program("coin := head @ 0.5, tail @ 0.5").unwrap();
        let env = env_of(&[("head", 0), ("tail", 1)]);
        let post = eq(Expr::var("coin"), Expr::var("head"));
        let forward = wp(&p, &post, &env).unwrap();
        let backward = wp_by_substitution(&p, &post, &env).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn substitution_handles_static_loops() {
        let p = parse_program("do 2 times x := x * 2 od").unwrap();
        let post = Expr::var("x");
        let env = Env::new().bind("x", Value::int(3));
        assert_eq!(wp_by_substitution(&p, &post, &env).unwrap(), 12.0);
        assert_eq!(wp(&p, &post, &env).unwrap(), 12.0);
    }

    #[test]
    fn substitution_rejects_non_static_loop_counts() {
        let p = parse_program("do C times skip od").unwrap();
        assert!(matches!(
            wp_subst(&p, &Expr::int(1)),
            Err(EngineError::NonStaticLoopCount(_))
        ));
    }

    #[test]
    fn indexed_substitution_renames_to_avoid_capturing_a_free_index() {
        // The post names `i` free; the measurement sum must not capture it.
        let p = parse_program(
            "S := (lam i | 0 <= i < N . 1 / sqrt(N));\nS := classical(i, N) @ norm2(S(i)) for i in 0 .. N",
        )
        .unwrap();
        let post = eq(
            Expr::var("S"),
            Expr::Classical(Arc::new(Expr::var("i")), Arc::new(Expr::var("N"))),
        );
        let env = env_of(&[("N", 4), ("i", 2)]);
        let forward = wp(&p, &post, &env).unwrap();
        let backward = wp_by_substitution(&p, &post, &env).unwrap();
        assert!((forward - 0.25).abs() < 1e-12);
        assert!((forward - backward).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = parse_program("coin := head @ 0.5, tail @ 0.5").unwrap();
        let env = env_of(&[("head", 0), ("tail", 1)]);
        let a = sample_run(&p, &env, 42).unwrap();
        let b = sample_run(&p, &env, 42).unwrap();
        assert_eq!(a.lookup("coin").unwrap(), b.lookup("coin").unwrap());
    }

    #[test]
    fn memoized_sampler_matches_fresh_runs_seed_for_seed() {
        let p = parse_program(
            "coin := 0 @ 0.5, 1 @ 0.5; do 2 times coin := coin @ 0.75, 1 - coin @ 0.25 od",
        )
        .unwrap();
        let env = Env::new();
        let mut sampler = Sampler::new(&p, &env);
        for seed in 0..200 {
            let cached = sampler.sample(seed).unwrap();
            let fresh = sample_run(&p, &env, seed).unwrap();
            assert_eq!(
                cached.lookup("coin").unwrap(),
                fresh.lookup("coin").unwrap(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn coin_frequency_is_near_half() {
        let p = parse_program("coin := 0 @ 0.5, 1 @ 0.5").unwrap();
        let env = Env::new();
        let mut sampler = Sampler::new(&p, &env);
        let mut heads = 0u32;
        for seed in 0..2000 {
            if sampler.sample(seed).unwrap().lookup("coin").unwrap() == &Value::int(0) {
                heads += 1;
            }
        }
        let freq = f64::from(heads) / 2000.0;
        assert!((freq - 0.5).abs() < 0.05, "frequency {freq}");
    }

    #[test]
    fn deterministic_programs_sample_their_only_leaf() {
        let p = parse_program("x := 3; do 2 times x := x * x od").unwrap();
        for seed in [0, 1, 99] {
            let env = sample_run(&p, &Env::new(), seed).unwrap();
            assert_eq!(env.lookup("x").unwrap(), &Value::int(81));
        }
    }
}
