//! Expression evaluation.
//!
//! Evaluation is pure: a value is a function of the expression and the
//! environment, and errors are explicit. Two performance notes matter here:
//!
//! * Materializing a lambda into an amplitude vector first inlines every
//!   subexpression that does not depend on the lambda parameter, evaluating
//!   it once. Without this, a body like `2 * mean(S) - S(i)` would recompute
//!   `mean(S)` per element and turn a linear pass into a quadratic one.
//! * [`Evaluator::with_memo`] caches results keyed by node identity and
//!   environment identity. Substitution shares unchanged subtrees, so the
//!   large expressions produced by backward transformation form DAGs whose
//!   shared parts are then evaluated once.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{EvalError, EvalResult};
use crate::expr::{free_vars, BinOp, CmpOp, Expr};
use crate::value::{Env, FuncValue, Value};

/// Largest integer exponent accepted for exact integer powers.
const MAX_INT_EXPONENT: u32 = 1 << 20;

/// Evaluate `e` in `env` without memoization.
pub fn eval(e: &Expr, env: &Env) -> EvalResult<Value> {
    Evaluator::new().eval(e, env)
}

/// Expression evaluator, optionally memoizing.
#[derive(Default)]
pub struct Evaluator {
    memo: Option<HashMap<(usize, u64), Value>>,
}

impl Evaluator {
    pub fn new() -> Self {
        Evaluator { memo: None }
    }

    /// Evaluator that caches by (node identity, environment identity). The
    /// expression tree must stay alive for as long as the evaluator does.
    pub fn with_memo() -> Self {
        Evaluator {
            memo: Some(HashMap::new()),
        }
    }

    pub fn eval(&mut self, e: &Expr, env: &Env) -> EvalResult<Value> {
        let key = (e as *const Expr as usize, env.id());
        if let Some(memo) = &self.memo {
            if let Some(v) = memo.get(&key) {
                return Ok(v.clone());
            }
        }
        let v = self.eval_node(e, env)?;
        if let Some(memo) = &mut self.memo {
            memo.insert(key, v.clone());
        }
        Ok(v)
    }

    fn eval_node(&mut self, e: &Expr, env: &Env) -> EvalResult<Value> {
        match e {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Var(name) => env.lookup(name).cloned(),
            Expr::Pi => Ok(Value::Real(std::f64::consts::PI)),
            Expr::Neg(a) => neg_value(self.eval(a, env)?),
            Expr::Bin(op, a, b) => {
                let va = self.eval(a, env)?;
                let vb = self.eval(b, env)?;
                bin_values(*op, va, vb)
            }
            Expr::Cmp(op, a, b) => {
                let va = self.eval(a, env)?;
                let vb = self.eval(b, env)?;
                self.cmp_values(*op, va, vb)
            }
            Expr::Apply(f, x) | Expr::Index(f, x) => {
                let callee = self.eval(f, env)?;
                let arg = self.eval(x, env)?;
                self.apply(&callee, &arg)
            }
            Expr::Lambda {
                param,
                lo,
                hi,
                body,
            } => {
                let lo = self.eval(lo, env)?.as_index()?;
                let hi = self.eval(hi, env)?.as_index()?;
                if lo > hi {
                    return Err(EvalError::InvalidBounds { lo, hi });
                }
                Ok(Value::Func(Arc::new(FuncValue {
                    param: param.clone(),
                    lo,
                    hi,
                    body: body.clone(),
                    env: env.clone(),
                })))
            }
            Expr::Sum {
                param,
                lo,
                hi,
                body,
            } => {
                let lo = self.eval(lo, env)?.as_index()?;
                let hi = self.eval(hi, env)?.as_index()?;
                if lo > hi {
                    return Err(EvalError::InvalidBounds { lo, hi });
                }
                let mut acc = Value::int(0);
                for i in lo..hi {
                    let term = self.eval(body, &env.bind(param.clone(), Value::int(i)))?;
                    acc = bin_values(BinOp::Add, acc, term)?;
                }
                Ok(acc)
            }
            Expr::Mean(a) => {
                let v = self.eval(a, env)?;
                let vec = self.as_amp_vector(&v)?;
                let sum: Complex64 = vec.iter().sum();
                Ok(Value::Complex(sum / vec.len() as f64))
            }
            Expr::Norm2(a) => {
                let z = self.eval(a, env)?.as_complex()?;
                Ok(Value::Real(z.re * z.re + z.im * z.im))
            }
            Expr::Classical(i, n) => {
                let i = self.eval(i, env)?.as_index()?;
                let n = self.eval(n, env)?.as_index()?;
                if n < 1 {
                    return Err(EvalError::EmptyVector);
                }
                if i < 0 || i >= n {
                    return Err(EvalError::IndexOutOfBounds {
                        index: i,
                        lo: 0,
                        hi: n,
                    });
                }
                let mut v = vec![Complex64::new(0.0, 0.0); n as usize];
                v[i as usize] = Complex64::new(1.0, 0.0);
                Ok(Value::AmpVector(Arc::new(v)))
            }
            Expr::Sqrt(a) => {
                let r = self.eval(a, env)?.as_real()?;
                if r < 0.0 {
                    return Err(EvalError::SqrtOfNegative(r));
                }
                Ok(Value::Real(r.sqrt()))
            }
        }
    }

    /// Apply a function value or index an amplitude vector.
    fn apply(&mut self, callee: &Value, arg: &Value) -> EvalResult<Value> {
        match callee {
            Value::Func(fv) => {
                let idx = arg.as_index()?;
                if idx < fv.lo || idx >= fv.hi {
                    return Err(EvalError::IndexOutOfBounds {
                        index: idx,
                        lo: fv.lo,
                        hi: fv.hi,
                    });
                }
                self.eval(&fv.body, &fv.env.bind(fv.param.clone(), Value::int(idx)))
            }
            Value::AmpVector(v) => {
                let idx = arg.as_index()?;
                if idx < 0 || idx as usize >= v.len() {
                    return Err(EvalError::IndexOutOfBounds {
                        index: idx,
                        lo: 0,
                        hi: v.len() as i64,
                    });
                }
                Ok(Value::Complex(v[idx as usize]))
            }
            other => Err(EvalError::TypeMismatch {
                expected: "function or amplitude vector",
                found: other.kind(),
            }),
        }
    }

    /// View a value as an amplitude vector, materializing functions.
    pub fn as_amp_vector(&mut self, v: &Value) -> EvalResult<Arc<Vec<Complex64>>> {
        match v {
            Value::AmpVector(a) => Ok(a.clone()),
            Value::Func(fv) => self.materialize_func(fv),
            other => Err(EvalError::TypeMismatch {
                expected: "amplitude vector",
                found: other.kind(),
            }),
        }
    }

    /// Function values become amplitude vectors; everything else passes
    /// through. Assignments use this so stored states are extensional.
    pub fn materialize(&mut self, v: Value) -> EvalResult<Value> {
        match v {
            Value::Func(fv) => Ok(Value::AmpVector(self.materialize_func(&fv)?)),
            other => Ok(other),
        }
    }

    /// Apply a function pointwise over its index range.
    fn materialize_func(&mut self, fv: &FuncValue) -> EvalResult<Arc<Vec<Complex64>>> {
        if fv.lo == fv.hi {
            return Err(EvalError::EmptyVector);
        }
        let mut bound = vec![fv.param.clone()];
        let body = self.hoist(&fv.body, &mut bound, &fv.env)?;
        let mut out = Vec::with_capacity((fv.hi - fv.lo) as usize);
        for i in fv.lo..fv.hi {
            let v = self.eval(&body, &fv.env.bind(fv.param.clone(), Value::int(i)))?;
            out.push(v.as_complex()?);
        }
        Ok(Arc::new(out))
    }

    /// Replace every maximal subexpression that mentions none of the names in
    /// `bound` with its value, evaluated once in `env`.
    fn hoist(
        &mut self,
        e: &Arc<Expr>,
        bound: &mut Vec<String>,
        env: &Env,
    ) -> EvalResult<Arc<Expr>> {
        if matches!(e.as_ref(), Expr::Lit(_)) {
            return Ok(e.clone());
        }
        let fv = free_vars(e);
        if bound.iter().all(|b| !fv.contains(b)) {
            return Ok(Arc::new(Expr::Lit(self.eval(e, env)?)));
        }
        Ok(Arc::new(match e.as_ref() {
            // Reachable only when the node itself depends on a bound name.
            Expr::Lit(_) | Expr::Pi => unreachable!("constant nodes hoist above"),
            Expr::Var(_) => return Ok(e.clone()),
            Expr::Neg(a) => Expr::Neg(self.hoist(a, bound, env)?),
            Expr::Mean(a) => Expr::Mean(self.hoist(a, bound, env)?),
            Expr::Norm2(a) => Expr::Norm2(self.hoist(a, bound, env)?),
            Expr::Sqrt(a) => Expr::Sqrt(self.hoist(a, bound, env)?),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, self.hoist(a, bound, env)?, self.hoist(b, bound, env)?)
            }
            Expr::Cmp(op, a, b) => {
                Expr::Cmp(*op, self.hoist(a, bound, env)?, self.hoist(b, bound, env)?)
            }
            Expr::Apply(f, x) => {
                Expr::Apply(self.hoist(f, bound, env)?, self.hoist(x, bound, env)?)
            }
            Expr::Index(f, x) => {
                Expr::Index(self.hoist(f, bound, env)?, self.hoist(x, bound, env)?)
            }
            Expr::Classical(i, n) => {
                Expr::Classical(self.hoist(i, bound, env)?, self.hoist(n, bound, env)?)
            }
            Expr::Lambda {
                param,
                lo,
                hi,
                body,
            } => {
                let lo = self.hoist(lo, bound, env)?;
                let hi = self.hoist(hi, bound, env)?;
                bound.push(param.clone());
                let body = self.hoist(body, bound, env)?;
                bound.pop();
                Expr::Lambda {
                    param: param.clone(),
                    lo,
                    hi,
                    body,
                }
            }
            Expr::Sum {
                param,
                lo,
                hi,
                body,
            } => {
                let lo = self.hoist(lo, bound, env)?;
                let hi = self.hoist(hi, bound, env)?;
                bound.push(param.clone());
                let body = self.hoist(body, bound, env)?;
                bound.pop();
                Expr::Sum {
                    param: param.clone(),
                    lo,
                    hi,
                    body,
                }
            }
        }))
    }

    /// Comparison semantics: numbers compare with promotion, vectors compare
    /// exactly and only for equality. The result is the real 1.0 or 0.0.
    fn cmp_values(&mut self, op: CmpOp, a: Value, b: Value) -> EvalResult<Value> {
        let vectorish = |v: &Value| matches!(v, Value::AmpVector(_) | Value::Func(_));
        let truth = |b: bool| Value::Real(if b { 1.0 } else { 0.0 });
        if vectorish(&a) || vectorish(&b) {
            if !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                return Err(EvalError::TypeMismatch {
                    expected: "numbers for an ordering comparison",
                    found: "amplitude vector",
                });
            }
            let va = self.as_amp_vector(&a)?;
            let vb = self.as_amp_vector(&b)?;
            let equal = va == vb;
            return Ok(truth(if op == CmpOp::Eq { equal } else { !equal }));
        }
        match (&a, &b) {
            (Value::Int(x), Value::Int(y)) => Ok(truth(match op {
                CmpOp::Eq => x == y,
                CmpOp::Ne => x != y,
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
            })),
            _ => {
                let complex_involved = matches!(&a, Value::Complex(z) if z.im != 0.0)
                    || matches!(&b, Value::Complex(z) if z.im != 0.0);
                if complex_involved {
                    if !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                        return Err(EvalError::TypeMismatch {
                            expected: "real operands for an ordering comparison",
                            found: "complex",
                        });
                    }
                    let (x, y) = (a.as_complex()?, b.as_complex()?);
                    let equal = x == y;
                    return Ok(truth(if op == CmpOp::Eq { equal } else { !equal }));
                }
                let (x, y) = (a.as_real()?, b.as_real()?);
                Ok(truth(match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                }))
            }
        }
    }
}

fn neg_value(v: Value) -> EvalResult<Value> {
    match v {
        Value::Int(n) => Ok(Value::Int(-n)),
        Value::Real(r) => Ok(Value::Real(-r)),
        Value::Complex(z) => Ok(Value::Complex(-z)),
        other => Err(EvalError::TypeMismatch {
            expected: "number",
            found: other.kind(),
        }),
    }
}

/// Arithmetic with promotion: integers stay exact (except division), any
/// complex operand promotes both sides to complex, otherwise reals.
fn bin_values(op: BinOp, a: Value, b: Value) -> EvalResult<Value> {
    if matches!(a, Value::AmpVector(_) | Value::Func(_))
        || matches!(b, Value::AmpVector(_) | Value::Func(_))
    {
        return Err(EvalError::TypeMismatch {
            expected: "numbers",
            found: "amplitude vector or function",
        });
    }
    let complex_involved = matches!(a, Value::Complex(_)) || matches!(b, Value::Complex(_));
    if complex_involved {
        let (x, y) = (a.as_complex()?, b.as_complex()?);
        return match op {
            BinOp::Add => Ok(Value::Complex(x + y)),
            BinOp::Sub => Ok(Value::Complex(x - y)),
            BinOp::Mul => Ok(Value::Complex(x * y)),
            BinOp::Div => {
                if y == Complex64::new(0.0, 0.0) {
                    Err(EvalError::DivisionByZero)
                } else {
                    Ok(Value::Complex(x / y))
                }
            }
            BinOp::Pow => match b {
                Value::Int(ref n) => {
                    let exp = n.to_i32().ok_or(EvalError::ExponentOutOfRange)?;
                    Ok(Value::Complex(x.powi(exp)))
                }
                _ => Err(EvalError::TypeMismatch {
                    expected: "integer exponent for a complex base",
                    found: b.kind(),
                }),
            },
        };
    }
    if let (Value::Int(x), Value::Int(y)) = (&a, &b) {
        return match op {
            BinOp::Add => Ok(Value::Int(x + y)),
            BinOp::Sub => Ok(Value::Int(x - y)),
            BinOp::Mul => Ok(Value::Int(x * y)),
            BinOp::Div => {
                if y.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(Value::Real(a.as_real()? / b.as_real()?))
            }
            BinOp::Pow => {
                if y.is_negative() {
                    if x.is_zero() {
                        return Err(EvalError::DivisionByZero);
                    }
                    return Ok(Value::Real(a.as_real()?.powf(b.as_real()?)));
                }
                let exp = y
                    .to_u32()
                    .filter(|e| *e <= MAX_INT_EXPONENT)
                    .ok_or(EvalError::ExponentOutOfRange)?;
                Ok(Value::Int(x.pow(exp)))
            }
        };
    }
    let (x, y) = (a.as_real()?, b.as_real()?);
    match op {
        BinOp::Add => Ok(Value::Real(x + y)),
        BinOp::Sub => Ok(Value::Real(x - y)),
        BinOp::Mul => Ok(Value::Real(x * y)),
        BinOp::Div => {
            if y == 0.0 {
                Err(EvalError::DivisionByZero)
            } else {
                Ok(Value::Real(x / y))
            }
        }
        BinOp::Pow => Ok(Value::Real(x.powf(y))),
    }
}
