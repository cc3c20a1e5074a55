//! Runtime values and variable environments.
//!
//! Program state maps variable names to values. The interesting value kinds
//! are amplitude vectors (finite complex-valued states, indexed from 0) and
//! functions (a parameter with concrete index bounds, a body expression, and
//! the environment captured where the lambda was evaluated).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::error::{EvalError, EvalResult};
use crate::expr::Expr;

/// A runtime value.
#[derive(Clone, Debug)]
pub enum Value {
    /// Arbitrary-precision integer.
    Int(BigInt),
    /// 64-bit float.
    Real(f64),
    /// Complex number with 64-bit components.
    Complex(Complex64),
    /// Amplitude vector; always nonempty, indexed 0..len.
    AmpVector(Arc<Vec<Complex64>>),
    /// Function value produced by evaluating a lambda.
    Func(Arc<FuncValue>),
}

/// A lambda closed over its defining environment, with concrete index bounds
/// `lo..hi` (lo inclusive, hi exclusive, lo <= hi).
#[derive(Debug)]
pub struct FuncValue {
    pub param: String,
    pub lo: i64,
    pub hi: i64,
    pub body: Arc<Expr>,
    pub env: Env,
}

impl Value {
    pub fn int(n: impl Into<BigInt>) -> Self {
        Value::Int(n.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Complex(_) => "complex",
            Value::AmpVector(_) => "amplitude vector",
            Value::Func(_) => "function",
        }
    }

    /// Numeric value as a real, rejecting complex numbers with a nonzero
    /// imaginary part and everything non-numeric.
    pub fn as_real(&self) -> EvalResult<f64> {
        match self {
            Value::Int(n) => n
                .to_f64()
                .ok_or_else(|| EvalError::IntOutOfRange(n.to_string())),
            Value::Real(r) => Ok(*r),
            Value::Complex(z) if z.im == 0.0 => Ok(z.re),
            other => Err(EvalError::TypeMismatch {
                expected: "real number",
                found: other.kind(),
            }),
        }
    }

    /// Numeric value as a complex number.
    pub fn as_complex(&self) -> EvalResult<Complex64> {
        match self {
            Value::Int(n) => Ok(Complex64::new(
                n.to_f64()
                    .ok_or_else(|| EvalError::IntOutOfRange(n.to_string()))?,
                0.0,
            )),
            Value::Real(r) => Ok(Complex64::new(*r, 0.0)),
            Value::Complex(z) => Ok(*z),
            other => Err(EvalError::TypeMismatch {
                expected: "complex number",
                found: other.kind(),
            }),
        }
    }

    /// Integer value as an index-sized machine integer.
    pub fn as_index(&self) -> EvalResult<i64> {
        match self {
            Value::Int(n) => n
                .to_i64()
                .ok_or_else(|| EvalError::IntOutOfRange(n.to_string())),
            other => Err(EvalError::TypeMismatch {
                expected: "integer",
                found: other.kind(),
            }),
        }
    }
}

/// Exact structural equality. Functions compare by identity; use the
/// language-level equality predicate for extensional comparison.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a == b,
            (Value::Complex(a), Value::Complex(b)) => a == b,
            (Value::AmpVector(a), Value::AmpVector(b)) => a == b,
            (Value::Func(a), Value::Func(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Complex(z) => write!(f, "({} + {}j)", z.re, z.im),
            Value::AmpVector(v) => {
                write!(f, "[")?;
                for (i, z) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    if z.im == 0.0 {
                        write!(f, "{}", z.re)?;
                    } else {
                        write!(f, "({} + {}j)", z.re, z.im)?;
                    }
                }
                write!(f, "]")
            }
            Value::Func(fv) => write!(
                f,
                "(lam {} | {} <= {} < {} . ...)",
                fv.param, fv.lo, fv.param, fv.hi
            ),
        }
    }
}

/// Componentwise comparison of two amplitude vectors up to `tol`.
///
/// Language-level equality on vectors is exact; this helper is for callers
/// that explicitly want a tolerance and is never applied implicitly.
pub fn amp_vectors_close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x.re - y.re).abs() <= tol && (x.im - y.im).abs() <= tol)
}

static ENV_NODE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
struct EnvNode {
    name: String,
    value: Value,
    next: Option<Arc<EnvNode>>,
    /// Unique per binding, used as a memoization key; never reused.
    id: u64,
}

/// Immutable variable environment. `bind` is O(1) and shares the tail, so
/// distribution leaves and captured closures clone cheaply.
#[derive(Clone, Debug, Default)]
pub struct Env {
    head: Option<Arc<EnvNode>>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    /// Environment extended with `name = value`; shadows earlier bindings.
    pub fn bind(&self, name: impl Into<String>, value: Value) -> Env {
        Env {
            head: Some(Arc::new(EnvNode {
                name: name.into(),
                value,
                next: self.head.clone(),
                id: ENV_NODE_ID.fetch_add(1, Ordering::Relaxed),
            })),
        }
    }

    pub fn lookup(&self, name: &str) -> EvalResult<&Value> {
        let mut node = self.head.as_deref();
        while let Some(n) = node {
            if n.name == name {
                return Ok(&n.value);
            }
            node = n.next.as_deref();
        }
        Err(EvalError::UnboundVariable(name.to_string()))
    }

    /// Identity of the newest binding; 0 for the empty environment.
    pub fn id(&self) -> u64 {
        self.head.as_ref().map_or(0, |n| n.id)
    }

    /// Visible bindings (shadowed entries dropped), sorted by name.
    pub fn bindings(&self) -> BTreeMap<&str, &Value> {
        let mut out = BTreeMap::new();
        let mut node = self.head.as_deref();
        while let Some(n) = node {
            out.entry(n.name.as_str()).or_insert(&n.value);
            node = n.next.as_deref();
        }
        out
    }
}

/// Equality on the visible bindings of two environments.
impl PartialEq for Env {
    fn eq(&self, other: &Self) -> bool {
        self.bindings() == other.bindings()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bind_shadows_and_lookup_finds_newest() {
        let env = Env::new().bind("x", Value::int(1)).bind("x", Value::int(2));
        assert_eq!(env.lookup("x").unwrap(), &Value::int(2));
    }

    #[test]
    fn lookup_of_unbound_name_is_an_error() {
        let err = Env::new().lookup("nope").unwrap_err();
        assert_eq!(err, EvalError::UnboundVariable("nope".into()));
    }

    #[test]
    fn bindings_drop_shadowed_entries() {
        let env = Env::new()
            .bind("a", Value::int(1))
            .bind("b", Value::int(2))
            .bind("a", Value::int(3));
        let vis = env.bindings();
        assert_eq!(vis.len(), 2);
        assert_eq!(vis["a"], &Value::int(3));
    }

    #[test]
    fn env_equality_ignores_shadowed_history() {
        let a = Env::new().bind("x", Value::int(1)).bind("x", Value::int(2));
        let b = Env::new().bind("x", Value::int(2));
        assert_eq!(a, b);
    }

    #[test]
    fn vector_closeness_is_componentwise() {
        let a = vec![Complex64::new(1.0, 0.0)];
        let b = vec![Complex64::new(1.0 + 1e-12, 0.0)];
        assert!(amp_vectors_close(&a, &b, 1e-9));
        assert!(!amp_vectors_close(&a, &b, 1e-15));
        assert!(!amp_vectors_close(&a, &[], 1.0));
    }

    #[test]
    fn as_real_accepts_complex_with_zero_imaginary_part() {
        assert_eq!(
            Value::Complex(Complex64::new(2.5, 0.0)).as_real().unwrap(),
            2.5
        );
        assert!(Value::Complex(Complex64::new(2.5, 1.0)).as_real().is_err());
    }
}
