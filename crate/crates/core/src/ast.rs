//! Statement and program syntax for the probabilistic language.

use crate::expr::Expr;

/// A nonempty statement sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Program(pub Vec<Stmt>);

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Skip,
    /// `x := e`
    Assign {
        target: String,
        rhs: Expr,
    },
    /// `x := e1 @ w1, e2 @ w2, ...` or the indexed form.
    ProbAssign {
        target: String,
        branches: Branches,
    },
    /// `do e times ... od`; the count is fixed before the body first runs.
    DoTimes {
        count: Expr,
        body: Program,
    },
}

/// Branches of a probabilistic assignment. Weights are expectations over the
/// state before the assignment, and must be nonnegative and sum to one.
///
/// The indexed variant is larger than the explicit one, but programs hold a
/// handful of statements at most, so boxing it would complicate every match
/// for no measurable gain.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Branches {
    /// Explicit value/weight pairs, in source order.
    Explicit(Vec<(Expr, Expr)>),
    /// `value @ weight for index in lo .. hi`, expanding to one branch per
    /// index in increasing order. The grammar fixes `lo` at 0.
    Indexed {
        value: Expr,
        weight: Expr,
        index: String,
        lo: Expr,
        hi: Expr,
    },
}

impl Program {
    pub fn stmts(&self) -> &[Stmt] {
        &self.0
    }
}
