//! Generating functions and trigonometric identities behind the closed
//! form.
//!
//! The A/B recurrence has rational generating functions with the shared
//! denominator N + 2(2−N)z + Nz². Expanding them as formal power series —
//! via the linear recurrence the denominator induces, staying in exact
//! rationals — must reproduce the recurrence values coefficient by
//! coefficient. The Dirichlet kernel identity
//! 1 + 2·Σ_{j=1..C} cos(2jθ) = sin((2C+1)θ)/sin θ then links the
//! coefficient sums to the sin² closed form.

use std::f64::consts::FRAC_PI_2;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::grover::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("denominator constant term must be nonzero")]
    ZeroConstantTerm,

    #[error("angle {0} outside (0, π/2]")]
    ThetaOutOfRange(f64),
}

pub type SeriesResult<T> = Result<T, SeriesError>;

/// Ratio of two polynomials with rational coefficients, constant-to-highest
/// order. The denominator's constant term must be nonzero so the power
/// series at 0 exists.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    num: Vec<Rational>,
    den: Vec<Rational>,
}

impl RationalFunction {
    pub fn new(num: Vec<Rational>, den: Vec<Rational>) -> SeriesResult<Self> {
        if den.first().is_none_or(Zero::is_zero) {
            return Err(SeriesError::ZeroConstantTerm);
        }
        Ok(RationalFunction { num, den })
    }

    pub fn numerator(&self) -> &[Rational] {
        &self.num
    }

    pub fn denominator(&self) -> &[Rational] {
        &self.den
    }
}

fn rational(n: i128) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Generating functions of the A and B coefficient sequences:
/// A(z) = 2Nz / D(z) and B(z) = (N − Nz) / D(z) with
/// D(z) = N + 2(2−N)z + Nz².
pub fn gf_pair(n: u64) -> (RationalFunction, RationalFunction) {
    assert!(n >= 1, "search-space size must be at least 1");
    let n = i128::from(n);
    let den = vec![rational(n), rational(4 - 2 * n), rational(n)];
    let a = RationalFunction::new(vec![rational(0), rational(2 * n)], den.clone())
        .expect("constant term N is nonzero");
    let b = RationalFunction::new(vec![rational(n), rational(-n)], den)
        .expect("constant term N is nonzero");
    (a, b)
}

/// First `k` coefficients of the power series of `rf` at 0, computed
/// exactly: d₀·cᵢ = numᵢ − Σ_{j≥1} dⱼ·c_{i−j}.
pub fn series_coeffs(rf: &RationalFunction, k: usize) -> Vec<Rational> {
    let d0 = &rf.den[0];
    let mut coeffs: Vec<Rational> = Vec::with_capacity(k);
    for i in 0..k {
        let mut acc = rf.num.get(i).cloned().unwrap_or_else(Rational::zero);
        for j in 1..rf.den.len().min(i + 1) {
            acc -= &rf.den[j] * &coeffs[i - j];
        }
        coeffs.push(acc / d0);
    }
    coeffs
}

/// Both sides of the kernel identity at angle `theta`:
/// (1 + 2·Σ_{j=1..c} cos(2jθ), sin((2c+1)θ)/sin θ). The angle must lie in
/// (0, π/2]; callers assert how close the sides are.
pub fn dirichlet_check(c: u64, theta: f64) -> SeriesResult<(f64, f64)> {
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(SeriesError::ThetaOutOfRange(theta));
    }
    let mut lhs = 1.0;
    for j in 1..=c {
        lhs += 2.0 * ((2 * j) as f64 * theta).cos();
    }
    let rhs = (((2 * c + 1) as f64) * theta).sin() / theta.sin();
    Ok((lhs, rhs))
}
