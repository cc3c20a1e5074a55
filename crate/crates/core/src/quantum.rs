//! Dense complex state vectors and matrices.
//!
//! This layer gives the search analysis an independent linear-algebra path:
//! the same loop body that the language executes functionally is realized
//! here as an explicit unitary matrix, so the two can be checked against
//! each other. States are immutable and never silently renormalized — a
//! norm drifting from one indicates a non-unitary bug and must surface.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("state must have at least one amplitude")]
    EmptyState,

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("state norm² {0} is not within tolerance of 1")]
    NotNormalized(f64),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

pub type QuantumResult<T> = Result<T, QuantumError>;

/// Length-N complex amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: Vec<Complex64>,
}

impl QuantumState {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> QuantumResult<Self> {
        if amps.is_empty() {
            return Err(QuantumError::EmptyState);
        }
        Ok(QuantumState { amps })
    }

    pub fn n(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Σ‖αᵢ‖², i.e. the squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Equal superposition: every amplitude is 1/√N.
pub fn uniform_state(n: usize) -> QuantumResult<QuantumState> {
    if n == 0 {
        return Err(QuantumError::EmptyState);
    }
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    Ok(QuantumState { amps: vec![amp; n] })
}

/// Basis state: amplitude 1 at `i`, 0 elsewhere.
pub fn classical_state(i: usize, n: usize) -> QuantumResult<QuantumState> {
    if n == 0 {
        return Err(QuantumError::EmptyState);
    }
    if i >= n {
        return Err(QuantumError::IndexOutOfRange { index: i, n });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); n];
    amps[i] = Complex64::new(1.0, 0.0);
    Ok(QuantumState { amps })
}

/// Arithmetic mean of the amplitudes.
pub fn state_mean(s: &QuantumState) -> Complex64 {
    let sum: Complex64 = s.amps.iter().sum();
    sum / s.n() as f64
}

/// Measurement distribution pᵢ = ‖αᵢ‖². The state must be normalized within
/// 1e-6; a violation is an error, never a silent rescale.
pub fn measure_probs(s: &QuantumState) -> QuantumResult<Vec<f64>> {
    let norm_sq = s.norm_sq();
    if (norm_sq - 1.0).abs() > 1e-6 {
        return Err(QuantumError::NotNormalized(norm_sq));
    }
    Ok(s.amps.iter().map(|a| a.norm_sqr()).collect())
}

/// Sign-flip the marked amplitude: S(i) − 2·f(i)·S(i) with f the indicator
/// of `x0`.
pub fn oracle_flip(s: &QuantumState, x0: usize) -> QuantumResult<QuantumState> {
    if x0 >= s.n() {
        return Err(QuantumError::IndexOutOfRange {
            index: x0,
            n: s.n(),
        });
    }
    let mut amps = s.amps.clone();
    amps[x0] = -amps[x0];
    Ok(QuantumState { amps })
}

/// Inversion about the mean: S(i) ↦ 2·mean(S) − S(i).
pub fn invert_about_mean(s: &QuantumState) -> QuantumState {
    let m = state_mean(s);
    let amps = s.amps.iter().map(|a| 2.0 * m - a).collect();
    QuantumState { amps }
}

/// One loop-body iteration: oracle flip, then inversion about the mean.
/// O(N), no matrix involved.
pub fn body_step(s: &QuantumState, x0: usize) -> QuantumResult<QuantumState> {
    Ok(invert_about_mean(&oracle_flip(s, x0)?))
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Complex64) -> Matrix {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> QuantumResult<Matrix> {
        let n = rows.len();
        for row in &rows {
            if row.len() != n {
                return Err(QuantumError::DimensionMismatch {
                    left: n,
                    right: row.len(),
                });
            }
        }
        Ok(Matrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(n: usize) -> Matrix {
        Matrix::from_fn(n, |i, j| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, other: &Matrix) -> QuantumResult<Matrix> {
        if self.n != other.n {
            return Err(QuantumError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Ok(Matrix { n, data })
    }

    pub fn apply(&self, s: &QuantumState) -> QuantumResult<QuantumState> {
        if self.n != s.n() {
            return Err(QuantumError::DimensionMismatch {
                left: self.n,
                right: s.n(),
            });
        }
        let amps = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.get(i, j) * s.amps[j])
                    .sum::<Complex64>()
            })
            .collect();
        Ok(QuantumState { amps })
    }
}

/// True iff both U·U† and U†·U deviate from the identity by less than `tol`
/// in every entry.
pub fn check_unitary(u: &Matrix, tol: f64) -> bool {
    let ud = u.dagger();
    let close_to_identity = |m: &Matrix| {
        for i in 0..m.n {
            for j in 0..m.n {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (m.get(i, j) - expect).norm() >= tol {
                    return false;
                }
            }
        }
        true
    };
    let left = u.mul(&ud).expect("same dimension");
    let right = ud.mul(u).expect("same dimension");
    close_to_identity(&left) && close_to_identity(&right)
}

/// Explicit matrix for one loop-body iteration: the diffusion D = (2/N)J − I
/// composed with the oracle O = I − 2·e_{x0}·e_{x0}ᵀ, i.e. column x0 of D
/// negated.
pub fn grover_step_matrix(n: usize, x0: usize) -> QuantumResult<Matrix> {
    if n == 0 {
        return Err(QuantumError::EmptyState);
    }
    if x0 >= n {
        return Err(QuantumError::IndexOutOfRange { index: x0, n });
    }
    let two_over_n = 2.0 / n as f64;
    Ok(Matrix::from_fn(n, |i, j| {
        let d = two_over_n - if i == j { 1.0 } else { 0.0 };
        Complex64::new(if j == x0 { -d } else { d }, 0.0)
    }))
}
