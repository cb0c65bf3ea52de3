//! Small dense and banded linear algebra kernels.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Determinant of a complex matrix split into a unit phase and `ln |det|`,
/// so values far outside the `f64` range stay representable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub phase: Complex64,
    pub ln_abs: f64,
}

impl LogDet {
    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            self.phase * self.ln_abs.exp()
        }
    }

    /// `self / other`.
    pub fn ratio(&self, other: &LogDet) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.phase / other.phase * (self.ln_abs - other.ln_abs).exp()
    }
}

/// Determinant of the row-major `n x n` matrix `m` by LU with partial
/// pivoting. `m` is overwritten.
pub fn complex_log_det(m: &mut [Complex64], n: usize) -> LogDet {
    debug_assert_eq!(m.len(), n * n);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut ln_abs = 0.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].norm();
        for r in col + 1..n {
            let v = m[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return LogDet {
                phase: Complex64::new(0.0, 0.0),
                ln_abs: f64::NEG_INFINITY,
            };
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            phase = -phase;
        }
        let p = m[col * n + col];
        phase *= p / best;
        ln_abs += best.ln();
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col + 1..n {
                let v = m[col * n + c];
                m[r * n + c] -= f * v;
            }
        }
    }
    LogDet { phase, ln_abs }
}

/// Dense LU factorisation with partial pivoting of a real square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl Lu {
    /// Factorises the row-major `n x n` matrix `a`.
    pub fn new(mut a: Vec<f64>, n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for col in 0..n {
            let mut p = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= scale * 1e-300 || !best.is_finite() {
                return Err(Error::SolveFailure(format!("singular matrix at column {col}")));
            }
            if p != col {
                for c in 0..n {
                    a.swap(col * n + c, p * n + c);
                }
                piv.swap(col, p);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                a[r * n + col] = f;
                if f != 0.0 {
                    for c in col + 1..n {
                        a[r * n + c] -= f * a[col * n + c];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, piv })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| rhs[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
        x
    }
}

/// Solves a tridiagonal system with sub-diagonal `lower[1..]`, diagonal `diag`
/// and super-diagonal `upper[..n-1]` by the Thomas algorithm.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut cp = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::SolveFailure("zero pivot in tridiagonal solve".into()));
    }
    cp[0] = upper[0] / denom;
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * cp[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::SolveFailure("zero pivot in tridiagonal solve".into()));
        }
        cp[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}

/// Solves a periodic tridiagonal system. Row `i` reads
/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` with indices
/// taken modulo `n`; the corner terms are handled by a Sherman-Morrison
/// correction of two Thomas solves.
pub fn cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::SolveFailure("cyclic system needs n >= 3".into()));
    }
    let alpha = upper[n - 1];
    let beta = lower[0];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let x = thomas(lower, &d, upper, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(lower, &d, upper, &u)?;
    let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SolveFailure("singular cyclic tridiagonal system".into()));
    }
    let fact = (x[0] + beta * x[n - 1] / gamma) / denom;
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

/// Dense assembly of a periodic tridiagonal matrix, for small systems and tests.
pub fn cyclic_dense(lower: &[f64], diag: &[f64], upper: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] += diag[i];
        m[i * n + (i + n - 1) % n] += lower[i];
        m[i * n + (i + 1) % n] += upper[i];
    }
    m
}
