//! Test problems with nonlinear partitions.

pub mod burgers;

pub use burgers::{
    diffusion_apply, diffusion_coefficients, initial_condition, weno5_advection, BurgersConfig, BurgersNld,
    GridFunction, InitialCondition,
};

use num_complex::Complex64;

use crate::error::Result;
use crate::integrate::PartitionedSystem;
use crate::linalg::Lu;

/// Partitioned Dahlquist problem `F(u, v) = l1 u + l2 v`.
///
/// Complex rates are represented with a real state of dimension two.
#[derive(Clone, Debug)]
pub struct Dahlquist {
    l1: Complex64,
    l2: Complex64,
    y0: Complex64,
    complex: bool,
}

impl Dahlquist {
    pub fn real(l1: f64, l2: f64, y0: f64) -> Self {
        Self {
            l1: l1.into(),
            l2: l2.into(),
            y0: y0.into(),
            complex: false,
        }
    }

    pub fn complex(l1: Complex64, l2: Complex64, y0: Complex64) -> Self {
        Self {
            l1,
            l2,
            y0,
            complex: true,
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.pack(self.y0)
    }

    fn pack(&self, z: Complex64) -> Vec<f64> {
        if self.complex {
            vec![z.re, z.im]
        } else {
            vec![z.re]
        }
    }

    fn unpack(&self, x: &[f64]) -> Complex64 {
        if self.complex {
            Complex64::new(x[0], x[1])
        } else {
            Complex64::new(x[0], 0.0)
        }
    }
}

impl PartitionedSystem for Dahlquist {
    fn dim(&self) -> usize {
        if self.complex {
            2
        } else {
            1
        }
    }

    fn eval(&mut self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let r = self.l1 * self.unpack(u) + self.l2 * self.unpack(v);
        out.copy_from_slice(&self.pack(r));
    }

    fn solve(&mut self, gamma_h: f64, v: &[f64], rhs: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        let y = (self.unpack(rhs) + gamma_h * self.l2 * self.unpack(v)) / (1.0 - gamma_h * self.l1);
        out.copy_from_slice(&self.pack(y));
        Some(Ok(()))
    }

    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        Some(self.pack(((self.l1 + self.l2) * t).exp() * self.y0))
    }
}

/// `y' = -y^2` partitioned as `F(u, v) = -u v`.
#[derive(Clone, Debug)]
pub struct ProductPartition {
    y0: f64,
}

impl ProductPartition {
    pub fn new(y0: f64) -> Self {
        Self { y0 }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        vec![self.y0]
    }
}

impl PartitionedSystem for ProductPartition {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&mut self, u: &[f64], v: &[f64], out: &mut [f64]) {
        out[0] = -u[0] * v[0];
    }

    fn solve(&mut self, gamma_h: f64, v: &[f64], rhs: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        out[0] = rhs[0] / (1.0 + gamma_h * v[0]);
        Some(Ok(()))
    }

    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        Some(vec![self.y0 / (1.0 + self.y0 * t)])
    }
}

/// Linear partition `F(u, v) = A1 u + A2 v` with dense row-major matrices.
#[derive(Clone, Debug)]
pub struct LinearPartition {
    n: usize,
    a1: Vec<f64>,
    a2: Vec<f64>,
}

impl LinearPartition {
    pub fn new(n: usize, a1: Vec<f64>, a2: Vec<f64>) -> Self {
        assert_eq!(a1.len(), n * n);
        assert_eq!(a2.len(), n * n);
        Self { n, a1, a2 }
    }

    fn matvec(&self, m: &[f64], x: &[f64], out: &mut [f64], beta: f64) {
        for i in 0..self.n {
            let row = &m[i * self.n..(i + 1) * self.n];
            out[i] = beta * out[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

impl PartitionedSystem for LinearPartition {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&mut self, u: &[f64], v: &[f64], out: &mut [f64]) {
        self.matvec(&self.a1, u, out, 0.0);
        self.matvec(&self.a2, v, out, 1.0);
    }

    fn solve(&mut self, gamma_h: f64, v: &[f64], rhs: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        let n = self.n;
        let mut b = vec![0.0; n];
        self.matvec(&self.a2, v, &mut b, 0.0);
        for (bi, ri) in b.iter_mut().zip(rhs) {
            *bi = ri + gamma_h * *bi;
        }
        let mut m: Vec<f64> = self.a1.iter().map(|a| -gamma_h * a).collect();
        for i in 0..n {
            m[i * n + i] += 1.0;
        }
        Some(Lu::new(m, n).map(|lu| out.copy_from_slice(&lu.solve(&b))))
    }
}
