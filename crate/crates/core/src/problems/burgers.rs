//! Burgers equation with nonlinear diffusion on a periodic grid,
//!
//! ```text
//! u_t = a(x) (|u|^{1/2} u_x)_x + b(x) (u^2)_x,   x in [-2, 2),
//! ```
//!
//! partitioned as `F(u, v) = diag(a) D[v] u + diag(b) W(v)`. The diffusion
//! operator `D[v]` is linear in `u` for frozen `v`, so an implicit stage in
//! the first argument only needs a periodic tridiagonal solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::PartitionedSystem;
use crate::linalg::{cyclic_dense, cyclic_tridiagonal, Lu};

pub const DOMAIN: (f64, f64) = (-2.0, 2.0);

/// Jiang-Shu smoothness regularisation.
const WENO_EPS: f64 = 1e-6;

/// Below this size the periodic system is solved densely.
const DENSE_LIMIT: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialCondition {
    TwoGaussian,
    ThreeGaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurgersConfig {
    pub n: usize,
    pub t_final: f64,
    pub ic: InitialCondition,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self {
            n: 300,
            t_final: 5.0,
            ic: InitialCondition::TwoGaussian,
        }
    }
}

/// Nodal values on the uniform periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub dx: f64,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        let dx = (DOMAIN.1 - DOMAIN.0) / values.len() as f64;
        Self { values, dx }
    }

    pub fn nodes(n: usize) -> Vec<f64> {
        let dx = (DOMAIN.1 - DOMAIN.0) / n as f64;
        (0..n).map(|i| DOMAIN.0 + i as f64 * dx).collect()
    }

    pub fn sample(n: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::new(Self::nodes(n).into_iter().map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with header `x,u`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u\n");
        for (x, u) in Self::nodes(self.len()).iter().zip(&self.values) {
            out.push_str(&format!("{x:.16e},{u:.16e}\n"));
        }
        out
    }
}

pub fn diffusion_coefficient(x: f64) -> f64 {
    0.5 + 2.0 * (-(x - 1.0).powi(2) / 25.0).exp()
}

pub fn advection_coefficient(x: f64) -> f64 {
    (-(x + 1.0).powi(2) / 25.0).exp()
}

pub fn initial_condition(ic: InitialCondition, n: usize) -> GridFunction {
    GridFunction::sample(n, |x| {
        let g = |c: f64| (-60.0 * (x - c).powi(2)).exp();
        let two = 0.01 + g(-1.5) + g(0.0);
        match ic {
            InitialCondition::TwoGaussian => two,
            InitialCondition::ThreeGaussian => two + g(1.5),
        }
    })
}

/// Periodic tridiagonal stencil `(lower, diag, upper)` of `diag(a) D[v]`.
pub fn diffusion_coefficients(v: &[f64], a: &[f64], dx: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = v.len();
    let k: Vec<f64> = v.iter().map(|x| x.abs().sqrt()).collect();
    let inv = 1.0 / (dx * dx);
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let kp = 0.5 * (k[i] + k[(i + 1) % n]);
        let km = 0.5 * (k[(i + n - 1) % n] + k[i]);
        lower[i] = a[i] * km * inv;
        upper[i] = a[i] * kp * inv;
        diag[i] = -(lower[i] + upper[i]);
    }
    (lower, diag, upper)
}

/// `a_i (q_{i+1/2} - q_{i-1/2}) / dx` with `q_{i+1/2} = k_{i+1/2} (u_{i+1} - u_i) / dx`
/// and `k_{i+1/2}` the mean of `|v|^{1/2}` at the neighbouring nodes.
pub fn diffusion_apply(v: &GridFunction, u: &GridFunction, a: &GridFunction) -> GridFunction {
    let n = u.len();
    let dx = u.dx;
    let k: Vec<f64> = v.values.iter().map(|x| x.abs().sqrt()).collect();
    let q: Vec<f64> = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            0.5 * (k[i] + k[j]) * (u.values[j] - u.values[i]) / dx
        })
        .collect();
    let values = (0..n).map(|i| a.values[i] * (q[i] - q[(i + n - 1) % n]) / dx).collect();
    GridFunction { values, dx }
}

/// Fifth-order WENO reconstruction at the right face of the centre point of
/// the stencil `f[0..5]` (upwind side on the left).
#[inline]
fn weno5_face(f: [f64; 5]) -> f64 {
    let [fm2, fm1, f0, fp1, fp2] = f;
    let q0 = (2.0 * fm2 - 7.0 * fm1 + 11.0 * f0) / 6.0;
    let q1 = (-fm1 + 5.0 * f0 + 2.0 * fp1) / 6.0;
    let q2 = (2.0 * f0 + 5.0 * fp1 - fp2) / 6.0;
    let b0 = 13.0 / 12.0 * (fm2 - 2.0 * fm1 + f0).powi(2) + 0.25 * (fm2 - 4.0 * fm1 + 3.0 * f0).powi(2);
    let b1 = 13.0 / 12.0 * (fm1 - 2.0 * f0 + fp1).powi(2) + 0.25 * (fm1 - fp1).powi(2);
    let b2 = 13.0 / 12.0 * (f0 - 2.0 * fp1 + fp2).powi(2) + 0.25 * (3.0 * f0 - 4.0 * fp1 + fp2).powi(2);
    let a0 = 0.1 / (WENO_EPS + b0).powi(2);
    let a1 = 0.6 / (WENO_EPS + b1).powi(2);
    let a2 = 0.3 / (WENO_EPS + b2).powi(2);
    (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)
}

/// `b(x) (v^2)_x` by WENO-5 with global Lax-Friedrichs splitting.
///
/// The term is treated as the flux derivative of `u_t + f(u)_x = 0` with
/// `f = -v^2`, whose characteristic speed `-2v` is the physical one; the
/// positive part `(f + alpha v) / 2` is reconstructed from the left and the
/// negative part from the right, with `alpha = max |2 v|`.
pub fn weno5_advection(v: &GridFunction, b: &GridFunction) -> GridFunction {
    let n = v.len();
    let dx = v.dx;
    let alpha = v.values.iter().fold(0.0f64, |m, x| m.max((2.0 * x).abs()));
    let fp: Vec<f64> = v.values.iter().map(|x| 0.5 * (-x * x + alpha * x)).collect();
    let fm: Vec<f64> = v.values.iter().map(|x| 0.5 * (-x * x - alpha * x)).collect();
    let at = |w: &[f64], i: isize| w[i.rem_euclid(n as isize) as usize];
    // flux[i] approximates the numerical flux at face i + 1/2.
    let flux: Vec<f64> = (0..n as isize)
        .map(|i| {
            let plus = weno5_face([
                at(&fp, i - 2),
                at(&fp, i - 1),
                at(&fp, i),
                at(&fp, i + 1),
                at(&fp, i + 2),
            ]);
            let minus = weno5_face([
                at(&fm, i + 3),
                at(&fm, i + 2),
                at(&fm, i + 1),
                at(&fm, i),
                at(&fm, i - 1),
            ]);
            plus + minus
        })
        .collect();
    let values = (0..n)
        .map(|i| -b.values[i] * (flux[i] - flux[(i + n - 1) % n]) / dx)
        .collect();
    GridFunction { values, dx }
}

/// The partitioned Burgers system.
#[derive(Clone, Debug)]
pub struct BurgersNld {
    cfg: BurgersConfig,
    a: GridFunction,
    b: GridFunction,
}

impl BurgersNld {
    pub fn new(cfg: BurgersConfig) -> Result<Self> {
        if cfg.n < 16 {
            return Err(Error::Usage(format!("Burgers grid needs n >= 16, got {}", cfg.n)));
        }
        Ok(Self {
            cfg,
            a: GridFunction::sample(cfg.n, diffusion_coefficient),
            b: GridFunction::sample(cfg.n, advection_coefficient),
        })
    }

    pub fn config(&self) -> &BurgersConfig {
        &self.cfg
    }

    pub fn dx(&self) -> f64 {
        self.a.dx
    }

    pub fn initial_state(&self) -> Vec<f64> {
        initial_condition(self.cfg.ic, self.cfg.n).values
    }

    pub fn a_coef(&self) -> &GridFunction {
        &self.a
    }

    pub fn b_coef(&self) -> &GridFunction {
        &self.b
    }

    fn grid(&self, x: &[f64]) -> GridFunction {
        GridFunction {
            values: x.to_vec(),
            dx: self.a.dx,
        }
    }

    /// Unpartitioned right-hand side evaluated in a single pass, used to check
    /// the partition.
    pub fn rhs_monolithic(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let dx = self.a.dx;
        let mut out = weno5_advection(&self.grid(y), &self.b).values;
        for i in 0..n {
            let l = (i + n - 1) % n;
            let r = (i + 1) % n;
            let kr = 0.5 * (y[i].abs().sqrt() + y[r].abs().sqrt());
            let kl = 0.5 * (y[l].abs().sqrt() + y[i].abs().sqrt());
            out[i] += self.a.values[i] * (kr * (y[r] - y[i]) - kl * (y[i] - y[l])) / (dx * dx);
        }
        out
    }
}

impl PartitionedSystem for BurgersNld {
    fn dim(&self) -> usize {
        self.cfg.n
    }

    fn eval(&mut self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let vg = self.grid(v);
        let d = diffusion_apply(&vg, &self.grid(u), &self.a);
        let w = weno5_advection(&vg, &self.b);
        for ((o, x), y) in out.iter_mut().zip(&d.values).zip(&w.values) {
            *o = x + y;
        }
    }

    fn solve(&mut self, gamma_h: f64, v: &[f64], rhs: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        let n = self.cfg.n;
        let w = weno5_advection(&self.grid(v), &self.b);
        let b: Vec<f64> = rhs.iter().zip(&w.values).map(|(r, x)| r + gamma_h * x).collect();
        let (mut lower, mut diag, mut upper) = diffusion_coefficients(v, &self.a.values, self.a.dx);
        for i in 0..n {
            lower[i] *= -gamma_h;
            upper[i] *= -gamma_h;
            diag[i] = 1.0 - gamma_h * diag[i];
        }
        let res = if n < DENSE_LIMIT {
            Lu::new(cyclic_dense(&lower, &diag, &upper), n).map(|lu| lu.solve(&b))
        } else {
            cyclic_tridiagonal(&lower, &diag, &upper, &b)
        };
        Some(res.map(|x| out.copy_from_slice(&x)))
    }
}
