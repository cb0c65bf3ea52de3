//! Fixed-step time integration.
//!
//! [`step_generic`] evaluates any diagonally implicit IMEX tensor stage by
//! stage and serves as the reference for the specialised steppers
//! [`step_mr2`], [`step_mr3_v1`] and [`step_mr3_v2`], which follow the
//! implicit-wrapping structure: implicit pre-solves, one explicit Runge-Kutta
//! step of an auxiliary ODE, and an implicit post-solve.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::methods::{Mr2Coefficients, Mr3Coefficients, Mr3Variant};
use crate::tableau::{ButcherTableau, NprkTensor};

/// Right-hand side `F(u, v)` of a nonlinearly partitioned ODE `y' = F(y, y)`.
pub trait PartitionedSystem {
    fn dim(&self) -> usize;

    /// Writes `F(u, v)` into `out`.
    fn eval(&mut self, u: &[f64], v: &[f64], out: &mut [f64]);

    /// Solves `Y = rhs + gamma_h F(Y, v)` for `Y`, if the system knows how.
    fn solve(&mut self, gamma_h: f64, v: &[f64], rhs: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        let _ = (gamma_h, v, rhs, out);
        None
    }

    /// Exact solution at time `t` from the system's own initial state.
    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        let _ = t;
        None
    }
}

impl<S: PartitionedSystem + ?Sized> PartitionedSystem for &mut S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&mut self, u: &[f64], v: &[f64], out: &mut [f64]) {
        (**self).eval(u, v, out)
    }
    fn solve(&mut self, gamma_h: f64, v: &[f64], rhs: &[f64], out: &mut [f64]) -> Option<Result<()>> {
        (**self).solve(gamma_h, v, rhs, out)
    }
    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        (**self).exact(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Jacobian {
    /// Use the solve hook when it applies, otherwise Newton with a
    /// forward-difference Jacobian.
    FiniteDifference,
    /// Fail when the solve hook is missing or does not apply.
    HookOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Relative Newton tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian: Jacobian,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            jacobian: Jacobian::FiniteDifference,
        }
    }
}

/// Work counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub steps: usize,
    /// Evaluations of `F` by the method itself.
    pub f_evals: usize,
    /// Implicit stage solves.
    pub solves: usize,
    pub newton_iters: usize,
    /// Evaluations of `F` spent inside Newton iterations.
    pub newton_f_evals: usize,
}

impl StepStats {
    /// `f_evals + ratio * solves`.
    pub fn cost(&self, ratio: f64) -> f64 {
        self.f_evals as f64 + ratio * self.solves as f64
    }

    pub fn add(&mut self, other: &StepStats) {
        self.steps += other.steps;
        self.f_evals += other.f_evals;
        self.solves += other.solves;
        self.newton_iters += other.newton_iters;
        self.newton_f_evals += other.newton_f_evals;
    }
}

/// Counting wrapper around a system.
struct Ctx<'a, S: ?Sized> {
    sys: &'a mut S,
    cfg: &'a SolverConfig,
    stats: &'a mut StepStats,
}

impl<S: PartitionedSystem + ?Sized> Ctx<'_, S> {
    fn f(&mut self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.sys.eval(u, v, &mut out);
        self.stats.f_evals += 1;
        out
    }

    /// Solves `Y = rhs + h sum_k g_k F(Y, v_k)` where `v_k = None` stands for
    /// `F(Y, Y)`.
    fn solve(&mut self, terms: &[(f64, Option<&[f64]>)], rhs: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let terms: Vec<(f64, Option<&[f64]>)> = terms.iter().copied().filter(|t| t.0 != 0.0).collect();
        if terms.is_empty() {
            return Ok(rhs.to_vec());
        }
        self.stats.solves += 1;
        if let [(gh, Some(v))] = terms.as_slice() {
            let mut out = vec![0.0; rhs.len()];
            if let Some(res) = self.sys.solve(*gh, v, rhs, &mut out) {
                res?;
                return Ok(out);
            }
        }
        if self.cfg.jacobian == Jacobian::HookOnly {
            return Err(Error::SolveFailure(
                "no applicable solve hook and Newton fallback disabled".into(),
            ));
        }
        self.newton(&terms, rhs, guess)
    }

    fn residual(&mut self, terms: &[(f64, Option<&[f64]>)], rhs: &[f64], y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut r: Vec<f64> = y.iter().zip(rhs).map(|(a, b)| a - b).collect();
        let mut buf = vec![0.0; n];
        for &(g, v) in terms {
            self.sys.eval(y, v.unwrap_or(y), &mut buf);
            self.stats.newton_f_evals += 1;
            for (ri, fi) in r.iter_mut().zip(&buf) {
                *ri -= g * fi;
            }
        }
        r
    }

    fn newton(&mut self, terms: &[(f64, Option<&[f64]>)], rhs: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let inf = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sqrt_u = f64::EPSILON.sqrt();
        let mut y = guess.to_vec();
        let mut r = self.residual(terms, rhs, &y);
        for it in 0..self.cfg.max_iter {
            let scale = 1.0 + inf(&y);
            if inf(&r) <= self.cfg.tol * scale {
                return Ok(y);
            }
            self.stats.newton_iters += 1;
            // Forward-difference Jacobian of the residual.
            let mut jac = vec![0.0; n * n];
            let mut yp = y.clone();
            for col in 0..n {
                let eps = sqrt_u * y[col].abs().max(1.0);
                yp[col] = y[col] + eps;
                let rp = self.residual(terms, rhs, &yp);
                yp[col] = y[col];
                for row in 0..n {
                    jac[row * n + col] = (rp[row] - r[row]) / eps;
                }
            }
            let delta = Lu::new(jac, n)?.solve(&r);
            let rn = inf(&r);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..10 {
                let trial: Vec<f64> = y.iter().zip(&delta).map(|(a, d)| a - lambda * d).collect();
                let rt = self.residual(terms, rhs, &trial);
                if inf(&rt) < rn || !rn.is_finite() {
                    y = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                // Accept the full step once residual reduction stalls at round-off.
                y = y.iter().zip(&delta).map(|(a, d)| a - d).collect();
                r = self.residual(terms, rhs, &y);
            }
            if inf(&delta) <= self.cfg.tol * scale && inf(&r) <= 1e3 * self.cfg.tol * scale {
                return Ok(y);
            }
            if it + 1 == self.cfg.max_iter {
                break;
            }
        }
        let residual = inf(&r);
        if residual <= self.cfg.tol * (1.0 + inf(&y)) {
            return Ok(y);
        }
        Err(Error::NewtonDivergence {
            iterations: self.cfg.max_iter,
            residual,
        })
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// One step of a diagonally implicit IMEX NPRK tensor.
pub fn step_generic<S: PartitionedSystem + ?Sized>(
    t: &NprkTensor,
    sys: &mut S,
    y: &[f64],
    h: f64,
    cfg: &SolverConfig,
    stats: &mut StepStats,
) -> Result<Vec<f64>> {
    if let Some(((i, j, k), value)) = t.imex_violation() {
        return Err(Error::NonImexTensor {
            i: i + 1,
            j: j + 1,
            k: k + 1,
            value,
        });
    }
    let s = t.stages();
    let mut ctx = Ctx { sys, cfg, stats };
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut cache: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();

    let mut fetch = |ctx: &mut Ctx<'_, S>, stages: &[Vec<f64>], j: usize, k: usize| -> Vec<f64> {
        cache
            .entry((j, k))
            .or_insert_with(|| ctx.f(&stages[j], &stages[k]))
            .clone()
    };

    for i in 0..s {
        let mut rhs = y.to_vec();
        let mut implicit: Vec<(f64, usize)> = Vec::new();
        for ((j, k), a) in t.stage_row(i) {
            if j == i {
                implicit.push((h * a, k));
            } else {
                let f = fetch(&mut ctx, &stages, j, k);
                axpy(&mut rhs, h * a, &f);
            }
        }
        let yi = if implicit.is_empty() {
            rhs
        } else {
            let terms: Vec<(f64, Option<&[f64]>)> =
                implicit.iter().map(|&(g, k)| (g, Some(stages[k].as_slice()))).collect();
            let guess = stages.last().cloned().unwrap_or_else(|| y.to_vec());
            ctx.solve(&terms, &rhs, &guess)?
        };
        stages.push(yi);
    }

    if t.is_stiffly_accurate() {
        return Ok(stages.pop().expect("at least one stage"));
    }
    let mut out = y.to_vec();
    for ((i, j), b) in t.b_entries() {
        let f = fetch(&mut ctx, &stages, i, j);
        axpy(&mut out, h * b, &f);
    }
    Ok(out)
}

/// Explicit Runge-Kutta step of `w' = g(w)` from `w0`, keeping every stage
/// value and stage derivative.
fn explicit_substep<G>(tab: &ButcherTableau, w0: &[f64], h: f64, mut g: G) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)
where
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let s = tab.stages();
    let mut ws: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut w = w0.to_vec();
        for (j, kj) in ks.iter().enumerate() {
            let a = tab.a(i, j);
            if a != 0.0 {
                axpy(&mut w, h * a, kj);
            }
        }
        ks.push(g(&w));
        ws.push(w);
    }
    let mut w1 = w0.to_vec();
    for (j, kj) in ks.iter().enumerate() {
        let b = tab.b(j);
        if b != 0.0 {
            axpy(&mut w1, h * b, kj);
        }
    }
    (w1, ws, ks)
}

/// Second-order implicitly wrapped step.
pub fn step_mr2<S: PartitionedSystem + ?Sized>(
    c: &Mr2Coefficients,
    sys: &mut S,
    y: &[f64],
    h: f64,
    cfg: &SolverConfig,
    stats: &mut StepStats,
) -> Result<Vec<f64>> {
    let mut ctx = Ctx { sys, cfg, stats };
    let g = c.gamma;
    let y2 = ctx.solve(&[(h * g, Some(y))], y, y)?;
    let (w1, ws, ks) = explicit_substep(&c.explicit_tableau, y, h, |w| ctx.f(&y2, w));
    let last = ws.len() - 1;
    let mut rhs = w1;
    axpy(&mut rhs, -h * g, &ks[last]);
    ctx.solve(&[(h * g, Some(&ws[last]))], &rhs, &ws[last])
}

/// The two implicit pre-solves shared by both third-order variants. Returns
/// `(Y2, Y3, F(Y2, y))`.
fn mr3_presolve<S: PartitionedSystem + ?Sized>(
    c: &Mr3Coefficients,
    ctx: &mut Ctx<'_, S>,
    y: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let sd = &c.sdirk;
    let y2 = ctx.solve(&[(h * sd.a(0, 0), Some(y))], y, y)?;
    let f2y = ctx.f(&y2, y);
    let f22 = ctx.f(&y2, &y2);
    let mut rhs = y.to_vec();
    axpy(&mut rhs, h * (sd.a(1, 0) - c.a322), &f2y);
    axpy(&mut rhs, h * c.a322, &f22);
    let v: &[f64] = if c.omega == 1 { y } else { &y2 };
    let y3 = ctx.solve(&[(h * sd.a(1, 1), Some(v))], &rhs, &y2)?;
    Ok((y2, y3, f2y))
}

/// Third-order implicitly wrapped step, variant 1.
pub fn step_mr3_v1<S: PartitionedSystem + ?Sized>(
    c: &Mr3Coefficients,
    sys: &mut S,
    y: &[f64],
    h: f64,
    cfg: &SolverConfig,
    stats: &mut StepStats,
) -> Result<Vec<f64>> {
    let ap = c
        .a_penult
        .ok_or_else(|| Error::Usage("variant 1 step needs the penultimate coefficient".into()))?;
    let mut ctx = Ctx { sys, cfg, stats };
    let (y2, y3, f2y) = mr3_presolve(c, &mut ctx, y, h)?;
    let tab = &c.explicit_tableau;
    let s2 = tab.stages();
    let l = c.sdirk.a(2, 2);

    // The first explicit derivative F(Y2, y) is already known.
    let mut first = Some(f2y.clone());
    let (w1, ws, ks) = explicit_substep(tab, y, h, |w| match first.take() {
        Some(f) => f,
        None => ctx.f(&y2, w),
    });
    let (wm1, ws2) = (&ws[s2 - 2], &ws[s2 - 1]);
    let h_wm1: Vec<f64> = {
        let f3 = ctx.f(&y3, wm1);
        f3.iter().zip(&ks[s2 - 2]).map(|(a, b)| a - b).collect()
    };
    let mut pen = ws2.clone();
    axpy(&mut pen, h * ap, &h_wm1);

    let f2p = ctx.f(&y2, &pen);
    let f3p = ctx.f(&y3, &pen);
    let f3y = ctx.f(&y3, y);
    let bs = tab.b(s2 - 1);
    let mut xi = w1;
    for i in 0..xi.len() {
        xi[i] += h
            * (bs * (f2p[i] - ks[s2 - 1][i]) + c.as31 * (f3y[i] - f2y[i]) + c.as3sm1 * (f3p[i] - f2p[i]) - l * f2p[i]);
    }
    ctx.solve(&[(h * l, Some(&pen))], &xi, &pen)
}

/// Third-order implicitly wrapped step, variant 2.
pub fn step_mr3_v2<S: PartitionedSystem + ?Sized>(
    c: &Mr3Coefficients,
    sys: &mut S,
    y: &[f64],
    h: f64,
    cfg: &SolverConfig,
    stats: &mut StepStats,
) -> Result<Vec<f64>> {
    let d = c
        .delta
        .ok_or_else(|| Error::Usage("variant 2 step needs the blend factor".into()))?;
    let mut ctx = Ctx { sys, cfg, stats };
    let (y2, y3, f2y) = mr3_presolve(c, &mut ctx, y, h)?;
    let tab = &c.explicit_tableau;
    let s2 = tab.stages();
    let l = c.sdirk.a(2, 2);

    let mut f2s: Vec<Vec<f64>> = Vec::with_capacity(s2);
    let mut f3s: Vec<Vec<f64>> = Vec::with_capacity(s2);
    let mut first = Some(f2y);
    let (w1, ws, _) = explicit_substep(tab, y, h, |w| {
        let f2 = match first.take() {
            Some(f) => f,
            None => ctx.f(&y2, w),
        };
        let f3 = ctx.f(&y3, w);
        let g = f2.iter().zip(&f3).map(|(a, b)| (1.0 - d) * a + d * b).collect();
        f2s.push(f2);
        f3s.push(f3);
        g
    });
    let last = &ws[s2 - 1];
    let c1 = c.as31 - d * tab.b(0);
    let cl = c.as3sm1 - d * tab.b(s2 - 1);
    let mut x = w1;
    for i in 0..x.len() {
        x[i] += h * (c1 * (f3s[0][i] - f2s[0][i]) + cl * (f3s[s2 - 1][i] - f2s[s2 - 1][i]) - l * f2s[s2 - 1][i]);
    }
    ctx.solve(&[(h * l, Some(last))], &x, last)
}

/// One step of a classical diagonally implicit tableau on `y' = F(y, y)`.
pub fn step_classical<S: PartitionedSystem + ?Sized>(
    tab: &ButcherTableau,
    sys: &mut S,
    y: &[f64],
    h: f64,
    cfg: &SolverConfig,
    stats: &mut StepStats,
) -> Result<Vec<f64>> {
    if !tab.is_diagonally_implicit() {
        return Err(Error::InvalidTableau("tableau must be lower triangular".into()));
    }
    let mut ctx = Ctx { sys, cfg, stats };
    let s = tab.stages();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut last = y.to_vec();
    for i in 0..s {
        let mut rhs = y.to_vec();
        for (j, kj) in ks.iter().enumerate() {
            let a = tab.a(i, j);
            if a != 0.0 {
                axpy(&mut rhs, h * a, kj);
            }
        }
        let yi = ctx.solve(&[(h * tab.a(i, i), None)], &rhs, &last)?;
        ks.push(ctx.f(&yi, &yi));
        last = yi;
    }
    let mut out = y.to_vec();
    for (j, kj) in ks.iter().enumerate() {
        axpy(&mut out, h * tab.b(j), kj);
    }
    Ok(out)
}

/// A configured one-step method.
#[derive(Clone, Debug)]
pub enum Stepper {
    Generic(NprkTensor),
    Mr2(Mr2Coefficients),
    Mr3(Mr3Coefficients),
    Classical(ButcherTableau),
}

impl Stepper {
    pub fn step<S: PartitionedSystem + ?Sized>(
        &self,
        sys: &mut S,
        y: &[f64],
        h: f64,
        cfg: &SolverConfig,
        stats: &mut StepStats,
    ) -> Result<Vec<f64>> {
        stats.steps += 1;
        match self {
            Stepper::Generic(t) => step_generic(t, sys, y, h, cfg, stats),
            Stepper::Mr2(c) => step_mr2(c, sys, y, h, cfg, stats),
            Stepper::Mr3(c) => match c.variant {
                Mr3Variant::V1 => step_mr3_v1(c, sys, y, h, cfg, stats),
                Mr3Variant::V2 => step_mr3_v2(c, sys, y, h, cfg, stats),
            },
            Stepper::Classical(t) => step_classical(t, sys, y, h, cfg, stats),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Integration {
    pub y: Vec<f64>,
    pub totals: StepStats,
    pub per_step: Vec<StepStats>,
}

/// Integrates from `t0` to `t1` with `nsteps` uniform steps.
pub fn integrate<S: PartitionedSystem + ?Sized>(
    stepper: &Stepper,
    sys: &mut S,
    y0: &[f64],
    t0: f64,
    t1: f64,
    nsteps: usize,
    cfg: &SolverConfig,
) -> Result<Integration> {
    if nsteps == 0 {
        return Err(Error::Usage("nsteps must be positive".into()));
    }
    if y0.len() != sys.dim() {
        return Err(Error::Usage(format!(
            "initial state has length {}, system dimension is {}",
            y0.len(),
            sys.dim()
        )));
    }
    let h = (t1 - t0) / nsteps as f64;
    let mut y = y0.to_vec();
    let mut totals = StepStats::default();
    let mut per_step = Vec::with_capacity(nsteps);
    for n in 0..nsteps {
        let mut st = StepStats::default();
        y = stepper.step(sys, &y, h, cfg, &mut st)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(n + 1));
        }
        totals.add(&st);
        per_step.push(st);
    }
    Ok(Integration { y, totals, per_step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::*;
    use crate::problems::{Dahlquist, ProductPartition};
    use crate::stability::StabilityEvaluator;
    use crate::tableau::compose;
    use num_complex::Complex64;

    #[test]
    fn zero_rhs_keeps_state() {
        let mut sys = Dahlquist::real(0.0, 0.0, 1.5);
        let cfg = SolverConfig::default();
        let mut st = StepStats::default();
        let y = step_generic(&first_order_example(), &mut sys, &[1.5], 0.3, &cfg, &mut st).unwrap();
        assert_eq!(y, vec![1.5]);
    }

    #[test]
    fn generic_step_matches_stability_function() {
        let (t, _) = mr3(&ssp3(), 2, Mr3Variant::V1).unwrap();
        let ev = StabilityEvaluator::new(&t);
        let (l1, l2, h) = (-3.0, -1.5, 0.2);
        let mut sys = Dahlquist::real(l1, l2, 1.0);
        let mut st = StepStats::default();
        let y = step_generic(&t, &mut sys, &[1.0], h, &SolverConfig::default(), &mut st).unwrap();
        let r = ev
            .r_eval(Complex64::new(h * l1, 0.0), Complex64::new(h * l2, 0.0))
            .unwrap();
        assert!((y[0] - r.re).abs() < 1e-13);
    }

    #[test]
    fn hand_unrolled_example() {
        let (h, y0) = (0.1, 1.0f64);
        let f = |u: f64, v: f64| -u * v;
        let y1 = y0;
        let y2 = y0 + h / 3.0 * f(y1, y1);
        let y3 = y2 + h / 3.0 * f(y1, y2);
        // Y4 = r + h * F(Y4, Y3) = r - h Y4 Y3
        let r = y0 + h / 3.0 * f(y1, y1) + h / 3.0 * f(y1, y2) - 2.0 * h / 3.0 * f(y1, y3);
        let y4 = r / (1.0 + h * y3);
        let mut sys = ProductPartition::new(y0);
        let mut st = StepStats::default();
        let out = step_generic(
            &first_order_example(),
            &mut sys,
            &[y0],
            h,
            &SolverConfig::default(),
            &mut st,
        )
        .unwrap();
        assert!((out[0] - y4).abs() < 1e-15);
    }

    #[test]
    fn zero_step_is_identity() {
        let cfg = SolverConfig::default();
        let (_, c2) = mr2(&ssp2(), Mr2Branch::Minus).unwrap();
        let (_, c3) = mr3(&ssp3(), 1, Mr3Variant::V1).unwrap();
        let (_, c4) = mr3(&ssp3(), 1, Mr3Variant::V2).unwrap();
        for stepper in [Stepper::Mr2(c2), Stepper::Mr3(c3), Stepper::Mr3(c4)] {
            let mut sys = ProductPartition::new(0.7);
            let mut st = StepStats::default();
            assert_eq!(stepper.step(&mut sys, &[0.7], 0.0, &cfg, &mut st).unwrap(), vec![0.7]);
        }
    }

    #[test]
    fn mr2_counts() {
        for m in [1, 3] {
            let e = compose(&ssp2(), m);
            let (_, c) = mr2(&e, Mr2Branch::Minus).unwrap();
            let mut sys = ProductPartition::new(1.0);
            let mut st = StepStats::default();
            step_mr2(&c, &mut sys, &[1.0], 0.1, &SolverConfig::default(), &mut st).unwrap();
            assert_eq!(st.f_evals, e.stages());
            assert_eq!(st.solves, 2);
            assert_eq!(st.newton_iters, 0);
        }
    }

    #[test]
    fn newton_fallback_without_hook() {
        struct NoHook;
        impl PartitionedSystem for NoHook {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&mut self, u: &[f64], v: &[f64], out: &mut [f64]) {
                out[0] = -u[0] * u[0] * v[0];
            }
        }
        let (t, c) = mr2(&ssp2(), Mr2Branch::Minus).unwrap();
        let cfg = SolverConfig::default();
        let mut st = StepStats::default();
        let a = step_generic(&t, &mut NoHook, &[1.0], 0.1, &cfg, &mut st).unwrap();
        let b = step_mr2(&c, &mut NoHook, &[1.0], 0.1, &cfg, &mut st).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-13);
        assert!(st.newton_iters > 0);
        let hook_only = SolverConfig {
            jacobian: Jacobian::HookOnly,
            ..cfg
        };
        assert!(step_mr2(&c, &mut NoHook, &[1.0], 0.1, &hook_only, &mut st).is_err());
    }

    #[test]
    fn non_imex_tensor_rejected() {
        let mut t = NprkTensor::new(2);
        t.set_a(0, 1, 0, 1.0);
        t.set_b(0, 0, 1.0);
        let mut sys = ProductPartition::new(1.0);
        let mut st = StepStats::default();
        assert!(matches!(
            step_generic(&t, &mut sys, &[1.0], 0.1, &SolverConfig::default(), &mut st),
            Err(Error::NonImexTensor { .. })
        ));
    }

    #[test]
    fn single_step_integration_equals_stepper_call() {
        let (_, c) = mr2(&ssp2(), Mr2Branch::Minus).unwrap();
        let stepper = Stepper::Mr2(c);
        let cfg = SolverConfig::default();
        let mut sys = ProductPartition::new(1.0);
        let run = integrate(&stepper, &mut sys, &[1.0], 0.0, 0.25, 1, &cfg).unwrap();
        let mut st = StepStats::default();
        let one = stepper.step(&mut sys, &[1.0], 0.25, &cfg, &mut st).unwrap();
        assert_eq!(run.y, one);
        assert_eq!(run.totals, st);
        assert_eq!(run.per_step.len(), 1);
    }
}
