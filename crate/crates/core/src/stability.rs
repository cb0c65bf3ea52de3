//! Linear stability of NPRK methods on the partitioned Dahlquist problem
//! `y' = z1/h u + z2/h v` evaluated at `u = v = y`.
//!
//! With `Z = z1 A1 + z2 A2`, `w = z1 b1 + z2 b2` and `e` the vector of ones,
//!
//! ```text
//! R(z1, z2) = det(I - Z + e w^T) / det(I - Z) = 1 + w^T (I - Z)^{-1} e.
//! ```
//!
//! Both forms are available; the second (matrix determinant lemma) is used
//! for evaluation because it keeps full relative accuracy when `R` is small.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{complex_log_det, LogDet};
use crate::tableau::{underlying_first, underlying_second, NprkTensor, StageSets};

/// `|Q|` below this is reported as a singular denominator.
pub const SINGULAR_Q: f64 = 1e-300;

/// Fitted degrees further than this from an integer are rejected.
pub const DEGREE_TOL: f64 = 0.05;

type C = Complex64;

/// Dense complex LU with partial pivoting, tracking the determinant in
/// logarithmic form. Lower triangular input is kept as is, so that huge
/// off-diagonal entries cannot swamp the diagonal.
struct ComplexLu {
    n: usize,
    lu: Vec<C>,
    piv: Vec<usize>,
    det: LogDet,
    lower: bool,
}

impl ComplexLu {
    fn new(m: Vec<C>, n: usize) -> Self {
        let lower = (0..n).all(|r| (r + 1..n).all(|c| m[r * n + c] == C::new(0.0, 0.0)));
        if lower {
            let mut phase = C::new(1.0, 0.0);
            let mut ln_abs = 0.0;
            for i in 0..n {
                let d = m[i * n + i];
                if d.norm() == 0.0 {
                    phase = C::new(0.0, 0.0);
                    ln_abs = f64::NEG_INFINITY;
                    break;
                }
                phase *= d / d.norm();
                ln_abs += d.norm().ln();
            }
            return Self {
                n,
                lu: m,
                piv: (0..n).collect(),
                det: LogDet { phase, ln_abs },
                lower,
            };
        }
        Self::pivoted(m, n)
    }

    fn pivoted(mut m: Vec<C>, n: usize) -> Self {
        let mut piv: Vec<usize> = (0..n).collect();
        let mut phase = C::new(1.0, 0.0);
        let mut ln_abs = 0.0;
        for col in 0..n {
            let mut p = col;
            let mut best = m[col * n + col].norm();
            for r in col + 1..n {
                let v = m[r * n + col].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Self {
                    n,
                    lu: m,
                    piv,
                    det: LogDet {
                        phase: C::new(0.0, 0.0),
                        ln_abs: f64::NEG_INFINITY,
                    },
                    lower: false,
                };
            }
            if p != col {
                for c in 0..n {
                    m.swap(col * n + c, p * n + c);
                }
                piv.swap(col, p);
                phase = -phase;
            }
            let d = m[col * n + col];
            phase *= d / best;
            ln_abs += best.ln();
            for r in col + 1..n {
                let f = m[r * n + col] / d;
                m[r * n + col] = f;
                if f != C::new(0.0, 0.0) {
                    for c in col + 1..n {
                        let v = m[col * n + c];
                        m[r * n + c] -= f * v;
                    }
                }
            }
        }
        Self {
            n,
            lu: m,
            piv,
            det: LogDet { phase, ln_abs },
            lower: false,
        }
    }

    fn solve(&self, rhs: &[C]) -> Vec<C> {
        let n = self.n;
        if self.lower {
            let mut x = rhs.to_vec();
            for r in 0..n {
                let mut s = x[r];
                for c in 0..r {
                    s -= self.lu[r * n + c] * x[c];
                }
                x[r] = s / self.lu[r * n + r];
            }
            return x;
        }
        let mut x: Vec<C> = self.piv.iter().map(|&p| rhs[p]).collect();
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

/// Underlying additive Runge-Kutta data of an NPRK method.
#[derive(Clone, Debug)]
pub struct StabilityEvaluator {
    s: usize,
    a1: Vec<f64>,
    a2: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    /// Both weight vectors equal the last stage rows, so `R` is the last stage.
    stiffly_accurate: bool,
}

/// Result of probing `R` along the negative real `z1` axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StiffLimit {
    pub z2: (f64, f64),
    /// `R(-1e12, z2)`.
    pub at_1e12: (f64, f64),
    /// `R(-1e14, z2)`, the reported limit.
    pub limit: (f64, f64),
    pub modulus: f64,
    /// The two probes agree to 1e-2 relative.
    pub converged: bool,
}

/// Rectangular grid in the `z2` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl GridSpec {
    pub fn new(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Self {
        Self {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
            n_re,
            n_im,
        }
    }

    fn coord(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
        if n <= 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    }

    pub fn re(&self, k: usize) -> f64 {
        Self::coord(self.re_min, self.re_max, self.n_re, k)
    }

    pub fn im(&self, k: usize) -> f64 {
        Self::coord(self.im_min, self.im_max, self.n_im, k)
    }

    /// Area represented by one grid point.
    pub fn cell_area(&self) -> f64 {
        let dx = if self.n_re > 1 {
            (self.re_max - self.re_min) / (self.n_re - 1) as f64
        } else {
            0.0
        };
        let dy = if self.n_im > 1 {
            (self.im_max - self.im_min) / (self.n_im - 1) as f64
        } else {
            0.0
        };
        dx * dy
    }

    pub fn len(&self) -> usize {
        self.n_re * self.n_im
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Membership raster of one slice `P(z1)`. Points are stored row by row with
/// the imaginary part as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSlice {
    pub z1: C,
    pub grid: GridSpec,
    /// `max(|R(z1, z2)|, |R(conj z1, z2)|)`, infinite where `Q` vanishes.
    pub modulus: Vec<f64>,
    pub mask: Vec<bool>,
}

impl RegionSlice {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.cell_area()
    }

    pub fn point(&self, idx: usize) -> C {
        let n = self.grid.n_re;
        C::new(self.grid.re(idx % n), self.grid.im(idx / n))
    }

    /// CSV with header `re_z2,im_z2,abs_r,member`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_z2,im_z2,abs_r,member\n");
        for (idx, (&m, &member)) in self.modulus.iter().zip(&self.mask).enumerate() {
            let z = self.point(idx);
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{}\n",
                z.re,
                z.im,
                m,
                u8::from(member)
            ));
        }
        out
    }
}

/// A fitted polynomial degree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DegreeFit {
    pub fitted: f64,
    pub degree: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeReport {
    /// Degree of `P` in `z1` at fixed generic `z2`.
    pub deg_z1_num: DegreeFit,
    /// Degree of `Q` in `z1` at fixed generic `z2`.
    pub deg_z1_den: DegreeFit,
    /// Degree of `P` in `z2` at fixed generic `z1`.
    pub deg_z2_num: DegreeFit,
    /// Number of nonzero diagonal entries of the first underlying matrix.
    pub implicit_diagonals: usize,
    /// `deg_z1_den` equals `implicit_diagonals`.
    pub den_matches_diagonals: bool,
    /// `deg_z2_num` is at most the size of the second stage set.
    pub z2_num_within_stage_count: bool,
}

/// Generic fixed values used when sampling along rays.
const RAY_Z2: C = C::new(-0.7, 0.4);
const RAY_Z1: C = C::new(-0.9, 0.3);
const RAY_DIR: C = C::new(-0.8, 0.6);

impl StabilityEvaluator {
    pub fn new(t: &NprkTensor) -> Self {
        let m1 = underlying_first(t);
        let m2 = underlying_second(t);
        let s = t.stages();
        let flat = |m: &crate::tableau::ButcherTableau| (0..s).flat_map(|i| m.row(i).to_vec()).collect::<Vec<f64>>();
        let (a1, a2) = (flat(&m1), flat(&m2));
        let (b1, b2) = (m1.weights().to_vec(), m2.weights().to_vec());
        let last = s.saturating_sub(1) * s;
        let stiffly_accurate = s > 0 && a1[last..] == b1[..] && a2[last..] == b2[..];
        Self {
            s,
            a1,
            a2,
            b1,
            b2,
            stiffly_accurate,
        }
    }

    pub fn stages(&self) -> usize {
        self.s
    }

    fn q_matrix(&self, z1: C, z2: C) -> Vec<C> {
        let s = self.s;
        let mut m = vec![C::new(0.0, 0.0); s * s];
        for i in 0..s {
            for j in 0..s {
                let id = if i == j { 1.0 } else { 0.0 };
                m[i * s + j] = C::new(id, 0.0) - z1 * self.a1[i * s + j] - z2 * self.a2[i * s + j];
            }
        }
        m
    }

    fn w(&self, z1: C, z2: C) -> Vec<C> {
        self.b1.iter().zip(&self.b2).map(|(&x, &y)| z1 * x + z2 * y).collect()
    }

    /// `det(I - z1 A1 - z2 A2)` in log form.
    pub fn q_det(&self, z1: C, z2: C) -> LogDet {
        ComplexLu::new(self.q_matrix(z1, z2), self.s).det
    }

    /// `det(I - z1 A1 - z2 A2 + e w^T)` in log form, by direct elimination.
    pub fn p_det(&self, z1: C, z2: C) -> LogDet {
        let s = self.s;
        let mut m = self.q_matrix(z1, z2);
        let w = self.w(z1, z2);
        for i in 0..s {
            for j in 0..s {
                m[i * s + j] += w[j];
            }
        }
        complex_log_det(&mut m, s)
    }

    /// `R` together with `ln|Q|`.
    fn r_and_q(&self, z1: C, z2: C) -> Result<(C, LogDet)> {
        let lu = ComplexLu::new(self.q_matrix(z1, z2), self.s);
        if lu.det.is_zero() || lu.det.ln_abs < SINGULAR_Q.ln() {
            return Err(Error::SingularDenominator(lu.det.ln_abs.exp()));
        }
        let e = vec![C::new(1.0, 0.0); self.s];
        let x = lu.solve(&e);
        if self.stiffly_accurate {
            return Ok((x[self.s - 1], lu.det));
        }
        let w = self.w(z1, z2);
        let r = w.iter().zip(&x).fold(C::new(1.0, 0.0), |acc, (wi, xi)| acc + wi * xi);
        Ok((r, lu.det))
    }

    /// Stability function `R(z1, z2)`.
    pub fn r_eval(&self, z1: C, z2: C) -> Result<C> {
        self.r_and_q(z1, z2).map(|(r, _)| r)
    }

    /// `R` as the ratio of the two determinants; slower and less accurate than
    /// [`StabilityEvaluator::r_eval`] near zeros of `P`.
    pub fn r_eval_det_ratio(&self, z1: C, z2: C) -> Result<C> {
        let q = self.q_det(z1, z2);
        if q.is_zero() || q.ln_abs < SINGULAR_Q.ln() {
            return Err(Error::SingularDenominator(q.ln_abs.exp()));
        }
        Ok(self.p_det(z1, z2).ratio(&q))
    }

    /// Probes `R(z1, z2)` at `z1 = -1e12` and `z1 = -1e14`.
    pub fn stiff_limit(&self, z2: C) -> Result<StiffLimit> {
        let r12 = self.r_eval(C::new(-1e12, 0.0), z2)?;
        let r14 = self.r_eval(C::new(-1e14, 0.0), z2)?;
        let scale = r14.norm().max(r12.norm());
        let converged = scale < 1e-300 || (r14 - r12).norm() <= 1e-2 * scale.max(1e-12);
        Ok(StiffLimit {
            z2: (z2.re, z2.im),
            at_1e12: (r12.re, r12.im),
            limit: (r14.re, r14.im),
            modulus: r14.norm(),
            converged,
        })
    }

    /// Joint stability region slice `P(z1)` rasterised on `grid`.
    pub fn region_slice(&self, z1: C, grid: &GridSpec) -> RegionSlice {
        let n = grid.len();
        let modulus: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|idx| {
                let z2 = C::new(grid.re(idx % grid.n_re), grid.im(idx / grid.n_re));
                let a = self.r_eval(z1, z2).map(|r| r.norm()).unwrap_or(f64::INFINITY);
                let b = self.r_eval(z1.conj(), z2).map(|r| r.norm()).unwrap_or(f64::INFINITY);
                a.max(b)
            })
            .collect();
        let mask = modulus.iter().map(|&m| m <= 1.0).collect();
        RegionSlice {
            z1,
            grid: *grid,
            modulus,
            mask,
        }
    }

    /// `ln|P|` evaluated as `ln|Q| + ln|R|`, which avoids the cancellation a
    /// direct determinant suffers when `P` is much smaller than its entries.
    fn ln_abs_p(&self, z1: C, z2: C) -> Result<f64> {
        let (r, q) = self.r_and_q(z1, z2)?;
        Ok(q.ln_abs + r.norm().ln())
    }

    /// Fits polynomial degrees of `P` and `Q` by log-log regression along rays
    /// with `|z|` in `[1e6, 1e10]`.
    pub fn degree_report(&self, ss: &StageSets) -> Result<DegreeReport> {
        let radii: Vec<f64> = (0..9).map(|k| 10f64.powf(6.0 + 0.5 * k as f64)).collect();
        let fit = |what: &str, f: &dyn Fn(C) -> Result<f64>| -> Result<DegreeFit> {
            let mut xs = Vec::with_capacity(radii.len());
            let mut ys = Vec::with_capacity(radii.len());
            for &r in &radii {
                xs.push(r.ln());
                ys.push(f(RAY_DIR * r)?);
            }
            let fitted = if ys.iter().all(|y| *y == f64::NEG_INFINITY) {
                0.0
            } else {
                ls_slope(&xs, &ys)
            };
            let degree = fitted.round();
            if !fitted.is_finite() || (fitted - degree).abs() > DEGREE_TOL {
                return Err(Error::DegreeMismatch {
                    what: what.to_string(),
                    fitted,
                });
            }
            Ok(DegreeFit {
                fitted,
                degree: degree as i64,
            })
        };
        let deg_z1_den = fit("z1 denominator", &|z| Ok(self.q_det(z, RAY_Z2).ln_abs))?;
        let deg_z1_num = fit("z1 numerator", &|z| self.ln_abs_p(z, RAY_Z2))?;
        let deg_z2_num = fit("z2 numerator", &|z| self.ln_abs_p(RAY_Z1, z))?;
        let implicit_diagonals = (0..self.s).filter(|&i| self.a1[i * self.s + i] != 0.0).count();
        Ok(DegreeReport {
            deg_z1_num,
            deg_z1_den,
            deg_z2_num,
            implicit_diagonals,
            den_matches_diagonals: deg_z1_den.degree == implicit_diagonals as i64,
            z2_num_within_stage_count: deg_z2_num.degree <= ss.s2.len() as i64,
        })
    }
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Classical stability function `1 + z b^T (I - z A)^{-1} e` of a tableau.
pub fn classical_r(t: &crate::tableau::ButcherTableau, z: C) -> Result<C> {
    // Both underlying methods of the lifted tensor equal `t`.
    StabilityEvaluator::new(&NprkTensor::from_classical(t)).r_eval(z, C::new(0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::*;
    use crate::tableau::{compose, stage_sets};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn identity_at_origin() {
        let ev = StabilityEvaluator::new(&first_order_example());
        let r = ev.r_eval(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(r, c(1.0, 0.0));
    }

    #[test]
    fn imex_euler() {
        // Y1 = y, Y2 = y + h F(Y2, Y1), y_{n+1} = Y2.
        let mut t = NprkTensor::new(2);
        t.set_a(1, 1, 0, 1.0);
        t.set_b(1, 0, 1.0);
        let ev = StabilityEvaluator::new(&t);
        for (z1, z2) in [(c(-3.0, 1.0), c(0.5, -0.2)), (c(-100.0, 0.0), c(-1.0, 2.0))] {
            let r = ev.r_eval(z1, z2).unwrap();
            let expect = (1.0 + z2) / (1.0 - z1);
            assert!((r - expect).norm() < 1e-14 * (1.0 + expect.norm()), "{r} {expect}");
            let d = ev.r_eval_det_ratio(z1, z2).unwrap();
            assert!((d - expect).norm() < 1e-13 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn singular_denominator() {
        let ev = StabilityEvaluator::new(&NprkTensor::from_classical(
            &crate::tableau::ButcherTableau::backward_euler(),
        ));
        assert!(matches!(
            ev.r_eval(c(1.0, 0.0), c(0.0, 0.0)),
            Err(Error::SingularDenominator(_))
        ));
    }

    #[test]
    fn empty_grid() {
        let ev = StabilityEvaluator::new(&first_order_example());
        let g = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 0, 0);
        let slice = ev.region_slice(c(0.0, 0.0), &g);
        assert!(slice.mask.is_empty());
        assert_eq!(slice.area(), 0.0);
    }

    #[test]
    fn mr2_stiff_limit_vanishes() {
        let (t, _) = mr2(&ssp2(), Mr2Branch::Minus).unwrap();
        let ev = StabilityEvaluator::new(&t);
        let lim = ev.stiff_limit(c(-1.0, 0.0)).unwrap();
        assert!(lim.modulus < 1e-6);
    }

    #[test]
    fn mr2_degrees() {
        let (t, _) = mr2(&ssp2(), Mr2Branch::Minus).unwrap();
        let ss = stage_sets(&t).unwrap();
        let rep = StabilityEvaluator::new(&t).degree_report(&ss).unwrap();
        assert_eq!(rep.deg_z1_den.degree, 2);
        assert!(rep.deg_z1_num.degree <= 1);
        assert!(rep.den_matches_diagonals);
    }

    #[test]
    fn triangular_denominator_ignores_explicit_partition() {
        let (t, _) = mr3(&compose(&ssp3(), 2), 2, Mr3Variant::V1).unwrap();
        let ev = StabilityEvaluator::new(&t);
        let z1 = c(-0.9, 0.3);
        let base = ev.q_det(z1, c(0.0, 0.0));
        for r in [1e3, 3.16e7, 1e9, 3.16e9] {
            let q = ev.q_det(z1, c(-0.8, 0.6) * r);
            assert_abs_diff_eq!(q.ln_abs, base.ln_abs, epsilon = 1e-12);
        }
        assert!(ev.degree_report(&stage_sets(&t).unwrap()).is_ok());
    }

    #[test]
    fn stiffly_accurate_shortcut_matches_weights() {
        let (t, _) = mr3(&compose(&ssp3(), 2), 2, Mr3Variant::V2).unwrap();
        let ev = StabilityEvaluator::new(&t);
        assert!(ev.stiffly_accurate);
        let generic = StabilityEvaluator {
            stiffly_accurate: false,
            ..ev.clone()
        };
        for (z1, z2) in [(c(-2.0, 1.0), c(-0.5, 0.2)), (c(-30.0, 0.0), c(-1.0, -1.0))] {
            let a = ev.r_eval(z1, z2).unwrap();
            let b = generic.r_eval(z1, z2).unwrap();
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn classical_r_of_ssp2() {
        let z = c(-0.3, 0.8);
        let r = classical_r(&ssp2(), z).unwrap();
        let expect = 1.0 + z + z * z / 2.0;
        assert_abs_diff_eq!(r.re, expect.re, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, expect.im, epsilon = 1e-15);
    }
}
