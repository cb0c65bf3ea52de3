//! Constructors for the concrete methods.
//!
//! Each multirate constructor returns the full coefficient tensor, used by the
//! generic stepper and by the analysis tools, together with a compact record
//! of the coefficients consumed by the specialised steppers in
//! [`crate::integrate`].

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tableau::{ButcherTableau, NprkTensor};
use crate::verify::{classical_order_of, DEFAULT_TOL};

/// Root of `1/6 - 3/2 x + 3 x^2 - x^3` near 0.4359.
pub const SDIRK3_LAMBDA: f64 = 0.435_866_521_508_458_999_416_019_451_193_56;

/// Size above which the third-order variant 1 penultimate coupling coefficient
/// triggers a warning.
pub const LARGE_COEFFICIENT: f64 = 1e3;

pub fn ssp2() -> ButcherTableau {
    ButcherTableau::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.5, 0.5]).expect("valid")
}

pub fn ssp3() -> ButcherTableau {
    ButcherTableau::new(
        vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.25, 0.25, 0.0]],
        vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    )
    .expect("valid")
}

/// Three-stage, stiffly accurate, L-stable SDIRK of order three.
pub fn sdirk3_lstable() -> ButcherTableau {
    let l = SDIRK3_LAMBDA;
    let a31 = (-6.0 * l * l + 16.0 * l - 1.0) / 4.0;
    let a32 = (6.0 * l * l - 20.0 * l + 5.0) / 4.0;
    ButcherTableau::with_abscissae(
        3,
        vec![l, 0.0, 0.0, (1.0 - l) / 2.0, l, 0.0, a31, a32, l],
        vec![a31, a32, l],
        vec![l, (1.0 + l) / 2.0, 1.0],
    )
    .expect("valid")
}

/// Four-stage first-order method combining one backward Euler step for the
/// first argument with three forward Euler steps for the second.
pub fn first_order_example() -> NprkTensor {
    first_order_unstable(3).expect("s2 = 3 is valid")
}

fn check_s2(s2: usize) -> Result<()> {
    if s2 < 2 {
        return Err(Error::InvalidTensor(format!("s2 must be at least 2, got {s2}")));
    }
    Ok(())
}

/// First-order fully coupled method: `s2` forward Euler steps for the second
/// argument, one backward Euler step for the first. Not L-stable in the stiff
/// first-argument limit.
pub fn first_order_unstable(s2: usize) -> Result<NprkTensor> {
    check_s2(s2)?;
    let s = s2 + 1;
    let f = s - 1;
    let h = 1.0 / s2 as f64;
    let mut t = NprkTensor::new(s);
    for i in 1..s2 {
        for j in 0..i {
            t.set_a(i, 0, j, h);
        }
    }
    for j in 0..s2 - 1 {
        t.set_a(f, 0, j, h);
    }
    t.set_a(f, 0, s2 - 1, -((s2 - 1) as f64) * h);
    t.set_a(f, f, s2 - 1, 1.0);
    copy_final_row_to_output(&mut t);
    Ok(t)
}

/// First-order method, L-stable in the stiff first-argument limit, whose
/// reduced first underlying method is a two-stage L-stable DIRK.
pub fn first_order_lstable(s2: usize) -> Result<NprkTensor> {
    check_s2(s2)?;
    let s = s2 + 1;
    let f = s - 1;
    let h = 1.0 / s2 as f64;
    let mut t = NprkTensor::new(s);
    for i in 1..s2 {
        for j in 0..i {
            t.set_a(i, 1, j, h);
        }
    }
    for j in 0..s2 - 1 {
        t.set_a(f, 1, j, h);
    }
    t.set_a(f, 1, s2 - 1, h - 0.75);
    t.set_a(f, f, s2 - 1, 0.75);
    copy_final_row_to_output(&mut t);
    Ok(t)
}

fn copy_final_row_to_output(t: &mut NprkTensor) {
    let f = t.stages() - 1;
    let row: Vec<_> = t.stage_row(f).collect();
    for ((j, k), v) in row {
        t.set_b(j, k, v);
    }
}

fn require_explicit(explicit: &ButcherTableau, order: usize) -> Result<()> {
    if !explicit.is_explicit() {
        return Err(Error::InvalidTableau(
            "base method must be explicit (strictly lower triangular)".into(),
        ));
    }
    let found = classical_order_of(explicit, DEFAULT_TOL);
    if found < order {
        return Err(Error::OrderPrerequisite { required: order, found });
    }
    Ok(())
}

/// Root choice for the second-order diagonal coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mr2Branch {
    /// `(2 - sqrt 2) / 2`, smaller error constant.
    Minus,
    /// `(2 + sqrt 2) / 2`, stronger damping.
    Plus,
}

impl Mr2Branch {
    pub fn gamma(self) -> f64 {
        match self {
            Mr2Branch::Minus => (2.0 - std::f64::consts::SQRT_2) / 2.0,
            Mr2Branch::Plus => (2.0 + std::f64::consts::SQRT_2) / 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mr2Coefficients {
    #[serde(skip)]
    pub explicit_tableau: ButcherTableau,
    pub gamma: f64,
}

/// Tensor index of explicit stage `j` (0-based) when `offset` implicit stages
/// are inserted after the first stage.
#[inline]
pub(crate) fn explicit_index(j: usize, offset: usize) -> usize {
    if j == 0 {
        0
    } else {
        j + offset
    }
}

/// Second-order method wrapping an explicit method of order at least two with
/// one implicit stage before and one after it.
pub fn mr2(explicit: &ButcherTableau, branch: Mr2Branch) -> Result<(NprkTensor, Mr2Coefficients)> {
    require_explicit(explicit, 2)?;
    let s2 = explicit.stages();
    let s = s2 + 2;
    let f = s - 1;
    let g = branch.gamma();
    let map = |j| explicit_index(j, 1);
    let last = map(s2 - 1);

    let mut t = NprkTensor::new(s);
    t.set_a(1, 1, 0, g);
    for ie in 1..s2 {
        for ke in 0..ie {
            t.add_a(map(ie), 1, map(ke), explicit.a(ie, ke));
        }
    }
    for ke in 0..s2 {
        t.add_a(f, 1, map(ke), explicit.b(ke));
    }
    t.add_a(f, 1, last, -g);
    t.add_a(f, f, last, g);
    copy_final_row_to_output(&mut t);

    Ok((
        t,
        Mr2Coefficients {
            explicit_tableau: explicit.clone(),
            gamma: g,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mr3Variant {
    /// Explicit stages integrate `w' = F(Y2, w)`; one penultimate coupling
    /// coefficient grows as the last explicit weight shrinks.
    V1,
    /// Explicit stages integrate a fixed blend of `F(Y2, w)` and `F(Y3, w)`;
    /// bounded coefficients at twice the explicit cost.
    V2,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mr3Coefficients {
    #[serde(skip)]
    pub explicit_tableau: ButcherTableau,
    pub omega: usize,
    pub variant: Mr3Variant,
    pub lambda: f64,
    pub a322: f64,
    /// Penultimate-stage coupling coefficient, variant 1 only.
    pub a_penult: Option<f64>,
    pub as31: f64,
    pub as3sm1: f64,
    /// Blend factor of the explicit stages, variant 2 only.
    pub delta: Option<f64>,
    #[serde(skip)]
    pub sdirk: ButcherTableau,
}

/// `a_{3,2,2}` for the given `omega`.
pub fn mr3_a322(omega: usize) -> f64 {
    let l = SDIRK3_LAMBDA;
    let base = (2.0 - 6.0 * l) / (18.0 * l * l * l - 60.0 * l * l + 15.0 * l);
    if omega == 1 {
        base
    } else {
        base - l
    }
}

/// Blend factor of the second third-order variant.
pub fn mr3_delta() -> f64 {
    let l = SDIRK3_LAMBDA;
    2.0 * (3.0 * l - 1.0) / (3.0 * (l - 1.0))
}

/// Third-order method wrapping an explicit method of order at least three
/// with two implicit stages before and one after it.
pub fn mr3(explicit: &ButcherTableau, omega: usize, variant: Mr3Variant) -> Result<(NprkTensor, Mr3Coefficients)> {
    if omega != 1 && omega != 2 {
        return Err(Error::InvalidTensor(format!("omega must be 1 or 2, got {omega}")));
    }
    require_explicit(explicit, 3)?;
    let s2 = explicit.stages();
    let s = s2 + 3;
    let f = s - 1;
    let pen = s - 2;
    let map = |j| explicit_index(j, 2);

    let sd = sdirk3_lstable();
    let l = SDIRK3_LAMBDA;
    let (a21, a32, a33) = (sd.a(1, 0), sd.a(2, 1), sd.a(2, 2));
    let (c1, c2) = (sd.c(0), sd.c(1));
    let b1 = explicit.b(0);
    let bs = explicit.b(s2 - 1);
    let cs = explicit.c(s2 - 1);
    let a322 = mr3_a322(omega);

    let mut t = NprkTensor::new(s);
    t.set_a(1, 1, 0, sd.a(0, 0));
    t.add_a(2, 1, 0, a21 - a322);
    t.add_a(2, 1, 1, a322);
    t.add_a(2, 2, omega - 1, sd.a(1, 1));

    let (a_penult, delta, as31, as3sm1);
    match variant {
        Mr3Variant::V1 => {
            if bs == 0.0 {
                return Err(Error::DegenerateCoefficient(
                    "last explicit weight is zero, penultimate coupling coefficient is undefined".into(),
                ));
            }
            let ap = (1.0 - 3.0 * c1) / (6.0 * bs * (c2 - c1));
            if ap.abs() > LARGE_COEFFICIENT {
                warn!("penultimate coupling coefficient {ap:e} exceeds {LARGE_COEFFICIENT:e}; consider variant 2");
            }
            for ie in 1..s2 {
                for ke in 0..ie {
                    t.add_a(map(ie), 1, map(ke), explicit.a(ie, ke));
                }
            }
            let corr = map(s2 - 2);
            t.add_a(pen, 1, corr, -ap);
            t.add_a(pen, 2, corr, ap);

            let x31 = (1.0 / 3.0 - a33 * cs + c1 * (a33 * cs - 0.5) - a32 * (c2 - c1) * cs) / ((c1 - c2) * cs);
            as31 = x31;
            as3sm1 = a32 - x31;
            a_penult = Some(ap);
            delta = None;
            for ke in 0..s2 {
                t.add_a(f, 1, map(ke), explicit.b(ke));
            }
        }
        Mr3Variant::V2 => {
            let d = mr3_delta();
            for ie in 1..s2 {
                for ke in 0..ie {
                    let a = explicit.a(ie, ke);
                    t.add_a(map(ie), 1, map(ke), (1.0 - d) * a);
                    t.add_a(map(ie), 2, map(ke), d * a);
                }
            }
            let x1 = a32 - d * (1.0 - b1 - bs);
            let x3 = bs - x1;
            let x4 = 0.5 - bs * cs;
            let n1 = (1.0 - d) * x4 + cs * (x3 - a33);
            let n2 = d * x4 + cs * x1;
            let x31 = (1.0 / 3.0 - a33 * cs - c1 * n1 - c2 * n2) / ((c1 - c2) * cs);
            as31 = x31;
            as3sm1 = a32 - x31 - d * (1.0 - b1 - bs);
            a_penult = None;
            delta = Some(d);
            t.add_a(f, 1, 0, b1);
            for ke in 1..s2 - 1 {
                let b = explicit.b(ke);
                t.add_a(f, 1, map(ke), (1.0 - d) * b);
                t.add_a(f, 2, map(ke), d * b);
            }
            t.add_a(f, 1, pen, bs);
        }
    }
    // Shared final-stage coupling on the first and penultimate stages.
    t.add_a(f, 1, 0, -as31);
    t.add_a(f, 2, 0, as31);
    t.add_a(f, 1, pen, -as3sm1 - a33);
    t.add_a(f, 2, pen, as3sm1);
    t.add_a(f, f, pen, a33);
    copy_final_row_to_output(&mut t);

    Ok((
        t,
        Mr3Coefficients {
            explicit_tableau: explicit.clone(),
            omega,
            variant,
            lambda: l,
            a322,
            a_penult,
            as31,
            as3sm1,
            delta,
            sdirk: sd,
        },
    ))
}
