//! Coefficient containers for classical and nonlinearly partitioned Runge-Kutta
//! methods.
//!
//! All indices in the Rust API are 0-based. The JSON exchange format uses
//! 1-based indices (see [`TensorJson`]).
//!
//! An NPRK method with `s` stages advances `y' = F(y, y)` by
//!
//! ```text
//! Y_i     = y_n + h sum_{j,k} a_ijk F(Y_j, Y_k)
//! y_{n+1} = y_n + h sum_{i,j} b_ij  F(Y_i, Y_j)
//! ```
//!
//! Freezing either argument of `F` collapses the tensor to a classical tableau;
//! these are the *underlying* methods returned by [`underlying_first`] and
//! [`underlying_second`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when deciding whether two stage rows are identical.
pub const DUPLICATE_TOL: f64 = 1e-14;

/// Tolerance for the row-sum consistency check on user supplied abscissae.
const ABSCISSA_TOL: f64 = 1e-12;

/// Classical Runge-Kutta coefficients `(A, b, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    s: usize,
    /// Row-major `s x s`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// Builds a tableau from its rows and weights; abscissae are the row sums.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 {
            return Err(Error::InvalidTableau("tableau needs at least one stage".into()));
        }
        if a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::InvalidTableau(format!("A must be {s}x{s}")));
        }
        let flat: Vec<f64> = a.into_iter().flatten().collect();
        Self::from_flat(s, flat, b)
    }

    /// Builds a tableau from a row-major coefficient matrix.
    pub fn from_flat(s: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if s == 0 || a.len() != s * s || b.len() != s {
            return Err(Error::InvalidTableau(format!(
                "expected {s}x{s} matrix and {s} weights, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidTableau("non-finite coefficient".into()));
        }
        let c = (0..s).map(|i| a[i * s..(i + 1) * s].iter().sum()).collect();
        Ok(Self { s, a, b, c })
    }

    /// Like [`ButcherTableau::from_flat`] but with explicitly supplied abscissae,
    /// which must agree with the row sums to `1e-12`.
    pub fn with_abscissae(s: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let mut t = Self::from_flat(s, a, b)?;
        if c.len() != s {
            return Err(Error::InvalidTableau(format!("expected {s} abscissae")));
        }
        for (i, (&given, &sum)) in c.iter().zip(&t.c).enumerate() {
            if (given - sum).abs() > ABSCISSA_TOL * (1.0 + sum.abs()) {
                return Err(Error::InvalidTableau(format!(
                    "c[{i}] = {given} is not the row sum {sum}"
                )));
            }
        }
        t.c = c;
        Ok(t)
    }

    pub fn forward_euler() -> Self {
        Self::new(vec![vec![0.0]], vec![1.0]).expect("valid")
    }

    pub fn backward_euler() -> Self {
        Self::new(vec![vec![1.0]], vec![1.0]).expect("valid")
    }

    pub fn stages(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.s + j]
    }

    #[inline]
    pub fn b(&self, i: usize) -> f64 {
        self.b[i]
    }

    #[inline]
    pub fn c(&self, i: usize) -> f64 {
        self.c[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.s..(i + 1) * self.s]
    }

    pub fn weights(&self) -> &[f64] {
        &self.b
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.c
    }

    /// Matrix as nested rows.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.s).map(|i| self.row(i).to_vec()).collect()
    }

    /// Strictly lower triangular `A`.
    pub fn is_explicit(&self) -> bool {
        (0..self.s).all(|i| (i..self.s).all(|j| self.a(i, j) == 0.0))
    }

    /// Lower triangular `A`.
    pub fn is_diagonally_implicit(&self) -> bool {
        (0..self.s).all(|i| (i + 1..self.s).all(|j| self.a(i, j) == 0.0))
    }

    /// Last row of `A` equals `b`.
    pub fn is_stiffly_accurate(&self) -> bool {
        self.row(self.s - 1) == self.b.as_slice()
    }

    /// Largest entrywise difference to another tableau of the same size.
    pub fn max_abs_diff(&self, other: &ButcherTableau) -> Option<f64> {
        if self.s != other.s {
            return None;
        }
        Some(
            self.a
                .iter()
                .zip(&other.a)
                .chain(self.b.iter().zip(&other.b))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        )
    }

    /// One step of an explicit tableau applied to `y' = g(y)`.
    ///
    /// Panics if the tableau is not explicit.
    pub fn explicit_step<G>(&self, mut g: G, y: &[f64], h: f64) -> Vec<f64>
    where
        G: FnMut(&[f64], &mut [f64]),
    {
        assert!(self.is_explicit(), "explicit_step needs an explicit tableau");
        let n = y.len();
        let mut k = vec![vec![0.0; n]; self.s];
        let mut stage = vec![0.0; n];
        for i in 0..self.s {
            stage.copy_from_slice(y);
            for (j, kj) in k.iter().enumerate().take(i) {
                let aij = self.a(i, j);
                if aij != 0.0 {
                    for (st, kv) in stage.iter_mut().zip(kj) {
                        *st += h * aij * kv;
                    }
                }
            }
            g(&stage, &mut k[i]);
        }
        let mut out = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let bj = self.b[j];
            if bj != 0.0 {
                for (o, kv) in out.iter_mut().zip(kj) {
                    *o += h * bj * kv;
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> TableauJson {
        TableauJson {
            a: self.matrix(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }

    pub fn from_json(doc: &TableauJson) -> Result<Self> {
        let s = doc.b.len();
        if doc.a.len() != s || doc.a.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidTableau(format!("A must be {s}x{s}")));
        }
        let flat = doc.a.iter().flatten().copied().collect();
        Self::with_abscissae(s, flat, doc.b.clone(), doc.c.clone())
    }
}

impl fmt::Display for ButcherTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.s {
            write!(f, "{:>10.6} |", self.c[i])?;
            for j in 0..self.s {
                write!(f, " {:>10.6}", self.a(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "{:>10} |", "")?;
        for j in 0..self.s {
            write!(f, " {:>10.6}", self.b[j])?;
        }
        Ok(())
    }
}

/// JSON form of a classical tableau.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TableauJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Rank-3 stage tensor `a_ijk` and output matrix `b_ij` of an NPRK method.
///
/// Storage is sparse and ordered, so every sum over the coefficients runs in a
/// fixed order. Exact zeros are never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NprkTensor {
    s: usize,
    a: BTreeMap<(usize, usize, usize), f64>,
    b: BTreeMap<(usize, usize), f64>,
}

impl NprkTensor {
    pub fn new(s: usize) -> Self {
        assert!(s > 0, "an NPRK method needs at least one stage");
        Self {
            s,
            a: BTreeMap::new(),
            b: BTreeMap::new(),
        }
    }

    /// Lifts a classical tableau to the tensor `a_ijj = a_ij`, `b_jj = b_j`,
    /// i.e. the method that evaluates `F(Y_j, Y_j)` everywhere.
    pub fn from_classical(t: &ButcherTableau) -> Self {
        let s = t.stages();
        let mut out = Self::new(s);
        for i in 0..s {
            for j in 0..s {
                out.add_a(i, j, j, t.a(i, j));
            }
            out.add_b(i, i, t.b(i));
        }
        out
    }

    pub fn stages(&self) -> usize {
        self.s
    }

    fn check(&self, idx: &[usize]) {
        assert!(
            idx.iter().all(|&i| i < self.s),
            "index {idx:?} out of range for {} stages",
            self.s
        );
    }

    pub fn a(&self, i: usize, j: usize, k: usize) -> f64 {
        self.a.get(&(i, j, k)).copied().unwrap_or(0.0)
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn set_a(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.check(&[i, j, k]);
        if value == 0.0 {
            self.a.remove(&(i, j, k));
        } else {
            self.a.insert((i, j, k), value);
        }
    }

    pub fn add_a(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let v = self.a(i, j, k) + value;
        self.set_a(i, j, k, v);
    }

    pub fn set_b(&mut self, i: usize, j: usize, value: f64) {
        self.check(&[i, j]);
        if value == 0.0 {
            self.b.remove(&(i, j));
        } else {
            self.b.insert((i, j), value);
        }
    }

    pub fn add_b(&mut self, i: usize, j: usize, value: f64) {
        let v = self.b(i, j) + value;
        self.set_b(i, j, v);
    }

    /// Nonzero stage coefficients in index order.
    pub fn a_entries(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.a.iter().map(|(&k, &v)| (k, v))
    }

    /// Nonzero output coefficients in index order.
    pub fn b_entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.b.iter().map(|(&k, &v)| (k, v))
    }

    /// Nonzero coefficients of stage row `i`.
    pub fn stage_row(&self, i: usize) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.a
            .range((i, 0, 0)..(i + 1, 0, 0))
            .map(|(&(_, j, k), &v)| ((j, k), v))
    }

    /// `c_i = sum_{j,k} a_ijk`.
    pub fn abscissae(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.s];
        for (&(i, _, _), &v) in &self.a {
            c[i] += v;
        }
        c
    }

    /// First offending coefficient of the diagonally implicit IMEX sparsity
    /// `a_ijk = 0` for `j > i` or `k >= i`, if any.
    pub fn imex_violation(&self) -> Option<((usize, usize, usize), f64)> {
        self.a_entries().find(|&((i, j, k), _)| j > i || k >= i)
    }

    pub fn is_imex(&self) -> bool {
        self.imex_violation().is_none()
    }

    /// `b_ij = a_sij` for every pair, so `y_{n+1} = Y_s`.
    pub fn is_stiffly_accurate(&self) -> bool {
        let last = self.s - 1;
        let row: BTreeMap<(usize, usize), f64> = self.stage_row(last).collect();
        row == self.b
    }

    /// Relabels stages: stage `i` of `self` becomes stage `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.s);
        let mut out = Self::new(self.s);
        for ((i, j, k), v) in self.a_entries() {
            out.set_a(perm[i], perm[j], perm[k], v);
        }
        for ((i, j), v) in self.b_entries() {
            out.set_b(perm[i], perm[j], v);
        }
        out
    }

    pub fn to_json(&self) -> TensorJson {
        TensorJson {
            s: self.s,
            a: self
                .a_entries()
                .map(|((i, j, k), v)| (i + 1, j + 1, k + 1, v))
                .collect(),
            b: self.b_entries().map(|((i, j), v)| (i + 1, j + 1, v)).collect(),
        }
    }

    pub fn from_json(doc: &TensorJson) -> Result<Self> {
        if doc.s == 0 {
            return Err(Error::InvalidTensor("s must be positive".into()));
        }
        let in_range = |i: usize| (1..=doc.s).contains(&i);
        let mut t = Self::new(doc.s);
        for &(i, j, k, v) in &doc.a {
            if !(in_range(i) && in_range(j) && in_range(k)) {
                return Err(Error::InvalidTensor(format!(
                    "a index ({i},{j},{k}) outside 1..={}",
                    doc.s
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidTensor(format!("a({i},{j},{k}) is not finite")));
            }
            t.add_a(i - 1, j - 1, k - 1, v);
        }
        for &(i, j, v) in &doc.b {
            if !(in_range(i) && in_range(j)) {
                return Err(Error::InvalidTensor(format!("b index ({i},{j}) outside 1..={}", doc.s)));
            }
            if !v.is_finite() {
                return Err(Error::InvalidTensor(format!("b({i},{j}) is not finite")));
            }
            t.add_b(i - 1, j - 1, v);
        }
        Ok(t)
    }
}

/// JSON form of a tensor: `{"s": 4, "a": [[i,j,k,value],...], "b": [[i,j,value],...]}`
/// with 1-based indices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorJson {
    pub s: usize,
    pub a: Vec<(usize, usize, usize, f64)>,
    pub b: Vec<(usize, usize, f64)>,
}

/// Underlying method obtained for `F(u, v) = G(u)`: `a1_ij = sum_k a_ijk`,
/// `b1_i = sum_j b_ij`.
pub fn underlying_first(t: &NprkTensor) -> ButcherTableau {
    let s = t.stages();
    let mut a = vec![0.0; s * s];
    let mut b = vec![0.0; s];
    for ((i, j, _), v) in t.a_entries() {
        a[i * s + j] += v;
    }
    for ((i, _), v) in t.b_entries() {
        b[i] += v;
    }
    ButcherTableau::with_abscissae(s, a, b, t.abscissae()).expect("finite coefficients")
}

/// Underlying method obtained for `F(u, v) = G(v)`: `a2_ik = sum_j a_ijk`,
/// `b2_j = sum_i b_ij`. Shares its abscissae with [`underlying_first`].
pub fn underlying_second(t: &NprkTensor) -> ButcherTableau {
    let s = t.stages();
    let mut a = vec![0.0; s * s];
    let mut b = vec![0.0; s];
    for ((i, _, k), v) in t.a_entries() {
        a[i * s + k] += v;
    }
    for ((_, j), v) in t.b_entries() {
        b[j] += v;
    }
    ButcherTableau::with_abscissae(s, a, b, t.abscissae()).expect("finite coefficients")
}

/// Removes stages that cannot influence the output and merges equivalent
/// stages, returning the reduced tableau and the original indices it keeps.
///
/// Two passes alternate until nothing changes:
/// 1. keep only stages reachable from the nonzero weights through nonzero
///    entries of `A`;
/// 2. merge stages with identical rows (within [`DUPLICATE_TOL`]) into the
///    lowest-indexed representative, summing their columns and weights.
pub fn reduce(t: &ButcherTableau) -> (ButcherTableau, Vec<usize>) {
    let s = t.stages();
    let mut kept: Vec<usize> = (0..s).collect();
    let mut a: Vec<Vec<f64>> = t.matrix();
    let mut b: Vec<f64> = t.weights().to_vec();

    loop {
        let mut changed = false;

        // Reverse reachability from the output row.
        let n = kept.len();
        let mut live = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&j| b[j] != 0.0).collect();
        for &j in &stack {
            live[j] = true;
        }
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if a[i][j] != 0.0 && !live[j] {
                    live[j] = true;
                    stack.push(j);
                }
            }
        }
        if live.iter().any(|&l| !l) {
            changed = true;
            let keep: Vec<usize> = (0..n).filter(|&i| live[i]).collect();
            a = keep.iter().map(|&i| keep.iter().map(|&j| a[i][j]).collect()).collect();
            b = keep.iter().map(|&i| b[i]).collect();
            kept = keep.iter().map(|&i| kept[i]).collect();
        }

        // Merge the first duplicate pair found, then rescan.
        let n = kept.len();
        'outer: for i in 0..n {
            for j in i + 1..n {
                let same = a[i]
                    .iter()
                    .zip(&a[j])
                    .all(|(x, y)| x == y || (x - y).abs() <= DUPLICATE_TOL);
                if same {
                    for row in a.iter_mut() {
                        row[i] += row[j];
                        row.remove(j);
                    }
                    a.remove(j);
                    b[i] += b[j];
                    b.remove(j);
                    kept.remove(j);
                    changed = true;
                    break 'outer;
                }
            }
        }

        if !changed {
            break;
        }
    }

    if kept.is_empty() {
        // No stage carries weight: the method is y_{n+1} = y_n. Keep a single
        // zero stage so the result is still a valid tableau.
        return (
            ButcherTableau::new(vec![vec![0.0]], vec![0.0]).expect("valid"),
            Vec::new(),
        );
    }
    let reduced = ButcherTableau::new(a, b).expect("finite coefficients");
    (reduced, kept)
}

/// Timescale coupling class of a multirate NPRK method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coupling {
    FullyDecoupled,
    OneToTwo,
    TwoToOne,
    FullyCoupled,
}

impl Coupling {
    pub fn name(self) -> &'static str {
        match self {
            Coupling::FullyDecoupled => "fully-decoupled",
            Coupling::OneToTwo => "1->2",
            Coupling::TwoToOne => "2->1",
            Coupling::FullyCoupled => "fully-coupled",
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Stage index sets `S`, `S^{1}`, `S^{2}` (0-based, sorted) and the coupling
/// class they induce.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageSets {
    pub all: Vec<usize>,
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
    pub coupling: Coupling,
}

impl StageSets {
    pub fn in_s1(&self, i: usize) -> bool {
        self.s1.binary_search(&i).is_ok()
    }

    pub fn in_s2(&self, i: usize) -> bool {
        self.s2.binary_search(&i).is_ok()
    }

    /// Stages that are irreducible in both underlying methods.
    pub fn overlap(&self) -> Vec<usize> {
        self.s1.iter().copied().filter(|&i| self.in_s2(i)).collect()
    }

    /// Multirate in the sense that the reduced underlying methods differ in
    /// stage count.
    pub fn is_multirate(&self) -> bool {
        self.s1.len() != self.s2.len()
    }

    /// Whether the coefficient `a_ijk` lies in the allowable set of `class`.
    pub fn stage_allowed(&self, class: Coupling, i: usize, j: usize, k: usize) -> bool {
        let base = self.in_s1(j) && self.in_s2(k);
        match class {
            Coupling::FullyDecoupled => base,
            Coupling::OneToTwo => base || (self.in_s1(i) && self.in_s1(j) && self.in_s1(k)),
            Coupling::TwoToOne => base || (self.in_s2(i) && self.in_s2(j) && self.in_s2(k)),
            Coupling::FullyCoupled => true,
        }
    }

    /// Whether the output coefficient `b_ij` lies in the allowable set of `class`.
    pub fn output_allowed(&self, class: Coupling, i: usize, j: usize) -> bool {
        match class {
            Coupling::FullyCoupled => true,
            _ => self.in_s1(i) && self.in_s2(j),
        }
    }
}

/// Computes the irreducible stage sets of both underlying methods and the
/// coupling class.
pub fn stage_sets(t: &NprkTensor) -> Result<StageSets> {
    let (_, s1) = reduce(&underlying_first(t));
    let (_, s2) = reduce(&underlying_second(t));
    let mut s1 = s1;
    let mut s2 = s2;
    s1.sort_unstable();
    s2.sort_unstable();
    let all: Vec<usize> = (0..t.stages()).collect();
    let missing: Vec<usize> = all
        .iter()
        .copied()
        .filter(|i| s1.binary_search(i).is_err() && s2.binary_search(i).is_err())
        .collect();
    if !missing.is_empty() {
        return Err(Error::AssumptionViolation { missing });
    }
    let mut sets = StageSets {
        all,
        s1,
        s2,
        coupling: Coupling::FullyCoupled,
    };
    sets.coupling = classify_coupling(t, &sets);
    Ok(sets)
}

/// Tightest coupling class whose allowable sets contain every nonzero
/// coefficient of `t`.
pub fn classify_coupling(t: &NprkTensor, ss: &StageSets) -> Coupling {
    for class in [Coupling::FullyDecoupled, Coupling::OneToTwo, Coupling::TwoToOne] {
        let stages_ok = t.a_entries().all(|((i, j, k), _)| ss.stage_allowed(class, i, j, k));
        let output_ok = t.b_entries().all(|((i, j), _)| ss.output_allowed(class, i, j));
        if stages_ok && output_ok {
            return class;
        }
    }
    Coupling::FullyCoupled
}

/// A coefficient that must vanish for the claimed coupling class but does not.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SparsityViolation {
    Stage { i: usize, j: usize, k: usize, value: f64 },
    Output { i: usize, j: usize, value: f64 },
}

/// Lists every coefficient violating the implied sparsity of `claimed`.
/// An empty list means the tensor conforms.
pub fn validate_sparsity(t: &NprkTensor, ss: &StageSets, claimed: Coupling) -> Vec<SparsityViolation> {
    let stage = t
        .a_entries()
        .filter(|&((i, j, k), _)| !ss.stage_allowed(claimed, i, j, k))
        .map(|((i, j, k), value)| SparsityViolation::Stage { i, j, k, value });
    let output = t
        .b_entries()
        .filter(|&((i, j), _)| !ss.output_allowed(claimed, i, j))
        .map(|((i, j), value)| SparsityViolation::Output { i, j, value });
    stage.chain(output).collect()
}

/// Tableau equivalent to `m` consecutive steps of `base` with step `h/m`.
pub fn compose(base: &ButcherTableau, m: usize) -> ButcherTableau {
    assert!(m >= 1, "compose needs m >= 1");
    let s = base.stages();
    let big = s * m;
    let inv = 1.0 / m as f64;
    let mut a = vec![0.0; big * big];
    let mut b = vec![0.0; big];
    for blk in 0..m {
        for i in 0..s {
            let row = blk * s + i;
            for prev in 0..blk {
                for j in 0..s {
                    a[row * big + prev * s + j] = base.b(j) * inv;
                }
            }
            for j in 0..s {
                a[row * big + blk * s + j] = base.a(i, j) * inv;
            }
        }
        for j in 0..s {
            b[blk * s + j] = base.b(j) * inv;
        }
    }
    ButcherTableau::from_flat(big, a, b).expect("finite coefficients")
}
