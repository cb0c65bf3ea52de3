//! Order conditions up to order three.
//!
//! The ten bicolored trees of order at most three are hardcoded. Elementary
//! weights are computed as full sums over all stages; the restricted-index
//! variant used by [`index_set_reduction_check`] must agree with them for a
//! conforming method.

use serde::Serialize;

use crate::tableau::{stage_sets, ButcherTableau, Coupling, NprkTensor, StageSets};

/// Default absolute tolerance on order-condition residuals.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance used when comparing restricted and full elementary weights.
pub const INDEX_SET_TOL: f64 = 1e-13;

/// Rooted bicolored trees of order at most three. The subscript names the
/// argument slot of `F` that is differentiated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Tree {
    F,
    F1F,
    F2F,
    F11,
    F12,
    F22,
    F1F1F,
    F1F2F,
    F2F1F,
    F2F2F,
}

impl Tree {
    pub const ALL: [Tree; 10] = [
        Tree::F,
        Tree::F1F,
        Tree::F2F,
        Tree::F11,
        Tree::F12,
        Tree::F22,
        Tree::F1F1F,
        Tree::F1F2F,
        Tree::F2F1F,
        Tree::F2F2F,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Tree::F => "F",
            Tree::F1F => "F1[F]",
            Tree::F2F => "F2[F]",
            Tree::F11 => "F11[F,F]",
            Tree::F12 => "F12[F,F]",
            Tree::F22 => "F22[F,F]",
            Tree::F1F1F => "F1[F1[F]]",
            Tree::F1F2F => "F1[F2[F]]",
            Tree::F2F1F => "F2[F1[F]]",
            Tree::F2F2F => "F2[F2[F]]",
        }
    }

    pub fn order(self) -> usize {
        match self {
            Tree::F => 1,
            Tree::F1F | Tree::F2F => 2,
            _ => 3,
        }
    }

    /// Density `gamma(tau)`.
    pub fn gamma(self) -> f64 {
        match self {
            Tree::F => 1.0,
            Tree::F1F | Tree::F2F => 2.0,
            Tree::F11 | Tree::F12 | Tree::F22 => 3.0,
            _ => 6.0,
        }
    }

    pub fn index(self) -> usize {
        Tree::ALL.iter().position(|&t| t == self).expect("listed")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeCondition {
    pub tree: Tree,
    pub phi: f64,
    pub gamma: f64,
    pub residual: f64,
}

impl TreeCondition {
    pub fn target(&self) -> f64 {
        1.0 / self.gamma
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderReport {
    pub order: usize,
    pub conditions: Vec<TreeCondition>,
}

impl OrderReport {
    /// Largest residual magnitude among trees of exactly order `p`.
    pub fn max_residual_at(&self, p: usize) -> f64 {
        self.conditions
            .iter()
            .filter(|c| c.tree.order() == p)
            .map(|c| c.residual.abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `tree_id,phi,target,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tree_id,phi,target,residual\n");
        for c in &self.conditions {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                c.tree.id(),
                c.phi,
                c.target(),
                c.residual
            ));
        }
        out
    }
}

/// Elementary weights computed with per-stage index restrictions.
///
/// `allow(i, k, l)` decides whether the term `a_ikl` takes part when stage
/// `i` is expanded; `outer(i, j)` restricts the output pairs.
fn weights_with<A, B>(t: &NprkTensor, allow: A, outer: B) -> [f64; 10]
where
    A: Fn(usize, usize, usize) -> bool,
    B: Fn(usize, usize) -> bool,
{
    let s = t.stages();
    let mut c = vec![0.0; s];
    for ((i, k, l), v) in t.a_entries() {
        if allow(i, k, l) {
            c[i] += v;
        }
    }
    // d1_i = sum a_ikl c_k, d2_i = sum a_ikl c_l
    let mut d1 = vec![0.0; s];
    let mut d2 = vec![0.0; s];
    for ((i, k, l), v) in t.a_entries() {
        if allow(i, k, l) {
            d1[i] += v * c[k];
            d2[i] += v * c[l];
        }
    }
    let mut w = [0.0; 10];
    for ((i, j), b) in t.b_entries() {
        if !outer(i, j) {
            continue;
        }
        w[Tree::F.index()] += b;
        w[Tree::F1F.index()] += b * c[i];
        w[Tree::F2F.index()] += b * c[j];
        w[Tree::F11.index()] += b * c[i] * c[i];
        w[Tree::F12.index()] += b * c[i] * c[j];
        w[Tree::F22.index()] += b * c[j] * c[j];
        w[Tree::F1F1F.index()] += b * d1[i];
        w[Tree::F1F2F.index()] += b * d2[i];
        w[Tree::F2F1F.index()] += b * d1[j];
        w[Tree::F2F2F.index()] += b * d2[j];
    }
    w
}

/// All ten elementary weights as full sums, in [`Tree::ALL`] order.
pub fn elementary_weights(t: &NprkTensor) -> [f64; 10] {
    weights_with(t, |_, _, _| true, |_, _| true)
}

pub fn elementary_weight(t: &NprkTensor, tree: Tree) -> f64 {
    elementary_weights(t)[tree.index()]
}

/// Elementary weights with the index sets `I_1(i)`, `I_2(i)` implied by
/// `coupling`, and outer sums over `i in S1`, `j in S2`.
pub fn restricted_weights(t: &NprkTensor, ss: &StageSets, coupling: Coupling) -> [f64; 10] {
    let s = t.stages();
    let in1: Vec<bool> = (0..s).map(|i| ss.in_s1(i)).collect();
    let in2: Vec<bool> = (0..s).map(|i| ss.in_s2(i)).collect();
    let i1 = |i: usize, k: usize| match coupling {
        Coupling::FullyDecoupled | Coupling::OneToTwo => in1[k],
        Coupling::TwoToOne => in2[i] || in1[k],
        Coupling::FullyCoupled => true,
    };
    let i2 = |i: usize, l: usize| match coupling {
        Coupling::FullyDecoupled | Coupling::TwoToOne => in2[l],
        Coupling::OneToTwo => in1[i] || in2[l],
        Coupling::FullyCoupled => true,
    };
    weights_with(t, |i, k, l| i1(i, k) && i2(i, l), |i, j| in1[i] && in2[j])
}

fn report_from(weights: [f64; 10], tol: f64) -> OrderReport {
    let conditions: Vec<TreeCondition> = Tree::ALL
        .iter()
        .zip(weights)
        .map(|(&tree, phi)| TreeCondition {
            tree,
            phi,
            gamma: tree.gamma(),
            residual: phi - 1.0 / tree.gamma(),
        })
        .collect();
    let mut order = 0;
    for p in 1..=3 {
        let ok = conditions
            .iter()
            .filter(|c| c.tree.order() == p)
            .all(|c| c.residual.abs() < tol);
        if !ok {
            break;
        }
        order = p;
    }
    OrderReport { order, conditions }
}

/// Largest `p <= 3` such that every condition of order `<= p` holds to `tol`.
pub fn order_of(t: &NprkTensor, tol: f64) -> OrderReport {
    report_from(elementary_weights(t), tol)
}

/// Classical elementary weights `[sum b, sum b c, sum b c^2, sum b A c]`.
pub fn classical_weights(t: &ButcherTableau) -> [f64; 4] {
    let s = t.stages();
    let mut w = [0.0; 4];
    for i in 0..s {
        let b = t.b(i);
        let c = t.c(i);
        let ac: f64 = (0..s).map(|j| t.a(i, j) * t.c(j)).sum();
        w[0] += b;
        w[1] += b * c;
        w[2] += b * c * c;
        w[3] += b * ac;
    }
    w
}

/// Classical order (at most three) of a Runge-Kutta tableau.
pub fn classical_order_of(t: &ButcherTableau, tol: f64) -> usize {
    let w = classical_weights(t);
    if (w[0] - 1.0).abs() >= tol {
        return 0;
    }
    if (w[1] - 0.5).abs() >= tol {
        return 1;
    }
    if (w[2] - 1.0 / 3.0).abs() >= tol || (w[3] - 1.0 / 6.0).abs() >= tol {
        return 2;
    }
    3
}

/// True iff every elementary weight computed with the restricted index sets of
/// the method's own coupling class equals the full sum to `1e-13`.
pub fn index_set_reduction_check(t: &NprkTensor) -> bool {
    match stage_sets(t) {
        Ok(ss) => index_set_reduction_check_as(t, &ss, ss.coupling),
        Err(_) => false,
    }
}

/// Same as [`index_set_reduction_check`] but with caller-supplied stage sets
/// and coupling class, so a tensor can be checked against a claimed class.
pub fn index_set_reduction_check_as(t: &NprkTensor, ss: &StageSets, coupling: Coupling) -> bool {
    let full = elementary_weights(t);
    let restricted = restricted_weights(t, ss, coupling);
    full.iter()
        .zip(&restricted)
        .all(|(a, b)| (a - b).abs() <= INDEX_SET_TOL * (1.0 + a.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::*;
    use crate::tableau::compose;
    use approx::assert_abs_diff_eq;

    #[test]
    fn classical_orders() {
        assert_eq!(classical_order_of(&ButcherTableau::forward_euler(), DEFAULT_TOL), 1);
        assert_eq!(classical_order_of(&ssp2(), DEFAULT_TOL), 2);
        assert_eq!(classical_order_of(&ssp3(), DEFAULT_TOL), 3);
        assert_eq!(classical_order_of(&sdirk3_lstable(), DEFAULT_TOL), 3);
        for m in [1, 2, 4] {
            assert_eq!(classical_order_of(&compose(&ssp3(), m), DEFAULT_TOL), 3);
        }
    }

    #[test]
    fn example_weights() {
        assert_abs_diff_eq!(elementary_weight(&first_order_example(), Tree::F), 1.0, epsilon = 1e-15);
        let (t, _) = mr2(&ssp2(), Mr2Branch::Minus).unwrap();
        assert_abs_diff_eq!(elementary_weight(&t, Tree::F1F), 0.5, epsilon = 1e-15);
        let (t, _) = mr3(&ssp3(), 2, Mr3Variant::V1).unwrap();
        assert_abs_diff_eq!(elementary_weight(&t, Tree::F12), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn orders_of_constructed_methods() {
        assert_eq!(order_of(&first_order_example(), DEFAULT_TOL).order, 1);
        let (t, _) = mr2(&compose(&ssp2(), 4), Mr2Branch::Minus).unwrap();
        assert_eq!(order_of(&t, DEFAULT_TOL).order, 2);
        let (t, _) = mr3(&compose(&ssp3(), 2), 1, Mr3Variant::V2).unwrap();
        assert_eq!(order_of(&t, DEFAULT_TOL).order, 3);
    }

    #[test]
    fn csv_layout() {
        let csv = order_of(&first_order_example(), DEFAULT_TOL).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "tree_id,phi,target,residual");
        assert_eq!(lines.len(), 11);
        assert!(lines[1].starts_with("F,"));
    }
}
