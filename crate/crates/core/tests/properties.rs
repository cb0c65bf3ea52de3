//! Property tests for the structural and numerical invariants.

use num_complex::Complex64;
use proptest::collection::vec;
use proptest::prelude::*;

use mrnprk::linalg::{cyclic_dense, cyclic_tridiagonal};
use mrnprk::methods::{first_order_example, first_order_lstable, first_order_unstable, mr2, mr3, ssp2, ssp3};
use mrnprk::problems::{diffusion_apply, BurgersConfig, BurgersNld, GridFunction, InitialCondition};
use mrnprk::stability::StabilityEvaluator;
use mrnprk::tableau::{compose, reduce, stage_sets, underlying_first, underlying_second, TensorJson};
use mrnprk::verify::{classical_order_of, classical_weights, elementary_weights, order_of, Tree};
use mrnprk::{ButcherTableau, Coupling, Mr2Branch, Mr3Variant, NprkTensor, PartitionedSystem};

fn library() -> Vec<(String, NprkTensor)> {
    let mut out = vec![
        ("example".to_string(), first_order_example()),
        ("unstable-4".to_string(), first_order_unstable(4).unwrap()),
        ("lstable-4".to_string(), first_order_lstable(4).unwrap()),
        ("lstable-8".to_string(), first_order_lstable(8).unwrap()),
    ];
    for m in [1, 2, 4] {
        let e2 = compose(&ssp2(), m);
        let e3 = compose(&ssp3(), m);
        out.push((format!("mr2-{m}"), mr2(&e2, Mr2Branch::Minus).unwrap().0));
        out.push((format!("mr2p-{m}"), mr2(&e2, Mr2Branch::Plus).unwrap().0));
        for omega in [1, 2] {
            out.push((format!("mr3v1-{m}-{omega}"), mr3(&e3, omega, Mr3Variant::V1).unwrap().0));
            out.push((format!("mr3v2-{m}-{omega}"), mr3(&e3, omega, Mr3Variant::V2).unwrap().0));
        }
    }
    out
}

/// Random tensor with about 40% nonzero coefficients.
fn arb_tensor() -> impl Strategy<Value = NprkTensor> {
    (1usize..6).prop_flat_map(|s| {
        (
            Just(s),
            vec(proptest::option::weighted(0.4, -1.0f64..1.0), s * s * s),
            vec(proptest::option::weighted(0.5, -1.0f64..1.0), s * s),
        )
            .prop_map(|(s, a, b)| {
                let mut t = NprkTensor::new(s);
                for (idx, v) in a.into_iter().enumerate() {
                    if let Some(v) = v {
                        t.set_a(idx / (s * s), (idx / s) % s, idx % s, v);
                    }
                }
                for (idx, v) in b.into_iter().enumerate() {
                    if let Some(v) = v {
                        t.set_b(idx / s, idx % s, v);
                    }
                }
                t
            })
    })
}

/// Random explicit tableau with sparse entries and optionally a duplicated
/// stage, so that reduction has something to do.
fn arb_explicit() -> impl Strategy<Value = ButcherTableau> {
    (2usize..7).prop_flat_map(|s| {
        (
            Just(s),
            vec(proptest::option::weighted(0.6, -1.0f64..1.0), s * s),
            vec(proptest::option::weighted(0.7, -1.0f64..1.0), s),
            proptest::option::of(0..s),
        )
            .prop_map(|(s, a, b, dup)| {
                let mut m = vec![0.0; s * s];
                for i in 0..s {
                    for j in 0..i {
                        m[i * s + j] = a[i * s + j].unwrap_or(0.0);
                    }
                }
                if let Some(d) = dup {
                    // Copy row d into the last row when that keeps A explicit.
                    if d + 1 < s {
                        let row: Vec<f64> = m[d * s..(d + 1) * s].to_vec();
                        m[(s - 1) * s..].copy_from_slice(&row);
                    }
                }
                let b = b.into_iter().map(|x| x.unwrap_or(0.0)).collect();
                ButcherTableau::from_flat(s, m, b).unwrap()
            })
    })
}

fn arb_matrix(n: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-1.0f64..1.0, n * n)
}

fn linear_rhs(m: &[f64]) -> impl Fn(&[f64], &mut [f64]) + '_ {
    let n = (m.len() as f64).sqrt() as usize;
    move |y: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = (0..n).map(|j| m[i * n + j] * y[j]).sum();
        }
    }
}

fn scalar_rhs(y: &[f64], out: &mut [f64]) {
    out[0] = y[0].sin() - 0.5 * y[0] * y[0];
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    d / n.max(1.0)
}

/// Classical stability function of a diagonally implicit tableau by forward
/// substitution on `Y = 1 + z A Y`.
fn dirk_r(t: &ButcherTableau, z: Complex64) -> Complex64 {
    let s = t.stages();
    let mut y = vec![Complex64::new(0.0, 0.0); s];
    for i in 0..s {
        let mut acc = Complex64::new(1.0, 0.0);
        for j in 0..i {
            acc += z * t.a(i, j) * y[j];
        }
        y[i] = acc / (1.0 - z * t.a(i, i));
    }
    1.0 + z * (0..s).map(|i| t.b(i) * y[i]).sum::<Complex64>()
}

proptest! {
    #[test]
    fn underlying_abscissae_agree(t in arb_tensor()) {
        let m1 = underlying_first(&t);
        let m2 = underlying_second(&t);
        for i in 0..t.stages() {
            let r1: f64 = m1.row(i).iter().sum();
            let r2: f64 = m2.row(i).iter().sum();
            prop_assert!((r1 - r2).abs() <= 1e-14);
            prop_assert_eq!(m1.c(i), m2.c(i));
        }
    }

    #[test]
    fn reduce_is_idempotent(t in arb_explicit()) {
        let (r, first) = reduce(&t);
        let (rr, kept) = reduce(&r);
        prop_assert_eq!(&rr, &r);
        if first.is_empty() {
            // Nothing carries weight; the placeholder stage is dropped again.
            prop_assert!(kept.is_empty());
        } else {
            prop_assert_eq!(kept, (0..r.stages()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn reduced_tableau_takes_the_same_step(
        t in arb_explicit(),
        m in arb_matrix(3),
        y in vec(-1.0f64..1.0, 3),
        h in 0.01f64..0.5,
    ) {
        let (r, _) = reduce(&t);
        let g = linear_rhs(&m);
        let full = t.explicit_step(&g, &y, h);
        let red = r.explicit_step(&g, &y, h);
        prop_assert!(rel_diff(&red, &full) <= 1e-13);
        let full = t.explicit_step(scalar_rhs, &y[..1], h);
        let red = r.explicit_step(scalar_rhs, &y[..1], h);
        prop_assert!(rel_diff(&red, &full) <= 1e-13);
    }

    #[test]
    fn compose_equals_substeps(
        t in arb_explicit(),
        m in 1usize..5,
        mat in arb_matrix(2),
        y in vec(-1.0f64..1.0, 2),
        h in 0.01f64..0.5,
    ) {
        let g = linear_rhs(&mat);
        let big = compose(&t, m).explicit_step(&g, &y, h);
        let mut small = y.clone();
        for _ in 0..m {
            small = t.explicit_step(&g, &small, h / m as f64);
        }
        prop_assert!(rel_diff(&big, &small) <= 1e-13);
        let big = compose(&t, m).explicit_step(scalar_rhs, &y[..1], h);
        let mut small = y[..1].to_vec();
        for _ in 0..m {
            small = t.explicit_step(scalar_rhs, &small, h / m as f64);
        }
        prop_assert!(rel_diff(&big, &small) <= 1e-13);
    }

    #[test]
    fn tensor_json_round_trip(t in arb_tensor()) {
        let text = serde_json::to_string(&t.to_json()).unwrap();
        let doc: TensorJson = serde_json::from_str(&text).unwrap();
        let back = NprkTensor::from_json(&doc).unwrap();
        prop_assert_eq!(back.to_json(), t.to_json());
    }

    #[test]
    fn single_colour_trees_match_underlying_methods(t in arb_tensor()) {
        let w = elementary_weights(&t);
        let c1 = classical_weights(&underlying_first(&t));
        let c2 = classical_weights(&underlying_second(&t));
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        prop_assert!(close(w[Tree::F.index()], c1[0]));
        prop_assert!(close(w[Tree::F.index()], c2[0]));
        prop_assert!(close(w[Tree::F1F.index()], c1[1]));
        prop_assert!(close(w[Tree::F2F.index()], c2[1]));
        prop_assert!(close(w[Tree::F11.index()], c1[2]));
        prop_assert!(close(w[Tree::F22.index()], c2[2]));
        prop_assert!(close(w[Tree::F1F1F.index()], c1[3]));
        prop_assert!(close(w[Tree::F2F2F.index()], c2[3]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn low_order_equivalence_with_underlying_methods(
        which in 0usize..22,
        pick in any::<prop::sample::Index>(),
        delta in prop_oneof![Just(0.0), -0.3f64..0.3],
    ) {
        let lib = library();
        let (_, base) = &lib[which % lib.len()];
        let mut t = base.clone();
        let entries: Vec<(usize, usize, usize)> = t.a_entries().map(|(k, _)| k).collect();
        let outputs: Vec<(usize, usize)> = t.b_entries().map(|(k, _)| k).collect();
        let n = entries.len() + outputs.len();
        let p = pick.index(n);
        if p < entries.len() {
            let (i, j, k) = entries[p];
            t.add_a(i, j, k, delta);
        } else {
            let (i, j) = outputs[p - entries.len()];
            t.add_b(i, j, delta);
        }
        let tol = 1e-10;
        let nprk = order_of(&t, tol).order.min(2);
        let o1 = classical_order_of(&underlying_first(&t), tol).min(2);
        let o2 = classical_order_of(&underlying_second(&t), tol).min(2);
        prop_assert_eq!(nprk, o1.min(o2));
    }

    #[test]
    fn coupling_survives_relabelling(
        which in 0usize..22,
        perm in Just((0..16).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let lib = library();
        let (name, t) = &lib[which % lib.len()];
        let s = t.stages();
        // Keep the relative order of the first s labels from the shuffle.
        let mut order: Vec<usize> = perm.into_iter().filter(|&p| p < s).collect();
        if order.len() < s {
            order = (0..s).collect();
        }
        let p = t.permuted(&order);
        let a = stage_sets(t).unwrap();
        let b = stage_sets(&p).unwrap();
        prop_assert_eq!(a.coupling, b.coupling, "{}", name);
        let mut s1: Vec<usize> = a.s1.iter().map(|&i| order[i]).collect();
        let mut s2: Vec<usize> = a.s2.iter().map(|&i| order[i]).collect();
        s1.sort_unstable();
        s2.sort_unstable();
        prop_assert_eq!(s1, b.s1);
        prop_assert_eq!(s2, b.s2);
    }

    #[test]
    fn cyclic_tridiagonal_residual(
        n in 3usize..40,
        seed in vec(-1.0f64..1.0, 160),
    ) {
        let lower: Vec<f64> = (0..n).map(|i| seed[i]).collect();
        let upper: Vec<f64> = (0..n).map(|i| seed[40 + i]).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + seed[80 + i].abs()).collect();
        let rhs: Vec<f64> = (0..n).map(|i| seed[120 + i]).collect();
        let x = cyclic_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        let m = cyclic_dense(&lower, &diag, &upper);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| m[i * n + j] * x[j]).sum::<f64>() - rhs[i];
            prop_assert!(r.abs() <= 1e-13);
        }
    }

    #[test]
    fn burgers_partition_is_consistent(
        amp in vec(-0.3f64..0.3, 4),
        n in prop_oneof![Just(32usize), Just(64), Just(100)],
    ) {
        let sys = BurgersNld::new(BurgersConfig { n, t_final: 1.0, ic: InitialCondition::TwoGaussian }).unwrap();
        let y = smooth_state(n, &amp);
        let mut sys = sys;
        let mut split = vec![0.0; n];
        sys.eval(&y, &y, &mut split);
        let mono = sys.rhs_monolithic(&y);
        prop_assert!(rel_diff(&split, &mono) <= 1e-13);
    }

    #[test]
    fn diffusion_is_linear_in_first_argument(
        a1 in vec(-0.3f64..0.3, 4),
        a2 in vec(-0.3f64..0.3, 4),
        av in vec(-0.3f64..0.3, 4),
    ) {
        let n = 64;
        let sys = BurgersNld::new(BurgersConfig { n, t_final: 1.0, ic: InitialCondition::TwoGaussian }).unwrap();
        let g = |x: Vec<f64>| GridFunction { values: x, dx: sys.dx() };
        let u1 = smooth_state(n, &a1);
        let u2 = smooth_state(n, &a2);
        let v = g(smooth_state(n, &av));
        let sum: Vec<f64> = u1.iter().zip(&u2).map(|(x, y)| x + y).collect();
        let d = |u: &[f64]| diffusion_apply(&v, &g(u.to_vec()), sys.a_coef()).values;
        let (ds, d1, d2, d0) = (d(&sum), d(&u1), d(&u2), d(&vec![0.0; n]));
        // Operator scale |u| max(a) max(k) / dx^2.
        let umax = sum.iter().chain(&u1).chain(&u2).fold(0.0f64, |m, x| m.max(x.abs()));
        let amax = sys.a_coef().values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let kmax = v.values.iter().fold(0.0f64, |m, x| m.max(x.abs().sqrt()));
        let scale = umax * amax * kmax / (sys.dx() * sys.dx());
        for i in 0..n {
            prop_assert!((ds[i] - d1[i] - d2[i] + d0[i]).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn burgers_hook_inverts_the_stage_equation(
        ar in vec(-0.3f64..0.3, 4),
        av in vec(-0.3f64..0.3, 4),
        gamma_h in 1e-4f64..0.2,
        n in prop_oneof![Just(40usize), Just(300)],
    ) {
        let mut sys = BurgersNld::new(BurgersConfig { n, t_final: 1.0, ic: InitialCondition::TwoGaussian }).unwrap();
        let rhs = smooth_state(n, &ar);
        let v = smooth_state(n, &av);
        let mut y = vec![0.0; n];
        sys.solve(gamma_h, &v, &rhs, &mut y).unwrap().unwrap();
        let mut f = vec![0.0; n];
        sys.eval(&y, &v, &mut f);
        let scale = rhs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            prop_assert!((y[i] - gamma_h * f[i] - rhs[i]).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn stability_function_restricts_to_underlying_methods(
        which in 0usize..22,
        pts in vec((-3.0f64..0.5, -3.0f64..3.0), 20),
    ) {
        let lib = library();
        let (name, t) = &lib[which % lib.len()];
        let ev = StabilityEvaluator::new(t);
        let (r1, _) = reduce(&underlying_first(t));
        let (r2, _) = reduce(&underlying_second(t));
        let zero = Complex64::new(0.0, 0.0);
        for (re, im) in pts {
            let z = Complex64::new(re, im);
            if let Ok(r) = ev.r_eval(z, zero) {
                let want = dirk_r(&r1, z);
                prop_assert!((r - want).norm() <= 1e-10 * want.norm().max(1.0), "{} M1 at {}", name, z);
            }
            let r = ev.r_eval(zero, z).unwrap();
            let want = dirk_r(&r2, z);
            prop_assert!((r - want).norm() <= 1e-10 * want.norm().max(1.0), "{} M2 at {}", name, z);
        }
    }
}

/// Positive periodic state built from a few Fourier modes.
fn smooth_state(n: usize, amp: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = -2.0 + 4.0 * i as f64 / n as f64;
            let w = std::f64::consts::PI * x / 2.0;
            1.0 + amp[0] * w.sin() + amp[1] * w.cos() + amp[2] * (2.0 * w).sin() + amp[3] * (3.0 * w).cos()
        })
        .collect()
}

#[test]
fn constructed_methods_meet_the_l_stability_hypotheses() {
    for (name, t) in library() {
        if name.starts_with("example") || name.starts_with("unstable") {
            continue;
        }
        let ss = stage_sets(&t).unwrap();
        assert!(t.is_stiffly_accurate(), "{name}");
        assert!(
            matches!(ss.coupling, Coupling::FullyDecoupled | Coupling::OneToTwo),
            "{name}: {}",
            ss.coupling
        );
        let (r1, _) = reduce(&underlying_first(&t));
        assert!(r1.is_diagonally_implicit(), "{name}");
        assert!((0..r1.stages()).all(|i| r1.a(i, i) != 0.0), "{name}");
    }
}

#[test]
fn stiffly_accurate_output_is_the_last_stage() {
    use mrnprk::integrate::{step_generic, SolverConfig, StepStats};
    use mrnprk::problems::{LinearPartition, ProductPartition};
    let lin = LinearPartition::new(2, vec![-1.0, 0.3, 0.2, -2.0], vec![0.1, -0.4, 0.5, -0.3]);
    for (name, t) in library() {
        assert!(t.is_stiffly_accurate(), "{name}");
        // Extra stage Y_{s+1} = y_{n+1}; the output then reads back Y_s.
        let s = t.stages();
        let mut ext = NprkTensor::new(s + 1);
        for ((i, j, k), v) in t.a_entries() {
            ext.set_a(i, j, k, v);
        }
        for ((j, k), v) in t.b_entries() {
            ext.set_a(s, j, k, v);
        }
        for ((j, k), v) in t.stage_row(s - 1) {
            ext.set_b(j, k, v);
        }
        let cfg = SolverConfig::default();
        let mut st = StepStats::default();
        for y0 in [0.3, 0.8, 1.7] {
            let mut sys = ProductPartition::new(y0);
            let a = step_generic(&t, &mut sys, &[y0], 0.2, &cfg, &mut st).unwrap();
            let b = step_generic(&ext, &mut sys, &[y0], 0.2, &cfg, &mut st).unwrap();
            assert!((a[0] - b[0]).abs() <= 1e-13, "{name}");
        }
        let mut sys = lin.clone();
        let a = step_generic(&t, &mut sys, &[1.0, -0.5], 0.3, &cfg, &mut st).unwrap();
        let b = step_generic(&ext, &mut sys, &[1.0, -0.5], 0.3, &cfg, &mut st).unwrap();
        assert!(rel_diff(&a, &b) <= 1e-13, "{name}");
    }
}
