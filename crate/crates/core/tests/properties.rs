use std::f64::consts::PI;

use proptest::prelude::*;
use semispec::actions::Landscape;
use semispec::airy::{airy, airy_scaled};
use semispec::geometry::{decompose, ScanOptions};
use semispec::oracle::{richardson, Grid, Operator};
use semispec::par::Exec;
use semispec::potential::{parse, Expr, Func, PotentialModel};
use semispec::quadrature::{tanh_sinh, QuadOptions};
use semispec::semiclassics::{extract_phase, phase_space_measure, predict_spectrum, Side};

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var),
        (-4i32..=4, 1u32..=4).prop_map(|(p, q)| Expr::Const(f64::from(p) / f64::from(q))),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let func = prop_oneof![Just(Func::Exp), Just(Func::Sin), Just(Func::Cos), Just(Func::Cosh), Just(Func::Sinh)];
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

fn same(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_reparse_to_the_same_function(e in expr(), x in -2.0f64..2.0) {
        let printed = e.to_string();
        let back = parse(&printed).unwrap();
        prop_assert_eq!(back.to_string(), printed.clone());
        let (m1, m2) = (PotentialModel::from_expr(e), PotentialModel::from_expr(back));
        match (m1.try_value(x), m2.try_value(x)) {
            (Ok(a), Ok(b)) => prop_assert!(same(a, b), "{} at {}: {} vs {}", printed, x, a, b),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn jet_derivative_matches_difference_quotient(a in 0.1f64..2.0, c in -1.0f64..1.0, x in -1.5f64..1.5) {
        let m = PotentialModel::parse(&format!("{a}*x^4 - x^2 + {c}*sin(x) + cosh(x/2)")).unwrap();
        let h = 1e-5;
        let fd = (m.value(x + h) - m.value(x - h)) / (2.0 * h);
        let fd2 = (m.value(x + h) - 2.0 * m.value(x) + m.value(x - h)) / (h * h);
        let j = m.jet(x);
        prop_assert!((j.d1 - fd).abs() < 1e-7 * (1.0 + fd.abs()));
        prop_assert!((j.d2 - fd2).abs() < 1e-3 * (1.0 + fd2.abs()));
    }

    #[test]
    fn airy_wronskian_is_constant(t in -60.0f64..20.0) {
        let a = airy(t).unwrap();
        let scale = (a.ai.abs() + a.aip.abs()) * (a.bi.abs() + a.bip.abs());
        prop_assert!((a.wronskian() - 1.0 / PI).abs() <= 1e-12 * scale.max(1.0));
        let s = airy_scaled(t);
        prop_assert!((s.values.wronskian() - 1.0 / PI).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn quadrature_integrates_polynomials(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c3 in -3.0f64..3.0, b in 0.1f64..4.0) {
        let r = tanh_sinh(|x, _, _| c0 + c1 * x + c3 * x.powi(3), 0.0, b, QuadOptions::default()).unwrap();
        let exact = c0 * b + c1 * b * b / 2.0 + c3 * b.powi(4) / 4.0;
        prop_assert!((r.value - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
    }

    #[test]
    fn sturm_count_is_monotone_and_consistent(s1 in -0.5f64..3.0, s2 in -0.5f64..3.0) {
        let m = PotentialModel::builtin("double_well", None).unwrap();
        let op = Operator::assemble(&m, Grid::new(-2.0, 2.0, 301), 0.1).unwrap();
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        prop_assert!(op.count_below(lo) <= op.count_below(hi));
        let inside = op.eigenvalues_in((lo, hi), Exec::Sequential);
        prop_assert_eq!(inside.len(), op.count_below(hi) - op.count_below(lo));
        prop_assert!(inside.iter().all(|&(_, v)| lo <= v && v < hi));
    }

    #[test]
    fn phase_is_invariant_under_rescaling(k in 0usize..4, c in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0]) {
        let m = PotentialModel::builtin("harmonic", None).unwrap();
        let hbar = 0.1;
        let op = Operator::assemble(&m, Grid::auto((-3.0, 3.0), hbar), hbar).unwrap();
        let values = op.eigenvalues_in((0.0, 1.0), Exec::Sequential);
        let pair = &op.eigenpairs(&values[k..=k], Exec::Sequential)[0];
        let d = decompose(&m, pair.value, (-3.0, 3.0), ScanOptions::default()).unwrap();
        let scaled: Vec<f64> = pair.vector.iter().map(|v| c * v).collect();
        for side in [Side::Left, Side::Right] {
            let a = extract_phase(&m, pair.value, hbar, &op.grid, &pair.vector, (0, &d.wells[0]), side, 0.1).unwrap();
            let b = extract_phase(&m, pair.value, hbar, &op.grid, &scaled, (0, &d.wells[0]), side, 0.1).unwrap();
            let diff = (a.theta - b.theta).rem_euclid(PI);
            prop_assert!(diff.min(PI - diff) < 1e-12);
            prop_assert!((b.amplitude - c.abs() * a.amplitude).abs() < 1e-12 * b.amplitude);
        }
    }

    #[test]
    fn predictions_follow_a_constant_shift(shift in -2.0f64..2.0) {
        let base = PotentialModel::parse("(x^2 - 1)^2 + 0.1*x").unwrap();
        let moved = PotentialModel::parse(&format!("(x^2 - 1)^2 + 0.1*x + {shift}")).unwrap();
        let domain = (-2.2, 2.2);
        let window = (0.25, 0.7);
        let p = predict_spectrum(&Landscape::new(base, domain), 0.07, window, 5.0, Exec::Sequential).unwrap();
        let q = predict_spectrum(&Landscape::new(moved, domain), 0.07, (window.0 + shift, window.1 + shift), 5.0, Exec::Sequential)
            .unwrap();
        prop_assert_eq!(p.levels.len(), q.levels.len());
        for (a, b) in p.levels.iter().zip(&q.levels) {
            prop_assert_eq!((a.well, a.n), (b.well, b.n));
            prop_assert!((a.energy + shift - b.energy).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sequential_and_parallel_agree(hbar in 0.05f64..0.15, seed in any::<u64>()) {
        let m = PotentialModel::builtin("double_well", None).unwrap();
        let grid = Grid::auto((-2.2, 2.2), hbar);
        let a = richardson(&m, grid, hbar, (0.0, 1.0), Exec::Sequential).unwrap();
        let b = richardson(&m, grid, hbar, (0.0, 1.0), Exec::Parallel).unwrap();
        prop_assert_eq!(a, b);
        let x = phase_space_measure(&m, (-2.2, 2.2), (0.2, 0.8), 40_000, seed, Exec::Sequential);
        let y = phase_space_measure(&m, (-2.2, 2.2), (0.2, 0.8), 40_000, seed, Exec::Parallel);
        prop_assert_eq!(x, y);
    }
}
