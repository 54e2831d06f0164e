mod common;

use common::{det, max_abs_diff, solve_gauss};
use onsetml::numerics::{
    dot, eigh_sym, mean_std, norm, pearson_corr, seeded_shuffle, solve_linear, solve_spd, Matrix, NumericsError,
};
use proptest::prelude::*;

fn square(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), d)
}

fn symmetric(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    square(d).prop_map(|a| {
        let d = a.len();
        (0..d).map(|i| (0..d).map(|j| 0.5 * (a[i][j] + a[j][i])).collect()).collect()
    })
}

/// `AᵀA + I`, comfortably positive definite.
fn spd(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    square(d).prop_map(|a| {
        let d = a.len();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| a[k][i] * a[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    })
}

fn sized<S: Strategy + 'static>(f: impl Fn(usize) -> S + Clone + 'static) -> impl Strategy<Value = S::Value> {
    (2usize..=6).prop_flat_map(f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eigenvalues_match_trace_and_determinant(m in sized(symmetric)) {
        let e = eigh_sym(&Matrix::from_rows(&m).unwrap()).unwrap();
        let trace: f64 = (0..m.len()).map(|i| m[i][i]).sum();
        prop_assert!((e.eigenvalues.iter().sum::<f64>() - trace).abs() <= 1e-8);
        prop_assert!((e.eigenvalues.iter().product::<f64>() - det(&m)).abs() <= 1e-6);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_exact(m in sized(symmetric)) {
        let mat = Matrix::from_rows(&m).unwrap();
        let e = eigh_sym(&mat).unwrap();
        for (i, v) in e.eigenvectors.iter().enumerate() {
            prop_assert!((norm(v) - 1.0).abs() <= 1e-9);
            for u in &e.eigenvectors[..i] {
                prop_assert!(dot(u, v).abs() <= 1e-9);
            }
            let mv = mat.matvec(v).unwrap();
            let lv: Vec<f64> = v.iter().map(|x| e.eigenvalues[i] * x).collect();
            prop_assert!(max_abs_diff(&mv, &lv) <= 1e-8);
            // largest-magnitude entry is non-negative
            let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let first = v.iter().find(|x| x.abs() == big).unwrap();
            prop_assert!(*first >= 0.0);
        }
        let r = e.reconstruct();
        for i in 0..m.len() {
            for j in 0..m.len() {
                prop_assert!((r[(i, j)] - m[i][j]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn spd_solve_matches_elimination(a in sized(spd), seed in any::<u64>()) {
        let mut rng = common::Rng::new(seed);
        let b: Vec<f64> = (0..a.len()).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let x = solve_spd(&Matrix::from_rows(&a).unwrap(), &b).unwrap();
        let oracle = solve_gauss(a.clone(), b.clone()).unwrap();
        prop_assert!(max_abs_diff(&x, &oracle) <= 1e-9);
    }

    #[test]
    fn general_solve_matches_elimination(a in sized(square), seed in any::<u64>()) {
        prop_assume!(det(&a).abs() > 1e-3);
        let mut rng = common::Rng::new(seed);
        let b: Vec<f64> = (0..a.len()).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let x = solve_linear(&Matrix::from_rows(&a).unwrap(), &b).unwrap();
        let ax = Matrix::from_rows(&a).unwrap().matvec(&x).unwrap();
        let binf = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_abs_diff(&ax, &b) <= 1e-8 * (1.0 + binf));
    }

    #[test]
    fn pearson_affine_invariance(
        x in prop::collection::vec(-10.0f64..10.0, 3..40),
        seed in any::<u64>(),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let mut rng = common::Rng::new(seed);
        let y: Vec<f64> = x.iter().map(|v| v + rng.normal()).collect();
        prop_assume!(mean_std(&x).unwrap().1 > 1e-3 && mean_std(&y).unwrap().1 > 1e-3);
        let r = pearson_corr(&x, &y).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let yneg: Vec<f64> = y.iter().map(|v| -v).collect();
        prop_assert!((pearson_corr(&xs, &y).unwrap() - r).abs() <= 1e-12);
        prop_assert!((pearson_corr(&y, &xs).unwrap() - r).abs() <= 1e-12);
        prop_assert!((pearson_corr(&x, &yneg).unwrap() + r).abs() <= 1e-12);
        prop_assert!(r.abs() <= 1.0);
    }

    #[test]
    fn shuffle_is_a_deterministic_bijection(n in 0usize..200, seed in any::<u64>()) {
        let p = seeded_shuffle(n, seed);
        let mut sorted = p.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(p, seeded_shuffle(n, seed));
    }
}

#[test]
fn singular_systems_are_reported() {
    let ones = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
    assert!(matches!(solve_spd(&ones, &[1.0, 1.0]), Err(NumericsError::SingularMatrix { .. })));
    assert!(matches!(solve_linear(&ones, &[1.0, 1.0]), Err(NumericsError::SingularMatrix { .. })));
    let skew = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
    assert!(matches!(solve_spd(&skew, &[1.0, 1.0]), Err(NumericsError::NotSymmetric { .. })));
    assert_eq!(solve_linear(&skew, &[5.0, 2.0]).unwrap(), vec![1.0, 2.0]);
}

#[test]
fn hand_worked_values() {
    let d = Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
    assert_eq!(solve_spd(&d, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);

    let e = eigh_sym(&Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap()).unwrap();
    assert!((e.eigenvalues[0] - 2.0).abs() < 1e-12 && e.eigenvalues[1].abs() < 1e-12);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!(max_abs_diff(&e.eigenvectors[0], &[h, h]) < 1e-12);

    let (m, s) = mean_std(&[0.0, 0.0, 6.0]).unwrap();
    assert!((m - 2.0).abs() < 1e-15 && (s - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    assert!(matches!(mean_std(&[1.0]), Err(NumericsError::TooFewValues { .. })));
    assert!(matches!(pearson_corr(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(NumericsError::ConstantColumn)));
}
