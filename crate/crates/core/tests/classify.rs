mod common;

use common::{max_abs_diff, newton_logistic, svc_dual_oracle, Rng};
use onsetml::classify::{
    confusion, fit_logistic, fit_logistic_traced, fit_svc, log_likelihood, log_likelihood_gradient, sigmoid,
    svc_decision, svc_predict, svc_primal_objective, ClassifyError, LogisticModel, LogisticOptions, SvcModel,
    SV_TOL,
};
use onsetml::dataset::{standardize, Standardizer, ENGINEERED_FEATURE_NAMES};
use onsetml::numerics::{dot, Matrix};
use proptest::prelude::*;

fn signed(l: u8) -> f64 {
    if l == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Standardized engineered-product rows.
fn standardized_rows(rng: &mut Rng, n: usize) -> (Matrix, Standardizer) {
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let ri = rng.uniform(5.0, 150.0);
            vec![rng.uniform(0.1, 0.8) * ri, rng.uniform(0.3, 2.5) * ri, rng.uniform(10.0, 40.0) * ri]
        })
        .collect();
    standardize(&Matrix::from_rows(&raw).unwrap(), &ENGINEERED_FEATURE_NAMES).unwrap()
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

fn check_kkt(model: &SvcModel, x: &Matrix, y: &[u8]) -> Result<(), TestCaseError> {
    for (i, (row, &l)) in x.row_iter().zip(y).enumerate() {
        let margin = signed(l) * svc_decision(model, row).unwrap();
        if model.support_indices.contains(&i) {
            prop_assert!(margin <= 1.0 + SV_TOL, "support vector {i} has margin {margin}");
        } else {
            prop_assert!(margin >= 1.0 - 1e-6, "point {i} inside the margin: {margin}");
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences(n in 3usize..25, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let (z, _) = standardized_rows(&mut rng, n);
        let y: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        let beta: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let g = log_likelihood_gradient(&z, &y, beta[0], &beta[1..]);
        let h = 1e-5;
        for j in 0..4 {
            let at = |d: f64| {
                let mut b = beta.clone();
                b[j] += d;
                log_likelihood(&z, &y, b[0], &b[1..])
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1e-2), "component {j}: {} vs {fd}", g[j]);
        }
    }

    #[test]
    fn sigmoid_is_symmetric(x in -700.0f64..700.0) {
        let (p, q) = (sigmoid(x), sigmoid(-x));
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + q - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn raising_the_threshold_never_adds_positives(
        n in 1usize..40,
        seed in any::<u64>(),
        lo in 0.01f64..0.99,
        hi in 0.01f64..0.99,
    ) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let mut rng = Rng::new(seed);
        let y: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        let z: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
        let base = LogisticModel::from_coefficients(rng.normal(), vec![rng.normal(), rng.normal(), rng.normal()], Standardizer::identity(&ENGINEERED_FEATURE_NAMES));
        let predict = |t: f64| {
            let m = base.clone().with_threshold(t).unwrap();
            z.iter().map(|r| m.classify(m.probability_standardized(r).unwrap())).collect::<Vec<u8>>()
        };
        let (a, b) = (confusion(&y, &predict(lo)).unwrap(), confusion(&y, &predict(hi)).unwrap());
        prop_assert!(b.tp <= a.tp && b.fp <= a.fp);
    }

    #[test]
    fn svc_matches_dual_oracle(n in 2usize..=6, seed in any::<u64>(), c_idx in 0usize..3) {
        let c = [10.0, 1.0, 0.1][c_idx];
        let mut rng = Rng::new(seed);
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let pts: Vec<[f64; 2]> = y
            .iter()
            .map(|&l| {
                let m = 1.2 * signed(l);
                [m + rng.normal(), m + rng.normal()]
            })
            .collect();
        let x = Matrix::from_rows(&pts).unwrap();
        let model = fit_svc(&x, &y, c).unwrap();
        let primal = svc_primal_objective(&model.w, model.b, c, &x, &y);
        let oracle = svc_dual_oracle(&pts, &y, c).unwrap();
        prop_assert!((primal - oracle).abs() <= 1e-4, "primal {primal} vs dual optimum {oracle}");
        check_kkt(&model, &x, &y)?;
    }

    #[test]
    fn svc_kkt_on_overlapping_clouds(n in 8usize..40, seed in any::<u64>(), c in 0.05f64..20.0) {
        let mut rng = Rng::new(seed);
        let mut y: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        y[0] = 0;
        y[1] = 1;
        let pts: Vec<Vec<f64>> = y
            .iter()
            .map(|&l| (0..3).map(|_| 0.7 * signed(l) + rng.normal()).collect())
            .collect();
        let x = Matrix::from_rows(&pts).unwrap();
        let model = fit_svc(&x, &y, c).unwrap();
        check_kkt(&model, &x, &y)?;
        prop_assert!((model.margin_width - 2.0 / dot(&model.w, &model.w).sqrt()).abs() <= 1e-12 * model.margin_width);
        prop_assert_eq!(&model, &fit_svc(&x, &y, c).unwrap());
    }
}

/// Labels drawn from `p` by systematic sampling: one uniform offset, then a
/// success wherever the running sum of probabilities crosses an integer. Each
/// label is still Bernoulli(pᵢ); the count of successes is pinned to within
/// one of Σpᵢ.
fn systematic_labels(p: &[f64], offset: f64) -> Vec<u8> {
    let mut acc = offset;
    p.iter()
        .map(|&pi| {
            let before = acc.floor();
            acc += pi;
            u8::from(acc.floor() > before)
        })
        .collect()
}

#[test]
fn planted_failure_model_is_recovered() {
    let planted = [-2.38, -2.39, 0.53, 4.13];
    let mut rng = Rng::new(400);
    let (z, st) = standardized_rows(&mut rng, 400);
    let p: Vec<f64> = z
        .row_iter()
        .map(|r| sigmoid(planted[0] + planted[1] * r[0] + planted[2] * r[1] + planted[3] * r[2]))
        .collect();
    let y = systematic_labels(&p, rng.uniform(0.0, 1.0));

    let oracle = newton_logistic(&rows(&z), &y).expect("labels overlap");
    let model = fit_logistic(&z, &y, st, LogisticOptions::default()).unwrap();
    assert!(model.meta.converged, "{:?}", model.meta);
    let got: Vec<f64> = std::iter::once(model.intercept).chain(model.coefficients.iter().copied()).collect();
    assert!(max_abs_diff(&got, &oracle) <= 1e-4, "GD {got:?} vs Newton {oracle:?}");
    assert!(max_abs_diff(&got, &planted) <= 0.3, "recovered {got:?}");
}

#[test]
fn feature_free_labels_give_a_flat_model() {
    // every covariate row appears once with each label
    let mut rng = Rng::new(200);
    let (half, _) = standardized_rows(&mut rng, 100);
    let doubled: Vec<Vec<f64>> = rows(&half).into_iter().flat_map(|r| [r.clone(), r]).collect();
    let y: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
    let (z, st) = standardize(&Matrix::from_rows(&doubled).unwrap(), &ENGINEERED_FEATURE_NAMES).unwrap();
    let model = fit_logistic(&z, &y, st, LogisticOptions::default()).unwrap();
    assert!(model.intercept.abs() <= 0.2);
    assert!(model.coefficients.iter().all(|c| c.abs() <= 0.2), "{:?}", model.coefficients);
}

#[test]
fn likelihood_rises_every_step() {
    let mut rng = Rng::new(9);
    let (z, st) = standardized_rows(&mut rng, 60);
    let y: Vec<u8> = z.row_iter().map(|r| u8::from(r[2] + rng.normal() > 0.0)).collect();
    let mut trace = Vec::new();
    let options = LogisticOptions {
        eta: 0.1,
        ..LogisticOptions::default()
    };
    fit_logistic_traced(&z, &y, st, options, |_, ll| trace.push(ll)).unwrap();
    assert!(trace.len() > 10);
    for w in trace.windows(2) {
        assert!(w[1] >= w[0] - 64.0 * f64::EPSILON * w[0].abs(), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn logistic_input_errors() {
    let mut rng = Rng::new(1);
    let (z, st) = standardized_rows(&mut rng, 10);
    assert!(matches!(
        fit_logistic(&z, &[1; 10], st.clone(), LogisticOptions::default()),
        Err(ClassifyError::NoClassVariation)
    ));
    let shifted = Matrix::from_rows(&rows(&z).iter().map(|r| r.iter().map(|v| v + 3.0).collect()).collect::<Vec<Vec<f64>>>()).unwrap();
    let y: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
    assert!(matches!(
        fit_logistic(&shifted, &y, st, LogisticOptions::default()),
        Err(ClassifyError::NotStandardized { .. })
    ));
    let m = LogisticModel::from_coefficients(-2.38, vec![-2.39, 0.53, 4.13], Standardizer::identity(&ENGINEERED_FEATURE_NAMES));
    assert_eq!(m.classify(0.5), 1);
    assert_eq!(m.classify(m.probability_standardized(&[0.0, 0.0, 0.0]).unwrap()), 0);
    assert_eq!(m.classify(m.probability_standardized(&[0.0, 0.0, 1.0]).unwrap()), 1);
    assert!(matches!(m.clone().with_threshold(1.0), Err(ClassifyError::InvalidThreshold(_))));
}

#[test]
fn mirrored_blobs_split_at_zero() {
    let mut rng = Rng::new(5);
    let mut pts = Vec::new();
    let mut y = Vec::new();
    for _ in 0..10 {
        let (dx, dy) = (0.5 * rng.normal(), rng.normal());
        pts.push([-5.0 + dx, dy]);
        pts.push([5.0 - dx, -dy]);
        y.extend([0u8, 1]);
    }
    let x = Matrix::from_rows(&pts).unwrap();
    let m = fit_svc(&x, &y, 1.0).unwrap();
    for (row, &l) in x.row_iter().zip(&y) {
        assert!(signed(l) * svc_decision(&m, row).unwrap() >= 1.0 - 1e-6);
    }
    // the boundary meets the x axis at -b/w0
    assert!((-m.b / m.w[0]).abs() <= 1e-3, "{m:?}");

    let fixed = SvcModel {
        w: vec![1.0, 0.0],
        b: -2.0,
        c: 1.0,
        support_indices: vec![],
        margin_width: 2.0,
        dual: vec![],
        iterations: 0,
    };
    assert_eq!(svc_decision(&fixed, &[3.0, 7.0]).unwrap(), 1.0);
    assert_eq!(svc_predict(&fixed, &[3.0, 7.0]).unwrap(), 1);
    assert_eq!(svc_decision(&fixed, &[0.0, 0.0]).unwrap(), -2.0);
    assert_eq!(svc_predict(&fixed, &[0.0, 0.0]).unwrap(), 0);
    assert_eq!(svc_predict(&fixed, &[2.0, -1.0]).unwrap(), 1);
    assert!(matches!(svc_decision(&fixed, &[1.0]), Err(ClassifyError::DimensionMismatch { .. })));
    assert!(matches!(fit_svc(&x, &y, 0.0), Err(ClassifyError::InvalidC(_))));
    assert!(matches!(fit_svc(&x, &[1; 20], 1.0), Err(ClassifyError::NoClassVariation)));
}

#[test]
fn coincident_opposite_points_keep_a_nonzero_weight() {
    // any hyperplane leaves both hinges at 1 or more, so the optimum is
    // w = 0 with objective 2C
    let x = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
    for c in [0.1, 1.0, 10.0] {
        let y = [0, 1, 1];
        let m = fit_svc(&x, &y, c).unwrap();
        let w_norm = dot(&m.w, &m.w).sqrt();
        assert!(w_norm > 0.0 && w_norm < 1e-9);
        assert!(m.margin_width > 1e9);
        let oracle = svc_dual_oracle(&[[1.0, 2.0]; 3], &y, c).unwrap();
        assert!((svc_primal_objective(&m.w, m.b, c, &x, &y) - oracle).abs() <= 1e-8, "{m:?}");
    }
}
