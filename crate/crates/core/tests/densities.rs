use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use shifttest::densities::scm::presets::verma_gaussian;
use shifttest::densities::{fit_gaussian_conditional, scm_simulate, StaircasePair};
use shifttest::ols::ols_columns;
use shifttest::{Dataset, RandomStream};

#[test]
fn staircase_masses_sum_to_one() {
    let last = 10_000_000u64;
    for &(alpha, eps) in &[(0.19, 1.5), (0.7, 1.7), (0.5, 1.0), (0.05, 1.9)] {
        let pair = StaircasePair::new(alpha, eps).unwrap();
        let (mut sf, mut sg) = (0.0, 0.0);
        let (mut prev_f, mut prev_g) = (0.0, 0.0);
        for v in 0..=last {
            // Kahan-free ascending sum is fine: terms shrink and stay positive.
            sf += pair.f_cell(v as f64);
            sg += pair.g_cell(v as f64);
            if v % 1_000_000 == 0 {
                assert!(sf >= prev_f && sg >= prev_g);
                (prev_f, prev_g) = (sf, sg);
            }
        }
        assert!((1.0 - sf).abs() < 1e-6, "alpha={alpha} eps={eps}: Σf = {sf}");
        assert!((1.0 - sg).abs() < 1e-6, "alpha={alpha} eps={eps}: Σg = {sg}");
    }
}

#[test]
fn staircase_second_moment_tail_is_small() {
    // f_v²/g_v ≈ L²/ε · v^(ε-3) for large v, so the tail past V decays like V^(ε-2)
    for &(alpha, eps) in &[(0.19f64, 1.5f64), (0.19, 1.0)] {
        let pair = StaircasePair::new(alpha, eps).unwrap();
        let head = pair.ratio_moment_partial(2.0, 1_000_000);
        let tail = pair.ratio_moment_partial(2.0, 2_000_000) - head;
        let l2 = (1.0 - alpha).ln().powi(2);
        let integral = l2 / eps * (1e6f64.powf(eps - 2.0) - 2e6f64.powf(eps - 2.0)) / (2.0 - eps);
        assert!(head.is_finite() && head > 1.0);
        assert!((tail / integral - 1.0).abs() < 0.05, "eps={eps}: tail {tail} vs {integral}");
        if eps <= 1.0 {
            assert!(tail < 1e-6, "tail {tail}");
        }
    }
}

#[test]
fn staircase_max_statistic_has_exact_level() {
    let pair = StaircasePair::new(0.19, 1.5).unwrap();
    for m in [1u32, 2, 5, 40, 1000] {
        let mass_below = pair.target_cdf(m as f64).powi(m as i32);
        assert!((mass_below - 0.81).abs() < 1e-12, "m={m}");
    }
}

/// Covariance of the observed columns of the Gaussian Verma model, from
/// `X = (I - B)^{-1} D e`.
fn verma_covariance(theta: f64) -> DMatrix<f64> {
    // order: h, x1, x2, x3, x4
    let mut b = DMatrix::<f64>::zeros(5, 5);
    b[(2, 1)] = 1.0;
    b[(2, 0)] = 1.0;
    b[(3, 2)] = 1.0;
    b[(4, 1)] = theta;
    b[(4, 3)] = 1.0;
    b[(4, 0)] = 1.0;
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, 2.0, 1.0]));
    let a = (DMatrix::identity(5, 5) - b).try_inverse().unwrap() * d;
    let full = &a * a.transpose();
    full.view((1, 1), (4, 4)).into_owned()
}

#[test]
fn linear_scm_matches_closed_form_covariance() {
    let n = 100_000;
    let theta = 0.3;
    let data = scm_simulate(&verma_gaussian(theta), n, RandomStream::new(7, 0)).unwrap();
    let names = ["x1", "x2", "x3", "x4"];
    let cols: Vec<Vec<f64>> = names.iter().map(|c| data.column(c).unwrap()).collect();
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let truth = verma_covariance(theta);
    for i in 0..4 {
        for j in 0..4 {
            let s = (0..n)
                .map(|k| (cols[i][k] - means[i]) * (cols[j][k] - means[j]))
                .sum::<f64>()
                / (n - 1) as f64;
            let t = truth[(i, j)];
            // Gaussian sampling variance of a covariance estimate
            let se = ((truth[(i, i)] * truth[(j, j)] + t * t) / n as f64).sqrt();
            assert!((s - t).abs() < 5.0 * se, "cov({i},{j}) = {s}, expected {t} ± {se}");
        }
    }
}

fn linear_data(n: usize, beta: &[f64], sd: f64, stream: RandomStream) -> Dataset {
    let mut rng = stream.rng();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let x1: f64 = rng.sample(StandardNormal);
            let x2: f64 = rng.random_range(-2.0..2.0);
            let e: f64 = rng.sample(StandardNormal);
            vec![x1, x2, beta[0] + beta[1] * x1 + beta[2] * x2 + sd * e]
        })
        .collect();
    Dataset::from_rows(vec!["x1".into(), "x2".into(), "y".into()], &rows).unwrap()
}

#[test]
fn fitted_coefficients_have_nominal_coverage() {
    let beta = [0.5, -1.0, 2.0];
    let reps = 200;
    let mut covered = [0usize; 3];
    let root = RandomStream::new(8, 0);
    for r in 0..reps {
        let data = linear_data(2000, &beta, 1.5, root.for_replication(0, r));
        let fit = ols_columns(&data, "y", &["x1", "x2"]).unwrap();
        let g = fit_gaussian_conditional(&data, "y", &["x1", "x2"]).unwrap();
        assert_eq!(g.intercept, fit.coefficients[0]);
        for k in 0..3 {
            if (fit.coefficients[k] - beta[k]).abs() <= 1.96 * fit.std_errors[k] {
                covered[k] += 1;
            }
        }
    }
    for (k, c) in covered.iter().enumerate() {
        assert!(*c as f64 >= 0.9 * reps as f64, "coefficient {k}: {c}/{reps}");
    }
}

#[test]
fn large_sample_fit_is_within_three_standard_errors() {
    let mut rng = RandomStream::new(9, 0).rng();
    let rows: Vec<Vec<f64>> = (0..10_000)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            vec![x, 1.0 + 3.0 * x + 2.0 * e]
        })
        .collect();
    let data = Dataset::from_rows(vec!["x".into(), "y".into()], &rows).unwrap();
    let fit = ols_columns(&data, "y", &["x"]).unwrap();
    assert!((fit.coefficients[1] - 3.0).abs() < 3.0 * fit.std_errors[1]);
    let g = fit_gaussian_conditional(&data, "y", &["x"]).unwrap();
    assert!((g.noise_sd - 2.0).abs() < 0.05);
}
