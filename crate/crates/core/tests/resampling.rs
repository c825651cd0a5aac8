use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use shifttest::resampling::{
    drpl_exact_distribution, drpl_via_norepl, drpl_via_repl, gibbs_refine, rejection_sample,
    sample_drpl, sample_norepl, sample_repl, ResamplePlan,
};
use shifttest::RandomStream;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const DRAWS: usize = 100_000;

fn configs() -> Vec<(Vec<f64>, usize)> {
    vec![
        (vec![1.0, 2.0, 3.0], 2),
        (vec![1.0, 1.0, 4.0, 0.5], 2),
        (vec![0.5, 1.0, 1.5, 2.0, 2.5], 3),
        (vec![3.0, 1.0, 1.0, 1.0, 2.0, 0.7], 3),
        (vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 3),
        (vec![5.0, 0.0, 1.0, 2.0, 1.0], 3),
    ]
}

/// Pearson chi-square p-value of observed sequence counts against `exact`.
fn chi_square_p(counts: &HashMap<Vec<usize>, usize>, exact: &BTreeMap<Vec<usize>, f64>) -> f64 {
    let total: usize = counts.values().sum();
    for key in counts.keys() {
        assert!(exact.get(key).is_some_and(|&p| p > 0.0), "impossible sequence {key:?}");
    }
    let support: Vec<_> = exact.iter().filter(|(_, &p)| p > 0.0).collect();
    let stat: f64 = support
        .iter()
        .map(|&(seq, &p)| {
            let expected = p * total as f64;
            let observed = *counts.get(seq).unwrap_or(&0) as f64;
            (observed - expected).powi(2) / expected
        })
        .sum();
    let df = (support.len() - 1) as f64;
    ChiSquared::new(df).unwrap().sf(stat)
}

fn tally(mut draw: impl FnMut() -> Option<Vec<usize>>) -> HashMap<Vec<usize>, usize> {
    let mut counts = HashMap::new();
    let mut kept = 0;
    while kept < DRAWS {
        if let Some(seq) = draw() {
            *counts.entry(seq).or_insert(0) += 1;
            kept += 1;
        }
    }
    counts
}

#[test]
fn both_exact_stages_follow_the_drpl_law() {
    for (case, (w, m)) in configs().into_iter().enumerate() {
        let exact = drpl_exact_distribution(&w, m).unwrap();
        let mut rng = RandomStream::new(100, case as u64).rng();
        let repl = tally(|| drpl_via_repl(&w, m, 1000, &mut rng).unwrap().0);
        let norepl = tally(|| drpl_via_norepl(&w, m, 1000, &mut rng).unwrap().0);
        let p1 = chi_square_p(&repl, &exact);
        let p2 = chi_square_p(&norepl, &exact);
        assert!(p1 > 0.001, "stage 1, case {case}: p = {p1}");
        assert!(p2 > 0.001, "stage 2, case {case}: p = {p2}");
    }
}

#[test]
fn distinct_repl_draws_follow_the_drpl_law() {
    for (case, (w, m)) in configs().into_iter().enumerate() {
        let exact = drpl_exact_distribution(&w, m).unwrap();
        let mut rng = RandomStream::new(101, case as u64).rng();
        let counts = tally(|| {
            let s = sample_repl(&w, m, &mut rng).unwrap();
            s.distinct.then_some(s.indices)
        });
        let p = chi_square_p(&counts, &exact);
        assert!(p > 0.001, "case {case}: p = {p}");
    }
}

#[test]
fn gibbs_stage_is_close_to_the_drpl_law() {
    let (w, m) = (vec![3.0, 1.0, 1.0, 1.0, 2.0, 0.7], 3);
    let exact = drpl_exact_distribution(&w, m).unwrap();
    let mut rng = RandomStream::new(102, 0).rng();
    let reps = 20_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for _ in 0..reps {
        let start = sample_norepl(&w, m, &mut rng).unwrap();
        let s = gibbs_refine(&start.indices, &w, 50, &mut rng).unwrap();
        *counts.entry(s.indices).or_insert(0) += 1;
    }
    let tv: f64 = exact
        .iter()
        .map(|(seq, p)| (*counts.get(seq).unwrap_or(&0) as f64 / reps as f64 - p).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.05, "total variation {tv}");
}

#[test]
fn rejection_keeps_iid_target_draws() {
    // observed law q on {0,..,4}; target p; exact ratio weights p/q
    let q = [0.4, 0.25, 0.15, 0.1, 0.1];
    let p = [0.1, 0.15, 0.2, 0.25, 0.3];
    let r: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a / b).collect();
    let bound = r.iter().cloned().fold(0.0, f64::max);
    let mut rng = RandomStream::new(103, 0).rng();
    let n = 400_000;
    let cum: Vec<f64> = q
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let rows: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rand::Rng::random(&mut rng);
            cum.iter().position(|&c| u < c).unwrap_or(4)
        })
        .collect();
    let weights: Vec<f64> = rows.iter().map(|&v| r[v]).collect();
    let kept = rejection_sample(&weights, bound, &mut rng).unwrap().indices;
    assert!(kept.len() >= 100_000, "only {} kept", kept.len());
    let mut freq = [0.0; 5];
    for &i in &kept {
        freq[rows[i]] += 1.0 / kept.len() as f64;
    }
    let tv: f64 = freq.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.01, "total variation {tv}");
}

#[test]
fn distinct_draws_become_typical_as_n_grows() {
    let mut fractions = Vec::new();
    for (k, &n) in [100usize, 1000, 10_000].iter().enumerate() {
        let mut rng = RandomStream::new(104, k as u64).rng();
        let w: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.5..2.0)).collect();
        let m = (n as f64).powf(0.4).floor() as usize;
        let hits = (0..1000)
            .filter(|_| drpl_via_repl(&w, m, 1, &mut rng).unwrap().0.is_some())
            .count();
        fractions.push(hits as f64 / 1000.0);
    }
    assert!(
        fractions.windows(2).all(|f| f[0] <= f[1]),
        "success fractions {fractions:?}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samplers_are_scale_invariant(
        w in prop::collection::vec(0.01f64..10.0, 3..40),
        exponent in -20i32..20,
        seed in any::<u64>(),
    ) {
        // powers of two keep every cumulative sum exactly proportional
        let c = 2f64.powi(exponent);
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let m = (w.len() / 3).max(1);
        let plan = ResamplePlan::default();
        let stream = RandomStream::new(seed, 0);
        let a = sample_drpl(&w, m, &plan, &mut stream.rng()).unwrap();
        let b = sample_drpl(&scaled, m, &plan, &mut stream.rng()).unwrap();
        prop_assert_eq!(a, b);
        let a = sample_norepl(&w, m, &mut stream.rng()).unwrap();
        let b = sample_norepl(&scaled, m, &mut stream.rng()).unwrap();
        prop_assert_eq!(a, b);
        let a = sample_repl(&w, m, &mut stream.rng()).unwrap();
        let b = sample_repl(&scaled, m, &mut stream.rng()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn drpl_output_is_always_distinct(
        w in prop::collection::vec(0.0f64..5.0, 2..30),
        seed in any::<u64>(),
    ) {
        let positive = w.iter().filter(|&&x| x > 0.0).count();
        prop_assume!(positive >= 2);
        let m = positive / 2 + 1;
        let plan = ResamplePlan { max_repl_attempts: 3, max_norepl_attempts: 3, ..Default::default() };
        let s = sample_drpl(&w, m, &plan, &mut RandomStream::new(seed, 0).rng()).unwrap();
        prop_assert!(s.distinct);
        prop_assert_eq!(s.indices.len(), m);
        prop_assert!(s.indices.iter().all(|&i| w[i] > 0.0));
    }
}
