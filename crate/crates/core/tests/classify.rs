mod common;

use classinet::classify::{
    cross_validate, damping_sweep, evaluate, expansion_ratio, fold_assignment, out_degree, paired_t_test,
    train_downstream, DownstreamModel, DownstreamOptions,
};
use classinet::expand::{render_expansion, ExpansionCandidate, Method};
use classinet::graph::{ClassiNet, NetMeta};
use classinet::{rng, Error, SparseVector};
use proptest::prelude::*;
use rand::Rng;

fn separable(n: usize, seed: u64) -> (Vec<SparseVector>, Vec<i64>) {
    let mut rng = rng::stream(seed, "separable", &[]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let y = (i % 2) as i64;
        let mut x = common::random_instance(20, 3, &mut rng).without(0).without(1);
        x = x.with_added(y as usize, 1.0);
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

#[test]
fn separable_data_is_classified_perfectly() {
    let (xs, ys) = separable(200, 1);
    let r = cross_validate(&xs, &ys, 5, &DownstreamOptions::default(), 3, 2).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.folds.len(), 5);
    assert!(r.per_class.iter().all(|c| c.accuracy == 1.0));
}

#[test]
fn one_class_is_rejected() {
    let xs = vec![SparseVector::zeros(3); 4];
    assert!(matches!(train_downstream(&xs, &[1, 1, 1, 1], &DownstreamOptions::default(), 0), Err(Error::DegenerateLabels)));
}

#[test]
fn binary_models_use_the_sign_of_one_score() {
    let m = DownstreamModel {
        classes: vec![-1, 1],
        weights: vec![SparseVector::from_dense(&[1.0, -1.0])],
        biases: vec![0.0],
        lambda: 1.0,
    };
    assert_eq!(m.predict(&SparseVector::from_dense(&[2.0, 1.0])), 1);
    assert_eq!(m.predict(&SparseVector::from_dense(&[1.0, 2.0])), -1);
    assert_eq!(m.predict(&SparseVector::from_dense(&[1.0, 1.0])), -1);
}

#[test]
fn one_vs_rest_takes_the_argmax_and_ignores_a_common_shift() {
    let mut rng = rng::stream(4, "ovr", &[]);
    let weights: Vec<SparseVector> = (0..4).map(|_| SparseVector::from_dense(&common::gaussian_vec(6, &mut rng))).collect();
    let biases: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = DownstreamModel { classes: vec![2, 5, 7, 9], weights, biases, lambda: 1.0 };
    let shifted = DownstreamModel { biases: m.biases.iter().map(|b| b + 3.5).collect(), ..m.clone() };
    for _ in 0..200 {
        let x = SparseVector::from_dense(&common::gaussian_vec(6, &mut rng));
        let s = m.scores(&x);
        let best = (0..4).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        assert_eq!(m.predict(&x), m.classes[best]);
        assert_eq!(shifted.predict(&x), m.predict(&x));
    }
}

#[test]
fn three_class_problem_is_learnt() {
    let mut rng = rng::stream(8, "three", &[]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..300 {
        let y = (i % 3) as i64;
        xs.push(common::random_instance(30, 4, &mut rng).widened(33).with_added(30 + y as usize, 1.0));
        ys.push(y * 10);
    }
    let r = cross_validate(&xs, &ys, 5, &DownstreamOptions::default(), 1, 1).unwrap();
    assert!(r.accuracy >= 0.95, "{}", r.accuracy);
    assert_eq!(r.per_class.iter().map(|c| c.label).collect::<Vec<_>>(), vec![0, 10, 20]);
}

#[test]
fn random_labels_give_chance_accuracy() {
    let mut rng = rng::stream(21, "noise", &[]);
    let xs: Vec<SparseVector> = (0..4000).map(|_| common::random_instance(50, 5, &mut rng)).collect();
    let ys: Vec<i64> = (0..4000).map(|_| rng.random_range(0..2)).collect();
    let r = cross_validate(&xs, &ys, 10, &DownstreamOptions::default(), 2, 2).unwrap();
    assert!((r.accuracy - 0.5).abs() <= 0.02, "{}", r.accuracy);
}

#[test]
fn cross_validation_needs_two_folds() {
    let (xs, ys) = separable(20, 2);
    assert!(cross_validate(&xs, &ys, 1, &DownstreamOptions::default(), 0, 1).is_err());
    assert!(cross_validate(&xs, &ys, 0, &DownstreamOptions::default(), 0, 1).is_err());
}

#[test]
fn folds_are_balanced_and_stratified() {
    let labels: Vec<i64> = (0..103).map(|i| if i % 4 == 0 { 1 } else { 0 }).collect();
    let f = fold_assignment(&labels, 10, 9);
    for class in [0, 1] {
        let mut counts = [0usize; 10];
        for (l, &k) in labels.iter().zip(&f) {
            if *l == class {
                counts[k] += 1;
            }
        }
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    }
    let mut sizes = [0usize; 10];
    f.iter().for_each(|&k| sizes[k] += 1);
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    assert_eq!(f, fold_assignment(&labels, 10, 9));
}

#[test]
fn evaluation_reports_the_majority_baseline() {
    let m = DownstreamModel { classes: vec![0, 1], weights: vec![SparseVector::zeros(2)], biases: vec![-1.0], lambda: 1.0 };
    let xs = vec![SparseVector::zeros(2); 10];
    let ys = [0, 0, 0, 1, 1, 0, 0, 1, 0, 0];
    let r = evaluate(&m, &xs, &ys);
    assert_eq!((r.majority_label, r.majority_baseline, r.accuracy), (0, 0.7, 0.7));
}

#[test]
fn out_degree_examples() {
    let empty = ClassiNet::new(common::vertices(4), vec![], NetMeta::default()).unwrap();
    assert_eq!(out_degree(&empty), 0.0);
    let g = ClassiNet::new(common::vertices(4), vec![(0, 1, 0.5), (0, 2, 0.25), (3, 0, 0.25)], NetMeta::default()).unwrap();
    assert_eq!(out_degree(&g), 0.25);
}

#[test]
fn expansion_ratio_examples() {
    let x = SparseVector::from_pairs(10, vec![(0, 1.0), (1, 1.0)]).unwrap();
    let cand = |f| ExpansionCandidate { vertex: f, feature: f, score: 1.0, method: Method::AllNeighbours };
    let none = render_expansion(&x, &[], Method::None);
    let three = render_expansion(&x, &[cand(5), cand(6), cand(7)], Method::AllNeighbours);
    let empty = render_expansion(&SparseVector::zeros(10), &[cand(5)], Method::AllNeighbours);
    let s = expansion_ratio(&[none, three.clone(), three, empty], 0.5);
    assert_eq!(s.ratios, vec![1.0, 2.5, 2.5]);
    assert_eq!(s.skipped, 1);
    assert_eq!(s.mean, 2.0);
    assert_eq!(s.histogram, vec![(1.0, 1), (2.5, 2)]);
    assert_eq!(s.mode, 2.75);
}

#[test]
fn sweep_sorts_dedups_and_breaks_ties_low() {
    let mut calls = Vec::new();
    let t = damping_sweep(&[0.9, 0.1, 0.5, 0.1, 0.7], |g| {
        calls.push(g);
        Ok(if g == 0.5 || g == 0.7 { 0.8 } else { 0.6 })
    })
    .unwrap();
    assert_eq!(calls, vec![0.1, 0.5, 0.7, 0.9]);
    assert_eq!((t.argmax, t.best_accuracy), (0.5, 0.8));
    assert!(t.is_unimodal(0.0));
    assert!(t.to_tsv().starts_with("gamma\taccuracy\n0.1\t0.6\n"));

    let bumpy = damping_sweep(&[0.1, 0.2, 0.3, 0.4], |g| Ok([0.7, 0.6, 0.8, 0.5][(g * 10.0).round() as usize - 1])).unwrap();
    assert!(!bumpy.is_unimodal(0.05));
    assert!(bumpy.is_unimodal(0.1));
    assert!(damping_sweep(&[], |_| Ok(0.0)).is_err());
}

#[test]
fn paired_t_test_matches_the_closed_form_for_four_degrees_of_freedom() {
    let a = [3.0, 4.0, 5.0, 6.0, 7.0];
    let b = [2.0, 2.0, 2.0, 2.0, 2.0];
    let r = paired_t_test(&a, &b).unwrap();
    let t = 3.0 / (2.5f64.sqrt() / 5f64.sqrt());
    assert!((r.t - t).abs() < 1e-12);
    assert_eq!(r.df, 4);
    // Student t with ν = 4: P(|T| > t) = 1 - x (1 + (1 - x²) / 2), x = t / sqrt(t² + 4)
    let x = t / (t * t + 4.0).sqrt();
    let p = 1.0 - x * (1.0 + (1.0 - x * x) / 2.0);
    assert!((r.p_value - p).abs() < 1e-9, "{} vs {p}", r.p_value);
    assert!(r.significant(0.05));

    let same = paired_t_test(&a, &a).unwrap();
    assert_eq!((same.t, same.p_value), (0.0, 1.0));
    assert!(paired_t_test(&a, &b[..3]).is_err());
    assert!(paired_t_test(&[1.0], &[0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_instance_lands_in_exactly_one_fold(n in 10usize..200, k in 2usize..10, seed in 0u64..1000) {
        let labels: Vec<i64> = (0..n).map(|i| (i * 7 % 3) as i64).collect();
        let f = fold_assignment(&labels, k, seed);
        prop_assert_eq!(f.len(), n);
        prop_assert!(f.iter().all(|&x| x < k));
    }
}
