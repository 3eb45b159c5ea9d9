use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::qp::{self, Block};
use super::solver::DenseQ;
use super::*;
use crate::features::{fit_vocabulary, vectorize, FeatureModelSpec, TermSet};
use crate::par::Exec;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize, mean: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| mean + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect()
        })
        .collect()
}

fn kmat(p: &Points, k: KernelSpec, y: &[f64]) -> Vec<Vec<f64>> {
    (0..p.len())
        .map(|i| (0..p.len()).map(|j| y[i] * y[j] * p.kernel(&k, i, j)).collect())
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-4 * a.abs().max(b.abs()) + 1e-9
}

fn tight() -> SolverOptions {
    SolverOptions {
        eps: 1e-7,
        ..Default::default()
    }
}

#[test]
fn ocsvm_matches_reference_qp() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..8 {
        let n = rng.gen_range(4..=12);
        let p = Points::from_dense(&gaussian(&mut rng, n, 3, 0.0));
        let k = KernelSpec::rbf(0.5);
        let nu = [0.2, 0.5, 0.8][trial % 3];
        let y = vec![1.0; n];
        let mut q = DenseQ { rows: kmat(&p, k, &y) };
        let smo = solve_ocsvm(&mut q, nu, &tight()).unwrap();
        let blocks = [Block {
            indices: (0..n).collect(),
            sum: 1.0,
            upper: 1.0 / (nu * n as f64),
        }];
        let (_, obj) = qp::solve(&q.rows, &blocks, 20_000);
        assert!(close(smo.objective, obj), "trial {trial}: smo {} qp {}", smo.objective, obj);
        assert!((smo.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn nusvc_matches_reference_qp() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..8 {
        let n = rng.gen_range(6..=12);
        let half = n / 2;
        let mut rows = gaussian(&mut rng, half, 2, 1.0);
        rows.extend(gaussian(&mut rng, n - half, 2, -1.0));
        let p = Points::from_dense(&rows);
        let y: Vec<f64> = (0..n).map(|i| if i < half { 1.0 } else { -1.0 }).collect();
        let k = KernelSpec::rbf(0.25);
        let nu = max_feasible_nu(half, n - half) * [0.3, 0.6, 0.9][trial % 3];
        let mut q = DenseQ { rows: kmat(&p, k, &y) };
        let smo = solve_nusvc(&mut q, &y, nu, &tight()).unwrap();
        let s = nu * n as f64 / 2.0;
        let blocks = [
            Block {
                indices: (0..half).collect(),
                sum: s,
                upper: 1.0,
            },
            Block {
                indices: (half..n).collect(),
                sum: s,
                upper: 1.0,
            },
        ];
        let (_, obj) = qp::solve(&q.rows, &blocks, 20_000);
        assert!(close(smo.objective, obj), "trial {trial}: smo {} qp {}", smo.objective, obj);
    }
}

#[test]
fn nu_bounds_outliers_and_support_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = Points::from_dense(&gaussian(&mut rng, 200, 10, 0.0));
    for nu in [0.05, 0.1, 0.3, 0.5] {
        let m = train_ocsvm_points(&p, KernelSpec::rbf(0.05), nu, &tight(), String::new()).unwrap();
        let outliers = (0..p.len()).filter(|&i| m.decision_sparse(p.row(i)) < 0.0).count() as f64 / 200.0;
        let svs = m.expansion.support_count() as f64 / 200.0;
        assert!(outliers <= nu + 0.02, "nu {nu}: outliers {outliers}");
        assert!(svs >= nu - 0.02, "nu {nu}: svs {svs}");
    }
}

#[test]
fn cached_and_dense_backends_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = Points::from_dense(&gaussian(&mut rng, 60, 4, 0.0));
    let k = KernelSpec::rbf(0.2);
    let y = vec![1.0; 60];
    let a = solve_ocsvm(&mut CachedQ::new(&p, k, &y, 1 << 10), 0.2, &Default::default()).unwrap();
    let g = Gram::compute(&p, &k, Exec::Sequential);
    let idx: Vec<usize> = (0..60).collect();
    let b = solve_ocsvm(&mut GramQ::new(&g, &idx, &y), 0.2, &Default::default()).unwrap();
    assert_eq!(a.alpha, b.alpha);
    assert_eq!(a.rho, b.rho);
}

#[test]
fn identical_vectors_are_flagged_degenerate() {
    let p = Points::from_dense(&vec![vec![1.0, 2.0]; 5]);
    let m = train_ocsvm_points(&p, KernelSpec::rbf(0.5), 0.5, &Default::default(), String::new()).unwrap();
    assert!(m.degenerate);
    assert!(matches!(m.ensure_nondegenerate(), Err(LearnError::DegenerateTraining)));
    assert_eq!(m.decision_sparse(p.row(0)), 0.0);
}

#[test]
fn infeasible_nu_is_rejected() {
    let p = Points::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
    let err = train_ssvm_points(&p, &[true, false, false, false], KernelSpec::rbf(1.0), 0.9, &Default::default(), String::new())
        .unwrap_err();
    assert!(matches!(err, LearnError::InfeasibleNu { .. }));
}

#[test]
fn ssvm_separates_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rows = gaussian(&mut rng, 40, 3, 2.0);
    rows.extend(gaussian(&mut rng, 40, 3, -2.0));
    let p = Points::from_dense(&rows);
    let labels: Vec<bool> = (0..80).map(|i| i < 40).collect();
    let m = train_ssvm_points(&p, &labels, KernelSpec::rbf(0.1), 0.2, &Default::default(), String::new()).unwrap();
    let correct = (0..80).filter(|&i| (m.decision_sparse(p.row(i)) > 0.0) == labels[i]).count();
    assert!(correct >= 76, "{correct}/80");
}

fn pu_corpus(seed: u64, c_true: f64) -> (Points, Points) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = gaussian(&mut rng, 200, 2, 3.0);
    let neg = gaussian(&mut rng, 200, 2, -3.0);
    let (mut lab, mut unl) = (Vec::new(), Vec::new());
    for x in pos {
        if rng.gen_bool(c_true) {
            lab.push(x);
        } else {
            unl.push(x);
        }
    }
    unl.extend(neg);
    (Points::from_dense(&lab), Points::from_dense(&unl))
}

#[test]
fn pu_recovers_label_frequency() {
    for c_true in [0.2, 0.4, 0.8] {
        let seeds = 20;
        let mut est = 0.0;
        for seed in 0..seeds {
            let (lab, unl) = pu_corpus(seed, c_true);
            let pu = PuOptions {
                seed,
                ..Default::default()
            };
            let m = train_pu_points(&lab, &unl, KernelSpec::rbf(0.1), 1.0, &Default::default(), &pu, String::new()).unwrap();
            assert!(!m.collapsed);
            est += m.c;
        }
        est /= seeds as f64;
        eprintln!("c* = {c_true}: mean c = {est}");
        assert!((est - c_true).abs() < 0.05, "c* = {c_true}: mean c = {est}");
    }
}

#[test]
fn pu_with_unit_c_is_plain_calibrated_g() {
    let (lab, unl) = pu_corpus(1, 0.5);
    let mut m = train_pu_points(&lab, &unl, KernelSpec::rbf(0.1), 1.0, &Default::default(), &Default::default(), String::new())
        .unwrap();
    m.c = 1.0;
    for i in 0..unl.len() {
        assert_eq!(m.prob_sparse(unl.row(i)), m.g_prob_sparse(unl.row(i)));
    }
}

#[test]
fn grid_prefers_smallest_parameters_on_ties() {
    let p = Points::from_dense(&[vec![1.0], vec![2.0]]);
    let spec = GridSpec {
        gammas: vec![0.5, 0.25, 1.0],
        nus: vec![0.5, 0.125],
        folds: 2,
        seed: 0,
        objective: Objective::Aer,
    };
    let r = grid_search(&spec, &p, Exec::Parallel, |_, _| Some(0.3)).unwrap();
    assert_eq!((r.gamma, r.nu), (0.25, 0.125));
    assert_eq!(r.points.len(), 6);
    let r = grid_search(&spec, &p, Exec::Sequential, |g, nu| Some(if nu == 0.5 { 0.1 } else { g.get(0, 1) })).unwrap();
    assert_eq!((r.gamma, r.nu), (0.25, 0.5));
    assert!(matches!(grid_search(&spec, &p, Exec::Sequential, |_, _| None), Err(LearnError::GridExhausted)));
}

#[test]
fn stratified_folds_balance_classes() {
    let labels: Vec<bool> = (0..23).map(|i| i % 3 == 0).collect();
    let f = stratified_folds(&labels, 5, &mut crate::rng::SplitMix64::new(1));
    for k in 0..5 {
        let pos = (0..23).filter(|&i| f[i] == k && labels[i]).count();
        assert!((1..=2).contains(&pos));
    }
}

fn small_vocab() -> (crate::features::TermVocabulary, Vec<crate::features::FeatureVector>) {
    let docs: Vec<TermSet> = ["a b c", "a b d", "b c e", "a e f", "c d f"]
        .iter()
        .map(|s| s.split(' ').map(String::from).collect())
        .collect();
    let v = fit_vocabulary(&docs, &FeatureModelSpec::syntactic(), Exec::Sequential).unwrap();
    let xs = docs.iter().enumerate().map(|(i, d)| vectorize(&i.to_string(), d, &v)).collect();
    (v, xs)
}

#[test]
fn model_text_round_trip_is_exact() {
    let (vocab, xs) = small_vocab();
    let oc = train_ocsvm(&xs, KernelSpec::rbf(0.3), 0.4, &Default::default()).unwrap();
    let ss = train_ssvm(&xs, &[true, true, false, false, true], KernelSpec::rbf(0.3), 0.5, &Default::default()).unwrap();
    for model in [Model::Ocsvm(oc), Model::Ssvm(ss)] {
        let t = TrainedModel {
            model,
            vocab: vocab.clone(),
        };
        let back = TrainedModel::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        for x in &xs {
            assert_eq!(back.classify(x).unwrap(), t.classify(x).unwrap());
        }
    }
}

#[test]
fn model_file_errors() {
    let (vocab, xs) = small_vocab();
    let oc = train_ocsvm(&xs, KernelSpec::rbf(0.3), 0.4, &Default::default()).unwrap();
    let text = TrainedModel {
        model: Model::Ocsvm(oc),
        vocab,
    }
    .to_text();
    let truncated = &text[..text.len() - 4];
    assert!(matches!(TrainedModel::from_text(truncated), Err(LearnError::CorruptModel(_))));
    let future = text.replacen("model v1", "model v2", 1);
    assert!(matches!(
        TrainedModel::from_text(&future),
        Err(LearnError::VersionMismatch { found: 2, .. })
    ));
    let mut other = xs[0].clone();
    other.vocab = "deadbeef".into();
    let t = TrainedModel::from_text(&text).unwrap();
    assert!(matches!(t.classify(&other), Err(LearnError::VocabMismatch { .. })));
}

#[test]
fn ocsvm_duals_are_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = Points::from_dense(&gaussian(&mut rng, 80, 2, 0.0));
    for nu in [0.1, 0.3, 0.5] {
        let y = vec![1.0; 80];
        let d = solve_ocsvm(&mut CachedQ::new(&p, KernelSpec::rbf(0.5), &y, 1 << 20), nu, &Default::default()).unwrap();
        assert!((d.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let ub = 1.0 / (nu * 80.0);
        assert!(d.alpha.iter().all(|&a| (-1e-6..=ub + 1e-6).contains(&a)));
    }
}

#[test]
fn ocsvm_rejects_far_points_and_needs_two_vectors() {
    let p = Points::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
    let m = train_ocsvm_points(&p, KernelSpec::rbf(1.0), 0.5, &Default::default(), String::new()).unwrap();
    assert!(m.decision_sparse(&[(0, 100.0)]) < 0.0);
    let one = Points::from_dense(&[vec![1.0]]);
    assert!(matches!(
        train_ocsvm_points(&one, KernelSpec::rbf(1.0), 0.5, &Default::default(), String::new()),
        Err(LearnError::TooFewPoints { need: 2, got: 1 })
    ));
}

#[test]
fn ssvm_small_problems() {
    let opts = Default::default();
    let two = Points::from_dense(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
    let m = train_ssvm_points(&two, &[true, false], KernelSpec::Linear, 1.0, &opts, String::new()).unwrap();
    assert!(m.decision_sparse(two.row(0)) > 0.0 && m.decision_sparse(two.row(1)) < 0.0);
    // Symmetric data: the bias vanishes.
    assert!(m.expansion.rho.abs() <= 1e-6);

    let xor = Points::from_dense(&[vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]]);
    let labels = [true, true, false, false];
    let m = train_ssvm_points(&xor, &labels, KernelSpec::rbf(1.0), 0.5, &opts, String::new()).unwrap();
    for (i, &label) in labels.iter().enumerate() {
        assert_eq!(m.decision_sparse(xor.row(i)) > 0.0, label, "point {i}");
    }
}

#[test]
fn pu_agrees_with_fully_supervised_svm() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let pos = gaussian(&mut rng, 200, 2, 2.5);
    let neg = gaussian(&mut rng, 200, 2, -2.5);
    let (mut lab, mut unl) = (Vec::new(), Vec::new());
    for x in &pos[..150] {
        if rng.gen_bool(0.4) {
            lab.push(x.clone());
        } else {
            unl.push(x.clone());
        }
    }
    unl.extend(neg[..150].iter().cloned());
    let pu = train_pu_points(
        &Points::from_dense(&lab),
        &Points::from_dense(&unl),
        KernelSpec::rbf(0.1),
        1.0,
        &Default::default(),
        &Default::default(),
        String::new(),
    )
    .unwrap();
    let mut train = pos[..150].to_vec();
    train.extend(neg[..150].iter().cloned());
    let labels: Vec<bool> = (0..300).map(|i| i < 150).collect();
    let ss = train_ssvm_points(&Points::from_dense(&train), &labels, KernelSpec::rbf(0.1), 0.2, &Default::default(), String::new())
        .unwrap();
    let mut held = pos[150..].to_vec();
    held.extend(neg[150..].iter().cloned());
    let held = Points::from_dense(&held);
    let agree = (0..held.len())
        .filter(|&i| (pu.prob_sparse(held.row(i)) >= pu.threshold) == (ss.decision_sparse(held.row(i)) > 0.0))
        .count();
    assert!(agree as f64 >= 0.95 * held.len() as f64, "{agree}/{}", held.len());
}

#[test]
fn pu_threshold_sweep_is_monotone() {
    let (lab, unl) = pu_corpus(2, 0.4);
    let m = train_pu_points(&lab, &unl, KernelSpec::rbf(0.1), 1.0, &Default::default(), &Default::default(), String::new())
        .unwrap();
    let probs: Vec<f64> = (0..unl.len()).map(|i| m.prob_sparse(unl.row(i))).collect();
    assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
    let counts: Vec<usize> = (0..=10)
        .map(|t| probs.iter().filter(|&&p| p >= t as f64 / 10.0).count())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn pu_validation_fraction_is_checked() {
    let (lab, unl) = pu_corpus(0, 0.4);
    for holdout in [0.0, 0.6] {
        let pu = PuOptions {
            holdout,
            ..Default::default()
        };
        assert!(train_pu_points(&lab, &unl, KernelSpec::rbf(0.1), 1.0, &Default::default(), &pu, String::new()).is_err());
    }
    let tiny = Points::from_dense(&[vec![1.0]]);
    assert!(matches!(
        train_pu_points(&tiny, &unl, KernelSpec::rbf(0.1), 1.0, &Default::default(), &Default::default(), String::new()),
        Err(LearnError::EmptyValidation)
    ));
}

#[test]
fn rbf_checks_vocabulary() {
    let (_, xs) = small_vocab();
    assert_eq!(rbf(&xs[0], &xs[0], 0.3).unwrap(), 1.0);
    let mut other = xs[1].clone();
    other.vocab = "00".into();
    assert!(matches!(rbf(&xs[0], &other, 0.3), Err(LearnError::VocabMismatch { .. })));
}

#[test]
fn grid_search_is_independent_of_execution_strategy() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut rows = gaussian(&mut rng, 30, 3, 1.5);
    rows.extend(gaussian(&mut rng, 30, 3, -1.5));
    let p = Points::from_dense(&rows);
    let items: Vec<usize> = (0..60).collect();
    let labels: Vec<bool> = (0..60).map(|i| i < 30).collect();
    let spec = GridSpec {
        gammas: vec![0.0625, 0.25, 1.0],
        nus: vec![0.125, 0.25, 0.5],
        folds: 5,
        seed: 3,
        objective: Objective::Aer,
    };
    let opts = SolverOptions::default();
    let f = |g: &Gram, nu: f64| grid::ssvm_objective(g, &items, &labels, nu, &spec, &opts);
    let a = grid_search(&spec, &p, Exec::Sequential, f).unwrap();
    let b = grid_search(&spec, &p, Exec::Parallel, f).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.points.len(), 9);
    // Brute-force argmin with the documented tie-break.
    let best = a
        .points
        .iter()
        .filter_map(|p| p.objective.map(|o| (o, p.gamma, p.nu)))
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.total_cmp(&y.2)))
        .unwrap();
    assert_eq!((a.gamma, a.nu), (best.1, best.2));
}
