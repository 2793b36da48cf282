use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reliance::models::*;
use reliance::nncore::Matrix;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(1e-12..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn blobs(n: usize, d: usize, sep: f64, seed: u64) -> (Matrix<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = (i % 2) as u8;
        let centre = if c == 1 { sep } else { -sep };
        for _ in 0..d {
            data.push(centre + 0.5 * gaussian(&mut rng));
        }
        y.push(c);
    }
    (Matrix::from_vec(n, d, data).unwrap(), y)
}

fn accuracy(pred: impl Iterator<Item = f64>, y: &[u8]) -> f64 {
    let hits = pred.zip(y).filter(|(p, &t)| ((*p >= 0.5) as u8) == t).count();
    hits as f64 / y.len() as f64
}

/// Recomputes `y_i f(x_i)` by brute force from the dual variables.
fn brute_margins(fit: &SvmFit<f64>, x: &Matrix<f64>, y: &[u8]) -> Vec<f64> {
    let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    (0..x.rows())
        .map(|i| {
            let mut f = fit.model.bias;
            for j in 0..x.rows() {
                let d2: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                f += fit.alpha[j] * ys[j] * (-fit.model.gamma * d2).exp();
            }
            ys[i] * f
        })
        .collect()
}

#[test]
fn svm_separable_blobs_satisfy_kkt() {
    let (x, y) = blobs(200, 2, 2.0, 11);
    let cfg = SvmConfig::default();
    let fit = train_svm_smo(&x, &y, &cfg).unwrap();
    for &a in &fit.alpha {
        assert!((0.0..=cfg.c).contains(&a));
    }
    let margins = brute_margins(&fit, &x, &y);
    assert!(margins.iter().all(|&m| m > 0.0), "training accuracy below 100%");
    let tol = 1e-3;
    let mut worst: f64 = 0.0;
    for (i, &m) in margins.iter().enumerate() {
        let a = fit.alpha[i];
        let v = if a == 0.0 {
            (1.0 - m).max(0.0)
        } else if a == cfg.c {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    assert!(worst < tol, "worst KKT violation {worst}");
    assert!(kkt_max_violation(&fit, &x, &y, cfg.c).unwrap() < tol);
    assert!(fit.model.support.rows() < 200);
    // probabilities follow the margin
    let p: Vec<f64> = (0..200).map(|i| fit.model.predict_proba(x.row(i)).unwrap()).collect();
    assert_eq!(accuracy(p.into_iter(), &y), 1.0);
}

#[test]
fn svm_small_cache_matches_large_cache() {
    let (x, y) = blobs(120, 3, 0.6, 5);
    let big = train_svm_smo(&x, &y, &SvmConfig::default()).unwrap();
    let small = train_svm_smo(&x, &y, &SvmConfig { cache_bytes: 2 * 120 * 8, ..Default::default() }).unwrap();
    assert!(small.cache_evictions > 0);
    assert_eq!(big.alpha, small.alpha);
    assert_eq!(big.model.bias, small.model.bias);
}

#[test]
fn forest_fits_training_data_and_is_deterministic() {
    let (x, y) = blobs(150, 6, 0.3, 3);
    let cfg = ForestConfig::default();
    let f1 = train_forest(&x, &y, &cfg, 42, 0).unwrap();
    let f2 = train_forest(&x, &y, &cfg, 42, 0).unwrap();
    let f3 = train_forest(&x, &y, &cfg, 42, 2).unwrap();
    assert_eq!(f1.trees.len(), 100);
    assert_eq!(f1, f2);
    assert_eq!(f1, f3);
    // a single unbootstrapped tree is pure on its own training data
    let single = train_forest(&x, &y, &ForestConfig { n_trees: 1, bootstrap: false, ..cfg.clone() }, 1, 0).unwrap();
    for i in 0..x.rows() {
        assert_eq!(single.trees[0].predict(x.row(i)), y[i]);
    }
    let p: Vec<f64> = (0..x.rows()).map(|i| f1.predict_proba(x.row(i)).unwrap()).collect();
    assert_eq!(accuracy(p.iter().copied(), &y), 1.0);
    for v in p {
        assert!((0.0..=1.0).contains(&v));
        assert!((v * 100.0 - (v * 100.0).round()).abs() < 1e-9);
    }
}

#[test]
fn l1_path_is_monotone_in_sparsity() {
    let (mut x, y) = blobs(120, 10, 0.4, 9);
    // only the first three dimensions carry signal
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..x.rows() {
        for j in 3..10 {
            x.set(i, j, gaussian(&mut rng));
        }
    }
    let mut last = usize::MAX;
    for lambda in [0.0, 1e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0] {
        let m = train_logreg(&x, &y, &LogRegConfig { l1_lambda: lambda, ..Default::default() }).unwrap();
        let nz = m.nonzero_weights();
        assert!(nz <= last, "lambda {lambda}: {nz} > {last}");
        last = nz;
    }
    assert_eq!(last, 0);
}

#[test]
fn logreg_learns_blobs() {
    let (x, y) = blobs(200, 5, 0.5, 2);
    let m = train_logreg(&x, &y, &LogRegConfig::default()).unwrap();
    let p = (0..200).map(|i| m.predict_proba(x.row(i)).unwrap());
    assert!(accuracy(p, &y) > 0.95);
}

#[test]
fn mnb_on_scaled_embeddings() {
    // the classes differ in which half of the dimensions is large
    let (mut x, y) = blobs(200, 6, 0.0, 4);
    for i in 0..200 {
        for j in 0..6 {
            let shift = if (j < 3) == (y[i] == 1) { 1.0 } else { -1.0 };
            x.set(i, j, x.get(i, j) + shift);
        }
    }
    let m = MnbModel::fit(&x, &y, &MnbConfig::default()).unwrap();
    for s in m.nb.theta_row_sums() {
        assert!((s - 1.0).abs() < 1e-12);
    }
    let p = (0..200).map(|i| m.predict_proba(x.row(i)).unwrap());
    assert!(accuracy(p, &y) > 0.8);
}

/// Label = whether token 0 ("x") occurs in the sequence.
fn toy_sequences(n: usize, seed: u64) -> (Vec<Vec<usize>>, Vec<u8>, Matrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = 12;
    let dim = 6;
    let wv = Matrix::from_vec(vocab, dim, (0..vocab * dim).map(|_| gaussian(&mut rng)).collect()).unwrap();
    let mut docs = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let len = rng.gen_range(4..10);
        let mut d: Vec<usize> = (0..len).map(|_| rng.gen_range(1..vocab)).collect();
        let label = (i % 2) as u8;
        if label == 1 {
            let at = rng.gen_range(0..len);
            d[at] = 0;
        }
        docs.push(d);
        y.push(label);
    }
    (docs, y, wv)
}

#[test]
fn bilstm_learns_token_presence() {
    let (docs, y, wv) = toy_sequences(500, 8);
    let refs: Vec<&[usize]> = docs.iter().map(|d| d.as_slice()).collect();
    let cfg = BiLstmConfig { layers: vec![16, 16, 16], dense: 16, learning_rate: 3e-3, ..Default::default() };
    let fit = train_bilstm(&refs, &wv, &y, &cfg, 1).unwrap();
    let best = fit.validation_accuracy[fit.best_epoch - 1];
    assert!(best >= 0.95, "validation accuracy {best} ({:?})", fit.validation_accuracy);
    assert!(fit.epochs_run <= fit.best_epoch + cfg.patience);
    let a = fit.model.predict_proba(&docs[3], &wv).unwrap();
    let b = fit.model.predict_proba(&docs[3], &wv).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn fit_base_all_kinds() {
    let (x, y) = blobs(60, 4, 0.8, 6);
    let (docs, _, wv) = toy_sequences(60, 2);
    let wv = Matrix::from_vec(wv.rows(), 4, wv.as_slice()[..wv.rows() * 4].to_vec()).unwrap();
    let set = TrainingSet::new(&x, &docs, &wv, &y).unwrap();
    let mut cfg = BaseModelsConfig::default();
    cfg.bilstm = BiLstmConfig { layers: vec![4], dense: 4, max_epochs: 2, ..Default::default() };
    let rows: Vec<usize> = (0..60).collect();
    for kind in BaseModelKind::ALL {
        let m = fit_base(kind, &cfg, &set, &rows, 3, 0).unwrap();
        assert_eq!(m.kind(), kind);
        for i in 0..60 {
            let p = score(kind, Some(&m), &set.features(i)).unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
        let bad = Features { vector: &[0.0; 3], tokens: &[], word_vectors: &Matrix::zeros(1, 3) };
        assert!(score(kind, Some(&m), &bad).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn platt_is_monotone(dec in prop::collection::vec(-5.0f64..5.0, 4..40), f1 in -10.0f64..10.0, f2 in -10.0f64..10.0) {
        let y: Vec<u8> = dec.iter().enumerate().map(|(i, v)| ((*v > 0.0) ^ (i % 7 == 0)) as u8).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let p = platt_calibrate(&dec, &y).unwrap();
        let (a, b) = (p.probability(f1), p.probability(f2));
        prop_assert!((0.0..=1.0).contains(&a));
        if p.a != 0.0 && (f1 - f2).abs() > 1e-6 {
            prop_assert!(a != b);
            prop_assert_eq!(a < b, (f1 < f2) == (p.a < 0.0));
        }
    }

    #[test]
    fn mnb_theta_rows_sum_to_one(vals in prop::collection::vec(0.0f64..10.0, 12), alpha in 0.01f64..5.0) {
        let x = Matrix::from_vec(4, 3, vals).unwrap();
        let nb = train_mnb(&x, &[0, 1, 0, 1], alpha).unwrap();
        for s in nb.theta_row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        // relabeling mirrors the posterior
        let swapped = train_mnb(&x, &[1, 0, 1, 0], alpha).unwrap();
        let q = [1.0, 2.0, 0.5];
        let p = nb.posterior(&q).unwrap();
        let r = swapped.posterior(&q).unwrap();
        prop_assert!((p[0] - r[1]).abs() < 1e-12);
    }

    #[test]
    fn forest_scores_are_vote_fractions(seed in 0u64..1000) {
        let (x, y) = blobs(30, 3, 0.2, seed);
        let f = train_forest(&x, &y, &ForestConfig { n_trees: 10, ..Default::default() }, seed, 0).unwrap();
        for i in 0..30 {
            let p = f.predict_proba(x.row(i)).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((p * 10.0 - (p * 10.0).round()).abs() < 1e-9);
        }
    }
}
