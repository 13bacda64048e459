mod common;

use std::collections::HashMap;

use common::{matrix, normals, rng};
use rand::Rng;
use rrbart::bart::{
    draw_latent, fit_bart_probit, fixed_residual_chain, permutation_select, predict_bart, AcceptanceStats, BartParams,
    BartPosterior, VipSlice,
};
use rrbart::stats::normal_cdf;
use rrbart::trees::{NodeKind, Tree};

fn quick(n_draws: usize) -> BartParams {
    BartParams {
        n_draws,
        burn_in: 100,
        ..BartParams::default()
    }
}

#[test]
fn sampler_matches_enumerated_posterior_over_depth_one_trees() {
    let x1: Vec<f64> = (1..=8).map(f64::from).collect();
    let x2 = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
    let r = vec![-1.2, -0.8, -1.0, 0.3, 0.9, 1.5, 1.1, 0.7];
    let params = BartParams {
        n_trees: 1,
        max_depth: Some(1),
        ..BartParams::default()
    };
    let tau2 = params.leaf_sd().powi(2);
    let lml = |rows: &[usize]| {
        let n = rows.len() as f64;
        let s: f64 = rows.iter().map(|&i| r[i]).sum();
        let a = 1.0 + n * tau2;
        -0.5 * a.ln() + tau2 * s * s / (2.0 * a)
    };
    // Exact posterior: root-only tree, or one split on (variable, cut)
    // with the rule prior uniform over variables then cuts.
    let all: Vec<usize> = (0..8).collect();
    let mut exact: Vec<(String, f64)> = vec![("root".into(), (1.0 - 0.95f64).ln() + lml(&all))];
    let cuts: [Vec<f64>; 2] = [(1..=7).map(f64::from).collect(), vec![0.0]];
    let cols = [&x1, &x2];
    for (v, cs) in cuts.iter().enumerate() {
        for &c in cs {
            let left: Vec<usize> = all.iter().copied().filter(|&i| cols[v][i] <= c).collect();
            let right: Vec<usize> = all.iter().copied().filter(|&i| cols[v][i] > c).collect();
            let lp = 0.95f64.ln() - 2f64.ln() - (cs.len() as f64).ln() + lml(&left) + lml(&right);
            exact.push((format!("{v}:{c}"), lp));
        }
    }
    let mx = exact.iter().map(|e| e.1).fold(f64::MIN, f64::max);
    let z: f64 = exact.iter().map(|e| (e.1 - mx).exp()).sum();
    let exact: HashMap<String, f64> = exact.into_iter().map(|(k, lp)| (k, (lp - mx).exp() / z)).collect();

    let trees = fixed_residual_chain(&[&x1, &x2], &r, &params, 50_000, 17).unwrap();
    let mut freq: HashMap<String, f64> = HashMap::new();
    for t in &trees {
        let key = match &t.nodes()[0].kind {
            NodeKind::Leaf { .. } => "root".to_string(),
            NodeKind::Split { rule, .. } => format!("{}:{}", rule.variable, rule.threshold),
        };
        *freq.entry(key).or_default() += 1.0 / trees.len() as f64;
    }
    let tv: f64 = exact
        .iter()
        .map(|(k, p)| (p - freq.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0;
    assert!(freq.keys().all(|k| exact.contains_key(k)));
    assert!(tv <= 0.05, "total variation {tv}");
}

#[test]
fn uncapped_chain_matches_the_truncated_prior_posterior() {
    // Three rows, one variable with a single admissible cut. Trees with an
    // empty leaf carry no prior mass, so the support is the root and the
    // one split whose children can never split again; their prior factor
    // is still (1 - p_split(1))^2.
    let x = vec![0.0, 0.0, 1.0];
    let r = vec![-1.0, -0.5, 2.0];
    let params = BartParams {
        n_trees: 1,
        ..BartParams::default()
    };
    let trees = fixed_residual_chain(&[&x], &r, &params, 40_000, 3).unwrap();
    let tau2 = params.leaf_sd().powi(2);
    let lml = |n: f64, s: f64| {
        let a = 1.0 + n * tau2;
        -0.5 * a.ln() + tau2 * s * s / (2.0 * a)
    };
    let ps1 = 0.95 / 4.0;
    let root = (0.05f64).ln() + lml(3.0, 0.5);
    let split = (0.95f64).ln() + 2.0 * (1.0f64 - ps1).ln() + lml(2.0, -1.5) + lml(1.0, 2.0);
    let p_split = 1.0 / (1.0 + (root - split).exp());
    assert!(trees.iter().all(|t| t.nodes().len() <= 3));
    let got = trees.iter().filter(|t| t.nodes().len() == 3).count() as f64 / trees.len() as f64;
    assert!((got - p_split).abs() < 0.02, "got {got}, exact {p_split}");
}

#[test]
fn latent_draws_have_the_probit_moments() {
    let mut r = rng(5);
    for &f in &[-1.0, 0.0, 0.7] {
        let mut sum = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let y = r.random::<f64>() < normal_cdf(f);
            let z = draw_latent(f, y, &mut r);
            assert!(if y { z > 0.0 } else { z < 0.0 });
            sum += z;
        }
        assert!((sum / n as f64 - f).abs() < 0.04, "f = {f}");
    }
}

#[test]
fn vip_slices_are_simplices() {
    let mut r = rng(6);
    let x: Vec<Vec<f64>> = (0..5).map(|_| normals(200, &mut r)).collect();
    let y: Vec<f64> = (0..200).map(|i| f64::from(x[0][i] + x[1][i] > 0.0)).collect();
    let dm = matrix(x, y);
    let post = fit_bart_probit(&dm, 5, &quick(1000), 1).unwrap();
    assert_eq!(post.vip.len(), 1000);
    for s in &post.vip {
        assert_eq!(s.values.len(), 5);
        assert!(s.values.iter().all(|&v| v >= 0.0));
        if s.n_splits > 0 {
            assert!((s.values.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
    let m = post.mean_vip();
    assert!(m[0] > m[3] && m[1] > m[4]);
}

#[test]
fn hand_counted_vip_slice() {
    let s = VipSlice::from_counts(&[3, 1]);
    assert_eq!(s.values, vec![0.75, 0.25]);
    let z = VipSlice::from_counts(&[0, 0, 0, 0]);
    assert!(z.is_fallback());
    assert_eq!(z.values, vec![0.25; 4]);
}

#[test]
fn constant_outcome_gives_high_probabilities() {
    let mut r = rng(7);
    let dm = matrix(vec![normals(100, &mut r), normals(100, &mut r)], vec![1.0; 100]);
    let post = fit_bart_probit(&dm, 2, &quick(200), 2).unwrap();
    assert!(post.train_mean_prob.iter().all(|&p| p >= 0.9));
}

#[test]
fn single_predictor_vip_is_one() {
    let mut r = rng(8);
    let x = normals(200, &mut r);
    let y: Vec<f64> = x.iter().map(|&v| f64::from(v > 0.0)).collect();
    let dm = matrix(vec![x], y);
    let post = fit_bart_probit(&dm, 1, &quick(200), 3).unwrap();
    for s in post.vip.iter().filter(|s| s.n_splits > 0) {
        assert_eq!(s.values, vec![1.0]);
    }
}

#[test]
fn zero_ensemble_predicts_one_half_and_prediction_is_monotone() {
    let mut r = rng(9);
    let dm = matrix(vec![normals(10, &mut r)], vec![0.0; 10]);
    let mut post = BartPosterior {
        predictor_names: vec!["x1".into()],
        offset: 0.0,
        draws: vec![vec![Tree::leaf(0.0, 10); 3]; 4],
        vip: vec![VipSlice::from_counts(&[0]); 4],
        acceptance: AcceptanceStats::default(),
        train_mean_prob: vec![],
        params: BartParams::default(),
        seed: 0,
    };
    let pred = predict_bart(&post, &dm, &[0, 1]).unwrap();
    assert_eq!(pred.mean, vec![0.5, 0.5]);
    post.offset = 0.3;
    let higher = predict_bart(&post, &dm, &[0]).unwrap();
    assert!(higher.mean[0] > 0.5);
}

#[test]
fn fits_are_deterministic_and_validate_inputs() {
    let mut r = rng(10);
    let x = normals(80, &mut r);
    let y: Vec<f64> = x.iter().map(|&v| f64::from(v > 0.2)).collect();
    let dm = matrix(vec![x, normals(80, &mut r)], y);
    let a = fit_bart_probit(&dm, 2, &quick(50), 4).unwrap();
    let b = fit_bart_probit(&dm, 2, &quick(50), 4).unwrap();
    assert_eq!(a.vip, b.vip);
    assert_eq!(a.train_mean_prob, b.train_mean_prob);
    // non-binary outcome
    assert!(fit_bart_probit(&dm, 0, &quick(50), 4).is_err());
    let bad = BartParams {
        n_trees: 0,
        ..quick(50)
    };
    assert!(fit_bart_probit(&dm, 2, &bad, 4).is_err());
}

#[test]
fn prediction_band_brackets_the_mean() {
    let mut r = rng(11);
    let x = normals(300, &mut r);
    let y: Vec<f64> = x
        .iter()
        .map(|&v| f64::from(r.random::<f64>() < normal_cdf(1.5 * v)))
        .collect();
    let dm = matrix(vec![x], y);
    let post = fit_bart_probit(&dm, 1, &quick(300), 5).unwrap();
    let rows: Vec<usize> = (0..300).collect();
    let pred = predict_bart(&post, &dm, &rows).unwrap();
    for i in 0..300 {
        assert!(pred.lower[i] <= pred.mean[i] && pred.mean[i] <= pred.upper[i]);
        assert!(pred.mean[i] > 0.0 && pred.mean[i] < 1.0);
        assert!((pred.mean[i] - post.train_mean_prob[i]).abs() < 1e-9);
    }
    let labels: Vec<bool> = dm.column(1).iter().map(|&v| v == 1.0).collect();
    assert!(rrbart::evaluation::auc(&pred.mean, &labels).unwrap() > 0.8);
}

#[test]
fn permutation_select_needs_twenty_permutations() {
    let mut r = rng(12);
    let dm = matrix(
        vec![normals(50, &mut r)],
        (0..50).map(|i| f64::from(i % 2 == 0)).collect(),
    );
    assert!(permutation_select(&dm, 1, &quick(20), 10, 0.05, 0).is_err());
}

#[test]
fn permutation_select_keeps_a_separating_predictor() {
    let mut r = rng(13);
    let x: Vec<Vec<f64>> = (0..5).map(|_| normals(300, &mut r)).collect();
    let y: Vec<f64> = x[0].iter().map(|&v| f64::from(v > 0.0)).collect();
    let dm = matrix(x, y);
    let sel = permutation_select(&dm, 5, &quick(200), 20, 0.05, 3).unwrap();
    assert!(sel.selected.contains(&0));
    assert_eq!(sel.null.len(), 20);
}
