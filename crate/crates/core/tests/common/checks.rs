//! Check suites shared by the focused tests and the acceptance runner.
//! Each function panics with a descriptive message on the first mismatch.

use approx::assert_abs_diff_eq;
use ndarray::{Array1, Array2};
use rand::Rng;

use super::*;
use xling_topics::corpus::{BowDocument, Language};
use xling_topics::eval::cnpmi;
use xling_topics::model::{
    direct_alignment_loss, doc_topic, kl_term, loss_and_grad, reconstruction_dist, tami_loss,
    tm_loss, total_loss, Alignment, BatchNoise, ModelConfig, ModelState, Params, PriorParams,
};

pub fn tami_cases(cases: usize) {
    let mut rng = rng(11);
    for case in 0..cases {
        let v1 = rng.random_range(2..15);
        let v2 = rng.random_range(2..15);
        let k = rng.random_range(2..5);
        let vocab = vocab(v1, v2);
        let phi = random_phi(&mut rng, v1 + v2, k);
        let density = rng.random_range(0.05..0.6);
        let table = random_links(&mut rng, &vocab, density);
        let tau = [0.1, 0.5, 1.0][case % 3];
        let got = tami_loss(phi.view(), &table, &vocab, tau).unwrap();
        let want = oracle_tami(&phi, &table, &vocab, tau);
        assert_abs_diff_eq!(got, want, epsilon = 1e-6);
    }
}

pub fn direct_cases(cases: usize) {
    let mut rng = rng(12);
    for _ in 0..cases {
        let (v1, v2, k) = (
            rng.random_range(1..15),
            rng.random_range(1..15),
            rng.random_range(1..5),
        );
        let vocab = vocab(v1, v2);
        let phi = random_phi(&mut rng, v1 + v2, k);
        let table = random_links(&mut rng, &vocab, 0.3);
        let got = direct_alignment_loss(phi.view(), &table).unwrap();
        assert_abs_diff_eq!(got, oracle_direct(&phi, &table, &vocab), epsilon = 1e-6);
    }
}

pub fn tm_kl_cases(cases: usize) {
    let mut rng = rng(13);
    for case in 0..cases as u64 {
        let (v1, v2) = (rng.random_range(1..15), rng.random_range(1..15));
        let k = rng.random_range(2..5);
        let cfg = ModelConfig {
            topics: k,
            hidden_dim: rng.random_range(1..6),
            prior_alpha: rng.random_range(0.2..3.0),
            seed: case,
            ..Default::default()
        };
        let state = ModelState::new(vocab(v1, v2), cfg).unwrap();
        for lang in Language::BOTH {
            let doc = random_doc(&mut rng, &state.vocab, lang);
            let eps: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = tm_loss(&doc, &state, lang, Array1::from(eps.clone()).view()).unwrap();
            assert_abs_diff_eq!(got, oracle_tm(&doc, &state, lang, &eps), epsilon = 1e-6);

            let mu: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lv: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
            let got = kl_term(
                Array1::from(mu.clone()).view(),
                Array1::from(lv.clone()).view(),
                &state.priors[lang.slot()],
            )
            .unwrap();
            assert_abs_diff_eq!(
                got,
                oracle_kl(&mu, &lv, &state.priors[lang.slot()]),
                epsilon = 1e-6
            );
        }
    }
}

pub fn cnpmi_cases(cases: usize) {
    let mut rng = rng(14);
    for _ in 0..cases {
        let (v1, v2) = (rng.random_range(3..15), rng.random_range(3..15));
        let vocab = vocab(v1, v2);
        let k = rng.random_range(1..5);
        let t = rng.random_range(1..4);
        let ts1 = random_topics(&mut rng, &vocab, Language::L1, k, t);
        let ts2 = random_topics(&mut rng, &vocab, Language::L2, k, t);
        let n_ref = rng.random_range(1..=50);
        let reference = random_reference(&mut rng, &vocab, n_ref);
        let got = cnpmi(&ts1, &ts2, &reference).unwrap();
        assert_abs_diff_eq!(got, oracle_cnpmi(&ts1, &ts2, &reference), epsilon = 1e-10);
    }
}

pub fn simplex_cases(cases: usize) {
    let mut rng = rng(16);
    for _ in 0..cases {
        let k = rng.random_range(1..8);
        let v = rng.random_range(1..20);
        let r = Array1::from_shape_fn(k, |_| rng.random_range(-50.0..50.0));
        let theta = doc_topic(r.view());
        assert!((theta.sum() - 1.0).abs() < 1e-6);
        let beta = ndarray::Array2::from_shape_fn((v, k), |_| rng.random_range(-20.0..20.0));
        let p = reconstruction_dist(beta.view(), theta.view()).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-6);

        let prior = PriorParams::dirichlet_laplace(k.max(2), rng.random_range(0.1..5.0));
        let kk = prior.mean.len();
        let mu = Array1::from_shape_fn(kk, |_| rng.random_range(-5.0..5.0));
        let lv = Array1::from_shape_fn(kk, |_| rng.random_range(-5.0..5.0));
        assert!(kl_term(mu.view(), lv.view(), &prior).unwrap() >= -1e-9);
        let at_prior = kl_term(prior.mean.view(), prior.var.mapv(f64::ln).view(), &prior).unwrap();
        assert!(at_prior.abs() < 1e-12);
    }
}

pub const GRAD_H: f64 = 1e-4;
pub const GRAD_TOL: f64 = 1e-4;

fn setup(
    alignment: Alignment,
    dropout: bool,
    seed: u64,
) -> (ModelState, [Vec<BowDocument>; 2], [BatchNoise; 2]) {
    let mut rng = rng(seed);
    let cfg = ModelConfig {
        topics: 3,
        hidden_dim: 8,
        lambda: 0.7,
        tau: 0.5,
        dropout: if dropout { 0.25 } else { 0.0 },
        alignment,
        seed,
        ..Default::default()
    };
    let mut state = ModelState::new(vocab(10, 10), cfg).unwrap();
    // move Φ off its initialization so every gradient entry is exercised
    state
        .params
        .phi
        .mapv_inplace(|x| x + rng.random_range(-0.5..0.5));
    let docs = [0, 1].map(|slot| {
        (0..3)
            .map(|_| random_doc(&mut rng, &state.vocab, Language::BOTH[slot]))
            .collect::<Vec<_>>()
    });
    let noise = [0, 1].map(|_| BatchNoise {
        eps: Array2::from_shape_fn((3, 3), |_| rng.random_range(-1.5..1.5)),
        dropout_mask: dropout.then(|| {
            Array2::from_shape_fn((3, 8), |_| {
                if rng.random::<f64>() < 0.25 {
                    0.0
                } else {
                    1.0 / 0.75
                }
            })
        }),
    });
    (state, docs, noise)
}

/// Returns the largest relative error seen.
pub fn gradient_case(alignment: Alignment, dropout: bool, seed: u64) -> f64 {
    let (mut state, docs, noise) = setup(alignment, dropout, seed);
    let mut rng = rng(seed + 100);
    let table = random_links(&mut rng, &state.vocab, 0.3);
    let batches = [docs[0].as_slice(), docs[1].as_slice()];
    let (_, grad) = loss_and_grad(batches, &state, Some(&table), &noise).unwrap();

    let names = Params::tensor_names();
    let analytic: Vec<Vec<f64>> = grad.tensors().iter().map(|t| t.to_vec()).collect();
    let mut worst = 0.0f64;
    for (ti, name) in names.iter().enumerate() {
        for j in 0..analytic[ti].len() {
            let orig = state.params.tensors()[ti][j];
            state.params.tensors_mut()[ti][j] = orig + GRAD_H;
            let up = total_loss(batches, &state, Some(&table), &noise).unwrap();
            state.params.tensors_mut()[ti][j] = orig - GRAD_H;
            let down = total_loss(batches, &state, Some(&table), &noise).unwrap();
            state.params.tensors_mut()[ti][j] = orig;
            let numeric = (up - down) / (2.0 * GRAD_H);
            let a = analytic[ti][j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            assert!(
                rel < GRAD_TOL,
                "{name}[{j}]: analytic {a:e} numeric {numeric:e} rel {rel:e}"
            );
            worst = worst.max(rel);
        }
    }
    assert!(worst.is_finite());
    worst
}
