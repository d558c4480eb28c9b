use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BowDocument, Language};
use crate::model::{encode, softmax, ModelState};
use crate::{Error, Result};

/// Posterior-mean document-topic proportions `softmax(μ)`, one row per
/// document.
pub fn infer_doc_topics(
    state: &ModelState,
    docs: &[BowDocument],
    lang: Language,
) -> Result<Array2<f64>> {
    let k = state.config.topics;
    let enc = &state.params.encoders[lang.slot()];
    let mut out = Array2::zeros((docs.len(), k));
    for (row, doc) in docs.iter().enumerate() {
        if doc.language != lang {
            return Err(Error::Contract(format!(
                "{} document passed for {lang} inference",
                doc.language
            )));
        }
        let x = Array1::from(doc.dense(&state.vocab));
        let (mu, _) = encode(x.view(), enc)?;
        out.row_mut(row).assign(&softmax(mu.view()));
    }
    Ok(out)
}

/// Fixed hyperparameters of the logistic-regression probe.
pub const CLASSIFIER_L2: f64 = 1e-4;
pub const CLASSIFIER_EPOCHS: usize = 200;
pub const CLASSIFIER_LR: f64 = 0.1;
const CLASSIFIER_BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierReport {
    pub accuracy: f64,
    /// Macro-averaged F1 over the classes present in train or test labels.
    pub macro_f1: f64,
}

/// Trains a multinomial logistic classifier on `train_x` by mini-batch
/// gradient descent and reports test accuracy.
///
/// Training and test features may come from different languages; that is
/// the cross-lingual transfer setting.
pub fn linear_classifier_eval(
    train_x: ArrayView2<f64>,
    train_y: &[usize],
    test_x: ArrayView2<f64>,
    test_y: &[usize],
    seed: u64,
) -> Result<ClassifierReport> {
    if train_x.nrows() != train_y.len() {
        return Err(Error::Dimension {
            expected: train_x.nrows(),
            actual: train_y.len(),
        });
    }
    if test_x.nrows() != test_y.len() {
        return Err(Error::Dimension {
            expected: test_x.nrows(),
            actual: test_y.len(),
        });
    }
    if train_x.ncols() != test_x.ncols() {
        return Err(Error::Dimension {
            expected: train_x.ncols(),
            actual: test_x.ncols(),
        });
    }
    let mut distinct: Vec<usize> = train_y.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Config(
            "classifier needs at least two classes in the training set".into(),
        ));
    }
    let classes = train_y.iter().chain(test_y).max().unwrap() + 1;
    let d = train_x.ncols();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array2::from_shape_fn((d, classes), |_| rng.random_range(-0.01..0.01));
    let mut b = Array1::<f64>::zeros(classes);
    let mut order: Vec<usize> = (0..train_y.len()).collect();
    for _ in 0..CLASSIFIER_EPOCHS {
        order.shuffle(&mut rng);
        for chunk in order.chunks(CLASSIFIER_BATCH) {
            let xb = train_x.select(Axis(0), chunk);
            let mut probs = xb.dot(&w) + &b;
            for mut row in probs.rows_mut() {
                let s = softmax(row.view());
                row.assign(&s);
            }
            for (r, &i) in chunk.iter().enumerate() {
                probs[[r, train_y[i]]] -= 1.0;
            }
            let n = chunk.len() as f64;
            let gw = xb.t().dot(&probs) / n + &w * CLASSIFIER_L2;
            let gb = probs.sum_axis(Axis(0)) / n;
            w.scaled_add(-CLASSIFIER_LR, &gw);
            b.scaled_add(-CLASSIFIER_LR, &gb);
        }
    }

    let scores = test_x.dot(&w) + &b;
    let predictions: Vec<usize> = scores
        .rows()
        .into_iter()
        .map(|row| {
            // first maximal class wins
            let mut best = 0;
            for c in 1..classes {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(report(&predictions, test_y, classes))
}

fn report(pred: &[usize], truth: &[usize], classes: usize) -> ClassifierReport {
    let n = truth.len();
    if n == 0 {
        return ClassifierReport {
            accuracy: 0.0,
            macro_f1: 0.0,
        };
    }
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    let mut f1_sum = 0.0;
    let mut present = 0;
    for c in 0..classes {
        let tp = pred
            .iter()
            .zip(truth)
            .filter(|&(&p, &t)| p == c && t == c)
            .count() as f64;
        let fp = pred
            .iter()
            .zip(truth)
            .filter(|&(&p, &t)| p == c && t != c)
            .count() as f64;
        let fneg = pred
            .iter()
            .zip(truth)
            .filter(|&(&p, &t)| p != c && t == c)
            .count() as f64;
        if tp + fp + fneg == 0.0 {
            continue;
        }
        present += 1;
        f1_sum += 2.0 * tp / (2.0 * tp + fp + fneg);
    }
    ClassifierReport {
        accuracy: correct as f64 / n as f64,
        macro_f1: if present > 0 {
            f1_sum / present as f64
        } else {
            0.0
        },
    }
}
