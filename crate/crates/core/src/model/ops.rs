use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use super::PriorParams;
use crate::corpus::{Language, Vocabulary};
use crate::{Error, Result};

/// Numerically stable softmax.
pub fn softmax(x: ArrayView1<f64>) -> Array1<f64> {
    let m = x.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut e = x.mapv(|v| (v - m).exp());
    let z = e.sum();
    e /= z;
    e
}

pub(crate) fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row /= z;
    }
    out
}

/// `r = μ + exp(logσ²/2) ⊙ ε`.
pub fn reparameterize(
    mu: ArrayView1<f64>,
    logvar: ArrayView1<f64>,
    eps: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let k = mu.len();
    for n in [logvar.len(), eps.len()] {
        if n != k {
            return Err(Error::Dimension {
                expected: k,
                actual: n,
            });
        }
    }
    Ok(&mu + &(logvar.mapv(|v| (0.5 * v).exp()) * eps))
}

/// Document-topic proportions `θ = softmax(r)`.
pub fn doc_topic(r: ArrayView1<f64>) -> Array1<f64> {
    softmax(r)
}

/// `β` for `lang`: the language's row block of `Φ`, as a view.
pub fn topic_word_matrix<'a>(
    phi: &'a Array2<f64>,
    vocab: &Vocabulary,
    lang: Language,
) -> ArrayView2<'a, f64> {
    let r = vocab.range(lang);
    phi.slice(s![r.start..r.end, ..])
}

/// Word distribution `softmax(β θ)` over the language vocabulary.
pub fn reconstruction_dist(beta: ArrayView2<f64>, theta: ArrayView1<f64>) -> Result<Array1<f64>> {
    if beta.ncols() != theta.len() {
        return Err(Error::Dimension {
            expected: beta.ncols(),
            actual: theta.len(),
        });
    }
    Ok(softmax(beta.dot(&theta).view()))
}

/// Closed-form `KL(N(μ, diag σ²) ‖ N(μ0, diag σ0²))`.
pub fn kl_term(mu: ArrayView1<f64>, logvar: ArrayView1<f64>, prior: &PriorParams) -> Result<f64> {
    let k = prior.mean.len();
    for n in [mu.len(), logvar.len(), prior.var.len()] {
        if n != k {
            return Err(Error::Dimension {
                expected: k,
                actual: n,
            });
        }
    }
    if prior.var.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::Config("prior variance must be positive".into()));
    }
    let mut kl = 0.0;
    for i in 0..k {
        let (v0, m0) = (prior.var[i], prior.mean[i]);
        let d = m0 - mu[i];
        kl += logvar[i].exp() / v0 + d * d / v0 - 1.0 + v0.ln() - logvar[i];
    }
    Ok(0.5 * kl)
}

/// Scaled cosine critic `cos(a, b) / τ`.
pub fn critic(a: ArrayView1<f64>, b: ArrayView1<f64>, tau: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config("tau must be positive".into()));
    }
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Numerical("critic of a zero vector".into()));
    }
    Ok(a.dot(&b) / (na * nb) / tau)
}
