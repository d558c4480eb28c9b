//! Document reconstruction loss, the combined training objective and its
//! hand-derived gradient.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use super::align::{direct_pass, tami_pass};
use super::ops::{kl_term, reconstruction_dist, reparameterize, softmax, softmax_rows};
use super::{Alignment, EncoderParams, ModelState, Params};
use crate::corpus::{BowDocument, Language};
use crate::linking::LinkTable;
use crate::{Error, Result};

const LOG_EPS: f64 = 1e-10;

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Encoder forward pass for one dense count vector, without dropout.
///
/// Returns `(μ, logσ²)`.
pub fn encode(x: ArrayView1<f64>, params: &EncoderParams) -> Result<(Array1<f64>, Array1<f64>)> {
    if x.len() != params.input_dim() {
        return Err(Error::Dimension {
            expected: params.input_dim(),
            actual: x.len(),
        });
    }
    let h1 = (x.dot(&params.w1) + &params.b1).mapv(softplus);
    let h2 = (h1.dot(&params.w2) + &params.b2).mapv(softplus);
    let mu = h2.dot(&params.w_mu) + &params.b_mu;
    let logvar = h2.dot(&params.w_logvar) + &params.b_logvar;
    Ok((mu, logvar))
}

/// Per-document loss `−xᵀ log softmax(βθ) + KL(q ‖ prior)` with fixed noise
/// `eps` and no dropout.
pub fn tm_loss(
    doc: &BowDocument,
    state: &ModelState,
    lang: Language,
    eps: ArrayView1<f64>,
) -> Result<f64> {
    if doc.language != lang {
        return Err(Error::Contract(format!(
            "document is {}, loss requested for {lang}",
            doc.language
        )));
    }
    if doc.entries.is_empty() {
        return Err(Error::Contract("empty document".into()));
    }
    let x = Array1::from(doc.dense(&state.vocab));
    let (mu, logvar) = encode(x.view(), &state.params.encoders[lang.slot()])?;
    let r = reparameterize(mu.view(), logvar.view(), eps)?;
    let theta = softmax(r.view());
    let p = reconstruction_dist(state.beta(lang), theta.view())?;
    let rec: f64 = x
        .iter()
        .zip(p.iter())
        .filter(|(&c, _)| c > 0.0)
        .map(|(&c, &pv)| -c * (pv + LOG_EPS).ln())
        .sum();
    Ok(rec + kl_term(mu.view(), logvar.view(), &state.priors[lang.slot()])?)
}

/// Per-batch stochastic inputs: reparameterization noise and an optional
/// inverted-dropout mask on the encoder's last hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNoise {
    /// `B × K` standard-normal draws.
    pub eps: Array2<f64>,
    /// `B × H`, entries `0` or `1/(1−p)`.
    pub dropout_mask: Option<Array2<f64>>,
}

impl BatchNoise {
    /// All-zero noise (posterior mean) with no dropout.
    pub fn zeros(batch: usize, topics: usize) -> Self {
        BatchNoise {
            eps: Array2::zeros((batch, topics)),
            dropout_mask: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// `λ · align + tm`.
    pub total: f64,
    /// Unweighted alignment loss (contrastive or direct, per the config).
    /// Zero when no link table is supplied.
    pub align: f64,
    /// Mean per-document loss over both batches.
    pub tm: f64,
    pub documents: usize,
}

/// Value of the training objective: `λ · align + mean document loss` over
/// both language batches.
pub fn total_loss(
    batches: [&[BowDocument]; 2],
    state: &ModelState,
    table: Option<&LinkTable>,
    noise: &[BatchNoise; 2],
) -> Result<f64> {
    Ok(evaluate(batches, state, table, noise, None)?.total)
}

/// Objective value and its gradient with respect to every trainable
/// parameter.
pub fn loss_and_grad(
    batches: [&[BowDocument]; 2],
    state: &ModelState,
    table: Option<&LinkTable>,
    noise: &[BatchNoise; 2],
) -> Result<(LossBreakdown, Params)> {
    let mut grad = state.params.zeros_like();
    let loss = evaluate(batches, state, table, noise, Some(&mut grad))?;
    Ok((loss, grad))
}

fn evaluate(
    batches: [&[BowDocument]; 2],
    state: &ModelState,
    table: Option<&LinkTable>,
    noise: &[BatchNoise; 2],
    mut grad: Option<&mut Params>,
) -> Result<LossBreakdown> {
    let documents = batches[0].len() + batches[1].len();
    if documents == 0 {
        return Err(Error::Contract(
            "objective needs at least one document".into(),
        ));
    }
    let cfg = &state.config;
    let scale = 1.0 / documents as f64;

    let mut doc_sum = 0.0;
    for lang in Language::BOTH {
        let docs = batches[lang.slot()];
        if docs.is_empty() {
            continue;
        }
        doc_sum += language_pass(
            state,
            lang,
            docs,
            &noise[lang.slot()],
            grad.as_deref_mut().map(|g| (g, scale)),
        )?;
    }
    let tm = doc_sum * scale;

    let align = match table {
        Some(t) => {
            let g = if cfg.lambda > 0.0 {
                grad.map(|g| (&mut g.phi, cfg.lambda))
            } else {
                None
            };
            match cfg.alignment {
                Alignment::Tami => {
                    tami_pass(state.params.phi.view(), t, &state.vocab, cfg.tau, g, None)?
                }
                Alignment::Direct => direct_pass(state.params.phi.view(), t, g)?,
            }
        }
        None if cfg.lambda > 0.0 => {
            return Err(Error::Config(
                "a link table is required when lambda > 0".into(),
            ))
        }
        None => 0.0,
    };

    Ok(LossBreakdown {
        total: cfg.lambda * align + tm,
        align,
        tm,
        documents,
    })
}

/// Sum of per-document losses for one language batch; accumulates
/// `scale · ∂/∂params` into `grad`.
fn language_pass(
    state: &ModelState,
    lang: Language,
    docs: &[BowDocument],
    noise: &BatchNoise,
    grad: Option<(&mut Params, f64)>,
) -> Result<f64> {
    let vocab = &state.vocab;
    let enc = &state.params.encoders[lang.slot()];
    let prior = &state.priors[lang.slot()];
    let v = vocab.size(lang);
    let b = docs.len();
    let k = state.config.topics;
    let h = enc.hidden_dim();
    if noise.eps.dim() != (b, k) {
        return Err(Error::Dimension {
            expected: b * k,
            actual: noise.eps.len(),
        });
    }
    if let Some(m) = &noise.dropout_mask {
        if m.dim() != (b, h) {
            return Err(Error::Dimension {
                expected: b * h,
                actual: m.len(),
            });
        }
    }

    let mut x = Array2::<f64>::zeros((b, v));
    let offset = vocab.offset(lang);
    for (row, doc) in docs.iter().enumerate() {
        if doc.language != lang {
            return Err(Error::Contract(format!(
                "{} document in {lang} batch",
                doc.language
            )));
        }
        if doc.entries.is_empty() {
            return Err(Error::Contract("empty document".into()));
        }
        for &(g, c) in &doc.entries {
            x[[row, g - offset]] = c as f64;
        }
    }

    // forward
    let a1 = x.dot(&enc.w1) + &enc.b1;
    let h1 = a1.mapv(softplus);
    let a2 = h1.dot(&enc.w2) + &enc.b2;
    let h2 = a2.mapv(softplus);
    let d = match &noise.dropout_mask {
        Some(m) => &h2 * m,
        None => h2,
    };
    let mu = d.dot(&enc.w_mu) + &enc.b_mu;
    let logvar = d.dot(&enc.w_logvar) + &enc.b_logvar;
    let std = logvar.mapv(|l| (0.5 * l).exp());
    let r = &mu + &(&std * &noise.eps);
    let theta = softmax_rows(&r);
    let beta = state.beta(lang);
    let logits = theta.dot(&beta.t());
    let p = softmax_rows(&logits);

    let mut loss = 0.0;
    for (xv, pv) in x.iter().zip(p.iter()) {
        if *xv > 0.0 {
            loss -= xv * (pv + LOG_EPS).ln();
        }
    }
    let var = logvar.mapv(f64::exp);
    for row in 0..b {
        for c in 0..k {
            let dm = prior.mean[c] - mu[[row, c]];
            loss += 0.5
                * (var[[row, c]] / prior.var[c] + dm * dm / prior.var[c] - 1.0 + prior.var[c].ln()
                    - logvar[[row, c]]);
        }
    }

    let Some((grad, scale)) = grad else {
        return Ok(loss);
    };

    // backward: ∂/∂p of −x log(p + ε), then through the vocabulary softmax
    let mut dlogits = Array2::<f64>::zeros((b, v));
    for row in 0..b {
        let mut dot = 0.0;
        for col in 0..v {
            let g = -scale * x[[row, col]] / (p[[row, col]] + LOG_EPS);
            dlogits[[row, col]] = g;
            dot += p[[row, col]] * g;
        }
        for col in 0..v {
            dlogits[[row, col]] = p[[row, col]] * (dlogits[[row, col]] - dot);
        }
    }
    let r_phi = vocab.range(lang);
    let dbeta = dlogits.t().dot(&theta);
    {
        let mut slot = grad.phi.slice_mut(s![r_phi.start..r_phi.end, ..]);
        slot += &dbeta;
    }
    let dtheta = dlogits.dot(&beta);
    let mut dr = Array2::<f64>::zeros((b, k));
    for row in 0..b {
        let dot: f64 = (0..k).map(|c| theta[[row, c]] * dtheta[[row, c]]).sum();
        for c in 0..k {
            dr[[row, c]] = theta[[row, c]] * (dtheta[[row, c]] - dot);
        }
    }
    let mut dmu = dr.clone();
    let mut dlogvar = &dr * &noise.eps * &std * 0.5;
    for row in 0..b {
        for c in 0..k {
            dmu[[row, c]] += scale * (mu[[row, c]] - prior.mean[c]) / prior.var[c];
            dlogvar[[row, c]] += scale * 0.5 * (var[[row, c]] / prior.var[c] - 1.0);
        }
    }

    let g = &mut grad.encoders[lang.slot()];
    g.w_mu += &d.t().dot(&dmu);
    g.b_mu += &dmu.sum_axis(Axis(0));
    g.w_logvar += &d.t().dot(&dlogvar);
    g.b_logvar += &dlogvar.sum_axis(Axis(0));
    let mut dd = dmu.dot(&enc.w_mu.t()) + dlogvar.dot(&enc.w_logvar.t());
    if let Some(m) = &noise.dropout_mask {
        dd *= m;
    }
    let da2 = dd * a2.mapv(sigmoid);
    g.w2 += &h1.t().dot(&da2);
    g.b2 += &da2.sum_axis(Axis(0));
    let da1 = da2.dot(&enc.w2.t()) * a1.mapv(sigmoid);
    g.w1 += &x.t().dot(&da1);
    g.b1 += &da1.sum_axis(Axis(0));
    Ok(loss)
}
