//! Alignment regularizers on the rows of `Φ`.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::corpus::Vocabulary;
use crate::linking::LinkTable;
use crate::{Error, Result};

/// One positive pair's contribution to the contrastive loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub source: usize,
    pub target: usize,
    /// `−log softmax` of the positive within its contrast set.
    pub term: f64,
    pub contrast_size: usize,
}

fn check_rows(phi: ArrayView2<f64>, table: &LinkTable, vocab: &Vocabulary) -> Result<()> {
    if phi.nrows() != vocab.total() || table.num_words() != vocab.total() {
        return Err(Error::Dimension {
            expected: vocab.total(),
            actual: phi.nrows(),
        });
    }
    if table.n_cvl() == 0 {
        return Err(Error::Config(
            "alignment loss needs at least one linked pair".into(),
        ));
    }
    Ok(())
}

fn unit_rows(phi: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    let norms = phi.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    let mut unit = phi.to_owned();
    for (mut row, &n) in unit.rows_mut().into_iter().zip(norms.iter()) {
        if n > 0.0 {
            row /= n;
        }
    }
    (unit, norms)
}

/// Shared forward/backward pass of the contrastive loss.
///
/// When `grad` is given, `scale · ∂L/∂Φ` is accumulated into it.
pub(crate) fn tami_pass(
    phi: ArrayView2<f64>,
    table: &LinkTable,
    vocab: &Vocabulary,
    tau: f64,
    mut grad: Option<(&mut Array2<f64>, f64)>,
    mut terms: Option<&mut Vec<PairTerm>>,
) -> Result<f64> {
    check_rows(phi, table, vocab)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config("tau must be positive".into()));
    }
    let (unit, norms) = unit_rows(phi);
    let n_cvl = table.n_cvl() as f64;
    let k = phi.ncols();
    let mut d_unit = grad.as_ref().map(|_| Array2::<f64>::zeros(phi.dim()));
    let mut in_cvl = vec![false; vocab.total()];
    let mut loss = 0.0;

    for i in 0..vocab.total() {
        let links = table.links(i);
        if links.is_empty() {
            continue;
        }
        if norms[i] == 0.0 {
            return Err(Error::Numerical(format!(
                "topic representation {i} is zero"
            )));
        }
        let other = vocab.range(vocab.language_of(links[0].0));
        let ui = unit.row(i);
        // critic values against every word of the target language
        let mut sim = Vec::with_capacity(other.len());
        for j in other.clone() {
            if norms[j] == 0.0 {
                return Err(Error::Numerical(format!(
                    "topic representation {j} is zero"
                )));
            }
            sim.push(ui.dot(&unit.row(j)) / tau);
        }
        for &(j, _) in links {
            in_cvl[j] = true;
        }

        let mut base_max = f64::NEG_INFINITY;
        for (o, j) in other.clone().enumerate() {
            if !in_cvl[j] {
                base_max = base_max.max(sim[o]);
            }
        }
        let base_sum: f64 = if base_max.is_finite() {
            other
                .clone()
                .enumerate()
                .filter(|&(_, j)| !in_cvl[j])
                .map(|(o, _)| (sim[o] - base_max).exp())
                .sum()
        } else {
            0.0
        };

        // Σ_j exp(base_max − m_j) / Z_j, the common factor on negatives.
        let mut neg_coef = 0.0;
        let mut d_sim = vec![0.0; sim.len()];
        for &(j, _) in links {
            let o = j - other.start;
            let s = sim[o];
            let m = base_max.max(s);
            let shift = if base_max.is_finite() {
                (base_max - m).exp()
            } else {
                0.0
            };
            let z = base_sum * shift + (s - m).exp();
            let term = -s + m + z.ln();
            loss += term;
            if let Some(t) = terms.as_deref_mut() {
                t.push(PairTerm {
                    source: i,
                    target: j,
                    term,
                    contrast_size: other.len() - links.len() + 1,
                });
            }
            d_sim[o] += (s - m).exp() / z - 1.0;
            neg_coef += shift / z;
        }

        if let (Some(du), Some((_, scale))) = (d_unit.as_mut(), grad.as_ref()) {
            let w = scale / n_cvl / tau;
            for (o, j) in other.clone().enumerate() {
                let ds = if in_cvl[j] {
                    d_sim[o]
                } else {
                    neg_coef * (sim[o] - base_max).exp()
                } * w;
                if ds == 0.0 {
                    continue;
                }
                for c in 0..k {
                    du[[i, c]] += ds * unit[[j, c]];
                    du[[j, c]] += ds * unit[[i, c]];
                }
            }
        }

        for &(j, _) in links {
            in_cvl[j] = false;
        }
    }

    if let (Some(du), Some((g, _))) = (d_unit, grad.as_mut()) {
        // back through row normalization: (I − u uᵀ) du / ‖φ‖
        for a in 0..phi.nrows() {
            let row = du.row(a);
            if norms[a] == 0.0 || row.iter().all(|&v| v == 0.0) {
                continue;
            }
            let ua = unit.row(a);
            let proj = row.dot(&ua);
            for c in 0..k {
                g[[a, c]] += (row[c] - proj * ua[c]) / norms[a];
            }
        }
    }
    Ok(loss / n_cvl)
}

/// Contrastive alignment loss over all linked pairs:
///
/// `−(1/N) Σ_i Σ_{j∈CVL(i)} log( exp g(φ_i,φ_j) / Σ_{j'∈𝔅(i,j)} exp g(φ_i,φ_j') )`
/// with the scaled-cosine critic `g` and `𝔅(i,j) = {j} ∪ (V(lang j) \ CVL(i))`.
pub fn tami_loss(
    phi: ArrayView2<f64>,
    table: &LinkTable,
    vocab: &Vocabulary,
    tau: f64,
) -> Result<f64> {
    tami_pass(phi, table, vocab, tau, None, None)
}

/// Per-pair terms of [`tami_loss`], in pair enumeration order.
pub fn tami_pair_terms(
    phi: ArrayView2<f64>,
    table: &LinkTable,
    vocab: &Vocabulary,
    tau: f64,
) -> Result<Vec<PairTerm>> {
    let mut terms = Vec::with_capacity(table.n_cvl());
    tami_pass(phi, table, vocab, tau, None, Some(&mut terms))?;
    Ok(terms)
}

pub(crate) fn direct_pass(
    phi: ArrayView2<f64>,
    table: &LinkTable,
    mut grad: Option<(&mut Array2<f64>, f64)>,
) -> Result<f64> {
    if table.n_cvl() == 0 {
        return Err(Error::Config(
            "alignment loss needs at least one linked pair".into(),
        ));
    }
    if phi.nrows() != table.num_words() {
        return Err(Error::Dimension {
            expected: table.num_words(),
            actual: phi.nrows(),
        });
    }
    let n = table.n_cvl() as f64;
    let mut loss = 0.0;
    for i in 0..phi.nrows() {
        for j in table.linked(i) {
            let diff = &phi.row(i) - &phi.row(j);
            loss += diff.dot(&diff);
            if let Some((g, scale)) = grad.as_mut() {
                let w = 2.0 * *scale / n;
                for (c, d) in diff.iter().enumerate() {
                    g[[i, c]] += w * d;
                    g[[j, c]] -= w * d;
                }
            }
        }
    }
    Ok(loss / n)
}

/// Mean squared Euclidean distance between linked rows of `Φ`.
///
/// Pulls linked words together without any contrast term; used as an ablation
/// to show how alignment without negatives degenerates.
pub fn direct_alignment_loss(phi: ArrayView2<f64>, table: &LinkTable) -> Result<f64> {
    direct_pass(phi, table, None)
}
