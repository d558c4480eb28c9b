//! Independent scalar oracles and benchmark fixtures shared by the
//! integration tests. The oracles deliberately avoid the library's helpers
//! and use plain nested loops.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod checks;

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xling_topics::corpus::{BowDocument, Language, Vocabulary};
use xling_topics::embedding::{EmbeddingTable, SkipGramConfig};
use xling_topics::eval::{ReferencePairs, TopicSet};
use xling_topics::experiment::{
    prepare, train_embeddings, Dataset, LinkConfig, PrepareConfig, RawCorpus, RunConfig,
};
use xling_topics::linking::{LinkTable, Provenance};
use xling_topics::model::{Alignment, ModelConfig, ModelState, PriorParams};
use xling_topics::synthetic::{generate, SyntheticBenchmark, SyntheticConfig};
use xling_topics::trainer::TrainConfig;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vocab(v1: usize, v2: usize) -> Vocabulary {
    Vocabulary::from_words(
        (0..v1).map(|i| format!("s{i}")).collect(),
        (0..v2).map(|i| format!("t{i}")).collect(),
    )
    .unwrap()
}

/// Random non-zero `Φ` with entries in `[-1, 1]`.
pub fn random_phi(rng: &mut ChaCha8Rng, rows: usize, k: usize) -> Array2<f64> {
    loop {
        let phi = Array2::from_shape_fn((rows, k), |_| rng.random_range(-1.0f64..1.0));
        if phi
            .rows()
            .into_iter()
            .all(|r| r.iter().any(|&x| x.abs() > 1e-3))
        {
            return phi;
        }
    }
}

/// Random cross-language link table with at least one link.
pub fn random_links(rng: &mut ChaCha8Rng, vocab: &Vocabulary, density: f64) -> LinkTable {
    loop {
        let mut links = vec![Vec::new(); vocab.total()];
        for (i, l) in links.iter_mut().enumerate() {
            let other = vocab.language_of(i).other();
            for j in vocab.range(other) {
                if rng.random::<f64>() < density {
                    l.push((j, Provenance::Dictionary));
                }
            }
        }
        if links.iter().any(|l| !l.is_empty()) {
            return LinkTable::from_links(vocab, links).unwrap();
        }
    }
}

pub fn random_doc(rng: &mut ChaCha8Rng, vocab: &Vocabulary, lang: Language) -> BowDocument {
    let mut entries = Vec::new();
    for g in vocab.range(lang) {
        if rng.random::<f64>() < 0.5 {
            entries.push((g, rng.random_range(1..6)));
        }
    }
    if entries.is_empty() {
        entries.push((vocab.offset(lang), 1));
    }
    BowDocument {
        language: lang,
        entries,
        label: None,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

fn row(phi: &Array2<f64>, i: usize) -> Vec<f64> {
    phi.row(i).to_vec()
}

/// Contrastive loss by direct enumeration of every contrast set.
pub fn oracle_tami(phi: &Array2<f64>, table: &LinkTable, vocab: &Vocabulary, tau: f64) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..vocab.total() {
        let cvl: BTreeSet<usize> = table.linked(i).collect();
        for &j in &cvl {
            let lang_j = vocab.language_of(j);
            let mut denom = 0.0;
            for jp in vocab.range(lang_j) {
                if jp == j || !cvl.contains(&jp) {
                    denom += (cosine(&row(phi, i), &row(phi, jp)) / tau).exp();
                }
            }
            let num = (cosine(&row(phi, i), &row(phi, j)) / tau).exp();
            total += -(num / denom).ln();
            n += 1;
        }
    }
    total / n as f64
}

pub fn oracle_direct(phi: &Array2<f64>, table: &LinkTable, vocab: &Vocabulary) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..vocab.total() {
        for j in table.linked(i) {
            for k in 0..phi.ncols() {
                let d = phi[[i, k]] - phi[[j, k]];
                total += d * d;
            }
            n += 1;
        }
    }
    total / n as f64
}

/// KL between diagonal Gaussians written in the textbook
/// `log(σ0/σ) + (σ² + (μ−μ0)²)/(2σ0²) − ½` form.
pub fn oracle_kl(mu: &[f64], logvar: &[f64], prior: &PriorParams) -> f64 {
    let mut kl = 0.0;
    for i in 0..mu.len() {
        let s0 = prior.var[i].sqrt();
        let s = (logvar[i] / 2.0).exp();
        let d = mu[i] - prior.mean[i];
        kl += (s0 / s).ln() + (s * s + d * d) / (2.0 * s0 * s0) - 0.5;
    }
    kl
}

fn softplus(x: f64) -> f64 {
    (1.0 + x.exp()).ln()
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Per-document topic-model loss with explicit loops.
pub fn oracle_tm(doc: &BowDocument, state: &ModelState, lang: Language, eps: &[f64]) -> f64 {
    let vocab = &state.vocab;
    let enc = &state.params.encoders[lang.slot()];
    let v = vocab.size(lang);
    let off = vocab.offset(lang);
    let mut x = vec![0.0; v];
    for &(g, c) in &doc.entries {
        x[g - off] = c as f64;
    }
    let h = enc.b1.len();
    let k = enc.b_mu.len();
    let mut h1 = vec![0.0; h];
    for j in 0..h {
        let mut s = enc.b1[j];
        for i in 0..v {
            s += x[i] * enc.w1[[i, j]];
        }
        h1[j] = softplus(s);
    }
    let mut h2 = vec![0.0; h];
    for j in 0..h {
        let mut s = enc.b2[j];
        for i in 0..h {
            s += h1[i] * enc.w2[[i, j]];
        }
        h2[j] = softplus(s);
    }
    let mut mu = vec![0.0; k];
    let mut lv = vec![0.0; k];
    for t in 0..k {
        let (mut a, mut b) = (enc.b_mu[t], enc.b_logvar[t]);
        for i in 0..h {
            a += h2[i] * enc.w_mu[[i, t]];
            b += h2[i] * enc.w_logvar[[i, t]];
        }
        mu[t] = a;
        lv[t] = b;
    }
    let r: Vec<f64> = (0..k)
        .map(|t| mu[t] + (lv[t] / 2.0).exp() * eps[t])
        .collect();
    let theta = softmax(&r);
    let logits: Vec<f64> = (0..v)
        .map(|i| {
            (0..k)
                .map(|t| state.params.phi[[off + i, t]] * theta[t])
                .sum()
        })
        .collect();
    let p = softmax(&logits);
    let mut rec = 0.0;
    for i in 0..v {
        if x[i] > 0.0 {
            rec -= x[i] * (p[i] + 1e-10).ln();
        }
    }
    rec + oracle_kl(&mu, &lv, &state.priors[lang.slot()])
}

/// CNPMI by enumerating presence events pair by pair.
pub fn oracle_cnpmi(ts1: &TopicSet, ts2: &TopicSet, reference: &ReferencePairs) -> f64 {
    let pairs = reference.pairs();
    let n = pairs.len() as f64;
    let has = |d: &BowDocument, w: usize| d.entries.iter().any(|&(g, _)| g == w);
    let k = ts1.topics.len();
    let mut total = 0.0;
    for t in 0..k {
        let mut s = 0.0;
        for &(wi, _) in &ts1.topics[t] {
            for &(wj, _) in &ts2.topics[t] {
                let (mut ci, mut cj, mut cij) = (0.0, 0.0, 0.0);
                for (a, b) in pairs {
                    let (ai, bj) = (has(a, wi), has(b, wj));
                    if ai {
                        ci += 1.0;
                    }
                    if bj {
                        cj += 1.0;
                    }
                    if ai && bj {
                        cij += 1.0;
                    }
                }
                s += if cij == 0.0 {
                    -1.0
                } else if cij == n {
                    1.0
                } else {
                    let (pi, pj, pij) = (ci / n, cj / n, cij / n);
                    (pij / (pi * pj)).ln() / -pij.ln()
                };
            }
        }
        total += s / (ts1.topics[t].len() * ts2.topics[t].len()) as f64;
    }
    total / k as f64
}

pub fn random_topics(
    rng: &mut ChaCha8Rng,
    vocab: &Vocabulary,
    lang: Language,
    k: usize,
    t: usize,
) -> TopicSet {
    let range: Vec<usize> = vocab.range(lang).collect();
    let topics = (0..k)
        .map(|_| {
            let mut words: Vec<usize> = Vec::new();
            while words.len() < t {
                let w = range[rng.random_range(0..range.len())];
                if !words.contains(&w) {
                    words.push(w);
                }
            }
            words.into_iter().map(|w| (w, 0.0)).collect()
        })
        .collect();
    TopicSet {
        language: lang,
        topics,
    }
}

pub fn random_reference(rng: &mut ChaCha8Rng, vocab: &Vocabulary, pairs: usize) -> ReferencePairs {
    let p: Vec<(BowDocument, BowDocument)> = (0..pairs)
        .map(|_| {
            (
                random_doc(rng, vocab, Language::L1),
                random_doc(rng, vocab, Language::L2),
            )
        })
        .collect();
    ReferencePairs::new(p).unwrap()
}

pub fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Planted-topic benchmark
// ---------------------------------------------------------------------------

pub const BENCH_SEEDS: [u64; 3] = [1, 2, 3];
pub const BENCH_TOPICS: usize = 5;
pub const BENCH_EPOCHS: usize = 100;

pub struct Bench {
    pub synth: SyntheticBenchmark,
    pub data: Dataset,
    pub embeddings: [EmbeddingTable; 2],
}

pub fn bench(seed: u64) -> Bench {
    let synth = generate(&SyntheticConfig {
        seed,
        ..Default::default()
    })
    .unwrap();
    let raw = RawCorpus {
        docs: synth.docs.clone(),
        labels: [Some(synth.labels.clone()), Some(synth.labels.clone())],
        dictionary: synth.dictionary.clone(),
        reference: Some(synth.docs.clone()),
    };
    let data = prepare(&raw, None, &PrepareConfig::default()).unwrap();
    let embeddings = train_embeddings(
        &data,
        &SkipGramConfig {
            dim: 50,
            seed,
            ..Default::default()
        },
    )
    .unwrap();
    Bench {
        synth,
        data,
        embeddings,
    }
}

/// Default alignment weight, five neighbors.
pub fn standard_config(seed: u64) -> RunConfig {
    RunConfig {
        model: ModelConfig {
            topics: BENCH_TOPICS,
            hidden_dim: 100,
            seed,
            ..Default::default()
        },
        train: TrainConfig {
            epochs: BENCH_EPOCHS,
            seed,
            diagnostic_interval: 10,
            ..Default::default()
        },
        link: LinkConfig {
            seed,
            ..Default::default()
        },
        top_words: 15,
    }
}

/// Alignment weighted so heavily that either loss is driven to its own
/// optimum; ten neighbors keep the link graph connected.
pub fn strict_config(seed: u64, alignment: Alignment) -> RunConfig {
    let mut cfg = standard_config(seed);
    cfg.model.lambda = 5e5;
    cfg.model.alignment = alignment;
    cfg.link.n_neighbors = 10;
    cfg
}

/// How many topics `k` have at least `min_overlap` of the first-language
/// top-`n` words translating into the second-language top-`n` of topic `k`.
pub fn aligned_topics(
    topics: &[TopicSet; 2],
    data: &Dataset,
    n: usize,
    min_overlap: usize,
) -> usize {
    (0..topics[0].topics.len())
        .filter(|&k| {
            let l2: Vec<usize> = topics[1].topics[k].iter().take(n).map(|p| p.0).collect();
            let overlap = topics[0].topics[k]
                .iter()
                .take(n)
                .filter(|&&(w, _)| {
                    data.dictionary
                        .translations(w)
                        .is_some_and(|tr| tr.iter().any(|t| l2.contains(t)))
                })
                .count();
            overlap >= min_overlap
        })
        .count()
}
