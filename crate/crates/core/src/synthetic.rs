//! Planted-topic bilingual benchmark.
//!
//! Both languages share `topics` latent topics. Every first-language word has
//! exactly one translation, assigned through a seeded permutation, and a
//! word and its translation belong to the same planted topic with nearly the
//! same weight. A block of background words, like function words in real
//! text, is shared by every topic. Document `d` of each language is drawn
//! from the same proportions `θ_d`, so the two corpora are line-aligned
//! comparable pairs.

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub topics: usize,
    pub vocab_per_lang: usize,
    pub docs_per_lang: usize,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    /// Symmetric Dirichlet concentration of document proportions.
    pub doc_alpha: f64,
    /// Probability mass each topic spreads uniformly over the whole
    /// vocabulary.
    pub noise: f64,
    /// Words (per language) that belong to no topic but occur in all.
    pub background_words: usize,
    /// Probability mass each topic puts on the background block.
    pub background_mass: f64,
    /// Log-normal sigma applied independently per language to word weights.
    pub language_jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            topics: 5,
            vocab_per_lang: 200,
            docs_per_lang: 2000,
            doc_len_min: 40,
            doc_len_max: 80,
            doc_alpha: 0.1,
            noise: 0.05,
            background_words: 40,
            background_mass: 0.3,
            language_jitter: 0.3,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBenchmark {
    /// Token documents per language, line-aligned.
    pub docs: [Vec<Vec<String>>; 2],
    /// Dominant planted topic of each document pair.
    pub labels: Vec<usize>,
    /// Planted document proportions, one row per pair.
    pub theta: Array2<f64>,
    /// One-to-one `(l1 word, l2 word)` translations.
    pub dictionary: Vec<(String, String)>,
    /// Planted topic of every word, indexed by the number in its name;
    /// `None` for background words.
    pub word_topic: [Vec<Option<usize>>; 2],
}

pub fn l1_word(i: usize) -> String {
    format!("a{i:03}")
}

pub fn l2_word(i: usize) -> String {
    format!("b{i:03}")
}

/// Generates the benchmark; a pure function of the config.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticBenchmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let Planted {
        perm,
        topic_l1,
        topic_l2,
        samplers,
    } = plant(cfg, &mut rng)?;

    let k = cfg.topics;
    let n = cfg.docs_per_lang;
    let mut theta = Array2::zeros((n, k));
    let mut labels = Vec::with_capacity(n);
    let mut docs: [Vec<Vec<String>>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for d in 0..n {
        let th = dirichlet(&mut rng, cfg.doc_alpha, k)?;
        let mut best = 0;
        for t in 1..k {
            if th[t] > th[best] {
                best = t;
            }
        }
        labels.push(best);
        let topic_pick = WeightedIndex::new(&th).map_err(|e| Error::Config(e.to_string()))?;
        for slot in 0..2 {
            let len = rng.random_range(cfg.doc_len_min..=cfg.doc_len_max);
            let doc = (0..len)
                .map(|_| {
                    let z = topic_pick.sample(&mut rng);
                    let w = samplers[slot][z].sample(&mut rng);
                    if slot == 0 {
                        l1_word(w)
                    } else {
                        l2_word(w)
                    }
                })
                .collect();
            docs[slot].push(doc);
        }
        for t in 0..k {
            theta[[d, t]] = th[t];
        }
    }
    let dictionary = (0..cfg.vocab_per_lang)
        .map(|i| (l1_word(i), l2_word(perm[i])))
        .collect();
    Ok(SyntheticBenchmark {
        docs,
        labels,
        theta,
        dictionary,
        word_topic: [topic_l1, topic_l2],
    })
}

struct Planted {
    perm: Vec<usize>,
    topic_l1: Vec<Option<usize>>,
    topic_l2: Vec<Option<usize>>,
    /// Word sampler per language and topic.
    samplers: Vec<Vec<WeightedIndex<f64>>>,
}

/// Validates `cfg` and draws the translation permutation and the per-topic
/// word distributions; consumes the start of the config's random stream.
fn plant(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Result<Planted> {
    let k = cfg.topics;
    let v = cfg.vocab_per_lang;
    let bg = cfg.background_words;
    if k < 2 || v < k + bg {
        return Err(Error::Config(format!(
            "need at least one word per topic: {k} topics, {bg} background words, {v} words"
        )));
    }
    if !(0.0..1.0).contains(&cfg.background_mass) || (bg == 0 && cfg.background_mass > 0.0) {
        return Err(Error::Config(
            "background_mass must be in [0, 1) and needs words".into(),
        ));
    }
    if cfg.docs_per_lang == 0 || cfg.doc_len_min == 0 || cfg.doc_len_max < cfg.doc_len_min {
        return Err(Error::Config(
            "invalid document count or length range".into(),
        ));
    }
    if !(0.0..1.0).contains(&cfg.noise)
        || cfg.noise + cfg.background_mass >= 1.0
        || cfg.doc_alpha <= 0.0
        || cfg.language_jitter < 0.0
    {
        return Err(Error::Config("invalid noise, alpha or jitter".into()));
    }
    // l1 words below `bg` are background, word i >= bg sits in topic
    // (i - bg) % k; the translation of l1 word i is l2 word perm[i]
    let mut perm: Vec<usize> = (0..v).collect();
    perm.shuffle(rng);
    let topic_l1: Vec<Option<usize>> = (0..v).map(|i| (i >= bg).then(|| (i - bg) % k)).collect();
    let mut topic_l2 = vec![None; v];
    for i in 0..v {
        topic_l2[perm[i]] = topic_l1[i];
    }

    let shared = dirichlet(rng, 1.0, v)?;
    let jitter = LogNormal::new(0.0, cfg.language_jitter.max(1e-12))
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut samplers = Vec::with_capacity(2);
    for slot in 0..2 {
        let mut per_topic = Vec::with_capacity(k);
        for t in 0..k {
            let mut w = vec![0.0; v];
            for i in 0..v {
                if topic_l1[i] == Some(t) {
                    let idx = if slot == 0 { i } else { perm[i] };
                    w[idx] = shared[i] * jitter.sample(rng);
                }
            }
            let mass: f64 = w.iter().sum();
            let mut back = vec![0.0; v];
            for i in 0..bg {
                let idx = if slot == 0 { i } else { perm[i] };
                back[idx] = shared[i] * jitter.sample(rng);
            }
            let back_mass: f64 = back.iter().sum::<f64>().max(f64::MIN_POSITIVE);
            let topic_share = 1.0 - cfg.noise - cfg.background_mass;
            for (x, b) in w.iter_mut().zip(&back) {
                *x = topic_share * *x / mass
                    + cfg.background_mass * b / back_mass
                    + cfg.noise / v as f64;
            }
            per_topic.push(WeightedIndex::new(&w).map_err(|e| Error::Config(e.to_string()))?);
        }
        samplers.push(per_topic);
    }
    Ok(Planted {
        perm,
        topic_l1,
        topic_l2,
        samplers,
    })
}

/// Planted topic, first-language tokens, second-language tokens.
pub type SingleTopicDoc = (usize, Vec<String>, Vec<String>);

/// Documents drawn from a single planted topic each, under the same word
/// distributions as `generate(cfg)`. Returns `(topic, l1 tokens, l2 tokens)`
/// with `per_topic` documents per topic; `seed` drives only the sampling.
pub fn single_topic_docs(
    cfg: &SyntheticConfig,
    per_topic: usize,
    seed: u64,
) -> Result<Vec<SingleTopicDoc>> {
    let planted = plant(cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_topic * cfg.topics);
    for t in 0..cfg.topics {
        for _ in 0..per_topic {
            let mut draw = |slot: usize, name: fn(usize) -> String| {
                let len = rng.random_range(cfg.doc_len_min..=cfg.doc_len_max);
                (0..len)
                    .map(|_| name(planted.samplers[slot][t].sample(&mut rng)))
                    .collect::<Vec<_>>()
            };
            let a = draw(0, l1_word);
            let b = draw(1, l2_word);
            out.push((t, a, b));
        }
    }
    Ok(out)
}

/// Symmetric Dirichlet draw via normalized Gamma variates.
fn dirichlet(rng: &mut ChaCha8Rng, alpha: f64, n: usize) -> Result<Vec<f64>> {
    let g = Gamma::new(alpha, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    loop {
        let draw: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
        let sum: f64 = draw.iter().sum();
        // tiny alphas can underflow every component
        if sum > 0.0 {
            return Ok(draw.into_iter().map(|x| x / sum).collect());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            vocab_per_lang: 20,
            docs_per_lang: 50,
            background_words: 4,
            ..Default::default()
        }
    }

    #[test]
    fn shapes_and_determinism() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.docs[0].len(), 50);
        assert_eq!(a.docs[1].len(), 50);
        assert_eq!(a.labels.len(), 50);
        assert_eq!(a.dictionary.len(), 20);
        for doc in a.docs.iter().flatten() {
            assert!((40..=80).contains(&doc.len()));
        }
        for row in a.theta.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn translations_share_topics() {
        let b = generate(&small()).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (w1, w2) in &b.dictionary {
            let i: usize = w1[1..].parse().unwrap();
            let j: usize = w2[1..].parse().unwrap();
            assert_eq!(b.word_topic[0][i], b.word_topic[1][j]);
            assert!(seen.insert(j), "dictionary must be one-to-one");
        }
    }

    #[test]
    fn labels_follow_dominant_topic() {
        let b = generate(&small()).unwrap();
        for (d, &l) in b.labels.iter().enumerate() {
            let row = b.theta.row(d);
            assert!(row.iter().all(|&x| x <= row[l]));
        }
    }

    #[test]
    fn single_topic_docs_stay_in_topic() {
        let cfg = SyntheticConfig {
            noise: 0.0,
            ..small()
        };
        let b = generate(&cfg).unwrap();
        let docs = single_topic_docs(&cfg, 3, 9).unwrap();
        assert_eq!(docs.len(), 3 * cfg.topics);
        for (t, d1, d2) in &docs {
            for (slot, doc) in [d1, d2].into_iter().enumerate() {
                for w in doc {
                    let i: usize = w[1..].parse().unwrap();
                    // without noise a word is either background or in topic t
                    assert!(b.word_topic[slot][i].is_none() || b.word_topic[slot][i] == Some(*t));
                }
            }
        }
        assert_eq!(docs, single_topic_docs(&cfg, 3, 9).unwrap());
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            SyntheticConfig {
                topics: 1,
                ..small()
            },
            SyntheticConfig {
                vocab_per_lang: 3,
                ..small()
            },
            SyntheticConfig {
                doc_len_max: 10,
                ..small()
            },
            SyntheticConfig {
                noise: 1.0,
                ..small()
            },
            SyntheticConfig {
                background_words: 16,
                ..small()
            },
            SyntheticConfig {
                background_words: 0,
                ..small()
            },
        ] {
            assert!(generate(&cfg).is_err());
        }
    }
}
