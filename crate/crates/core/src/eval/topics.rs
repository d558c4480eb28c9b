use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::ArrayView2;

use crate::corpus::{Language, Vocabulary};
use crate::{Error, Result};

/// Default number of top words per topic.
pub const DEFAULT_TOP_WORDS: usize = 15;

/// Ranked top words of each topic for one language.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicSet {
    pub language: Language,
    /// `topics[k]` = `(global word index, β score)`, descending by score.
    pub topics: Vec<Vec<(usize, f64)>>,
}

impl TopicSet {
    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn top_n(&self) -> usize {
        self.topics.first().map_or(0, Vec::len)
    }

    pub fn words(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.topics[k].iter().map(|&(w, _)| w)
    }
}

/// The `top_n` highest-scoring words of every column of `beta`, ties broken
/// by ascending word index.
pub fn top_words(
    beta: ArrayView2<f64>,
    vocab: &Vocabulary,
    language: Language,
    top_n: usize,
) -> Result<TopicSet> {
    let v = vocab.size(language);
    if beta.nrows() != v {
        return Err(Error::Dimension {
            expected: v,
            actual: beta.nrows(),
        });
    }
    if top_n > v {
        return Err(Error::Config(format!(
            "cannot take {top_n} top words from a {v}-word vocabulary"
        )));
    }
    let offset = vocab.offset(language);
    let topics = beta
        .columns()
        .into_iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..v).collect();
            idx.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
            idx.truncate(top_n);
            idx.into_iter().map(|i| (offset + i, col[i])).collect()
        })
        .collect();
    Ok(TopicSet { language, topics })
}

/// Topic uniqueness: `(1/K) Σ_k (1/T) Σ_{w ∈ top(k)} 1/cnt(w)`, where
/// `cnt(w)` counts the topics whose top list contains `w`.
///
/// Lies in `[1/K, 1]`; 1 means no word is shared between topics.
pub fn topic_uniqueness(ts: &TopicSet) -> f64 {
    let k = ts.num_topics();
    if k == 0 {
        return 0.0;
    }
    let mut cnt: HashMap<usize, usize> = HashMap::new();
    for t in 0..k {
        for w in ts.words(t) {
            *cnt.entry(w).or_default() += 1;
        }
    }
    let mut total = 0.0;
    for t in 0..k {
        let len = ts.topics[t].len();
        if len == 0 {
            continue;
        }
        let s: f64 = ts.words(t).map(|w| 1.0 / cnt[&w] as f64).sum();
        total += s / len as f64;
    }
    total / k as f64
}

/// Mean of the per-language uniqueness scores.
pub fn dataset_uniqueness(sets: &[TopicSet]) -> f64 {
    sets.iter().map(topic_uniqueness).sum::<f64>() / sets.len() as f64
}

/// Renders topics of both languages side by side:
///
/// ```text
/// [topic 0]
/// l1  word:score word:score ...
/// l2  word:score ...
/// ```
pub fn render_topics(sets: &[TopicSet; 2], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    let k = sets[0].num_topics();
    writeln!(out, "# topics={} top_words={}", k, sets[0].top_n()).unwrap();
    for t in 0..k {
        writeln!(out, "[topic {t}]").unwrap();
        for ts in sets {
            let words: Vec<String> = ts.topics[t]
                .iter()
                .map(|&(w, s)| format!("{}:{:.6}", vocab.word(w), s))
                .collect();
            writeln!(out, "{}\t{}", ts.language, words.join(" ")).unwrap();
        }
    }
    out
}
