//! Monolingual word embeddings (skip-gram with negative sampling) and exact
//! cosine nearest-neighbor search.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Language, Vocabulary};
use crate::{Error, Result};

/// `V_lang × d` matrix of word vectors, row = within-language word index.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub language: Language,
    pub vectors: Array2<f64>,
}

impl EmbeddingTable {
    pub fn new(language: Language, vectors: Array2<f64>) -> Result<Self> {
        if vectors.ncols() < 2 {
            return Err(Error::Config("embedding dimension must be >= 2".into()));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite embedding entry".into()));
        }
        Ok(EmbeddingTable { language, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        cosine(self.vectors.row(a), self.vectors.row(b))
    }

    /// Writes the text format: header `V d`, then `word v1 .. vd` per row.
    pub fn write_text(&self, path: &Path, vocab: &Vocabulary) -> Result<()> {
        let words = vocab.words(self.language);
        let mut out = format!("{} {}\n", self.len(), self.dim());
        for (w, row) in words.iter().zip(self.vectors.rows()) {
            out.push_str(w);
            for v in row {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 10,
            learning_rate: 0.025,
            seed: 1,
        }
    }
}

/// Skip-gram with negative sampling over within-language index documents.
///
/// Single-threaded; the output is a pure function of the inputs and seed.
/// Returns the input-vector table.
pub fn train_skipgram(
    corpus: &[Vec<usize>],
    vocab_size: usize,
    language: Language,
    cfg: &SkipGramConfig,
) -> Result<EmbeddingTable> {
    if vocab_size < 2 {
        return Err(Error::Config(
            "skip-gram needs at least two words for negative sampling".into(),
        ));
    }
    if cfg.dim < 2 {
        return Err(Error::Config("embedding dimension must be >= 2".into()));
    }
    if cfg.window == 0 {
        return Err(Error::Config("window must be >= 1".into()));
    }
    let total_tokens: usize = corpus.iter().map(Vec::len).sum();
    if total_tokens == 0 {
        return Err(Error::Config("empty corpus for skip-gram".into()));
    }
    if let Some(&bad) = corpus.iter().flatten().find(|&&w| w >= vocab_size) {
        return Err(Error::Dimension {
            expected: vocab_size,
            actual: bad + 1,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.dim;
    let bound = 0.5 / d as f64;
    let mut input = Array2::from_shape_fn((vocab_size, d), |_| rng.random_range(-bound..bound));
    let mut output = Array2::<f64>::zeros((vocab_size, d));

    // Noise distribution: unigram^0.75 as a cumulative table.
    let mut freq = vec![0.0f64; vocab_size];
    for &w in corpus.iter().flatten() {
        freq[w] += 1.0;
    }
    let mut cdf = Vec::with_capacity(vocab_size);
    let mut acc = 0.0;
    for f in &freq {
        acc += f.powf(0.75);
        cdf.push(acc);
    }
    let draw_negative = |rng: &mut ChaCha8Rng| -> usize {
        let u = rng.random::<f64>() * acc;
        cdf.partition_point(|&c| c <= u).min(vocab_size - 1)
    };

    let total_steps = (cfg.epochs * total_tokens).max(1) as f64;
    let mut step = 0usize;
    let mut grad_in = vec![0.0f64; d];
    for _ in 0..cfg.epochs {
        for doc in corpus {
            for (pos, &center) in doc.iter().enumerate() {
                let lr = (cfg.learning_rate * (1.0 - step as f64 / total_steps))
                    .max(cfg.learning_rate * 1e-4);
                step += 1;
                let shrink = rng.random_range(0..cfg.window);
                let span = cfg.window - shrink;
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(doc.len() - 1);
                for (cpos, &context) in doc.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    grad_in.iter_mut().for_each(|g| *g = 0.0);
                    for s in 0..=cfg.negatives {
                        let (target, label) = if s == 0 {
                            (context, 1.0)
                        } else {
                            let t = draw_negative(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let mut out_row = output.row_mut(target);
                        let in_row = input.row(center);
                        let score = in_row.dot(&out_row);
                        let g = (label - sigmoid(score)) * lr;
                        for k in 0..d {
                            grad_in[k] += g * out_row[k];
                            out_row[k] += g * in_row[k];
                        }
                    }
                    let mut in_row = input.row_mut(center);
                    for k in 0..d {
                        in_row[k] += grad_in[k];
                    }
                }
            }
        }
    }
    EmbeddingTable::new(language, input)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Reads the text embedding format for one language of `vocab`.
///
/// Words absent from the file receive seeded random rows; their count is
/// returned alongside the table.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    language: Language,
    seed: u64,
) -> Result<(EmbeddingTable, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(&name, 1, "missing header"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let (rows, dim) = match head.as_slice() {
        [v, d] => match (v.parse::<usize>(), d.parse::<usize>()) {
            (Ok(v), Ok(d)) if d >= 2 => (v, d),
            _ => return Err(Error::parse(&name, 1, "malformed header, expected `V d`")),
        },
        _ => return Err(Error::parse(&name, 1, "malformed header, expected `V d`")),
    };

    let n = vocab.size(language);
    let mut table = Array2::<f64>::zeros((n, dim));
    let mut seen = vec![false; n];
    let mut count = 0usize;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        count += 1;
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap();
        let values: Vec<f64> = parts
            .map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::parse(&name, i + 1, "bad float"))?;
        if values.len() != dim {
            return Err(Error::parse(
                &name,
                i + 1,
                format!("row has {} values, header says {dim}", values.len()),
            ));
        }
        if let Some(g) = vocab.lookup(language, word) {
            let local = g - vocab.offset(language);
            table.row_mut(local).assign(&ArrayView1::from(&values[..]));
            seen[local] = true;
        }
    }
    if count != rows {
        return Err(Error::parse(
            &name,
            1,
            format!("header declares {rows} rows, file has {count}"),
        ));
    }

    let missing = seen.iter().filter(|s| !**s).count();
    if missing > 0 {
        log::warn!("{name}: {missing} of {n} {language} words missing, using random vectors");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 0.5 / dim as f64;
        for (local, _) in seen.iter().enumerate().filter(|(_, s)| !**s) {
            for v in table.row_mut(local) {
                *v = rng.random_range(-bound..bound);
            }
        }
    }
    Ok((EmbeddingTable::new(language, table)?, missing))
}

/// Top-`n` words by cosine similarity to `word`, self excluded, ties broken
/// by ascending index.
pub fn nearest_neighbors(table: &EmbeddingTable, word: usize, n: usize) -> Result<Vec<usize>> {
    if word >= table.len() {
        return Err(Error::Dimension {
            expected: table.len(),
            actual: word + 1,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let q = table.vectors.row(word);
    if q.iter().all(|&v| v == 0.0) {
        return Err(Error::Numerical(format!(
            "word {word} has an all-zero vector; cosine is undefined"
        )));
    }
    let mut scored: Vec<(usize, f64)> = (0..table.len())
        .filter(|&j| j != word)
        .map(|j| (j, cosine(q, table.vectors.row(j))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(scored.into_iter().map(|(j, _)| j).collect())
}
