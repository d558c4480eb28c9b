//! End-to-end pipeline: vocabulary and vectorization, embeddings, linking,
//! training and evaluation. Shared by the command-line tool and the
//! benchmark tests.

use crate::corpus::{
    build_vocabulary, load_dictionary, vectorize, BowDocument, Language, TranslationDictionary,
    Vocabulary,
};
use crate::embedding::{train_skipgram, EmbeddingTable, SkipGramConfig};
use crate::eval::{
    cnpmi, infer_doc_topics, linear_classifier_eval, top_words, topic_uniqueness, ClassifierReport,
    MetricRow, ReferencePairs, TopicSet,
};
use crate::linking::{build_cvl, LinkTable};
use crate::model::{ModelConfig, ModelState};
use crate::trainer::{cosine_distance_diagnostic, train, TrainConfig, TrainError, TrainingTrace};
use crate::{Error, Result};

/// Tokenized input for both languages.
#[derive(Debug, Clone, Default)]
pub struct RawCorpus {
    pub docs: [Vec<Vec<String>>; 2],
    /// Optional line-aligned labels per language.
    pub labels: [Option<Vec<usize>>; 2],
    pub dictionary: Vec<(String, String)>,
    /// Optional line-aligned comparable documents used for coherence
    /// counting.
    pub reference: Option<[Vec<Vec<String>>; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareConfig {
    pub min_doc_freq: usize,
    pub max_vocab: usize,
    /// Fraction of each corpus held out (taken from the end) for evaluation.
    pub test_fraction: f64,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            min_doc_freq: 1,
            max_vocab: 20_000,
            test_fraction: 0.2,
        }
    }
}

/// Vectorized corpora plus everything later stages need.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocab: Vocabulary,
    pub train: [Vec<BowDocument>; 2],
    pub test: [Vec<BowDocument>; 2],
    /// Local word ids of the training documents in token order.
    pub sequences: [Vec<Vec<usize>>; 2],
    pub dictionary: TranslationDictionary,
    pub reference: Option<ReferencePairs>,
}

/// Index where the held-out tail of an `n`-document corpus starts.
pub fn split_point(n: usize, test_fraction: f64) -> usize {
    n - (n as f64 * test_fraction).round() as usize
}

/// Builds the vocabulary from the training portions (unless one is given)
/// and vectorizes everything against it.
pub fn prepare(raw: &RawCorpus, vocab: Option<Vocabulary>, cfg: &PrepareConfig) -> Result<Dataset> {
    if !(0.0..1.0).contains(&cfg.test_fraction) {
        return Err(Error::Config(format!(
            "test_fraction must be in [0, 1), got {}",
            cfg.test_fraction
        )));
    }
    let cut = [
        split_point(raw.docs[0].len(), cfg.test_fraction),
        split_point(raw.docs[1].len(), cfg.test_fraction),
    ];
    let vocab = match vocab {
        Some(v) => v,
        None => build_vocabulary(
            &raw.docs[0][..cut[0]],
            &raw.docs[1][..cut[1]],
            cfg.min_doc_freq,
            cfg.max_vocab,
        )?,
    };

    let mut train = [Vec::new(), Vec::new()];
    let mut test = [Vec::new(), Vec::new()];
    let mut sequences = [Vec::new(), Vec::new()];
    for lang in Language::BOTH {
        let s = lang.slot();
        if let Some(labels) = &raw.labels[s] {
            if labels.len() != raw.docs[s].len() {
                return Err(Error::Dimension {
                    expected: raw.docs[s].len(),
                    actual: labels.len(),
                });
            }
        }
        let offset = vocab.offset(lang);
        for (i, doc) in raw.docs[s].iter().enumerate() {
            let Some(mut bow) = vectorize(doc, &vocab, lang) else {
                continue;
            };
            bow.label = raw.labels[s].as_ref().map(|l| l[i]);
            if i < cut[s] {
                sequences[s].push(
                    doc.iter()
                        .filter_map(|w| vocab.lookup(lang, w))
                        .map(|g| g - offset)
                        .collect(),
                );
                train[s].push(bow);
            } else {
                test[s].push(bow);
            }
        }
        if train[s].is_empty() {
            return Err(Error::Config(format!(
                "no non-empty training documents for {lang}"
            )));
        }
    }

    let reference = match &raw.reference {
        None => None,
        Some([r1, r2]) => {
            if r1.len() != r2.len() {
                return Err(Error::Dimension {
                    expected: r1.len(),
                    actual: r2.len(),
                });
            }
            let pairs = r1
                .iter()
                .zip(r2)
                .filter_map(|(a, b)| {
                    Some((
                        vectorize(a, &vocab, Language::L1)?,
                        vectorize(b, &vocab, Language::L2)?,
                    ))
                })
                .collect();
            Some(ReferencePairs::new(pairs)?)
        }
    };
    let dictionary = load_dictionary(&raw.dictionary, &vocab);
    Ok(Dataset {
        vocab,
        train,
        test,
        sequences,
        dictionary,
        reference,
    })
}

/// Skip-gram embeddings of both languages from the training sequences.
pub fn train_embeddings(data: &Dataset, cfg: &SkipGramConfig) -> Result<[EmbeddingTable; 2]> {
    let e1 = train_skipgram(
        &data.sequences[0],
        data.vocab.size(Language::L1),
        Language::L1,
        cfg,
    )?;
    let e2 = train_skipgram(
        &data.sequences[1],
        data.vocab.size(Language::L2),
        Language::L2,
        &SkipGramConfig {
            seed: cfg.seed.wrapping_add(1),
            ..cfg.clone()
        },
    )?;
    Ok([e1, e2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub n_neighbors: usize,
    pub dict_coverage: f64,
    /// When false, links come from the dictionary alone.
    pub use_cvl: bool,
    /// Seed of the dictionary subsample.
    pub seed: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            n_neighbors: 5,
            dict_coverage: 1.0,
            use_cvl: true,
            seed: 1,
        }
    }
}

impl LinkConfig {
    pub fn effective_neighbors(&self) -> usize {
        if self.use_cvl {
            self.n_neighbors
        } else {
            0
        }
    }
}

/// Subsamples the dictionary to the configured coverage and builds links.
pub fn link(
    data: &Dataset,
    embeddings: Option<&[EmbeddingTable; 2]>,
    cfg: &LinkConfig,
) -> Result<LinkTable> {
    let dict = if cfg.dict_coverage < 1.0 {
        data.dictionary.subsample(cfg.dict_coverage, cfg.seed)?
    } else {
        if cfg.dict_coverage > 1.0 || cfg.dict_coverage.is_nan() {
            return Err(Error::Config(format!(
                "dictionary coverage must be in (0, 1], got {}",
                cfg.dict_coverage
            )));
        }
        data.dictionary.clone()
    };
    let tables = match embeddings {
        Some([a, b]) => [Some(a), Some(b)],
        None => [None, None],
    };
    build_cvl(&data.vocab, &dict, tables, cfg.effective_neighbors())
}

/// Classification accuracy in the four transfer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    /// Trained and tested on the first language.
    pub l1_intra: ClassifierReport,
    pub l2_intra: ClassifierReport,
    /// Trained on the second language, tested on the first.
    pub l1_cross: ClassifierReport,
    /// Trained on the first language, tested on the second.
    pub l2_cross: ClassifierReport,
}

impl Classification {
    pub fn mean_cross_accuracy(&self) -> f64 {
        (self.l1_cross.accuracy + self.l2_cross.accuracy) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub topics: [TopicSet; 2],
    pub tu: [f64; 2],
    pub cnpmi: Option<f64>,
    pub classification: Option<Classification>,
    pub cosine_distance: f64,
}

impl Evaluation {
    pub fn mean_tu(&self) -> f64 {
        (self.tu[0] + self.tu[1]) / 2.0
    }

    pub fn rows(&self, seed: u64) -> Vec<MetricRow> {
        let row = |metric: &str, language: &str, value: f64| MetricRow {
            metric: metric.into(),
            language: language.into(),
            value,
            seed,
        };
        let mut rows = vec![
            row("tu", "l1", self.tu[0]),
            row("tu", "l2", self.tu[1]),
            row("tu", "mean", self.mean_tu()),
        ];
        if let Some(c) = self.cnpmi {
            rows.push(row("cnpmi", "l1-l2", c));
        }
        if let Some(c) = &self.classification {
            for (lang, r) in [
                ("l1-i", c.l1_intra),
                ("l2-i", c.l2_intra),
                ("l1-c", c.l1_cross),
                ("l2-c", c.l2_cross),
            ] {
                rows.push(row("accuracy", lang, r.accuracy));
                rows.push(row("macro_f1", lang, r.macro_f1));
            }
        }
        rows.push(row("cosine_distance", "all", self.cosine_distance));
        rows
    }
}

fn labeled(docs: &[BowDocument]) -> Option<Vec<usize>> {
    docs.iter().map(|d| d.label).collect()
}

/// Topic quality, classification (when every train and test document is
/// labeled) and the degeneracy diagnostic of a trained model.
pub fn evaluate(
    state: &ModelState,
    data: &Dataset,
    top_n: usize,
    diagnostic_pairs: usize,
    seed: u64,
) -> Result<Evaluation> {
    let topics = [
        top_words(state.beta(Language::L1), &state.vocab, Language::L1, top_n)?,
        top_words(state.beta(Language::L2), &state.vocab, Language::L2, top_n)?,
    ];
    let tu = [topic_uniqueness(&topics[0]), topic_uniqueness(&topics[1])];
    let cnpmi = match &data.reference {
        Some(r) if !r.is_empty() => Some(cnpmi(&topics[0], &topics[1], r)?),
        _ => None,
    };

    let mut classification = None;
    let labels = [
        labeled(&data.train[0]),
        labeled(&data.train[1]),
        labeled(&data.test[0]),
        labeled(&data.test[1]),
    ];
    if let [Some(y1), Some(y2), Some(t1), Some(t2)] = labels {
        if !t1.is_empty() && !t2.is_empty() {
            let x1 = infer_doc_topics(state, &data.train[0], Language::L1)?;
            let x2 = infer_doc_topics(state, &data.train[1], Language::L2)?;
            let z1 = infer_doc_topics(state, &data.test[0], Language::L1)?;
            let z2 = infer_doc_topics(state, &data.test[1], Language::L2)?;
            classification = Some(Classification {
                l1_intra: linear_classifier_eval(x1.view(), &y1, z1.view(), &t1, seed)?,
                l2_intra: linear_classifier_eval(x2.view(), &y2, z2.view(), &t2, seed)?,
                l1_cross: linear_classifier_eval(x2.view(), &y2, z1.view(), &t1, seed)?,
                l2_cross: linear_classifier_eval(x1.view(), &y1, z2.view(), &t2, seed)?,
            });
        }
    }
    let n = state.params.phi.nrows();
    let pairs = if n < crate::trainer::EXACT_DIAGNOSTIC_ROWS {
        n * (n - 1) / 2
    } else {
        diagnostic_pairs
    };
    let cosine_distance = cosine_distance_diagnostic(state.params.phi.view(), pairs, seed)?;
    Ok(Evaluation {
        topics,
        tu,
        cnpmi,
        classification,
        cosine_distance,
    })
}

/// Everything that defines one training run on a prepared dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub link: LinkConfig,
    pub top_words: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            link: LinkConfig::default(),
            top_words: crate::eval::DEFAULT_TOP_WORDS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub links: LinkTable,
    pub state: ModelState,
    pub trace: TrainingTrace,
    pub evaluation: Evaluation,
}

/// Links, trains and evaluates.
pub fn run(
    data: &Dataset,
    embeddings: Option<&[EmbeddingTable; 2]>,
    cfg: &RunConfig,
) -> std::result::Result<RunOutput, TrainError> {
    let links = link(data, embeddings, &cfg.link)?;
    let table = (cfg.model.lambda > 0.0).then_some(&links);
    let (state, trace) = train(
        &data.vocab,
        [&data.train[0], &data.train[1]],
        table,
        &cfg.model,
        &cfg.train,
    )?;
    let evaluation = evaluate(
        &state,
        data,
        cfg.top_words,
        cfg.train.diagnostic_pairs,
        cfg.train.seed,
    )?;
    Ok(RunOutput {
        links,
        state,
        trace,
        evaluation,
    })
}

/// Dictionary coverages of the low-coverage ablation grid.
pub const ABLATION_COVERAGES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// One value of the coverage × linking-mode grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub coverage: f64,
    pub use_cvl: bool,
    pub metric: MetricRow,
}

/// Runs every coverage with and without neighbor linking for each seed.
///
/// Besides the evaluation metrics, each cell reports its link count as
/// metric `n_cvl`.
pub fn ablation_grid(
    data: &Dataset,
    embeddings: Option<&[EmbeddingTable; 2]>,
    base: &RunConfig,
    seeds: &[u64],
) -> std::result::Result<Vec<AblationRow>, TrainError> {
    let mut rows = Vec::new();
    for &seed in seeds {
        for coverage in ABLATION_COVERAGES {
            for use_cvl in [true, false] {
                let mut cfg = base.clone();
                cfg.model.seed = seed;
                cfg.train.seed = seed;
                cfg.link.seed = seed;
                cfg.link.dict_coverage = coverage;
                cfg.link.use_cvl = use_cvl;
                log::info!("ablation cell: seed {seed}, coverage {coverage}, cvl {use_cvl}");
                let out = run(data, if use_cvl { embeddings } else { None }, &cfg)?;
                let mut metrics = out.evaluation.rows(seed);
                metrics.push(MetricRow {
                    metric: "n_cvl".into(),
                    language: "all".into(),
                    value: out.links.n_cvl() as f64,
                    seed,
                });
                rows.extend(metrics.into_iter().map(|metric| AblationRow {
                    coverage,
                    use_cvl,
                    metric,
                }));
            }
        }
    }
    Ok(rows)
}

/// Renders `coverage,linking,metric,language,value,seed` CSV.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("coverage,linking,metric,language,value,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.coverage,
            if r.use_cvl { "cvl" } else { "dict" },
            r.metric.metric,
            r.metric.language,
            r.metric.value,
            r.metric.seed
        ));
    }
    out
}
