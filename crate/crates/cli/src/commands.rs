use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use xling_topics::corpus::{
    read_corpus, read_dictionary, read_labels, write_corpus, Language, Vocabulary,
};
use xling_topics::embedding::{load_embeddings, EmbeddingTable};
use xling_topics::eval::{metrics_csv, render_topics, top_words};
use xling_topics::experiment::{
    ablation_csv, ablation_grid, evaluate, link, prepare, train_embeddings, Dataset, RawCorpus,
};
use xling_topics::linking::{LinkTable, Provenance};
use xling_topics::model::ModelState;
use xling_topics::synthetic::{generate, SyntheticConfig};
use xling_topics::trainer::{load_checkpoint, save_checkpoint, train};

use crate::config::Settings;

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const LINKS_FILE: &str = "links.tsv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRACE_FILE: &str = "trace.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TOPICS_FILE: &str = "topics.txt";
pub const ABLATION_FILE: &str = "ablation.csv";

fn required<'a>(p: &'a Option<std::path::PathBuf>, key: &str) -> Result<&'a Path> {
    match p {
        Some(p) => Ok(p),
        None => Err(crate::UsageError(format!("missing required setting `{key}`")).into()),
    }
}

fn output_dir(s: &Settings) -> Result<()> {
    fs::create_dir_all(&s.output)
        .with_context(|| format!("cannot create output directory {}", s.output.display()))
}

fn load_raw(s: &Settings) -> Result<RawCorpus> {
    let docs = [
        read_corpus(required(&s.l1_corpus, "l1_corpus")?)?,
        read_corpus(required(&s.l2_corpus, "l2_corpus")?)?,
    ];
    let labels = [
        s.l1_labels.as_deref().map(read_labels).transpose()?,
        s.l2_labels.as_deref().map(read_labels).transpose()?,
    ];
    let dictionary = read_dictionary(required(&s.dictionary, "dictionary")?)?;
    let reference = match (&s.l1_reference, &s.l2_reference) {
        (Some(a), Some(b)) => Some([read_corpus(a)?, read_corpus(b)?]),
        _ => None,
    };
    Ok(RawCorpus {
        docs,
        labels,
        dictionary,
        reference,
    })
}

/// Vectorizes the corpora, with the vocabulary of `vocab` when given.
fn dataset(s: &Settings, vocab: Option<Vocabulary>) -> Result<Dataset> {
    let raw = load_raw(s)?;
    let vocab = match (vocab, &s.vocab) {
        (Some(v), _) => Some(v),
        (None, Some(p)) => Some(Vocabulary::read_tsv(p)?),
        (None, None) => None,
    };
    let data = prepare(&raw, vocab, &s.prepare())?;
    info!(
        "vocabulary {} + {} words, {} + {} training and {} + {} held-out documents",
        data.vocab.size(Language::L1),
        data.vocab.size(Language::L2),
        data.train[0].len(),
        data.train[1].len(),
        data.test[0].len(),
        data.test[1].len()
    );
    Ok(data)
}

/// Embeddings from files when configured, otherwise trained on the corpus.
/// `None` when neighbor linking is off.
fn embeddings(s: &Settings, data: &Dataset) -> Result<Option<[EmbeddingTable; 2]>> {
    if s.no_cvl || s.neighbors == 0 {
        return Ok(None);
    }
    match (&s.l1_embeddings, &s.l2_embeddings) {
        (Some(a), Some(b)) => {
            let (e1, _) = load_embeddings(a, &data.vocab, Language::L1, s.seed)?;
            let (e2, _) = load_embeddings(b, &data.vocab, Language::L2, s.seed.wrapping_add(1))?;
            Ok(Some([e1, e2]))
        }
        _ => {
            info!("training skip-gram embeddings (dim {})", s.embedding_dim);
            Ok(Some(train_embeddings(data, &s.skipgram())?))
        }
    }
}

fn links(s: &Settings, data: &Dataset) -> Result<LinkTable> {
    let table = match &s.links {
        Some(p) => LinkTable::read_tsv(p, &data.vocab)?,
        None => link(data, embeddings(s, data)?.as_ref(), &s.link())?,
    };
    info!(
        "{} links ({} dictionary, {} neighbor)",
        table.n_cvl(),
        table.count(Provenance::Dictionary),
        table.count(Provenance::Neighbor)
    );
    Ok(table)
}

pub fn prepare_cmd(s: &Settings) -> Result<()> {
    output_dir(s)?;
    let data = dataset(s, None)?;
    data.vocab.write_tsv(&s.output.join(VOCAB_FILE))?;
    Ok(())
}

pub fn link_cmd(s: &Settings) -> Result<()> {
    output_dir(s)?;
    let data = dataset(s, None)?;
    let table = links(s, &data)?;
    data.vocab.write_tsv(&s.output.join(VOCAB_FILE))?;
    table.write_tsv(&s.output.join(LINKS_FILE), &data.vocab)?;
    Ok(())
}

pub fn train_cmd(s: &Settings) -> Result<()> {
    output_dir(s)?;
    let data = dataset(s, None)?;
    let model = s.model();
    let table = if model.lambda > 0.0 {
        Some(links(s, &data)?)
    } else {
        None
    };
    let (state, trace) = train(
        &data.vocab,
        [&data.train[0], &data.train[1]],
        table.as_ref(),
        &model,
        &s.train(),
    )?;
    if let Some(last) = trace.last() {
        info!(
            "epoch {}: loss {:.4} (alignment {:.4}, documents {:.4}), cosine distance {:.4}",
            last.epoch, last.total, last.tami, last.tm, last.cosine_distance
        );
    }
    data.vocab.write_tsv(&s.output.join(VOCAB_FILE))?;
    if let Some(t) = &table {
        t.write_tsv(&s.output.join(LINKS_FILE), &data.vocab)?;
    }
    save_checkpoint(&state, &trace, &s.output.join(CHECKPOINT_FILE))?;
    trace.write_csv(&s.output.join(TRACE_FILE))?;
    Ok(())
}

fn load_state(s: &Settings) -> Result<ModelState> {
    let path = s.checkpoint_path();
    if !path.exists() {
        bail!("checkpoint not found: {}", path.display());
    }
    Ok(load_checkpoint(&path)?.0)
}

pub fn eval_cmd(s: &Settings) -> Result<()> {
    let state = load_state(s)?;
    output_dir(s)?;
    let data = dataset(s, Some(state.vocab.clone()))?;
    let ev = evaluate(&state, &data, s.top_words, s.diagnostic_pairs, s.seed)?;
    if data.reference.is_none() {
        info!("no reference corpora configured, skipping cross-lingual coherence");
    }
    fs::write(s.output.join(METRICS_FILE), metrics_csv(&ev.rows(s.seed)))
        .context("cannot write metrics")?;
    fs::write(
        s.output.join(TOPICS_FILE),
        render_topics(&ev.topics, &state.vocab),
    )
    .context("cannot write topics")?;
    info!("topic uniqueness {:.4} / {:.4}", ev.tu[0], ev.tu[1]);
    Ok(())
}

pub fn export_topics_cmd(s: &Settings) -> Result<()> {
    let state = load_state(s)?;
    output_dir(s)?;
    let topics = [
        top_words(
            state.beta(Language::L1),
            &state.vocab,
            Language::L1,
            s.top_words,
        )?,
        top_words(
            state.beta(Language::L2),
            &state.vocab,
            Language::L2,
            s.top_words,
        )?,
    ];
    fs::write(
        s.output.join(TOPICS_FILE),
        render_topics(&topics, &state.vocab),
    )
    .context("cannot write topics")?;
    Ok(())
}

pub fn ablate_cmd(s: &Settings) -> Result<()> {
    output_dir(s)?;
    let data = dataset(s, None)?;
    // every cell with neighbor linking shares the same embeddings
    let emb = if s.neighbors == 0 {
        None
    } else {
        embeddings(
            &Settings {
                no_cvl: false,
                ..s.clone()
            },
            &data,
        )?
    };
    let rows = ablation_grid(&data, emb.as_ref(), &s.run(), &s.ablation_seeds())?;
    fs::write(s.output.join(ABLATION_FILE), ablation_csv(&rows))
        .context("cannot write ablation table")?;
    Ok(())
}

/// Writes the planted-topic benchmark and a config that trains on it.
pub fn synth_cmd(s: &Settings, docs: usize, vocab: usize) -> Result<()> {
    output_dir(s)?;
    let cfg = SyntheticConfig {
        topics: s.topics,
        docs_per_lang: docs,
        vocab_per_lang: vocab,
        background_words: (vocab / 5).min(vocab.saturating_sub(s.topics)),
        seed: s.seed,
        ..Default::default()
    };
    let b = generate(&cfg)?;
    let out = &s.output;
    write_corpus(&out.join("l1.txt"), &b.docs[0])?;
    write_corpus(&out.join("l2.txt"), &b.docs[1])?;
    let labels: String = b.labels.iter().map(|l| format!("{l}\n")).collect();
    fs::write(out.join("l1_labels.txt"), &labels).context("cannot write labels")?;
    fs::write(out.join("l2_labels.txt"), &labels).context("cannot write labels")?;
    let dict: String = b
        .dictionary
        .iter()
        .map(|(a, c)| format!("{a}\t{c}\n"))
        .collect();
    fs::write(out.join("dictionary.tsv"), dict).context("cannot write dictionary")?;

    let run = Settings {
        l1_corpus: Some("l1.txt".into()),
        l2_corpus: Some("l2.txt".into()),
        l1_labels: Some("l1_labels.txt".into()),
        l2_labels: Some("l2_labels.txt".into()),
        dictionary: Some("dictionary.tsv".into()),
        l1_reference: Some("l1.txt".into()),
        l2_reference: Some("l2.txt".into()),
        output: "run".into(),
        ..s.clone()
    };
    let text = toml::to_string(&run).context("cannot serialize config")?;
    fs::write(out.join("config.toml"), text).context("cannot write config")?;
    info!("wrote {} document pairs to {}", docs, out.display());
    Ok(())
}
