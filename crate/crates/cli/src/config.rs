//! Flat TOML run configuration.
//!
//! Precedence, lowest to highest: built-in defaults, the `--config` file,
//! command-line flags. Relative paths in a config file are resolved against
//! the file's directory; relative paths given as flags against the working
//! directory. The resolved configuration is echoed next to every command's
//! outputs with absolute paths, so `--config <output>/config.echo.toml`
//! replays the run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use xling_topics::embedding::SkipGramConfig;
use xling_topics::experiment::{LinkConfig, PrepareConfig, RunConfig};
use xling_topics::model::{Alignment, ModelConfig};
use xling_topics::trainer::TrainConfig;

use crate::UsageError;

pub const ECHO_FILE: &str = "config.echo.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    // inputs: one document per line, one label per line, `l1<TAB>l2`
    // dictionary, word2vec-style text embeddings
    pub l1_corpus: Option<PathBuf>,
    pub l2_corpus: Option<PathBuf>,
    pub l1_labels: Option<PathBuf>,
    pub l2_labels: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub l1_embeddings: Option<PathBuf>,
    pub l2_embeddings: Option<PathBuf>,
    /// Line-aligned reference corpora for cross-lingual coherence.
    pub l1_reference: Option<PathBuf>,
    pub l2_reference: Option<PathBuf>,
    /// Reuse artifacts of an earlier stage instead of rebuilding them.
    pub vocab: Option<PathBuf>,
    pub links: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub output: PathBuf,

    pub seed: u64,
    /// Seeds of the `ablate` grid; empty means `[seed]`.
    pub seeds: Vec<u64>,

    pub min_doc_freq: usize,
    pub max_vocab: usize,
    pub test_fraction: f64,

    pub embedding_dim: usize,
    pub embedding_window: usize,
    pub embedding_negatives: usize,
    pub embedding_epochs: usize,
    pub embedding_learning_rate: f64,

    pub neighbors: usize,
    pub dict_coverage: f64,
    pub no_cvl: bool,

    pub topics: usize,
    pub tau: f64,
    pub lambda_tami: f64,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub prior_alpha: f64,
    /// `tami` or `direct`.
    pub alignment: String,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub diagnostic_pairs: usize,
    pub diagnostic_interval: usize,

    pub top_words: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let prep = PrepareConfig::default();
        let sg = SkipGramConfig::default();
        let link = LinkConfig::default();
        let model = ModelConfig::default();
        let train = TrainConfig::default();
        Settings {
            l1_corpus: None,
            l2_corpus: None,
            l1_labels: None,
            l2_labels: None,
            dictionary: None,
            l1_embeddings: None,
            l2_embeddings: None,
            l1_reference: None,
            l2_reference: None,
            vocab: None,
            links: None,
            checkpoint: None,
            output: PathBuf::from("out"),
            seed: 1,
            seeds: Vec::new(),
            min_doc_freq: prep.min_doc_freq,
            max_vocab: prep.max_vocab,
            test_fraction: prep.test_fraction,
            embedding_dim: sg.dim,
            embedding_window: sg.window,
            embedding_negatives: sg.negatives,
            embedding_epochs: sg.epochs,
            embedding_learning_rate: sg.learning_rate,
            neighbors: link.n_neighbors,
            dict_coverage: link.dict_coverage,
            no_cvl: false,
            topics: model.topics,
            tau: model.tau,
            lambda_tami: model.lambda,
            hidden_dim: model.hidden_dim,
            dropout: model.dropout,
            prior_alpha: model.prior_alpha,
            alignment: model.alignment.name().to_string(),
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            diagnostic_pairs: train.diagnostic_pairs,
            diagnostic_interval: train.diagnostic_interval,
            top_words: xling_topics::eval::DEFAULT_TOP_WORDS,
        }
    }
}

impl Settings {
    /// Parses a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut s: Settings = toml::from_str(&text).map_err(|e| {
            UsageError(format!(
                "invalid config {}: {}",
                path.display(),
                e.message()
            ))
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        s.for_each_path(|p| *p = base.join(&*p));
        Ok(s)
    }

    fn for_each_path(&mut self, mut f: impl FnMut(&mut PathBuf)) {
        for p in [
            &mut self.l1_corpus,
            &mut self.l2_corpus,
            &mut self.l1_labels,
            &mut self.l2_labels,
            &mut self.dictionary,
            &mut self.l1_embeddings,
            &mut self.l2_embeddings,
            &mut self.l1_reference,
            &mut self.l2_reference,
            &mut self.vocab,
            &mut self.links,
            &mut self.checkpoint,
        ]
        .into_iter()
        .flatten()
        {
            f(p);
        }
        f(&mut self.output);
    }

    /// Range checks that do not need any input files.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(UsageError(m).into());
        if !(self.dict_coverage > 0.0 && self.dict_coverage <= 1.0) {
            return bad(format!(
                "dict_coverage must be in (0, 1], got {}",
                self.dict_coverage
            ));
        }
        if Alignment::from_name(&self.alignment).is_none() {
            return bad(format!(
                "alignment must be `tami` or `direct`, got {:?}",
                self.alignment
            ));
        }
        if self.l1_embeddings.is_some() != self.l2_embeddings.is_some() {
            return bad("give both l1_embeddings and l2_embeddings, or neither".into());
        }
        if self.l1_reference.is_some() != self.l2_reference.is_some() {
            return bad("give both l1_reference and l2_reference, or neither".into());
        }
        self.model()
            .validate()
            .map_err(|e| UsageError(e.to_string()))?;
        self.train()
            .validate()
            .map_err(|e| UsageError(e.to_string()))?;
        Ok(())
    }

    /// Fails with the first referenced input that does not exist.
    pub fn check_inputs(&self) -> Result<()> {
        for p in [
            &self.l1_corpus,
            &self.l2_corpus,
            &self.l1_labels,
            &self.l2_labels,
            &self.dictionary,
            &self.l1_embeddings,
            &self.l2_embeddings,
            &self.l1_reference,
            &self.l2_reference,
            &self.vocab,
            &self.links,
            &self.checkpoint,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                anyhow::bail!("input file not found: {}", p.display());
            }
        }
        Ok(())
    }

    /// Writes the resolved configuration, with absolute paths, into the
    /// output directory.
    pub fn echo(&self) -> Result<PathBuf> {
        let mut abs = self.clone();
        let mut err = None;
        abs.for_each_path(|p| match std::path::absolute(&*p) {
            Ok(a) => *p = a,
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e).context("cannot resolve paths for the config echo");
        }
        let path = self.output.join(ECHO_FILE);
        let text = toml::to_string(&abs).context("cannot serialize config")?;
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    pub fn prepare(&self) -> PrepareConfig {
        PrepareConfig {
            min_doc_freq: self.min_doc_freq,
            max_vocab: self.max_vocab,
            test_fraction: self.test_fraction,
        }
    }

    pub fn skipgram(&self) -> SkipGramConfig {
        SkipGramConfig {
            dim: self.embedding_dim,
            window: self.embedding_window,
            negatives: self.embedding_negatives,
            epochs: self.embedding_epochs,
            learning_rate: self.embedding_learning_rate,
            seed: self.seed,
        }
    }

    pub fn link(&self) -> LinkConfig {
        LinkConfig {
            n_neighbors: self.neighbors,
            dict_coverage: self.dict_coverage,
            use_cvl: !self.no_cvl,
            seed: self.seed,
        }
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            topics: self.topics,
            tau: self.tau,
            lambda: self.lambda_tami,
            hidden_dim: self.hidden_dim,
            dropout: self.dropout,
            prior_alpha: self.prior_alpha,
            // validated before use; the fallback only serves `validate` itself
            alignment: Alignment::from_name(&self.alignment).unwrap_or(Alignment::Tami),
            seed: self.seed,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            diagnostic_pairs: self.diagnostic_pairs,
            diagnostic_interval: self.diagnostic_interval,
            ..TrainConfig::default()
        }
    }

    pub fn run(&self) -> RunConfig {
        RunConfig {
            model: self.model(),
            train: self.train(),
            link: self.link(),
            top_words: self.top_words,
        }
    }

    pub fn ablation_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.output.join(crate::commands::CHECKPOINT_FILE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let s = Settings::default();
        let text = toml::to_string(&s).unwrap();
        assert_eq!(toml::from_str::<Settings>(&text).unwrap(), s);
    }

    #[test]
    fn file_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "l1_corpus = \"data/a.txt\"\ntopics = 7\n").unwrap();
        let s = Settings::load(&path).unwrap();
        assert_eq!(s.l1_corpus.unwrap(), dir.path().join("data/a.txt"));
        assert_eq!(s.output, dir.path().join("out"));
        assert_eq!(s.topics, 7);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "topicz = 7\n").unwrap();
        let err = Settings::load(&path).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        assert!(err.to_string().contains("topicz"));
    }

    #[test]
    fn validation_rejects_bad_coverage_and_alignment() {
        for s in [
            Settings {
                dict_coverage: 0.0,
                ..Default::default()
            },
            Settings {
                dict_coverage: 1.5,
                ..Default::default()
            },
            Settings {
                alignment: "mse".into(),
                ..Default::default()
            },
            Settings {
                l1_embeddings: Some("a".into()),
                ..Default::default()
            },
        ] {
            assert!(s
                .validate()
                .unwrap_err()
                .downcast_ref::<UsageError>()
                .is_some());
        }
        Settings::default().validate().unwrap();
    }

    #[test]
    fn no_cvl_disables_neighbors() {
        let s = Settings {
            no_cvl: true,
            ..Default::default()
        };
        assert_eq!(s.link().effective_neighbors(), 0);
    }
}
