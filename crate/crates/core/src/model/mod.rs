//! The generative topic model and its losses.
//!
//! Word topic representations live in one `(V1+V2) × K` matrix `Φ`. Each
//! language's topic-word matrix `β` is a row slice of `Φ`, documents are
//! encoded to a logistic-normal posterior by a per-language feed-forward
//! encoder, and alignment between linked cross-lingual words is imposed on
//! the rows of `Φ` directly.

mod align;
mod objective;
mod ops;

pub use align::{direct_alignment_loss, tami_loss, tami_pair_terms};
pub use objective::{encode, loss_and_grad, tm_loss, total_loss, BatchNoise, LossBreakdown};
pub use ops::{
    critic, doc_topic, kl_term, reconstruction_dist, reparameterize, softmax, topic_word_matrix,
};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Language, Vocabulary};
use crate::{Error, Result};

/// Which alignment regularizer the model trains with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    /// Contrastive mutual-information bound over linked words.
    Tami,
    /// Mean squared distance between linked rows, no negatives. Ablation.
    Direct,
}

impl Alignment {
    pub fn name(self) -> &'static str {
        match self {
            Alignment::Tami => "tami",
            Alignment::Direct => "direct",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tami" => Some(Alignment::Tami),
            "direct" => Some(Alignment::Direct),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub topics: usize,
    pub tau: f64,
    pub lambda: f64,
    pub hidden_dim: usize,
    pub dropout: f64,
    /// Concentration of the symmetric Dirichlet approximated by the prior.
    pub prior_alpha: f64,
    pub alignment: Alignment,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            topics: 50,
            tau: 0.1,
            lambda: 50.0,
            hidden_dim: 200,
            dropout: 0.2,
            prior_alpha: 1.0,
            alignment: Alignment::Tami,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.topics < 2 {
            return fail("topics must be >= 2");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return fail("tau must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail("lambda must be non-negative");
        }
        if self.hidden_dim == 0 {
            return fail("hidden_dim must be >= 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must be in [0, 1)");
        }
        if !(self.prior_alpha > 0.0 && self.prior_alpha.is_finite()) {
            return fail("prior_alpha must be positive");
        }
        Ok(())
    }
}

/// Two-layer softplus encoder with mean and log-variance heads.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w_mu: Array2<f64>,
    pub b_mu: Array1<f64>,
    pub w_logvar: Array2<f64>,
    pub b_logvar: Array1<f64>,
}

impl EncoderParams {
    pub fn new(vocab_size: usize, hidden: usize, topics: usize, rng: &mut impl Rng) -> Self {
        EncoderParams {
            w1: xavier(vocab_size, hidden, rng),
            b1: Array1::zeros(hidden),
            w2: xavier(hidden, hidden, rng),
            b2: Array1::zeros(hidden),
            w_mu: xavier(hidden, topics, rng),
            b_mu: Array1::zeros(topics),
            w_logvar: xavier(hidden, topics, rng),
            b_logvar: Array1::zeros(topics),
        }
    }

    pub fn zeros_like(&self) -> Self {
        EncoderParams {
            w1: Array2::zeros(self.w1.dim()),
            b1: Array1::zeros(self.b1.len()),
            w2: Array2::zeros(self.w2.dim()),
            b2: Array1::zeros(self.b2.len()),
            w_mu: Array2::zeros(self.w_mu.dim()),
            b_mu: Array1::zeros(self.b_mu.len()),
            w_logvar: Array2::zeros(self.w_logvar.dim()),
            b_logvar: Array1::zeros(self.b_logvar.len()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn topics(&self) -> usize {
        self.b_mu.len()
    }
}

fn xavier(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..bound))
}

/// Diagonal Gaussian prior on the pre-softmax latent.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorParams {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

impl PriorParams {
    /// Laplace approximation of a symmetric Dirichlet(`alpha`) in the softmax
    /// basis: mean 0, variance `(1/α)(1 − 2/K) + (1/K²)(K/α)`.
    pub fn dirichlet_laplace(topics: usize, alpha: f64) -> Self {
        let k = topics as f64;
        let var = (1.0 / alpha) * (1.0 - 2.0 / k) + (1.0 / (k * k)) * (k / alpha);
        PriorParams {
            mean: Array1::zeros(topics),
            var: Array1::from_elem(topics, var),
        }
    }
}

/// All trainable parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Word topic representations, one row per global word index.
    pub phi: Array2<f64>,
    /// Indexed by [`Language::slot`].
    pub encoders: [EncoderParams; 2],
}

impl Params {
    pub fn zeros_like(&self) -> Self {
        Params {
            phi: Array2::zeros(self.phi.dim()),
            encoders: [self.encoders[0].zeros_like(), self.encoders[1].zeros_like()],
        }
    }

    /// Stable tensor names, in the order of [`Params::tensors`].
    pub fn tensor_names() -> Vec<String> {
        let mut names = vec!["phi".to_string()];
        for lang in Language::BOTH {
            for t in [
                "w1", "b1", "w2", "b2", "w_mu", "b_mu", "w_logvar", "b_logvar",
            ] {
                names.push(format!("{lang}.{t}"));
            }
        }
        names
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.phi.as_slice().expect("standard layout")];
        for e in &self.encoders {
            out.extend([
                e.w1.as_slice().unwrap(),
                e.b1.as_slice().unwrap(),
                e.w2.as_slice().unwrap(),
                e.b2.as_slice().unwrap(),
                e.w_mu.as_slice().unwrap(),
                e.b_mu.as_slice().unwrap(),
                e.w_logvar.as_slice().unwrap(),
                e.b_logvar.as_slice().unwrap(),
            ]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.phi.as_slice_mut().expect("standard layout")];
        for e in &mut self.encoders {
            out.extend([
                e.w1.as_slice_mut().unwrap(),
                e.b1.as_slice_mut().unwrap(),
                e.w2.as_slice_mut().unwrap(),
                e.b2.as_slice_mut().unwrap(),
                e.w_mu.as_slice_mut().unwrap(),
                e.b_mu.as_slice_mut().unwrap(),
                e.w_logvar.as_slice_mut().unwrap(),
                e.b_logvar.as_slice_mut().unwrap(),
            ]);
        }
        out
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// The trainable artifact: parameters, priors, configuration and vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub params: Params,
    pub priors: [PriorParams; 2],
    pub config: ModelConfig,
    pub vocab: Vocabulary,
}

impl ModelState {
    pub fn new(vocab: Vocabulary, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let k = config.topics;
        let n = vocab.total();
        let bound = (6.0 / (n + k) as f64).sqrt();
        let phi = Array2::from_shape_fn((n, k), |_| rng.random_range(-bound..bound));
        let encoders = [
            EncoderParams::new(vocab.size(Language::L1), config.hidden_dim, k, &mut rng),
            EncoderParams::new(vocab.size(Language::L2), config.hidden_dim, k, &mut rng),
        ];
        let prior = PriorParams::dirichlet_laplace(k, config.prior_alpha);
        Ok(ModelState {
            params: Params { phi, encoders },
            priors: [prior.clone(), prior],
            config,
            vocab,
        })
    }

    /// Checks dimensional consistency between members.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let k = self.config.topics;
        let dim = |expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::Dimension { expected, actual })
            }
        };
        dim(self.vocab.total(), self.params.phi.nrows())?;
        dim(k, self.params.phi.ncols())?;
        for lang in Language::BOTH {
            let e = &self.params.encoders[lang.slot()];
            let h = self.config.hidden_dim;
            dim(self.vocab.size(lang), e.w1.nrows())?;
            for (exp, act) in [
                (h, e.w1.ncols()),
                (h, e.b1.len()),
                (h, e.w2.nrows()),
                (h, e.w2.ncols()),
                (h, e.b2.len()),
                (h, e.w_mu.nrows()),
                (k, e.w_mu.ncols()),
                (k, e.b_mu.len()),
                (h, e.w_logvar.nrows()),
                (k, e.w_logvar.ncols()),
                (k, e.b_logvar.len()),
            ] {
                dim(exp, act)?;
            }
            let p = &self.priors[lang.slot()];
            dim(k, p.mean.len())?;
            dim(k, p.var.len())?;
            if p.var.iter().any(|&v| v.is_nan() || v <= 0.0) {
                return Err(Error::Config("prior variance must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn beta(&self, lang: Language) -> ndarray::ArrayView2<'_, f64> {
        topic_word_matrix(&self.params.phi, &self.vocab, lang)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_variance_default_alpha() {
        for k in [2usize, 5, 50] {
            let p = PriorParams::dirichlet_laplace(k, 1.0);
            let want = (k as f64 - 1.0) / k as f64;
            assert!(p.var.iter().all(|&v| (v - want).abs() < 1e-15));
            assert!(p.mean.iter().all(|&m| m == 0.0));
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let vocab = Vocabulary::from_words(
            (0..7).map(|i| format!("a{i}")).collect(),
            (0..5).map(|i| format!("b{i}")).collect(),
        )
        .unwrap();
        let cfg = ModelConfig {
            topics: 3,
            hidden_dim: 4,
            ..Default::default()
        };
        let a = ModelState::new(vocab.clone(), cfg.clone()).unwrap();
        let b = ModelState::new(vocab, cfg).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let bound = (6.0f64 / 15.0).sqrt();
        assert!(a.params.phi.iter().all(|v| v.abs() <= bound));
        assert_eq!(
            a.params.num_values(),
            12 * 3 + 2 * (4 + 16 + 4 + 12 + 3 + 12 + 3) + 4 * 7 + 4 * 5
        );
        assert_eq!(a.params.tensors().len(), Params::tensor_names().len());
    }

    #[test]
    fn config_validation() {
        let ok = ModelConfig::default();
        ok.validate().unwrap();
        assert!(ModelConfig {
            topics: 1,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ModelConfig {
            tau: 0.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ModelConfig {
            lambda: -1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ModelConfig { dropout: 1.0, ..ok }.validate().is_err());
    }
}
