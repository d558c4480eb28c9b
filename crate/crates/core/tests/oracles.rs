mod common;

use approx::assert_abs_diff_eq;
use ndarray::Array1;

use common::checks;
use common::*;
use xling_topics::corpus::Language;
use xling_topics::eval::{cnpmi, top_words, ReferencePairs, TopicSet};
use xling_topics::model::{encode, tm_loss, ModelConfig, ModelState};

#[test]
fn tami_matches_enumeration() {
    checks::tami_cases(150);
}

#[test]
fn direct_matches_enumeration() {
    checks::direct_cases(150);
}

#[test]
fn tm_and_kl_match_scalar_loops() {
    checks::tm_kl_cases(120);
}

#[test]
fn cnpmi_matches_exhaustive_counting() {
    checks::cnpmi_cases(150);
}

#[test]
fn cnpmi_ten_pair_hand_corpus() {
    // global ids 0..3 are l1 words, 3..6 are l2 words
    let d = |lang: Language, ws: &[usize]| xling_topics::corpus::BowDocument {
        language: lang,
        entries: ws.iter().map(|&w| (w, 1)).collect(),
        label: None,
    };
    let sides: [(&[usize], &[usize]); 10] = [
        (&[0, 1], &[3]),
        (&[0], &[3, 4]),
        (&[0, 2], &[4]),
        (&[1], &[3]),
        (&[1, 2], &[5]),
        (&[0], &[5]),
        (&[2], &[4, 5]),
        (&[0, 1], &[3, 4]),
        (&[2], &[3]),
        (&[1], &[4]),
    ];
    let reference = ReferencePairs::new(
        sides
            .iter()
            .map(|(a, b)| (d(Language::L1, a), d(Language::L2, b)))
            .collect(),
    )
    .unwrap();
    let ts1 = TopicSet {
        language: Language::L1,
        topics: vec![vec![(0, 0.0), (1, 0.0)]],
    };
    let ts2 = TopicSet {
        language: Language::L2,
        topics: vec![vec![(3, 0.0), (4, 0.0)]],
    };
    // Counts: s0 in 5 pairs, s1 in 5, t0 in 5, t1 in 5.
    // joint(s0,t0)=3, joint(s0,t1)=3, joint(s1,t0)=3, joint(s1,t1)=2.
    let npmi = |j: f64, a: f64, b: f64| {
        let (pj, pa, pb) = (j / 10.0, a / 10.0, b / 10.0);
        (pj / (pa * pb)).ln() / -pj.ln()
    };
    let want = (npmi(3.0, 5.0, 5.0) * 3.0 + npmi(2.0, 5.0, 5.0)) / 4.0;
    let got = cnpmi(&ts1, &ts2, &reference).unwrap();
    assert_abs_diff_eq!(got, want, epsilon = 1e-10);
    assert_abs_diff_eq!(got, oracle_cnpmi(&ts1, &ts2, &reference), epsilon = 1e-10);
}

#[test]
fn cnpmi_depends_only_on_membership() {
    let mut rng = rng(15);
    let vocab = vocab(12, 12);
    let reference = random_reference(&mut rng, &vocab, 40);
    let phi = random_phi(&mut rng, 24, 3).mapv(f64::exp);
    let b1 = phi.slice(ndarray::s![0..12, ..]).to_owned();
    let b2 = phi.slice(ndarray::s![12..24, ..]).to_owned();
    let t1 = top_words(b1.view(), &vocab, Language::L1, 4).unwrap();
    let t2 = top_words(b2.view(), &vocab, Language::L2, 4).unwrap();
    let base = cnpmi(&t1, &t2, &reference).unwrap();
    let scaled1 = top_words((&b1 * 7.5).view(), &vocab, Language::L1, 4).unwrap();
    assert_eq!(cnpmi(&scaled1, &t2, &reference).unwrap(), base);
    let mut reversed = t1.clone();
    for t in &mut reversed.topics {
        t.reverse();
    }
    assert_abs_diff_eq!(
        cnpmi(&reversed, &t2, &reference).unwrap(),
        base,
        epsilon = 1e-12
    );
}

#[test]
fn simplex_outputs_and_kl_floor() {
    checks::simplex_cases(1000);
}

#[test]
fn encoder_matches_scalar_path_at_zero_noise() {
    // tm_loss with ε = 0 must equal the oracle computed from μ only
    let state = ModelState::new(
        vocab(6, 4),
        ModelConfig {
            topics: 3,
            hidden_dim: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let mut rng = rng(17);
    let doc = random_doc(&mut rng, &state.vocab, Language::L1);
    let zero = Array1::zeros(3);
    let got = tm_loss(&doc, &state, Language::L1, zero.view()).unwrap();
    assert_abs_diff_eq!(
        got,
        oracle_tm(&doc, &state, Language::L1, &[0.0; 3]),
        epsilon = 1e-9
    );
    let x = Array1::from(doc.dense(&state.vocab));
    let (mu, _) = encode(x.view(), &state.params.encoders[0]).unwrap();
    assert_eq!(mu.len(), 3);
}
